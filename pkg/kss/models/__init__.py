"""Domain models for random polynomial systems and their reports."""

from kss.models.spectrum import (
    MixedSpectrum,
    SystemSpec,
)
from kss.models.system import (
    PolynomialMap,
    PolynomialSystem,
    RestrictedSystem,
    TangentFrame,
)
from kss.models.conditional import (
    ConditionalGradientTable,
    ConditionalPairModel,
    JointValueGradientCovariance,
)
from kss.models.reports import (
    CountStatus,
    EmpiricalMoments,
    KacRiceNode,
    KacRiceReport,
    MomentReport,
    MonteCarloEstimate,
    ZeroCountResult,
    combined_se,
)
from kss.models.series import (
    BlockPairCovariance,
    PolyObservable,
)
from kss.models.run import (
    REPORT_FORMAT_VERSION,
    RunRecord,
    RunStatus,
)

__all__ = [
    # Spectra
    "MixedSpectrum",
    "SystemSpec",
    # Systems
    "PolynomialMap",
    "PolynomialSystem",
    "RestrictedSystem",
    "TangentFrame",
    # Conditional structure
    "ConditionalGradientTable",
    "ConditionalPairModel",
    "JointValueGradientCovariance",
    # Reports
    "CountStatus",
    "EmpiricalMoments",
    "KacRiceNode",
    "KacRiceReport",
    "MomentReport",
    "MonteCarloEstimate",
    "ZeroCountResult",
    "combined_se",
    # Series
    "BlockPairCovariance",
    "PolyObservable",
    # Runs
    "REPORT_FORMAT_VERSION",
    "RunRecord",
    "RunStatus",
]
