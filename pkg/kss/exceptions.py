"""Custom exceptions for the kostlan-zeros library."""


class KSSError(Exception):
    """Base exception for all library errors."""

    pass


class DomainError(KSSError):
    """An argument lies outside the mathematical domain of an operation."""

    def __init__(self, quantity: str, message: str):
        self.quantity = quantity
        super().__init__(f"Domain error for {quantity}: {message}")


class SingularOverlapError(DomainError):
    """Overlap r too close to +-1 for the two-point covariance to be invertible."""

    def __init__(self, r: float, limit: float):
        self.r = r
        self.limit = limit
        super().__init__("r", f"|r|={abs(r):.16g} exceeds the overlap limit {limit}")


class EndpointSingularityError(DomainError):
    """A K=N integration interval touches +-1 without the cosine substitution."""

    def __init__(self, interval: tuple[float, float]):
        self.interval = interval
        super().__init__(
            "interval",
            f"[{interval[0]}, {interval[1]}] touches the singular endpoint; "
            "select the theta rule",
        )


class ModelError(KSSError):
    """A covariance model is numerically invalid."""

    def __init__(self, model: str, message: str):
        self.model = model
        super().__init__(f"Invalid {model}: {message}")


class SamplingError(KSSError):
    """A sampling request was refused."""

    pass


class SeriesCapError(KSSError):
    """Polynomial degree exceeds what the exact series machinery supports."""

    def __init__(self, degree: int, cap: int, what: str = "degree"):
        self.degree = degree
        self.cap = cap
        super().__init__(f"{what} {degree} exceeds the supported cap {cap}")


class RootFindingError(KSSError):
    """Base error for zero counting."""

    pass


class GridSaturationError(RootFindingError):
    """Sign changes on the angle grid are too close to be separated."""

    def __init__(self, grid_size: int):
        self.grid_size = grid_size
        super().__init__(f"Grid of {grid_size} points cannot separate all sign changes")


class NonConvergenceError(RootFindingError):
    """Too many Newton starts failed to converge."""

    def __init__(self, ratio: float):
        self.ratio = ratio
        super().__init__(f"Newton failed from {ratio:.1%} of starts")


class ConfigurationError(KSSError):
    """Error in an experiment configuration."""

    def __init__(self, field: str, message: str, line: int | None = None):
        self.field = field
        self.line = line
        location = f" (line {line})" if line is not None else ""
        super().__init__(f"Configuration error for {field}{location}: {message}")


class ReportStoreError(KSSError):
    """Error with report persistence."""

    pass


class ReportReadError(ReportStoreError):
    """Error reading a stored report."""

    def __init__(self, name: str, message: str):
        self.name = name
        super().__init__(f"Failed to read report {name}: {message}")


class ReportWriteError(ReportStoreError):
    """Error writing a report."""

    def __init__(self, name: str, message: str):
        self.name = name
        super().__init__(f"Failed to write report {name}: {message}")
