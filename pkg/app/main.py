"""
kss - command-line entry point

Runs one experiment on Kostlan-type random polynomial systems and writes a
JSON report plus CSV tables under <out>/<subcommand>/.

Exit codes:
    0  success
    1  malformed config or unusable output directory
    2  numerical domain, model, root-finding or linear-algebra error
    3  finished, but some counts were saturated or degenerate
"""

from dataclasses import replace
from pathlib import Path
from typing import Optional, Sequence
import argparse
import json
import logging
import sys

import numpy as np

from app.config import SUBCOMMANDS, ExperimentConfig, Settings, parse_seed
from app.services.experiment_service import ExperimentService
from kss.exceptions import (
    ConfigurationError,
    DomainError,
    ModelError,
    ReportStoreError,
    RootFindingError,
    SamplingError,
    SeriesCapError,
)
from kss.models.spectrum import SystemSpec
from kss.storage import ReportStore

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_NUMERICAL = 2
EXIT_FLAGGED = 3

NUMERICAL_ERRORS = (
    DomainError,
    ModelError,
    SamplingError,
    SeriesCapError,
    RootFindingError,
    np.linalg.LinAlgError,
)

# CLI flag -> RunParameters field
PARAM_FLAGS = {
    "trials": "trials",
    "starts": "starts",
    "residual_tol": "residual_tol",
    "slices": "slices",
    "nodes": "nodes",
    "samples": "samples_per_node",
    "quadrature": "quadrature",
    "probes": "probes",
    "p": "p",
    "grid": "grid",
}

logger = logging.getLogger("kss")


def build_parser() -> argparse.ArgumentParser:
    """Argument parser with one sub-parser per subcommand."""
    common = argparse.ArgumentParser(add_help=False, allow_abbrev=False)
    common.add_argument("--config", type=Path, help="Experiment config JSON")
    common.add_argument("--seed", help="Root seed (unsigned 64-bit); overrides KSS_SEED")
    common.add_argument("--out", type=Path, help="Output directory (default KSS_OUTPUT_DIR)")
    common.add_argument("--threads", type=int, help="Worker threads (default KSS_THREADS)")
    common.add_argument("--N", dest="sphere_dim", type=int, help="Sphere dimension for --degrees")
    common.add_argument(
        "--degrees", type=int, nargs="+", help="Homogeneous system xi_k = t^{d_k} instead of a config"
    )
    common.add_argument("--trials", type=int)
    common.add_argument("--starts", type=int, help="Newton starts per system")
    common.add_argument("--residual-tol", dest="residual_tol", type=float)
    common.add_argument("--slices", type=int, help="Slices per system for crofton")
    common.add_argument("--nodes", type=int, help="Quadrature nodes")
    common.add_argument("--samples", type=int, help="Monte Carlo samples per node")
    common.add_argument("--quadrature", choices=["theta", "legendre"])
    common.add_argument("--probes", type=float, nargs="+", help="Overlaps for direct D(r) in kr2")
    common.add_argument("--p", type=int, help="Blow-up degree")
    common.add_argument("--grid", type=int, help="Blow-up grid points")

    parser = argparse.ArgumentParser(
        prog="kss",
        description="Zero sets of random polynomial systems on spheres",
    )
    subparsers = parser.add_subparsers(dest="subcommand", required=True)
    for name in SUBCOMMANDS:
        subparsers.add_parser(name, parents=[common], allow_abbrev=False)
    return parser


def load_config(args: argparse.Namespace) -> ExperimentConfig:
    """Config file (if any) with command-line overrides applied."""
    config = ExperimentConfig.load(args.config) if args.config else ExperimentConfig()

    if args.degrees:
        N = args.sphere_dim if args.sphere_dim is not None else len(args.degrees)
        try:
            config.system = SystemSpec.homogeneous(N, args.degrees)
        except DomainError as e:
            raise ConfigurationError("--degrees", str(e)) from e
    elif args.sphere_dim is not None:
        raise ConfigurationError("--N", "needs --degrees")

    overrides = {
        field: getattr(args, flag) for flag, field in PARAM_FLAGS.items() if getattr(args, flag) is not None
    }
    if overrides:
        if "probes" in overrides:
            overrides["probes"] = tuple(overrides["probes"])
        config.params = replace(config.params, **overrides)
    return config


def run(argv: Optional[Sequence[str]] = None) -> int:
    """Parse arguments, run one subcommand and return the exit code."""
    args = build_parser().parse_args(argv)
    settings = Settings.from_env()
    settings.configure_logging()

    try:
        config = load_config(args)
        flag_seed = parse_seed(args.seed, "--seed") if args.seed is not None else None
        seed = config.resolve_seed(flag_seed, settings.seed)
        out_dir = args.out or (Path(config.out) if config.out else settings.output_dir)
        threads = args.threads if args.threads is not None else settings.threads
        if threads < 1:
            raise ConfigurationError("--threads", "must be >= 1")

        service = ExperimentService(
            ReportStore(out_dir), threads=threads, max_overlap=settings.max_overlap
        )
        outcome = service.run(args.subcommand, config, seed)
    except (ConfigurationError, ReportStoreError) as e:
        print(f"kss: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except NUMERICAL_ERRORS as e:
        logger.debug(f"{type(e).__name__} during {args.subcommand}", exc_info=True)
        print(f"kss: {e}", file=sys.stderr)
        return EXIT_NUMERICAL

    print(json.dumps({"report": str(outcome.path), "status": outcome.record.status.value}))
    return EXIT_FLAGGED if outcome.flagged else EXIT_OK


def main() -> None:
    """Console-script entry point."""
    sys.exit(run())


if __name__ == "__main__":
    main()
