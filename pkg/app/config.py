"""Settings from the environment and the experiment config file format."""

from dataclasses import dataclass, field, asdict, fields
from pathlib import Path
from typing import Any, Optional
import hashlib
import json
import logging
import os

from dotenv import load_dotenv

from kss.exceptions import ConfigurationError, DomainError
from kss.models.spectrum import SystemSpec

logger = logging.getLogger(__name__)

SUBCOMMANDS = ("expect", "var-bound", "kr2", "mc", "count", "crofton", "series-check", "blowup")

MAX_SEED = 2**64 - 1


def parse_seed(value: Any, field_name: str = "seed") -> int:
    try:
        seed = int(value)
    except (TypeError, ValueError) as e:
        raise ConfigurationError(field_name, f"not an integer: {value!r}") from e
    if not 0 <= seed <= MAX_SEED:
        raise ConfigurationError(field_name, f"must be an unsigned 64-bit integer, got {seed}")
    return seed


@dataclass
class Settings:
    """Process-wide settings read from the environment (and .env)."""

    seed: Optional[int]
    log_level: str
    output_dir: Path
    threads: int
    max_overlap: float

    @classmethod
    def from_env(cls) -> "Settings":
        """Load settings from environment variables; bad values fall back to defaults."""
        load_dotenv()

        settings = cls(
            seed=cls._env_seed(os.getenv("KSS_SEED")),
            log_level=(os.getenv("KSS_LOG_LEVEL") or "").strip() or "INFO",
            output_dir=Path((os.getenv("KSS_OUTPUT_DIR") or "").strip() or "./runs"),
            threads=cls._env_number("KSS_THREADS", int, 1, minimum=1),
            max_overlap=cls._env_number("KSS_MAX_OVERLAP", float, 0.999, minimum=0.0, maximum=1.0 - 1e-12),
        )
        return settings

    @staticmethod
    def _env_seed(raw: Optional[str]) -> Optional[int]:
        if raw is None or raw.strip() == "":
            return None
        try:
            return parse_seed(raw, "KSS_SEED")
        except ConfigurationError as e:
            logger.warning(f"Ignoring KSS_SEED: {e}")
            return None

    @staticmethod
    def _env_number(name: str, kind: type, default, minimum=None, maximum=None):
        raw = os.getenv(name)
        if raw is None or raw.strip() == "":
            return default
        try:
            value = kind(raw)
        except ValueError:
            logger.warning(f"Ignoring {name}={raw!r}: not a valid {kind.__name__}")
            return default
        if (minimum is not None and value < minimum) or (maximum is not None and value > maximum):
            logger.warning(f"Ignoring {name}={raw!r}: out of range")
            return default
        return value

    def configure_logging(self) -> None:
        """Configure application logging based on settings."""
        log_level = getattr(logging, self.log_level.upper(), logging.INFO)

        logging.basicConfig(
            level=log_level,
            format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
            datefmt="%Y-%m-%d %H:%M:%S",
        )

        # Reduce noise from third-party libraries
        logging.getLogger("numexpr").setLevel(logging.WARNING)
        logging.getLogger("matplotlib").setLevel(logging.WARNING)


@dataclass
class RunParameters:
    """Tunable parameters shared by the subcommands; each reads what it needs."""

    # mc / count / crofton
    trials: int = 100
    starts: Optional[int] = None
    residual_tol: float = 1e-10
    dedupe_radius: float = 1e-6
    slices: int = 1
    # var-bound / kr2
    nodes: int = 64
    samples_per_node: int = 10_000
    quadrature: str = "theta"
    rtol: float = 1e-4
    interval: tuple[float, float] = (-1.0, 1.0)
    probes: tuple[float, ...] = ()  # overlaps for direct D(r) estimates in kr2
    # series-check
    max_dim: int = 3
    max_degree: int = 3
    # blowup
    p: int = 10_000
    grid: int = 200

    def __post_init__(self):
        self.interval = (float(self.interval[0]), float(self.interval[1]))
        self.probes = tuple(float(r) for r in self.probes)
        for name in ("trials", "nodes", "samples_per_node", "slices", "max_dim", "max_degree", "grid"):
            if getattr(self, name) < 1:
                raise ConfigurationError(f"params.{name}", "must be >= 1")
        if self.starts is not None and self.starts < 1:
            raise ConfigurationError("params.starts", "must be >= 1")
        if self.residual_tol <= 0 or self.dedupe_radius <= 0 or self.rtol <= 0:
            raise ConfigurationError("params", "tolerances must be > 0")
        if self.quadrature not in ("theta", "legendre"):
            raise ConfigurationError("params.quadrature", f"unknown rule {self.quadrature!r}")
        a, b = self.interval
        if not -1.0 <= a < b <= 1.0:
            raise ConfigurationError("params.interval", f"need -1 <= a < b <= 1, got {self.interval}")

    def to_dict(self) -> dict[str, Any]:
        data = asdict(self)
        data["interval"] = list(self.interval)
        data["probes"] = list(self.probes)
        return data

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "RunParameters":
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigurationError(f"params.{unknown[0]}", "unknown parameter")
        try:
            return cls(**data)
        except (TypeError, ValueError, IndexError) as e:
            raise ConfigurationError("params", str(e)) from e


@dataclass
class ExperimentConfig:
    """
    One experiment: the system, the parameters, the root seed and the output
    directory. The config hash covers everything except the output directory.
    """

    system: Optional[SystemSpec] = None
    params: RunParameters = field(default_factory=RunParameters)
    seed: Optional[int] = None
    out: Optional[str] = None

    @property
    def config_hash(self) -> str:
        """SHA-256 of the canonical JSON of the config without its output path."""
        payload = self.to_dict()
        payload.pop("out", None)
        canonical = json.dumps(payload, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()

    def resolve_seed(self, flag: Optional[int], env: Optional[int]) -> int:
        """Seed precedence: command-line flag, then KSS_SEED, then the file, then 0."""
        for candidate in (flag, env, self.seed):
            if candidate is not None:
                return candidate
        return 0

    def to_dict(self) -> dict[str, Any]:
        """Convert to JSON-serializable dict."""
        return {
            "system": self.system.to_dict() if self.system is not None else None,
            "params": self.params.to_dict(),
            "seed": self.seed,
            "out": self.out,
        }

    def to_json(self) -> str:
        """Serialize to JSON string."""
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_dict(cls, data: dict[str, Any], source: Optional[str] = None) -> "ExperimentConfig":
        """
        Create from dict (e.g., from JSON).

        Args:
            data: Parsed config
            source: Original JSON text, used to report line numbers

        Raises:
            ConfigurationError: If a field is missing or invalid
        """
        if not isinstance(data, dict):
            raise ConfigurationError("config", "top level must be a JSON object", line=1)
        try:
            system = SystemSpec.from_dict(data["system"]) if data.get("system") is not None else None
            params = RunParameters.from_dict(data.get("params") or {})
            seed = parse_seed(data["seed"]) if data.get("seed") is not None else None
        except ConfigurationError as e:
            raise ConfigurationError(e.field, _strip_prefix(e), _line_of(source, e.field)) from e
        except DomainError as e:
            field_name = f"system.{e.quantity}"
            raise ConfigurationError(field_name, str(e), _line_of(source, field_name)) from e

        out = data.get("out")
        return cls(system=system, params=params, seed=seed, out=str(out) if out is not None else None)

    @classmethod
    def from_json(cls, json_str: str) -> "ExperimentConfig":
        """Deserialize from JSON string."""
        try:
            data = json.loads(json_str)
        except json.JSONDecodeError as e:
            raise ConfigurationError("config", f"invalid JSON: {e.msg}", line=e.lineno) from e
        return cls.from_dict(data, source=json_str)

    @classmethod
    def load(cls, path: Path) -> "ExperimentConfig":
        """Read a config file."""
        path = Path(path)
        try:
            text = path.read_text()
        except OSError as e:
            raise ConfigurationError("config", f"cannot read {path}: {e}") from e
        return cls.from_json(text)


def _strip_prefix(error: ConfigurationError) -> str:
    message = str(error)
    _, _, tail = message.partition(": ")
    return tail or message


def _line_of(source: Optional[str], field_name: str) -> Optional[int]:
    """1-based line of the first occurrence of the field's last key in the JSON text."""
    if not source:
        return None
    key = f'"{field_name.split(".")[-1]}"'
    for number, line in enumerate(source.splitlines(), start=1):
        if key in line:
            return number
    return None
