"""Data models for persisted experiment runs."""

from dataclasses import dataclass, field
from datetime import datetime
from enum import Enum
from typing import Any, Optional
import json

REPORT_FORMAT_VERSION = 1


class RunStatus(Enum):
    """Outcome codes for a completed run."""

    OK = "ok"
    FLAGGED = "flagged"  # at least one count saturated or degenerate


@dataclass
class RunRecord:
    """Envelope written as report.json for every subcommand run."""

    subcommand: str
    config: dict[str, Any]
    config_hash: str
    seed: int
    version: str
    wall_time: float
    result: dict[str, Any]
    status: RunStatus = RunStatus.OK
    tables: list[str] = field(default_factory=list)
    created: Optional[datetime] = None
    format_version: int = REPORT_FORMAT_VERSION

    @property
    def flagged(self) -> bool:
        return self.status is RunStatus.FLAGGED

    def to_dict(self) -> dict[str, Any]:
        """Convert to JSON-serializable dict."""
        return {
            "format_version": self.format_version,
            "subcommand": self.subcommand,
            "config": self.config,
            "config_hash": self.config_hash,
            "seed": self.seed,
            "version": self.version,
            "wall_time": self.wall_time,
            "created": self.created.isoformat() if self.created else None,
            "status": self.status.value,
            "tables": list(self.tables),
            "result": self.result,
        }

    def to_json(self) -> str:
        """Serialize to JSON string."""
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "RunRecord":
        """Create from dict (e.g., from JSON)."""
        created = data.get("created")
        return cls(
            subcommand=data["subcommand"],
            config=data["config"],
            config_hash=data["config_hash"],
            seed=int(data["seed"]),
            version=data.get("version", ""),
            wall_time=float(data.get("wall_time", 0.0)),
            result=data.get("result", {}),
            status=RunStatus(data.get("status", RunStatus.OK.value)),
            tables=list(data.get("tables", [])),
            created=datetime.fromisoformat(created) if created else None,
            format_version=int(data.get("format_version", REPORT_FORMAT_VERSION)),
        )

    @classmethod
    def from_json(cls, json_str: str) -> "RunRecord":
        """Deserialize from JSON string."""
        return cls.from_dict(json.loads(json_str))
