"""Service layer for experiment orchestration."""

from app.services.experiment_service import ExperimentService, RunOutcome

__all__ = [
    "ExperimentService",
    "RunOutcome",
]
