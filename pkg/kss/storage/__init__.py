"""Report persistence."""

from kss.storage.report_store import ReportStore

__all__ = ["ReportStore"]
