"""File-based persistence for experiment reports."""

from pathlib import Path
from typing import Optional
import logging

import pandas as pd

from kss.exceptions import ReportReadError, ReportWriteError
from kss.models.run import REPORT_FORMAT_VERSION, RunRecord


class ReportStore:
    """
    Stores one report per subcommand under an output directory.

    Layout:
    - {out}/{subcommand}/report.json - RunRecord envelope
    - {out}/{subcommand}/{table}.csv - Tabular artifacts named in the record
    """

    REPORT_FILE = "report.json"

    def __init__(self, out_dir: Path):
        self.out_dir = Path(out_dir)
        self.logger = logging.getLogger(__name__)

    def run_dir(self, subcommand: str) -> Path:
        return self.out_dir / subcommand

    def report_path(self, subcommand: str) -> Path:
        return self.run_dir(subcommand) / self.REPORT_FILE

    def table_path(self, subcommand: str, table: str) -> Path:
        return self.run_dir(subcommand) / f"{table}.csv"

    def put(
        self,
        record: RunRecord,
        tables: Optional[dict[str, pd.DataFrame]] = None,
    ) -> Path:
        """
        Write a report and its tables.

        Args:
            record: Report envelope; its table list is replaced by the names written
            tables: DataFrames keyed by table name

        Returns:
            Path of the written report.json

        Raises:
            ReportWriteError: If any file cannot be written
        """
        tables = tables or {}
        run_dir = self.run_dir(record.subcommand)
        record.tables = sorted(tables)

        try:
            run_dir.mkdir(parents=True, exist_ok=True)
            for name, frame in tables.items():
                frame.to_csv(self.table_path(record.subcommand, name), index=False, lineterminator="\n")
            path = self.report_path(record.subcommand)
            path.write_text(record.to_json() + "\n")
        except OSError as e:
            self.logger.error(f"Failed to write report for {record.subcommand}: {e}")
            raise ReportWriteError(record.subcommand, str(e)) from e

        self.logger.info(
            f"Wrote {record.subcommand} report to {path}"
            + (f" with tables {', '.join(record.tables)}" if record.tables else "")
        )
        return path

    def load(self, subcommand: str) -> RunRecord:
        """
        Load a stored report.

        Raises:
            ReportReadError: If the report is missing, malformed or from a newer format
        """
        path = self.report_path(subcommand)
        if not path.exists():
            raise ReportReadError(subcommand, f"{path} does not exist")

        try:
            record = RunRecord.from_json(path.read_text())
        except (ValueError, KeyError, TypeError) as e:
            raise ReportReadError(subcommand, f"malformed report: {e}") from e

        if record.format_version > REPORT_FORMAT_VERSION:
            raise ReportReadError(
                subcommand,
                f"format version {record.format_version} is newer than {REPORT_FORMAT_VERSION}",
            )
        return record

    def load_table(self, subcommand: str, table: str) -> pd.DataFrame:
        """Load one CSV table written alongside a report."""
        path = self.table_path(subcommand, table)
        if not path.exists():
            raise ReportReadError(subcommand, f"table {table} does not exist")
        try:
            return pd.read_csv(path)
        except (ValueError, pd.errors.ParserError) as e:
            raise ReportReadError(subcommand, f"unreadable table {table}: {e}") from e

    def get(self, subcommand: str) -> tuple[Optional[RunRecord], dict[str, pd.DataFrame]]:
        """
        Retrieve a report and its tables.

        Returns:
            (record, tables); (None, {}) if nothing readable is stored
        """
        try:
            record = self.load(subcommand)
            tables = {name: self.load_table(subcommand, name) for name in record.tables}
        except ReportReadError as e:
            self.logger.debug(f"No usable report for {subcommand}: {e}")
            return None, {}
        return record, tables

    def exists(self, subcommand: str) -> bool:
        """Check if a report is stored for subcommand."""
        return self.report_path(subcommand).exists()

    def invalidate(self, subcommand: str) -> None:
        """Remove the stored report and its tables."""
        run_dir = self.run_dir(subcommand)
        if not run_dir.exists():
            return
        for path in run_dir.glob("*.csv"):
            path.unlink()
        report = self.report_path(subcommand)
        if report.exists():
            report.unlink()
        self.logger.info(f"Invalidated {subcommand} report")
