"""Reading the sweep CSV contract.

The producer writes a fixed header; this module validates it, groups rows by
configuration id, and parses numeric cells (empty cells become None). It
never recomputes any of the numbers.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

EXPECTED_COLUMNS = (
    "config_id",
    "sweep_value",
    "risk_exact",
    "bias_sq",
    "var_novel",
    "var_source",
    "risk_mc",
    "risk_mc_se",
    "upper_thm52",
    "upper_asymptotic",
    "lower_thm51",
)


class SchemaError(ValueError):
    """The CSV header does not carry the expected columns."""


class EmptyInputError(ValueError):
    """The CSV holds a header but no data rows."""


@dataclass
class SweepTable:
    """Rows of one or more sweep CSVs, keyed by configuration id."""

    rows: list[dict]

    @property
    def config_ids(self) -> list[str]:
        seen = []
        for row in self.rows:
            if row["config_id"] not in seen:
                seen.append(row["config_id"])
        return seen

    def series(self, config_id: str, column: str) -> tuple[list[float], list]:
        """(x, y) pairs for one config, ordered as written; y may hold None."""
        xs, ys = [], []
        for row in self.rows:
            if row["config_id"] == config_id:
                xs.append(row["sweep_value"])
                ys.append(row[column])
        return xs, ys


def _parse_cell(name: str, value: str):
    if name == "config_id":
        return value
    if value == "":
        return None
    return float(value)


def read_tables(paths) -> SweepTable:
    """Load and concatenate sweep CSVs, validating each header."""
    rows = []
    for path in paths:
        with open(path, newline="", encoding="utf-8") as handle:
            reader = csv.reader(handle)
            try:
                header = next(reader)
            except StopIteration:
                raise EmptyInputError(f"{path}: file is empty") from None
            missing = [c for c in EXPECTED_COLUMNS if c not in header]
            if missing:
                raise SchemaError(f"{path}: missing column(s) {', '.join(missing)}")
            index = {name: header.index(name) for name in EXPECTED_COLUMNS}
            count = 0
            for record in reader:
                rows.append({name: _parse_cell(name, record[i]) for name, i in index.items()})
                count += 1
            if count == 0:
                raise EmptyInputError(f"{path}: no data rows")
    return SweepTable(rows)
