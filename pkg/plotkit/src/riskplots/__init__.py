"""Figure rendering for metarisk sweep CSVs."""

from .csvio import EXPECTED_COLUMNS, EmptyInputError, SchemaError, SweepTable, read_tables
from .render import KINDS, PlotSpec, RenderedSeries, build_series, render

__version__ = "0.1.0"
