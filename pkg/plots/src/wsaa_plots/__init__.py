"""Figures for wsaa experiment outputs (records.csv / summary.json)."""

from .io import NoDataError, SchemaVersionError, load_records, load_summary
from .render import FIGURE_KINDS, FigureSpec, render

__version__ = "0.1.0"
