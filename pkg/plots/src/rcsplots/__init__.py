"""Figures from results CSV files."""

from .render import KINDS, PlotDataError, load_rows, main, render

__version__ = "0.1.0"
