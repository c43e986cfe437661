"""Deterministic figure rendering for scheduler sweep and certificate CSVs."""

from .render import FigureSpec, RenderResult, SchemaError, SpecError, load_figure_spec, render

__version__ = "0.1.0"
