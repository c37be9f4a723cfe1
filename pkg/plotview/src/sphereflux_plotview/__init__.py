"""Orthographic hemisphere renderer for sphereflux field snapshots."""

from .csvio import EXPECTED_HEADER, SchemaError, read_field_csv
from .render import BatchResult, PlotSpec, render, render_batch

__version__ = "0.1.0"

__all__ = [
    "BatchResult", "EXPECTED_HEADER", "PlotSpec", "SchemaError",
    "read_field_csv", "render", "render_batch",
]
