"""Run metrics: area-weighted errors, solution range, mass, run reports."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, asdict
from typing import Optional

import numpy as np

from .geometry import unit_sphere_point
from .grid import SphereGrid


@dataclass
class RunReport:
    """Metrics collected over one solver run."""

    steps: int = 0
    wall_seconds: float = 0.0
    mass_initial: float = 0.0
    mass_final: float = 0.0
    u_min: float = math.nan
    u_max: float = math.nan
    l2_error: Optional[float] = None
    compat_residual: Optional[float] = None
    cfl_estimate: Optional[float] = None

    def as_dict(self) -> dict:
        return asdict(self)


def total_mass(grid: SphereGrid, values: np.ndarray) -> float:
    """Area-weighted integral of the cell averages."""
    return float(np.dot(grid.cell_area, values))


def solution_range(values: np.ndarray) -> tuple:
    """(min, max) over cells."""
    return float(np.min(values)), float(np.max(values))


def l2_error(grid: SphereGrid, values: np.ndarray, exact) -> float:
    """Area-weighted RMS difference against ``exact`` sampled at cell centers.

    ``exact`` takes Cartesian points of shape (n, 3).  The weighting by
    cell area and the normalization by total area make the value
    grid-size independent and bounded by the solution range.
    """
    centers = unit_sphere_point(grid.cell_lam, grid.cell_phi)
    diff = np.asarray(values) - np.asarray(exact(centers), dtype=float)
    return math.sqrt(float(np.dot(grid.cell_area, diff * diff)) / grid.total_area)
