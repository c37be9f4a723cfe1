"""The eight benchmark cases: initial data, fluxes, grids and time steps.

Cases T1-T6 and T8 start from (discontinuous) steady states of their
flux, so the initial function doubles as the exact solution for error
measurement.  T7 starts from data that is genuinely time dependent inside
the cap x1 <= 0 and has no exact reference; its acceptance property is
confinement.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .geometry import unit_sphere_point
from .grid import SphereGrid
from .solver import CellField

PAPER_N_PHI = 96
PAPER_N_LAMBDA_EQ = 192


def two_branch_x1(gamma: float) -> Callable:
    """Cubic up to x1 = 0.5, then a rational branch; one jump circle."""

    def u0(xyz):
        x1 = np.asarray(xyz, dtype=float)[..., 0]
        den = np.where(x1 <= 0.5, 1.0, 2.0 * x1 + 1.0)
        return np.where(x1 <= 0.5, gamma * x1**3, -gamma * x1 * x1 / den)

    return u0


def three_piece_x1(gamma: float) -> Callable:
    """Three polynomial pieces in x1 with jumps at x1 = +/-0.5."""

    def u0(xyz):
        x1 = np.asarray(xyz, dtype=float)[..., 0]
        return np.where(
            x1 <= -0.5,
            gamma * x1**4,
            np.where(x1 < 0.5, 0.5 * gamma * x1**3, -0.25 * gamma * x1 * x1),
        )

    return u0


def cap_reciprocal(xyz):
    """Antisymmetric reciprocal of theta = x1+x2+x3, jump across theta = 0."""
    th = np.asarray(xyz, dtype=float).sum(axis=-1)
    mag = 0.1 / (th + 2.0)
    return np.where(th >= 0.0, mag, -mag)


def cap_polynomial(xyz):
    """Cubic/quadratic in theta = x1+x2+x3 outside |theta| < 0.5, constant inside."""
    th = np.asarray(xyz, dtype=float).sum(axis=-1)
    return np.where(
        th >= 0.5, 0.2 * th**3, np.where(th <= -0.5, 0.1 * th * th, -0.025)
    )


def confined_wave(xyz):
    """Non-steady data inside the cap x1 <= 0, zero outside."""
    xyz = np.asarray(xyz, dtype=float)
    x1, x2 = xyz[..., 0], xyz[..., 1]
    return np.where(x1 <= 0.0, 0.1 * (1.0 + x2 * x2) * x1, 0.0)


def confined_linear(xyz):
    """Steady linear profile inside the cap x1 <= 0, zero outside."""
    x1 = np.asarray(xyz, dtype=float)[..., 0]
    return np.where(x1 <= 0.0, 0.1 * x1, 0.0)


INITIAL_REGISTRY = {
    "two-branch-x1": two_branch_x1,      # takes gamma
    "three-piece-x1": three_piece_x1,    # takes gamma
    "cap-reciprocal": lambda: cap_reciprocal,
    "cap-polynomial": lambda: cap_polynomial,
    "confined-wave": lambda: confined_wave,
    "confined-linear": lambda: confined_linear,
}

_PARAMETRIZED_INITIALS = {"two-branch-x1", "three-piece-x1"}


def make_initial(key: str, gamma: Optional[float] = None) -> Callable:
    if key not in INITIAL_REGISTRY:
        raise KeyError(
            f"unknown initial data {key!r}; available: "
            f"{', '.join(sorted(INITIAL_REGISTRY))}"
        )
    if key in _PARAMETRIZED_INITIALS:
        return INITIAL_REGISTRY[key](0.1 if gamma is None else gamma)
    return INITIAL_REGISTRY[key]()


@dataclass
class CaseSpec:
    name: str
    flux: str
    initial_key: str
    initial_u: Callable
    exact_u: Optional[Callable]
    n_phi: int = PAPER_N_PHI
    n_lambda_eq: int = PAPER_N_LAMBDA_EQ
    dt: float = 0.04
    t_end: float = 5.0
    gamma: Optional[float] = None

    @property
    def steady(self) -> bool:
        return self.exact_u is not None


def _steady_case(name, flux, key, dt, gamma=None):
    u0 = make_initial(key, gamma)
    return CaseSpec(
        name=name, flux=flux, initial_key=key, initial_u=u0, exact_u=u0,
        dt=dt, gamma=gamma,
    )


def case_catalog() -> list:
    """Cases T1..T8 with their fluxes, grids and time steps."""
    return [
        _steady_case("T1", "foliated-x1", "two-branch-x1", 0.04, gamma=0.1),
        _steady_case("T2", "foliated-x1", "two-branch-x1", 0.04, gamma=0.5),
        _steady_case("T3", "foliated-x1", "three-piece-x1", 0.04, gamma=0.1),
        _steady_case("T4", "foliated-x1", "three-piece-x1", 0.04, gamma=0.5),
        _steady_case("T5", "foliated-diag", "cap-reciprocal", 0.02),
        _steady_case("T6", "foliated-diag", "cap-polynomial", 0.02),
        CaseSpec(
            name="T7", flux="confined-x1", initial_key="confined-wave",
            initial_u=confined_wave, exact_u=None, dt=0.04,
        ),
        _steady_case("T8", "confined-x1", "confined-linear", 0.04),
    ]


def get_case(name: str) -> CaseSpec:
    for case in case_catalog():
        if case.name == name.upper():
            return case
    raise KeyError(f"unknown case {name!r}; expected T1..T8")


def project_initial(grid: SphereGrid, initial_u: Callable, t0: float = 0.0) -> CellField:
    """Midpoint-sample the initial data at cell centers."""
    centers = unit_sphere_point(grid.cell_lam, grid.cell_phi)
    return CellField(np.asarray(initial_u(centers), dtype=float), t0)
