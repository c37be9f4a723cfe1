"""Geometry-compatible flux models built from scalar potentials.

A flux on the sphere is represented through a potential ``h(x, u)``:
the flux vector is ``F(x, u) = n(x) x grad_x h(x, u)``, which makes the
divergence of ``F(., const)`` vanish identically.  The solver never
integrates F along cell boundaries: the outward flux through an oriented
edge is the potential difference

    H(u) = -(h(e2, u) - h(e1, u)),

so flux sums around closed cell boundaries telescope to zero and the
discrete scheme inherits the compatibility property exactly.

The built-in models all have the separable form ``h = A(x) * f(u)``,
which the solver exploits: per edge, only the constants ``-(A(e2)-A(e1))``
and the speed factor ``grad A . (N x n)`` are needed.
"""

from __future__ import annotations

import math
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Callable, NamedTuple, Optional

import numpy as np

from .geometry import cross
from .grid import Edge, SphereGrid, oriented_endpoints
from .geometry import unit_sphere_point

# u-derivative fallback step; spatial step is wider because its rounding
# noise gets divided by the u-step when both fallbacks nest
_FD_STEP_U = 1e-6
_FD_STEP_X = 1e-4


class EdgeSpeeds(NamedTuple):
    """One-sided local propagation speeds at an edge, owner's viewpoint."""

    a_in: float
    a_out: float


class FluxModel(ABC):
    """Abstract geometry-compatible flux defined by its potential.

    Subclasses must provide ``h``; everything else has finite-difference
    fallbacks so a black-box potential is usable, at reduced accuracy.
    All evaluations are pure, vectorized over leading axes and safe to
    call concurrently.
    """

    name = "custom"

    @abstractmethod
    def h(self, xyz: np.ndarray, u) -> np.ndarray:
        """Potential at Cartesian point(s) ``xyz`` (..., 3) and state ``u``."""

    def grad_h(self, xyz: np.ndarray, u) -> np.ndarray:
        """Spatial gradient of the potential; central differences by default."""
        xyz = np.asarray(xyz, dtype=float)
        out = np.empty(np.broadcast_shapes(xyz.shape[:-1], np.shape(u)) + (3,))
        for k in range(3):
            dp = xyz.copy()
            dm = xyz.copy()
            dp[..., k] += _FD_STEP_X
            dm[..., k] -= _FD_STEP_X
            out[..., k] = (self.h(dp, u) - self.h(dm, u)) / (2.0 * _FD_STEP_X)
        return out

    def normal_flux(self, xyz: np.ndarray, normal: np.ndarray, u) -> np.ndarray:
        """N . F(x, u) with N tangent to the sphere at x."""
        xyz = np.asarray(xyz, dtype=float)
        return np.sum(self.grad_h(xyz, u) * cross(normal, xyz), axis=-1)

    def directional_dflux(self, xyz: np.ndarray, normal: np.ndarray, u) -> np.ndarray:
        """N . dF/du at x; central difference in u by default."""
        u = np.asarray(u, dtype=float)
        return (
            self.normal_flux(xyz, normal, u + _FD_STEP_U)
            - self.normal_flux(xyz, normal, u - _FD_STEP_U)
        ) / (2.0 * _FD_STEP_U)


class SeparableFluxModel(FluxModel):
    """Potential of product form h(x, u) = A(x) f(u), all derivatives analytic."""

    def __init__(self, spatial_factor, spatial_gradient, f, df, name="custom"):
        self.spatial_factor = spatial_factor
        self.spatial_gradient = spatial_gradient
        self.f = f
        self.df = df
        self.name = name

    def h(self, xyz, u):
        return self.spatial_factor(np.asarray(xyz, dtype=float)) * self.f(u)

    def grad_h(self, xyz, u):
        g = self.spatial_gradient(np.asarray(xyz, dtype=float))
        return g * np.asarray(self.f(u))[..., None]

    def speed_factor(self, xyz, normal):
        """grad A . (N x n): the u-independent part of N . dF/du."""
        xyz = np.asarray(xyz, dtype=float)
        return np.sum(self.spatial_gradient(xyz) * cross(normal, xyz), axis=-1)

    def normal_flux(self, xyz, normal, u):
        return self.speed_factor(xyz, normal) * self.f(u)

    def directional_dflux(self, xyz, normal, u):
        return self.speed_factor(xyz, normal) * self.df(u)


@dataclass
class FoliatedFluxSpec:
    """Foliated potential h = phi(x . a) f(u).

    ``a`` is a constant direction (need not be unit); ``dphi_fn``/``df_fn``
    are the derivatives of ``phi_fn``/``f_fn``.
    """

    a: np.ndarray
    phi_fn: Callable = lambda s: s
    dphi_fn: Callable = lambda s: np.ones_like(np.asarray(s, dtype=float))
    f_fn: Callable = lambda u: 0.5 * u * u
    df_fn: Callable = lambda u: u


def _check_derivative(fn, dfn, samples, what):
    step = 1e-5
    num = (fn(samples + step) - fn(samples - step)) / (2.0 * step)
    ana = dfn(samples)
    err = np.max(np.abs(num - ana) / np.maximum(1.0, np.abs(ana)))
    if err > 1e-6:
        raise ValueError(f"{what} derivative inconsistent with values (err={err:.2e})")


def make_foliated(spec: FoliatedFluxSpec, name: str = "foliated") -> SeparableFluxModel:
    """Flux model for h(x, u) = phi(x . a) f(u).

    The flux vector is phi'(x . a) f(u) n(x) x a; any u0(x) depending on
    x . a alone is a steady state of the induced conservation law.
    """
    a = np.asarray(spec.a, dtype=float)
    span = float(np.linalg.norm(a))
    samples = np.linspace(-span, span, 17)
    _check_derivative(spec.phi_fn, spec.dphi_fn, samples, "phi")

    def factor(xyz):
        return spec.phi_fn(xyz @ a)

    def gradient(xyz):
        s = np.asarray(spec.dphi_fn(xyz @ a))
        return s[..., None] * a

    return SeparableFluxModel(factor, gradient, spec.f_fn, spec.df_fn, name=name)


def make_confined_x1(
    f1: Callable = lambda u: 0.5 * u * u,
    df1: Callable = lambda u: u,
    name: str = "confined-x1",
) -> SeparableFluxModel:
    """Flux confined to the hemisphere x1 <= 0: h = x1^2 f1(u) there, 0 outside.

    The spatial factor and its gradient both vanish at x1 = 0, so the
    potential is C^1 across the boundary and the flux is identically zero
    for x1 > 0.
    """

    def factor(xyz):
        x1 = np.asarray(xyz, dtype=float)[..., 0]
        return np.where(x1 <= 0.0, x1 * x1, 0.0)

    def gradient(xyz):
        xyz = np.asarray(xyz, dtype=float)
        x1 = xyz[..., 0]
        g = np.zeros(xyz.shape)
        g[..., 0] = np.where(x1 <= 0.0, 2.0 * x1, 0.0)
        return g

    return SeparableFluxModel(factor, gradient, f1, df1, name=name)


def _builtin_foliated_x1():
    return make_foliated(FoliatedFluxSpec(a=np.array([1.0, 0.0, 0.0])), name="foliated-x1")


def _builtin_foliated_diag():
    return make_foliated(FoliatedFluxSpec(a=np.array([1.0, 1.0, 1.0])), name="foliated-diag")


MODEL_REGISTRY = {
    "foliated-x1": _builtin_foliated_x1,
    "foliated-diag": _builtin_foliated_diag,
    "confined-x1": make_confined_x1,
}


def model_names():
    return sorted(MODEL_REGISTRY)


def get_model(name: str) -> FluxModel:
    try:
        return MODEL_REGISTRY[name]()
    except KeyError:
        raise KeyError(
            f"unknown flux model {name!r}; available: {', '.join(model_names())}"
        ) from None


def edge_flux_H(model: FluxModel, e1: np.ndarray, e2: np.ndarray, u) -> float:
    """Outward flux through the oriented edge e1 -> e2 at state u.

    Equals the line integral of F . nu along the edge, by the gradient
    structure of the flux; antisymmetric under endpoint swap.
    """
    return -(model.h(e2, u) - model.h(e1, u))


def local_speeds(model: FluxModel, edge: Edge, u_own: float, u_nb: float) -> EdgeSpeeds:
    """One-sided local speeds at an edge from the owner (left) cell's side.

    Both reconstructed midpoint traces enter; speeds are the positive and
    negative parts of the directional flux derivative, so a_in, a_out >= 0
    always.
    """
    if edge.is_degenerate:
        return EdgeSpeeds(0.0, 0.0)
    mid = unit_sphere_point(edge.midpoint.lam, edge.midpoint.phi)
    d_own = float(model.directional_dflux(mid, edge.normal_from_left, u_own))
    d_nb = float(model.directional_dflux(mid, edge.normal_from_left, u_nb))
    return EdgeSpeeds(
        a_in=-min(d_own, d_nb, 0.0),
        a_out=max(d_own, d_nb, 0.0),
    )


def vertex_potential_scale(model: FluxModel, grid: SphereGrid, u) -> float:
    """max(1, max |h| over all cell corner vertices) -- residual normalizer."""
    verts = grid.cell_vertices()
    return max(1.0, float(np.max(np.abs(model.h(verts, u)))))


def discrete_divergence_residual(model: FluxModel, grid: SphereGrid, u_bar: float) -> float:
    """Largest potential-difference loop sum around any cell, normalized.

    For every model built from a potential this telescopes to zero around
    each closed cell boundary; anything above roundoff indicates broken
    edge orientation or adjacency.
    """
    sums = np.zeros(grid.n_cells)
    for c in grid.cells:
        acc = 0.0
        for eid in c.edge_ids:
            e = grid.edges[eid]
            if e.is_degenerate:
                continue
            p1, p2 = oriented_endpoints(grid, c.id, e)
            acc += float(edge_flux_H(model, p1, p2, u_bar))
        sums[c.id] = acc
    return float(np.max(np.abs(sums))) / vertex_potential_scale(model, grid, u_bar)
