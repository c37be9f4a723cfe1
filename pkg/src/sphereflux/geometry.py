"""Spherical/Cartesian geometry on the unit sphere.

Everything downstream (grid construction, flux evaluation, rendering of
results) goes through the conversions and tangent frames defined here.
Longitudes are always normalized to [0, 2*pi); latitudes live in
[-pi/2, pi/2].  Points are plain numpy arrays of shape (3,) or (..., 3)
so that all functions vectorize.
"""

from __future__ import annotations

import math
from typing import NamedTuple

import numpy as np

TWO_PI = 2.0 * math.pi
HALF_PI = 0.5 * math.pi


class PoleSingularityError(ValueError):
    """Raised when a tangent frame is requested at a pole."""


class SphericalCoord(NamedTuple):
    """Longitude/latitude pair in radians, lam in [0, 2*pi), phi in [-pi/2, pi/2]."""

    lam: float
    phi: float


class TangentFrame(NamedTuple):
    """Orthonormal frame at a sphere point: east, north, outward normal."""

    i_lam: np.ndarray
    i_phi: np.ndarray
    n: np.ndarray


def wrap_longitude(lam):
    """Normalize longitude(s) into [0, 2*pi)."""
    out = np.mod(lam, TWO_PI)
    # mod can return 2*pi for tiny negative inputs after rounding
    return np.where(out >= TWO_PI, out - TWO_PI, out)


def wrap_angle_diff(d):
    """Wrap an angle difference into (-pi, pi]."""
    return math.pi - np.mod(math.pi - np.asarray(d, dtype=float), TWO_PI)


def unit_sphere_point(lam, phi):
    """Cartesian point(s) on the unit sphere for longitude/latitude arrays.

    Latitudes bitwise equal to +/-pi/2 are snapped to the exact pole
    (0, 0, +/-1) so that all cell corners touching a pole share one
    representation; the telescoping flux sums rely on that.
    """
    lam = np.asarray(lam, dtype=float)
    phi = np.asarray(phi, dtype=float)
    cphi = np.cos(phi)
    xyz = np.stack(
        [cphi * np.cos(lam), cphi * np.sin(lam), np.sin(phi)], axis=-1
    )
    at_pole = np.abs(phi) == HALF_PI
    if np.any(at_pole):
        pole = np.zeros(xyz.shape)
        pole[..., 2] = np.sign(phi)
        xyz = np.where(at_pole[..., None], pole, xyz)
    return xyz


def to_cartesian(c: SphericalCoord) -> np.ndarray:
    """Convert one SphericalCoord to a unit-length Cartesian point."""
    return unit_sphere_point(c.lam, c.phi)


def tangent_frame(c: SphericalCoord) -> TangentFrame:
    """Unit east/north tangent vectors and outward normal at ``c``.

    Raises PoleSingularityError at |phi| = pi/2 where the east direction
    is undefined; pole-adjacent cells must use edge-based quantities
    instead.
    """
    if abs(c.phi) >= HALF_PI:
        raise PoleSingularityError(
            f"tangent frame is singular at the pole (phi={c.phi!r})"
        )
    sl, cl = math.sin(c.lam), math.cos(c.lam)
    sp, cp = math.sin(c.phi), math.cos(c.phi)
    i_lam = np.array([-sl, cl, 0.0])
    i_phi = np.array([-sp * cl, -sp * sl, cp])
    n = np.array([cp * cl, cp * sl, sp])
    return TangentFrame(i_lam, i_phi, n)


def east_vectors(lam, phi):
    """Vectorized unit east tangent i_lam at (lam, phi) arrays."""
    lam = np.asarray(lam, dtype=float)
    z = np.zeros(np.broadcast_shapes(np.shape(lam), np.shape(phi)))
    return np.stack([-np.sin(lam) + z, np.cos(lam) + z, z], axis=-1)


def north_vectors(lam, phi):
    """Vectorized unit north tangent i_phi at (lam, phi) arrays."""
    lam = np.asarray(lam, dtype=float)
    phi = np.asarray(phi, dtype=float)
    sp, cp = np.sin(phi), np.cos(phi)
    return np.stack([-sp * np.cos(lam), -sp * np.sin(lam), cp], axis=-1)


def cross(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Vector cross product a x b, broadcasting over leading axes."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    return np.stack(
        [
            a[..., 1] * b[..., 2] - a[..., 2] * b[..., 1],
            a[..., 2] * b[..., 0] - a[..., 0] * b[..., 2],
            a[..., 0] * b[..., 1] - a[..., 1] * b[..., 0],
        ],
        axis=-1,
    )
