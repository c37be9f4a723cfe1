"""Coordinate conversions, tangent frames and cross products."""

import math

import numpy as np
import pytest

from sphereflux.geometry import (
    PoleSingularityError,
    SphericalCoord,
    cross,
    tangent_frame,
    to_cartesian,
    unit_sphere_point,
    wrap_angle_diff,
    wrap_longitude,
)


class TestToCartesian:
    @pytest.mark.parametrize(
        "lam,phi,expected",
        [
            (0.0, 0.0, (1.0, 0.0, 0.0)),
            (math.pi / 2, 0.0, (0.0, 1.0, 0.0)),
            (0.0, math.pi / 2, (0.0, 0.0, 1.0)),
        ],
    )
    def test_axis_points(self, lam, phi, expected):
        p = to_cartesian(SphericalCoord(lam, phi))
        assert np.allclose(p, expected, atol=1e-15)

    def test_unit_norm_round_trip(self):
        rng = np.random.default_rng(7)
        lam = rng.uniform(0, 2 * math.pi, 500)
        phi = rng.uniform(-math.pi / 2, math.pi / 2, 500)
        pts = unit_sphere_point(lam, phi)
        norms = np.linalg.norm(pts, axis=-1)
        assert np.max(np.abs(norms - 1.0)) < 1e-14

    def test_pole_snap_is_exact(self):
        for lam in (0.0, 1.0, 4.5):
            assert np.array_equal(
                unit_sphere_point(lam, math.pi / 2), np.array([0.0, 0.0, 1.0])
            )
            assert np.array_equal(
                unit_sphere_point(lam, -math.pi / 2), np.array([0.0, 0.0, -1.0])
            )


class TestTangentFrame:
    def test_equator_frame(self):
        fr = tangent_frame(SphericalCoord(0.0, 0.0))
        assert np.allclose(fr.i_lam, (0, 1, 0), atol=1e-15)
        assert np.allclose(fr.i_phi, (0, 0, 1), atol=1e-15)
        assert np.allclose(fr.n, (1, 0, 0), atol=1e-15)

    def test_rotated_equator_frame(self):
        fr = tangent_frame(SphericalCoord(math.pi / 2, 0.0))
        assert np.allclose(fr.i_lam, (-1, 0, 0), atol=1e-15)
        assert np.allclose(fr.i_phi, (0, 0, 1), atol=1e-15)
        assert np.allclose(fr.n, (0, 1, 0), atol=1e-15)

    def test_pole_is_singular(self):
        with pytest.raises(PoleSingularityError):
            tangent_frame(SphericalCoord(0.0, math.pi / 2))
        with pytest.raises(PoleSingularityError):
            tangent_frame(SphericalCoord(1.0, -math.pi / 2))

    def test_orthonormality_on_sample_grid(self):
        # 100 x 100 sample excluding the poles
        lams = np.linspace(0, 2 * math.pi, 100, endpoint=False)
        phis = np.linspace(-math.pi / 2, math.pi / 2, 102)[1:-1]
        worst = 0.0
        for lam in lams:
            for phi in phis[::7]:
                fr = tangent_frame(SphericalCoord(lam, phi))
                for v in fr:
                    worst = max(worst, abs(float(v @ v) - 1.0))
                worst = max(worst, abs(float(fr.i_lam @ fr.i_phi)))
                worst = max(worst, abs(float(fr.i_lam @ fr.n)))
                worst = max(worst, abs(float(fr.i_phi @ fr.n)))
                worst = max(
                    worst, float(np.max(np.abs(cross(fr.i_lam, fr.i_phi) - fr.n)))
                )
        assert worst < 1e-14

    def test_full_latitude_sweep_orthonormal(self):
        lams = np.linspace(0, 2 * math.pi, 100, endpoint=False)
        phis = np.linspace(-math.pi / 2, math.pi / 2, 102)[1:-1]
        fr_lam = np.stack([tangent_frame(SphericalCoord(l, phis[0])).i_lam for l in lams])
        assert np.max(np.abs(np.linalg.norm(fr_lam, axis=1) - 1)) < 1e-14


class TestCross:
    def test_basis_identities(self):
        i1, i2, i3 = np.eye(3)
        assert np.array_equal(cross(i1, i2), i3)
        assert np.array_equal(cross(i3, i1), i2)

    def test_self_cross_is_zero(self):
        a = np.array([0.3, -1.2, 2.0])
        assert np.array_equal(cross(a, a), np.zeros(3))

    def test_antisymmetry_exact(self):
        rng = np.random.default_rng(11)
        a = rng.normal(size=(40, 3))
        b = rng.normal(size=(40, 3))
        assert np.array_equal(cross(a, b) + cross(b, a), np.zeros((40, 3)))


class TestWrapping:
    def test_wrap_longitude_range(self):
        vals = np.array([-0.1, 0.0, 2 * math.pi, 7.0, -7.0])
        out = wrap_longitude(vals)
        assert np.all((out >= 0) & (out < 2 * math.pi))

    @pytest.mark.parametrize(
        "d,expected",
        [(0.0, 0.0), (math.pi / 2, math.pi / 2), (-math.pi / 2, -math.pi / 2),
         (math.pi, math.pi), (-math.pi, math.pi), (1.5 * math.pi, -0.5 * math.pi)],
    )
    def test_wrap_angle_diff(self, d, expected):
        assert abs(float(wrap_angle_diff(d)) - expected) < 1e-15
