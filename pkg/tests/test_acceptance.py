"""Acceptance suite: one test per exit criterion, tolerances pinned.

Each test appends a PASS/FAIL line to the terminal summary (see
conftest.pytest_terminal_summary).  Expensive full-resolution runs are
cached in the session-scoped ``case_runner`` fixture and shared between
criteria.
"""

import math
import time

import numpy as np
import pytest

from conftest import record_acceptance
from reference_impl import rhs_reference
from sphereflux import (
    CellField,
    CentralUpwindOperator,
    SolverConfig,
    build_grid,
    get_case,
    get_model,
    integrate,
    l2_error,
    project_initial,
    solution_range,
    ssp_rk3_update,
)
from sphereflux.cli import main as cli_main
from sphereflux.fluxes import vertex_potential_scale

ERROR_BOUNDS = {
    "T1": 1.5e-3,
    "T2": 2.7e-2,
    "T3": 9.6e-4,
    "T4": 1.9e-2,
    "T5": 1.3e-2,
    "T6": 1.8e-2,
    "T8": 9.6e-4,
}

RANGE_EXPECTATIONS = {
    "T1": 0.11237,
    "T2": 0.56185,
    "T3": 0.12488,
    "T4": 0.62441,
    "T5": 0.4232,
    "T6": 1.0638,
    "T8": 0.2,
}


def _note(ok: bool, text: str):
    record_acceptance(f"criterion {text}: {'PASS' if ok else 'FAIL'}")
    return ok


class TestCriterion1Compatibility:
    def test_constant_field_rhs_within_tolerance(self, paper_grid):
        start = time.perf_counter()
        worst_rel = 0.0
        for name in ("foliated-x1", "foliated-diag", "confined-x1"):
            model = get_model(name)
            op = CentralUpwindOperator(paper_grid, model)
            for u_bar in (-1.0, 0.0, 0.37, 2.0):
                r = op.rhs_values(np.full(paper_grid.n_cells, u_bar))
                scale = vertex_potential_scale(model, paper_grid, u_bar)
                worst_rel = max(worst_rel, float(np.max(np.abs(r))) / scale)
        elapsed = time.perf_counter() - start
        ok = worst_rel <= 1e-13 and elapsed < 5.0
        _note(ok, f"1 (compatibility): max rhs/scale={worst_rel:.2e}, {elapsed:.1f}s")
        assert worst_rel <= 1e-13
        assert elapsed < 5.0


class TestCriterion2Conservation:
    @pytest.mark.parametrize("name", ["T1", "T5"])
    def test_mass_drift_over_full_run(self, case_runner, name):
        run = case_runner(name)
        drift = abs(run.report.mass_final - run.report.mass_initial)
        bound = 1e-10 * (1.0 + abs(run.report.mass_initial))
        ok = drift <= bound and run.report.wall_seconds <= 120.0
        _note(ok, f"2 (conservation, {name}): drift={drift:.2e} bound={bound:.2e}")
        assert drift <= bound
        assert run.report.wall_seconds <= 120.0


class TestCriterion3ErrorReproduction:
    @pytest.mark.parametrize("name", sorted(ERROR_BOUNDS))
    def test_l2_error_bounds(self, case_runner, name):
        run = case_runner(name)
        err = l2_error(run.grid, run.final.values, run.case.exact_u)
        lo, hi = solution_range(run.initial.values)
        bound = ERROR_BOUNDS[name]
        range_bound = 0.02 * (hi - lo)
        ok = err <= bound and err <= range_bound
        _note(ok, f"3 (error, {name}): {err:.2e} <= {bound:.1e} and <= {range_bound:.1e}")
        assert err <= bound, f"{name}: l2 error {err:.3e} exceeds {bound:.1e}"
        assert err <= range_bound, (
            f"{name}: l2 error {err:.3e} exceeds 2% of range {range_bound:.3e}"
        )
        assert run.report.wall_seconds <= 120.0


class TestCriterion4SolutionRanges:
    @pytest.mark.parametrize("name", sorted(RANGE_EXPECTATIONS))
    def test_initial_projection_range(self, paper_grid, name):
        """Initial projections reproduce the reported full ranges within 2%.

        T1-T6 pass.  The T8 expectation of 0.2 is unreachable: its data is
        0.1*x1 on the cap x1 <= 0 and exactly zero elsewhere (the zero
        outside is what the confinement criterion pins down), so no
        projection of it can span more than 0.1.  Kept faithful to its
        statement; the T8 instance fails with the measured span.
        """
        case = get_case(name)
        f0 = project_initial(paper_grid, case.initial_u)
        lo, hi = solution_range(f0.values)
        span = hi - lo
        expected = RANGE_EXPECTATIONS[name]
        ok = abs(span - expected) <= 0.02 * expected
        _note(ok, f"4 (range, {name}): {span:.5f} vs {expected}")
        assert abs(span - expected) <= 0.02 * expected, (
            f"{name}: initial projection range {span:.5f} not within 2% of "
            f"{expected} (the data spans [{lo:.5f}, {hi:.5f}])"
        )


class TestCriterion5Confinement:
    @pytest.mark.parametrize("name", ["T7", "T8"])
    def test_cells_inside_positive_x1_stay_zero(self, case_runner, name):
        run = case_runner(name)
        mask = case_runner.inside_mask()
        assert np.max(np.abs(run.initial.values[mask])) == 0.0
        worst = max(run.inside_history) if run.inside_history else math.nan
        ok = worst == 0.0
        _note(ok, f"5 (confinement, {name}): max inside |u| over run = {worst}")
        assert worst == 0.0, f"{name}: flux leaked into x1 > 0 (max {worst})"


class TestCriterion6OracleEquivalence:
    def test_optimized_matches_naive_assembly(self, small_grid):
        start = time.perf_counter()
        rng = np.random.default_rng(2718281828)
        worst = 0.0
        for model_name in ("foliated-diag", "confined-x1"):
            model = get_model(model_name)
            op = CentralUpwindOperator(small_grid, model)
            for _ in range(100):
                u = rng.uniform(-2.0, 2.0, small_grid.n_cells)
                diff = np.max(np.abs(op.rhs_values(u) - rhs_reference(small_grid, model, u)))
                worst = max(worst, float(diff))
        elapsed = time.perf_counter() - start
        ok = worst <= 1e-12 and elapsed < 30.0
        _note(ok, f"6 (oracle equivalence): max diff={worst:.2e}, {elapsed:.1f}s")
        assert worst <= 1e-12
        assert elapsed < 30.0


class TestCriterion7TimeIntegrator:
    def test_convergence_order_on_scalar_surrogate(self):
        lam = -1.0
        t_end = 1.0
        errors = []
        for dt in (0.1, 0.05, 0.025):
            u = np.array([1.0])
            steps = int(round(t_end / dt))
            for _ in range(steps):
                u = ssp_rk3_update(u, lambda v: lam * v, dt)
            errors.append(abs(float(u[0]) - math.exp(lam * t_end)))
        orders = [
            math.log2(errors[i] / errors[i + 1]) for i in range(len(errors) - 1)
        ]
        ok = min(orders) >= 2.9
        _note(ok, f"7 (rk3 order): orders={[f'{o:.3f}' for o in orders]}")
        assert min(orders) >= 2.9, orders

    def test_amplification_factor(self):
        worst = 0.0
        for lam, dt in [(-1.0, 0.1), (-1.0, 0.05), (-1.0, 0.025), (0.7, 0.1)]:
            z = lam * dt
            got = float(ssp_rk3_update(np.array([1.0]), lambda v: lam * v, dt)[0])
            want = 1.0 + z + z * z / 2.0 + z**3 / 6.0
            worst = max(worst, abs(got - want))
        _note(worst < 1e-14, f"7 (rk3 amplification): max dev={worst:.2e}")
        assert worst < 1e-14


class TestCriterion8Refinement:
    def test_t1_error_halves_under_refinement(self, paper_grid):
        """Total error should drop by >= 2x under one refinement level.

        The smooth region obliges (measured ~3.3x, second order), but the
        total is dominated by the cells straddling the jump circle.  That
        jump is contact-like: the flux is tangent to the level circles of
        x1, so nothing steepens it, and at t=1 its numerical smearing is
        still below one cell width on both grids -- a regime where the
        straddling-cell drift rate doubles as the cells halve and the
        total L2 error does not decrease.  Kept faithful to its
        statement; fails with the measured ratio, recorded alongside the
        smooth-region ratio for diagnosis.
        """
        case = get_case("T1")
        model = get_model(case.flux)

        def run(grid, dt):
            from sphereflux.geometry import unit_sphere_point

            f0 = project_initial(grid, case.initial_u)
            final, _ = integrate(grid, model, f0, SolverConfig(dt=dt, t_end=1.0))
            err = l2_error(grid, final.values, case.exact_u)
            centers = unit_sphere_point(grid.cell_lam, grid.cell_phi)
            smooth = np.abs(centers[:, 0] - 0.5) > 4.0 * math.pi / grid.n_phi
            diff = (final.values - case.exact_u(centers)) * smooth
            err_smooth = math.sqrt(
                float(np.dot(grid.cell_area, diff * diff)) / grid.total_area
            )
            return err, err_smooth

        err_c, smooth_c = run(build_grid(48, 96, 0.5), case.dt)
        err_f, smooth_f = run(paper_grid, case.dt / 2)

        ratio = err_c / err_f
        ok = ratio >= 2.0
        _note(ok, f"8 (refinement): total {ratio:.2f}x "
                  f"(smooth region {smooth_c / smooth_f:.2f}x)")
        assert ratio >= 2.0, (
            f"total-error ratio {ratio:.2f} < 2 under refinement; the "
            f"jump-free region refines at {smooth_c / smooth_f:.2f}x"
        )


class TestCriterion9Determinism:
    def test_repeated_t3_runs_byte_identical(self, tmp_path, monkeypatch):
        blobs = []
        for threads in ("1", "8"):
            monkeypatch.setenv("SOLVER_THREADS", threads)
            out = tmp_path / f"t3-threads{threads}"
            rc = cli_main(["run", "--case", "T3", "--out", str(out)])
            assert rc == 0
            blobs.append((out / "final.csv").read_bytes())
        ok = blobs[0] == blobs[1]
        _note(ok, "9 (determinism): T3 outputs byte-identical across SOLVER_THREADS")
        assert blobs[0] == blobs[1]


class TestSteadinessInvariant:
    def test_single_step_error_ratio(self, case_runner):
        """Final error should stay within 3x the single-step error.

        The bound part of the claim holds.  The 3x ratio cannot hold for
        any correct discretization here: one step after the exactly
        projected data the error is a single increment of drift, while
        the t=5 error is the saturated offset of the nearby discrete
        steady state, reached only after the shock profile relaxes over
        tens of steps.  Kept faithful to its statement; fails with the
        measured ratios.
        """
        ratios = {}
        for name in sorted(ERROR_BOUNDS):
            run = case_runner(name)
            one_step = case_runner(name, t_end=run.case.dt)
            err_one = l2_error(run.grid, one_step.final.values, run.case.exact_u)
            err_final = l2_error(run.grid, run.final.values, run.case.exact_u)
            assert err_final <= ERROR_BOUNDS[name]
            assert err_one <= ERROR_BOUNDS[name]
            ratios[name] = err_final / err_one
        assert max(ratios.values()) <= 3.0, (
            "err(t=5) / err(single step) exceeds the stated 3x: "
            + ", ".join(f"{k}={v:.1f}x" for k, v in ratios.items())
        )
