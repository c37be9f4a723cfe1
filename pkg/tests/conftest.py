"""Shared fixtures: grids and cached full-case runs for the suite."""

import numpy as np
import pytest

from sphereflux import (
    CentralUpwindOperator,
    SolverConfig,
    build_grid,
    get_case,
    get_model,
    integrate,
    project_initial,
)

_ACCEPTANCE_LINES = []


def record_acceptance(line: str):
    _ACCEPTANCE_LINES.append(line)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def paper_grid():
    return build_grid(96, 192, 0.5)


@pytest.fixture(scope="session")
def small_grid():
    return build_grid(12, 24, 0.5)


@pytest.fixture(scope="session")
def tiny_grid():
    return build_grid(2, 4, 0.0)


class CaseRun:
    def __init__(self, grid, model, case, initial, final, report, inside_history):
        self.grid = grid
        self.model = model
        self.case = case
        self.initial = initial
        self.final = final
        self.report = report
        # per-step max |u| over cells strictly inside {x1 > 0}
        self.inside_history = inside_history


def _cells_strictly_inside_x1(grid):
    from sphereflux.geometry import unit_sphere_point

    mins = np.empty(grid.n_cells)
    for c in grid.cells:
        lams = np.array([c.lambda1, c.lambda2, c.lambda1, c.lambda2])
        phis = np.array([c.phi1, c.phi1, c.phi2, c.phi2])
        mins[c.id] = unit_sphere_point(lams, phis)[:, 0].min()
    return mins > 0.0


@pytest.fixture(scope="session")
def case_runner(paper_grid):
    """Memoized full-case runs on the paper grid (shared across criteria)."""
    cache = {}
    inside_mask = {}

    def run(name, t_end=None):
        key = (name, t_end)
        if key in cache:
            return cache[key]
        case = get_case(name)
        grid = paper_grid
        model = get_model(case.flux)
        f0 = project_initial(grid, case.initial_u)
        cfg = SolverConfig(dt=case.dt, t_end=case.t_end if t_end is None else t_end)

        history = None
        on_step = None
        if case.flux == "confined-x1":
            if "mask" not in inside_mask:
                inside_mask["mask"] = _cells_strictly_inside_x1(grid)
            mask = inside_mask["mask"]
            history = []

            def on_step(step, fld):
                history.append(float(np.max(np.abs(fld.values[mask]))))

        final, report = integrate(grid, model, f0, cfg, on_step=on_step)
        result = CaseRun(grid, model, case, f0, final, report, history)
        cache[key] = result
        return result

    run.inside_mask = lambda: inside_mask.setdefault(
        "mask", _cells_strictly_inside_x1(paper_grid)
    )
    return run
