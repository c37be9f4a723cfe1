"""Command-line driver: run cases, list the catalog, validate grids.

Commands
--------
run       integrate a case (or a custom config) and write snapshots/report
list      print the case catalog (``--json`` for machine-readable output)
validate  grid + compatibility + conservation checks, no time stepping

Configuration is flat ``key=value`` text; command-line flags override file
values.  All numeric parsing is locale independent (decimal point only).
Output files are written to a temporary name and renamed on success, so an
aborted run leaves no partial files.  ``SOLVER_THREADS`` is accepted as an
advisory worker count and echoed in the report; results never depend on it.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import tempfile
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import cases as case_mod
from .cases import case_catalog, get_case, make_initial, project_initial
from .fluxes import (
    FoliatedFluxSpec,
    discrete_divergence_residual,
    get_model,
    make_foliated,
    vertex_potential_scale,
)
from .grid import GridConfigError, SphereGrid, build_grid, dump_grid, validate_grid
from .metrics import l2_error, solution_range, total_mass
from .solver import (
    CellField,
    CentralUpwindOperator,
    NonFiniteStateError,
    SolverConfig,
    integrate,
)

CSV_HEADER = "cell_id,lambda_center,phi_center,phi1,phi2,lambda1,lambda2,area,u"

EXIT_OK = 0
EXIT_CHECKS_FAILED = 1
EXIT_CONFIG = 2
EXIT_SOLVER = 3


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    case: Optional[str] = None
    flux: Optional[str] = None
    initial: Optional[str] = None
    gamma: Optional[float] = None
    a: Optional[tuple] = None
    n_phi: Optional[int] = None
    n_lambda_eq: Optional[int] = None
    coarsening_threshold: float = 0.5
    dt: Optional[float] = None
    t_end: Optional[float] = None
    out: Optional[str] = None
    snapshot_every: int = 0
    solver_threads: int = 1
    resolved: dict = field(default_factory=dict)


def _parse_config_file(path: str) -> dict:
    values = {}
    try:
        text = open(path, encoding="utf-8").read()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key=value, got {raw!r}")
        key, _, val = line.partition("=")
        values[key.strip().replace("-", "_")] = val.strip()
    return values


def _to_float(raw, key):
    try:
        return float(raw)
    except (TypeError, ValueError):
        raise ConfigError(f"{key} must be a number, got {raw!r}") from None


def _to_int(raw, key):
    try:
        return int(str(raw), 10)
    except (TypeError, ValueError):
        raise ConfigError(f"{key} must be an integer, got {raw!r}") from None


def resolve_config(args) -> RunConfig:
    """Merge config file, CLI flags and case defaults into a RunConfig."""
    cfg = RunConfig()
    file_vals = _parse_config_file(args.config) if getattr(args, "config", None) else {}

    def pick(key, flag_val):
        return flag_val if flag_val is not None else file_vals.get(key)

    cfg.case = pick("case", getattr(args, "case", None))
    cfg.flux = pick("flux", None)
    cfg.initial = pick("initial", None)
    raw_gamma = pick("gamma", None)
    cfg.gamma = _to_float(raw_gamma, "gamma") if raw_gamma is not None else None
    if any(k in file_vals for k in ("a1", "a2", "a3")):
        cfg.a = tuple(_to_float(file_vals.get(k, 0.0), k) for k in ("a1", "a2", "a3"))

    raw = pick("n_phi", getattr(args, "n_phi", None))
    cfg.n_phi = _to_int(raw, "n_phi") if raw is not None else None
    raw = pick("n_lambda_eq", getattr(args, "n_lambda_eq", None))
    cfg.n_lambda_eq = _to_int(raw, "n_lambda_eq") if raw is not None else None
    raw = pick("coarsening_threshold", None)
    if raw is not None:
        cfg.coarsening_threshold = _to_float(raw, "coarsening_threshold")
    raw = pick("dt", getattr(args, "dt", None))
    cfg.dt = _to_float(raw, "dt") if raw is not None else None
    raw = pick("t_end", getattr(args, "t_end", None))
    cfg.t_end = _to_float(raw, "t_end") if raw is not None else None
    cfg.out = pick("out", getattr(args, "out", None))
    raw = pick("snapshot_every", getattr(args, "snapshot_every", None))
    cfg.snapshot_every = _to_int(raw, "snapshot_every") if raw is not None else 0
    if cfg.snapshot_every < 0:
        raise ConfigError("snapshot_every must be >= 0")

    env = os.environ.get("SOLVER_THREADS")
    if env is not None:
        cfg.solver_threads = _to_int(env, "SOLVER_THREADS")
        if cfg.solver_threads < 1:
            raise ConfigError("SOLVER_THREADS must be >= 1")

    # fill from the case catalog
    if cfg.case is not None:
        try:
            spec = get_case(cfg.case)
        except KeyError as exc:
            raise ConfigError(str(exc)) from None
        cfg.case = spec.name
        cfg.flux = cfg.flux or spec.flux
        cfg.initial = cfg.initial or spec.initial_key
        if cfg.gamma is None:
            cfg.gamma = spec.gamma
        cfg.n_phi = cfg.n_phi or spec.n_phi
        cfg.n_lambda_eq = cfg.n_lambda_eq or spec.n_lambda_eq
        cfg.dt = cfg.dt if cfg.dt is not None else spec.dt
        cfg.t_end = cfg.t_end if cfg.t_end is not None else spec.t_end
        cfg.out = cfg.out or spec.name.lower()
    else:
        cfg.n_phi = cfg.n_phi or case_mod.PAPER_N_PHI
        cfg.n_lambda_eq = cfg.n_lambda_eq or case_mod.PAPER_N_LAMBDA_EQ

    if cfg.dt is not None and cfg.dt <= 0:
        raise ConfigError(f"dt must be positive, got {cfg.dt}")
    if cfg.t_end is not None and cfg.t_end < 0:
        raise ConfigError(f"t_end must be >= 0, got {cfg.t_end}")

    cfg.resolved = {
        "case": cfg.case,
        "flux": cfg.flux,
        "initial": cfg.initial,
        "gamma": cfg.gamma,
        "a": list(cfg.a) if cfg.a else None,
        "n_phi": cfg.n_phi,
        "n_lambda_eq": cfg.n_lambda_eq,
        "coarsening_threshold": cfg.coarsening_threshold,
        "dt": cfg.dt,
        "t_end": cfg.t_end,
        "out": cfg.out,
        "snapshot_every": cfg.snapshot_every,
        "solver_threads": cfg.solver_threads,
    }
    return cfg


def _resolve_model(cfg: RunConfig):
    if cfg.flux is None:
        raise ConfigError("no flux model: give --case or a flux= config key")
    if cfg.flux == "foliated-custom":
        if cfg.a is None:
            raise ConfigError("flux=foliated-custom needs a1,a2,a3 config keys")
        return make_foliated(FoliatedFluxSpec(a=np.array(cfg.a)), name="foliated-custom")
    try:
        return get_model(cfg.flux)
    except KeyError as exc:
        raise ConfigError(str(exc)) from None


def _resolve_initial(cfg: RunConfig):
    if cfg.initial is None:
        raise ConfigError("no initial data: give --case or an initial= config key")
    try:
        return make_initial(cfg.initial, cfg.gamma)
    except KeyError as exc:
        raise ConfigError(str(exc)) from None


def _atomic_write(path: str, payload: str):
    directory = os.path.dirname(path) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix="~")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(payload)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_field_csv(path: str, grid: SphereGrid, f: CellField):
    """Snapshot CSV: fixed column order, 17 significant digits, LF endings."""
    rows = [CSV_HEADER]
    values = f.values
    for c in grid.cells:
        rows.append(
            f"{c.id},{c.center.lam:.17g},{c.center.phi:.17g},"
            f"{c.phi1:.17g},{c.phi2:.17g},{c.lambda1:.17g},{c.lambda2:.17g},"
            f"{c.area:.17g},{values[c.id]:.17g}"
        )
    _atomic_write(path, "\n".join(rows) + "\n")


def write_report_json(path: str, report_dict: dict):
    _atomic_write(path, json.dumps(report_dict, indent=2, sort_keys=True) + "\n")


def cmd_run(cfg: RunConfig) -> int:
    if cfg.dt is None or cfg.t_end is None:
        raise ConfigError("run needs dt and t_end (from --case, config or flags)")
    out_dir = cfg.out or "run"
    grid = build_grid(cfg.n_phi, cfg.n_lambda_eq, cfg.coarsening_threshold)
    model = _resolve_model(cfg)
    initial_u = _resolve_initial(cfg)
    exact_u = None
    if cfg.case is not None:
        spec = get_case(cfg.case)
        if spec.gamma == cfg.gamma and spec.initial_key == cfg.initial:
            exact_u = spec.exact_u

    field0 = project_initial(grid, initial_u)
    solver_cfg = SolverConfig(dt=cfg.dt, t_end=cfg.t_end)

    os.makedirs(out_dir, exist_ok=True)

    def on_step(step, fld):
        if cfg.snapshot_every and step % cfg.snapshot_every == 0:
            write_field_csv(
                os.path.join(out_dir, f"snap_{step:06d}.csv"), grid, fld
            )

    try:
        final, report = integrate(
            grid, model, field0, solver_cfg,
            on_step=on_step if cfg.snapshot_every else None,
        )
    except NonFiniteStateError as exc:
        print(f"solver aborted at step {exc.step}: {exc}", file=sys.stderr)
        return EXIT_SOLVER

    if exact_u is not None:
        report.l2_error = l2_error(grid, final.values, exact_u)
    report.compat_residual = discrete_divergence_residual(model, grid, 0.37)

    write_field_csv(os.path.join(out_dir, "final.csv"), grid, final)
    report_dict = report.as_dict()
    report_dict["config"] = cfg.resolved
    report_dict["band_layout"] = [
        [b.phi1, b.phi2, b.n_lambda] for b in grid.band_layout
    ]
    write_report_json(os.path.join(out_dir, "report.json"), report_dict)

    drift = abs(report.mass_final - report.mass_initial)
    err = "n/a" if report.l2_error is None else f"{report.l2_error:.6e}"
    print(
        f"{cfg.case or 'custom'}: steps={report.steps} l2_error={err} "
        f"range=[{report.u_min:.6g},{report.u_max:.6g}] mass_drift={drift:.3e} "
        f"cfl~{report.cfl_estimate:.3f} threads={cfg.solver_threads} "
        f"wall={report.wall_seconds:.2f}s -> {out_dir}/final.csv"
    )
    return EXIT_OK


def cmd_list(as_json: bool) -> int:
    catalog = case_catalog()
    if as_json:
        payload = [
            {
                "name": c.name, "flux": c.flux, "initial": c.initial_key,
                "gamma": c.gamma, "n_phi": c.n_phi, "n_lambda_eq": c.n_lambda_eq,
                "dt": c.dt, "t_end": c.t_end, "steady": c.steady,
            }
            for c in catalog
        ]
        print(json.dumps(payload, indent=2))
        return EXIT_OK
    print(f"{'case':<5} {'flux':<14} {'initial':<16} {'gamma':<6} "
          f"{'grid':<9} {'dt':<5} t_end")
    for c in catalog:
        gamma = "-" if c.gamma is None else f"{c.gamma:g}"
        print(
            f"{c.name:<5} {c.flux:<14} {c.initial_key:<16} {gamma:<6} "
            f"{c.n_phi}x{c.n_lambda_eq:<5} {c.dt:<5g} {c.t_end:g}"
        )
    return EXIT_OK


def cmd_validate(cfg: RunConfig, dump_path: Optional[str] = None) -> int:
    grid = build_grid(cfg.n_phi, cfg.n_lambda_eq, cfg.coarsening_threshold)
    if dump_path:
        _atomic_write(dump_path, dump_grid(grid))
        print(f"grid dump written to {dump_path}")
    model = _resolve_model(cfg) if cfg.flux or cfg.case else get_model("foliated-x1")

    failures = []
    report = validate_grid(grid)
    print(f"grid checks: {len(report.violations)} violation(s)")
    for v in report.violations[:20]:
        print(f"  {v}")
    if not report.ok:
        failures.append("grid invariants")

    worst = 0.0
    for u_bar in (-1.0, 0.37, 2.0):
        worst = max(worst, discrete_divergence_residual(model, grid, u_bar))
    print(f"compatibility residual (loop sums): {worst:.3e}")
    if worst > 1e-13:
        failures.append("compatibility residual")

    op = CentralUpwindOperator(grid, model, SolverConfig(dt=1.0, t_end=1.0))
    rhs_const = 0.0
    for u_bar in (-1.0, 0.37, 2.0):
        r = op.rhs_values(np.full(grid.n_cells, u_bar))
        rhs_const = max(rhs_const, float(np.max(np.abs(r))))
    scale = vertex_potential_scale(model, grid, 2.0)
    print(f"constant-field rhs max-norm: {rhs_const:.3e} (scale {scale:.3g})")
    if rhs_const > 1e-13 * scale:
        failures.append("constant-field rhs")

    rng = np.random.default_rng(20240501)
    u = rng.uniform(-1.0, 1.0, grid.n_cells)
    r = op.rhs_values(u)
    absmass = float(np.dot(grid.cell_area, np.abs(r)))
    residual = abs(float(np.dot(grid.cell_area, r))) / max(absmass, 1e-300)
    print(f"conservation residual (random field): {residual:.3e}")
    if residual > 1e-12:
        failures.append("conservation")

    if failures:
        print("FAILED: " + ", ".join(failures))
        return EXIT_CHECKS_FAILED
    print("all checks passed")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="sphereflux",
        description="central-upwind finite volume solver on the unit sphere",
    )
    sub = p.add_subparsers(dest="command", required=True)

    def add_common(sp):
        sp.add_argument("--case", help="benchmark case name (T1..T8)")
        sp.add_argument("--config", help="flat key=value config file")
        sp.add_argument("--n-phi", type=int, dest="n_phi")
        sp.add_argument("--n-lambda-eq", type=int, dest="n_lambda_eq")
        sp.add_argument("--dt", type=float)
        sp.add_argument("--t-end", type=float, dest="t_end")
        sp.add_argument("--out", help="output directory")
        sp.add_argument("--snapshot-every", type=int, dest="snapshot_every",
                        help="write a CSV snapshot every N steps (0 = final only)")

    run_p = sub.add_parser("run", help="integrate a case and write outputs")
    add_common(run_p)

    list_p = sub.add_parser("list", help="print the case catalog")
    list_p.add_argument("--json", action="store_true")

    val_p = sub.add_parser("validate", help="grid/compatibility/conservation checks")
    add_common(val_p)
    val_p.add_argument("--dump-grid", dest="dump_grid",
                       help="write a band-layout/cell-bounds dump to this path")

    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "list":
            return cmd_list(args.json)
        cfg = resolve_config(args)
        if args.command == "run":
            return cmd_run(cfg)
        if args.command == "validate":
            return cmd_validate(cfg, getattr(args, "dump_grid", None))
        raise ConfigError(f"unknown command {args.command!r}")
    except (ConfigError, GridConfigError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
