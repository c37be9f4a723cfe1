"""Fixtures: snapshot CSVs produced through the solver's own CLI."""

import subprocess
import sys

import pytest

from sphereflux_plotview.csvio import EXPECTED_HEADER


def run_solver(args):
    proc = subprocess.run(
        [sys.executable, "-m", "sphereflux.cli"] + args,
        capture_output=True, text=True,
    )
    assert proc.returncode == 0, proc.stderr
    return proc


@pytest.fixture(scope="session")
def t1_final_csv(tmp_path_factory):
    out = tmp_path_factory.mktemp("t1run")
    run_solver(["run", "--case", "T1", "--t-end", "0.2", "--out", str(out)])
    return out / "final.csv"


@pytest.fixture(scope="session")
def t7_run_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("t7run")
    run_solver([
        "run", "--case", "T7", "--n-phi", "24", "--n-lambda-eq", "48",
        "--t-end", "0.6", "--snapshot-every", "5", "--out", str(out),
    ])
    return out


def write_csv(path, rows):
    """Write a synthetic snapshot CSV from (id, lam_c, phi_c, p1, p2, l1, l2, area, u)."""
    lines = [EXPECTED_HEADER]
    for row in rows:
        lines.append(",".join(f"{v:.17g}" if i else str(int(v))
                              for i, v in enumerate(row)))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def cell_row(cid, lam1, lam2, phi1, phi2, u):
    import math

    lam_c = 0.5 * (lam1 + lam2)
    phi_c = 0.5 * (phi1 + phi2)
    area = (lam2 - lam1) * (math.sin(phi2) - math.sin(phi1))
    return (cid, lam_c, phi_c, phi1, phi2, lam1, lam2, area, u)
