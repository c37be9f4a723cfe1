"""Strict reader for sphereflux field snapshot CSVs."""

from __future__ import annotations

import numpy as np

EXPECTED_HEADER = "cell_id,lambda_center,phi_center,phi1,phi2,lambda1,lambda2,area,u"
COLUMNS = EXPECTED_HEADER.split(",")


class SchemaError(ValueError):
    """CSV does not match the snapshot schema; carries the offending column."""

    def __init__(self, msg, column=None):
        super().__init__(msg)
        self.column = column


def read_field_csv(path):
    """Parse a snapshot CSV into a dict of named numpy columns.

    Raises SchemaError naming the first offending column when the header
    deviates, a row has the wrong arity, or a value fails to parse.
    An empty table (header only) is also a schema error: there is
    nothing to render.
    """
    with open(path, encoding="utf-8") as fh:
        lines = fh.read().split("\n")
    header = lines[0].rstrip("\r") if lines else ""
    got = header.split(",")
    if header != EXPECTED_HEADER:
        for i, want in enumerate(COLUMNS):
            if i >= len(got) or got[i] != want:
                bad = got[i] if i < len(got) else "<missing>"
                raise SchemaError(
                    f"{path}: header column {i} is {bad!r}, expected {want!r}",
                    column=want,
                )
        raise SchemaError(f"{path}: trailing header columns {got[len(COLUMNS):]!r}")

    rows = []
    for lineno, line in enumerate(lines[1:], 2):
        if not line:
            continue
        parts = line.split(",")
        if len(parts) != len(COLUMNS):
            raise SchemaError(
                f"{path}:{lineno}: expected {len(COLUMNS)} fields, got {len(parts)}",
                column=COLUMNS[min(len(parts), len(COLUMNS) - 1)],
            )
        try:
            rows.append([float(v) for v in parts])
        except ValueError as exc:
            bad = next(
                (c for c, v in zip(COLUMNS, parts) if not _is_number(v)), COLUMNS[0]
            )
            raise SchemaError(f"{path}:{lineno}: bad value in column {bad!r}: {exc}",
                              column=bad) from None

    if not rows:
        raise SchemaError(f"{path}: no data rows", column="u")
    data = np.array(rows)
    return {name: data[:, i] for i, name in enumerate(COLUMNS)}


def _is_number(s):
    try:
        float(s)
        return True
    except ValueError:
        return False
