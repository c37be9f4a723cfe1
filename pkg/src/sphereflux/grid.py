"""Latitude-longitude sphere grid with ratio-2 longitudinal coarsening.

The sphere is covered by ``n_phi`` uniform latitude bands.  Bands touching
the equator carry ``n_lambda_eq`` cells; moving poleward the per-band cell
count halves whenever the cell arc width at the band's poleward boundary
would drop below ``threshold`` times the equatorial width, provided the
halved cells would not become wider than an equatorial cell.  That cap is
what stops the cascade at the poles, where the poleward width is zero no
matter how few cells remain.

Coarse/fine interfaces are represented with hanging nodes: the coarse
cell's side facing a finer band is stored as two edges, one per fine
neighbor, so every edge has exactly one cell on each side and the per-edge
scheme needs no special casing.  Pole-adjacent cells carry one degenerate
zero-length side at the pole.

Geometry (areas, centers, edge lengths) comes from closed forms only;
the discrete compatibility checks depend on cell boundaries closing
exactly, so shared vertices are constructed from identical floating-point
longitude/latitude values everywhere they appear.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple, Optional

import numpy as np

from .geometry import (
    HALF_PI,
    TWO_PI,
    SphericalCoord,
    east_vectors,
    north_vectors,
    unit_sphere_point,
    wrap_longitude,
)

LATITUDE_ARC = "latitude-arc"
MERIDIAN_ARC = "meridian-arc"


class GridConfigError(ValueError):
    """Invalid grid construction parameters."""


class Band(NamedTuple):
    """One latitude band: south/north bounds and its longitudinal cell count."""

    phi1: float
    phi2: float
    n_lambda: int


@dataclass(frozen=True)
class Cell:
    id: int
    lambda1: float
    lambda2: float
    phi1: float
    phi2: float
    area: float
    center: SphericalCoord
    edge_ids: tuple  # counterclockwise as seen from outside the sphere


@dataclass(frozen=True)
class Edge:
    """Oriented cell interface.

    ``e1``/``e2`` are the endpoints in the left cell's traversal sense:
    walking e1 -> e2 with the left cell's outward normal ``nu``, the walk
    direction is n x nu.  The right cell traverses the same edge reversed.
    Degenerate pole edges have coincident endpoints, zero length,
    ``right_cell`` None and no normal.
    """

    id: int
    e1: np.ndarray
    e2: np.ndarray
    midpoint: SphericalCoord
    length: float
    kind: str
    left_cell: int
    right_cell: Optional[int]
    normal_from_left: Optional[np.ndarray]

    @property
    def is_degenerate(self) -> bool:
        return self.right_cell is None


@dataclass
class ValidationReport:
    violations: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def add(self, msg: str):
        self.violations.append(msg)


def cell_center_phi(phi1: float, phi2: float) -> float:
    """Area-centroid latitude of a band cell.

    This is the latitude about which the first moment of (phi - phi_c)
    vanishes under the cos(phi) area weight, which is what makes the
    piecewise-linear reconstruction conservative.
    """
    if phi1 == phi2:
        raise ValueError(f"degenerate cell: phi1 == phi2 == {phi1!r}")
    s1, s2 = math.sin(phi1), math.sin(phi2)
    return (phi2 * s2 - phi1 * s1 + math.cos(phi2) - math.cos(phi1)) / (s2 - s1)


def cell_center(c: Cell) -> SphericalCoord:
    """Reconstruction point of a cell: longitude midpoint, centroid latitude."""
    lam = wrap_longitude(0.5 * (c.lambda1 + c.lambda2))
    return SphericalCoord(float(lam), cell_center_phi(c.phi1, c.phi2))


def _band_counts(n_phi: int, n_lambda_eq: int, threshold: float) -> list:
    """Cell count per band for one hemisphere, equator outward."""
    half = n_phi // 2
    dphi = math.pi / n_phi
    counts = []
    n = n_lambda_eq
    for p in range(half):
        phi_near = p * dphi
        phi_far = (p + 1) * dphi
        while (
            (n_lambda_eq / n) * math.cos(phi_far) < threshold
            and 2.0 * (n_lambda_eq / n) * math.cos(phi_near) <= 1.0
        ):
            if n % 2:
                raise GridConfigError(
                    f"n_lambda_eq={n_lambda_eq} cannot be halved at band {p}: "
                    f"count {n} is odd"
                )
            n //= 2
        counts.append(n)
    return counts


class SphereGrid:
    """Immutable cell/edge topology of the discretized sphere.

    Construction is single-threaded; once built the grid is shared
    read-only.  Besides the per-cell / per-edge records it carries flat
    numpy arrays (areas, center coordinates, band indexing) that the
    solver's vectorized assembly uses directly.
    """

    def __init__(self, cells, edges, band_layout, n_phi, n_lambda_eq, threshold):
        self.cells = cells
        self.edges = edges
        self.band_layout = band_layout
        self.n_phi = n_phi
        self.n_lambda_eq = n_lambda_eq
        self.threshold = threshold

        self.n_cells = len(cells)
        self.n_edges = len(edges)
        self.band_start = np.cumsum([0] + [b.n_lambda for b in band_layout])[:-1]
        self.cell_area = np.array([c.area for c in cells])
        self.cell_lam = np.array([c.center.lam for c in cells])
        self.cell_phi = np.array([c.center.phi for c in cells])
        self.cell_band = np.repeat(
            np.arange(len(band_layout)), [b.n_lambda for b in band_layout]
        )
        self.total_area = float(self.cell_area.sum())

        # flat per-edge arrays for vectorized assembly (degenerate edges
        # carry right=-1 and a zero normal and are skipped by the solver)
        ne = len(edges)
        self.edge_left = np.fromiter((e.left_cell for e in edges), int, ne)
        self.edge_right = np.fromiter(
            (-1 if e.right_cell is None else e.right_cell for e in edges), int, ne
        )
        self.edge_length = np.fromiter((e.length for e in edges), float, ne)
        self.edge_mid_lam = np.fromiter((e.midpoint.lam for e in edges), float, ne)
        self.edge_mid_phi = np.fromiter((e.midpoint.phi for e in edges), float, ne)
        self.edge_e1 = np.stack([e.e1 for e in edges])
        self.edge_e2 = np.stack([e.e2 for e in edges])
        self.edge_normal = np.stack(
            [np.zeros(3) if e.normal_from_left is None else e.normal_from_left
             for e in edges]
        )

    def band_center_phi(self, b: int) -> float:
        band = self.band_layout[b]
        return cell_center_phi(band.phi1, band.phi2)

    def cell_vertices(self) -> np.ndarray:
        """Cartesian corner points of all cells, stacked (may repeat)."""
        lams, phis = [], []
        for c in self.cells:
            lams += [c.lambda1, c.lambda2, c.lambda2, c.lambda1]
            phis += [c.phi1, c.phi1, c.phi2, c.phi2]
        return unit_sphere_point(np.array(lams), np.array(phis))


def build_grid(
    n_phi: int, n_lambda_eq: int, coarsening_ratio_threshold: float = 0.5
) -> SphereGrid:
    """Build the coarsened latitude-longitude grid.

    Parameters
    ----------
    n_phi
        Number of uniform latitude bands (even, >= 2).
    n_lambda_eq
        Cells per band at the equator; must be divisible by two once per
        coarsening circle encountered on the way to the pole.
    coarsening_ratio_threshold
        Halving trigger in units of the equatorial cell width, in [0, 1].
        0 disables coarsening entirely.
    """
    if n_phi < 2 or n_phi % 2:
        raise GridConfigError(f"n_phi must be even and >= 2, got {n_phi}")
    if n_lambda_eq < 1:
        raise GridConfigError(f"n_lambda_eq must be positive, got {n_lambda_eq}")
    if not 0.0 <= coarsening_ratio_threshold <= 1.0:
        raise GridConfigError(
            "coarsening_ratio_threshold must be in [0, 1], got "
            f"{coarsening_ratio_threshold}"
        )

    half = n_phi // 2
    hemi = _band_counts(n_phi, n_lambda_eq, coarsening_ratio_threshold)
    counts = hemi[::-1] + hemi  # south pole .. equator .. north pole
    bounds = np.linspace(-HALF_PI, HALF_PI, n_phi + 1)
    bands = [Band(float(bounds[b]), float(bounds[b + 1]), counts[b]) for b in range(n_phi)]

    band_start = np.cumsum([0] + [b.n_lambda for b in bands])[:-1]

    # --- edges ------------------------------------------------------------
    edges = []

    def point(lam, phi):
        return unit_sphere_point(lam, phi)

    # meridian edges, per band: index [band][i] -> edge id
    meridian_ids = []
    for b, band in enumerate(bands):
        n = band.n_lambda
        dlam = TWO_PI / n
        ids = []
        phi_mid = 0.5 * (band.phi1 + band.phi2)
        for i in range(n):
            lam = (i % n) * dlam
            eid = len(edges)
            mid = SphericalCoord(lam, phi_mid)
            edges.append(
                Edge(
                    id=eid,
                    e1=point(lam, band.phi1),
                    e2=point(lam, band.phi2),
                    midpoint=mid,
                    length=band.phi2 - band.phi1,
                    kind=MERIDIAN_ARC,
                    left_cell=int(band_start[b] + (i - 1) % n),
                    right_cell=int(band_start[b] + i),
                    normal_from_left=east_vectors(mid.lam, mid.phi),
                )
            )
            ids.append(eid)
        meridian_ids.append(ids)

    # latitude edges at interior circles: index [circle][k] -> edge id
    circle_ids = []
    for b in range(n_phi - 1):
        n_s, n_n = bands[b].n_lambda, bands[b + 1].n_lambda
        if n_s != n_n and n_s != 2 * n_n and n_n != 2 * n_s:
            raise GridConfigError(
                f"bands {b},{b + 1} have incompatible counts {n_s},{n_n}"
            )
        m = max(n_s, n_n)
        dlam = TWO_PI / m
        phi = bands[b].phi2
        cphi = math.cos(phi)
        ids = []
        for k in range(m):
            south = int(band_start[b] + (k if n_s == m else k // 2))
            north = int(band_start[b + 1] + (k if n_n == m else k // 2))
            eid = len(edges)
            mid = SphericalCoord((k + 0.5) * dlam, phi)
            edges.append(
                Edge(
                    id=eid,
                    e1=point(((k + 1) % m) * dlam, phi),
                    e2=point((k % m) * dlam, phi),
                    midpoint=mid,
                    length=dlam * cphi,
                    kind=LATITUDE_ARC,
                    left_cell=south,
                    right_cell=north,
                    normal_from_left=north_vectors(mid.lam, mid.phi),
                )
            )
            ids.append(eid)
        circle_ids.append(ids)

    # degenerate pole edges, one per pole-adjacent cell
    south_pole_ids, north_pole_ids = [], []
    for pole_band, store, phi_pole in (
        (0, south_pole_ids, -HALF_PI),
        (n_phi - 1, north_pole_ids, HALF_PI),
    ):
        n = bands[pole_band].n_lambda
        dlam = TWO_PI / n
        pole = point(0.0, phi_pole)
        for i in range(n):
            eid = len(edges)
            edges.append(
                Edge(
                    id=eid,
                    e1=pole,
                    e2=pole,
                    midpoint=SphericalCoord((i + 0.5) * dlam, phi_pole),
                    length=0.0,
                    kind=LATITUDE_ARC,
                    left_cell=int(band_start[pole_band] + i),
                    right_cell=None,
                    normal_from_left=None,
                )
            )
            store.append(eid)

    # --- cells ------------------------------------------------------------
    cells = []
    for b, band in enumerate(bands):
        n = band.n_lambda
        dlam = TWO_PI / n
        phi_c = cell_center_phi(band.phi1, band.phi2)
        dsin = math.sin(band.phi2) - math.sin(band.phi1)
        for i in range(n):
            cid = int(band_start[b] + i)
            # south side, west -> east
            if b == 0:
                south = [south_pole_ids[i]]
            elif bands[b - 1].n_lambda == 2 * n:
                south = [circle_ids[b - 1][2 * i], circle_ids[b - 1][2 * i + 1]]
            else:
                south = [circle_ids[b - 1][i]]
            # north side, east -> west
            if b == n_phi - 1:
                north = [north_pole_ids[i]]
            elif bands[b + 1].n_lambda == 2 * n:
                north = [circle_ids[b][2 * i + 1], circle_ids[b][2 * i]]
            else:
                north = [circle_ids[b][i]]
            edge_ids = tuple(
                south + [meridian_ids[b][(i + 1) % n]] + north + [meridian_ids[b][i]]
            )
            lam1 = i * dlam
            lam2 = (i + 1) * dlam
            cells.append(
                Cell(
                    id=cid,
                    lambda1=lam1,
                    lambda2=lam2,
                    phi1=band.phi1,
                    phi2=band.phi2,
                    area=(lam2 - lam1) * dsin,
                    center=SphericalCoord(0.5 * (lam1 + lam2), phi_c),
                    edge_ids=edge_ids,
                )
            )

    return SphereGrid(cells, edges, bands, n_phi, n_lambda_eq, coarsening_ratio_threshold)


def oriented_endpoints(grid: SphereGrid, cell_id: int, edge: Edge):
    """Edge endpoints in ``cell_id``'s own traversal sense."""
    if edge.left_cell == cell_id:
        return edge.e1, edge.e2
    if edge.right_cell == cell_id:
        return edge.e2, edge.e1
    raise ValueError(f"edge {edge.id} is not adjacent to cell {cell_id}")


def validate_grid(grid: SphereGrid) -> ValidationReport:
    """Check the structural invariants of a built grid.

    Returns a report listing violations with the offending cell/edge ids;
    an empty report means the grid is sound.
    """
    rep = ValidationReport()

    if abs(grid.total_area - 4.0 * math.pi) > 1e-12 * 4.0 * math.pi:
        rep.add(f"total area {grid.total_area!r} differs from 4*pi")

    # band layout: equal widths inside a band, exact halving across circles
    for b in range(len(grid.band_layout) - 1):
        n1 = grid.band_layout[b].n_lambda
        n2 = grid.band_layout[b + 1].n_lambda
        if n1 != n2 and n1 != 2 * n2 and n2 != 2 * n1:
            rep.add(f"bands {b},{b + 1}: counts {n1},{n2} not equal or 2:1")

    for c in grid.cells:
        if not c.lambda1 < c.lambda2:
            rep.add(f"cell {c.id}: lambda bounds not increasing")
        if not c.phi1 < c.phi2:
            rep.add(f"cell {c.id}: phi bounds not increasing")
        area = (c.lambda2 - c.lambda1) * (math.sin(c.phi2) - math.sin(c.phi1))
        if abs(area - c.area) > 1e-14 * max(area, 1e-300):
            rep.add(f"cell {c.id}: stored area {c.area!r} != {area!r}")
        lam_c = 0.5 * (c.lambda1 + c.lambda2)
        if abs(c.center.lam - lam_c) > 1e-14 and abs(
            c.center.lam - wrap_longitude(lam_c)
        ) > 1e-14:
            rep.add(f"cell {c.id}: center longitude off midpoint")
        if abs(c.center.phi - cell_center_phi(c.phi1, c.phi2)) > 1e-14:
            rep.add(f"cell {c.id}: center latitude off centroid")
        if len(c.edge_ids) < 3:
            rep.add(f"cell {c.id}: fewer than 3 sides")

        # adjacency and traversal closure
        prev_end = None
        first_start = None
        for eid in c.edge_ids:
            e = grid.edges[eid]
            if c.id not in (e.left_cell, e.right_cell):
                rep.add(f"cell {c.id}: edge {eid} does not list it as adjacent")
                continue
            p1, p2 = oriented_endpoints(grid, c.id, e)
            if first_start is None:
                first_start = p1
            if prev_end is not None and not np.array_equal(prev_end, p1):
                if float(np.linalg.norm(prev_end - p1)) > 1e-13:
                    rep.add(f"cell {c.id}: boundary breaks before edge {eid}")
            prev_end = p2
        if prev_end is not None and first_start is not None:
            if float(np.linalg.norm(prev_end - first_start)) > 1e-13:
                rep.add(f"cell {c.id}: boundary does not close")

    pole_bands = (0, len(grid.band_layout) - 1)
    for c in grid.cells:
        b = int(grid.cell_band[c.id])
        n_deg = sum(1 for eid in c.edge_ids if grid.edges[eid].is_degenerate)
        want = 1 if b in pole_bands else 0
        if n_deg != want:
            rep.add(f"cell {c.id}: {n_deg} degenerate sides, expected {want}")

    for e in grid.edges:
        if e.length < 0:
            rep.add(f"edge {e.id}: negative length")
        if e.is_degenerate:
            if e.length != 0.0 or not np.array_equal(e.e1, e.e2):
                rep.add(f"edge {e.id}: degenerate edge with extent")
            continue
        if e.left_cell == e.right_cell:
            rep.add(f"edge {e.id}: identical cells on both sides")
        for cid in (e.left_cell, e.right_cell):
            if e.id not in grid.cells[cid].edge_ids:
                rep.add(f"edge {e.id}: missing from cell {cid}'s edge list")
        nrm = e.normal_from_left
        if abs(float(nrm @ nrm) - 1.0) > 1e-13:
            rep.add(f"edge {e.id}: normal not unit length")
        mid_xyz = unit_sphere_point(e.midpoint.lam, e.midpoint.phi)
        if abs(float(nrm @ mid_xyz)) > 1e-13:
            rep.add(f"edge {e.id}: normal not tangent to sphere")
        chord = e.e2 - e.e1
        norm = float(np.linalg.norm(chord))
        if norm > 0 and abs(float(nrm @ chord)) / norm > 1e-10:
            rep.add(f"edge {e.id}: normal not orthogonal to edge direction")

    return rep


def dump_grid(grid: SphereGrid) -> str:
    """Human-readable band layout and per-cell bounds (debug aid)."""
    lines = [
        f"# n_phi={grid.n_phi} n_lambda_eq={grid.n_lambda_eq} "
        f"threshold={grid.threshold} cells={grid.n_cells} edges={grid.n_edges}"
    ]
    for b, band in enumerate(grid.band_layout):
        lines.append(
            f"band {b}: phi1={band.phi1:+.12f} phi2={band.phi2:+.12f} "
            f"n_lambda={band.n_lambda}"
        )
    for c in grid.cells:
        lines.append(
            f"cell {c.id}: lam=[{c.lambda1:.12f},{c.lambda2:.12f}] "
            f"phi=[{c.phi1:+.12f},{c.phi2:+.12f}] area={c.area:.12e} "
            f"sides={len(c.edge_ids)}"
        )
    return "\n".join(lines) + "\n"
