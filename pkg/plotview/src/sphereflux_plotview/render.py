"""Orthographic hemisphere rendering of snapshot CSVs.

Each cell is drawn as the flat polygon of its projected corners (pole
cells collapse to triangles); cells whose center points away from the
camera are culled entirely, so the far hemisphere never contributes
pixels.  Inputs are opened read-only and never modified.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass
from typing import Optional

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np
from matplotlib.collections import PolyCollection

from .csvio import SchemaError, read_field_csv


@dataclass
class PlotSpec:
    input_csv: str
    output_png: str
    view_lon: float = 0.0   # camera direction, degrees
    view_lat: float = 0.0
    colormap: str = "viridis"
    vmin: Optional[float] = None
    vmax: Optional[float] = None
    title: str = ""
    colorbar: bool = True
    dpi: int = 150


def _unit(lon_rad, lat_rad):
    return np.stack(
        [
            np.cos(lat_rad) * np.cos(lon_rad),
            np.cos(lat_rad) * np.sin(lon_rad),
            np.sin(lat_rad) + np.zeros_like(np.asarray(lon_rad, dtype=float)),
        ],
        axis=-1,
    )


def _camera(view_lon_deg, view_lat_deg):
    lon = math.radians(view_lon_deg)
    lat = math.radians(view_lat_deg)
    fwd = np.array(
        [math.cos(lat) * math.cos(lon), math.cos(lat) * math.sin(lon), math.sin(lat)]
    )
    right = np.array([-math.sin(lon), math.cos(lon), 0.0])
    up = np.cross(fwd, right)  # the north tangent: image-up
    return fwd, right, up


def render(spec: PlotSpec) -> str:
    """Render one snapshot to PNG; returns the output path.

    Raises SchemaError for malformed input; no output file is written in
    that case.
    """
    table = read_field_csv(spec.input_csv)
    fwd, right, up = _camera(spec.view_lon, spec.view_lat)

    centers = _unit(table["lambda_center"], table["phi_center"])
    visible = centers @ fwd >= 0.0

    lam1, lam2 = table["lambda1"], table["lambda2"]
    phi1, phi2 = table["phi1"], table["phi2"]
    corners = np.stack(
        [
            _unit(lam1, phi1),
            _unit(lam2, phi1),
            _unit(lam2, phi2),
            _unit(lam1, phi2),
        ],
        axis=1,
    )  # (n, 4, 3)
    xy = np.stack([corners @ right, corners @ up], axis=-1)

    u = table["u"]
    vmin = spec.vmin if spec.vmin is not None else float(np.min(u))
    vmax = spec.vmax if spec.vmax is not None else float(np.max(u))
    if vmin == vmax:  # constant field: pad so the colormap stays usable
        vmin, vmax = vmin - 1.0, vmax + 1.0

    fig, ax = plt.subplots(figsize=(6.4, 5.6))
    # antialiasing off: hairline seams between adjacent quads would let the
    # background bleed through and break flat color bands
    coll = PolyCollection(
        xy[visible], array=u[visible], cmap=spec.colormap,
        edgecolors="none", antialiaseds=False,
    )
    coll.set_clim(vmin, vmax)
    ax.add_collection(coll)
    theta = np.linspace(0, 2 * math.pi, 256)
    ax.plot(np.cos(theta), np.sin(theta), color="0.3", linewidth=0.6)
    ax.set_xlim(-1.05, 1.05)
    ax.set_ylim(-1.05, 1.05)
    ax.set_aspect("equal")
    ax.axis("off")
    if spec.title:
        ax.set_title(spec.title)
    if spec.colorbar:
        fig.colorbar(coll, ax=ax, shrink=0.85, label="u")
    fig.savefig(spec.output_png, dpi=spec.dpi, bbox_inches="tight")
    plt.close(fig)
    return spec.output_png


@dataclass
class BatchResult:
    rendered: list
    failed: list  # (path, message) pairs

    @property
    def ok(self) -> bool:
        return not self.failed


def render_batch(directory: str, **defaults) -> BatchResult:
    """Render every snapshot CSV in a run directory, continuing on error.

    Output PNGs sit next to their inputs, named by the CSV stem.  Returns
    which files rendered and which failed with what message.
    """
    result = BatchResult([], [])
    names = sorted(n for n in os.listdir(directory) if n.endswith(".csv"))
    for name in names:
        src = os.path.join(directory, name)
        dst = os.path.join(directory, os.path.splitext(name)[0] + ".png")
        try:
            render(PlotSpec(input_csv=src, output_png=dst, **defaults))
            result.rendered.append(dst)
        except SchemaError as exc:
            result.failed.append((src, str(exc)))
    return result
