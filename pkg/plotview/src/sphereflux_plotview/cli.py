"""Command-line entry points: plot a single CSV or a whole run directory."""

from __future__ import annotations

import argparse
import sys

from .csvio import SchemaError
from .render import PlotSpec, render, render_batch


def _plot_parser():
    p = argparse.ArgumentParser(
        prog="sphereflux-plot",
        description="render one sphereflux snapshot CSV as an orthographic PNG",
    )
    p.add_argument("--in", dest="input_csv", required=True)
    p.add_argument("--out", dest="output_png", required=True)
    p.add_argument("--view-lon", type=float, default=0.0, help="camera longitude, deg")
    p.add_argument("--view-lat", type=float, default=0.0, help="camera latitude, deg")
    p.add_argument("--vmin", type=float)
    p.add_argument("--vmax", type=float)
    p.add_argument("--cmap", default="viridis")
    p.add_argument("--title", default="")
    p.add_argument("--no-colorbar", action="store_true")
    return p


def main_plot(argv=None) -> int:
    args = _plot_parser().parse_args(argv)
    spec = PlotSpec(
        input_csv=args.input_csv,
        output_png=args.output_png,
        view_lon=args.view_lon,
        view_lat=args.view_lat,
        colormap=args.cmap,
        vmin=args.vmin,
        vmax=args.vmax,
        title=args.title,
        colorbar=not args.no_colorbar,
    )
    try:
        render(spec)
    except SchemaError as exc:
        print(f"schema error ({exc.column}): {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {spec.output_png}")
    return 0


def _batch_parser():
    p = argparse.ArgumentParser(
        prog="sphereflux-plot-batch",
        description="render every snapshot CSV in a run directory",
    )
    p.add_argument("--dir", dest="directory", required=True)
    p.add_argument("--view-lon", type=float, default=0.0)
    p.add_argument("--view-lat", type=float, default=0.0)
    p.add_argument("--vmin", type=float)
    p.add_argument("--vmax", type=float)
    p.add_argument("--cmap", default="viridis")
    return p


def main_batch(argv=None) -> int:
    args = _batch_parser().parse_args(argv)
    result = render_batch(
        args.directory,
        view_lon=args.view_lon,
        view_lat=args.view_lat,
        vmin=args.vmin,
        vmax=args.vmax,
        colormap=args.cmap,
    )
    print(f"rendered {len(result.rendered)} file(s), {len(result.failed)} failure(s)")
    for path, msg in result.failed:
        print(f"  failed {path}: {msg}", file=sys.stderr)
    return 0 if result.ok else 1


def main(argv=None) -> int:
    """Dispatcher for ``python -m sphereflux_plotview {plot,plot-batch} ...``."""
    argv = sys.argv[1:] if argv is None else argv
    if not argv or argv[0] not in ("plot", "plot-batch"):
        print("usage: sphereflux_plotview {plot,plot-batch} [options]",
              file=sys.stderr)
        return 2
    if argv[0] == "plot":
        return main_plot(argv[1:])
    return main_batch(argv[1:])
