"""Render paper-style spectra from softwall CSV outputs.

Four figure kinds are supported: spectrum_vs_t (grey bulk states, red edge
curves), spectrum_vs_k2 (one edge CSV per momentum), wall_spectrum (all
eigenvalue branches of a wall-only run) and bands2d_projection (grey band
shadow versus the conserved momentum).  Rendering is read-only over the
CSVs and uses the fixed style table, so re-running overwrites the image
deterministically.
"""

from __future__ import annotations

import glob
import os
from dataclasses import dataclass, field

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from . import style

KINDS = ("spectrum_vs_t", "spectrum_vs_k2", "wall_spectrum", "bands2d_projection")


class RenderError(Exception):
    pass


@dataclass
class FigureSpec:
    kind: str
    csv: str
    out: str
    csv2: str | None = None
    ylim: tuple[float, float] | None = None
    xlim: tuple[float, float] | None = None
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise RenderError(f"unknown figure kind {self.kind!r}")


def read_table(path, required: tuple[str, ...]) -> tuple[dict, dict]:
    """Read a softwall CSV: '#' metadata lines, a header row, float columns."""
    meta = {}
    header = None
    rows = []
    try:
        with open(path) as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                if line.startswith("#"):
                    text = line.lstrip("# ").strip()
                    if "=" in text:
                        key, _, value = text.rpartition("=")
                        meta[key.strip().split()[-1]] = value.strip()
                    continue
                if header is None:
                    header = line.split(",")
                    continue
                rows.append([float(x) for x in line.split(",")])
    except OSError as exc:
        raise RenderError(f"cannot read {path}: {exc}") from exc
    if header is None or not rows:
        raise RenderError(f"{path} has no data rows")
    missing = [col for col in required if col not in header]
    if missing:
        raise RenderError(f"{path} lacks required columns {missing}")
    data = np.array(rows)
    columns = {name: data[:, i] for i, name in enumerate(header)}
    return columns, meta


def read_gaps(path) -> list[tuple[float, float]]:
    import json

    try:
        with open(path) as fh:
            payload = json.load(fh)
    except (OSError, ValueError) as exc:
        raise RenderError(f"cannot read gap catalog {path}: {exc}") from exc
    return [(float(lo), float(hi)) for lo, hi in payload.get("bands", [])]


def _new_axes(spec: FigureSpec):
    fig = plt.figure(figsize=style.FIGSIZE, dpi=style.DPI)
    ax = fig.add_axes(style.AXES_RECT)
    if spec.ylim is not None:
        ax.set_ylim(*spec.ylim)
    if spec.xlim is not None:
        ax.set_xlim(*spec.xlim)
    return fig, ax


def _save(fig, out):
    fig.savefig(out, metadata={"Software": "render_figs"})
    plt.close(fig)


def _shade_bands(ax, bands, xlo, xhi):
    for lo, hi in bands:
        ax.fill_between([xlo, xhi], [lo, lo], [hi, hi],
                        color=style.BULK_SHADE, zorder=0, linewidth=0)


def render_spectrum_vs_t(spec: FigureSpec) -> str:
    cols, _ = read_table(spec.csv, ("t", "eigenvalue", "is_edge"))
    fig, ax = _new_axes(spec)
    ts = cols["t"]
    if spec.csv2:
        _shade_bands(ax, read_gaps(spec.csv2), float(ts.min()), float(ts.max()))
    edge = cols["is_edge"] > 0.5
    ax.plot(ts[~edge], cols["eigenvalue"][~edge], ".",
            color=style.BULK_COLOR, markersize=style.BULK_MARKER_SIZE, zorder=1)
    ax.plot(ts[edge], cols["eigenvalue"][edge], ".",
            color=style.EDGE_COLOR, markersize=style.EDGE_MARKER_SIZE, zorder=2)
    ax.set_xlabel("t")
    ax.set_ylabel("energy")
    _save(fig, spec.out)
    return spec.out


def render_wall_spectrum(spec: FigureSpec) -> str:
    cols, _ = read_table(spec.csv, ("t", "eigenvalue"))
    fig, ax = _new_axes(spec)
    ax.plot(cols["t"], cols["eigenvalue"], ".",
            color=style.BULK_COLOR, markersize=style.BULK_MARKER_SIZE)
    ax.set_xlabel("t")
    ax.set_ylabel("energy")
    _save(fig, spec.out)
    return spec.out


def render_spectrum_vs_k2(spec: FigureSpec) -> str:
    paths = sorted(glob.glob(os.path.join(spec.csv, "edge_k2_*.csv"))
                   if os.path.isdir(spec.csv) else glob.glob(spec.csv))
    if not paths:
        raise RenderError(f"no edge_k2 CSV files match {spec.csv}")
    k2s, bulk_pts, edge_pts = [], [], []
    for path in paths:
        cols, meta = read_table(path, ("t", "eigenvalue", "is_edge"))
        if "k2_frac" not in meta:
            raise RenderError(f"{path} lacks the k2_frac metadata line")
        k2 = float(meta["k2_frac"])
        k2s.append(k2)
        first_t = cols["t"][0]
        sel = cols["t"] == first_t
        for val, edge in zip(cols["eigenvalue"][sel], cols["is_edge"][sel] > 0.5):
            (edge_pts if edge else bulk_pts).append((k2, val))
    fig, ax = _new_axes(spec)
    for points, color, size, z in (
        (bulk_pts, style.BULK_COLOR, style.BULK_MARKER_SIZE, 1),
        (edge_pts, style.EDGE_COLOR, style.EDGE_MARKER_SIZE, 2),
    ):
        if points:
            arr = np.array(points)
            ax.plot(arr[:, 0], arr[:, 1], ".", color=color, markersize=size,
                    zorder=z)
    ax.set_xlabel("k2 / |a2*|")
    ax.set_ylabel("energy")
    _save(fig, spec.out)
    return spec.out


def render_bands2d_projection(spec: FigureSpec) -> str:
    cols, _ = read_table(spec.csv, ("k1_frac", "k2_frac", "band_index", "eigenvalue"))
    fig, ax = _new_axes(spec)
    k2_values = np.unique(cols["k2_frac"])
    bands = np.unique(cols["band_index"])
    for k2 in k2_values:
        sel_k2 = cols["k2_frac"] == k2
        for band in bands:
            sel = sel_k2 & (cols["band_index"] == band)
            vals = cols["eigenvalue"][sel]
            ax.plot([k2, k2], [vals.min(), vals.max()], "-",
                    color=style.BULK_SHADE, linewidth=2.0, zorder=0)
    ax.set_xlabel("k2 / |a2*|")
    ax.set_ylabel("energy")
    _save(fig, spec.out)
    return spec.out


RENDERERS = {
    "spectrum_vs_t": render_spectrum_vs_t,
    "spectrum_vs_k2": render_spectrum_vs_k2,
    "wall_spectrum": render_wall_spectrum,
    "bands2d_projection": render_bands2d_projection,
}


def render(spec: FigureSpec) -> str:
    """Dispatch on the figure kind; raises RenderError without writing a file."""
    return RENDERERS[spec.kind](spec)
