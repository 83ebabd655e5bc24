"""SVG figures for a simulated run.

Figures are built with the object API (no pyplot state) and rendered to
memory first, so a failure never leaves a partial set of files behind.
"""

from __future__ import annotations

import io
from pathlib import Path

import matplotlib as mpl
import numpy as np
from matplotlib.backends.backend_svg import FigureCanvasSVG
from matplotlib.figure import Figure

from .analysis import SyncReport
from .simulate import Trajectory

STYLE = {
    "svg.hashsalt": "weaksync",
    "svg.fonttype": "path",
    "font.size": 9,
    "axes.labelsize": 9,
    "axes.titlesize": 10,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "lines.linewidth": 0.9,
    "axes.grid": True,
    "grid.alpha": 0.3,
}

FIG_WIDTH = 6.0
GOLDEN = (5**0.5 - 1) / 2


def _render(fig) -> bytes:
    buf = io.BytesIO()
    FigureCanvasSVG(fig).print_svg(buf, metadata={"Date": None})
    return buf.getvalue()


def zeta_figure(tr: Trajectory) -> Figure:
    fig = Figure(figsize=(FIG_WIDTH, FIG_WIDTH * GOLDEN))
    ax = fig.add_subplot()
    zeta = np.abs(tr.signals).reshape(len(tr), -1, tr.p).max(axis=2)
    for i in range(zeta.shape[1]):
        (line,) = ax.plot(tr.times, zeta[:, i])
        line.set_gid(f"zeta-{i + 1}")
    ax.set_xlabel("t")
    ax.set_ylabel(r"$\|\zeta_i(t)\|_\infty$")
    ax.set_title("Network signals")
    fig.tight_layout()
    return fig


def bicomponent_figure(tr: Trajectory, nodes, synchronized, index) -> Figure:
    """Disagreement to the first member (top) and synchronized output (bottom)."""
    fig = Figure(figsize=(FIG_WIDTH, FIG_WIDTH * GOLDEN * 1.4))
    top, bottom = fig.subplots(2, 1, sharex=True)
    ys = tr.outputs_by_agent()
    ref = nodes[0]
    others = nodes[1:] or nodes[:1]
    for v in others:
        diff = ys[:, v, :] - ys[:, ref, :]
        for ch in range(tr.p):
            (line,) = top.plot(tr.times, diff[:, ch])
            line.set_gid(f"disagreement-{v + 1}-{ref + 1}-{ch}")
    top.set_ylabel(r"$y_a - y_{\mathrm{ref}}$")
    top.set_title(f"Basic bicomponent {index + 1}: disagreement and synchronized output")
    for ch in range(tr.p):
        (line,) = bottom.plot(tr.times, synchronized[:, ch])
        line.set_gid(f"sync-{index + 1}-{ch}")
    bottom.set_xlabel("t")
    bottom.set_ylabel(r"$y_s$")
    fig.tight_layout()
    return fig


def emit_plots(tr: Trajectory, report: SyncReport, out_dir) -> list[Path]:
    """Write ``zeta.svg`` and one ``bicomponent_<i>.svg`` per basic bicomponent."""
    if len(tr) == 0:
        raise ValueError("cannot plot an empty trajectory")
    rendered = {}
    with mpl.rc_context(STYLE):
        rendered["zeta.svg"] = _render(zeta_figure(tr))
        for i, (group, ysync) in enumerate(zip(report.groups, report.synchronized)):
            rendered[f"bicomponent_{i + 1}.svg"] = _render(bicomponent_figure(tr, group.group, ysync, i))
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = []
    for name, data in rendered.items():
        path = out_dir / name
        path.write_bytes(data)
        paths.append(path)
    return paths
