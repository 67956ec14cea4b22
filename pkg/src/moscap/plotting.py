"""Figure output. Everything renders through matplotlib's SVG backend.

Output is made byte-reproducible by fixing the SVG hash salt, dropping the
date metadata and keeping text as ``<text>`` elements instead of glyph paths.
"""

from __future__ import annotations

import io
from typing import Dict, Sequence

import matplotlib

matplotlib.use("Agg")

from matplotlib.backends.backend_svg import FigureCanvasSVG  # noqa: E402
from matplotlib.figure import Figure  # noqa: E402

from .device import PF, CVCurve  # noqa: E402
from .errors import InvalidInputError  # noqa: E402

PAD_FRACTION = 0.05

STYLE = {
    "svg.hashsalt": "moscap",
    "svg.fonttype": "none",
    "font.family": "DejaVu Sans",
    "font.size": 10,
    "axes.labelsize": 11,
    "axes.linewidth": 0.8,
    "axes.grid": True,
    "grid.linewidth": 0.4,
    "grid.alpha": 0.5,
    "lines.linewidth": 1.5,
    "legend.fontsize": 9,
    "legend.frameon": False,
    "xtick.direction": "in",
    "ytick.direction": "in",
    "path.simplify": False,
}

COLORS = ("#1f4e9c", "#c0392b", "#2e8b57", "#8e44ad", "#d68910", "#17202a")
FIGSIZE = (6.0, 4.0)


def padded_limits(values_min: float, values_max: float, pad: float = PAD_FRACTION):
    span = values_max - values_min
    if span == 0:
        span = abs(values_max) or 1.0
    return values_min - pad * span, values_max + pad * span


def _to_svg(fig: Figure) -> str:
    buf = io.BytesIO()
    FigureCanvasSVG(fig)
    fig.savefig(buf, format="svg", metadata={"Date": None, "Creator": "moscap"})
    return buf.getvalue().decode("utf-8")


def render_svg_plot(
    curves: Sequence[CVCurve],
    axis_labels=("Gate voltage (V)", "Capacitance (pF)"),
    series_labels: Sequence[str] = None,
    title: str = None,
) -> str:
    """Plot capacitance (pF) against bias, one line per curve, and return SVG text.

    Each line is emitted as an SVG group with id ``series-<i>``.
    """
    curves = list(curves)
    if not curves:
        raise InvalidInputError("need at least one curve to plot")
    if any(len(c) == 0 for c in curves):
        raise InvalidInputError("cannot plot an empty curve")
    if series_labels is None:
        series_labels = [f"series {i + 1}" for i in range(len(curves))]
    if len(series_labels) != len(curves):
        raise InvalidInputError(f"{len(series_labels)} labels for {len(curves)} curves")

    with matplotlib.rc_context(STYLE):
        fig = Figure(figsize=FIGSIZE)
        ax = fig.add_subplot(1, 1, 1)
        for i, (curve, label) in enumerate(zip(curves, series_labels)):
            (line,) = ax.plot(curve.bias, curve.capacitance / PF, label=label,
                              color=COLORS[i % len(COLORS)])
            line.set_gid(f"series-{i}")
        xs = [v for c in curves for v in (c.bias.min(), c.bias.max())]
        ys = [v / PF for c in curves for v in (c.capacitance.min(), c.capacitance.max())]
        ax.set_xlim(*padded_limits(min(xs), max(xs)))
        ax.set_ylim(*padded_limits(min(ys), max(ys)))
        ax.set_xlabel(axis_labels[0])
        ax.set_ylabel(axis_labels[1])
        if title:
            ax.set_title(title)
        ax.legend(loc="best")
        fig.tight_layout()
        return _to_svg(fig)


def thickness_series_svg(curves_by_thickness: Dict[float, CVCurve], title: str = None) -> str:
    """C-V curves of one structure at several oxide thicknesses."""
    items = sorted(curves_by_thickness.items())
    return render_svg_plot(
        [c for _, c in items],
        series_labels=[f"t_ox = {t:g} nm" for t, _ in items],
        title=title,
    )


def comparison_svg(rows, title: str = None) -> str:
    """Published versus predicted capacitance against oxide thickness."""
    rows = list(rows)
    if not rows:
        raise InvalidInputError("nothing to plot")
    with matplotlib.rc_context(STYLE):
        fig = Figure(figsize=FIGSIZE)
        ax = fig.add_subplot(1, 1, 1)
        names = list(dict.fromkeys(r.series for r in rows))
        for i, name in enumerate(names):
            sel = sorted((r for r in rows if r.series == name), key=lambda r: r.t_ox_nm)
            t = [r.t_ox_nm for r in sel]
            color = COLORS[i % len(COLORS)]
            (m,) = ax.plot(t, [r.model_pf for r in sel], "-", color=color, label=f"{name} model")
            m.set_gid(f"model-{name}")
            (p,) = ax.plot(t, [r.published_pf for r in sel], "o", color=color, label=f"{name} published")
            p.set_gid(f"published-{name}")
        ax.set_xlabel("Oxide thickness (nm)")
        ax.set_ylabel("Capacitance (pF)")
        if title:
            ax.set_title(title)
        ax.legend(loc="best")
        fig.tight_layout()
        return _to_svg(fig)
