"""Render divergence, gap, and trade-off figures from CSV artifacts.

The renderer never recomputes a bound: it plots exactly the columns the
experiment CSVs carry (single source of numerical truth upstream).
Output is deterministic — fixed size, DPI, and color cycle, and no
software/timestamp metadata — so identical input bytes yield identical
image bytes.
"""

from __future__ import annotations

import csv
import math

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np


class SpecError(ValueError):
    """Bad figure spec or input CSV (missing columns, unknown kind)."""


KINDS = ("delta-vs-t", "gap-vs-eps", "tradeoff-vs-T")

_REQUIRED_COLUMNS = {
    "delta-vs-t": [
        "t", "delta_mean", "delta_lo", "delta_hi", "delta_swa_mean",
        "ub_convex", "ub_swa", "lb", "gen_gap", "gen_gap_ci",
    ],
    "gap-vs-eps": ["epsilon", "replicate", "gen_gap", "delta_T"],
    "tradeoff-vs-T": [
        "T", "total", "term_adv", "term_std", "term_opt", "term_resid", "t_star",
    ],
}

_SPEC_KEYS = {"kind", "csv", "out", "title", "xlabel", "ylabel", "logx", "logy"}

_DPI = 144
_COLORS = ["#1b6ca8", "#c23b22", "#3a7d44", "#8a5a9e", "#b8860b", "#444444"]


def read_columns(path: str, kind: str) -> dict[str, np.ndarray]:
    """Load the CSV and enforce the column contract for the figure kind."""
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        missing = [c for c in _REQUIRED_COLUMNS[kind] if c not in header]
        if missing:
            raise SpecError(f"{path} is missing required columns {missing}")
        rows = list(reader)
    if not rows:
        raise SpecError(f"{path} has no data rows")
    out = {}
    for col in header:
        vals = [r[col] for r in rows]
        out[col] = np.array(
            [math.nan if v in ("", None) else float(v) for v in vals]
        )
    return out


def _style(ax, spec, default_x, default_y):
    ax.set_xlabel(spec.get("xlabel", default_x))
    ax.set_ylabel(spec.get("ylabel", default_y))
    if spec.get("title"):
        ax.set_title(spec["title"])
    if spec.get("logx"):
        ax.set_xscale("log")
    if spec.get("logy"):
        ax.set_yscale("log")
    ax.grid(True, alpha=0.3, linewidth=0.5)


def _plot_delta_vs_t(ax, cols, spec):
    t = cols["t"]
    ax.plot(t, cols["delta_mean"], color=_COLORS[0], lw=1.6,
            label="measured mean")
    ax.fill_between(t, cols["delta_lo"], cols["delta_hi"], color=_COLORS[0],
                    alpha=0.25, linewidth=0, label="95% CI")
    ax.plot(t, cols["ub_convex"], color=_COLORS[1], ls="--", lw=1.4,
            label="divergence bound")
    if np.isfinite(cols["ub_swa"]).any():
        ax.plot(t, cols["ub_swa"], color=_COLORS[3], ls="--", lw=1.2,
                label="averaged-iterate bound")
    if np.isfinite(cols["delta_swa_mean"]).any():
        ax.plot(t, cols["delta_swa_mean"], color=_COLORS[2], lw=1.2,
                label="averaged iterate")
    if np.isfinite(cols["lb"]).any():
        ax.plot(t, cols["lb"], color=_COLORS[5], ls=":", lw=1.2,
                label="lower-bound shape")
    _style(ax, spec, "step t", "parameter divergence")
    ax.legend(loc="upper left", fontsize=8)


def _plot_gap_vs_eps(ax, cols, spec):
    eps = np.unique(cols["epsilon"])
    means, halves = [], []
    for e in eps:
        g = cols["gen_gap"][cols["epsilon"] == e]
        means.append(g.mean())
        sd = g.std(ddof=1) if len(g) > 1 else 0.0
        halves.append(1.959963984540054 * sd / math.sqrt(len(g)))
    ax.errorbar(eps, means, yerr=halves, color=_COLORS[0], marker="o",
                ms=4, lw=1.4, capsize=3, label="gap (mean ± 95% CI)")
    _style(ax, spec, "perturbation radius", "generalization gap")
    ax.legend(loc="upper left", fontsize=8)


def _plot_tradeoff(ax, cols, spec):
    t = cols["T"]
    ax.plot(t, cols["total"], color=_COLORS[0], lw=1.8, label="total")
    for name, color in (("term_adv", _COLORS[1]), ("term_std", _COLORS[2]),
                        ("term_opt", _COLORS[3]), ("term_resid", _COLORS[5])):
        ax.plot(t, cols[name], color=color, lw=1.0, ls="--", label=name)
    t_star = float(cols["t_star"][0])
    k = int(np.argmin(cols["total"]))
    ax.axvline(t_star, color=_COLORS[4], ls=":", lw=1.2, label="T*")
    ax.plot([t[k]], [cols["total"][k]], marker="v", color=_COLORS[4], ms=7,
            label="grid minimum")
    _style(ax, spec, "steps T", "risk surrogate")
    ax.legend(loc="upper right", fontsize=8)


_PLOTTERS = {
    "delta-vs-t": _plot_delta_vs_t,
    "gap-vs-eps": _plot_gap_vs_eps,
    "tradeoff-vs-T": _plot_tradeoff,
}


def validate_spec(spec: dict) -> dict:
    if not isinstance(spec, dict):
        raise SpecError("figure spec must be a JSON object")
    unknown = set(spec) - _SPEC_KEYS
    if unknown:
        raise SpecError(f"unknown spec keys {sorted(unknown)}")
    for key in ("kind", "csv", "out"):
        if key not in spec:
            raise SpecError(f"figure spec needs '{key}'")
    if spec["kind"] not in KINDS:
        raise SpecError(f"unknown figure kind {spec['kind']!r}")
    return spec


def build_figure(spec: dict):
    """Figure object for a validated spec (not yet written to disk)."""
    spec = validate_spec(spec)
    cols = read_columns(spec["csv"], spec["kind"])
    with plt.rc_context({"axes.prop_cycle": plt.cycler(color=_COLORS),
                         "font.size": 9}):
        fig, ax = plt.subplots(figsize=(6.4, 4.0))
        _PLOTTERS[spec["kind"]](ax, cols, spec)
        fig.tight_layout()
    return fig


def render(spec: dict) -> str:
    """Write the figure; identical CSV input yields identical image bytes."""
    fig = build_figure(spec)
    out = spec["out"]
    try:
        fig.savefig(out, dpi=_DPI, metadata={"Software": None})
    finally:
        plt.close(fig)
    return out
