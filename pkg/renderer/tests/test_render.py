"""Renderer: column contract, figure content, and byte determinism."""

import json
import math
import subprocess
import sys

import numpy as np
import pytest

from stabrender.cli import main
from stabrender.render import SpecError, build_figure, read_columns, render

CONTRACT = ("t,delta_mean,delta_lo,delta_hi,delta_swa_mean,"
            "ub_convex,ub_swa,lb,gen_gap,gen_gap_ci")


def write_delta_csv(path, t, mean, lo, hi, ub, ub_swa=None, swa=None, lb=None):
    lines = [CONTRACT]
    last = len(t) - 1
    for k in range(len(t)):
        row = [str(t[k]), repr(float(mean[k])), repr(float(lo[k])), repr(float(hi[k]))]
        row.append("" if swa is None else repr(float(swa[k])))
        row.append(repr(float(ub[k])))
        row.append("" if ub_swa is None else repr(float(ub_swa[k])))
        row.append("" if lb is None else repr(float(lb[k])))
        row += ["0.001", "0.0005"] if k == last else ["", ""]
        lines.append(",".join(row))
    path.write_text("\n".join(lines) + "\n")


@pytest.fixture
def zero_csv(tmp_path):
    t = np.arange(0, 11)
    z = np.zeros(11)
    ub = 0.012 * t
    path = tmp_path / "zero.csv"
    write_delta_csv(path, t, z, z, z, ub)
    return path


class TestDeltaFigure:
    def test_flat_zero_series_draws_flat_line(self, zero_csv, tmp_path):
        spec = {"kind": "delta-vs-t", "csv": str(zero_csv),
                "out": str(tmp_path / "z.png")}
        fig = build_figure(spec)
        line = fig.axes[0].lines[0]
        assert np.array_equal(line.get_ydata(), np.zeros(11))

    def test_byte_identical_renders(self, zero_csv, tmp_path):
        spec1 = {"kind": "delta-vs-t", "csv": str(zero_csv),
                 "out": str(tmp_path / "a.png")}
        spec2 = dict(spec1, out=str(tmp_path / "b.png"))
        render(spec1)
        render(spec2)
        a = (tmp_path / "a.png").read_bytes()
        b = (tmp_path / "b.png").read_bytes()
        assert a == b and len(a) > 0

    def test_missing_column_exits_two(self, tmp_path):
        bad = tmp_path / "bad.csv"
        bad.write_text("t,delta_mean\n0,0\n1,0.1\n")
        spec = tmp_path / "spec.json"
        spec.write_text(json.dumps({"kind": "delta-vs-t", "csv": str(bad),
                                    "out": str(tmp_path / "x.png")}))
        assert main(["--spec", str(spec)]) == 2

    def test_unknown_kind_rejected(self, zero_csv, tmp_path):
        with pytest.raises(SpecError):
            build_figure({"kind": "pie", "csv": str(zero_csv),
                          "out": str(tmp_path / "x.png")})

    def test_unknown_spec_key_rejected(self, zero_csv, tmp_path):
        with pytest.raises(SpecError):
            build_figure({"kind": "delta-vs-t", "csv": str(zero_csv),
                          "out": str(tmp_path / "x.png"), "theme": "dark"})


class TestGapFigure:
    def test_mean_curve_increasing(self, tmp_path):
        path = tmp_path / "sweep.csv"
        lines = ["epsilon,replicate,gen_gap,delta_T"]
        for j, eps in enumerate([0.0, 0.05, 0.1]):
            for r in range(10):
                lines.append(f"{eps},{r},{0.01 * j + 0.001 * r},{0.1 * j}")
        path.write_text("\n".join(lines) + "\n")
        fig = build_figure({"kind": "gap-vs-eps", "csv": str(path),
                            "out": str(tmp_path / "g.png")})
        y = fig.axes[0].lines[0].get_ydata()
        assert (np.diff(y) > 0).all()


class TestTradeoffFigure:
    def test_minimum_marker_within_one_grid_step(self, tmp_path):
        # curve a*T + b/T with integer grid; T* from the same constants
        L, eta, n, D, alpha = 1.0, 0.1, 100, 1.0, 0.01
        a = (L * eta + 2 * L * L / n) * alpha
        ts = np.arange(1, 1200)
        total = a * ts + D * D / (ts * alpha) + L * L * alpha
        t_star = D / (alpha * math.sqrt(L * eta + 2 * L * L / n))
        path = tmp_path / "trade.csv"
        lines = ["T,total,term_adv,term_std,term_opt,term_resid,t_star"]
        for k, T in enumerate(ts):
            lines.append(
                f"{T},{float(total[k])!r},{float(L*eta*T*alpha)!r},"
                f"{float(2*L*L*T*alpha/n)!r},{float(D*D/(T*alpha))!r},"
                f"{L*L*alpha!r},{t_star!r}"
            )
        path.write_text("\n".join(lines) + "\n")
        fig = build_figure({"kind": "tradeoff-vs-T", "csv": str(path),
                            "out": str(tmp_path / "t.png")})
        ax = fig.axes[0]
        marker = [ln for ln in ax.lines if ln.get_marker() == "v"][0]
        grid_min = marker.get_xdata()[0]
        assert abs(grid_min - t_star) <= 1.0


@pytest.fixture(scope="module")
def upstream_csv(tmp_path_factory):
    """Divergence CSV produced by the experiment CLI (the real interface)."""
    pytest.importorskip("stablab")
    outdir = tmp_path_factory.mktemp("upstream")
    cfg = {
        "objective": {"family": "shift-quadratic", "dim": 1, "radius": 0.45,
                      "z_box": 0.5,
                      "adversarial": {"epsilon": 0.05, "p": 2,
                                       "inner_solver": "closed-form"}},
        "schedule": {"kind": "fixed", "alpha": 0.01},
        "n": 100, "T": 400, "replicates": 40,
        "scheme": "with-replacement", "swa": True, "seed": 20240811,
    }
    cfg_path = outdir / "cfg.json"
    cfg_path.write_text(json.dumps(cfg))
    proc = subprocess.run(
        [sys.executable, "-m", "stablab.cli", "stability",
         "--config", str(cfg_path), "--out", str(outdir / "run")],
        capture_output=True, text=True,
    )
    assert proc.returncode == 0, proc.stderr
    return outdir / "run.csv"


class TestAgainstUpstreamArtifacts:
    def test_measured_mean_strictly_below_bound_curve(self, upstream_csv, tmp_path):
        cols = read_columns(str(upstream_csv), "delta-vs-t")
        assert (cols["delta_mean"][1:] < cols["ub_convex"][1:]).all()
        fig = build_figure({"kind": "delta-vs-t", "csv": str(upstream_csv),
                            "out": str(tmp_path / "d.png")})
        ax = fig.axes[0]
        measured = ax.lines[0].get_ydata()
        dashed = [ln for ln in ax.lines if ln.get_linestyle() == "--"][0]
        assert (measured[1:] < dashed.get_ydata()[1:]).all()

    def test_repeated_invocations_byte_identical(self, upstream_csv, tmp_path):
        spec_path = tmp_path / "spec.json"
        outs = []
        for name in ("r1.png", "r2.png"):
            spec_path.write_text(json.dumps(
                {"kind": "delta-vs-t", "csv": str(upstream_csv),
                 "out": str(tmp_path / name)}))
            assert main(["--spec", str(spec_path)]) == 0
            outs.append((tmp_path / name).read_bytes())
        assert outs[0] == outs[1]
