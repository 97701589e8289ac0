"""Batch front door: JSON configs in, CSV/JSON artifacts out.

Subcommands: certify, stability, sweep, bounds, lowerbound.  Exit codes:
0 success, 1 property violation, 2 usage or config error.  Re-running a
command with the same config byte-reproduces every output except the
generated_at field of JSON summaries.  Files are written to a temporary
name and renamed on completion.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from datetime import datetime, timezone

import numpy as np
from scipy.stats import spearmanr

from . import bounds as bnd
from . import harness, smoothness
from .engine import FULL_BATCH, ScheduleSpec, schedule_from_config, tstar
from .errors import RejectedInput, UnsupportedOperation
from .objectives import (
    HardInstance,
    build_objective,
    hard_instance_delta_series,
    make_hard_instance,
)


def _die(msg: str) -> int:
    print(f"error: {msg}", file=sys.stderr)
    return 2


def _atomic_write(path: str, text: str) -> None:
    tmp = path + ".tmp"
    with open(tmp, "w") as fh:
        fh.write(text)
    os.replace(tmp, path)


def _write_json(path: str, payload: dict) -> None:
    _atomic_write(path, json.dumps(payload, sort_keys=True, indent=2) + "\n")


def _now() -> str:
    return datetime.now(timezone.utc).isoformat()


def _check_keys(cfg: dict, required: set, optional: set, where: str) -> None:
    unknown = set(cfg) - required - optional
    if unknown:
        raise RejectedInput(f"unknown keys {sorted(unknown)} in {where}")
    missing = required - set(cfg)
    if missing:
        raise RejectedInput(f"missing keys {sorted(missing)} in {where}")


def _load_config(args) -> dict:
    try:
        with open(args.config) as fh:
            cfg = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise RejectedInput(f"cannot read config: {exc}") from None
    if not isinstance(cfg, dict):
        raise RejectedInput("config must be a JSON object")
    if args.seed is not None:
        cfg["seed"] = args.seed
    if "seed" not in cfg:
        raise RejectedInput("config must carry a master seed")
    return cfg


def _out_prefix(args, cfg) -> str:
    prefix = args.out or cfg.get("out")
    if not prefix:
        raise RejectedInput("no output prefix (--out or config 'out')")
    parent = os.path.dirname(prefix)
    if parent:
        os.makedirs(parent, exist_ok=True)
    return prefix


def cmd_certify(args) -> int:
    cfg = _load_config(args)
    _check_keys(cfg, {"objective", "seed"}, {"certify", "out"}, "certify config")
    opts = dict(cfg.get("certify", {}))
    _check_keys(opts, set(), {"samples", "kink_fraction", "alpha", "eta", "beta"}, "certify options")
    obj = build_objective(cfg["objective"])
    seed = int(cfg["seed"])
    samples = int(opts.get("samples", 20000))
    kf = float(opts.get("kink_fraction", 0.3))
    cons = obj.constants()
    beta = float(opts.get("beta", cons.beta))
    eta = float(opts.get("eta", cons.eta))
    alpha = float(opts.get("alpha", 1.0 / beta if beta > 0 else 1.0))

    cert = smoothness.estimate_constants(obj, samples, seed, kink_fraction=kf)
    reports = [smoothness.check_descent(obj, beta, eta, samples, seed, kink_fraction=kf)]
    reports.append(
        smoothness.check_update_expansiveness(
            obj, alpha, "general", samples, seed, beta=beta, eta=eta, kink_fraction=kf
        )
    )
    if obj.convex and beta > 0:
        reports.append(
            smoothness.check_cocoercive(obj, beta, eta, samples, seed, kink_fraction=kf)
        )
        if alpha <= 1.0 / beta + 1e-12:
            reports.append(
                smoothness.check_update_expansiveness(
                    obj, alpha, "convex", samples, seed, beta=beta, eta=eta, kink_fraction=kf
                )
            )
            if cons.gamma is not None:
                reports.append(
                    smoothness.check_update_expansiveness(
                        obj, alpha, "strongly", samples, seed,
                        beta=beta, eta=eta, gamma=cons.gamma, kink_fraction=kf,
                    )
                )
    ok = all(r.passed for r in reports)
    prefix = _out_prefix(args, cfg)
    payload = {
        "config": cfg,
        "constants": cons.as_dict(),
        "certificate": json.loads(cert.to_json()),
        "properties": [json.loads(r.to_json()) for r in reports],
        "passed": ok,
        "generated_at": _now(),
    }
    path = prefix + ".certificate.json"
    _write_json(path, payload)
    if not ok:
        print(f"violations found; report at {path}", file=sys.stderr)
        return 1
    print(path)
    return 0


_STAB_KEYS = {"objective", "schedule", "n", "T", "replicates", "scheme", "seed"}
_STAB_OPT = {"swa", "n_test", "worst_case", "out"}


def _recursion_check(obj, cfg, report):
    """Full-batch runs on the growth construction admit a closed form."""
    if not isinstance(obj, HardInstance) or cfg["scheme"] != FULL_BATCH:
        return None
    if cfg["schedule"].get("kind") != "fixed":
        return None
    try:
        closed = hard_instance_delta_series(
            obj.params, cfg["n"], cfg["schedule"]["alpha"], cfg["T"]
        )
    except RejectedInput:
        return None
    scale = np.maximum(np.abs(closed), 1e-300)
    rel = float(np.max(np.abs(report.delta_mean - closed) / scale))
    return {"recursion_match": bool(rel <= 1e-10), "max_rel_err": rel}


def cmd_stability(args) -> int:
    cfg = _load_config(args)
    _check_keys(cfg, _STAB_KEYS, _STAB_OPT, "stability config")
    obj = build_objective(cfg["objective"])
    schedule = schedule_from_config(cfg["schedule"])
    pair = None
    if isinstance(obj, HardInstance):
        _, pair = make_hard_instance(obj.params, int(cfg["n"]))
    report = harness.measure_uas(
        obj,
        int(cfg["n"]),
        schedule,
        cfg["scheme"],
        int(cfg["T"]),
        int(cfg["replicates"]),
        int(cfg["seed"]),
        swa=bool(cfg.get("swa", False)),
        worst_case=bool(cfg.get("worst_case", False)),
        jobs=args.jobs,
        pair=pair,
    )
    gen_gap = gen_ci = None
    if "n_test" in cfg:
        gaps = harness.estimate_gaps(
            obj,
            int(cfg["n"]),
            schedule,
            cfg["scheme"],
            int(cfg["T"]),
            int(cfg["replicates"]),
            int(cfg["n_test"]),
            int(cfg["seed"]),
            want_opt=False,
        )
        gen_gap, gen_ci = gaps.gen_gap, gaps.gen_gap_ci
    prefix = _out_prefix(args, cfg)
    csv_path = prefix + ".csv"
    tmp = csv_path + ".tmp"
    report.to_csv(tmp, gen_gap=gen_gap, gen_gap_ci=gen_ci)
    os.replace(tmp, csv_path)
    summary = report.summary()
    summary["config"] = cfg
    if gen_gap is not None:
        summary["gen_gap"] = gen_gap
        summary["gen_gap_ci"] = gen_ci
    extra = _recursion_check(obj, cfg, report)
    if extra:
        summary.update(extra)
    summary["generated_at"] = _now()
    _write_json(prefix + ".json", summary)
    print(csv_path)
    if report.certificate_checked and report.certificate_violations > 0:
        print(
            f"path-wise certificate violated {report.certificate_violations} times",
            file=sys.stderr,
        )
        return 1
    if extra and not extra["recursion_match"]:
        print("closed-form recursion mismatch", file=sys.stderr)
        return 1
    return 0


def cmd_sweep(args) -> int:
    cfg = _load_config(args)
    _check_keys(
        cfg,
        {"objective", "schedule", "n", "T", "replicates", "scheme", "seed", "n_test"},
        {"epsilon_grid", "T_grid", "out"},
        "sweep config",
    )
    has_eps = "epsilon_grid" in cfg
    has_t = "T_grid" in cfg
    if has_eps == has_t:
        raise RejectedInput("sweep needs exactly one of epsilon_grid, T_grid")
    grid = cfg["epsilon_grid"] if has_eps else cfg["T_grid"]
    if not grid:
        raise RejectedInput("sweep grid is empty")
    col = "epsilon" if has_eps else "T"
    schedule = schedule_from_config(cfg["schedule"])
    rows = []
    means = []
    for value in grid:
        if has_eps:
            ocfg = json.loads(json.dumps(cfg["objective"]))
            if float(value) > 0:
                adv = ocfg.get("adversarial") or {"epsilon": 0.0}
                adv["epsilon"] = float(value)
                ocfg["adversarial"] = adv
            elif "adversarial" in ocfg and ocfg["adversarial"] is not None:
                ocfg["adversarial"]["epsilon"] = 0.0
            obj = build_objective(ocfg)
            T = int(cfg["T"])
        else:
            obj = build_objective(cfg["objective"])
            T = int(value)
        gaps, deltas = harness.sweep_point(
            obj,
            int(cfg["n"]),
            schedule,
            cfg["scheme"],
            T,
            int(cfg["replicates"]),
            int(cfg["n_test"]),
            int(cfg["seed"]),
        )
        means.append(float(gaps.mean()))
        for r in range(len(gaps)):
            rows.append((value, r, gaps[r], deltas[r]))
    prefix = _out_prefix(args, cfg)
    lines = [f"{col},replicate,gen_gap,delta_T"]
    for value, r, gap, dlt in rows:
        lines.append(
            f"{format(float(value), '.17g')},{r},"
            f"{format(gap, '.17g')},{format(dlt, '.17g')}"
        )
    csv_path = prefix + ".csv"
    _atomic_write(csv_path, "\n".join(lines) + "\n")
    if len(grid) > 1:
        rho = float(spearmanr(np.asarray(grid, dtype=float), np.asarray(means)).statistic)
    else:
        rho = math.nan
    _write_json(
        prefix + ".json",
        {
            "config": cfg,
            "grid": list(grid),
            "mean_gen_gap": means,
            "spearman_vs_grid": None if math.isnan(rho) else rho,
            "generated_at": _now(),
        },
    )
    print(csv_path)
    return 0


def cmd_bounds(args) -> int:
    try:
        params = json.loads(args.params)
    except json.JSONDecodeError as exc:
        raise RejectedInput(f"bad --params JSON: {exc}") from None
    if not isinstance(params, dict):
        raise RejectedInput("--params must be a JSON object")
    if args.id == "tradeoff-fixed" and isinstance(params.get("T"), list):
        out = bnd.tradeoff_fixed(
            params["L"], params["eta"], params["n"], params["D"],
            params["alpha"], params["T"],
        )
        t_star = tstar(
            params["D"], params["alpha"], params["L"], params["eta"], params["n"]
        )
        lines = ["T,total,term_adv,term_std,term_opt,term_resid,t_star"]
        for k in range(len(out["T"])):
            lines.append(
                ",".join(
                    format(float(v), ".17g")
                    for v in (
                        out["T"][k], out["total"][k], out["term_adv"][k],
                        out["term_std"][k], out["term_opt"][k],
                        out["term_resid"][k], t_star,
                    )
                )
            )
        text = "\n".join(lines) + "\n"
        if args.out:
            _atomic_write(args.out + ".csv", text)
            print(args.out + ".csv")
        else:
            sys.stdout.write(text)
        return 0
    report = bnd.evaluate(args.id, params)
    if args.out:
        _write_json(args.out + ".json", json.loads(report.to_json()))
        print(args.out + ".json")
    else:
        print(report.to_json())
    return 0


def cmd_lowerbound(args) -> int:
    cfg = _load_config(args)
    _check_keys(cfg, {"objective", "n", "T", "alpha", "seed"}, {"out"}, "lowerbound config")
    ocfg = dict(cfg["objective"])
    if ocfg.get("family") != "hard-instance":
        raise RejectedInput("lowerbound requires the hard-instance family")
    obj = build_objective(ocfg)
    n, T, alpha = int(cfg["n"]), int(cfg["T"]), float(cfg["alpha"])
    _, pair = make_hard_instance(obj.params, n)
    result = harness.coupled_run(
        obj, pair, ScheduleSpec.fixed(alpha), FULL_BATCH, T, int(cfg["seed"])
    )
    closed = hard_instance_delta_series(obj.params, n, alpha, T)
    cons = obj.constants()
    lb = bnd.lb_uas_series(obj.params.eta, cons.L, alpha, T, n)
    scale = np.maximum(np.abs(closed), 1e-300)
    rel = float(np.max(np.abs(result.delta - closed) / scale))
    witness = (
        obj.params.eta * alpha * math.sqrt(max(T - 1, 0)) * (n - 1) / n
    )
    prefix = _out_prefix(args, cfg)
    lines = ["t,delta,delta_closed_form,lb"]
    for k in range(T + 1):
        lines.append(
            f"{k},{format(result.delta[k], '.17g')},"
            f"{format(closed[k], '.17g')},{format(lb[k], '.17g')}"
        )
    _atomic_write(prefix + ".csv", "\n".join(lines) + "\n")
    ok = rel <= 1e-10 and result.delta[-1] >= witness
    _write_json(
        prefix + ".json",
        {
            "config": cfg,
            "recursion_match": bool(rel <= 1e-10),
            "max_rel_err": rel,
            "growth_witness": {
                "value": float(result.delta[-1]),
                "threshold": witness,
                "ok": bool(result.delta[-1] >= witness),
            },
            "generated_at": _now(),
        },
    )
    print(prefix + ".csv")
    return 0 if ok else 1


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="stablab",
        description="stability experiments for SGD on approximately smooth losses",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, fn in (
        ("certify", cmd_certify),
        ("stability", cmd_stability),
        ("sweep", cmd_sweep),
        ("lowerbound", cmd_lowerbound),
    ):
        p = sub.add_parser(name)
        p.add_argument("--config", required=True)
        p.add_argument("--out", default=None)
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--jobs", type=int, default=None)
        p.set_defaults(fn=fn)
    p = sub.add_parser("bounds")
    p.add_argument("--id", required=True)
    p.add_argument("--params", required=True)
    p.add_argument("--out", default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--jobs", type=int, default=None)
    p.set_defaults(fn=cmd_bounds)
    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    if args.jobs is None:
        args.jobs = int(os.environ.get("STABLAB_JOBS", "1"))
    try:
        return args.fn(args)
    except (RejectedInput, UnsupportedOperation) as exc:
        return _die(str(exc))


if __name__ == "__main__":
    sys.exit(main())
