"""Coupled trajectories on neighboring datasets and what they measure.

Two SGD runs are coupled by sharing one index stream (and any inner-solver
randomness), so their parameter distance delta_t = ||theta_1^t - theta_2^t||
isolates the effect of the single differing example.  On top of the raw
delta series this module estimates the generalization gap by Monte Carlo,
the optimization gap against a high-accuracy reference minimizer, and the
stationarity level of SGD on bounded non-convex objectives.

Expectation-level claims are tested as mean +/- 95% CI over seed
replicates; the step-level certificate

    delta_{t+1} <= delta_t + alpha_t eta + 2 L alpha_t [i_t = i*]

(convex families, alpha_t <= 1/beta) is asserted path-wise on every step.
"""

from __future__ import annotations

import functools
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import bounds as bnd
from .engine import FULL_BATCH, WITH_REPLACEMENT, ScheduleSpec, index_stream
from .errors import RejectedInput
from .objectives import ConstantsRecord, Objective

CERT_TOL = 1e-9
_Z95 = 1.959963984540054


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def _norm_rows(a: np.ndarray) -> np.ndarray:
    return np.sqrt(np.einsum("ij,ij->i", a, a))


@dataclass
class NeighborPair:
    """Datasets of equal size differing in exactly one indexed example."""

    S: np.ndarray
    S_prime: np.ndarray
    differing_index: int

    def __post_init__(self) -> None:
        self.S = np.asarray(self.S, dtype=float)
        self.S_prime = np.asarray(self.S_prime, dtype=float)
        if self.S.shape != self.S_prime.shape or self.S.ndim != 2:
            raise RejectedInput("S and S' must be (n, m) arrays of equal shape")
        n = len(self.S)
        if not 0 <= self.differing_index < n:
            raise RejectedInput("differing index out of range")
        mask = np.ones(n, dtype=bool)
        mask[self.differing_index] = False
        if not np.array_equal(self.S[mask], self.S_prime[mask]):
            raise RejectedInput("datasets differ away from the differing index")

    @property
    def n(self) -> int:
        return len(self.S)


def make_neighbors(obj: Objective, n: int, i: int, seed: int) -> NeighborPair:
    """Draw n i.i.d. examples for S and redraw index i independently."""
    if n < 1:
        raise RejectedInput("n must be positive")
    if not 0 <= i < n:
        raise RejectedInput("differing index must lie in [0, n)")
    rng = np.random.default_rng(seed)
    s = obj.sample_examples(rng, n)
    redraw = obj.sample_examples(rng, 1)[0]
    s_prime = s.copy()
    s_prime[i] = redraw
    return NeighborPair(S=s, S_prime=s_prime, differing_index=i)


def _project_rows(th: np.ndarray, radius: float) -> np.ndarray:
    if not math.isfinite(radius):
        return th
    norms = _norm_rows(th)
    scale = np.where(norms > radius, radius / np.where(norms > 0, norms, 1.0), 1.0)
    return th * scale[:, None]


def _coupled_sweep(obj, S, Sp, streams, alphas, radius, swa, full_batch):
    """Lockstep evolution of M coupled pairs; both sides share streams.

    S, Sp: (M, n, m) stacked datasets; streams: (M, T).  Returns the
    distance series (M, T+1), the running-average distance series (or
    None), and the final iterates of both sides.
    """
    M, n, m = S.shape
    T = streams.shape[1]
    d = obj.dim
    th = np.zeros((2 * M, d))
    acc = np.zeros((2 * M, d))
    delta = np.zeros((M, T + 1))
    delta_swa = np.zeros((M, T + 1)) if swa else None
    rows = np.arange(M)
    flat_z = np.concatenate([S.reshape(M * n, m), Sp.reshape(M * n, m)])
    for k in range(T):
        if full_batch:
            big = np.repeat(th, n, axis=0)
            grads = obj.subgradient_batch(big, flat_z)
            g = grads.reshape(2 * M, n, d).mean(axis=1)
        else:
            idx = streams[:, k]
            zz = np.concatenate([S[rows, idx], Sp[rows, idx]])
            g = obj.subgradient_batch(th, zz)
        th = _project_rows(th - alphas[k] * g, radius)
        delta[:, k + 1] = _norm_rows(th[:M] - th[M:])
        if swa:
            acc += th
            delta_swa[:, k + 1] = _norm_rows(acc[:M] - acc[M:]) / (k + 1)
    return delta, delta_swa, th[:M], th[M:]


@dataclass
class CoupledRun:
    """Distance series of one coupled pair of trajectories."""

    delta: np.ndarray
    delta_swa: np.ndarray | None
    indices: np.ndarray
    alphas: np.ndarray
    theta1: np.ndarray
    theta2: np.ndarray
    differing_index: int
    seed: int
    scheme: str


def coupled_run(
    obj: Objective,
    pair: NeighborPair,
    schedule: ScheduleSpec,
    scheme: str,
    T: int,
    seed: int,
    swa: bool = False,
    radius: float | None = None,
) -> CoupledRun:
    """Run SGD on S and S' from theta = 0 under one shared index stream."""
    if pair.S.shape != pair.S_prime.shape:
        raise RejectedInput("paired datasets must have equal size")
    if radius is None:
        radius = obj.radius
    rng = np.random.default_rng(seed)
    stream = index_stream(scheme, pair.n, T, rng)
    alphas = schedule.alphas(T)
    delta, delta_swa, th1, th2 = _coupled_sweep(
        obj,
        pair.S[None, :, :],
        pair.S_prime[None, :, :],
        stream[None, :],
        alphas,
        radius,
        swa,
        scheme == FULL_BATCH,
    )
    return CoupledRun(
        delta=delta[0],
        delta_swa=None if delta_swa is None else delta_swa[0],
        indices=stream,
        alphas=alphas,
        theta1=th1[0],
        theta2=th2[0],
        differing_index=pair.differing_index,
        seed=seed,
        scheme=scheme,
    )


def certificate_violations(
    delta: np.ndarray,
    alphas: np.ndarray,
    streams: np.ndarray,
    differing: np.ndarray,
    L: float,
    eta: float,
    tol: float = CERT_TOL,
) -> int:
    """Count steps violating delta_{t+1} - delta_t <= alpha_t eta + 2 L alpha_t [i_t = i*]."""
    delta = np.atleast_2d(delta)
    streams = np.atleast_2d(streams)
    differing = np.atleast_1d(differing)
    inc = delta[:, 1:] - delta[:, :-1]
    allowed = eta * alphas[None, :] + 2.0 * L * alphas[None, :] * (
        streams == differing[:, None]
    )
    return int((inc > allowed + tol).sum())


@dataclass
class StabilityReport:
    """Across-replicate summary of coupled-trajectory divergence."""

    t: np.ndarray
    delta_mean: np.ndarray
    delta_lo: np.ndarray
    delta_hi: np.ndarray
    delta_all: np.ndarray
    delta_swa_mean: np.ndarray | None
    delta_swa_all: np.ndarray | None
    certificate_checked: bool
    certificate_violations: int
    overlays: dict
    constants: ConstantsRecord
    replicates: int
    scheme: str
    seed: int
    n: int
    T: int
    mode: str
    schedule: dict
    worst_index: int | None = None

    def final_deltas(self) -> np.ndarray:
        return self.delta_all[:, -1]

    def tail_means(self, frac: float = 0.5) -> np.ndarray:
        """Per-replicate time average of delta over the trailing window."""
        start = int(round((1.0 - frac) * self.T)) + 1
        return self.delta_all[:, start:].mean(axis=1)

    def summary(self) -> dict:
        out = {
            "replicates": self.replicates,
            "scheme": self.scheme,
            "seed": self.seed,
            "n": self.n,
            "T": self.T,
            "mode": self.mode,
            "schedule": self.schedule,
            "mean_delta_T": float(self.delta_mean[-1]),
            "ci_delta_T": float(self.delta_hi[-1] - self.delta_mean[-1]),
            "certificate_checked": self.certificate_checked,
            "certificate_violations": self.certificate_violations,
            "constants": self.constants.as_dict(),
        }
        if "ub_convex" in self.overlays:
            ub = float(self.overlays["ub_convex"][-1]) / max(self.constants.L, 1e-300)
            ci = 2.0 * (self.delta_hi[-1] - self.delta_mean[-1])
            out["mean_delta_T_le_ub"] = bool(self.delta_mean[-1] <= ub + ci)
        if self.worst_index is not None:
            out["worst_index"] = self.worst_index
        return out

    def to_csv(self, path, gen_gap: float | None = None, gen_gap_ci: float | None = None):
        names = [
            "t",
            "delta_mean",
            "delta_lo",
            "delta_hi",
            "delta_swa_mean",
            "ub_convex",
            "ub_swa",
            "lb",
            "gen_gap",
            "gen_gap_ci",
        ]
        lines = [",".join(names)]
        last = len(self.t) - 1
        for k in range(len(self.t)):
            row = [str(int(self.t[k]))]
            row += [_fmt(self.delta_mean[k]), _fmt(self.delta_lo[k]), _fmt(self.delta_hi[k])]
            row.append("" if self.delta_swa_mean is None else _fmt(self.delta_swa_mean[k]))
            for name in ("ub_convex", "ub_swa", "lb"):
                row.append("" if name not in self.overlays else _fmt(self.overlays[name][k]))
            if k == last and gen_gap is not None:
                row.append(_fmt(gen_gap))
                row.append("" if gen_gap_ci is None else _fmt(gen_gap_ci))
            else:
                row += ["", ""]
            lines.append(",".join(row))
        with open(path, "w") as fh:
            fh.write("\n".join(lines) + "\n")


def _mean_ci(values: np.ndarray, axis: int = 0):
    m = values.mean(axis=axis)
    count = values.shape[axis]
    sd = values.std(axis=axis, ddof=1) if count > 1 else np.zeros_like(m)
    half = _Z95 * sd / math.sqrt(count)
    return m, m - half, m + half


def _replicate_inputs(obj, n, scheme, T, seed, replicates, fixed_index=None, pair=None):
    """Per-replicate datasets, differing indices, and index streams."""
    seqs = np.random.SeedSequence(seed).spawn(replicates)
    m = obj.example_dim
    S = np.empty((replicates, n, m))
    Sp = np.empty((replicates, n, m))
    diff = np.empty(replicates, dtype=int)
    streams = np.empty((replicates, T), dtype=int)
    for r, sq in enumerate(seqs):
        rng = np.random.default_rng(sq)
        if pair is not None:
            S[r] = pair.S
            Sp[r] = pair.S_prime
            i = pair.differing_index
        else:
            s = obj.sample_examples(rng, n)
            redraw = obj.sample_examples(rng, 1)[0]
            i = int(rng.integers(0, n)) if fixed_index is None else fixed_index
            S[r] = s
            Sp[r] = s
            Sp[r, i] = redraw
        diff[r] = i
        streams[r] = index_stream(scheme, n, T, rng)
    return S, Sp, diff, streams


def _uas_chunk(args, obj, alphas, radius, swa, full_batch):
    S, Sp, streams = args
    return _coupled_sweep(obj, S, Sp, streams, alphas, radius, swa, full_batch)


def measure_uas(
    obj: Objective,
    n: int,
    schedule: ScheduleSpec,
    scheme: str,
    T: int,
    replicates: int,
    seed: int,
    swa: bool = False,
    radius: float | None = None,
    worst_case: bool = False,
    jobs: int = 1,
    pair: NeighborPair | None = None,
) -> StabilityReport:
    """Divergence statistics over seed replicates.

    Each replicate draws fresh data, a fresh uniformly-placed differing
    index, and a fresh shared index stream.  With worst_case=True (n <= 8)
    the differing index is instead enumerated and the worst mean final
    divergence is reported.  Passing `pair` pins the datasets (only the
    index streams vary), e.g. for the piecewise-linear growth construction.
    """
    if pair is not None and (worst_case or len(pair.S) != n):
        raise RejectedInput("fixed pair conflicts with n or worst_case")
    if replicates < 2:
        raise RejectedInput("need at least 2 replicates for a CI")
    if radius is None:
        radius = obj.radius
    alphas = schedule.alphas(T)
    cons = obj.constants()
    full_batch = scheme == FULL_BATCH

    def sweep_for(fixed_index):
        S, Sp, diff, streams = _replicate_inputs(
            obj, n, scheme, T, seed, replicates, fixed_index, pair
        )
        if jobs > 1:
            parts = np.array_split(np.arange(replicates), jobs)
            parts = [p for p in parts if len(p)]
            worker = functools.partial(
                _uas_chunk,
                obj=obj,
                alphas=alphas,
                radius=radius,
                swa=swa,
                full_batch=full_batch,
            )
            with ProcessPoolExecutor(max_workers=len(parts)) as ex:
                outs = list(
                    ex.map(worker, [(S[p], Sp[p], streams[p]) for p in parts])
                )
            delta = np.concatenate([o[0] for o in outs])
            dswa = np.concatenate([o[1] for o in outs]) if swa else None
        else:
            delta, dswa, _, _ = _coupled_sweep(
                obj, S, Sp, streams, alphas, radius, swa, full_batch
            )
        return delta, dswa, diff, streams

    worst_index = None
    if worst_case:
        if n > 8:
            raise RejectedInput("worst-case enumeration is limited to n <= 8")
        best = None
        for i in range(n):
            delta, dswa, diff, streams = sweep_for(i)
            score = delta[:, -1].mean()
            if best is None or score > best[0]:
                best = (score, delta, dswa, diff, streams, i)
        _, delta, dswa, diff, streams, worst_index = best
        mode = "worst-case-enumerated"
    else:
        delta, dswa, diff, streams = sweep_for(None)
        mode = "randomized-mean"

    cert_ok = (
        obj.convex
        and cons.beta >= 0
        and bnd.alpha_cap_flag(alphas, cons.beta) in ("satisfied", "unchecked")
        and not full_batch
    )
    violations = (
        certificate_violations(delta, alphas, streams, diff, cons.L, cons.eta)
        if cert_ok
        else 0
    )

    mean, lo, hi = _mean_ci(delta)
    overlays = {
        "ub_convex": np.concatenate(
            [[0.0], bnd.ub_convex_series(cons.L, cons.eta, n, alphas)]
        ),
        "ub_swa": np.concatenate(
            [[0.0], bnd.ub_swa_series(cons.L, cons.eta, n, alphas)]
        ),
    }
    if schedule.kind == "fixed":
        overlays["lb"] = bnd.lb_uas_series(
            cons.eta, cons.L, schedule.alpha_at(1), T, n
        )
    swa_mean = dswa.mean(axis=0) if swa else None
    return StabilityReport(
        t=np.arange(0, T + 1),
        delta_mean=mean,
        delta_lo=lo,
        delta_hi=hi,
        delta_all=delta,
        delta_swa_mean=swa_mean,
        delta_swa_all=dswa if swa else None,
        certificate_checked=cert_ok,
        certificate_violations=violations,
        overlays=overlays,
        constants=cons,
        replicates=replicates,
        scheme=scheme,
        seed=seed,
        n=n,
        T=T,
        mode=mode,
        schedule=schedule.as_dict(),
        worst_index=worst_index,
    )


def _single_sweep(obj, S, streams, alphas, radius):
    """Final iterates of M independent (uncoupled) runs from theta = 0."""
    M, n, m = S.shape
    T = streams.shape[1]
    th = np.zeros((M, obj.dim))
    rows = np.arange(M)
    for k in range(T):
        zz = S[rows, streams[:, k]]
        g = obj.subgradient_batch(th, zz)
        th = _project_rows(th - alphas[k] * g, radius)
    return th


def reference_minimizer(
    obj: Objective,
    S: np.ndarray,
    radius: float | None = None,
    tol: float = 1e-8,
    max_iter: int = 100000,
):
    """High-accuracy minimizer of the empirical risk on the domain ball.

    Dimension 1 uses bisection on the monotone subderivative (convex
    families); otherwise projected full-batch descent with step 1/beta,
    tracking the best value seen.  Returns (theta, value, grad_norm).
    """
    S = np.asarray(S, dtype=float)
    n = len(S)
    if radius is None:
        radius = obj.radius
    rad = radius if math.isfinite(radius) else 1e6

    def full_grad(th):
        return obj.subgradient_batch(np.broadcast_to(th, (n, obj.dim)), S).mean(axis=0)

    def full_value(th):
        return float(obj.value_batch(np.broadcast_to(th, (n, obj.dim)), S).mean())

    if obj.dim == 1 and obj.convex:
        lo, hi = -rad, rad
        g_lo = full_grad(np.array([lo]))[0]
        g_hi = full_grad(np.array([hi]))[0]
        if g_lo >= 0:
            theta = np.array([lo])
        elif g_hi <= 0:
            theta = np.array([hi])
        else:
            for _ in range(200):
                mid = 0.5 * (lo + hi)
                if full_grad(np.array([mid]))[0] > 0:
                    hi = mid
                else:
                    lo = mid
                if hi - lo < 1e-15:
                    break
            theta = np.array([0.5 * (lo + hi)])
        g = full_grad(theta)
        return theta, full_value(theta), math.sqrt(float(g @ g))

    beta = obj.constants().beta
    step = 1.0 / beta if beta > 0 else 1.0
    theta = np.zeros(obj.dim)
    best_val = full_value(theta)
    best_theta = theta.copy()
    best_gnorm = math.inf
    stale = 0
    for _ in range(max_iter):
        g = full_grad(theta)
        gnorm = math.sqrt(float(g @ g))
        val = full_value(theta)
        if val < best_val - 1e-14:
            best_val, best_theta, best_gnorm = val, theta.copy(), gnorm
            stale = 0
        else:
            stale += 1
        if gnorm <= tol or stale > 300:
            # kinks make the subgradient chatter; the value has converged
            break
        theta_next = theta - step * g
        if math.isfinite(radius):
            norm = math.sqrt(float(theta_next @ theta_next))
            if norm > radius:
                theta_next *= radius / norm
        theta = theta_next
    return best_theta, best_val, best_gnorm


@dataclass
class GapEstimate:
    """Monte-Carlo generalization gap and optimization gap at theta^T."""

    gen_gap: float
    gen_gap_ci: float
    opt_gap: float | None
    opt_note: str
    per_replicate_gap: np.ndarray
    test_sample_size: int
    replicates: int

    def as_dict(self) -> dict:
        return {
            "gen_gap": self.gen_gap,
            "gen_gap_ci": self.gen_gap_ci,
            "opt_gap": self.opt_gap,
            "opt_note": self.opt_note,
            "test_sample_size": self.test_sample_size,
            "replicates": self.replicates,
        }


def estimate_gaps(
    obj: Objective,
    n: int,
    schedule: ScheduleSpec,
    scheme: str,
    T: int,
    replicates: int,
    n_test: int,
    seed: int,
    radius: float | None = None,
    want_opt: bool = True,
) -> GapEstimate:
    """Generalization gap (fresh-sample Monte Carlo minus training risk)
    and optimization gap (training risk above the reference minimizer)."""
    if n_test < 1000:
        raise RejectedInput("need at least 1000 test examples")
    if replicates < 2:
        raise RejectedInput("need at least 2 replicates for a CI")
    if scheme == FULL_BATCH:
        raise RejectedInput("gap estimation targets stochastic schemes")
    if radius is None:
        radius = obj.radius
    alphas = schedule.alphas(T)
    seqs = np.random.SeedSequence(seed).spawn(replicates)
    m = obj.example_dim
    S = np.empty((replicates, n, m))
    streams = np.empty((replicates, T), dtype=int)
    tests = np.empty((replicates, n_test, m))
    for r, sq in enumerate(seqs):
        rng = np.random.default_rng(sq)
        S[r] = obj.sample_examples(rng, n)
        streams[r] = index_stream(scheme, n, T, rng)
        tests[r] = obj.sample_examples(rng, n_test)
    theta = _single_sweep(obj, S, streams, alphas, radius)

    gaps = np.empty(replicates)
    train_risks = np.empty(replicates)
    for r in range(replicates):
        th_rows = np.broadcast_to(theta[r], (n_test, obj.dim))
        test_risk = float(obj.value_batch(th_rows, tests[r]).mean())
        tr_rows = np.broadcast_to(theta[r], (n, obj.dim))
        train_risk = float(obj.value_batch(tr_rows, S[r]).mean())
        gaps[r] = test_risk - train_risk
        train_risks[r] = train_risk

    gen_gap = float(gaps.mean())
    sd = float(gaps.std(ddof=1))
    ci = _Z95 * sd / math.sqrt(replicates)

    opt_gap = None
    note = ""
    if want_opt:
        if obj.convex:
            opt_vals = np.empty(replicates)
            for r in range(replicates):
                _, ref_val, _ = reference_minimizer(obj, S[r], radius)
                opt_vals[r] = train_risks[r] - ref_val
            opt_gap = float(opt_vals.mean())
        else:
            note = "opt gap unavailable for non-convex families; run convergence_probe"
    return GapEstimate(
        gen_gap=gen_gap,
        gen_gap_ci=ci,
        opt_gap=opt_gap,
        opt_note=note,
        per_replicate_gap=gaps,
        test_sample_size=n_test,
        replicates=replicates,
    )


def sweep_point(
    obj: Objective,
    n: int,
    schedule: ScheduleSpec,
    scheme: str,
    T: int,
    replicates: int,
    n_test: int,
    seed: int,
    radius: float | None = None,
):
    """Per-replicate (gen_gap, delta_T) at one grid point.

    Seeds depend only on (seed, replicate), so sweeping a grid of
    objectives with the same seed yields common random numbers: identical
    data, differing indices, index streams, and test draws at every grid
    value.
    """
    if radius is None:
        radius = obj.radius
    alphas = schedule.alphas(T)
    seqs = np.random.SeedSequence(seed).spawn(replicates)
    m = obj.example_dim
    S = np.empty((replicates, n, m))
    Sp = np.empty((replicates, n, m))
    streams = np.empty((replicates, T), dtype=int)
    tests = np.empty((replicates, n_test, m))
    for r, sq in enumerate(seqs):
        rng = np.random.default_rng(sq)
        s = obj.sample_examples(rng, n)
        redraw = obj.sample_examples(rng, 1)[0]
        i = int(rng.integers(0, n))
        S[r] = s
        Sp[r] = s
        Sp[r, i] = redraw
        streams[r] = index_stream(scheme, n, T, rng)
        tests[r] = obj.sample_examples(rng, n_test)
    delta, _, th1, _ = _coupled_sweep(
        obj, S, Sp, streams, alphas, radius, False, scheme == FULL_BATCH
    )
    gaps = np.empty(replicates)
    for r in range(replicates):
        th_rows = np.broadcast_to(th1[r], (n_test, obj.dim))
        test_risk = float(obj.value_batch(th_rows, tests[r]).mean())
        tr_rows = np.broadcast_to(th1[r], (n, obj.dim))
        gaps[r] = test_risk - float(obj.value_batch(tr_rows, S[r]).mean())
    return gaps, delta[:, -1]


@dataclass
class ProbeReport:
    """Stationarity probe for SGD on bounded (possibly non-convex) losses."""

    measured: float
    bound: float
    series: np.ndarray
    eta: float
    beta: float
    tau: float
    sigma_hat: float
    D_hat: float
    T: int
    alpha: float
    replicates: int

    @property
    def passed(self) -> bool:
        return self.measured <= self.bound

    def as_dict(self) -> dict:
        return {
            "measured_min_mean_sq_grad": self.measured,
            "bound": self.bound,
            "eta": self.eta,
            "beta": self.beta,
            "tau": self.tau,
            "sigma_hat": self.sigma_hat,
            "D_hat": self.D_hat,
            "T": self.T,
            "alpha": self.alpha,
            "replicates": self.replicates,
            "passed": self.passed,
        }


def convergence_probe(
    obj: Objective,
    S: np.ndarray,
    T: int,
    replicates: int,
    tau: float,
    seed: int,
    radius: float | None = None,
) -> ProbeReport:
    """min_t of the across-seed mean ||grad R_S(theta_t)||^2 vs its bound.

    Runs SGD with alpha = 1/sqrt(T) (the probe's own schedule); sigma is
    the largest observed deviation of a single-example gradient from the
    full gradient, and D is the initial suboptimality against the
    reference minimizer.
    """
    if not 0.0 < tau < 1.0:
        raise RejectedInput("tau must lie in (0, 1)")
    cons = obj.constants()
    floor = (cons.beta / (2.0 * (1.0 - tau))) ** 2
    if T < floor:
        raise RejectedInput(f"T must be at least (beta/(2(1-tau)))^2 = {floor:.3g}")
    S = np.asarray(S, dtype=float)
    n, m = S.shape
    if radius is None:
        radius = obj.radius
    alpha = 1.0 / math.sqrt(T)
    seqs = np.random.SeedSequence(seed).spawn(replicates)
    streams = np.empty((replicates, T), dtype=int)
    for r, sq in enumerate(seqs):
        rng = np.random.default_rng(sq)
        streams[r] = index_stream(WITH_REPLACEMENT, n, T, rng)

    M = replicates
    th = np.zeros((M, obj.dim))
    rows = np.arange(M)
    flat_S = np.tile(S, (M, 1))
    series = np.empty(T + 1)
    sigma_hat = 0.0
    for k in range(T + 1):
        big = np.repeat(th, n, axis=0)
        grads = obj.subgradient_batch(big, flat_S).reshape(M, n, obj.dim)
        gfull = grads.mean(axis=1)
        series[k] = float((np.einsum("ij,ij->i", gfull, gfull)).mean())
        if k == T:
            break
        gstep = grads[rows, streams[:, k]]
        dev = _norm_rows(gstep - gfull)
        sigma_hat = max(sigma_hat, float(dev.max()))
        th = _project_rows(th - alpha * gstep, radius)

    _, ref_val, _ = reference_minimizer(obj, S, radius)
    th0 = np.zeros((n, obj.dim))
    d_hat = float(obj.value_batch(th0, S).mean()) - ref_val
    d_hat = max(d_hat, 0.0)
    bound = bnd.convergence_bound(cons.eta, tau, sigma_hat, d_hat, cons.beta, T)
    return ProbeReport(
        measured=float(series.min()),
        bound=bound,
        series=series,
        eta=cons.eta,
        beta=cons.beta,
        tau=tau,
        sigma_hat=sigma_hat,
        D_hat=d_hat,
        T=T,
        alpha=alpha,
        replicates=replicates,
    )
