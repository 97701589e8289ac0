"""Projected stochastic subgradient descent with replayable trajectories.

A run is fully determined by (objective, dataset, schedule, scheme, T,
seed): index streams come from a seeded generator, the update is

    theta^{t+1} = Pi_R(theta^t - alpha_t * d(theta^t, z_{i_t})),

and the optional trajectory average theta_bar = mean(theta^1..theta^T).
Schemes: per-step uniform resampling, one seeded permutation cycled over
epochs, or deterministic full-batch descent (i_t is recorded as -1).
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import RejectedInput
from .objectives import Objective

WITH_REPLACEMENT = "with-replacement"
FIXED_PERMUTATION = "fixed-permutation"
FULL_BATCH = "full-batch"
_SCHEMES = (WITH_REPLACEMENT, FIXED_PERMUTATION, FULL_BATCH)


@dataclass(frozen=True)
class ScheduleSpec:
    """Step-size rule alpha_t for t = 1..T.

    fixed        alpha_t = alpha
    diminishing  alpha_t = c / t
    cyclic       linear 0 -> peak on [0, t_peak], peak -> 0 on [t_peak, horizon]
    piecewise    alpha_t = value of the last break with t_break <= t
    cap          enforced upper bound on every alpha_t (applied last)
    """

    kind: str
    alpha: float | None = None
    c: float | None = None
    peak: float | None = None
    t_peak: int | None = None
    horizon: int | None = None
    breaks: tuple[tuple[int, float], ...] | None = None
    cap: float | None = None

    @classmethod
    def fixed(cls, alpha: float, cap: float | None = None) -> "ScheduleSpec":
        if alpha < 0:
            raise RejectedInput("alpha must be nonnegative")
        return cls(kind="fixed", alpha=alpha, cap=cap)

    @classmethod
    def diminishing(cls, c: float, cap: float | None = None) -> "ScheduleSpec":
        if c < 0:
            raise RejectedInput("c must be nonnegative")
        return cls(kind="diminishing", c=c, cap=cap)

    @classmethod
    def cyclic(
        cls, peak: float, t_peak: int, horizon: int, cap: float | None = None
    ) -> "ScheduleSpec":
        if peak < 0 or not (0 < t_peak < horizon):
            raise RejectedInput("need peak >= 0 and 0 < t_peak < horizon")
        return cls(kind="cyclic", peak=peak, t_peak=t_peak, horizon=horizon, cap=cap)

    @classmethod
    def piecewise(cls, breaks, cap: float | None = None) -> "ScheduleSpec":
        breaks = tuple((int(t), float(a)) for t, a in breaks)
        if not breaks or breaks[0][0] != 1:
            raise RejectedInput("piecewise breaks must start at t=1")
        ts = [t for t, _ in breaks]
        if sorted(ts) != ts or len(set(ts)) != len(ts):
            raise RejectedInput("piecewise breaks must be strictly increasing")
        if any(a < 0 for _, a in breaks):
            raise RejectedInput("step sizes must be nonnegative")
        return cls(kind="piecewise", breaks=breaks, cap=cap)

    def alpha_at(self, t: int) -> float:
        if t < 1:
            raise RejectedInput("steps are 1-indexed")
        if self.kind == "fixed":
            a = self.alpha
        elif self.kind == "diminishing":
            a = self.c / t
        elif self.kind == "cyclic":
            if t > self.horizon:
                raise RejectedInput(f"t={t} beyond cyclic horizon {self.horizon}")
            if t <= self.t_peak:
                a = self.peak * t / self.t_peak
            else:
                a = self.peak * (self.horizon - t) / (self.horizon - self.t_peak)
        elif self.kind == "piecewise":
            a = self.breaks[0][1]
            for t_break, val in self.breaks:
                if t_break <= t:
                    a = val
                else:
                    break
        else:
            raise RejectedInput(f"unknown schedule kind {self.kind!r}")
        if self.cap is not None:
            a = min(a, self.cap)
        return a

    def alphas(self, T: int) -> np.ndarray:
        return np.array([self.alpha_at(t) for t in range(1, T + 1)])

    def as_dict(self) -> dict:
        out = {"kind": self.kind}
        for name in ("alpha", "c", "peak", "t_peak", "horizon", "cap"):
            val = getattr(self, name)
            if val is not None:
                out[name] = val
        if self.breaks is not None:
            out["breaks"] = [list(b) for b in self.breaks]
        return out


def schedule_alpha(spec: ScheduleSpec, t: int) -> float:
    """Step size at step t (1-indexed)."""
    return spec.alpha_at(t)


_SCHEDULE_ARGS = {
    "fixed": ("alpha",),
    "diminishing": ("c",),
    "cyclic": ("peak", "t_peak", "horizon"),
    "piecewise": ("breaks",),
}


def schedule_from_config(config: dict) -> ScheduleSpec:
    cfg = dict(config)
    kind = cfg.pop("kind", None)
    cap = cfg.pop("cap", None)
    if kind not in _SCHEDULE_ARGS:
        raise RejectedInput(f"unknown schedule kind {kind!r}")
    missing = [k for k in _SCHEDULE_ARGS[kind] if k not in cfg]
    if missing:
        raise RejectedInput(f"schedule config missing keys {missing}")
    args = [cfg.pop(k) for k in _SCHEDULE_ARGS[kind]]
    if cfg:
        raise RejectedInput(f"unknown schedule keys {sorted(cfg)}")
    return getattr(ScheduleSpec, kind)(*args, cap=cap)


def index_stream(scheme: str, n: int, T: int, rng: np.random.Generator) -> np.ndarray:
    """Sample indices i_1..i_T for the given selection scheme."""
    if scheme == WITH_REPLACEMENT:
        return rng.integers(0, n, size=T)
    if scheme == FIXED_PERMUTATION:
        perm = rng.permutation(n)
        reps = -(-T // n)
        return np.tile(perm, reps)[:T]
    if scheme == FULL_BATCH:
        return np.full(T, -1, dtype=int)
    raise RejectedInput(f"unknown scheme {scheme!r}")


def project_ball(theta: np.ndarray, radius: float | None) -> np.ndarray:
    if radius is None or not math.isfinite(radius):
        return theta
    norm = math.sqrt(float(theta @ theta))
    if norm > radius:
        return theta * (radius / norm)
    return theta


@dataclass
class TrajectoryRecord:
    """Per-step log of one SGD run; same seed replays the same record."""

    t: np.ndarray
    indices: np.ndarray
    alphas: np.ndarray
    losses: np.ndarray
    grad_norms: np.ndarray
    final_theta: np.ndarray
    swa_theta: np.ndarray | None
    best_theta: np.ndarray
    best_loss: float
    seed: int
    scheme: str
    iterates: np.ndarray | None = None

    def theta_digest(self) -> str:
        return hashlib.sha256(np.ascontiguousarray(self.final_theta).tobytes()).hexdigest()

    def to_csv(self, path) -> None:
        """CSV columns t,i_t,alpha,loss,grad_norm with a JSON footer line."""
        lines = ["t,i_t,alpha,loss,grad_norm"]
        for k in range(len(self.t)):
            lines.append(
                f"{self.t[k]},{self.indices[k]},"
                f"{format(self.alphas[k], '.17g')},"
                f"{format(self.losses[k], '.17g')},"
                f"{format(self.grad_norms[k], '.17g')}"
            )
        footer = {
            "final_theta_digest": self.theta_digest(),
            "seed": int(self.seed),
            "scheme": self.scheme,
        }
        lines.append("# " + json.dumps(footer, sort_keys=True))
        with open(path, "w") as fh:
            fh.write("\n".join(lines) + "\n")


def run(
    obj: Objective,
    S: np.ndarray,
    schedule: ScheduleSpec,
    scheme: str,
    T: int,
    seed: int,
    swa: bool = False,
    radius: float | None = None,
    theta0: np.ndarray | None = None,
    stream: np.ndarray | None = None,
    keep_iterates: bool = False,
) -> TrajectoryRecord:
    """Run projected SGD for T steps and log every step.

    `stream` injects a precomputed index stream (used for coupling two
    runs on shared randomness); otherwise the stream is drawn from the
    seed.  radius=None projects onto the objective's own domain ball.
    """
    S = np.asarray(S, dtype=float)
    if S.ndim != 2 or len(S) == 0:
        raise RejectedInput("dataset must be a nonempty (n, m) array")
    if scheme not in _SCHEMES:
        raise RejectedInput(f"unknown scheme {scheme!r}")
    n = len(S)
    if radius is None:
        radius = obj.radius
    rng = np.random.default_rng(seed)
    if stream is None:
        stream = index_stream(scheme, n, T, rng)
    alphas = schedule.alphas(T)
    theta = np.zeros(obj.dim) if theta0 is None else np.asarray(theta0, dtype=float).copy()

    losses = np.empty(T)
    grad_norms = np.empty(T)
    swa_acc = np.zeros(obj.dim)
    iterates = np.empty((T, obj.dim)) if keep_iterates else None
    best_loss = math.inf
    best_theta = theta.copy()

    theta_rows = theta[None, :]
    for k in range(T):
        if scheme == FULL_BATCH:
            vals = obj.value_batch(np.broadcast_to(theta, (n, obj.dim)), S)
            grads = obj.subgradient_batch(np.broadcast_to(theta, (n, obj.dim)), S)
            loss = float(vals.mean())
            grad = grads.mean(axis=0)
        else:
            z = S[stream[k]][None, :]
            theta_rows = theta[None, :]
            loss = float(obj.value_batch(theta_rows, z)[0])
            grad = obj.subgradient_batch(theta_rows, z)[0]
        losses[k] = loss
        grad_norms[k] = math.sqrt(float(grad @ grad))
        if loss < best_loss:
            best_loss = loss
            best_theta = theta.copy()
        theta = project_ball(theta - alphas[k] * grad, radius)
        swa_acc += theta
        if keep_iterates:
            iterates[k] = theta

    return TrajectoryRecord(
        t=np.arange(1, T + 1),
        indices=stream.copy(),
        alphas=alphas,
        losses=losses,
        grad_norms=grad_norms,
        final_theta=theta,
        swa_theta=swa_acc / T if swa else None,
        best_theta=best_theta,
        best_loss=best_loss,
        seed=seed,
        scheme=scheme,
        iterates=iterates,
    )


def tstar(D: float, alpha: float, L: float, eta: float, n: int) -> float:
    """Step count balancing the divergence and optimization terms,
    T* = D / (alpha * sqrt(L*eta + 2 L^2 / n))."""
    if D <= 0 or alpha <= 0 or L <= 0 or eta < 0 or n <= 0:
        raise RejectedInput("need D, alpha, L > 0, eta >= 0, n > 0")
    denom = alpha * math.sqrt(L * eta + 2.0 * L * L / n)
    if denom == 0:
        raise RejectedInput("denominator is zero (eta = 0 and n = inf)")
    return D / denom
