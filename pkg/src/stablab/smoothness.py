"""Empirical smoothness certification and randomized inequality checking.

The central notion: h is beta-gradient Lipschitz up to an additive slack
eta when ||d(theta_1) - d(theta_2)|| <= beta ||theta_1 - theta_2|| + eta
for all pairs.  The checks below verify the calculus this slack induces
(descent inequality, co-coercivity, expansiveness of the SGD update map)
by sampling pairs and reporting every violation with replay data.

Uniform pairs almost never witness the slack, so the sampler mixes in
kink-straddling pairs: points placed a distance of 1e-3..1e-1 apart
across the objective's known nonsmooth loci.  Sampling is chunked so the
first N pairs of a stream are the same for every larger N (the observed
slack is then monotone in the sample count).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import RejectedInput, UnsupportedOperation
from .objectives import Objective

TOLERANCE = 1e-9
_CHUNK = 4096
_MAX_STORED_VIOLATIONS = 50

DESCENT = "descent"
COCOERCIVE = "cocoercive"
EXPANSIVE_GENERAL = "expansive-general"
EXPANSIVE_CONVEX = "expansive-convex"
CONTRACTIVE_STRONGLY = "contractive-strongly"


@dataclass
class Violation:
    theta1: np.ndarray
    theta2: np.ndarray
    z: np.ndarray
    slack: float

    def as_dict(self) -> dict:
        return {
            "theta1": self.theta1.tolist(),
            "theta2": self.theta2.tolist(),
            "z": self.z.tolist(),
            "slack": self.slack,
        }


@dataclass
class PropertyReport:
    property_id: str
    pairs_tested: int
    violations: list[Violation]
    worst_slack: float
    params: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return not self.violations

    def to_json(self) -> str:
        return json.dumps(
            {
                "property_id": self.property_id,
                "pairs_tested": self.pairs_tested,
                "passed": self.passed,
                "violation_count": len(self.violations),
                "violations": [v.as_dict() for v in self.violations],
                "worst_slack": self.worst_slack,
                "params": self.params,
            },
            sort_keys=True,
        )


@dataclass
class SmoothnessCertificate:
    L_hat: float
    beta_hat: float
    eta_hat: float
    sample_count: int
    sampler_spec: dict
    max_violation: float

    def to_json(self) -> str:
        return json.dumps(
            {
                "L_hat": self.L_hat,
                "beta_hat": self.beta_hat,
                "eta_hat": self.eta_hat,
                "sample_count": self.sample_count,
                "sampler_spec": self.sampler_spec,
                "max_violation": self.max_violation,
            },
            sort_keys=True,
        )


def _unit_rows(rng: np.random.Generator, count: int, dim: int) -> np.ndarray:
    g = rng.standard_normal((count, dim))
    norms = np.sqrt(np.einsum("ij,ij->i", g, g))
    norms[norms == 0] = 1.0
    return g / norms[:, None]


def _ball_uniform(
    rng: np.random.Generator, count: int, dim: int, radius: float
) -> np.ndarray:
    u = _unit_rows(rng, count, dim)
    r = radius * rng.random(count) ** (1.0 / dim)
    return u * r[:, None]


def _project_rows(thetas: np.ndarray, radius: float) -> np.ndarray:
    if not math.isfinite(radius):
        return thetas
    norms = np.sqrt(np.einsum("ij,ij->i", thetas, thetas))
    scale = np.where(norms > radius, radius / np.where(norms > 0, norms, 1.0), 1.0)
    return thetas * scale[:, None]


def _pair_chunk(obj: Objective, seed: int, j: int, ball: float, kink_fraction: float):
    """Deterministic chunk j of the pair stream for the given seed."""
    rng = np.random.default_rng(np.random.SeedSequence([seed, j]))
    dim = obj.dim
    u = rng.random(_CHUNK)
    zs = obj.sample_examples(rng, _CHUNK)
    p1 = _ball_uniform(rng, _CHUNK, dim, ball)
    p2 = _ball_uniform(rng, _CHUNK, dim, ball)
    dirs = _unit_rows(rng, _CHUNK, dim)
    gaps = 10.0 ** (-rng.integers(1, 4, _CHUNK).astype(float))
    probes = obj.kink_probes(rng, _CHUNK)

    kf = kink_fraction if probes is not None else 0.0
    kink = u < kf
    rest = np.where(u >= kf, (u - kf) / max(1.0 - kf, 1e-12), 0.0)
    local = (~kink) & (rest >= 0.6)

    theta1 = p1.copy()
    theta2 = np.where(local[:, None], p1 + gaps[:, None] * dirs, p2)
    if probes is not None:
        anchors, kdirs, kz = probes
        off = 0.5 * gaps[:, None] * kdirs
        theta1 = np.where(kink[:, None], anchors - off, theta1)
        theta2 = np.where(kink[:, None], anchors + off, theta2)
        zs = np.where(kink[:, None], kz, zs)
    theta1 = _project_rows(theta1, obj.radius)
    theta2 = _project_rows(theta2, obj.radius)
    return theta1, theta2, zs


def sample_pairs(
    obj: Objective,
    N: int,
    seed: int,
    ball_radius: float | None = None,
    kink_fraction: float = 0.3,
):
    """First N pairs of the deterministic stream (prefix-stable in N)."""
    if not 0.0 <= kink_fraction <= 1.0:
        raise RejectedInput("kink_fraction must lie in [0, 1]")
    ball = ball_radius if ball_radius is not None else obj.sampling_radius
    chunks = -(-N // _CHUNK)
    parts = [_pair_chunk(obj, seed, j, ball, kink_fraction) for j in range(chunks)]
    theta1 = np.concatenate([p[0] for p in parts])[:N]
    theta2 = np.concatenate([p[1] for p in parts])[:N]
    zs = np.concatenate([p[2] for p in parts])[:N]
    return theta1, theta2, zs


def _norm_rows(a: np.ndarray) -> np.ndarray:
    return np.sqrt(np.einsum("ij,ij->i", a, a))


def estimate_constants(
    obj: Objective,
    N: int,
    seed: int,
    ball_radius: float | None = None,
    kink_fraction: float = 0.3,
) -> SmoothnessCertificate:
    """Estimate (L, beta, eta) from N sampled pairs.

    When the family carries analytic constants, beta is held fixed at the
    analytic value and eta is the smallest slack covering every sampled
    pair; otherwise (beta, eta) are fit by minimizing eta over a grid of
    beta candidates (the pair is not identifiable from the inequality
    alone).
    """
    if N < 2:
        raise RejectedInput("need at least 2 pairs")
    ball = ball_radius if ball_radius is not None else obj.sampling_radius
    theta1, theta2, zs = sample_pairs(obj, N, seed, ball, kink_fraction)
    h1 = obj.value_batch(theta1, zs)
    h2 = obj.value_batch(theta2, zs)
    g1 = obj.subgradient_batch(theta1, zs)
    g2 = obj.subgradient_batch(theta2, zs)
    dtheta = _norm_rows(theta1 - theta2)
    dgrad = _norm_rows(g1 - g2)
    sep = dtheta > 1e-12
    l_hat = float((np.abs(h1 - h2)[sep] / dtheta[sep]).max(initial=0.0))

    cons = obj.constants()
    if cons.provenance == "analytic":
        beta_hat = cons.beta
    else:
        ratios = dgrad[sep] / dtheta[sep]
        top = float(ratios.max(initial=0.0))
        if top <= 0.0:
            candidates = np.array([0.0])
        else:
            candidates = np.concatenate([[0.0], np.geomspace(1e-4 * top, top, 25)])
        etas = [float((dgrad - b * dtheta).max(initial=0.0)) for b in candidates]
        beta_hat = float(candidates[int(np.argmin(etas))])
    eta_hat = max(0.0, float((dgrad - beta_hat * dtheta).max(initial=0.0)))
    max_violation = float((dgrad - beta_hat * dtheta - eta_hat).max(initial=0.0))
    return SmoothnessCertificate(
        L_hat=l_hat,
        beta_hat=beta_hat,
        eta_hat=eta_hat,
        sample_count=N,
        sampler_spec={
            "ball_radius": ball,
            "distribution": "uniform-ball + kink-straddle",
            "seed": seed,
            "kink_fraction": kink_fraction,
        },
        max_violation=max_violation,
    )


def _collect(property_id, theta1, theta2, zs, slack, params) -> PropertyReport:
    bad = np.flatnonzero(slack > TOLERANCE)
    order = bad[np.argsort(slack[bad])[::-1]][:_MAX_STORED_VIOLATIONS]
    violations = [
        Violation(theta1[k].copy(), theta2[k].copy(), zs[k].copy(), float(slack[k]))
        for k in order
    ]
    report = PropertyReport(
        property_id=property_id,
        pairs_tested=len(slack),
        violations=violations,
        worst_slack=float(slack.max(initial=-math.inf)),
        params=params,
    )
    report.params["violation_total"] = int(len(bad))
    return report


def _descent_slack(obj, theta1, theta2, zs, beta, eta):
    h1 = obj.value_batch(theta1, zs)
    h2 = obj.value_batch(theta2, zs)
    g2 = obj.subgradient_batch(theta2, zs)
    d = theta1 - theta2
    dist = _norm_rows(d)
    rhs = np.einsum("ij,ij->i", g2, d) + 0.5 * beta * dist**2 + eta * dist
    return (h1 - h2) - rhs


def check_descent(
    obj: Objective,
    beta: float,
    eta: float,
    N: int,
    seed: int,
    kink_fraction: float = 0.3,
) -> PropertyReport:
    """h(t1) - h(t2) <= <d(t2), t1 - t2> + beta/2 ||t1-t2||^2 + eta ||t1-t2||."""
    if beta < 0 or eta < 0:
        raise RejectedInput("beta and eta must be nonnegative")
    theta1, theta2, zs = sample_pairs(obj, N, seed, kink_fraction=kink_fraction)
    slack = _descent_slack(obj, theta1, theta2, zs, beta, eta)
    return _collect(DESCENT, theta1, theta2, zs, slack, {"beta": beta, "eta": eta})


def _cocoercive_slack(obj, theta1, theta2, zs, beta, eta):
    g1 = obj.subgradient_batch(theta1, zs)
    g2 = obj.subgradient_batch(theta2, zs)
    dg = g1 - g2
    inner = np.einsum("ij,ij->i", dg, theta1 - theta2)
    lower = np.maximum(_norm_rows(dg) - eta, 0.0) ** 2 / beta
    return lower - inner


def check_cocoercive(
    obj: Objective,
    beta: float,
    eta: float,
    N: int,
    seed: int,
    kink_fraction: float = 0.3,
) -> PropertyReport:
    """<d1 - d2, t1 - t2> >= [||d1 - d2|| - eta]_+^2 / beta (convex h)."""
    if not obj.convex:
        raise UnsupportedOperation("co-coercivity requires a convex family")
    if beta <= 0 or eta < 0:
        raise RejectedInput("need beta > 0 and eta >= 0")
    theta1, theta2, zs = sample_pairs(obj, N, seed, kink_fraction=kink_fraction)
    slack = _cocoercive_slack(obj, theta1, theta2, zs, beta, eta)
    return _collect(COCOERCIVE, theta1, theta2, zs, slack, {"beta": beta, "eta": eta})


_MODES = {
    "general": EXPANSIVE_GENERAL,
    "convex": EXPANSIVE_CONVEX,
    "strongly": CONTRACTIVE_STRONGLY,
}


def _expansive_slack(obj, theta1, theta2, zs, alpha, factor, eta):
    g1 = obj.subgradient_batch(theta1, zs)
    g2 = obj.subgradient_batch(theta2, zs)
    gdiff = (theta1 - alpha * g1) - (theta2 - alpha * g2)
    return _norm_rows(gdiff) - factor * _norm_rows(theta1 - theta2) - alpha * eta


def check_update_expansiveness(
    obj: Objective,
    alpha: float,
    mode: str,
    N: int,
    seed: int,
    beta: float | None = None,
    eta: float | None = None,
    gamma: float | None = None,
    kink_fraction: float = 0.3,
) -> PropertyReport:
    """Expansion factor of G(theta) = theta - alpha d(theta, z).

    general   ||G(t1) - G(t2)|| <= (1 + alpha beta) ||t1 - t2|| + alpha eta
    convex    ... <= ||t1 - t2|| + alpha eta          (needs alpha <= 1/beta)
    strongly  ... <= (1 - alpha gamma) ||t1 - t2|| + alpha eta   (same cap)
    """
    if mode not in _MODES:
        raise RejectedInput(f"unknown mode {mode!r}")
    cons = obj.constants()
    beta = cons.beta if beta is None else beta
    eta = cons.eta if eta is None else eta
    if alpha < 0:
        raise RejectedInput("alpha must be nonnegative")
    if mode in ("convex", "strongly"):
        if not obj.convex:
            raise UnsupportedOperation(f"{mode} mode requires a convex family")
        if beta > 0 and alpha > 1.0 / beta + 1e-12:
            raise RejectedInput("convex/strongly modes require alpha <= 1/beta")
    if mode == "strongly":
        gamma = cons.gamma if gamma is None else gamma
        if gamma is None:
            raise RejectedInput("strongly mode needs a strong convexity modulus")
        factor = 1.0 - alpha * gamma
    elif mode == "convex":
        factor = 1.0
    else:
        factor = 1.0 + alpha * beta
    theta1, theta2, zs = sample_pairs(obj, N, seed, kink_fraction=kink_fraction)
    slack = _expansive_slack(obj, theta1, theta2, zs, alpha, factor, eta)
    params = {"alpha": alpha, "beta": beta, "eta": eta, "factor": factor}
    if mode == "strongly":
        params["gamma"] = gamma
    return _collect(_MODES[mode], theta1, theta2, zs, slack, params)


def replay_slack(
    obj: Objective,
    property_id: str,
    theta1,
    theta2,
    z,
    beta: float | None = None,
    eta: float | None = None,
    alpha: float | None = None,
    factor: float | None = None,
) -> float:
    """Recompute the slack of one stored pair (violations are replayable)."""
    t1 = np.atleast_2d(np.asarray(theta1, dtype=float))
    t2 = np.atleast_2d(np.asarray(theta2, dtype=float))
    ze = np.atleast_2d(np.asarray(z, dtype=float))
    if property_id == DESCENT:
        return float(_descent_slack(obj, t1, t2, ze, beta, eta)[0])
    if property_id == COCOERCIVE:
        return float(_cocoercive_slack(obj, t1, t2, ze, beta, eta)[0])
    if property_id in (EXPANSIVE_GENERAL, EXPANSIVE_CONVEX, CONTRACTIVE_STRONGLY):
        return float(_expansive_slack(obj, t1, t2, ze, alpha, factor, eta)[0])
    raise RejectedInput(f"unknown property {property_id!r}")
