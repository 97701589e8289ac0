"""Closed-form divergence, generalization, and optimization bounds.

Pure functions of named constants.  Upper bounds on the expected
generalization gap of T-step SGD with step sizes alpha_t:

    convex           L (eta + 2L/n) sum_t alpha_t
    sub-optimal att. (2 L L_z (eps + d_eps) + 2L^2/n) sum_t alpha_t
    non-convex       min_{t0} B t0/(n-1) + (2L^2 + L eta n)/(beta (n-1)) (T/t0)^{beta c}
    strongly convex  L eta / gamma + 2 L^2 / (gamma n)
    trajectory avg   (L eta / 2 + L^2 / n) sum_t alpha_t

plus the matching divergence lower-bound shape eta alpha sqrt(T) +
L alpha T / n (constants exposed as multipliers, defaulting to 1).
Validity conditions (e.g. alpha_t <= 1/beta) are reported as flags and
never block evaluation.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import RejectedInput


@dataclass
class BoundReport:
    bound_id: str
    inputs: dict
    value: float | list
    validity_flags: dict = field(default_factory=dict)
    extra: dict = field(default_factory=dict)

    def to_json(self) -> str:
        payload = {
            "bound_id": self.bound_id,
            "inputs": self.inputs,
            "value": self.value,
            "validity_flags": self.validity_flags,
        }
        payload.update(self.extra)
        return json.dumps(payload, sort_keys=True)


def _require_nonneg(**kw) -> None:
    for name, val in kw.items():
        if val is None or val < 0:
            raise RejectedInput(f"{name} must be a nonnegative number")


def _sum_alphas(alphas) -> float:
    arr = np.atleast_1d(np.asarray(alphas, dtype=float))
    if (arr < 0).any():
        raise RejectedInput("step sizes must be nonnegative")
    return float(arr.sum())


def alpha_cap_flag(alphas, beta: float | None) -> str:
    """'satisfied' iff every alpha_t <= 1/beta (annotation only)."""
    if beta is None or beta <= 0:
        return "unchecked"
    arr = np.atleast_1d(np.asarray(alphas, dtype=float))
    return "satisfied" if (arr <= 1.0 / beta + 1e-12).all() else "violated"


def ub_convex(L: float, eta: float, n: int, alphas) -> float:
    """L (eta + 2L/n) sum_t alpha_t."""
    _require_nonneg(L=L, eta=eta)
    if n < 1:
        raise RejectedInput("n must be positive")
    return L * (eta + 2.0 * L / n) * _sum_alphas(alphas)


def ub_convex_series(L: float, eta: float, n: int, alphas) -> np.ndarray:
    """Running bound after each step (cumulative in sum alpha)."""
    _require_nonneg(L=L, eta=eta)
    if n < 1:
        raise RejectedInput("n must be positive")
    arr = np.atleast_1d(np.asarray(alphas, dtype=float))
    return L * (eta + 2.0 * L / n) * np.cumsum(arr)


def ub_convex_subopt(
    L: float, L_z: float, eps: float, d_eps: float, n: int, alphas
) -> float:
    """(2 L L_z (eps + d_eps) + 2 L^2 / n) sum_t alpha_t."""
    _require_nonneg(L=L, L_z=L_z, eps=eps, d_eps=d_eps)
    if n < 1:
        raise RejectedInput("n must be positive")
    if d_eps > 2.0 * eps:
        raise RejectedInput("attack sub-optimality is at most 2*eps")
    return (2.0 * L * L_z * (eps + d_eps) + 2.0 * L * L / n) * _sum_alphas(alphas)


def ub_nonconvex(
    B: float,
    beta: float,
    L: float,
    eta: float,
    n: int,
    T: int,
    c: float,
    t0: int | None = None,
):
    """Bound for diminishing steps alpha_t <= c/t on 0 <= h <= B.

    Returns (value, t0) where t0 minimizes B t0/(n-1) + C (T/t0)^{beta c}
    over the integers 1..n (or is forced by the caller), with
    C = (2L^2 + L eta n) / (beta (n-1)).
    """
    _require_nonneg(B=B, L=L, eta=eta)
    if beta <= 0 or c <= 0 or n < 2 or T < 1:
        raise RejectedInput("need beta > 0, c > 0, n >= 2, T >= 1")
    q = beta * c
    coef = (2.0 * L * L + L * eta * n) / (beta * (n - 1))

    def value_at(k: int) -> float:
        return B * k / (n - 1) + coef * (T / k) ** q

    if t0 is not None:
        if not 1 <= t0 <= n:
            raise RejectedInput("t0 must lie in [1, n]")
        return value_at(t0), t0
    best_k = min(range(1, n + 1), key=value_at)
    return value_at(best_k), best_k


def ub_nonconvex_simplified(B: float, beta: float, L: float, eta: float, n: int, T: int) -> float:
    """(B beta + (2L^2 + L eta n) T) / (beta (n-1)); the c = 1/beta, t0 = 1 form."""
    _require_nonneg(B=B, L=L, eta=eta)
    if beta <= 0 or n < 2 or T < 1:
        raise RejectedInput("need beta > 0, n >= 2, T >= 1")
    return (B * beta + (2.0 * L * L + L * eta * n) * T) / (beta * (n - 1))


def ub_strongly_convex(L: float, eta: float, gamma: float, n: int) -> float:
    """L eta / gamma + 2 L^2 / (gamma n); independent of T."""
    _require_nonneg(L=L, eta=eta)
    if gamma <= 0 or n < 1:
        raise RejectedInput("need gamma > 0 and n >= 1")
    return L * eta / gamma + 2.0 * L * L / (gamma * n)


def ub_swa(L: float, eta: float, n: int, alphas) -> float:
    """(L eta / 2 + L^2 / n) sum_t alpha_t; half the convex bound."""
    _require_nonneg(L=L, eta=eta)
    if n < 1:
        raise RejectedInput("n must be positive")
    return (L * eta / 2.0 + L * L / n) * _sum_alphas(alphas)


def ub_swa_series(L: float, eta: float, n: int, alphas) -> np.ndarray:
    _require_nonneg(L=L, eta=eta)
    if n < 1:
        raise RejectedInput("n must be positive")
    arr = np.atleast_1d(np.asarray(alphas, dtype=float))
    return (L * eta / 2.0 + L * L / n) * np.cumsum(arr)


def opt_convex(D: float, L: float, alphas) -> float:
    """(D^2 + L^2 sum alpha_t^2) / sum alpha_t; holds for some iterate k <= T."""
    _require_nonneg(D=D, L=L)
    arr = np.atleast_1d(np.asarray(alphas, dtype=float))
    if (arr < 0).any():
        raise RejectedInput("step sizes must be nonnegative")
    total = float(arr.sum())
    if total <= 0:
        raise RejectedInput("sum of step sizes must be positive")
    return (D * D + L * L * float((arr * arr).sum())) / total


def opt_strongly_convex(L: float, D: float, T: int) -> float:
    """L D^2 / T."""
    _require_nonneg(L=L, D=D)
    if T < 1:
        raise RejectedInput("T must be positive")
    return L * D * D / T


def tradeoff_fixed(L: float, eta: float, n: int, D: float, alpha: float, T) -> dict:
    """Excess-risk surrogate L eta T a + 2 L^2 T a/n + D^2/(T a) + L^2 a.

    T may be a scalar or an array; returns the term-wise breakdown so the
    divergence-driven term is visible next to the optimization terms.
    """
    _require_nonneg(L=L, eta=eta, D=D)
    if n < 1 or alpha <= 0:
        raise RejectedInput("need n >= 1 and alpha > 0")
    ts = np.atleast_1d(np.asarray(T, dtype=float))
    if (ts <= 0).any():
        raise RejectedInput("T must be positive")
    term_adv = L * eta * ts * alpha
    term_std = 2.0 * L * L * ts * alpha / n
    term_opt = D * D / (ts * alpha)
    term_resid = L * L * alpha * np.ones_like(ts)
    total = term_adv + term_std + term_opt + term_resid
    squeeze = np.isscalar(T) or np.asarray(T).ndim == 0
    out = {
        "T": ts,
        "total": total,
        "term_adv": term_adv,
        "term_std": term_std,
        "term_opt": term_opt,
        "term_resid": term_resid,
    }
    if squeeze:
        out = {k: float(v[0]) for k, v in out.items()}
    return out


def lb_uas(
    eta: float,
    L: float,
    alpha: float,
    T: int,
    n: int,
    c_eta: float = 1.0,
    c_L: float = 1.0,
) -> float:
    """Divergence lower-bound shape c_eta eta a sqrt(T) + c_L L a T / n.

    The hidden constants of the construction are exposed as multipliers
    and default to 1.
    """
    _require_nonneg(eta=eta, L=L, alpha=alpha, c_eta=c_eta, c_L=c_L)
    if T < 0 or n < 1:
        raise RejectedInput("need T >= 0 and n >= 1")
    return c_eta * eta * alpha * math.sqrt(T) + c_L * L * alpha * T / n


def lb_uas_series(eta, L, alpha, T, n, c_eta=1.0, c_L=1.0) -> np.ndarray:
    ts = np.arange(0, T + 1, dtype=float)
    return c_eta * eta * alpha * np.sqrt(ts) + c_L * L * alpha * ts / n


def beta2_strongly_concave(L_z: float, L_ztheta: float, mu: float, L_theta: float) -> float:
    """Gradient-Lipschitz constant L_z L_ztheta / mu + L_theta of the
    surrogate when the inner problem is mu-strongly concave."""
    _require_nonneg(L_z=L_z, L_ztheta=L_ztheta, L_theta=L_theta)
    if mu <= 0:
        raise RejectedInput("mu must be positive")
    return L_z * L_ztheta / mu + L_theta


def convergence_bound(
    eta: float, tau: float, sigma: float, D: float, beta: float, T: int
) -> float:
    """eta^2/tau^2 + 2 eta sigma/tau + (2/sqrt(T)) (D/tau + beta sigma^2/(2 tau))."""
    _require_nonneg(eta=eta, sigma=sigma, D=D, beta=beta)
    if not 0 < tau < 1:
        raise RejectedInput("tau must lie in (0, 1)")
    if T < 1:
        raise RejectedInput("T must be positive")
    return (
        eta * eta / (tau * tau)
        + 2.0 * eta * sigma / tau
        + (2.0 / math.sqrt(T)) * (D / tau + beta * sigma * sigma / (2.0 * tau))
    )


_SCALAR_BOUNDS = {
    "ub-convex": (ub_convex, ("L", "eta", "n", "alphas")),
    "ub-convex-subopt": (ub_convex_subopt, ("L", "L_z", "eps", "d_eps", "n", "alphas")),
    "ub-strongly-convex": (ub_strongly_convex, ("L", "eta", "gamma", "n")),
    "ub-swa": (ub_swa, ("L", "eta", "n", "alphas")),
    "opt-convex": (opt_convex, ("D", "L", "alphas")),
    "opt-strongly-convex": (opt_strongly_convex, ("L", "D", "T")),
    "lb-uas": (lb_uas, ("eta", "L", "alpha", "T", "n")),
    "beta2-strongly-concave": (beta2_strongly_concave, ("L_z", "L_ztheta", "mu", "L_theta")),
    "convergence": (convergence_bound, ("eta", "tau", "sigma", "D", "beta", "T")),
}


def evaluate(bound_id: str, params: dict) -> BoundReport:
    """Dispatch a bound by id; validity flags are attached, not enforced."""
    params = dict(params)
    beta = params.pop("beta_for_flag", None)
    if bound_id == "ub-nonconvex":
        value, t0 = ub_nonconvex(
            params["B"],
            params["beta"],
            params["L"],
            params["eta"],
            params["n"],
            params["T"],
            params["c"],
            params.get("t0"),
        )
        extra = {"t0": t0}
        if abs(params["c"] * params["beta"] - 1.0) < 1e-12:
            extra["simplified"] = ub_nonconvex_simplified(
                params["B"], params["beta"], params["L"], params["eta"],
                params["n"], params["T"],
            )
        return BoundReport("ub-nonconvex", params, value, extra=extra)
    if bound_id == "tradeoff-fixed":
        out = tradeoff_fixed(
            params["L"], params["eta"], params["n"], params["D"],
            params["alpha"], params["T"],
        )
        return BoundReport("tradeoff-fixed", params, out["total"], extra=out)
    if bound_id not in _SCALAR_BOUNDS:
        raise RejectedInput(f"unknown bound id {bound_id!r}")
    fn, names = _SCALAR_BOUNDS[bound_id]
    missing = [k for k in names if k not in params]
    if missing:
        raise RejectedInput(f"{bound_id} needs parameters {missing}")
    unknown = [k for k in params if k not in names]
    if unknown:
        raise RejectedInput(f"{bound_id} got unknown parameters {unknown}")
    value = fn(**{k: params[k] for k in names})
    flags = {}
    if "alphas" in names and beta is not None:
        flags["alpha_le_inv_beta"] = alpha_cap_flag(params["alphas"], beta)
    return BoundReport(bound_id, params, value, validity_flags=flags)
