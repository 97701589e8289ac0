"""Loss families with subgradient oracles and analytic constant metadata.

Every family evaluates a per-example loss h(theta, z) together with one
element of its subdifferential.  Robust families wrap a smooth base loss
g(theta, z) into the surrogate

    h(theta, z) = max_{||z' - z||_p <= eps} g(theta, z'),

whose subgradient is the base gradient taken at the inner maximizer
(the Danskin direction).  At kinks of max-type expressions the tie-break
is always "lowest-index active piece": candidate inner points are
enumerated with the -eps endpoint first, and the constant zero piece of
a piecewise max counts as index 0.

All evaluations are defined on the Euclidean ball ||theta|| <= radius so
that Lipschitz constants exist; `constants()` reports them for that ball.
Batch entry points (`value_batch`, `subgradient_batch`) are the primary
implementation and the scalar API delegates to them, so scalar and
vectorized paths agree bit for bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, asdict

import numpy as np

from .errors import RejectedInput, UnsupportedOperation

_DOMAIN_SLACK = 1e-9

CLOSED_FORM = "closed-form"
ENDPOINT_ENUMERATION = "endpoint-enumeration"
PGD = "pgd"
_SOLVERS = (CLOSED_FORM, ENDPOINT_ENUMERATION, PGD)


@dataclass(frozen=True)
class AdversarialConfig:
    """Inner-maximization setup for robust surrogates.

    epsilon        perturbation radius of the l_p ball around each example
    p              norm exponent (2 or inf)
    inner_solver   closed-form | endpoint-enumeration | pgd
    pgd_steps      ascent steps when inner_solver == pgd
    pgd_step       ascent step size, defaults to epsilon / 4
    delta_epsilon  declared sub-optimality of the attack (bound input only,
                   never measured online)
    """

    epsilon: float
    p: float = 2.0
    inner_solver: str = CLOSED_FORM
    pgd_steps: int = 10
    pgd_step: float | None = None
    delta_epsilon: float = 0.0

    def __post_init__(self) -> None:
        if self.epsilon < 0:
            raise RejectedInput("epsilon must be nonnegative")
        if not (self.p >= 1 or math.isinf(self.p)):
            raise RejectedInput("p must be >= 1 or inf")
        if self.inner_solver not in _SOLVERS:
            raise RejectedInput(f"unknown inner solver {self.inner_solver!r}")
        if self.pgd_steps < 1:
            raise RejectedInput("pgd_steps must be positive")
        if self.delta_epsilon < 0 or self.delta_epsilon > 2 * self.epsilon:
            raise RejectedInput("delta_epsilon must lie in [0, 2*epsilon]")

    @property
    def step(self) -> float:
        return self.pgd_step if self.pgd_step is not None else self.epsilon / 4.0

    @property
    def exact(self) -> bool:
        """Whether the solver attains the true inner maximum."""
        return self.inner_solver != PGD

    def as_dict(self) -> dict:
        d = asdict(self)
        d["p"] = "inf" if math.isinf(self.p) else self.p
        return d


@dataclass(frozen=True)
class ConstantsRecord:
    """Per-family constants on the domain ball.

    L        loss Lipschitz constant
    L_theta  gradient Lipschitz constant in theta of the base loss
    L_z      gradient Lipschitz constant in the example (w.r.t. the
             perturbation norm)
    beta     gradient-Lipschitz modulus of h
    eta      additive gradient slack of h (0 for smooth families)
    gamma    strong convexity modulus, when available
    B        uniform bound 0 <= h <= B, when available
    """

    L: float
    L_theta: float
    L_z: float
    beta: float
    eta: float
    gamma: float | None = None
    B: float | None = None
    provenance: str = "analytic"

    def __post_init__(self) -> None:
        for name in ("L", "L_theta", "L_z", "beta", "eta"):
            if getattr(self, name) < 0:
                raise RejectedInput(f"constant {name} must be nonnegative")
        if self.gamma is not None and self.gamma < 0:
            raise RejectedInput("gamma must be nonnegative")
        if self.provenance not in ("analytic", "estimated"):
            raise RejectedInput("provenance must be 'analytic' or 'estimated'")

    def as_dict(self) -> dict:
        return asdict(self)


class Objective:
    """Common protocol: pure, immutable, safe to share across threads."""

    family: str
    dim: int
    example_dim: int
    radius: float
    convex: bool
    adversarial: AdversarialConfig | None

    # -- scalar API ---------------------------------------------------------

    def value(self, theta, z) -> float:
        th, ze = self._as_rows(theta, z)
        return float(self.value_batch(th, ze)[0])

    def subgradient(self, theta, z) -> np.ndarray:
        th, ze = self._as_rows(theta, z)
        return self.subgradient_batch(th, ze)[0]

    def inner_maximize(self, theta, z):
        """Return (z_star, attained) with ||z_star - z||_p <= eps."""
        raise UnsupportedOperation(f"{self.family} has no adversarial config")

    # -- batch API (primary implementation) ---------------------------------

    def value_batch(self, thetas: np.ndarray, zs: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def subgradient_batch(self, thetas: np.ndarray, zs: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    # -- metadata ------------------------------------------------------------

    def constants(self) -> ConstantsRecord:
        raise NotImplementedError

    def sample_examples(self, rng: np.random.Generator, count: int) -> np.ndarray:
        raise NotImplementedError

    def kink_probes(self, rng: np.random.Generator, count: int):
        """(anchors, directions, examples) on the nonsmooth locus, or None."""
        return None

    @property
    def sampling_radius(self) -> float:
        return self.radius if math.isfinite(self.radius) else 1.0

    # -- helpers -------------------------------------------------------------

    def _as_rows(self, theta, z):
        th = np.atleast_2d(np.asarray(theta, dtype=float))
        ze = np.atleast_2d(np.asarray(z, dtype=float))
        if th.shape != (1, self.dim):
            raise RejectedInput(f"theta must have dimension {self.dim}")
        if ze.shape != (1, self.example_dim):
            raise RejectedInput(f"example must have dimension {self.example_dim}")
        return th, ze

    def _check_domain(self, thetas: np.ndarray) -> None:
        if not math.isfinite(self.radius):
            return
        norms = np.sqrt(np.einsum("ij,ij->i", thetas, thetas))
        worst = float(norms.max(initial=0.0))
        if worst > self.radius + _DOMAIN_SLACK:
            raise RejectedInput(
                f"theta norm {worst:.6g} outside domain ball of radius {self.radius:.6g}"
            )


def _dual_vector(thetas: np.ndarray, p: float) -> np.ndarray:
    """Unit-l_p direction maximizing <theta, v>; e_1 at theta = 0."""
    if math.isinf(p):
        v = np.sign(thetas)
        v[v == 0] = 1.0
        return v
    norms = np.sqrt(np.einsum("ij,ij->i", thetas, thetas))
    safe = np.where(norms > 0, norms, 1.0)
    v = thetas / safe[:, None]
    zero = norms == 0
    if zero.any():
        v[zero] = 0.0
        v[zero, 0] = 1.0
    return v


def _lp_project(delta: np.ndarray, eps: float, p: float) -> np.ndarray:
    """Project rows of delta onto the l_p ball of radius eps."""
    if math.isinf(p):
        return np.clip(delta, -eps, eps)
    norms = np.sqrt(np.einsum("ij,ij->i", delta, delta))
    scale = np.where(norms > eps, eps / np.where(norms > 0, norms, 1.0), 1.0)
    return delta * scale[:, None]


@dataclass(frozen=True)
class ShiftQuadratic(Objective):
    """g(theta, z) = 0.5 ||theta - z||^2 + 0.5 * ridge * ||theta||^2.

    The robust surrogate has the closed form 0.5 (||theta - z|| + eps)^2
    for an l_2 perturbation ball (coordinate-wise for l_inf); the inner
    maximizer pushes z directly away from theta.  Convex, and
    (1 + ridge)-strongly convex, for every ridge >= 0.
    """

    dim: int = 1
    radius: float = 1.0
    z_box: float = 0.5
    ridge: float = 0.0
    adversarial: AdversarialConfig | None = None
    family: str = field(default="shift-quadratic", init=False)
    convex: bool = field(default=True, init=False)

    def __post_init__(self) -> None:
        if self.dim < 1 or self.radius <= 0 or self.z_box <= 0 or self.ridge < 0:
            raise RejectedInput("dim, radius, z_box must be positive; ridge >= 0")
        adv = self.adversarial
        if adv is not None and adv.inner_solver == ENDPOINT_ENUMERATION:
            if not math.isinf(adv.p) and self.dim != 1:
                raise RejectedInput(
                    "endpoint enumeration needs p=inf or dim 1 for this family"
                )
            if self.dim > 12:
                raise RejectedInput("endpoint enumeration limited to dim <= 12")

    @property
    def example_dim(self) -> int:
        return self.dim

    def _eps(self) -> float:
        return self.adversarial.epsilon if self.adversarial is not None else 0.0

    def value_batch(self, thetas, zs):
        thetas = np.asarray(thetas, dtype=float)
        zs = np.asarray(zs, dtype=float)
        self._check_domain(thetas)
        ridge = 0.5 * self.ridge * np.einsum("ij,ij->i", thetas, thetas)
        adv = self.adversarial
        if adv is None or adv.epsilon == 0.0:
            w = thetas - zs
            return 0.5 * np.einsum("ij,ij->i", w, w) + ridge
        zstar = self._inner_batch(thetas, zs)
        w = thetas - zstar
        return 0.5 * np.einsum("ij,ij->i", w, w) + ridge

    def subgradient_batch(self, thetas, zs):
        thetas = np.asarray(thetas, dtype=float)
        zs = np.asarray(zs, dtype=float)
        self._check_domain(thetas)
        adv = self.adversarial
        if adv is None or adv.epsilon == 0.0:
            return (thetas - zs) + self.ridge * thetas
        zstar = self._inner_batch(thetas, zs)
        return (thetas - zstar) + self.ridge * thetas

    def _inner_batch(self, thetas, zs):
        """Row-wise inner maximizer z* of the base quadratic."""
        adv = self.adversarial
        eps, p = adv.epsilon, adv.p
        w = thetas - zs
        if adv.inner_solver == CLOSED_FORM:
            if math.isinf(p):
                s = np.sign(w)
                s[s == 0] = 1.0
                return zs - eps * s
            return zs - eps * _dual_vector(w, 2.0)
        if adv.inner_solver == ENDPOINT_ENUMERATION:
            return self._enumerate_endpoints(thetas, zs)
        return _pgd_inner(self._base_value, self._base_grad_z, thetas, zs, adv)

    def _enumerate_endpoints(self, thetas, zs):
        eps = self.adversarial.epsilon
        n, d = zs.shape
        best_val = np.full(n, -np.inf)
        best = np.empty_like(zs)
        # corners ordered with -eps before +eps per coordinate (lowest first)
        for bits in range(2 ** d):
            signs = np.array([1.0 if (bits >> k) & 1 else -1.0 for k in range(d)])
            cand = zs + eps * signs
            val = self._base_value(thetas, cand)
            take = val > best_val + 1e-15
            best[take] = cand[take]
            best_val = np.where(take, val, best_val)
        return best

    def _base_value(self, thetas, zs):
        w = thetas - zs
        return 0.5 * np.einsum("ij,ij->i", w, w) + 0.5 * self.ridge * np.einsum(
            "ij,ij->i", thetas, thetas
        )

    def _base_grad_z(self, thetas, zs):
        return zs - thetas

    def inner_maximize(self, theta, z):
        if self.adversarial is None:
            raise UnsupportedOperation("shift-quadratic without adversarial config")
        th, ze = self._as_rows(theta, z)
        self._check_domain(th)
        if self.adversarial.epsilon == 0.0:
            return ze[0].copy(), float(self._base_value(th, ze)[0])
        zstar = self._inner_batch(th, ze)
        return zstar[0], float(self._base_value(th, zstar)[0])

    def constants(self) -> ConstantsRecord:
        eps = self._eps()
        p = self.adversarial.p if self.adversarial is not None else 2.0
        # l_2 radius of the example box, inflated by the perturbation ball
        z_sup = self.z_box * math.sqrt(self.dim)
        infl = eps * (math.sqrt(self.dim) if math.isinf(p) else 1.0)
        l_z = math.sqrt(self.dim) if math.isinf(p) else 1.0
        grad_sup = (1.0 + self.ridge) * self.radius + z_sup + infl
        return ConstantsRecord(
            L=grad_sup,
            L_theta=1.0 + self.ridge,
            L_z=l_z,
            beta=1.0 + self.ridge,
            eta=2.0 * l_z * eps,
            gamma=1.0 + self.ridge,
            B=0.5 * (self.radius + z_sup + infl) ** 2
            + 0.5 * self.ridge * self.radius**2,
        )

    def sample_examples(self, rng, count):
        return rng.uniform(-self.z_box, self.z_box, size=(count, self.dim))

    def kink_probes(self, rng, count):
        if self._eps() == 0.0:
            return None
        zs = self.sample_examples(rng, count)
        anchors = zs.copy()
        # keep anchors strictly inside the domain ball
        norms = np.sqrt(np.einsum("ij,ij->i", anchors, anchors))
        lim = 0.95 * self.radius
        scale = np.where(norms > lim, lim / np.where(norms > 0, norms, 1.0), 1.0)
        anchors = anchors * scale[:, None]
        if math.isinf(self.adversarial.p) and self.dim > 1:
            dirs = np.zeros((count, self.dim))
            dirs[np.arange(count), rng.integers(0, self.dim, count)] = 1.0
        else:
            dirs = rng.standard_normal((count, self.dim))
            dirs /= np.sqrt(np.einsum("ij,ij->i", dirs, dirs))[:, None]
        return anchors, dirs, zs


def _pgd_inner(base_value, base_grad_z, thetas, zs, adv: AdversarialConfig):
    """Projected gradient ascent on z' -> g(theta, z'), started at z."""
    step = adv.step
    cur = zs.copy()
    for _ in range(adv.pgd_steps):
        g = base_grad_z(thetas, cur)
        if math.isinf(adv.p):
            move = np.sign(g)
        else:
            norms = np.sqrt(np.einsum("ij,ij->i", g, g))
            move = g / np.where(norms > 0, norms, 1.0)[:, None]
        cur = zs + _lp_project(cur + step * move - zs, adv.epsilon, adv.p)
    return cur


def _sigmoid(u):
    out = np.empty_like(u)
    pos = u >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-u[pos]))
    e = np.exp(u[~pos])
    out[~pos] = e / (1.0 + e)
    return out


@dataclass(frozen=True)
class LogisticLinear(Objective):
    """g(theta, (x, y)) = log(1 + exp(-y theta^T x)), labels y in {-1, +1}.

    The inner maximum over the l_p ball is attained at x - eps*y*v with v
    the dual unit vector of theta, so the surrogate is
    log(1 + exp(-y theta^T x + eps ||theta||_q)).  Examples are encoded as
    rows (x_1..x_d, y).
    """

    dim: int = 2
    radius: float = 1.0
    x_norm: float = 1.0
    adversarial: AdversarialConfig | None = None
    family: str = field(default="logistic-linear", init=False)
    convex: bool = field(default=True, init=False)

    def __post_init__(self) -> None:
        if self.dim < 1 or self.radius <= 0 or self.x_norm <= 0:
            raise RejectedInput("dim, radius, x_norm must be positive")
        adv = self.adversarial
        if adv is not None and adv.inner_solver == ENDPOINT_ENUMERATION:
            raise RejectedInput("logistic-linear supports closed-form or pgd solvers")

    @property
    def example_dim(self) -> int:
        return self.dim + 1

    def _split(self, zs):
        return zs[:, : self.dim], zs[:, self.dim]

    def value_batch(self, thetas, zs):
        thetas = np.asarray(thetas, dtype=float)
        zs = np.asarray(zs, dtype=float)
        self._check_domain(thetas)
        xs, ys = self._split(zs)
        xstar = self._inner_x(thetas, xs, ys)
        u = -ys * np.einsum("ij,ij->i", thetas, xstar)
        return np.logaddexp(0.0, u)

    def subgradient_batch(self, thetas, zs):
        thetas = np.asarray(thetas, dtype=float)
        zs = np.asarray(zs, dtype=float)
        self._check_domain(thetas)
        xs, ys = self._split(zs)
        xstar = self._inner_x(thetas, xs, ys)
        u = -ys * np.einsum("ij,ij->i", thetas, xstar)
        return (_sigmoid(u) * (-ys))[:, None] * xstar

    def _inner_x(self, thetas, xs, ys):
        adv = self.adversarial
        if adv is None or adv.epsilon == 0.0:
            return xs
        if adv.inner_solver == CLOSED_FORM:
            v = _dual_vector(thetas, adv.p)
            return xs - adv.epsilon * ys[:, None] * v
        zs_full = np.concatenate([xs, ys[:, None]], axis=1)

        def base_value(th, z):
            x, y = z[:, : self.dim], z[:, self.dim]
            return np.logaddexp(0.0, -y * np.einsum("ij,ij->i", th, x))

        def base_grad_z(th, z):
            x, y = z[:, : self.dim], z[:, self.dim]
            u = -y * np.einsum("ij,ij->i", th, x)
            gx = (_sigmoid(u) * (-y))[:, None] * th
            return np.concatenate([gx, np.zeros((len(th), 1))], axis=1)

        out = _pgd_inner(base_value, base_grad_z, thetas, zs_full, adv)
        return out[:, : self.dim]

    def inner_maximize(self, theta, z):
        if self.adversarial is None:
            raise UnsupportedOperation("logistic-linear without adversarial config")
        th, ze = self._as_rows(theta, z)
        self._check_domain(th)
        xs, ys = self._split(ze)
        xstar = self._inner_x(th, xs, ys)
        zstar = np.concatenate([xstar[0], ys])
        u = -ys[0] * float(xstar[0] @ th[0])
        return zstar, float(np.logaddexp(0.0, u))

    def constants(self) -> ConstantsRecord:
        adv = self.adversarial
        eps = adv.epsilon if adv is not None else 0.0
        p = adv.p if adv is not None else 2.0
        dual_l2 = math.sqrt(self.dim) if math.isinf(p) else 1.0
        x_sup = self.x_norm + eps * dual_l2
        l_z = 1.0 + self.radius * self.x_norm / 4.0
        if math.isinf(p):
            l_z *= math.sqrt(self.dim)
        return ConstantsRecord(
            L=x_sup,
            L_theta=x_sup**2 / 4.0,
            L_z=l_z,
            beta=x_sup**2 / 4.0,
            eta=2.0 * l_z * eps,
            gamma=None,
            B=math.log1p(math.exp(self.radius * x_sup)),
        )

    def sample_examples(self, rng, count):
        g = rng.standard_normal((count, self.dim))
        g /= np.sqrt(np.einsum("ij,ij->i", g, g))[:, None]
        r = self.x_norm * rng.random(count) ** (1.0 / self.dim)
        xs = g * r[:, None]
        ys = np.where(xs[:, 0] >= 0, 1.0, -1.0)
        return np.concatenate([xs, ys[:, None]], axis=1)

    def kink_probes(self, rng, count):
        adv = self.adversarial
        if adv is None or adv.epsilon == 0.0:
            return None
        # the surrogate is nonsmooth only where ||theta||_q kinks: theta = 0
        zs = self.sample_examples(rng, count)
        anchors = np.zeros((count, self.dim))
        dirs = rng.standard_normal((count, self.dim))
        dirs /= np.sqrt(np.einsum("ij,ij->i", dirs, dirs))[:, None]
        return anchors, dirs, zs


@dataclass(frozen=True)
class TanhRegression(Objective):
    """Bounded non-convex family g(theta, (x, y)) = (tanh(theta^T x) - y)^2.

    With y in [-1, 1] the loss lies in [0, 4].  The inner problem reduces
    to maximizing over the interval of reachable logits, so the exact
    maximizer is one of the two interval endpoints.
    """

    dim: int = 2
    radius: float = 1.0
    x_norm: float = 1.0
    teacher_scale: float = 1.5
    adversarial: AdversarialConfig | None = None
    family: str = field(default="tanh-regression", init=False)
    convex: bool = field(default=False, init=False)

    def __post_init__(self) -> None:
        if self.dim < 1 or self.radius <= 0 or self.x_norm <= 0:
            raise RejectedInput("dim, radius, x_norm must be positive")
        adv = self.adversarial
        if adv is not None and adv.inner_solver == CLOSED_FORM:
            raise RejectedInput(
                "tanh-regression supports endpoint-enumeration or pgd solvers"
            )

    @property
    def example_dim(self) -> int:
        return self.dim + 1

    def _split(self, zs):
        return zs[:, : self.dim], zs[:, self.dim]

    def _xstar(self, thetas, xs, ys):
        adv = self.adversarial
        if adv is None or adv.epsilon == 0.0:
            return xs
        if adv.inner_solver == ENDPOINT_ENUMERATION:
            v = _dual_vector(thetas, adv.p)
            lo = xs - adv.epsilon * v
            hi = xs + adv.epsilon * v
            g_lo = (np.tanh(np.einsum("ij,ij->i", thetas, lo)) - ys) ** 2
            g_hi = (np.tanh(np.einsum("ij,ij->i", thetas, hi)) - ys) ** 2
            take_lo = g_lo >= g_hi  # tie keeps the -eps endpoint
            return np.where(take_lo[:, None], lo, hi)
        zs_full = np.concatenate([xs, ys[:, None]], axis=1)

        def base_value(th, z):
            x, y = z[:, : self.dim], z[:, self.dim]
            return (np.tanh(np.einsum("ij,ij->i", th, x)) - y) ** 2

        def base_grad_z(th, z):
            x, y = z[:, : self.dim], z[:, self.dim]
            t = np.tanh(np.einsum("ij,ij->i", th, x))
            gx = (2.0 * (t - y) * (1.0 - t * t))[:, None] * th
            return np.concatenate([gx, np.zeros((len(th), 1))], axis=1)

        out = _pgd_inner(base_value, base_grad_z, thetas, zs_full, adv)
        return out[:, : self.dim]

    def value_batch(self, thetas, zs):
        thetas = np.asarray(thetas, dtype=float)
        zs = np.asarray(zs, dtype=float)
        self._check_domain(thetas)
        xs, ys = self._split(zs)
        xstar = self._xstar(thetas, xs, ys)
        t = np.tanh(np.einsum("ij,ij->i", thetas, xstar))
        return (t - ys) ** 2

    def subgradient_batch(self, thetas, zs):
        thetas = np.asarray(thetas, dtype=float)
        zs = np.asarray(zs, dtype=float)
        self._check_domain(thetas)
        xs, ys = self._split(zs)
        xstar = self._xstar(thetas, xs, ys)
        t = np.tanh(np.einsum("ij,ij->i", thetas, xstar))
        return (2.0 * (t - ys) * (1.0 - t * t))[:, None] * xstar

    def inner_maximize(self, theta, z):
        if self.adversarial is None:
            raise UnsupportedOperation("tanh-regression without adversarial config")
        th, ze = self._as_rows(theta, z)
        self._check_domain(th)
        xs, ys = self._split(ze)
        xstar = self._xstar(th, xs, ys)
        t = math.tanh(float(xstar[0] @ th[0]))
        zstar = np.concatenate([xstar[0], ys])
        return zstar, float((t - ys[0]) ** 2)

    def constants(self) -> ConstantsRecord:
        adv = self.adversarial
        eps = adv.epsilon if adv is not None else 0.0
        p = adv.p if adv is not None else 2.0
        dual_l2 = math.sqrt(self.dim) if math.isinf(p) else 1.0
        x_sup = self.x_norm + eps * dual_l2
        # max_t |2 (t - y)(1 - t^2)| = 64/27 over t, y in [-1, 1];
        # the second logit derivative is bounded by 10
        c1 = 64.0 / 27.0
        c2 = 10.0
        l_z = c2 * x_sup * self.radius + c1
        if math.isinf(p):
            l_z *= math.sqrt(self.dim)
        return ConstantsRecord(
            L=c1 * x_sup,
            L_theta=c2 * x_sup**2,
            L_z=l_z,
            beta=c2 * x_sup**2,
            eta=2.0 * l_z * eps,
            gamma=None,
            B=4.0,
        )

    def sample_examples(self, rng, count):
        g = rng.standard_normal((count, self.dim))
        g /= np.sqrt(np.einsum("ij,ij->i", g, g))[:, None]
        r = self.x_norm * rng.random(count) ** (1.0 / self.dim)
        xs = g * r[:, None]
        ys = np.tanh(self.teacher_scale * xs[:, 0])
        return np.concatenate([xs, ys[:, None]], axis=1)


@dataclass(frozen=True)
class HardInstanceParams:
    """Construction knobs for the piecewise-linear growth witness."""

    d: int
    horizon: int
    v: float = 0.0
    K: float = 1.0
    eta: float = 1.0

    def __post_init__(self) -> None:
        if self.horizon < 1 or self.d < self.horizon:
            raise RejectedInput("need d >= horizon >= 1")
        if self.v < 0 or self.K <= 0 or self.eta <= 0:
            raise RejectedInput("need v >= 0, K > 0, eta > 0")


@dataclass(frozen=True)
class HardInstance(Objective):
    """Two-piece family whose coupled trajectories separate at sqrt(T) rate.

    h(theta, 0) = eta * max{0, theta_1 - v, ..., theta_T - v}
    h(theta, 1) = <r, theta> / K,   r = (-1, ..., -1, 0, ..., 0)

    Both pieces are convex and piecewise linear.  Under the lowest-index
    tie-break (the constant 0 piece counts as index 0) full-batch descent
    from the origin picks the kink pieces e_1, e_2, ... in order, one new
    coordinate per step, giving mutually orthogonal subgradient kicks.
    """

    params: HardInstanceParams = field(default_factory=lambda: HardInstanceParams(2, 2))
    family: str = field(default="hard-instance", init=False)
    convex: bool = field(default=True, init=False)
    adversarial: AdversarialConfig | None = field(default=None, init=False)

    @property
    def dim(self) -> int:
        return self.params.d

    @property
    def example_dim(self) -> int:
        return 1

    @property
    def radius(self) -> float:
        return math.inf  # trajectories stay bounded by construction

    @property
    def sampling_radius(self) -> float:
        return self.params.v + 2.0

    def _r(self) -> np.ndarray:
        r = np.zeros(self.params.d)
        r[: self.params.horizon] = -1.0
        return r

    def value_batch(self, thetas, zs):
        thetas = np.asarray(thetas, dtype=float)
        zs = np.asarray(zs, dtype=float).reshape(len(thetas))
        p = self.params
        pieces = thetas[:, : p.horizon] - p.v
        val0 = p.eta * np.maximum(0.0, pieces.max(axis=1))
        val1 = thetas @ self._r() / p.K
        return np.where(zs == 1.0, val1, val0)

    def subgradient_batch(self, thetas, zs):
        thetas = np.asarray(thetas, dtype=float)
        zs = np.asarray(zs, dtype=float).reshape(len(thetas))
        p = self.params
        pieces = thetas[:, : p.horizon] - p.v
        best = pieces.max(axis=1)
        j = pieces.argmax(axis=1)  # first max: lowest-index active piece
        grad = np.zeros_like(thetas)
        rows = np.arange(len(thetas))
        active = best > 0.0  # the constant piece (index 0) wins ties at 0
        grad[rows[active], j[active]] = p.eta
        g1 = np.broadcast_to(self._r() / p.K, thetas.shape)
        return np.where((zs == 1.0)[:, None], g1, grad)

    def constants(self) -> ConstantsRecord:
        p = self.params
        # gradient jump between two distinct linear pieces is eta * sqrt(2)
        return ConstantsRecord(
            L=max(math.sqrt(p.horizon) / p.K, p.eta),
            L_theta=0.0,
            L_z=0.0,
            beta=0.0,
            eta=p.eta * math.sqrt(2.0),
            gamma=None,
            B=None,
        )

    def sample_examples(self, rng, count):
        return rng.integers(0, 2, size=(count, 1)).astype(float)

    def kink_probes(self, rng, count):
        p = self.params
        anchors = np.full((count, p.d), p.v - 0.5)
        anchors[:, p.horizon :] = 0.0
        dirs = np.zeros((count, p.d))
        zs = np.zeros((count, 1))
        axis = rng.integers(0, p.horizon, count)
        ridge = rng.random(count) < 0.5
        rows = np.arange(count)
        # axis probes cross the 0-vs-piece boundary theta_j = v
        anchors[rows, axis] = p.v
        dirs[rows, axis] = 1.0
        if p.horizon >= 2 and ridge.any():
            # ridge probes cross the boundary between two active pieces
            other = (axis + 1 + rng.integers(0, p.horizon - 1, count)) % p.horizon
            rr = rows[ridge]
            anchors[rr, axis[ridge]] = p.v + 0.5
            anchors[rr, other[ridge]] = p.v + 0.5
            dirs[rr] = 0.0
            dirs[rr, axis[ridge]] = 1.0 / math.sqrt(2.0)
            dirs[rr, other[ridge]] = -1.0 / math.sqrt(2.0)
        return anchors, dirs, zs


def make_hard_instance(params: HardInstanceParams, n: int):
    """Objective plus the neighboring datasets of the growth construction.

    S holds one z=1 example (at index 0) and n-1 copies of z=0; S' holds n
    copies of z=0, so the pair differs exactly at index 0.
    """
    if n < 1:
        raise RejectedInput("n must be positive")
    obj = HardInstance(params)
    s = np.zeros((n, 1))
    s[0, 0] = 1.0
    s_prime = np.zeros((n, 1))
    from .harness import NeighborPair  # local import to avoid a cycle

    return obj, NeighborPair(S=s, S_prime=s_prime, differing_index=0)


def hard_instance_delta_series(
    params: HardInstanceParams, n: int, alpha: float, T: int
) -> np.ndarray:
    """Closed-form ||theta_S^t - theta_S'^t|| for full-batch descent from 0.

    theta_S^t = t*a*1_{1..T} - b * sum_{s<=t-1} e_s with a = alpha/(n K)
    and b = alpha * eta * (n-1)/n, while the run on S' never moves.  Valid
    when v < alpha/(nK), i.e. the drift activates a fresh kink each step.
    """
    if alpha <= 0 or T < 1 or T > params.horizon:
        raise RejectedInput("need alpha > 0 and 1 <= T <= horizon")
    a = alpha / (n * params.K)
    if params.v >= a:
        raise RejectedInput("closed form requires v < alpha/(n*K)")
    b = alpha * params.eta * (n - 1) / n
    ts = np.arange(0, T + 1, dtype=float)
    hit = np.maximum(ts - 1.0, 0.0)
    unhit = params.horizon - hit
    return np.sqrt(hit * (ts * a - b) ** 2 + unhit * (ts * a) ** 2)


_FAMILIES = {
    "shift-quadratic": ShiftQuadratic,
    "logistic-linear": LogisticLinear,
    "tanh-regression": TanhRegression,
}


def build_objective(config: dict) -> Objective:
    """Construct a family from a JSON-style configuration object."""
    cfg = dict(config)
    family = cfg.pop("family", None)
    if family == "hard-instance":
        try:
            params = HardInstanceParams(**cfg)
        except TypeError as exc:
            raise RejectedInput(f"bad hard-instance config: {exc}") from None
        return HardInstance(params)
    if family not in _FAMILIES:
        raise RejectedInput(f"unknown objective family {family!r}")
    adv_cfg = cfg.pop("adversarial", None)
    if adv_cfg is not None:
        adv_cfg = dict(adv_cfg)
        if adv_cfg.get("p") in ("inf", "Inf", "INF"):
            adv_cfg["p"] = math.inf
        try:
            cfg["adversarial"] = AdversarialConfig(**adv_cfg)
        except TypeError as exc:
            raise RejectedInput(f"bad adversarial config: {exc}") from None
    try:
        return _FAMILIES[family](**cfg)
    except TypeError as exc:
        raise RejectedInput(f"bad objective config: {exc}") from None
