"""Shared fixtures and independent numerical oracles."""

import numpy as np
import pytest

import stablab as sl


def finite_diff_grad(obj, theta, z, h=1e-6):
    """Central finite difference of the loss value, coordinate by coordinate."""
    theta = np.asarray(theta, dtype=float)
    grad = np.zeros_like(theta)
    for k in range(len(theta)):
        up = theta.copy()
        dn = theta.copy()
        up[k] += h
        dn[k] -= h
        grad[k] = (obj.value(up, z) - obj.value(dn, z)) / (2 * h)
    return grad


def dense_grid_eta(obj, z, lo, hi, num, beta):
    """Largest gradient-inequality slack over consecutive 1-d grid points."""
    grid = np.linspace(lo, hi, num)[:, None]
    zs = np.broadcast_to(np.asarray(z, dtype=float), (num, obj.example_dim))
    grads = obj.subgradient_batch(grid, zs)[:, 0]
    dg = np.abs(np.diff(grads))
    dt = np.diff(grid[:, 0])
    return float(np.max(dg - beta * dt))


def endpoint_value_oracle(theta, z, eps):
    """Inner max of 0.5 (theta - z')^2 by endpoint enumeration (1-d)."""
    cands = [z - eps, z + eps]
    vals = [0.5 * (theta - c) ** 2 for c in cands]
    return max(vals)


@pytest.fixture
def adv_quadratic():
    """Scalar robust quadratic with beta = 1, eta = 0.2."""
    return sl.ShiftQuadratic(
        dim=1, radius=1.0, z_box=0.5, adversarial=sl.AdversarialConfig(epsilon=0.1)
    )


@pytest.fixture
def smooth_quadratic():
    return sl.ShiftQuadratic(dim=1, radius=1.0, z_box=0.5)


@pytest.fixture
def bench_quadratic():
    """The L = 1 configuration: (1+0) * 0.45 + 0.5 + 0.05 = 1."""
    return sl.ShiftQuadratic(
        dim=1, radius=0.45, z_box=0.5, adversarial=sl.AdversarialConfig(epsilon=0.05)
    )
