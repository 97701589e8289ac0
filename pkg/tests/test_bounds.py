"""Closed-form bounds: worked values frozen, then shape properties fuzzed."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import stablab.bounds as bnd
from stablab.engine import tstar
from stablab.errors import RejectedInput

pos = st.floats(1e-3, 1e3, allow_nan=False, allow_infinity=False)
small = st.floats(0.0, 10.0, allow_nan=False, allow_infinity=False)


class TestConvex:
    def test_worked_value(self):
        assert bnd.ub_convex(1.0, 0.1, 100, np.full(1000, 0.01)) == pytest.approx(1.2)

    def test_eta_zero_standard_bound(self):
        assert bnd.ub_convex(1.0, 0.0, 100, 10.0) == pytest.approx(0.2)

    def test_large_n_leaves_eta_residual(self):
        assert bnd.ub_convex(1.0, 0.1, 10**12, 10.0) == pytest.approx(1.0, rel=1e-9)

    def test_negative_rejected(self):
        with pytest.raises(RejectedInput):
            bnd.ub_convex(-1.0, 0.1, 100, 10.0)
        with pytest.raises(RejectedInput):
            bnd.ub_convex(1.0, 0.1, 100, [-0.1, 0.2])

    def test_series_cumulative(self):
        ser = bnd.ub_convex_series(1.0, 0.1, 100, [0.1, 0.1, 0.1])
        np.testing.assert_allclose(ser, [0.012, 0.024, 0.036])


class TestSubopt:
    def test_worked_value(self):
        got = bnd.ub_convex_subopt(1.0, 1.0, 0.1, 0.05, 100, 10.0)
        assert got == pytest.approx(3.2)

    def test_exact_attack_matches_convex_with_eta(self):
        a = bnd.ub_convex_subopt(1.0, 1.0, 0.1, 0.0, 100, 10.0)
        b = bnd.ub_convex(1.0, 2 * 1.0 * 0.1, 100, 10.0)
        assert a == pytest.approx(b)

    def test_weakest_attack_caps_at_three_eps(self):
        weak = bnd.ub_convex_subopt(1.0, 1.0, 0.1, 0.2, 10**12, 10.0)
        strong = bnd.ub_convex_subopt(1.0, 1.0, 0.1, 0.0, 10**12, 10.0)
        assert weak == pytest.approx(3 * strong)
        with pytest.raises(RejectedInput):
            bnd.ub_convex_subopt(1.0, 1.0, 0.1, 0.21, 100, 10.0)


class TestNonConvex:
    def test_forced_t0_worked_value(self):
        value, t0 = bnd.ub_nonconvex(1.0, 1.0, 1.0, 0.1, 101, 10, 1.0, t0=1)
        assert t0 == 1
        assert value == pytest.approx(1.22)
        simp = bnd.ub_nonconvex_simplified(1.0, 1.0, 1.0, 0.1, 101, 10)
        assert simp == pytest.approx(1.22)

    def test_optimized_t0_is_grid_minimum(self):
        value, t0 = bnd.ub_nonconvex(1.0, 1.0, 1.0, 0.1, 101, 10, 1.0)
        brute = min(
            bnd.ub_nonconvex(1.0, 1.0, 1.0, 0.1, 101, 10, 1.0, t0=k)[0]
            for k in range(1, 102)
        )
        assert value == pytest.approx(brute)
        assert value <= 1.22

    def test_t0_equal_T_kills_ratio(self):
        value, _ = bnd.ub_nonconvex(0.0, 1.0, 1.0, 0.1, 101, 10, 1.0, t0=10)
        coef = (2 * 1.0 + 1.0 * 0.1 * 101) / (1.0 * 100)
        assert value == pytest.approx(coef)

    def test_eta_zero_structure(self):
        v_eta, _ = bnd.ub_nonconvex(1.0, 1.0, 1.0, 0.0, 101, 10, 1.0, t0=1)
        assert v_eta == pytest.approx((1.0 + 2.0 * 10) / 100)


class TestStronglyConvex:
    def test_worked_value(self):
        assert bnd.ub_strongly_convex(1.0, 0.05, 0.5, 100) == pytest.approx(0.14)

    def test_eta_zero(self):
        assert bnd.ub_strongly_convex(1.0, 0.0, 0.5, 100) == pytest.approx(0.04)

    def test_no_T_dependence_by_signature(self):
        # the formula takes no horizon at all
        assert bnd.ub_strongly_convex(2.0, 0.1, 1.0, 10) == pytest.approx(1.0)


class TestSwa:
    def test_worked_value(self):
        assert bnd.ub_swa(1.0, 0.1, 100, 10.0) == pytest.approx(0.6)

    def test_half_identity(self):
        rng = np.random.default_rng(0)
        for _ in range(200):
            L, eta = rng.uniform(0.1, 5), rng.uniform(0, 2)
            n = int(rng.integers(1, 10**4))
            s = rng.uniform(0.01, 100)
            assert bnd.ub_swa(L, eta, n, s) == pytest.approx(
                bnd.ub_convex(L, eta, n, s) / 2, rel=1e-12
            )

    def test_eta_zero(self):
        assert bnd.ub_swa(1.0, 0.0, 100, 10.0) == pytest.approx(0.1)


class TestOptimization:
    def test_convex_worked_value(self):
        alphas = np.full(100, 0.1)
        assert bnd.opt_convex(1.0, 1.0, alphas) == pytest.approx(0.2)

    def test_alpha_star_minimizes_constant_step(self):
        D, L, T = 1.0, 1.0, 100
        a_star = D / (L * math.sqrt(T))
        grid = np.linspace(0.2 * a_star, 5 * a_star, 4001)
        vals = [bnd.opt_convex(D, L, np.full(T, a)) for a in grid]
        best = grid[int(np.argmin(vals))]
        assert best == pytest.approx(a_star, rel=0.01)

    def test_zero_steps_rejected(self):
        with pytest.raises(RejectedInput):
            bnd.opt_convex(1.0, 1.0, np.zeros(5))

    def test_strongly_convex(self):
        assert bnd.opt_strongly_convex(1.0, 1.0, 100) == pytest.approx(0.01)
        assert bnd.opt_strongly_convex(1.0, 2.0, 100) == pytest.approx(0.04)


class TestTradeoff:
    def test_additional_term_is_exact(self):
        out = bnd.tradeoff_fixed(1.0, 0.1, 100, 1.0, 0.01, 500)
        assert out["term_adv"] == pytest.approx(1.0 * 0.1 * 500 * 0.01)
        assert out["total"] == pytest.approx(
            out["term_adv"] + out["term_std"] + out["term_opt"] + out["term_resid"]
        )

    def test_grid_minimum_matches_tstar(self):
        L, eta, n, D, alpha = 1.0, 0.1, 100, 1.0, 0.01
        t_star = tstar(D, alpha, L, eta, n)
        ts = np.arange(1, 3000)
        out = bnd.tradeoff_fixed(L, eta, n, D, alpha, ts)
        best = ts[int(np.argmin(out["total"]))]
        assert abs(best - t_star) <= 1.0
        # value at the continuous optimum hits the closed form exactly
        at_star = bnd.tradeoff_fixed(L, eta, n, D, alpha, t_star)["total"]
        want = 2 * math.sqrt(L * eta + 2 * L * L / n) * D + L * L * alpha
        assert at_star == pytest.approx(want, abs=1e-9)

    def test_u_shape_without_slack(self):
        ts = np.arange(1, 20000)
        out = bnd.tradeoff_fixed(1.0, 0.0, 1000, 1.0, 0.01, ts)
        k = int(np.argmin(out["total"]))
        assert 0 < k < len(ts) - 1
        assert out["total"][0] > out["total"][k] < out["total"][-1]
        want = 1.0 / (0.01 * math.sqrt(2.0 / 1000))
        assert abs(ts[k] - want) <= 1.0


class TestLowerBound:
    def test_eta_term_only(self):
        assert bnd.lb_uas(1.0, 1.0, 0.1, 4, 10**12) == pytest.approx(0.2, rel=1e-9)

    def test_eta_zero(self):
        assert bnd.lb_uas(0.0, 1.0, 0.1, 100, 10) == pytest.approx(0.1 * 100 / 10)

    def test_gap_to_upper_bound_grows(self):
        # ub ~ T while lb ~ sqrt(T): the ratio is non-decreasing in T
        ratios = [
            bnd.ub_convex(1.0, 0.1, 50, np.full(t, 0.01))
            / bnd.lb_uas(0.1, 1.0, 0.01, t, 50)
            for t in (1, 10, 100, 1000)
        ]
        assert all(a <= b + 1e-12 for a, b in zip(ratios, ratios[1:]))

    def test_multipliers(self):
        assert bnd.lb_uas(1.0, 1.0, 0.1, 4, 10, c_eta=2.0, c_L=0.0) == pytest.approx(0.4)


class TestBeta2:
    def test_worked_value(self):
        assert bnd.beta2_strongly_concave(1.0, 1.0, 0.5, 1.0) == pytest.approx(3.0)

    def test_infinite_concavity_leaves_base(self):
        assert bnd.beta2_strongly_concave(1.0, 1.0, 1e12, 1.0) == pytest.approx(
            1.0, rel=1e-9
        )

    def test_halving_mu_doubles_first_term(self):
        a = bnd.beta2_strongly_concave(1.0, 1.0, 0.5, 0.0)
        b = bnd.beta2_strongly_concave(1.0, 1.0, 0.25, 0.0)
        assert b == pytest.approx(2 * a)


class TestConvergenceBound:
    def test_worked_value(self):
        got = bnd.convergence_bound(0.2, 0.5, 0.0, 0.0, 1.0, 10**12)
        assert got == pytest.approx(0.16, rel=1e-5)

    def test_noiseless_smooth_case(self):
        got = bnd.convergence_bound(0.0, 0.5, 0.0, 1.0, 1.0, 100)
        assert got == pytest.approx(2 * 1.0 / (0.5 * 10))

    def test_quadrupling_T_halves_tail(self):
        tail1 = bnd.convergence_bound(0.0, 0.5, 1.0, 1.0, 1.0, 100)
        tail2 = bnd.convergence_bound(0.0, 0.5, 1.0, 1.0, 1.0, 400)
        assert tail2 == pytest.approx(tail1 / 2)


class TestShapeProperties:
    @given(L=pos, eta=small, n=st.integers(1, 10**6), s=pos, bump=small)
    @settings(max_examples=150, deadline=None)
    def test_monotone_in_eta_and_alphas(self, L, eta, n, s, bump):
        base = bnd.ub_convex(L, eta, n, s)
        assert base >= 0
        assert bnd.ub_convex(L, eta + bump, n, s) >= base - 1e-12
        assert bnd.ub_convex(L, eta, n, s + bump) >= base - 1e-12

    @given(L=pos, eta=small, gamma=pos, n=st.integers(1, 10**6), bump=small)
    @settings(max_examples=150, deadline=None)
    def test_strongly_convex_monotone(self, L, eta, gamma, n, bump):
        assert bnd.ub_strongly_convex(L, eta + bump, gamma, n) >= bnd.ub_strongly_convex(
            L, eta, gamma, n
        ) - 1e-12

    @given(L=pos, eta=small, n=st.integers(1, 10**6), s=pos)
    @settings(max_examples=150, deadline=None)
    def test_swa_is_half(self, L, eta, n, s):
        assert bnd.ub_swa(L, eta, n, s) == pytest.approx(
            bnd.ub_convex(L, eta, n, s) / 2, rel=1e-12
        )

    @given(B=small, beta=pos, L=pos, eta=small, n=st.integers(2, 1000),
           T=st.integers(1, 10**5))
    @settings(max_examples=100, deadline=None)
    def test_nonconvex_monotone_in_T(self, B, beta, L, eta, n, T):
        v1, _ = bnd.ub_nonconvex(B, beta, L, eta, n, T, 1.0 / beta)
        v2, _ = bnd.ub_nonconvex(B, beta, L, eta, n, T + 1, 1.0 / beta)
        assert v2 >= v1 - 1e-9 * max(1.0, abs(v1))


class TestDispatcher:
    def test_unknown_id(self):
        with pytest.raises(RejectedInput):
            bnd.evaluate("ub-banana", {})

    def test_flags_attached(self):
        rep = bnd.evaluate(
            "ub-convex",
            {"L": 1.0, "eta": 0.1, "n": 100, "alphas": [0.5, 2.0], "beta_for_flag": 1.0},
        )
        assert rep.validity_flags["alpha_le_inv_beta"] == "violated"

    def test_nonconvex_reports_simplified(self):
        rep = bnd.evaluate(
            "ub-nonconvex",
            {"B": 1.0, "beta": 1.0, "L": 1.0, "eta": 0.1, "n": 101, "T": 10,
             "c": 1.0, "t0": 1},
        )
        assert rep.value == pytest.approx(1.22)
        assert rep.extra["simplified"] == pytest.approx(1.22)

    def test_missing_param(self):
        with pytest.raises(RejectedInput):
            bnd.evaluate("ub-convex", {"L": 1.0})
