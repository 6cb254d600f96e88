import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from contraction_lab.distance import (
    QuadratureError,
    build_profile,
    build_profile_thm2,
    build_profile_thm3,
    chebyshev_grid,
    corollary_bounds,
    eval_distance,
    normalize_variant,
    rate_synchronous,
    rate_thm2,
    rate_thm3,
)
from contraction_lab.lyapunov import LyapunovSpec
from contraction_lab.spectral import SpectralSpace, WeightedGeometry, eigenvalue_family
from contraction_lab.verify import check_profile

from oracles import flat_profile, gaussian_Phi, psi, riemann_log_gamma


class TestFlatProfile:
    """beta = 0, R = 1: phi = 1, Phi = r, gamma = 2, f = r - r^3/6."""

    def setup_method(self):
        self.p = build_profile_thm2(0.0, 1.0, 1.0)

    def test_gamma(self):
        assert self.p.gamma == pytest.approx(2.0, abs=1e-9)

    def test_f_at_nodes(self):
        np.testing.assert_allclose(self.p.f, flat_profile(self.p.r), atol=1e-9)

    def test_f_between_nodes(self):
        r = np.linspace(0, 1, 777)
        np.testing.assert_allclose(self.p(r), flat_profile(r), atol=1e-9)

    def test_value_at_R(self):
        assert self.p(1.0) == pytest.approx(5.0 / 6.0, abs=1e-9)

    def test_endpoints(self):
        assert self.p.f[0] == 0.0
        assert self.p.fprime[0] == 1.0
        assert self.p.g[-1] == 0.5


class TestProfileShape:
    @pytest.mark.parametrize("beta,ls,R", [(2.0, 0.1, 1.0), (0.5, 1.0, 3.0), (5.0, 0.01, 0.3)])
    def test_g_half_at_R(self, beta, ls, R):
        assert build_profile_thm2(beta, ls, R).g[-1] == 0.5

    def test_Phi_matches_erf_closed_form(self):
        p = build_profile_thm2(2.0, 0.1013, 1.7)
        np.testing.assert_allclose(p.Phi, gaussian_Phi(p.r, 2.0, 0.1013), rtol=1e-10, atol=1e-14)

    def test_theta_zero_reduces_to_large_distance(self):
        a = build_profile_thm2(1.3, 0.2, 2.0)
        b = build_profile_thm3(1.3, 0.2, 0.2, 0.0, 2.0)
        np.testing.assert_allclose(b.f, a.f, atol=1e-9)
        assert b.log_gamma == pytest.approx(a.log_gamma, abs=1e-9)

    def test_band_between_nodes(self, rng):
        p = build_profile_thm3(2.0, 0.1, 0.3, 1.0, 1.5)
        r = np.sort(rng.uniform(0, p.R, 200))
        ratio = p.derivative(r) / np.exp(-psi(r, 2.0, 0.1, 1.0, 0.3))
        assert np.all(ratio >= 0.5 - 1e-9) and np.all(ratio <= 1.0 + 1e-9)

    def test_second_derivative_against_finite_differences(self):
        p = build_profile_thm2(1.0, 0.3, 2.0)
        inner = slice(100, -100)
        fd = np.gradient(p.fprime, p.r)
        np.testing.assert_allclose(p.fsecond[inner], fd[inner], rtol=1e-3, atol=1e-6)

    def test_ode_residual(self):
        p = build_profile_thm3(3.0, 0.05, 0.2, 1.5, 4.0)
        assert np.max(np.abs(p.ode_residual())) < 1e-6

    def test_gamma_decreases_with_R(self):
        lg = [build_profile_thm2(1.0, 0.2, R).log_gamma for R in (0.5, 1.0, 2.0, 4.0)]
        assert all(a > b for a, b in zip(lg, lg[1:]))

    def test_extreme_parameters_match_oracle(self):
        p = build_profile_thm3(5.0, 0.01, 1.0, 2.0, 10.0)
        assert p.log_gamma == pytest.approx(riemann_log_gamma(5.0, 0.01, 10.0, 2.0, 1.0), rel=1e-7)
        assert p.gamma == 0.0  # underflows; only the logarithm is finite

    def test_invariant_suite(self):
        assert check_profile(build_profile_thm2(2.0, 0.1, 3.0))["passed"]

    @settings(max_examples=15, deadline=None)
    @given(st.floats(0, 5), st.floats(0.01, 1), st.floats(0, 2), st.floats(0.1, 10))
    def test_invariants_property(self, beta, ls, theta, R):
        p = build_profile_thm3(beta, ls, ls, theta, R)
        rep = check_profile(p)
        assert rep["passed"], rep


class TestTails:
    def test_linear_tail(self):
        p = build_profile_thm2(2.0, 0.1, 1.0)
        r = np.array([1.0, 1.5, 4.0, 100.0])
        np.testing.assert_allclose(np.diff(p(r)) / np.diff(r), 0.5 * p.phi_R, rtol=1e-12)
        assert p.tail == "linear"

    def test_constant_tail(self):
        p = build_profile_thm3(2.0, 0.1, 0.1, 1.0, 1.0)
        assert np.all(p(np.array([1.0, 2.0, 50.0])) == p.f_R)
        assert p.derivative(3.0) == 0.0

    def test_negative_distance_rejected(self):
        with pytest.raises(ValueError):
            build_profile_thm2(0.0, 1.0, 1.0)(-0.1)


class TestBuildErrors:
    def test_negative_beta(self):
        with pytest.raises(ValueError):
            build_profile_thm2(-1.0, 1.0, 1.0)

    def test_theta_in_large_distance(self):
        with pytest.raises(ValueError):
            build_profile("large_distance", 1.0, 1.0, 1.0, theta=1.0)

    def test_lambda_sup_below_lambda_star(self):
        with pytest.raises(ValueError):
            build_profile_thm3(1.0, 1.0, 0.5, 1.0, 1.0)

    def test_aliases(self):
        assert normalize_variant("thm2") == "large_distance"
        assert normalize_variant("thm3") == "lyapunov"
        with pytest.raises(ValueError):
            normalize_variant("thm4")

    def test_grid(self):
        r = chebyshev_grid(2.0, 1024)
        assert r[0] == 0.0 and r[-1] == 2.0 and np.all(np.diff(r) > 0)

    def test_quadrature_error_is_runtime_error(self):
        assert issubclass(QuadratureError, RuntimeError)


class TestRates:
    def test_large_distance_flat_example(self):
        rep = rate_thm2(build_profile_thm2(0.0, 1.0, 1.0), 0.75, 4.0)
        assert rep.c == pytest.approx(0.0625, rel=1e-9)
        assert rep.components["far_drift"] == pytest.approx(0.125, rel=1e-9)
        assert rep.components["diffusion"] == pytest.approx(4.0, rel=1e-9)
        assert rep.binding == "weight"

    def test_large_distance_lower_bound_example(self):
        ls = np.pi**-2
        rep = rate_thm2(build_profile_thm2(2.0, ls, 1.0), 0.75, 4.0)
        expected = 0.5 * math.exp(-2.0 / (8.0 * ls)) * 0.125
        assert rep.lower_bound == pytest.approx(expected, rel=1e-12)
        assert rep.lower_bound == pytest.approx(5.30e-3, rel=1e-3)
        assert rep.lower_bound <= rep.c

    def test_M_close_to_one_binds_far_drift(self):
        rep = rate_thm2(build_profile_thm2(1.0, 0.5, 1.0), 1.0 - 1e-9, 4.0)
        assert rep.binding == "far_drift"

    def test_M_one_rejected(self):
        with pytest.raises(ValueError):
            rate_thm2(build_profile_thm2(1.0, 0.5, 1.0), 1.0, 4.0)

    def test_lyapunov_flat_example(self):
        rep = rate_thm3(build_profile_thm3(0.0, 1.0, 1.0, 0.0, 1.0), 4.0, 1.0, 10.0)
        assert rep.c == pytest.approx(0.03125, rel=1e-9)
        assert rep.epsilon == pytest.approx(0.015625, rel=1e-9)

    def test_large_eta_saturates(self):
        rep = rate_thm3(build_profile_thm3(1.0, 0.3, 0.5, 1.0, 1.0), 2.0, 3.0, 1e6)
        assert rep.binding != "lyapunov"
        assert rep.c == pytest.approx(2.0 * 3.0 * rep.epsilon, rel=1e-12)

    def test_variant_mismatch(self):
        with pytest.raises(ValueError):
            rate_thm3(build_profile_thm2(1.0, 0.3, 1.0), 2.0, 1.0, 1.0)

    def test_synchronous(self):
        rep = rate_synchronous(WeightedGeometry(alpha=1.25, beta=-0.5))
        assert rep.c == pytest.approx(0.5, rel=1e-15)
        rep = rate_synchronous(WeightedGeometry(alpha=4.0, beta=-0.9))
        assert rep.c == pytest.approx(0.25, rel=1e-15)
        with pytest.raises(ValueError):
            rate_synchronous(WeightedGeometry(alpha=1.0, beta=0.1))

    def test_lower_bounds_sweep(self, rng):
        for _ in range(20):
            beta, ls, R = rng.uniform(0.01, 5), rng.uniform(0.01, 1), rng.uniform(0.1, 10)
            lsup, theta = ls * rng.uniform(1, 3), rng.uniform(0, 2)
            alpha, M = rng.uniform(1, 10), rng.uniform(0, 0.99)
            r2 = rate_thm2(build_profile_thm2(beta, ls, R), M, alpha)
            r3 = rate_thm3(build_profile_thm3(beta, ls, lsup, theta, R), alpha, rng.uniform(0.1, 10), rng.uniform(0.1, 5))
            assert r2.log_lower_bound <= r2.log_c
            assert r3.log_lower_bound <= r3.log_c

    def test_report_json(self, tmp_path):
        rep = rate_thm2(build_profile_thm2(0.0, 1.0, 1.0), 0.75, 4.0)
        text = rep.to_json(tmp_path / "rate.json")
        data = json.loads(text)
        assert data["binding"] == "weight"
        assert set(data["origins"]) >= {"far_drift", "weight", "diffusion"}


class TestDistances:
    def setup_method(self):
        self.space = SpectralSpace(eigenvalue_family("brownian_bridge", 4), 1)
        self.geom = WeightedGeometry(alpha=4.0, beta=2.0)

    def test_identical_points(self):
        p = build_profile_thm2(2.0, 0.1, 1.0)
        x = np.array([0.3, -0.2, 0.1, 0.0])
        assert eval_distance(p, x, x, self.geom, self.space) == 0.0

    def test_linear_growth_beyond_R(self):
        p = build_profile_thm2(2.0, 0.1, 1.0)
        x = np.zeros(4)
        d1 = eval_distance(p, x, np.array([2.0, 0, 0, 0]), self.geom, self.space)
        d2 = eval_distance(p, x, np.array([3.0, 0, 0, 0]), self.geom, self.space)
        assert d2 - d1 == pytest.approx(0.5 * p.phi_R, rel=1e-12)

    def test_lyapunov_distance_far_away_varies_only_through_V(self):
        p = build_profile_thm3(2.0, 0.1, 0.1, 1.0, 1.0)
        lyap = LyapunovSpec(C=2.0, eta=1.0, theta=1.0, R_S=1.0)
        x = np.zeros(4)
        far1, far2 = np.array([2.0, 0, 0, 0]), np.array([0, 0, 0, 3.0])
        eps = 0.1
        d1 = eval_distance(p, x, far1, self.geom, self.space, lyap, eps)
        d2 = eval_distance(p, x, far2, self.geom, self.space, lyap, eps)
        assert d1 / (1 + eps * 1 + eps * 5) == pytest.approx(p.f_R, rel=1e-14)
        assert d2 / (1 + eps * 1 + eps * 10) == pytest.approx(p.f_R, rel=1e-14)

    def test_lyapunov_distance_needs_V(self):
        p = build_profile_thm3(2.0, 0.1, 0.1, 1.0, 1.0)
        with pytest.raises(ValueError):
            eval_distance(p, np.zeros(4), np.ones(4), self.geom, self.space)


class TestCorollaries:
    def test_w1_prefactor_flat(self):
        p = build_profile_thm2(0.0, 1.0, 1.0)
        rep = rate_thm2(p, 0.75, 4.0)
        cb = corollary_bounds(p, WeightedGeometry(4.0, 0.0), rep)
        assert cb.w1(0.0) == pytest.approx(16.0, rel=1e-15)
        assert cb.w1(2.0) == pytest.approx(16.0 * math.exp(-2 * rep.c), rel=1e-14)
        assert cb.lipschitz(0.0, 2.0) == pytest.approx(math.sqrt(2) * 4 * 2, rel=1e-15)

    def _lyapunov_bounds(self):
        p = build_profile_thm3(0.0, 1.0, 1.0, 0.0, 1.0)
        rep = rate_thm3(p, 4.0, 1.0, 10.0)
        lyap = LyapunovSpec(C=1.0, eta=10.0, theta=1.0, R_S=1.0)
        return p, rep, corollary_bounds(p, WeightedGeometry(4.0, 0.0), rep, lyap)

    def test_gradient_bound_hand_formula(self):
        p, rep, cb = self._lyapunov_bounds()
        x, y = np.array([1.0, 0.0]), np.array([0.0, 2.0])
        t = 3.0
        hand = math.sqrt(2) * 4.0 * 1.5 * (1 + rep.epsilon * 2.0 + rep.epsilon * 5.0) * math.exp(-rep.c * t)
        assert cb.gradient(t, 1.5, x, y) == pytest.approx(hand, rel=1e-14)

    def test_bias_bound_small_and_large_time(self):
        p, rep, cb = self._lyapunov_bounds()
        x = np.zeros(2)
        tail = 1 + rep.epsilon * 1.0 + rep.epsilon * 1.0 / 10.0
        assert cb.bias(1e-12, 1.0, x) == pytest.approx(p.R * tail, rel=1e-9)
        assert cb.bias(1e4, 1.0, x) == pytest.approx(p.R * tail / (rep.c * 1e4), rel=1e-9)

    def test_variance_decays_like_inverse_time(self):
        p, rep, cb = self._lyapunov_bounds()
        x = np.ones(2)
        v = [cb.variance(t, 1.0, x, 5.0, 2.0) * t for t in (1e3, 1e4, 1e5)]
        assert v[0] == pytest.approx(v[1], rel=1e-9) and v[1] == pytest.approx(v[2], rel=1e-9)

    def test_wp_prefactor(self):
        p, rep, cb = self._lyapunov_bounds()
        K = 3.0
        expected = 2.0 * max(1.0, K / (rep.epsilon * 1.0))
        assert cb.wp(0.0, K) == pytest.approx(expected, rel=1e-14)

    def test_table(self):
        p, rep, cb = self._lyapunov_bounds()
        tab = cb.table([0.0, 1.0, 2.0], x=np.zeros(2), K=1.0, C2=2.0, eta2=1.0)
        assert set(tab) == {"t", "wp", "gradient", "bias", "variance"}
        assert len(tab["bias"]) == 2  # t = 0 excluded

    def test_underflowed_rate_gives_vacuous_time_average_bounds(self):
        p = build_profile_thm3(5.0, 0.01, 0.01, 1.0, 10.0)
        rep = rate_thm3(p, 4.0, 1.0, 1.0)
        assert rep.c == 0.0
        cb = corollary_bounds(p, WeightedGeometry(4.0, 5.0), rep, LyapunovSpec(1.0, 1.0, 1.0, 10.0))
        assert np.isfinite(cb.bias(10.0, 1.0, np.zeros(2)))
        assert cb.variance(10.0, 1.0, np.zeros(2), 1.0, 1.0) == math.inf
