import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from contraction_lab.spectral import (
    LipschitzConstants,
    SpectralSpace,
    WeightedGeometry,
    compute_geometry,
    eigenvalue_family,
    project,
    split_index_for,
    weighted_norm,
)


class TestGeometry:
    def test_unit_lemma_constants(self):
        g = compute_geometry(LipschitzConstants(0.5, 0.5, 1.0, 1.0))
        assert g.alpha == 4.0
        assert g.beta == 2.0

    def test_zero_constants(self):
        g = compute_geometry(LipschitzConstants(0.0, 0.0, 0.0, 0.0))
        assert g.alpha == 1.0
        assert g.beta == -1.0

    def test_mixed_constants(self):
        # alpha = (1 + 3) / (1 - 0.5), beta = 8 * 0.1 + 0.2 - 1
        g = compute_geometry(LipschitzConstants(0.1, 0.5, 0.2, 3.0))
        assert g.alpha == pytest.approx(8.0, abs=1e-15)
        assert g.beta == pytest.approx(0.0, abs=1e-15)

    def test_high_block_must_contract(self):
        with pytest.raises(ValueError):
            LipschitzConstants(0.1, 1.0, 0.1, 0.1)

    def test_negative_constant_rejected(self):
        with pytest.raises(ValueError):
            LipschitzConstants(-0.1, 0.1, 0.1, 0.1)

    def test_alpha_below_one_rejected(self):
        with pytest.raises(ValueError):
            WeightedGeometry(alpha=0.5, beta=0.0)


class TestWeightedNorm:
    def test_pure_low_block_is_euclidean(self):
        space = SpectralSpace(np.array([1.0, 0.5, 0.1]), 2)
        for alpha in (1.0, 3.0, 100.0):
            assert weighted_norm(np.array([3.0, 4.0, 0.0]), space, alpha) == 5.0

    def test_pure_high_block(self):
        space = SpectralSpace(np.array([1.0, 0.5]), 1)
        assert weighted_norm(np.array([0.0, 1.0]), space, 2.0) == 2.0

    def test_direct_sum(self):
        space = SpectralSpace(np.array([1.0, 0.5, 0.1]), 1)
        x = np.array([1.0, 0.6, 0.8])
        assert weighted_norm(x, space, 4.0) == pytest.approx(5.0, abs=1e-15)

    def test_batched(self):
        space = SpectralSpace(np.array([1.0, 0.5]), 1)
        x = np.array([[3.0, 0.0], [0.0, 1.0]])
        np.testing.assert_array_equal(weighted_norm(x, space, 2.0), [3.0, 2.0])

    @settings(max_examples=200, deadline=None)
    @given(arrays(np.float64, 12, elements=st.floats(-1e6, 1e6)), st.floats(1.0, 1e3), st.integers(1, 11))
    def test_norm_equivalence(self, x, alpha, n):
        space = SpectralSpace(eigenvalue_family("brownian_bridge", 12), n)
        e = np.linalg.norm(x)
        w = weighted_norm(x, space, alpha)
        assert e <= w * (1 + 1e-12) + 1e-300
        assert w <= math.sqrt(2.0) * alpha * e * (1 + 1e-12) + 1e-300


class TestProjection:
    def setup_method(self):
        self.space = SpectralSpace(np.array([1.0, 0.5, 0.25]), 1)
        self.x = np.array([1.0, 2.0, 3.0])

    def test_low(self):
        np.testing.assert_array_equal(project(self.x, self.space, "low"), [1.0, 0.0, 0.0])

    def test_high(self):
        np.testing.assert_array_equal(project(self.x, self.space, "high"), [0.0, 2.0, 3.0])

    def test_idempotent(self):
        p = project(self.x, self.space, "low")
        np.testing.assert_array_equal(project(p, self.space, "low"), p)

    def test_unknown_block(self):
        with pytest.raises(ValueError):
            project(self.x, self.space, "middle")

    @settings(max_examples=100, deadline=None)
    @given(arrays(np.float64, 8, elements=st.floats(-1e3, 1e3)), st.integers(1, 7))
    def test_blocks_orthogonal_and_complete(self, x, n):
        space = SpectralSpace(eigenvalue_family("geometric", 8, rho=0.5), n)
        lo, hi = project(x, space, "low"), project(x, space, "high")
        assert float(lo @ hi) == 0.0
        np.testing.assert_array_equal(lo + hi, x)


class TestSplitIndex:
    def test_bridge_unit_lipschitz(self):
        # lambda_2 = 1/(4 pi^2) ~ 0.0253 < 1/2
        assert split_index_for(1.0, eigenvalue_family("brownian_bridge", 16)) == 1

    def test_bridge_large_lipschitz(self):
        # need (pi (n+1))^2 > 100: pi^2 * 9 ~ 88.8 fails, pi^2 * 16 ~ 157.9 holds
        assert split_index_for(50.0, eigenvalue_family("brownian_bridge", 16)) == 3

    def test_geometric(self):
        assert split_index_for(1.0, eigenvalue_family("geometric", 10, rho=0.5)) == 1

    def test_rejects_small_lipschitz(self):
        with pytest.raises(ValueError):
            split_index_for(0.5, eigenvalue_family("brownian_bridge", 8))

    def test_rejects_too_short_truncation(self):
        with pytest.raises(ValueError):
            split_index_for(1e6, eigenvalue_family("brownian_bridge", 4))


class TestSpectralSpace:
    def test_bridge_family(self):
        lam = eigenvalue_family("brownian_bridge", 4)
        np.testing.assert_allclose(lam, 1.0 / (np.pi * np.arange(1, 5)) ** 2, rtol=1e-15)

    def test_properties(self, bridge16):
        assert bridge16.dim == 16
        assert bridge16.lambda_star == bridge16.eigenvalues[0]
        assert bridge16.lambda_next == bridge16.eigenvalues[1]
        assert bridge16.trace == pytest.approx(np.sum(bridge16.eigenvalues), rel=1e-15)

    def test_trace_converges_to_one_sixth_from_below(self):
        prev = 0.0
        for d in (8, 16, 32, 64, 128):
            tr = SpectralSpace(eigenvalue_family("brownian_bridge", d), 1).trace
            assert prev < tr < 1.0 / 6.0
            assert 1.0 / 6.0 - tr <= 1.0 / (np.pi**2 * d)
            prev = tr

    def test_invalid_split(self):
        with pytest.raises(ValueError):
            SpectralSpace(np.array([1.0, 0.5]), 3)

    def test_bad_family(self):
        with pytest.raises(ValueError):
            eigenvalue_family("cosine", 4)
