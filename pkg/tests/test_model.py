import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kbrg.errors import DomainError, ParameterError
from kbrg.model import (
    ModelParams,
    connection_probability,
    kernel_value,
    pairwise_distances,
    pareto_inverse_cdf,
    pareto_quadrature,
    sample_weights,
    scaling_constant,
    torus_distance,
    trial_seeds,
)


class TestParams:
    def test_valid_roundtrip(self):
        p = ModelParams(n=16, d=2, alpha=1.5, tau=3.0, sigma=0.5, trunc_m=10.0)
        assert p.order == 256
        assert p.truncated

    @pytest.mark.parametrize("kwargs", [
        dict(n=1), dict(n=8, d=3), dict(n=8, alpha=-0.1), dict(n=8, tau=2.0),
        dict(n=8, sigma=0.0), dict(n=8, tau=3.0, sigma=2.0), dict(n=8, trunc_m=1.0),
        dict(n=8, kernel="nope"),
    ])
    def test_rejects_bad_parameters(self, kwargs):
        with pytest.raises(ParameterError):
            ModelParams(**kwargs)

    def test_dense_regime_guard(self):
        p = ModelParams(n=8, d=1, alpha=1.0)
        with pytest.raises(ParameterError, match="dense"):
            p.require_dense()
        ModelParams(n=8, d=1, alpha=0.5).require_dense()


class TestTorusDistance:
    def test_wraps_around(self):
        assert torus_distance(1, 9, 10) == 2

    def test_two_dimensional(self):
        assert torus_distance((1, 1), (4, 4), 5) == 4

    def test_identity(self):
        assert torus_distance(3, 3, 7) == 0

    def test_out_of_range(self):
        with pytest.raises(ParameterError):
            torus_distance(0, 3, 7)

    @settings(max_examples=60, deadline=None)
    @given(st.integers(3, 30), st.data())
    def test_is_a_metric(self, n, data):
        pts = [data.draw(st.tuples(st.integers(1, n), st.integers(1, n))) for _ in range(3)]
        a, b, c = pts
        assert torus_distance(a, b, n) == torus_distance(b, a, n)
        assert (torus_distance(a, b, n) == 0) == (a == b)
        assert torus_distance(a, c, n) <= torus_distance(a, b, n) + torus_distance(b, c, n)

    def test_pairwise_matrix_matches_scalar(self):
        p = ModelParams(n=5, d=2, alpha=0.5)
        mat = pairwise_distances(p)
        # vertex order is lexicographic in (c1, c2)
        coords = [(c1, c2) for c1 in range(1, 6) for c2 in range(1, 6)]
        for i in (0, 7, 24):
            for j in (3, 12, 20):
                assert mat[i, j] == torus_distance(coords[i], coords[j], 5)


class TestWeights:
    def test_inverse_cdf_boundary(self):
        assert pareto_inverse_cdf(1.0, 3.0) == 1.0

    def test_inverse_cdf_hand_value(self):
        # tau = 3: P(W > t) = t**-2, so U = 0.25 maps to W = 2
        assert pareto_inverse_cdf(0.25, 3.0) == pytest.approx(2.0)

    def test_hard_truncation_zeroes_large_draws(self):
        p = ModelParams(n=1000, d=1, alpha=0.5, tau=2.5, trunc_m=2.0)
        w = sample_weights(p, 123)
        assert w.truncated
        assert np.all((w.values == 0.0) | ((1.0 <= w.values) & (w.values <= 2.0)))
        assert np.any(w.values == 0.0)  # tail mass 2**-1.5 makes zeros near-certain

    def test_untruncated_values_at_least_one(self):
        p = ModelParams(n=500, d=1, alpha=0.5, tau=4.0)
        w = sample_weights(p, 5)
        assert np.all(w.values >= 1.0)

    def test_reproducible_across_calls(self):
        p = ModelParams(n=64, d=1, alpha=0.5)
        a = sample_weights(p, 99).values
        b = sample_weights(p, 99).values
        assert np.array_equal(a, b)

    def test_trial_seed_streams_differ(self):
        p = ModelParams(n=64, d=1, alpha=0.5)
        w0, n0 = trial_seeds(7, 0)
        w1, _ = trial_seeds(7, 1)
        assert not np.array_equal(sample_weights(p, w0).values, sample_weights(p, w1).values)
        assert not np.array_equal(sample_weights(p, w0).values, sample_weights(p, n0).values)

    @pytest.mark.parametrize("tau", [2.5, 3.0, 4.0])
    def test_empirical_cdf_matches_pareto(self, tau):
        p = ModelParams(n=10 ** 6, d=1, alpha=0.5, tau=tau)
        w = np.sort(sample_weights(p, 2024).values)
        # one-sample KS statistic against F(t) = 1 - t**-(tau-1)
        f = 1.0 - w ** -(tau - 1.0)
        grid = np.arange(1, w.size + 1) / w.size
        ks = max(np.max(np.abs(grid - f)), np.max(np.abs(grid - 1.0 / w.size - f)))
        assert ks < 0.01


class TestKernels:
    def test_product_case(self):
        assert kernel_value("sigma", 1.0, 2.0, 3.0) == 6.0

    def test_half_exponent(self):
        assert kernel_value("sigma", 0.5, 4.0, 1.0) == 4.0

    def test_zero_weight_gives_zero(self):
        assert kernel_value("sigma", 0.5, 0.0, 3.0) == 0.0
        assert kernel_value("sigma", 0.0, 0.0, 3.0) == 0.0

    def test_strong_and_trivial(self):
        assert kernel_value("strong", None, 2.0, 5.0) == 5.0
        assert kernel_value("trivial", None, 2.0, 5.0) == 1.0

    def test_sigma_zero_matches_strong_on_support(self):
        w, v = 3.0, 1.5
        assert kernel_value("sigma", 0.0, w, v) == kernel_value("strong", None, w, v)

    def test_sigma_one_matches_product(self):
        w, v = 2.5, 1.5
        assert kernel_value("sigma", 1.0, w, v) == kernel_value("product", None, w, v)

    def test_pref_attach_exponent(self):
        p = ModelParams(n=8, d=1, alpha=0.5, tau=3.0, kernel="pref-attach")
        assert p.effective_sigma() == pytest.approx(0.0)
        # exponent 0 reduces to the strong kernel on [1, inf)
        assert kernel_value("pref-attach", None, 2.0, 3.0, params=p) == 3.0

    @settings(max_examples=50, deadline=None)
    @given(st.floats(0.0, 50.0), st.floats(0.0, 50.0), st.floats(0.01, 2.0))
    def test_symmetry(self, w, v, sigma):
        assert kernel_value("sigma", sigma, w, v) == kernel_value("sigma", sigma, v, w)


class TestConnectionProbability:
    def test_nearest_neighbours_always_connect(self):
        p = ModelParams(n=10, d=1, alpha=0.9, kernel="trivial")
        w = sample_weights(p, 0)
        assert connection_probability(1, 2, w, p) == 1.0

    def test_inverse_distance_value(self):
        p = ModelParams(n=10, d=1, alpha=1.0, tau=4.0, sigma=1.0)
        w = sample_weights(p, 0)
        w.values[:] = 1.0
        assert connection_probability(1, 5, w, p) == pytest.approx(0.25)

    def test_caps_at_one(self):
        p = ModelParams(n=10, d=1, alpha=1.0, tau=4.0, sigma=1.0)
        w = sample_weights(p, 0)
        w.values[:] = 10.0
        assert connection_probability(1, 3, w, p) == 1.0

    def test_self_loop_rejected(self):
        p = ModelParams(n=10, d=1, alpha=0.5)
        w = sample_weights(p, 0)
        with pytest.raises(DomainError):
            connection_probability(4, 4, w, p)


class TestScalingConstant:
    def test_n3_alpha_half(self):
        # all six ordered pairs sit at distance 1
        assert scaling_constant(ModelParams(n=3, d=1, alpha=0.5)) == pytest.approx(2.0)

    def test_n4_alpha_one(self):
        # each vertex sees distances {1, 1, 2}
        assert scaling_constant(ModelParams(n=4, d=1, alpha=1.0)) == pytest.approx(2.5)

    @pytest.mark.parametrize("n,d", [(7, 1), (50, 1), (6, 2)])
    def test_alpha_zero_counts_pairs(self, n, d):
        assert scaling_constant(ModelParams(n=n, d=d, alpha=0.0)) == n ** d - 1

    def test_matches_direct_pair_sum(self):
        p = ModelParams(n=6, d=2, alpha=1.1)
        dist = pairwise_distances(p)
        iu = np.triu_indices(p.order, 1)
        direct = 2.0 * np.sum(dist[iu] ** -p.alpha) / p.order
        assert scaling_constant(p) == pytest.approx(direct, rel=1e-12)

    def test_growth_rate_stabilizes(self):
        # c_N / N**(d - alpha) approaches a constant in the dense regime
        alpha = 0.5
        ratios = [scaling_constant(ModelParams(n=n, d=1, alpha=alpha)) / n ** (1 - alpha)
                  for n in (200, 400, 800, 1600, 3200)]
        gaps = np.abs(np.diff(ratios))
        assert np.all(np.diff(gaps) < 0)


class TestParetoQuadrature:
    def test_total_mass(self):
        nodes, weights = pareto_quadrature(4.0, 50.0, size=128)
        assert weights.sum() == pytest.approx(1.0 - 50.0 ** -3, abs=1e-12)

    def test_first_moment(self):
        nodes, weights = pareto_quadrature(3.0, 100.0, size=128)
        # integral of x (tau-1) x**-tau over [1, 100]
        exact = 2.0 / 1.0 * (1.0 - 100.0 ** -1)
        assert nodes @ weights == pytest.approx(exact, rel=1e-12)
