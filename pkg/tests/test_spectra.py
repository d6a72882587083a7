import math

import numpy as np
import pytest

from kbrg.errors import DataError, ParameterError
from kbrg.model import ModelParams
from kbrg.ensembles import (
    MatrixKind,
    SymmetricMatrixSample,
    sample_adjacency,
    sample_centred,
    sample_gaussianized,
    sample_wigner,
)
from kbrg import spectra
from kbrg.spectra import (
    EmpiricalMeasure,
    eigenvalues,
    empirical_moment,
    ks_distance,
    levy_distance,
    survival_function,
    tail_fit,
)


def _wrap(mat, params=None):
    mat = np.asarray(mat, float)
    params = params or ModelParams(n=mat.shape[0], d=1, alpha=0.5)
    return SymmetricMatrixSample(mat, MatrixKind.WIGNER, params, (0, 0))


class TestEigenvalues:
    def test_zero_matrix(self):
        s = eigenvalues(_wrap(np.zeros((5, 5))))
        assert np.all(s.eigenvalues == 0.0)

    def test_two_by_two_off_diagonal(self):
        s = eigenvalues(_wrap([[0.0, 0.7], [0.7, 0.0]]))
        assert s.eigenvalues == pytest.approx([-0.7, 0.7])

    def test_complete_graph_spectrum(self):
        p = ModelParams(n=5, d=1, alpha=0.0, kernel="trivial")
        s = eigenvalues(sample_adjacency(p, 1, 2))
        expect = np.array([-0.5, -0.5, -0.5, -0.5, 2.0])  # 1/sqrt(4) scaling
        assert s.eigenvalues == pytest.approx(expect)

    def test_sorted_ascending(self):
        p = ModelParams(n=40, d=1, alpha=0.5)
        s = eigenvalues(sample_wigner(p, 3))
        assert np.all(np.diff(s.eigenvalues) >= 0.0)

    def test_rejects_nonfinite(self):
        mat = np.zeros((3, 3))
        mat[0, 1] = mat[1, 0] = np.nan
        with pytest.raises(DataError):
            eigenvalues(_wrap(mat))

    def test_trace_identity(self):
        p = ModelParams(n=64, d=1, alpha=0.5, tau=3.0, trunc_m=9.0)
        samp = sample_gaussianized(p, 4, 5)
        s = eigenvalues(samp)
        scale = 1e-8 * samp.order * np.abs(samp.entries).max()
        assert abs(s.eigenvalues.sum()) <= max(scale, 1e-10)

    def test_frobenius_identity(self):
        p = ModelParams(n=48, d=1, alpha=0.5)
        samp = sample_wigner(p, 9)
        s = eigenvalues(samp)
        frob = np.sum(samp.entries ** 2) / samp.order
        assert empirical_moment(s, 2) == pytest.approx(frob, rel=1e-12)

    def test_moment_matches_matrix_power_trace(self):
        p = ModelParams(n=16, d=1, alpha=0.5)
        samp = sample_wigner(p, 21)
        s = eigenvalues(samp)
        power = np.linalg.matrix_power(samp.entries, 4)
        assert empirical_moment(s, 4) == pytest.approx(np.trace(power) / 16, rel=1e-10)

    def test_centred_kind_spectrum_roughly_symmetric(self):
        p = ModelParams(n=400, d=1, alpha=0.5, tau=4.0, trunc_m=20.0)
        s = eigenvalues(sample_centred(p, 6, 7))
        vals = s.eigenvalues
        assert abs(vals.mean()) <= 3.0 * vals.std() / math.sqrt(vals.size)


class TestEmpiricalMeasure:
    def test_masses_sum_to_one(self):
        with pytest.raises(ParameterError):
            EmpiricalMeasure([0.0, 1.0], [0.6, 0.6])

    def test_histogram_construction(self):
        m = EmpiricalMeasure.from_histogram([0.0, 1.0, 2.0], [3, 1])
        assert m.atoms == pytest.approx([0.5, 1.5])
        assert m.masses == pytest.approx([0.75, 0.25])

    def test_cdf_steps(self):
        m = EmpiricalMeasure.from_samples([1.0, 2.0, 2.0, 4.0])
        assert m.cdf(0.5) == 0.0
        assert m.cdf(1.0) == 0.25
        assert m.cdf(2.0) == 0.75
        assert m.cdf(5.0) == 1.0

    def test_empty_rejected(self):
        with pytest.raises(DataError):
            EmpiricalMeasure.from_samples([])


class TestDistances:
    def test_ks_identical(self):
        m = EmpiricalMeasure.from_samples([0.0, 1.0, 3.0])
        assert ks_distance(m, m) == 0.0

    def test_ks_point_masses(self):
        assert ks_distance(EmpiricalMeasure([0.0]), EmpiricalMeasure([1.0])) == 1.0

    def test_ks_uniform_vs_point(self):
        uniform01 = EmpiricalMeasure([0.0, 1.0])
        assert ks_distance(uniform01, EmpiricalMeasure([0.0])) == 0.5

    def test_levy_identical(self):
        m = EmpiricalMeasure.from_samples([0.0, 2.0])
        assert levy_distance(m, m) == 0.0

    @pytest.mark.parametrize("shift,expected", [(0.25, 0.25), (0.5, 0.5), (1.0, 1.0), (10.0, 1.0)])
    def test_levy_point_masses(self, shift, expected):
        # hand solution of the two-step-function case: min(shift, 1)
        d = levy_distance(EmpiricalMeasure([0.0]), EmpiricalMeasure([shift]))
        assert d == pytest.approx(expected, abs=1e-9)

    def test_levy_at_most_ks(self):
        rng = np.random.default_rng(0)
        for _ in range(5):
            a = EmpiricalMeasure.from_samples(rng.normal(size=40))
            b = EmpiricalMeasure.from_samples(rng.normal(loc=0.3, size=25))
            assert levy_distance(a, b) <= ks_distance(a, b) + 1e-9

    @pytest.mark.parametrize("metric", [levy_distance, ks_distance])
    def test_metric_axioms_on_random_triples(self, metric):
        rng = np.random.default_rng(42)
        for _ in range(8):
            ms = [EmpiricalMeasure.from_samples(rng.normal(loc=rng.uniform(-1, 1), size=15))
                  for _ in range(3)]
            a, b, c = ms
            assert metric(a, b) == pytest.approx(metric(b, a), abs=1e-9)
            assert metric(a, c) <= metric(a, b) + metric(b, c) + 1e-9


class TestMoments:
    def test_zero_matrix(self):
        assert empirical_moment(np.zeros(10), 2) == 0.0

    def test_two_by_two(self):
        s = eigenvalues(_wrap([[0.0, 0.3], [0.3, 0.0]]))
        assert empirical_moment(s, 2) == pytest.approx(0.09)

    def test_wigner_second_moment(self):
        p = ModelParams(n=2000, d=1, alpha=0.5)
        s = eigenvalues(sample_wigner(p, 17))
        assert empirical_moment(s, 2) == pytest.approx(1.0, abs=0.05)

    @pytest.mark.parametrize("order", [1, 3, 0, 22, 2.0])
    def test_rejects_bad_order(self, order):
        with pytest.raises(ParameterError):
            empirical_moment(np.ones(4), order)


class TestSurvivalAndTail:
    def test_all_zero_eigenvalues(self):
        table = survival_function([np.zeros(100)], [1.0])
        assert table[0, 1] == 0.0

    def test_symmetric_sample_at_origin(self):
        vals = np.concatenate([np.linspace(-2, -0.1, 50), np.linspace(0.1, 2, 50)])
        table = survival_function([vals], [0.0])
        assert table[0, 1] == pytest.approx(0.5)

    def test_empty_pool_rejected(self):
        with pytest.raises(DataError):
            survival_function([], [1.0])

    def test_exact_power_law_recovery(self):
        # S(x) = 2 x**-4 sampled on a grid: slope -4, intercept log 2 exactly
        grid = np.geomspace(1.5, 30.0, 24)
        table = np.column_stack([grid, 2.0 * grid ** -4.0])
        fit = tail_fit(table, x_min=1.5)
        assert fit.slope == pytest.approx(-4.0, abs=1e-10)
        assert fit.intercept == pytest.approx(math.log(2.0), abs=1e-10)
        assert fit.stderr == pytest.approx(0.0, abs=1e-10)

    def test_tau4_constant(self):
        # tau = 4: constant (1/2) m1**3 = 27/16, slope -6
        tau = 4.0
        m1 = (tau - 1.0) / (tau - 2.0)
        c = 0.5 * m1 ** (tau - 1.0)
        assert c == pytest.approx(27.0 / 16.0)
        grid = np.geomspace(1.5, 20.0, 16)
        table = np.column_stack([grid, c * grid ** (-2.0 * (tau - 1.0))])
        fit = tail_fit(table, x_min=1.5)
        assert fit.slope == pytest.approx(-6.0, abs=1e-10)
        assert fit.intercept == pytest.approx(math.log(c), abs=1e-10)

    def test_insufficient_points(self):
        table = np.column_stack([np.geomspace(1.5, 3.0, 5), np.full(5, 0.1)])
        with pytest.raises(DataError):
            tail_fit(table, x_min=1.5)


def test_standardize():
    vals = np.array([1.0, 3.0, 5.0])
    out = spectra.standardize(vals)
    assert out.mean() == pytest.approx(0.0)
    assert np.mean(out ** 2) == pytest.approx(1.0)
