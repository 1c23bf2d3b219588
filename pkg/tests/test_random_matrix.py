import math

import numpy as np
import pytest

from bipartite_glass import (
    NonSymmetricError,
    constants,
    sample_conditional_hessian,
    sample_goe,
    sample_offdiag_block,
    verify_hessian_covariance,
)
from bipartite_glass.random_matrix import (
    eigenvalues,
    index_of,
    sample_conditional_hessian_batch,
    smallest_eigenvalue,
)
from conftest import mixed_12_21_spec, pure_spec

SQRT2 = math.sqrt(2.0)


class TestGoe:
    def test_entry_variances_n2(self, rng):
        samples = np.array([sample_goe(2, rng).entries for _ in range(100000)])
        assert samples[:, 0, 0].var() == pytest.approx(0.5, abs=0.01)
        assert samples[:, 0, 1].var() == pytest.approx(0.25, abs=0.005)
        assert np.allclose(samples[:, 0, 1], samples[:, 1, 0])

    def test_n1_is_standard_gaussian(self, rng):
        samples = np.array([sample_goe(1, rng).entries[0, 0]
                            for _ in range(50000)])
        assert samples.var() == pytest.approx(1.0, abs=0.03)
        assert samples.mean() == pytest.approx(0.0, abs=0.02)

    def test_seed_determinism(self):
        m1 = sample_goe(8, np.random.default_rng(42)).entries
        m2 = sample_goe(8, np.random.default_rng(42)).entries
        assert np.array_equal(m1, m2)


class TestEigen:
    def test_identity(self):
        assert smallest_eigenvalue(np.eye(3)) == pytest.approx(1.0)

    def test_diagonal(self):
        assert smallest_eigenvalue(np.diag([-2.0, 0.0, 5.0])) == pytest.approx(-2.0)

    def test_index(self):
        assert index_of(np.diag([-2.0, -0.5, 5.0])) == 2
        assert index_of(np.eye(4)) == 0

    def test_non_symmetric_rejected(self):
        with pytest.raises(NonSymmetricError):
            eigenvalues(np.array([[0.0, 1.0], [0.0, 0.0]]))

    def test_goe_edge(self, rng):
        mins = [smallest_eigenvalue(sample_goe(1000, rng).entries)
                for _ in range(50)]
        assert -1.50 <= float(np.mean(mins)) <= -1.34


class TestOffdiagBlock:
    def test_zero_variance_is_zero_matrix(self, rng):
        g = sample_offdiag_block(5, 7, 0.0, rng)
        assert np.all(g == 0.0)

    def test_marchenko_pastur_edge(self, rng):
        # gamma* = 1: largest eigenvalue of G G^T -> (1 + 1)^2 = 4
        tops = []
        for _ in range(20):
            g = sample_offdiag_block(200, 200, 1.0 / 200.0, rng)
            tops.append(float(eigenvalues(g @ g.T)[-1]))
        assert np.mean(tops) == pytest.approx(4.0, abs=0.3)

    def test_entry_variance(self, rng):
        g = sample_offdiag_block(1000, 1000, 0.37, rng)
        assert g.var() == pytest.approx(0.37, rel=0.02)


class TestConditionalHessian:
    def test_coupled_block_diagonal_index_splits(self, rng):
        c = constants(pure_spec(2, 2, 1.0))
        h = sample_conditional_hessian(c, 6, 6, -1.5, True, rng)
        assert np.all(h.assembled[:h.n1, h.n1:] == 0.0)
        total = index_of(h.assembled)
        parts = index_of(h.assembled[:h.n1, :h.n1]) + index_of(
            h.assembled[h.n1:, h.n1:])
        assert total == parts

    def test_zero_level_pure_centered(self, rng):
        c = constants(pure_spec(2, 2, 1.0))
        assert c.alpha1 == 0.0
        mats = sample_conditional_hessian_batch(c, 6, 6, 0.0, False, rng, 20000)
        means = mats.mean(axis=0)
        assert np.abs(means).max() <= 5.0 * 1.0 / math.sqrt(20000) * math.sqrt(
            12.0 * 2.0 / 36.0 * 10.0)  # 5 sigma of the largest entry stderr

    def test_offdiag_entry_variance_matches_closed_form(self, rng):
        # Var of an off-diagonal entry of block i is N xi_i'' / N_i^2
        c = constants(pure_spec(2, 2, 1.0))
        n1 = n2 = 6
        mats = sample_conditional_hessian_batch(c, n1, n2, 0.0, False, rng,
                                                100000)
        n = n1 + n2
        target = n * c.xi1pp / n1 ** 2
        emp = mats[:, 0, 1].var()
        stderr = target * math.sqrt(2.0 / 100000)
        assert abs(emp - target) <= 5.0 * stderr
        cross_target = n * c.xi1p * c.xi2p / (n1 * n2)
        emp_cross = mats[:, 0, n1 - 1 + 1].var()
        assert abs(emp_cross - cross_target) <= 5.0 * cross_target * math.sqrt(
            2.0 / 100000)

    def test_batch_matches_single_law(self, rng):
        c = constants(mixed_12_21_spec())
        h = sample_conditional_hessian(c, 5, 7, -1.2, False, rng)
        b = sample_conditional_hessian_batch(c, 5, 7, -1.2, False, rng, 3)
        assert h.assembled.shape == b.shape[1:]
        assert np.allclose(b, b.transpose(0, 2, 1))


class TestVerifyCovariance:
    def test_quick_pass_uncoupled(self, rng):
        report = verify_hessian_covariance(pure_spec(2, 2, 1.0), 6, 6, 20000,
                                           rng)
        assert report.all_pass, [i for i in report.items if not i["passed"]]

    def test_quick_pass_coupled_with_exact_zero_cross(self, rng):
        report = verify_hessian_covariance(pure_spec(2, 2, 1.0), 6, 6, 20000,
                                           rng, coupled=True)
        assert report.all_pass, [i for i in report.items if not i["passed"]]
        zero_items = [i for i in report.items
                      if i["name"] == "offdiag_block_zero"]
        assert zero_items and zero_items[0]["empirical"] == 0.0

    def test_deterministic_given_seed(self):
        r1 = verify_hessian_covariance(pure_spec(2, 2, 1.0), 5, 5, 5000,
                                       np.random.default_rng(11))
        r2 = verify_hessian_covariance(pure_spec(2, 2, 1.0), 5, 5, 5000,
                                       np.random.default_rng(11))
        assert [i["empirical"] for i in r1.items] == [
            i["empirical"] for i in r2.items]
