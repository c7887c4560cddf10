"""Tests for the SVD, proximal, Procrustes, and SPD-solve primitives."""

import numpy as np
import pytest

from agle.errors import NumericalError
from agle.kernels import procrustes, spd_solve, svt, thin_svd


def prox_objective(candidate: np.ndarray, m: np.ndarray, tau: float) -> float:
    """tau * nuclear norm + half squared Frobenius distance to m."""
    nuclear = np.linalg.svd(candidate, compute_uv=False).sum()
    return tau * nuclear + 0.5 * np.sum((candidate - m) ** 2)


def random_orthonormal(rng, d: int, m: int) -> np.ndarray:
    return np.linalg.qr(rng.normal(size=(d, m)))[0]


class TestThinSVD:
    def test_reconstruction(self):
        rng = np.random.default_rng(0)
        for shape in [(4, 4), (6, 3), (3, 6)]:
            m = rng.normal(size=shape)
            f = thin_svd(m)
            err = np.linalg.norm(f.reconstruct() - m) / np.linalg.norm(m)
            assert err <= 1e-8

    def test_orthonormal_factors_and_ordering(self):
        rng = np.random.default_rng(1)
        m = rng.normal(size=(8, 5))
        f = thin_svd(m)
        np.testing.assert_allclose(f.left.T @ f.left, np.eye(5), atol=1e-10)
        np.testing.assert_allclose(f.right.T @ f.right, np.eye(5), atol=1e-10)
        assert np.all(np.diff(f.singulars) <= 0) and np.all(f.singulars >= 0)

    def test_sign_convention_deterministic(self):
        rng = np.random.default_rng(2)
        m = rng.normal(size=(6, 6))
        f = thin_svd(m)
        anchors = np.argmax(np.abs(f.left), axis=0)
        assert np.all(f.left[anchors, np.arange(6)] >= 0)

    def test_rank_counts_above_relative_floor(self):
        f = thin_svd(np.diag([3.0, 1.0, 1e-15]))
        assert f.rank == 2
        assert thin_svd(np.zeros((3, 3))).rank == 0


class TestSVT:
    def test_diagonal_shrinkage(self):
        out = svt(np.diag([3.0, 1.0, 0.2]), 0.5)
        np.testing.assert_allclose(out, np.diag([2.5, 0.5, 0.0]), atol=1e-12)

    def test_zero_threshold_is_identity(self):
        rng = np.random.default_rng(3)
        m = rng.normal(size=(5, 5))
        np.testing.assert_allclose(svt(m, 0.0), m, atol=1e-10)

    def test_nuclear_norm_of_output(self):
        rng = np.random.default_rng(4)
        m = rng.normal(size=(6, 6))
        tau = 1.0
        sigma = np.linalg.svd(m, compute_uv=False)
        out_sigma = np.linalg.svd(svt(m, tau), compute_uv=False)
        np.testing.assert_allclose(out_sigma.sum(), np.maximum(sigma - tau, 0).sum(), atol=1e-10)

    def test_beats_sampled_perturbations_of_prox_objective(self):
        # Independent check that the output minimizes the prox objective:
        # no random perturbation may score lower.
        rng = np.random.default_rng(5)
        m = rng.normal(size=(5, 5))
        tau = 1.0
        out = svt(m, tau)
        base = prox_objective(out, m, tau)
        for _ in range(1000):
            step = rng.normal(size=(5, 5))
            step *= rng.choice([1e-4, 1e-2, 1e-1]) / np.linalg.norm(step)
            assert prox_objective(out + step, m, tau) >= base - 1e-12

    def test_firmly_nonexpansive(self):
        rng = np.random.default_rng(6)
        for _ in range(50):
            a = rng.normal(size=(5, 5))
            b = rng.normal(size=(5, 5))
            tau = float(rng.uniform(0.0, 2.0))
            lhs = np.linalg.norm(svt(a, tau) - svt(b, tau))
            assert lhs <= np.linalg.norm(a - b) + 1e-12

    def test_invalid_inputs(self):
        with pytest.raises(ValueError):
            svt(np.array([[np.nan, 0.0], [0.0, 1.0]]), 0.5)
        with pytest.raises(ValueError):
            svt(np.eye(2), -1.0)


class TestProcrustes:
    def test_identity_fixed(self):
        np.testing.assert_allclose(procrustes(np.eye(3)), np.eye(3), atol=1e-12)

    def test_sign_matrix(self):
        # Verified below by trace dominance: Tr(P.T M) = 5 is the optimum.
        m = np.diag([2.0, -3.0])
        p = procrustes(m)
        np.testing.assert_allclose(p, np.diag([1.0, -1.0]), atol=1e-12)
        assert np.trace(p.T @ m) == pytest.approx(5.0)

    def test_orthonormal_input_returned(self):
        rng = np.random.default_rng(7)
        q = random_orthonormal(rng, 6, 3)
        np.testing.assert_allclose(procrustes(q), q, atol=1e-10)

    def test_output_is_orthonormal(self):
        rng = np.random.default_rng(8)
        m = rng.normal(size=(7, 4))
        p = procrustes(m)
        np.testing.assert_allclose(p.T @ p, np.eye(4), atol=1e-10)

    def test_trace_dominates_random_candidates(self):
        rng = np.random.default_rng(9)
        for _ in range(20):
            m = rng.normal(size=(6, 3))
            best = np.trace(procrustes(m).T @ m)
            for _ in range(500):
                r = random_orthonormal(rng, 6, 3)
                assert best >= np.trace(r.T @ m) - 1e-10

    def test_wide_matrix_rejected(self):
        with pytest.raises(ValueError):
            procrustes(np.zeros((2, 3)))


class TestSPDSolve:
    def test_identity(self):
        rng = np.random.default_rng(10)
        rhs = rng.normal(size=(4, 3))
        np.testing.assert_allclose(spd_solve(np.eye(4), rhs), rhs, atol=1e-14)

    def test_scaled_identity(self):
        rng = np.random.default_rng(11)
        rhs = rng.normal(size=(4,))
        np.testing.assert_allclose(spd_solve(2.0 * np.eye(4), rhs), rhs / 2.0, atol=1e-14)

    def test_residual_on_random_spd(self):
        rng = np.random.default_rng(12)
        for _ in range(50):
            m = rng.normal(size=(8, 8))
            a = m.T @ m + np.eye(8)
            rhs = rng.normal(size=(8, 4))
            x = spd_solve(a, rhs)
            resid = np.max(np.abs(a @ x - rhs))
            assert resid <= 1e-8 * max(np.max(np.abs(rhs)), 1e-30)

    def test_non_positive_definite_reports_pivot(self):
        a = np.diag([1.0, -1.0, 2.0])
        with pytest.raises(NumericalError) as exc:
            spd_solve(a, np.ones(3))
        assert exc.value.pivot == 2

    def test_asymmetric_rejected(self):
        a = np.array([[1.0, 0.5], [0.0, 1.0]])
        with pytest.raises(ValueError):
            spd_solve(a, np.ones(2))
