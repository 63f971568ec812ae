"""Basis-extraction oracles: scalar-loop means, Gram-matrix spectra,
projector geometry, and desk-scale optimality against random bases."""

import numpy as np
import pytest

from sdeim.errors import InvalidInputError, RankDeficiencyError
from sdeim.pod import PodBasis, best_fit, center, compute_pod, truncation_error


def random_basis(rng, n, m):
    q, _ = np.linalg.qr(rng.standard_normal((n, m)))
    return PodBasis(mean=np.zeros(n), basis=q, singular_values=np.arange(m, 0, -1.0))


class TestCenter:
    def test_constant_columns_center_to_zero(self):
        v = np.array([1.0, -2.0, 3.0])
        snaps = np.tile(v[:, None], (1, 5))
        mean, centered = center(snaps)
        assert np.array_equal(mean, v)
        assert np.all(centered == 0.0)

    def test_already_centered_data_is_unchanged(self):
        snaps = np.array([[1.0, -1.0], [0.0, 0.0]])
        mean, centered = center(snaps)
        assert np.array_equal(mean, np.zeros(2))
        assert np.array_equal(centered, snaps)

    def test_matches_scalar_loop_average(self):
        rng = np.random.default_rng(0)
        snaps = rng.standard_normal((4, 3))
        mean, centered = center(snaps)
        for i in range(4):
            acc = 0.0
            for j in range(3):
                acc += snaps[i, j]
            assert mean[i] == pytest.approx(acc / 3.0, abs=1e-15)
        assert np.allclose(centered.sum(axis=1), 0.0, atol=1e-14)


class TestComputePod:
    def test_identity_input(self):
        basis = compute_pod(np.eye(3), 2)
        assert np.allclose(basis.singular_values, np.ones(3))
        assert basis.n_modes == 2
        assert np.allclose(basis.basis.T @ basis.basis, np.eye(2), atol=1e-12)

    def test_recovers_constructed_spectrum(self):
        rng = np.random.default_rng(1)
        left, _ = np.linalg.qr(rng.standard_normal((5, 2)))
        right, _ = np.linalg.qr(rng.standard_normal((4, 2)))
        data = left @ np.diag([3.0, 2.0]) @ right.T
        basis = compute_pod(data, 2)
        assert np.allclose(basis.singular_values[:2], [3.0, 2.0], atol=1e-12)

    def test_reconstruction_error_matches_gram_eigenvalues(self):
        # Independent oracle: eigendecomposition of the Gram matrix A^T A
        # gives the squared spectrum; the projection residual must equal
        # the root of the trailing eigenvalue sum.
        rng = np.random.default_rng(2)
        data = rng.standard_normal((5, 4))
        m = 2
        basis = compute_pod(data, m)
        eigvals = np.sort(np.linalg.eigvalsh(data.T @ data))[::-1]
        expected = np.sqrt(np.sum(eigvals[m:]))
        residual = np.linalg.norm(
            data - basis.basis @ (basis.basis.T @ data), ord="fro"
        )
        assert residual == pytest.approx(expected, rel=1e-10)

    def test_rank_deficiency_reports_usable_rank(self):
        rng = np.random.default_rng(3)
        data = rng.standard_normal((6, 2)) @ rng.standard_normal((2, 5))
        with pytest.raises(RankDeficiencyError) as err:
            compute_pod(data, 3)
        assert err.value.usable_rank == 2

    def test_sign_convention_and_reproducibility(self):
        rng = np.random.default_rng(4)
        data = rng.standard_normal((6, 8))
        a = compute_pod(data, 3)
        b = compute_pod(data.copy(), 3)
        assert np.array_equal(a.basis, b.basis)
        for j in range(3):
            col = a.basis[:, j]
            assert col[np.argmax(np.abs(col))] > 0.0


class TestBestFit:
    def test_in_subspace_vector_is_fixed_point(self):
        rng = np.random.default_rng(5)
        basis = random_basis(rng, 7, 3)
        u = basis.basis[:, 0]
        assert np.allclose(best_fit(basis, u), u, atol=1e-12)

    def test_orthogonal_vector_maps_to_zero(self):
        basis = PodBasis(
            mean=np.zeros(3),
            basis=np.eye(3)[:, :2],
            singular_values=np.array([2.0, 1.0]),
        )
        u = np.array([0.0, 0.0, 5.0])
        assert np.array_equal(best_fit(basis, u), np.zeros(3))

    def test_residual_orthogonal_to_basis(self):
        rng = np.random.default_rng(6)
        basis = random_basis(rng, 9, 4)
        u = rng.standard_normal(9)
        residual = u - best_fit(basis, u)
        assert np.max(np.abs(basis.basis.T @ residual)) < 1e-10

    def test_projector_is_idempotent(self):
        rng = np.random.default_rng(7)
        basis = random_basis(rng, 8, 3)
        u = rng.standard_normal(8)
        once = best_fit(basis, u)
        assert np.max(np.abs(best_fit(basis, once) - once)) < 1e-10

    def test_dimension_mismatch(self):
        rng = np.random.default_rng(8)
        basis = random_basis(rng, 6, 2)
        with pytest.raises(InvalidInputError):
            best_fit(basis, np.ones(5))


class TestTruncationError:
    def test_zero_for_basis_vector(self):
        rng = np.random.default_rng(9)
        basis = random_basis(rng, 6, 2)
        assert truncation_error(basis, basis.basis[:, 1]) < 1e-12

    def test_one_for_orthogonal_unit_vector(self):
        basis = PodBasis(
            mean=np.zeros(4),
            basis=np.eye(4)[:, :2],
            singular_values=np.array([2.0, 1.0]),
        )
        assert truncation_error(basis, np.array([0.0, 0.0, 0.0, 1.0])) == 1.0

    def test_monotone_in_mode_count(self):
        rng = np.random.default_rng(10)
        data = rng.standard_normal((8, 10))
        u = rng.standard_normal(8)
        errors = [
            truncation_error(compute_pod(data, m), u) for m in range(1, 7)
        ]
        for coarser, finer in zip(errors, errors[1:]):
            assert finer <= coarser + 1e-12


class TestOptimality:
    def test_beats_random_bases_on_total_residual(self):
        # On 6 x 8 data with 2 modes: no random orthonormal basis out of
        # 100 attains a lower total squared residual.
        rng = np.random.default_rng(11)
        data = rng.standard_normal((6, 8))
        basis = compute_pod(data, 2)
        pod_resid = np.linalg.norm(
            data - basis.basis @ (basis.basis.T @ data), ord="fro"
        )
        for _ in range(100):
            q, _ = np.linalg.qr(rng.standard_normal((6, 2)))
            resid = np.linalg.norm(data - q @ (q.T @ data), ord="fro")
            assert pod_resid <= resid + 1e-12
