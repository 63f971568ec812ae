"""Sensor placement by column-pivoted QR on the transposed basis.

The greedy pivoting maximizes the smallest retained singular value of
the sensor-row submatrix, which is exactly what controls the worst-case
amplification of the closed-form reconstruction term.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import AssumptionViolationError, InvalidInputError
from .pod import PodBasis

# Recompute a residual column norm once downdating has shrunk it below
# this fraction of its value at the last recomputation (guards the
# classic cancellation failure of norm downdating).
_DOWNDATE_RTOL = 1e-7

# Smallest singular value below this is a full-row-rank violation.
_RANK_ATOL = 1e-10


@dataclass(frozen=True)
class SensorSet:
    """Ordered distinct state indices; position j is the j-th pivot."""

    indices: np.ndarray

    def __post_init__(self):
        idx = np.asarray(self.indices, dtype=int)
        if idx.ndim != 1 or idx.size < 1:
            raise InvalidInputError("sensor indices must form a non-empty vector")
        if np.any(idx < 0):
            raise InvalidInputError("sensor indices must be non-negative")
        if len(np.unique(idx)) != idx.size:
            raise InvalidInputError("sensor indices must be distinct")
        object.__setattr__(self, "indices", idx)

    @property
    def r(self) -> int:
        return self.indices.size


@dataclass(frozen=True)
class CpqrFactorization:
    """Pivoted QR of an m x N matrix: mat[:, perm] = q_factor @ r_factor."""

    perm: np.ndarray      # (N,) column permutation, pivot order first
    q_factor: np.ndarray  # (m, m) orthogonal
    r_factor: np.ndarray  # (m, N) upper trapezoidal


def cpqr(mat) -> CpqrFactorization:
    """Businger-Golub column-pivoted QR with Householder reflectors.

    At each step the remaining column of largest residual 2-norm is
    pivoted to the front (ties broken by lowest original column index)
    and eliminated. Residual norms are downdated, with an exact
    recomputation whenever a norm has collapsed relative to its last
    reference value.
    """
    a = np.array(mat, dtype=float)
    if a.ndim != 2:
        raise InvalidInputError("cpqr input must be a matrix")
    m, n = a.shape
    if m > n:
        raise InvalidInputError(f"cpqr expects m <= N, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise InvalidInputError("cpqr input contains non-finite entries")

    perm = np.arange(n)
    norms_sq = np.sum(a * a, axis=0)
    ref_norms_sq = norms_sq.copy()
    qt = np.eye(m)

    for k in range(m):
        tail = norms_sq[k:]
        best = tail.max()
        cand = k + np.flatnonzero(tail == best)
        j = cand[np.argmin(perm[cand])]
        if j != k:
            a[:, [k, j]] = a[:, [j, k]]
            perm[[k, j]] = perm[[j, k]]
            norms_sq[[k, j]] = norms_sq[[j, k]]
            ref_norms_sq[[k, j]] = ref_norms_sq[[j, k]]

        x = a[k:, k]
        norm_x = np.linalg.norm(x)
        if norm_x > 0.0:
            v = x.copy()
            v[0] += np.copysign(norm_x, x[0])
            v /= np.linalg.norm(v)
            a[k:, k:] -= 2.0 * np.outer(v, v @ a[k:, k:])
            qt[k:, :] -= 2.0 * np.outer(v, v @ qt[k:, :])
            a[k + 1 :, k] = 0.0

        if k + 1 < n:
            row = a[k, k + 1 :]
            norms_sq[k + 1 :] = np.maximum(norms_sq[k + 1 :] - row * row, 0.0)
            stale = (
                norms_sq[k + 1 :]
                < (_DOWNDATE_RTOL**2) * ref_norms_sq[k + 1 :]
            )
            if np.any(stale) and k + 1 < m:
                cols = k + 1 + np.flatnonzero(stale)
                fresh = np.sum(a[k + 1 :, cols] ** 2, axis=0)
                norms_sq[cols] = fresh
                ref_norms_sq[cols] = fresh

    return CpqrFactorization(perm=perm, q_factor=qt.T, r_factor=a)


def select_sensors(basis: PodBasis, r: int) -> SensorSet:
    """First r pivots of the column-pivoted QR of the transposed basis."""
    n = basis.n_states
    if not 1 <= r <= n:
        raise InvalidInputError(f"sensor count r={r} outside [1, {n}]")
    fact = cpqr(basis.basis.T)
    return SensorSet(indices=fact.perm[:r])


def estimation_bound(basis: PodBasis, sensors: SensorSet) -> float:
    """Spectral norm of the pseudo-inverse of the sensor-row submatrix.

    This is the worst-case relative amplification of the closed-form
    reconstruction; it equals 1 / sigma_min of the selected rows of the
    basis, and never drops below 1 because those rows come from an
    orthonormal matrix.
    """
    if np.any(sensors.indices >= basis.n_states):
        raise InvalidInputError("sensor index outside the state dimension")
    theta = basis.basis[sensors.indices, :]
    sigma = np.linalg.svd(theta, compute_uv=False)
    if sigma[-1] < _RANK_ATOL:
        raise AssumptionViolationError(
            f"sensor rows are rank deficient: sigma_min={sigma[-1]:.3e} "
            f"for r={sensors.r}, m={basis.n_modes}"
        )
    return float(1.0 / sigma[-1])
