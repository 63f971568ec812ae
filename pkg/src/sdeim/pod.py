"""Mean-removed orthogonal decomposition of snapshot data.

The snapshot mean is removed first, the basis comes from a thin SVD of
the centered matrix, and every downstream consumer works with
mean-removed states; the mean is re-added only when a full-state
reconstruction is returned to the caller.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError, RankDeficiencyError

# Singular values below this fraction of the leading one count as zero.
_RANK_RTOL = 1e-12


@dataclass(frozen=True)
class PodBasis:
    """Orthonormal basis of the reduced subspace.

    Fields
    ------
    mean : (N,) column average of the snapshots the basis was built from
    basis : (N, m) orthonormal columns, leading left singular vectors
    singular_values : full non-increasing spectrum of the centered data
    """

    mean: np.ndarray
    basis: np.ndarray
    singular_values: np.ndarray

    def __post_init__(self):
        mean = np.asarray(self.mean, dtype=float)
        basis = np.asarray(self.basis, dtype=float)
        sv = np.asarray(self.singular_values, dtype=float)
        if basis.ndim != 2:
            raise InvalidInputError("basis must be a 2-D array")
        if mean.shape != (basis.shape[0],):
            raise InvalidInputError(
                f"mean has shape {mean.shape}, basis rows {basis.shape[0]}"
            )
        if basis.shape[1] > basis.shape[0]:
            raise InvalidInputError("more basis columns than state dimension")
        if np.any(sv < 0.0) or np.any(np.diff(sv) > 0.0):
            raise InvalidInputError(
                "singular values must be non-negative and non-increasing"
            )
        gram = basis.T @ basis
        if np.max(np.abs(gram - np.eye(basis.shape[1]))) > 1e-10:
            raise InvalidInputError("basis columns are not orthonormal")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "basis", basis)
        object.__setattr__(self, "singular_values", sv)

    @property
    def n_states(self) -> int:
        return self.basis.shape[0]

    @property
    def n_modes(self) -> int:
        return self.basis.shape[1]


def center(snapshots):
    """Return (mean, centered) for a snapshot matrix.

    Accepts a TrajectoryMatrix or a plain (N, M) array. The mean is the
    column average; each centered column is the snapshot minus the mean.
    """
    states = getattr(snapshots, "states", snapshots)
    states = np.asarray(states, dtype=float)
    if states.ndim != 2 or states.shape[1] < 1:
        raise InvalidInputError("snapshots must form an N x M matrix, M >= 1")
    mean = states.mean(axis=1)
    return mean, states - mean[:, None]


def fix_column_signs(mat):
    """Flip column signs so the largest-magnitude entry of each is positive.

    SVD signs are arbitrary; fixing them makes artifacts reproducible
    byte-for-byte across runs.
    """
    mat = np.array(mat, dtype=float)
    for j in range(mat.shape[1]):
        col = mat[:, j]
        if col[np.argmax(np.abs(col))] < 0.0:
            mat[:, j] = -col
    return mat


def compute_pod(centered, m, mean=None) -> PodBasis:
    """Thin SVD of the centered snapshot matrix, truncated to m modes.

    ``mean`` (default zero) is stored on the returned basis so callers
    composing `center` and `compute_pod` keep the two together. Raises
    RankDeficiencyError when m exceeds the numerical rank, reporting how
    many modes the data supports.
    """
    centered = np.asarray(centered, dtype=float)
    if centered.ndim != 2:
        raise InvalidInputError("centered data must be an N x M matrix")
    n, n_snap = centered.shape
    if not 1 <= m <= min(n, n_snap):
        raise InvalidInputError(
            f"m={m} outside the valid range [1, {min(n, n_snap)}]"
        )
    u, sv, _ = np.linalg.svd(centered, full_matrices=False)
    usable = int(np.count_nonzero(sv >= _RANK_RTOL * sv[0])) if sv[0] > 0 else 0
    if m > usable:
        raise RankDeficiencyError(
            f"requested m={m} modes but the data has numerical rank {usable}",
            usable_rank=usable,
        )
    if mean is None:
        mean = np.zeros(n)
    return PodBasis(mean=mean, basis=fix_column_signs(u[:, :m]), singular_values=sv)


def best_fit(basis: PodBasis, u):
    """Orthogonal projection of ``u`` onto the reduced subspace.

    ``u`` is a mean-removed state by caller convention; the result is
    the closest subspace element in the Euclidean norm, and projecting
    twice changes nothing.
    """
    u = np.asarray(u, dtype=float)
    if u.shape != (basis.n_states,):
        raise InvalidInputError(
            f"state has shape {u.shape}, expected ({basis.n_states},)"
        )
    phi = basis.basis
    return phi @ (phi.T @ u)


def truncation_error(basis: PodBasis, u) -> float:
    """Euclidean distance from ``u`` to its projection onto the basis.

    Non-increasing in the number of modes for nested bases of the same
    data.
    """
    u = np.asarray(u, dtype=float)
    return float(np.linalg.norm(best_fit(basis, u) - u))
