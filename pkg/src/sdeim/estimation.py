"""Estimator operators and state reconstruction from sparse observations.

Given an orthonormal basis and a sensor set with fewer sensors than
modes, the reconstruction splits into a closed-form part driven by the
current observation and a kernel part living in the null space of the
sensor-row submatrix. The kernel coordinates are free parameters: any
choice reproduces the observations exactly, and the optimal choice
(computable only from the true state) recovers the component of the
state that the sensors cannot see.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    AssumptionViolationError,
    DegenerateInputError,
    InvalidInputError,
    RegimeError,
)
from .placement import SensorSet
from .pod import PodBasis, fix_column_signs

# Full-row-rank threshold on the smallest singular value of theta.
_RANK_ATOL = 1e-10

# Below this conditioning, fall back from the normal-equations right
# inverse to an SVD pseudo-inverse.
_NORMAL_EQ_RTOL = 1e-6


@dataclass(frozen=True)
class Observation:
    """Sensor values at one instant: y = selected state entries + noise."""

    values: np.ndarray
    time: float = 0.0

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.ndim != 1:
            raise InvalidInputError("observation values must form a vector")
        object.__setattr__(self, "values", values)

    @property
    def r(self) -> int:
        return self.values.size


@dataclass(frozen=True)
class EstimatorModel:
    """Everything needed to evaluate reconstructions.

    theta is the r x m sensor-row submatrix of the basis, theta_pinv its
    right inverse, and kernel_basis an orthonormal basis of the null
    space of theta (m x (m-r) columns).
    """

    basis: PodBasis
    sensors: SensorSet
    theta: np.ndarray
    theta_pinv: np.ndarray
    kernel_basis: np.ndarray

    @property
    def n_sensors(self) -> int:
        return self.sensors.r

    @property
    def n_modes(self) -> int:
        return self.basis.n_modes

    @property
    def n_kernel(self) -> int:
        return self.kernel_basis.shape[1]

    @property
    def mean(self) -> np.ndarray:
        return self.basis.mean


def build_estimator(basis: PodBasis, sensors: SensorSet) -> EstimatorModel:
    """Form theta, its right inverse, and the null-space basis.

    Requires the underdetermined regime r < m; with r >= m the null
    space is trivial and the closed-form reconstruction with zero kernel
    vector is the only estimator, so a RegimeError directs the caller
    there. Raises AssumptionViolationError when the sensor rows lose
    full row rank.
    """
    r, m = sensors.r, basis.n_modes
    if np.any(sensors.indices >= basis.n_states):
        raise InvalidInputError("sensor index outside the state dimension")
    if r >= m:
        raise RegimeError(
            f"r={r} >= m={m}: the null space is trivial; use the "
            "closed-form reconstruction with a zero kernel vector"
        )
    theta = basis.basis[sensors.indices, :]
    _, sigma, vt = np.linalg.svd(theta, full_matrices=True)
    if sigma[-1] < _RANK_ATOL:
        raise AssumptionViolationError(
            f"theta is rank deficient (sigma_min={sigma[-1]:.3e}) for "
            f"m={m}, r={r}; the selected sensors cannot support this basis"
        )
    if sigma[-1] >= _NORMAL_EQ_RTOL * sigma[0]:
        # Right inverse theta^T (theta theta^T)^{-1}; the Gram matrix is
        # well conditioned here.
        theta_pinv = np.linalg.solve(theta @ theta.T, theta).T
    else:
        theta_pinv = np.linalg.pinv(theta)
    kernel_basis = fix_column_signs(vt[r:, :].T)
    return EstimatorModel(
        basis=basis,
        sensors=sensors,
        theta=theta,
        theta_pinv=theta_pinv,
        kernel_basis=kernel_basis,
    )


def observe(u, sensors: SensorSet, noise_scale, rng_seed=None, time=0.0) -> Observation:
    """Sample the state at the sensor indices with Gaussian noise.

    ``noise_scale`` is the per-sensor noise standard deviation (scalar
    or length-r vector); zero gives exact sampling. Deterministic in
    ``rng_seed``.
    """
    u = np.asarray(u, dtype=float)
    scale = np.broadcast_to(np.asarray(noise_scale, dtype=float), (sensors.r,))
    if np.any(scale < 0.0):
        raise InvalidInputError("noise scales must be non-negative")
    if np.any(sensors.indices >= u.size):
        raise InvalidInputError("sensor index outside the state dimension")
    values = u[sensors.indices].copy()
    if np.any(scale > 0.0):
        rng = np.random.default_rng(rng_seed)
        values = values + rng.normal(0.0, scale)
    return Observation(values=values, time=time)


def observe_series(states, sensors: SensorSet, noise_scale, rng_seed=None):
    """Observations for every column of an (N, M) state matrix.

    Returns an (r, M) array; one Gaussian draw per sensor per snapshot
    from a single generator, so the whole series is deterministic in the
    seed.
    """
    states = np.asarray(states, dtype=float)
    if states.ndim != 2:
        raise InvalidInputError("states must be an N x M matrix")
    scale = np.broadcast_to(np.asarray(noise_scale, dtype=float), (sensors.r,))
    if np.any(scale < 0.0):
        raise InvalidInputError("noise scales must be non-negative")
    values = states[sensors.indices, :].copy()
    if np.any(scale > 0.0):
        rng = np.random.default_rng(rng_seed)
        values += scale[:, None] * rng.standard_normal(values.shape)
    return values


def _obs_vector(y, r):
    values = y.values if isinstance(y, Observation) else np.asarray(y, dtype=float)
    if values.shape != (r,):
        raise InvalidInputError(
            f"observation has shape {values.shape}, expected ({r},)"
        )
    return values


def qdeim_estimate(model: EstimatorModel, y):
    """Closed-form reconstruction with the trivial (zero) kernel vector."""
    values = _obs_vector(y, model.n_sensors)
    return model.mean + model.basis.basis @ (model.theta_pinv @ values)


def sdeim_estimate(model: EstimatorModel, y, xi):
    """Reconstruction with kernel coordinates ``xi`` added.

    For any ``xi`` the sensor entries of the (mean-removed) result equal
    the observation vector exactly, so the kernel term only moves the
    estimate inside the set of observation-consistent states.
    """
    values = _obs_vector(y, model.n_sensors)
    xi = np.asarray(xi, dtype=float)
    if xi.shape != (model.n_kernel,):
        raise InvalidInputError(
            f"kernel coordinates have shape {xi.shape}, "
            f"expected ({model.n_kernel},)"
        )
    coords = model.theta_pinv @ values + model.kernel_basis @ xi
    return model.mean + model.basis.basis @ coords


def optimal_kernel_coords(model: EstimatorModel, u_true):
    """Kernel coordinates minimizing the distance to the true state.

    ``u_true`` must be mean-removed. Not computable in deployment (it
    needs the full state); used to generate training targets and oracle
    baselines.
    """
    u_true = np.asarray(u_true, dtype=float)
    if u_true.shape != (model.basis.n_states,):
        raise InvalidInputError(
            f"state has shape {u_true.shape}, expected ({model.basis.n_states},)"
        )
    return model.kernel_basis.T @ (model.basis.basis.T @ u_true)


def relative_error(u_est, u_true, mean) -> float:
    """||estimate - truth|| / ||truth - mean||.

    The mean cancels in the numerator, so it is removed from the
    denominator as well to avoid misleadingly small values.
    """
    u_est = np.asarray(u_est, dtype=float)
    u_true = np.asarray(u_true, dtype=float)
    mean = np.asarray(mean, dtype=float)
    denom = np.linalg.norm(u_true - mean)
    if denom < 1e-14:
        raise DegenerateInputError(
            "true state equals the mean; relative error is undefined"
        )
    return float(np.linalg.norm(u_est - u_true) / denom)


def observation_error(u_est, y, sensors: SensorSet, mean) -> float:
    """Diagnostic: distance between the estimate's sensor entries and y."""
    u_est = np.asarray(u_est, dtype=float)
    mean = np.asarray(mean, dtype=float)
    values = _obs_vector(y, sensors.r)
    return float(np.linalg.norm((u_est - mean)[sensors.indices] - values))
