"""Echo-state network mapping observation streams to kernel coordinates.

The input, reservoir, and bias weights are drawn once at random and
frozen; only the linear readout is trained, by ridge regression with a
closed-form solution. Driving the leaky-tanh state with an observation
time series synchronizes it with the underlying dynamics, which is what
lets a linear readout recover the unobserved kernel coordinates.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
import scipy.linalg
import scipy.sparse as sparse

from .errors import (
    InvalidInputError,
    NumericalConsistencyError,
    ReservoirInitError,
    UntrainedNetworkError,
)
from .estimation import Observation

#: Default training washout: reservoir states discarded while the state
#: synchronizes with the input before the readout is fit.
DEFAULT_WASHOUT = 100

_POWER_ITERATIONS = 200
_POWER_TOL = 1e-6


@dataclass(frozen=True)
class ReservoirNet:
    """Fixed random weights plus an optional trained readout.

    The reservoir matrix is rescaled at construction so its spectral
    radius does not exceed ``spectral_radius`` (< 1, the usual
    echo-state heuristic). ``w_out`` stays None until trained.
    """

    w_in: np.ndarray            # (K, r)
    w_res: sparse.csr_matrix    # (K, K)
    bias: np.ndarray            # (K,)
    leak_rate: float
    spectral_radius: float
    ridge_lambda: float
    seed: int
    n_outputs: int
    w_out: np.ndarray | None = None

    @property
    def size(self) -> int:
        return self.bias.size

    @property
    def n_inputs(self) -> int:
        return self.w_in.shape[1]

    @property
    def trained(self) -> bool:
        return self.w_out is not None


@dataclass(frozen=True)
class ReservoirState:
    """Reservoir activation vector plus the number of updates applied."""

    values: np.ndarray
    step_count: int = 0


def zero_state(net: ReservoirNet) -> ReservoirState:
    return ReservoirState(values=np.zeros(net.size), step_count=0)


def _abs_radius(w_res) -> float:
    """Perron root of |W| by power iteration (upper bound on the spectral
    radius of W itself, so rescaling by it keeps the echo-state heuristic
    safe)."""
    w_abs = sparse.csr_matrix(
        (np.abs(w_res.data), w_res.indices, w_res.indptr), shape=w_res.shape
    )
    v = np.full(w_res.shape[0], 1.0 / np.sqrt(w_res.shape[0]))
    lam = 0.0
    for _ in range(_POWER_ITERATIONS):
        w = w_abs @ v
        new_lam = np.linalg.norm(w)
        if new_lam == 0.0:
            return 0.0
        v = w / new_lam
        if abs(new_lam - lam) <= _POWER_TOL * new_lam:
            return float(new_lam)
        lam = new_lam
    return float(lam)


def init_reservoir(
    size,
    n_inputs,
    n_outputs,
    spectral_radius=0.9,
    density=0.02,
    leak_rate=0.5,
    ridge_lambda=1e-6,
    seed=0,
) -> ReservoirNet:
    """Draw the fixed random weights, deterministically in the seed.

    Input weights and biases are i.i.d. U([-0.5, 0.5]) and never
    rescaled; the sparse reservoir matrix has the given nonzero density
    with U([-0.5, 0.5]) entries and is rescaled to the target spectral
    radius. The reservoir must comfortably dominate the input/output
    dimensions (at least 10x).
    """
    if not 0.0 < spectral_radius < 1.0:
        raise InvalidInputError("spectral radius must lie in (0, 1)")
    if not 0.0 < density <= 1.0:
        raise InvalidInputError("density must lie in (0, 1]")
    if not 0.0 < leak_rate <= 1.0:
        raise InvalidInputError("leak rate must lie in (0, 1]")
    if ridge_lambda <= 0.0:
        raise InvalidInputError("ridge parameter must be positive")
    if n_inputs < 1 or n_outputs < 1:
        raise InvalidInputError("need at least one input and one output")
    needed = 10 * max(n_inputs, n_inputs + n_outputs)
    if size < needed:
        raise ReservoirInitError(
            f"reservoir size {size} too small; need at least {needed} "
            f"(10x the larger of input and total mode dimensions)"
        )

    rng = np.random.default_rng(seed)
    w_in = rng.uniform(-0.5, 0.5, (size, n_inputs))
    bias = rng.uniform(-0.5, 0.5, size)
    w_res = sparse.random(
        size,
        size,
        density=density,
        format="csr",
        random_state=rng,
        data_rvs=lambda k: rng.uniform(-0.5, 0.5, k),
    )
    radius = _abs_radius(w_res)
    if radius <= 0.0:
        raise ReservoirInitError(
            f"reservoir matrix has zero spectral radius at density {density}; "
            "increase the density or size"
        )
    w_res = sparse.csr_matrix(w_res * (spectral_radius / radius))
    return ReservoirNet(
        w_in=w_in,
        w_res=w_res,
        bias=bias,
        leak_rate=leak_rate,
        spectral_radius=spectral_radius,
        ridge_lambda=ridge_lambda,
        seed=seed,
        n_outputs=n_outputs,
    )


def _input_values(y, n_inputs):
    values = y.values if isinstance(y, Observation) else np.asarray(y, dtype=float)
    if values.shape != (n_inputs,):
        raise InvalidInputError(
            f"input has shape {values.shape}, expected ({n_inputs},)"
        )
    if not np.all(np.isfinite(values)):
        raise InvalidInputError("input contains non-finite entries")
    return values


def _series_matrix(y_series, n_inputs):
    if isinstance(y_series, np.ndarray) and y_series.ndim == 2:
        mat = np.asarray(y_series, dtype=float)
    else:
        cols = [_input_values(y, n_inputs) for y in y_series]
        mat = np.column_stack(cols) if cols else np.zeros((n_inputs, 0))
    if mat.shape[0] != n_inputs:
        raise InvalidInputError(
            f"series has {mat.shape[0]} rows, expected {n_inputs}"
        )
    if not np.all(np.isfinite(mat)):
        raise InvalidInputError("series contains non-finite entries")
    return mat


def update_state(net: ReservoirNet, state: ReservoirState, y) -> ReservoirState:
    """One leaky-tanh update driven by an observation.

    new = (1 - alpha) * old + alpha * tanh(W_res old + W_in y + bias).
    """
    values = _input_values(y, net.n_inputs)
    pre = net.w_res @ state.values + net.w_in @ values + net.bias
    new = (1.0 - net.leak_rate) * state.values + net.leak_rate * np.tanh(pre)
    return ReservoirState(values=new, step_count=state.step_count + 1)


def _run_states(net, y_matrix, initial=None):
    """March the reservoir over every column; returns a (K, M) matrix."""
    k = net.size
    alpha = net.leak_rate
    state = np.zeros(k) if initial is None else np.asarray(initial, dtype=float)
    out = np.empty((k, y_matrix.shape[1]))
    for i in range(y_matrix.shape[1]):
        pre = net.w_res @ state + net.w_in @ y_matrix[:, i] + net.bias
        state = (1.0 - alpha) * state + alpha * np.tanh(pre)
        out[:, i] = state
    return out


def collect_states(net: ReservoirNet, y_series, washout=0):
    """Drive the reservoir from the zero state and keep post-washout states.

    ``y_series`` is an (r, M) matrix or a sequence of observations; the
    result is K x (M - washout), one column per retained step.
    """
    y_matrix = _series_matrix(y_series, net.n_inputs)
    n_steps = y_matrix.shape[1]
    if not 0 <= washout < n_steps:
        raise InvalidInputError(
            f"washout {washout} must be smaller than the series length {n_steps}"
        )
    return _run_states(net, y_matrix)[:, washout:]


def train_output(net: ReservoirNet, states, targets) -> ReservoirNet:
    """Fit the readout by ridge regression in closed form.

    Solves min_W ||W S - T||_F^2 + lambda ||W||_F^2 via the normal
    equations W = T S^T (S S^T + lambda I)^{-1}, using a Cholesky
    factorization of the (positive definite) regularized Gram matrix.
    Returns a new trained network; the input weights are untouched.
    """
    states = np.asarray(states, dtype=float)
    targets = np.asarray(targets, dtype=float)
    if states.ndim != 2 or states.shape[0] != net.size:
        raise InvalidInputError(
            f"states must be K x M' with K={net.size}, got {states.shape}"
        )
    if targets.shape != (net.n_outputs, states.shape[1]):
        raise InvalidInputError(
            f"targets must have shape ({net.n_outputs}, {states.shape[1]}), "
            f"got {targets.shape}"
        )
    if states.shape[1] < 1:
        raise InvalidInputError("need at least one training column")
    gram = states @ states.T + net.ridge_lambda * np.eye(net.size)
    try:
        factor = scipy.linalg.cho_factor(gram)
        w_out = scipy.linalg.cho_solve(factor, states @ targets.T).T
    except scipy.linalg.LinAlgError as exc:
        raise NumericalConsistencyError(
            f"ridge Gram matrix factorization failed: {exc}"
        ) from exc
    return replace(net, w_out=w_out)


def predict_stream(net: ReservoirNet, y_series):
    """Readout outputs for every step of an observation stream.

    Starts from the zero state and emits one output per observation,
    including the initial synchronization transient; callers decide how
    much of the transient to discount. Returns an (n_outputs, M) array.
    """
    if not net.trained:
        raise UntrainedNetworkError("readout has not been trained yet")
    y_matrix = _series_matrix(y_series, net.n_inputs)
    states = _run_states(net, y_matrix)
    return net.w_out @ states
