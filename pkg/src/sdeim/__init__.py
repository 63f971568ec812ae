"""Sparse-sensor state estimation with a learned kernel correction.

The package covers the full workflow: chaotic-system snapshot
generation, mean-removed basis extraction, sensor placement by
column-pivoted QR, an echo-state readout that predicts the kernel
coordinates the sensors cannot see, and full-state reconstruction with
quantified per-snapshot errors.
"""

__version__ = "0.1.0"

from .dynamics import (
    KS,
    LORENZ96,
    SystemConfig,
    TrajectoryMatrix,
    integrate,
    integrate_ks,
    integrate_lorenz96,
    lorenz96_rhs,
    random_initial_condition,
)
from .errors import (
    AssumptionViolationError,
    ConfigError,
    DegenerateInputError,
    DivergenceError,
    InvalidInputError,
    NumericalConsistencyError,
    RankDeficiencyError,
    RegimeError,
    ReservoirInitError,
    SdeimError,
    SnapshotFormatError,
    StaleArtifactError,
    UntrainedNetworkError,
)
from .estimation import (
    EstimatorModel,
    Observation,
    build_estimator,
    observation_error,
    observe,
    observe_series,
    optimal_kernel_coords,
    qdeim_estimate,
    relative_error,
    sdeim_estimate,
)
from .pipeline import (
    Artifacts,
    ExperimentConfig,
    Horizons,
    ReservoirConfig,
    RunReport,
    Seeds,
    load_artifacts,
    run_estimate,
    run_offline,
    save_artifacts,
    sensor_sweep,
)
from .placement import (
    CpqrFactorization,
    SensorSet,
    cpqr,
    estimation_bound,
    select_sensors,
)
from .pod import PodBasis, best_fit, center, compute_pod, truncation_error
from .presets import ks_config, lorenz96_config
from .reservoir import (
    ReservoirNet,
    ReservoirState,
    collect_states,
    init_reservoir,
    predict_stream,
    train_output,
    update_state,
    zero_state,
)
from .snapshots import ingest_snapshots, save_trajectory, write_snapshots

__all__ = [
    "KS",
    "LORENZ96",
    "Artifacts",
    "AssumptionViolationError",
    "ConfigError",
    "CpqrFactorization",
    "DegenerateInputError",
    "DivergenceError",
    "EstimatorModel",
    "ExperimentConfig",
    "Horizons",
    "InvalidInputError",
    "NumericalConsistencyError",
    "Observation",
    "PodBasis",
    "RankDeficiencyError",
    "RegimeError",
    "ReservoirConfig",
    "ReservoirInitError",
    "ReservoirNet",
    "ReservoirState",
    "RunReport",
    "SdeimError",
    "Seeds",
    "SensorSet",
    "SnapshotFormatError",
    "StaleArtifactError",
    "SystemConfig",
    "TrajectoryMatrix",
    "UntrainedNetworkError",
    "best_fit",
    "build_estimator",
    "center",
    "collect_states",
    "compute_pod",
    "cpqr",
    "estimation_bound",
    "ingest_snapshots",
    "init_reservoir",
    "integrate",
    "integrate_ks",
    "integrate_lorenz96",
    "ks_config",
    "load_artifacts",
    "lorenz96_config",
    "lorenz96_rhs",
    "observation_error",
    "observe",
    "observe_series",
    "optimal_kernel_coords",
    "predict_stream",
    "qdeim_estimate",
    "random_initial_condition",
    "relative_error",
    "run_estimate",
    "run_offline",
    "save_artifacts",
    "save_trajectory",
    "sdeim_estimate",
    "select_sensors",
    "sensor_sweep",
    "train_output",
    "truncation_error",
    "update_state",
    "write_snapshots",
    "zero_state",
]
