"""Offline/online experiment pipeline with persisted, reproducible artifacts.

The offline stage integrates one trajectory for the basis and sensor
selection and a second one for readout training; the online stage
estimates states along a third, noisily observed trajectory and reports
per-snapshot relative errors for the best-fit, closed-form, and
kernel-augmented reconstructions. Everything is a pure function of the
configuration (all randomness is seeded), and artifacts embed a
fingerprint of the configuration fields that shaped them.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
import scipy.sparse as sparse

from . import dynamics
from .dynamics import SystemConfig, TrajectoryMatrix
from .errors import (
    ConfigError,
    DegenerateInputError,
    InvalidInputError,
    StaleArtifactError,
)
from .estimation import EstimatorModel, build_estimator
from .placement import SensorSet, select_sensors
from .pod import PodBasis, center, compute_pod
from .reservoir import (
    DEFAULT_WASHOUT,
    ReservoirNet,
    collect_states,
    init_reservoir,
    predict_stream,
    train_output,
)
from .snapshots import atomic_write_bytes

_ARTIFACT_FORMAT = 1


@dataclass(frozen=True)
class ReservoirConfig:
    """Hyperparameters of the readout network."""

    size: int = 1000
    density: float = 0.02
    spectral_radius: float = 0.9
    leak_rate: float = 0.5
    ridge_lambda: float = 1e-6
    washout: int = DEFAULT_WASHOUT


@dataclass(frozen=True)
class Horizons:
    """Durations (time units) of the three trajectories."""

    pod: float
    train: float
    test: float


@dataclass(frozen=True)
class Seeds:
    """One seed per independent random draw in the pipeline."""

    pod_traj: int = 11
    train_traj: int = 22
    test_traj: int = 33
    reservoir: int = 44
    noise: int = 55


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything needed to run the three-trajectory protocol."""

    system: SystemConfig
    n_modes: int
    n_sensors: int
    horizons: Horizons
    reservoir: ReservoirConfig = ReservoirConfig()
    seeds: Seeds = Seeds()
    noise_fraction: float = 0.05
    burn_in: float = dynamics.DEFAULT_BURN_IN
    transient_steps: int = 16
    oracle_kernel: bool = False
    output_dir: str | None = None

    def __post_init__(self):
        if not self.n_sensors < self.n_modes <= self.system.n_states:
            raise ConfigError(
                f"need r < m <= N, got r={self.n_sensors}, m={self.n_modes}, "
                f"N={self.system.n_states}"
            )
        if self.noise_fraction < 0.0:
            raise ConfigError("noise fraction must be non-negative")
        dt = self.system.dt_sample
        for name in ("pod", "train", "test"):
            if getattr(self.horizons, name) < dt:
                raise ConfigError(
                    f"{name} horizon shorter than one sampling interval {dt}"
                )
        if self.transient_steps < 0:
            raise ConfigError("transient step count must be non-negative")


def resolved_config(config: ExperimentConfig) -> dict:
    """Plain nested dict of every resolved field, for reports and hashing."""
    return asdict(config)


# Test-time knobs that do not affect the offline artifacts.
_ONLINE_ONLY = {
    "noise_fraction",
    "transient_steps",
    "oracle_kernel",
    "output_dir",
}


def offline_fingerprint(config: ExperimentConfig) -> str:
    """Hash of the configuration fields that shape the offline artifacts.

    Test-time knobs (noise level, test horizon and seeds, oracle flag)
    are excluded so artifacts stay valid across online reruns.
    """
    payload = resolved_config(config)
    for key in _ONLINE_ONLY:
        payload.pop(key, None)
    payload["horizons"].pop("test", None)
    payload["seeds"].pop("test_traj", None)
    payload["seeds"].pop("noise", None)
    canon = json.dumps(payload, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode("ascii")).hexdigest()


@dataclass(frozen=True)
class Artifacts:
    """Output of the offline stage: operators plus the trained readout."""

    basis: PodBasis
    sensors: SensorSet
    model: EstimatorModel
    net: ReservoirNet
    train_std: np.ndarray  # per-sensor std over the training trajectory
    fingerprint: str
    metadata: dict


@dataclass
class RunReport:
    """Per-snapshot relative errors plus summary statistics.

    ``summary`` holds mean/std per method over the full horizon and over
    the post-transient tail (the first ``transient_steps`` snapshots
    excluded).
    """

    times: np.ndarray
    re_bestfit: np.ndarray
    re_qdeim: np.ndarray
    re_sdeim: np.ndarray
    transient_steps: int
    metadata: dict
    summary: dict = field(init=False)

    def __post_init__(self):
        self.summary = {}
        skip = min(self.transient_steps, self.times.size - 1)
        for name in ("bestfit", "qdeim", "sdeim"):
            series = getattr(self, f"re_{name}")
            self.summary[name] = {
                "mean": float(np.mean(series)),
                "std": float(np.std(series)),
                "mean_post_transient": float(np.mean(series[skip:])),
                "std_post_transient": float(np.std(series[skip:])),
            }

    def to_csv(self) -> str:
        lines = ["time,re_bestfit,re_qdeim,re_sdeim"]
        for i in range(self.times.size):
            lines.append(
                f"{float(self.times[i])!r},{float(self.re_bestfit[i])!r},"
                f"{float(self.re_qdeim[i])!r},{float(self.re_sdeim[i])!r}"
            )
        return "\n".join(lines) + "\n"

    def to_json(self) -> str:
        return json.dumps(
            {"summary": self.summary, "metadata": self.metadata},
            sort_keys=True,
            indent=2,
        ) + "\n"

    def write(self, out_dir):
        out_dir = Path(out_dir)
        atomic_write_bytes(out_dir / "report.csv", self.to_csv().encode("ascii"))
        atomic_write_bytes(out_dir / "report.json", self.to_json().encode("ascii"))


def _generate(config: ExperimentConfig, seed, horizon) -> TrajectoryMatrix:
    u0 = dynamics.random_initial_condition(
        config.system, seed=seed, burn_in=config.burn_in
    )
    return dynamics.integrate(config.system, u0, horizon)


def _train_for_sensors(config, basis, sensors, traj_train):
    """Build the estimator and train the readout for one sensor set."""
    model = build_estimator(basis, sensors)
    centered = traj_train.states - basis.mean[:, None]
    y_train = centered[sensors.indices, :]
    targets = model.kernel_basis.T @ (basis.basis.T @ centered)
    train_std = y_train.std(axis=1)

    rc = config.reservoir
    washout = rc.washout
    if washout >= y_train.shape[1]:
        raise ConfigError(
            f"washout {washout} is not smaller than the {y_train.shape[1]} "
            "training snapshots; lengthen the training horizon"
        )
    net = init_reservoir(
        rc.size,
        sensors.r,
        model.n_kernel,
        spectral_radius=rc.spectral_radius,
        density=rc.density,
        leak_rate=rc.leak_rate,
        ridge_lambda=rc.ridge_lambda,
        seed=config.seeds.reservoir,
    )
    states = collect_states(net, y_train, washout=washout)
    net = train_output(net, states, targets[:, washout:])
    return model, net, train_std


def run_offline(config: ExperimentConfig) -> Artifacts:
    """Offline stage: basis, sensors, estimator, trained readout.

    Trajectory 1 feeds the basis and sensor selection; trajectory 2
    provides noiseless observations and kernel-coordinate targets for
    readout training. Artifacts are persisted when ``output_dir`` is
    set.
    """
    traj_pod = _generate(config, config.seeds.pod_traj, config.horizons.pod)
    mean, centered = center(traj_pod)
    basis = compute_pod(centered, config.n_modes, mean=mean)
    sensors = select_sensors(basis, config.n_sensors)

    traj_train = _generate(config, config.seeds.train_traj, config.horizons.train)
    model, net, train_std = _train_for_sensors(config, basis, sensors, traj_train)

    artifacts = Artifacts(
        basis=basis,
        sensors=sensors,
        model=model,
        net=net,
        train_std=train_std,
        fingerprint=offline_fingerprint(config),
        metadata=resolved_config(config),
    )
    if config.output_dir is not None:
        save_artifacts(artifacts, config.output_dir)
    return artifacts


def _estimate_core(
    model, net, train_std, traj_test,
    noise_fraction, noise_seed, oracle_kernel, transient_steps,
    metadata,
) -> RunReport:
    """Online stage on a given test trajectory."""
    basis = model.basis
    truth = traj_test.states
    centered = truth - basis.mean[:, None]

    scale = noise_fraction * np.asarray(train_std, dtype=float)
    rng = np.random.default_rng(noise_seed)
    y = centered[model.sensors.indices, :].copy()
    if np.any(scale > 0.0):
        y += scale[:, None] * rng.standard_normal(y.shape)

    if oracle_kernel:
        xi = model.kernel_basis.T @ (basis.basis.T @ centered)
    else:
        xi = predict_stream(net, y)

    coords = model.theta_pinv @ y
    qdeim = basis.basis @ coords
    sdeim = basis.basis @ (coords + model.kernel_basis @ xi)
    bestfit = basis.basis @ (basis.basis.T @ centered)

    denom = np.linalg.norm(centered, axis=0)
    if np.any(denom < 1e-14):
        raise DegenerateInputError(
            "a test snapshot equals the training mean; relative error undefined"
        )
    return RunReport(
        times=traj_test.times,
        re_bestfit=np.linalg.norm(bestfit - centered, axis=0) / denom,
        re_qdeim=np.linalg.norm(qdeim - centered, axis=0) / denom,
        re_sdeim=np.linalg.norm(sdeim - centered, axis=0) / denom,
        transient_steps=transient_steps,
        metadata=metadata,
    )


def _config_metadata(config: ExperimentConfig, sensors) -> dict:
    return {
        "config": resolved_config(config),
        "fingerprint": offline_fingerprint(config),
        "sensors": [int(i) for i in sensors.indices],
    }


def _estimate_with_config(config, model, net, train_std, traj_test) -> RunReport:
    return _estimate_core(
        model,
        net,
        train_std,
        traj_test,
        noise_fraction=config.noise_fraction,
        noise_seed=config.seeds.noise,
        oracle_kernel=config.oracle_kernel,
        transient_steps=config.transient_steps,
        metadata=_config_metadata(config, model.sensors),
    )


def run_estimate(config: ExperimentConfig, artifacts: Artifacts) -> RunReport:
    """Online stage: estimate along a fresh noisily observed trajectory.

    The artifacts must carry the fingerprint of this configuration's
    offline fields; otherwise they are stale and the run is refused.
    """
    expected = offline_fingerprint(config)
    if artifacts.fingerprint != expected:
        raise StaleArtifactError(
            f"artifacts were built from fingerprint {artifacts.fingerprint[:12]}..., "
            f"this configuration needs {expected[:12]}..."
        )
    traj_test = _generate(config, config.seeds.test_traj, config.horizons.test)
    report = _estimate_with_config(
        config, artifacts.model, artifacts.net, artifacts.train_std, traj_test
    )
    if config.output_dir is not None:
        report.write(config.output_dir)
    return report


def sensor_sweep(config: ExperimentConfig, r_values) -> list[dict]:
    """Repeat placement, training, and estimation for each sensor count.

    The three trajectories and the basis are computed once and shared;
    each sweep point reselects sensors, retrains the readout, and
    reports mean/std per method. Returns one summary dict per r.
    """
    r_values = [int(r) for r in r_values]
    for r in r_values:
        if not 1 <= r < config.n_modes:
            raise ConfigError(
                f"sweep sensor count r={r} must satisfy 1 <= r < m={config.n_modes}"
            )
    traj_pod = _generate(config, config.seeds.pod_traj, config.horizons.pod)
    mean, centered = center(traj_pod)
    basis = compute_pod(centered, config.n_modes, mean=mean)
    traj_train = _generate(config, config.seeds.train_traj, config.horizons.train)
    traj_test = _generate(config, config.seeds.test_traj, config.horizons.test)

    rows = []
    for r in r_values:
        sensors = select_sensors(basis, r)
        model, net, train_std = _train_for_sensors(
            config, basis, sensors, traj_train
        )
        report = _estimate_with_config(config, model, net, train_std, traj_test)
        row = {"r": r}
        for name in ("bestfit", "qdeim", "sdeim"):
            row.update(
                {f"{name}_{k}": v for k, v in report.summary[name].items()}
            )
        rows.append(row)

    if config.output_dir is not None:
        write_sweep(rows, config, config.output_dir)
    return rows


def write_sweep(rows, config, out_dir):
    out_dir = Path(out_dir)
    cols = list(rows[0].keys())
    lines = [",".join(cols)]
    for row in rows:
        lines.append(
            ",".join(
                str(row[c]) if c == "r" else repr(float(row[c])) for c in cols
            )
        )
    atomic_write_bytes(out_dir / "sweep.csv", ("\n".join(lines) + "\n").encode())
    sidecar = json.dumps(
        {"rows": rows, "config": resolved_config(config)}, sort_keys=True, indent=2
    )
    atomic_write_bytes(out_dir / "sweep.json", (sidecar + "\n").encode())


# --- artifact persistence -------------------------------------------------

def _npy_bytes(arr) -> bytes:
    import io

    buf = io.BytesIO()
    np.save(buf, np.ascontiguousarray(arr))
    return buf.getvalue()


def save_artifacts(artifacts: Artifacts, out_dir):
    """Persist the offline artifacts, one array per .npy file plus meta.json.

    Individual .npy files (instead of a zip archive) keep reruns
    byte-identical: zip entries would embed timestamps.
    """
    out_dir = Path(out_dir)
    net = artifacts.net
    if net.w_out is None:
        raise InvalidInputError("artifacts require a trained readout")
    arrays = {
        "mean": artifacts.basis.mean,
        "basis": artifacts.basis.basis,
        "singular_values": artifacts.basis.singular_values,
        "sensors": artifacts.sensors.indices,
        "train_std": artifacts.train_std,
        "w_in": net.w_in,
        "w_res_data": net.w_res.data,
        "w_res_indices": net.w_res.indices,
        "w_res_indptr": net.w_res.indptr,
        "bias": net.bias,
        "w_out": net.w_out,
    }
    for name, arr in arrays.items():
        atomic_write_bytes(out_dir / f"{name}.npy", _npy_bytes(arr))
    meta = {
        "format": _ARTIFACT_FORMAT,
        "fingerprint": artifacts.fingerprint,
        "metadata": artifacts.metadata,
        "reservoir": {
            "leak_rate": net.leak_rate,
            "spectral_radius": net.spectral_radius,
            "ridge_lambda": net.ridge_lambda,
            "seed": net.seed,
            "n_outputs": net.n_outputs,
        },
    }
    atomic_write_bytes(
        out_dir / "meta.json",
        (json.dumps(meta, sort_keys=True, indent=2) + "\n").encode("ascii"),
    )


def load_artifacts(in_dir) -> Artifacts:
    """Load artifacts written by save_artifacts.

    The estimator operators are rebuilt from the stored basis and
    sensors (deterministic), which guarantees internal consistency.
    """
    in_dir = Path(in_dir)
    meta_path = in_dir / "meta.json"
    if not meta_path.exists():
        raise StaleArtifactError(f"no artifacts found under {in_dir}")
    meta = json.loads(meta_path.read_text())
    if meta.get("format") != _ARTIFACT_FORMAT:
        raise StaleArtifactError(
            f"artifact format {meta.get('format')} not supported"
        )

    def load(name):
        return np.load(in_dir / f"{name}.npy")

    basis = PodBasis(
        mean=load("mean"),
        basis=load("basis"),
        singular_values=load("singular_values"),
    )
    sensors = SensorSet(indices=load("sensors"))
    model = build_estimator(basis, sensors)
    k = load("bias").size
    rc = meta["reservoir"]
    w_res = sparse.csr_matrix(
        (load("w_res_data"), load("w_res_indices"), load("w_res_indptr")),
        shape=(k, k),
    )
    net = ReservoirNet(
        w_in=load("w_in"),
        w_res=w_res,
        bias=load("bias"),
        leak_rate=rc["leak_rate"],
        spectral_radius=rc["spectral_radius"],
        ridge_lambda=rc["ridge_lambda"],
        seed=rc["seed"],
        n_outputs=rc["n_outputs"],
        w_out=load("w_out"),
    )
    return Artifacts(
        basis=basis,
        sensors=sensors,
        model=model,
        net=net,
        train_std=load("train_std"),
        fingerprint=meta["fingerprint"],
        metadata=meta["metadata"],
    )
