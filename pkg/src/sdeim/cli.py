"""Command-line interface.

Two ways of working are supported. `reproduce` and `sweep` run the full
three-trajectory protocol from a built-in benchmark configuration (plus
a config file and/or flag overrides). The staged subcommands `simulate`,
`pod`, `place`, `train`, and `estimate` operate on snapshot files and an
artifacts directory, so externally produced data ingested with `ingest`
can be pushed through the same estimation machinery.

Exit codes: 0 success, 2 configuration/usage errors, 3 numerical
errors, 4 rank-assumption violations.
"""

from __future__ import annotations

import argparse
import configparser
import hashlib
import json
import sys
from pathlib import Path

import numpy as np
import scipy.sparse as sparse

from . import __version__
from .dynamics import (
    KS,
    LORENZ96,
    SystemConfig,
    integrate,
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
from .estimation import build_estimator
from .pipeline import (
    ReservoirConfig,
    _estimate_core,
    run_estimate,
    run_offline,
    sensor_sweep,
)
from .placement import SensorSet, select_sensors
from .pod import PodBasis, center, compute_pod
from .presets import PRESETS
from .reservoir import ReservoirNet, collect_states, init_reservoir, train_output
from .snapshots import atomic_write_bytes, ingest_snapshots, save_trajectory

_CONFIG_EXIT = 2
_NUMERICAL_EXIT = 3
_ASSUMPTION_EXIT = 4

_CONFIG_ERRORS = (
    ConfigError,
    InvalidInputError,
    RegimeError,
    SnapshotFormatError,
    StaleArtifactError,
    UntrainedNetworkError,
    ReservoirInitError,
    FileNotFoundError,
)
_NUMERICAL_ERRORS = (
    DivergenceError,
    NumericalConsistencyError,
    RankDeficiencyError,
    DegenerateInputError,
)


# --- staged artifact store --------------------------------------------------

class StagedStore:
    """Artifacts directory shared by the staged subcommands.

    Each stage records what it ran under ``meta.json``; later stages
    refuse to run when their inputs are missing.
    """

    def __init__(self, root):
        self.root = Path(root)

    def meta(self) -> dict:
        path = self.root / "meta.json"
        if not path.exists():
            return {"format": 1, "stages": {}}
        return json.loads(path.read_text())

    def write_meta(self, meta):
        atomic_write_bytes(
            self.root / "meta.json",
            (json.dumps(meta, sort_keys=True, indent=2) + "\n").encode(),
        )

    def save_array(self, name, arr):
        import io

        buf = io.BytesIO()
        np.save(buf, np.ascontiguousarray(arr))
        atomic_write_bytes(self.root / f"{name}.npy", buf.getvalue())

    def load_array(self, name):
        path = self.root / f"{name}.npy"
        if not path.exists():
            raise StaleArtifactError(f"artifact {name}.npy missing under {self.root}")
        return np.load(path)

    def require_stage(self, stage, hint):
        meta = self.meta()
        if stage not in meta.get("stages", {}):
            raise StaleArtifactError(
                f"no '{stage}' stage recorded under {self.root}; run `{hint}` first"
            )
        return meta

    def load_basis(self) -> PodBasis:
        self.require_stage("pod", "sdeim pod")
        return PodBasis(
            mean=self.load_array("mean"),
            basis=self.load_array("basis"),
            singular_values=self.load_array("singular_values"),
        )

    def load_sensors(self) -> SensorSet:
        self.require_stage("place", "sdeim place")
        return SensorSet(indices=self.load_array("sensors"))

    def load_net(self) -> ReservoirNet:
        meta = self.require_stage("train", "sdeim train")
        rc = meta["stages"]["train"]["reservoir"]
        k = self.load_array("bias").size
        w_res = sparse.csr_matrix(
            (
                self.load_array("w_res_data"),
                self.load_array("w_res_indices"),
                self.load_array("w_res_indptr"),
            ),
            shape=(k, k),
        )
        return ReservoirNet(
            w_in=self.load_array("w_in"),
            w_res=w_res,
            bias=self.load_array("bias"),
            leak_rate=rc["leak_rate"],
            spectral_radius=rc["spectral_radius"],
            ridge_lambda=rc["ridge_lambda"],
            seed=rc["seed"],
            n_outputs=rc["n_outputs"],
            w_out=self.load_array("w_out"),
        )


def _file_sha(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


# --- config-file + flag plumbing ---------------------------------------------

_INT_KEYS = {
    "system.n_states",
    "system.seed",
    "n_modes",
    "n_sensors",
    "transient_steps",
    "reservoir.size",
    "reservoir.washout",
    "seeds.pod_traj",
    "seeds.train_traj",
    "seeds.test_traj",
    "seeds.reservoir",
    "seeds.noise",
}
_FLOAT_KEYS = {
    "system.dt_internal",
    "system.dt_sample",
    "system.forcing",
    "system.domain_length",
    "noise_fraction",
    "burn_in",
    "horizons.pod",
    "horizons.train",
    "horizons.test",
    "reservoir.density",
    "reservoir.spectral_radius",
    "reservoir.leak_rate",
    "reservoir.ridge_lambda",
}
_BOOL_KEYS = {"oracle_kernel"}

_SECTION_MAP = {
    ("system", "tag"): None,  # handled separately: selects the preset
    ("system", "n"): "system.n_states",
    ("system", "forcing"): "system.forcing",
    ("system", "domain_length"): "system.domain_length",
    ("system", "dt_internal"): "system.dt_internal",
    ("system", "dt_sample"): "system.dt_sample",
    ("experiment", "modes"): "n_modes",
    ("experiment", "sensors"): "n_sensors",
    ("experiment", "noise_fraction"): "noise_fraction",
    ("experiment", "pod_horizon"): "horizons.pod",
    ("experiment", "train_horizon"): "horizons.train",
    ("experiment", "test_horizon"): "horizons.test",
    ("experiment", "burn_in"): "burn_in",
    ("experiment", "transient_steps"): "transient_steps",
    ("experiment", "oracle_kernel"): "oracle_kernel",
    ("reservoir", "size"): "reservoir.size",
    ("reservoir", "density"): "reservoir.density",
    ("reservoir", "spectral_radius"): "reservoir.spectral_radius",
    ("reservoir", "leak_rate"): "reservoir.leak_rate",
    ("reservoir", "ridge_lambda"): "reservoir.ridge_lambda",
    ("reservoir", "washout"): "reservoir.washout",
    ("seeds", "pod_traj"): "seeds.pod_traj",
    ("seeds", "train_traj"): "seeds.train_traj",
    ("seeds", "test_traj"): "seeds.test_traj",
    ("seeds", "reservoir"): "seeds.reservoir",
    ("seeds", "noise"): "seeds.noise",
    ("output", "dir"): "output_dir",
}


def _coerce(key, text):
    if key in _INT_KEYS:
        return int(text)
    if key in _FLOAT_KEYS:
        return float(text)
    if key in _BOOL_KEYS:
        lowered = text.strip().lower()
        if lowered in ("1", "true", "yes", "on"):
            return True
        if lowered in ("0", "false", "no", "off"):
            return False
        raise ConfigError(f"cannot parse boolean {text!r} for {key}")
    return text


def read_config_file(path):
    """Parse the INI-style config file into (system_tag, overrides)."""
    parser = configparser.ConfigParser()
    read = parser.read(path)
    if not read:
        raise ConfigError(f"config file not found: {path}")
    tag = None
    overrides = {}
    for section in parser.sections():
        for option, text in parser.items(section):
            if (section, option) == ("system", "tag"):
                tag = text.strip().lower()
                continue
            key = _SECTION_MAP.get((section, option))
            if key is None:
                raise ConfigError(f"unknown config entry [{section}] {option}")
            try:
                overrides[key] = _coerce(key, text)
            except ValueError as exc:
                raise ConfigError(
                    f"bad value for [{section}] {option}: {exc}"
                ) from exc
    return tag, overrides


def _add_experiment_flags(sub):
    sub.add_argument("--config", help="INI config file; flags override it")
    sub.add_argument("--modes", type=int, dest="n_modes")
    sub.add_argument("--sensors", type=int, dest="n_sensors")
    sub.add_argument("--noise-fraction", type=float, dest="noise_fraction")
    sub.add_argument("--pod-horizon", type=float, dest="horizons.pod")
    sub.add_argument("--train-horizon", type=float, dest="horizons.train")
    sub.add_argument("--test-horizon", type=float, dest="horizons.test")
    sub.add_argument("--burn-in", type=float, dest="burn_in")
    sub.add_argument("--transient-steps", type=int, dest="transient_steps")
    sub.add_argument(
        "--oracle-kernel",
        action="store_const",
        const=True,
        dest="oracle_kernel",
        help="diagnostic: use the optimal kernel coordinates instead of the "
        "trained readout",
    )
    sub.add_argument("--dt-internal", type=float, dest="system.dt_internal")
    sub.add_argument("--dt-sample", type=float, dest="system.dt_sample")
    sub.add_argument("--reservoir-size", type=int, dest="reservoir.size")
    sub.add_argument("--density", type=float, dest="reservoir.density")
    sub.add_argument("--spectral-radius", type=float, dest="reservoir.spectral_radius")
    sub.add_argument("--leak-rate", type=float, dest="reservoir.leak_rate")
    sub.add_argument("--ridge-lambda", type=float, dest="reservoir.ridge_lambda")
    sub.add_argument("--washout", type=int, dest="reservoir.washout")
    sub.add_argument("--seed-pod-traj", type=int, dest="seeds.pod_traj")
    sub.add_argument("--seed-train-traj", type=int, dest="seeds.train_traj")
    sub.add_argument("--seed-test-traj", type=int, dest="seeds.test_traj")
    sub.add_argument("--seed-reservoir", type=int, dest="seeds.reservoir")
    sub.add_argument("--seed-noise", type=int, dest="seeds.noise")


def _experiment_config(args, default_tag=None):
    """Assemble an ExperimentConfig from preset + config file + flags."""
    file_tag, file_overrides = (None, {})
    if getattr(args, "config", None):
        file_tag, file_overrides = read_config_file(args.config)
    tag = getattr(args, "preset", None) or file_tag or default_tag
    if tag not in PRESETS:
        raise ConfigError(
            f"system tag {tag!r} is not runnable here; expected one of "
            f"{sorted(PRESETS)} (external data goes through the staged "
            "subcommands)"
        )
    flag_overrides = {
        key: getattr(args, key)
        for key in vars(args)
        if ("." in key or key in (
            "n_modes", "n_sensors", "noise_fraction", "burn_in",
            "transient_steps", "oracle_kernel", "output_dir",
        ))
        and getattr(args, key) is not None
    }
    overrides = {**file_overrides, **flag_overrides}
    if getattr(args, "out", None):
        overrides["output_dir"] = args.out
    return PRESETS[tag](**overrides)


# --- subcommands --------------------------------------------------------------

def _cmd_simulate(args):
    if args.system == LORENZ96:
        cfg = SystemConfig(
            system_tag=LORENZ96,
            n_states=args.n,
            dt_internal=args.dt_internal if args.dt_internal else 0.01,
            dt_sample=args.dt_sample,
            forcing=args.forcing,
        )
    elif args.system == KS:
        cfg = SystemConfig(
            system_tag=KS,
            n_states=args.n,
            dt_internal=args.dt_internal if args.dt_internal else 0.05,
            dt_sample=args.dt_sample,
            domain_length=args.domain_length,
        )
    else:
        raise ConfigError(f"unknown system {args.system!r}")
    u0 = random_initial_condition(cfg, seed=args.seed, burn_in=args.burn_in)
    traj = integrate(cfg, u0, args.horizon)
    save_trajectory(traj, args.out)
    print(
        f"wrote {traj.n_states} x {traj.n_snapshots} snapshots "
        f"(dt={traj.dt_sample}) to {args.out}"
    )
    return 0


def _cmd_pod(args):
    traj = ingest_snapshots(args.snapshots)
    mean, centered = center(traj)
    basis = compute_pod(centered, args.modes, mean=mean)
    store = StagedStore(args.artifacts)
    store.save_array("mean", basis.mean)
    store.save_array("basis", basis.basis)
    store.save_array("singular_values", basis.singular_values)
    meta = store.meta()
    meta["stages"] = {
        "pod": {
            "snapshots_sha256": _file_sha(args.snapshots),
            "n_modes": args.modes,
            "n_states": basis.n_states,
            "n_snapshots": traj.n_snapshots,
        }
    }
    store.write_meta(meta)
    energy = basis.singular_values[: args.modes] ** 2
    total = basis.singular_values**2
    print(
        f"basis with {args.modes} modes over {traj.n_snapshots} snapshots; "
        f"captured energy {energy.sum() / total.sum():.4f}"
    )
    return 0


def _cmd_place(args):
    store = StagedStore(args.artifacts)
    basis = store.load_basis()
    sensors = select_sensors(basis, args.sensors)
    # Surfaces rank problems now rather than at estimation time.
    build_estimator(basis, sensors)
    store.save_array("sensors", sensors.indices)
    meta = store.meta()
    meta["stages"]["place"] = {"n_sensors": args.sensors}
    meta["stages"].pop("train", None)
    store.write_meta(meta)
    print(f"sensors (pivot order): {[int(i) for i in sensors.indices]}")
    return 0


def _cmd_train(args):
    store = StagedStore(args.artifacts)
    basis = store.load_basis()
    sensors = store.load_sensors()
    model = build_estimator(basis, sensors)
    traj = ingest_snapshots(args.snapshots)
    if traj.n_states != basis.n_states:
        raise ConfigError(
            f"training snapshots have {traj.n_states} states, basis has "
            f"{basis.n_states}"
        )
    centered = traj.states - basis.mean[:, None]
    y_train = centered[sensors.indices, :]
    targets = model.kernel_basis.T @ (basis.basis.T @ centered)
    washout = args.washout if args.washout is not None else ReservoirConfig().washout
    if washout >= y_train.shape[1]:
        raise ConfigError(
            f"washout {washout} >= {y_train.shape[1]} training snapshots"
        )
    defaults = ReservoirConfig()
    net = init_reservoir(
        args.reservoir_size or defaults.size,
        sensors.r,
        model.n_kernel,
        spectral_radius=args.spectral_radius or defaults.spectral_radius,
        density=args.density or defaults.density,
        leak_rate=args.leak_rate or defaults.leak_rate,
        ridge_lambda=args.ridge_lambda or defaults.ridge_lambda,
        seed=args.seed_reservoir,
    )
    states = collect_states(net, y_train, washout=washout)
    net = train_output(net, states, targets[:, washout:])

    store.save_array("train_std", y_train.std(axis=1))
    store.save_array("w_in", net.w_in)
    store.save_array("w_res_data", net.w_res.data)
    store.save_array("w_res_indices", net.w_res.indices)
    store.save_array("w_res_indptr", net.w_res.indptr)
    store.save_array("bias", net.bias)
    store.save_array("w_out", net.w_out)
    meta = store.meta()
    meta["stages"]["train"] = {
        "snapshots_sha256": _file_sha(args.snapshots),
        "washout": washout,
        "reservoir": {
            "leak_rate": net.leak_rate,
            "spectral_radius": net.spectral_radius,
            "ridge_lambda": net.ridge_lambda,
            "seed": net.seed,
            "n_outputs": net.n_outputs,
        },
    }
    store.write_meta(meta)
    residual = float(np.sqrt(np.mean((net.w_out @ states - targets[:, washout:]) ** 2)))
    print(f"trained readout on {states.shape[1]} states; rms residual {residual:.3e}")
    return 0


def _cmd_estimate(args):
    store = StagedStore(args.artifacts)
    basis = store.load_basis()
    sensors = store.load_sensors()
    model = build_estimator(basis, sensors)
    traj = ingest_snapshots(args.snapshots)
    if traj.n_states != basis.n_states:
        raise ConfigError(
            f"test snapshots have {traj.n_states} states, basis has "
            f"{basis.n_states}"
        )
    oracle = bool(args.oracle_kernel)
    noise_fraction = args.noise_fraction
    if oracle and "train" not in store.meta()["stages"] and noise_fraction == 0.0:
        net, train_std = None, np.zeros(sensors.r)
    else:
        store.require_stage("train", "sdeim train")
        net = store.load_net()
        train_std = store.load_array("train_std")

    metadata = {
        "staged": store.meta(),
        "run": {
            "noise_fraction": noise_fraction,
            "seed_noise": args.seed_noise,
            "oracle_kernel": oracle,
            "transient_steps": args.transient_steps,
            "snapshots_sha256": _file_sha(args.snapshots),
        },
        "sensors": [int(i) for i in sensors.indices],
    }
    report = _estimate_core(
        model,
        net,
        train_std,
        traj,
        noise_fraction=noise_fraction,
        noise_seed=args.seed_noise,
        oracle_kernel=oracle,
        transient_steps=args.transient_steps,
        metadata=metadata,
    )
    out = Path(args.out)
    report.write(out)
    for name in ("bestfit", "qdeim", "sdeim"):
        s = report.summary[name]
        print(
            f"{name}: mean RE {s['mean']:.4f} "
            f"(post-transient {s['mean_post_transient']:.4f})"
        )
    print(f"report written to {out / 'report.csv'}")
    return 0


def _cmd_ingest(args):
    traj = ingest_snapshots(args.input, dt_sample=args.dt_sample, t0=args.t0)
    print(
        f"read {traj.n_states} x {traj.n_snapshots} snapshots, "
        f"t0={traj.t0}, dt={traj.dt_sample}"
    )
    if args.output:
        save_trajectory(traj, args.output)
        print(f"wrote {args.output}")
    return 0


def _cmd_reproduce(args):
    config = _experiment_config(args, default_tag=args.preset)
    if config.output_dir is None:
        raise ConfigError("reproduce needs --out to know where to write reports")
    artifacts = run_offline(config)
    report = run_estimate(config, artifacts)
    for name in ("bestfit", "qdeim", "sdeim"):
        s = report.summary[name]
        print(
            f"{name}: mean RE {s['mean']:.4f} "
            f"(post-transient {s['mean_post_transient']:.4f})"
        )
    print(f"reports under {config.output_dir}")
    return 0


def _cmd_sweep(args):
    config = _experiment_config(args)
    if config.output_dir is None:
        raise ConfigError("sweep needs --out to know where to write reports")
    r_values = [int(tok) for tok in args.sensor_counts.split(",") if tok.strip()]
    if not r_values:
        raise ConfigError("no sensor counts given")
    rows = sensor_sweep(config, r_values)
    for row in rows:
        print(
            f"r={row['r']}: sdeim {row['sdeim_mean']:.4f} "
            f"qdeim {row['qdeim_mean']:.4f} bestfit {row['bestfit_mean']:.4f}"
        )
    print(f"sweep written under {config.output_dir}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sdeim",
        description="Sparse-sensor state estimation: basis building, "
        "pivoted-QR sensor placement, reservoir-readout training, and "
        "reconstruction error reports.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    subs = parser.add_subparsers(dest="command", required=True)

    sim = subs.add_parser("simulate", help="integrate a system and write snapshots")
    sim.add_argument("--system", required=True, choices=[LORENZ96, KS])
    sim.add_argument("--n", type=int, required=True, help="state dimension")
    sim.add_argument("--forcing", type=float, default=4.0)
    sim.add_argument("--domain-length", type=float, default=22.0)
    sim.add_argument("--dt-internal", type=float, default=None)
    sim.add_argument("--dt-sample", type=float, required=True)
    sim.add_argument("--horizon", type=float, required=True)
    sim.add_argument("--seed", type=int, default=0)
    sim.add_argument("--burn-in", type=float, default=50.0)
    sim.add_argument("--out", required=True, help=".csv for CSV, else binary")
    sim.set_defaults(func=_cmd_simulate)

    pod = subs.add_parser("pod", help="build the basis from a snapshot file")
    pod.add_argument("--snapshots", required=True)
    pod.add_argument("--modes", type=int, required=True)
    pod.add_argument("--artifacts", required=True, help="artifacts directory")
    pod.set_defaults(func=_cmd_pod)

    place = subs.add_parser("place", help="select sensors by pivoted QR")
    place.add_argument("--artifacts", required=True)
    place.add_argument("--sensors", type=int, required=True)
    place.set_defaults(func=_cmd_place)

    train = subs.add_parser("train", help="train the readout on a snapshot file")
    train.add_argument("--artifacts", required=True)
    train.add_argument("--snapshots", required=True)
    train.add_argument("--reservoir-size", type=int, default=None)
    train.add_argument("--density", type=float, default=None)
    train.add_argument("--spectral-radius", type=float, default=None)
    train.add_argument("--leak-rate", type=float, default=None)
    train.add_argument("--ridge-lambda", type=float, default=None)
    train.add_argument("--washout", type=int, default=None)
    train.add_argument("--seed-reservoir", type=int, default=44)
    train.set_defaults(func=_cmd_train)

    est = subs.add_parser("estimate", help="reconstruct states along a snapshot file")
    est.add_argument("--artifacts", required=True)
    est.add_argument("--snapshots", required=True)
    est.add_argument("--noise-fraction", type=float, default=0.05)
    est.add_argument("--seed-noise", type=int, default=55)
    est.add_argument("--transient-steps", type=int, default=16)
    est.add_argument("--oracle-kernel", action="store_true")
    est.add_argument("--out", required=True, help="report directory")
    est.set_defaults(func=_cmd_estimate)

    ing = subs.add_parser("ingest", help="validate or convert a snapshot file")
    ing.add_argument("--input", required=True)
    ing.add_argument("--output", default=None)
    ing.add_argument("--dt-sample", type=float, default=None)
    ing.add_argument("--t0", type=float, default=None)
    ing.set_defaults(func=_cmd_ingest)

    rep = subs.add_parser("reproduce", help="run a benchmark end to end")
    rep.add_argument("preset", choices=sorted(PRESETS))
    rep.add_argument("--out", required=True, help="report directory")
    _add_experiment_flags(rep)
    rep.set_defaults(func=_cmd_reproduce)

    sweep = subs.add_parser("sweep", help="repeat a benchmark across sensor counts")
    sweep.add_argument("--preset", choices=sorted(PRESETS), default=None)
    sweep.add_argument(
        "--sensor-counts", required=True, help="comma-separated r values"
    )
    sweep.add_argument("--out", required=True)
    _add_experiment_flags(sweep)
    sweep.set_defaults(func=_cmd_sweep)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except AssumptionViolationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return _ASSUMPTION_EXIT
    except _NUMERICAL_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return _NUMERICAL_EXIT
    except _CONFIG_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return _CONFIG_EXIT
    except SdeimError as exc:  # anything else from this package
        print(f"error: {exc}", file=sys.stderr)
        return _CONFIG_EXIT


if __name__ == "__main__":
    sys.exit(main())
