"""End-to-end CLI runs: the staged file workflow, format conversion,
config files, and the exit-code contract."""

import json

import numpy as np
import pytest

from sdeim.cli import main, read_config_file
from sdeim.errors import ConfigError
from sdeim.snapshots import ingest_snapshots


def run_cli(*argv):
    return main([str(a) for a in argv])


@pytest.fixture(scope="module")
def staged(tmp_path_factory):
    """simulate -> pod -> place -> train on a small Lorenz-96 system."""
    root = tmp_path_factory.mktemp("staged")
    train_file = root / "train.sdm"
    test_file = root / "test.sdm"
    art = root / "artifacts"
    common = [
        "simulate", "--system", "lorenz96", "--n", 8, "--forcing", 4.0,
        "--dt-internal", 0.05, "--dt-sample", 0.25, "--burn-in", 5.0,
    ]
    assert run_cli(*common, "--horizon", 60.0, "--seed", 1, "--out", train_file) == 0
    assert run_cli(*common, "--horizon", 15.0, "--seed", 2, "--out", test_file) == 0
    assert run_cli("pod", "--snapshots", train_file, "--modes", 5,
                   "--artifacts", art) == 0
    assert run_cli("place", "--artifacts", art, "--sensors", 3) == 0
    assert run_cli("train", "--artifacts", art, "--snapshots", train_file,
                   "--reservoir-size", 60, "--density", 0.2,
                   "--washout", 10, "--seed-reservoir", 3) == 0
    return root, art, train_file, test_file


class TestStagedWorkflow:
    def test_estimate_produces_report(self, staged, tmp_path):
        _, art, _, test_file = staged
        out = tmp_path / "report"
        assert run_cli("estimate", "--artifacts", art, "--snapshots", test_file,
                       "--noise-fraction", 0.05, "--seed-noise", 9,
                       "--transient-steps", 4, "--out", out) == 0
        lines = (out / "report.csv").read_text().splitlines()
        assert lines[0] == "time,re_bestfit,re_qdeim,re_sdeim"
        assert len(lines) == 1 + 61  # 15 / 0.25 + 1 snapshots
        sidecar = json.loads((out / "report.json").read_text())
        assert "sdeim" in sidecar["summary"]

    def test_estimate_is_deterministic(self, staged, tmp_path):
        _, art, _, test_file = staged
        outs = []
        for name in ("r1", "r2"):
            out = tmp_path / name
            assert run_cli("estimate", "--artifacts", art,
                           "--snapshots", test_file, "--seed-noise", 9,
                           "--out", out) == 0
            outs.append((out / "report.csv").read_bytes())
        assert outs[0] == outs[1]

    def test_oracle_flag_tightens_errors(self, staged, tmp_path):
        _, art, _, test_file = staged
        plain, oracle = {}, {}
        for flag, dest in ((False, plain), (True, oracle)):
            out = tmp_path / ("oracle" if flag else "plain")
            argv = ["estimate", "--artifacts", art, "--snapshots", test_file,
                    "--noise-fraction", 0.0, "--out", out]
            if flag:
                argv.append("--oracle-kernel")
            assert run_cli(*argv) == 0
            dest.update(json.loads((out / "report.json").read_text())["summary"])
        assert oracle["sdeim"]["mean"] <= plain["sdeim"]["mean"] + 1e-12
        assert oracle["sdeim"]["mean"] <= oracle["qdeim"]["mean"] + 1e-12

    def test_missing_stage_is_config_error(self, staged, tmp_path):
        root, _, train_file, _ = staged
        empty = tmp_path / "empty_artifacts"
        assert run_cli("train", "--artifacts", empty,
                       "--snapshots", train_file) == 2


class TestIngest:
    def test_converts_between_formats(self, staged, tmp_path):
        _, _, train_file, _ = staged
        csv_file = tmp_path / "conv.csv"
        assert run_cli("ingest", "--input", train_file, "--output", csv_file) == 0
        a = ingest_snapshots(train_file)
        b = ingest_snapshots(csv_file)
        assert np.array_equal(a.states, b.states)

    def test_rejects_garbage(self, tmp_path):
        bad = tmp_path / "bad.sdm"
        bad.write_bytes(b"garbage!")
        assert run_cli("ingest", "--input", bad) == 2


class TestExitCodes:
    def test_numerical_error_is_three(self, tmp_path):
        # An unstable step size blows up the integration.
        code = run_cli("simulate", "--system", "lorenz96", "--n", 8,
                       "--forcing", 50.0, "--dt-internal", 0.5,
                       "--dt-sample", 0.5, "--burn-in", 0.0,
                       "--horizon", 50.0, "--seed", 0,
                       "--out", tmp_path / "x.sdm")
        assert code == 3

    def test_rank_deficient_data_is_three(self, tmp_path):
        # Rank-2 snapshots cannot support 4 modes.
        rng = np.random.default_rng(0)
        states = rng.standard_normal((6, 2)) @ rng.standard_normal((2, 30))
        from sdeim.dynamics import EXTERNAL, TrajectoryMatrix
        from sdeim.snapshots import write_snapshots

        write_snapshots(
            TrajectoryMatrix(states, 0.0, 0.1, EXTERNAL), tmp_path / "low.sdm"
        )
        assert run_cli("pod", "--snapshots", tmp_path / "low.sdm",
                       "--modes", 4, "--artifacts", tmp_path / "a") == 3

    def test_assumption_violation_is_four(self, tmp_path):
        # Hand-written artifacts whose sensors sit on zero rows of the
        # basis: theta loses row rank.
        from sdeim.cli import StagedStore

        store = StagedStore(tmp_path / "a")
        basis = np.zeros((6, 3))
        basis[:3, :] = np.eye(3)
        store.save_array("mean", np.zeros(6))
        store.save_array("basis", basis)
        store.save_array("singular_values", np.array([3.0, 2.0, 1.0]))
        store.save_array("sensors", np.array([4, 5]))
        store.write_meta(
            {"format": 1, "stages": {"pod": {}, "place": {}}}
        )
        snaps = tmp_path / "t.sdm"
        from sdeim.dynamics import EXTERNAL, TrajectoryMatrix
        from sdeim.snapshots import write_snapshots

        rng = np.random.default_rng(1)
        write_snapshots(
            TrajectoryMatrix(rng.standard_normal((6, 10)), 0.0, 0.1, EXTERNAL),
            snaps,
        )
        assert run_cli("estimate", "--artifacts", tmp_path / "a",
                       "--snapshots", snaps, "--out", tmp_path / "r") == 4

    def test_regime_error_is_two(self, staged):
        _, art, _, _ = staged
        # more sensors than modes
        assert run_cli("place", "--artifacts", art, "--sensors", 6) == 2


class TestConfigFile:
    def test_round_trip_through_reproduce(self, tmp_path):
        cfg = tmp_path / "run.ini"
        cfg.write_text(
            "[system]\n"
            "tag = lorenz96\n"
            "n = 8\n"
            "dt_internal = 0.05\n"
            "[experiment]\n"
            "modes = 5\n"
            "sensors = 3\n"
            "pod_horizon = 25\n"
            "train_horizon = 25\n"
            "test_horizon = 10\n"
            "burn_in = 5\n"
            "transient_steps = 4\n"
            "[reservoir]\n"
            "size = 60\n"
            "density = 0.2\n"
            "washout = 10\n"
            "[seeds]\n"
            "noise = 77\n"
        )
        out = tmp_path / "rep"
        assert run_cli("reproduce", "lorenz96", "--config", cfg, "--out", out) == 0
        meta = json.loads((out / "report.json").read_text())
        resolved = meta["metadata"]["config"]
        assert resolved["system"]["n_states"] == 8
        assert resolved["seeds"]["noise"] == 77
        assert resolved["n_modes"] == 5

    def test_flags_override_file(self, tmp_path):
        cfg = tmp_path / "run.ini"
        cfg.write_text("[seeds]\nnoise = 77\n[system]\ntag = lorenz96\nn = 8\n"
                       "dt_internal = 0.05\n[experiment]\nmodes = 5\nsensors = 3\n"
                       "pod_horizon = 25\ntrain_horizon = 25\ntest_horizon = 10\n"
                       "burn_in = 5\n[reservoir]\nsize = 60\ndensity = 0.2\n"
                       "washout = 10\n")
        out = tmp_path / "rep"
        assert run_cli("reproduce", "lorenz96", "--config", cfg,
                       "--seed-noise", 123, "--out", out) == 0
        meta = json.loads((out / "report.json").read_text())
        assert meta["metadata"]["config"]["seeds"]["noise"] == 123

    def test_unknown_entry_rejected(self, tmp_path):
        cfg = tmp_path / "run.ini"
        cfg.write_text("[experiment]\nmodess = 5\n")
        with pytest.raises(ConfigError):
            read_config_file(cfg)

    def test_reproduce_ks_small(self, tmp_path):
        # Plumbing check only; a 5-mode basis and 25-unit training are
        # far below what the system needs for good errors.
        out = tmp_path / "ks"
        code = run_cli(
            "reproduce", "ks", "--out", out,
            "--modes", 5, "--sensors", 3,
            "--pod-horizon", 25.0, "--train-horizon", 25.0,
            "--test-horizon", 10.0, "--burn-in", 5.0,
            "--reservoir-size", 60, "--density", 0.2, "--washout", 10,
        )
        assert code == 0
        meta = json.loads((out / "report.json").read_text())
        assert meta["metadata"]["config"]["system"]["system_tag"] == "ks"
        assert len((out / "report.csv").read_text().splitlines()) == 52

    def test_sweep_command(self, tmp_path):
        out = tmp_path / "sw"
        code = run_cli(
            "sweep", "--preset", "lorenz96", "--sensor-counts", "2,3",
            "--pod-horizon", 25.0, "--train-horizon", 25.0,
            "--test-horizon", 10.0, "--burn-in", 5.0,
            "--reservoir-size", 220, "--washout", 10,
            "--dt-internal", 0.05, "--out", out,
        )
        assert code == 0
        lines = (out / "sweep.csv").read_text().splitlines()
        assert len(lines) == 3
