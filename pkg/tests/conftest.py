"""Session-scoped fixtures shared across test modules.

The benchmark pipeline runs are expensive (seconds to tens of seconds),
so the acceptance criteria and the slower integration tests share one
run per system.
"""

import pytest

from sdeim.dynamics import KS, SystemConfig, integrate_ks, random_initial_condition
from sdeim.pipeline import run_estimate, run_offline, sensor_sweep
from sdeim.pod import center, compute_pod
from sdeim.presets import ks_config, lorenz96_config


@pytest.fixture(scope="session")
def ks_pod_basis():
    """A 15-mode basis from a short KS run, for placement-quality tests."""
    cfg = SystemConfig(KS, 128, 0.05, 0.2, domain_length=22.0)
    u0 = random_initial_condition(cfg, seed=1005)
    traj = integrate_ks(cfg, u0, 200.0)
    mean, centered = center(traj)
    return compute_pod(centered, 15, mean=mean)


@pytest.fixture(scope="session")
def lorenz_benchmark():
    """Full Lorenz-96 benchmark: (config, artifacts, report, elapsed_s)."""
    import time

    config = lorenz96_config()
    start = time.perf_counter()
    artifacts = run_offline(config)
    report = run_estimate(config, artifacts)
    elapsed = time.perf_counter() - start
    return config, artifacts, report, elapsed


@pytest.fixture(scope="session")
def ks_benchmark():
    """Full KS benchmark: (config, artifacts, report, elapsed_s)."""
    import time

    config = ks_config()
    start = time.perf_counter()
    artifacts = run_offline(config)
    report = run_estimate(config, artifacts)
    elapsed = time.perf_counter() - start
    return config, artifacts, report, elapsed


@pytest.fixture(scope="session")
def ks_sweep():
    """KS sensor sweep rows for r = 2, 4, ..., 14 with m = 15."""
    config = ks_config()
    return sensor_sweep(config, [2, 4, 6, 8, 10, 12, 14])
