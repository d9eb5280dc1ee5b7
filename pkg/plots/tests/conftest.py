import subprocess
import sys

import pytest


def _run_cli(*args):
    proc = subprocess.run(
        [sys.executable, "-m", "supplybandit.cli", *args],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0, proc.stderr
    return proc


@pytest.fixture(scope="session")
def coupon_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("coupon")
    _run_cli("run", "--config", "coupon", "--out", str(out))
    return out


@pytest.fixture(scope="session")
def demo_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("demo")
    _run_cli("demo", "--out", str(out))
    return out


@pytest.fixture(scope="session")
def twin_policy_dir(tmp_path_factory):
    # two decision-identical policies: the gap rule at beta 0 is greedy
    out = tmp_path_factory.mktemp("twin")
    cfg = out / "config.yaml"
    cfg.write_text(
        "name: twin\n"
        "environment: {users: 6, actions: 4, context_dim: 3, s_max: 5, horizon: 40, reward_noise_sigma: 1.0}\n"
        "source: {kind: synthetic}\n"
        "policies:\n"
        "  - {kind: greedy}\n"
        "  - {kind: relative_gap, beta: 0.0, name: gap_zero}\n"
        "evaluation: {kind: simulate, n_sims: 2}\n"
        "sweep: {parameter: lambda, values: [0.0, 0.5, 1.0]}\n"
        "seeds: {count: 5}\n"
    )
    _run_cli("run", "--config", str(cfg), "--out", str(out / "results"))
    return out / "results"
