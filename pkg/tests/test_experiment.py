import json

import pytest

from supplybandit.config import resolve_config
from supplybandit.experiment import run_cell, run_experiment

TINY_Q = [[1.0, 2.0, 5.0], [2.0, 4.0, 3.0], [5.0, 1.0, 2.0]]


def _tiny_sim_raw(**overrides):
    raw = {
        "name": "tiny",
        "environment": {
            "users": 3,
            "actions": 3,
            "supply_scheme": "random",
            "s_max": 4,
            "horizon": 30,
            "reward_noise_sigma": 1.0,
        },
        "source": {"kind": "matrix", "q": TINY_Q},
        "policies": [{"kind": "greedy"}, {"kind": "relative_gap"}],
        "evaluation": {"kind": "simulate", "n_sims": 2},
        "seeds": {"count": 3, "base": 5},
        "outputs": {"trace": True, "allocation": True, "checkpoints": [5, 10]},
    }
    raw.update(overrides)
    return raw


def _read(path):
    return path.read_bytes()


def test_outputs_are_byte_deterministic(tmp_path):
    cfg = resolve_config(_tiny_sim_raw())
    first = run_experiment(cfg, tmp_path / "a")
    second = run_experiment(cfg, tmp_path / "b")
    for role in ("summary", "trace", "allocation", "manifest"):
        assert _read(first[role]) == _read(second[role])


def test_parallel_run_matches_sequential(tmp_path):
    cfg = resolve_config(_tiny_sim_raw())
    seq = run_experiment(cfg, tmp_path / "seq", jobs=1)
    par = run_experiment(cfg, tmp_path / "par", jobs=3)
    for role in ("summary", "trace", "allocation"):
        assert _read(seq[role]) == _read(par[role])


def test_base_seed_changes_results(tmp_path):
    cfg_a = resolve_config(_tiny_sim_raw())
    cfg_b = resolve_config(_tiny_sim_raw(seeds={"count": 3, "base": 6}))
    a = run_experiment(cfg_a, tmp_path / "a")
    b = run_experiment(cfg_b, tmp_path / "b")
    assert _read(a["summary"]) != _read(b["summary"])


def test_summary_layout_and_relative_column(tmp_path):
    cfg = resolve_config(_tiny_sim_raw())
    paths = run_experiment(cfg, tmp_path / "run")
    lines = paths["summary"].read_text().splitlines()
    assert lines[0] == "sweep_param,sweep_value,seed,policy,value,std_error,relative_to_greedy"
    body = [line.split(",") for line in lines[1:]]
    assert len(body) == 3 * 2  # seeds x policies
    seeds = {row[2] for row in body}
    assert seeds == {"5", "6", "7"}
    for row in body:
        if row[3] == "greedy":
            assert float(row[6]) == 1.0
        else:
            assert float(row[6]) > 0


def test_sweep_grid_rows(tmp_path):
    raw = _tiny_sim_raw(
        sweep={"parameter": "s_max", "values": [2, 5]},
        outputs={},
        evaluation={"kind": "simulate", "n_sims": 1},
    )
    cfg = resolve_config(raw)
    paths = run_experiment(cfg, tmp_path / "sweep")
    lines = paths["summary"].read_text().splitlines()[1:]
    assert len(lines) == 2 * 3 * 2  # sweep values x seeds x policies
    values = {line.split(",")[1] for line in lines}
    assert values == {"2.0", "5.0"}
    assert {line.split(",")[0] for line in lines} == {"s_max"}


def test_exact_cell_reproduces_closed_values():
    raw = {
        "name": "coupon_cell",
        "source": {
            "kind": "matrix",
            "q": [[80.0, 250.0, 200.0], [100.0, 280.0, 120.0], [60.0, 100.0, 70.0]],
        },
        "policies": [{"kind": "greedy"}, {"kind": "relative_gap"}],
        "evaluation": {"kind": "exact", "include_optimal": True},
        "seeds": {"count": 1},
    }
    cell = run_cell(resolve_config(raw), 0, 0)
    assert cell.values["greedy"] == 420.0
    assert cell.values["relative_gap"] == 540.0
    assert cell.values["optimal"] == 540.0
    assert cell.std_errors["greedy"] == 0.0


def test_failure_removes_partial_outputs(tmp_path):
    raw = _tiny_sim_raw()
    raw["source"] = {"kind": "interactions", "ratings": "missing_r.csv", "features": "missing_f.csv"}
    raw["outputs"] = {}
    cfg = resolve_config(raw)
    out = tmp_path / "broken"
    with pytest.raises(Exception):
        run_experiment(cfg, out)
    assert list(out.iterdir()) == []


def test_manifest_contents(tmp_path):
    cfg = resolve_config(_tiny_sim_raw())
    paths = run_experiment(cfg, tmp_path / "m")
    manifest = json.loads(paths["manifest"].read_text())
    assert manifest["name"] == "tiny"
    assert manifest["base_seed"] == 5
    assert len(manifest["config_sha256"]) == 64
    assert manifest["columns"]["summary"][0] == "sweep_param"
    assert set(manifest["files"]) == {"summary", "trace", "allocation"}
    assert "timestamp" not in json.dumps(manifest).lower()
