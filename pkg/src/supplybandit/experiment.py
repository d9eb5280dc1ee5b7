"""Experiment engine: turns a config into CSV results.

A run is a grid of cells (sweep value x seed). Each cell rebuilds its world
from seeds derived deterministically from (base seed, sweep index, seed
index): population, reward model, initial stock, estimate, policies, then
one batch of paired episodes. Cells are independent, so they can run in a
worker pool; aggregation always happens in grid order, making the output
bytes identical regardless of parallelism.
"""

from __future__ import annotations

import csv
import hashlib
import json
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from functools import lru_cache
from pathlib import Path

import numpy as np

import supplybandit
from supplybandit.config import ExperimentConfig
from supplybandit.core import ActionSet, InventoryState, LoggedDataset, UserPopulation
from supplybandit.ingest import load_interactions, subsample, to_reward_model
from supplybandit.oracle import (
    UnitSupplyInstance,
    assignment_optimal_value,
    enumerate_policy_value,
)
from supplybandit.policies import (
    GreedyPolicy,
    MixedSupplyPolicy,
    RelativeGapPolicy,
    SoftmaxPolicy,
    population_means,
)
from supplybandit.reward import RewardModel, noisy_estimate, ridge_fit, synthesize_model
from supplybandit.sim import (
    EnvironmentSpec,
    draw_arrivals,
    draw_outcomes,
    initial_supply,
    run_episode,
    run_episode_streams,
)

__all__ = ["run_experiment", "CellResult"]

log = logging.getLogger(__name__)

SUMMARY_COLUMNS = ("sweep_param", "sweep_value", "seed", "policy", "value", "std_error", "relative_to_greedy")
TRACE_COLUMNS = ("t", "policy", "mean_cumulative_value", "relative_to_greedy")
ALLOCATION_COLUMNS = ("checkpoint_t", "policy", "user", "action", "share")


def _fmt(value) -> str:
    if isinstance(value, (np.floating, float)):
        return repr(float(value))
    return str(value)


@dataclass
class CellResult:
    """Everything one cell contributes to the output files."""

    sweep_index: int
    seed_index: int
    values: dict[str, float]
    std_errors: dict[str, float]
    cumulative: dict[str, np.ndarray] = field(default_factory=dict)
    shares: dict[tuple[int, str], np.ndarray] = field(default_factory=dict)
    depleted: bool = True


@lru_cache(maxsize=4)
def _cached_interactions(ratings_path: str, features_path: str):
    return load_interactions(ratings_path, features_path)


def _sweep_overrides(config: ExperimentConfig, value: float) -> ExperimentConfig:
    """Fold one sweep value back into a concrete per-cell config."""
    param = config.sweep.parameter
    if param == "none":
        return config
    if param == "lambda":
        return replace(config, environment=replace(config.environment, lam=float(value)))
    if param == "s_max":
        return replace(config, environment=replace(config.environment, s_max=int(value)))
    if param == "users":
        if config.source.kind == "interactions":
            return replace(config, source=replace(config.source, users=int(value)))
        return replace(config, environment=replace(config.environment, users=int(value)))
    if param == "estimator_sigma":
        return replace(config, estimator=replace(config.estimator, sigma=float(value)))
    raise ValueError(f"unknown sweep parameter {param!r}")


def _build_world(config: ExperimentConfig, source_seq, model_seq):
    """Population, reward model, and optional action labels for one cell."""
    env_cfg = config.environment
    if config.source.kind == "synthetic":
        rng = np.random.Generator(np.random.PCG64(source_seq))
        features = rng.standard_normal((env_cfg.users, env_cfg.context_dim))
        population = UserPopulation.uniform(features)
        model = synthesize_model(
            features, env_cfg.actions, env_cfg.lam, np.random.Generator(np.random.PCG64(model_seq))
        )
        return population, model, None
    if config.source.kind == "matrix":
        q = np.asarray(config.source.q, dtype=float)
        population = UserPopulation.uniform(np.eye(q.shape[0]))
        return population, RewardModel.from_value_matrix(q), config.source.labels
    ds = _cached_interactions(config.source.ratings, config.source.features)
    n_users = config.source.users or ds.n_users
    n_items = config.source.items or ds.n_items
    if (n_users, n_items) != (ds.n_users, ds.n_items):
        ds = subsample(ds, n_users, n_items, np.random.Generator(np.random.PCG64(source_seq)))
    return UserPopulation.uniform(ds.features), to_reward_model(ds), None


def _build_estimate(
    config: ExperimentConfig,
    model: RewardModel,
    population: UserPopulation,
    env: EnvironmentSpec,
    estimator_seq,
    logging_seq,
) -> np.ndarray:
    est = config.estimator
    if est.kind == "exact":
        return model.q
    if est.kind == "noise":
        rng = np.random.Generator(np.random.PCG64(estimator_seq))
        return noisy_estimate(model, est.sigma, rng).q_hat
    # ridge: generate a logged dataset under the softmax logging policy, fit on it.
    log_cfg = config.logging_policy
    rng = np.random.Generator(np.random.PCG64(estimator_seq))
    log_q_hat = model.q
    if log_cfg.q_hat_noise_sigma > 0:
        log_q_hat = model.q + rng.normal(0.0, log_cfg.q_hat_noise_sigma, size=model.q.shape)
    logger_policy = SoftmaxPolicy(q_hat=log_q_hat, beta=log_cfg.beta)
    dataset = LoggedDataset()
    for episode_seq in logging_seq.spawn(log_cfg.episodes):
        episode_rng = np.random.Generator(np.random.PCG64(episode_seq))
        dataset.episodes.append(run_episode(env, logger_policy, episode_rng))
    return ridge_fit(dataset, population, model.n_actions, est.penalty, est.target).q_hat


def _build_policies(config: ExperimentConfig, q_hat, weights, supply, horizon, q_c):
    built = []
    for pc in config.policies:
        if pc.kind == "greedy":
            policy = GreedyPolicy(q_hat=q_hat)
        elif pc.kind == "relative_gap":
            policy = RelativeGapPolicy.build(q_hat, weights, beta=pc.beta)
        elif pc.kind == "mixed":
            policy = MixedSupplyPolicy.build(q_hat, weights, supply, horizon, q_c)
        else:
            policy = SoftmaxPolicy(q_hat=q_hat, beta=pc.beta)
        built.append((pc.display_name, policy))
    return built


def _greedy_name(config: ExperimentConfig) -> str | None:
    for pc in config.policies:
        if pc.kind == "greedy":
            return pc.display_name
    return None


def run_cell(config: ExperimentConfig, sweep_index: int, seed_index: int) -> CellResult:
    """Run one (sweep value, seed) cell and collect its outputs."""
    cell_cfg = _sweep_overrides(config, config.sweep.values[sweep_index])
    if cell_cfg.evaluation.kind == "exact":
        return _run_exact_cell(cell_cfg, sweep_index, seed_index)
    ss = np.random.SeedSequence([cell_cfg.seeds.base, sweep_index, seed_index])
    source_seq, model_seq, supply_seq, estimator_seq, logging_seq, episode_seq = ss.spawn(6)

    population, model, labels = _build_world(cell_cfg, source_seq, model_seq)
    env_cfg = cell_cfg.environment
    supply = initial_supply(
        env_cfg.supply_scheme,
        env_cfg.s_max,
        model,
        population,
        np.random.Generator(np.random.PCG64(supply_seq)),
    )
    horizon = 4 * supply.total if env_cfg.horizon == "auto" else int(env_cfg.horizon)
    env = EnvironmentSpec(
        population=population,
        actions=ActionSet(count=model.n_actions, labels=labels),
        model=model,
        horizon=horizon,
        initial_supply=supply,
        reward_noise_sigma=env_cfg.reward_noise_sigma,
        reward_noise_kind=env_cfg.reward_noise_kind,
        arrival_mode=env_cfg.arrival_mode,
    )
    q_hat = _build_estimate(cell_cfg, model, population, env, estimator_seq, logging_seq)
    policies = _build_policies(cell_cfg, q_hat, population.weights, supply, horizon, model.q_c)

    n_sims = cell_cfg.evaluation.n_sims
    want_trace = cell_cfg.outputs.trace
    want_alloc = cell_cfg.outputs.allocation
    checkpoints = cell_cfg.outputs.checkpoints if want_alloc else ()
    values = {name: np.empty(n_sims) for name, _ in policies}
    cumulative = {name: np.zeros(horizon) for name, _ in policies} if want_trace else {}
    shares: dict[tuple[int, str], np.ndarray] = {}
    depleted = True

    for i, epi_seq in enumerate(episode_seq.spawn(n_sims)):
        arrival_seq, outcome_seq, policy_seq = epi_seq.spawn(3)
        arrivals = draw_arrivals(env, np.random.Generator(np.random.PCG64(arrival_seq)))
        consume_u, noise = draw_outcomes(env, np.random.Generator(np.random.PCG64(outcome_seq)))
        for name, policy in policies:
            policy_rng = np.random.Generator(np.random.PCG64(policy_seq))
            result = run_episode_streams(
                env, policy, arrivals, consume_u, noise, policy_rng, checkpoints=tuple(checkpoints)
            )
            values[name][i] = result.value
            if want_trace:
                cumulative[name] += np.cumsum(result.per_step)
            if want_alloc:
                for checkpoint, counts in result.checkpoint_counts.items():
                    key = (checkpoint, name)
                    share = counts / supply.stock[np.newaxis, :]
                    shares[key] = shares.get(key, 0.0) + share
            if result.consumed_counts.sum() < supply.total:
                depleted = False

    for key in list(shares):
        shares[key] = shares[key] / n_sims
    for name in cumulative:
        cumulative[name] = cumulative[name] / n_sims
    means = {name: float(vals.mean()) for name, vals in values.items()}
    std_errors = {
        name: float(vals.std(ddof=1) / np.sqrt(n_sims)) if n_sims > 1 else 0.0
        for name, vals in values.items()
    }
    return CellResult(
        sweep_index=sweep_index,
        seed_index=seed_index,
        values=means,
        std_errors=std_errors,
        cumulative=cumulative,
        shares=shares,
        depleted=depleted,
    )


def _run_exact_cell(config: ExperimentConfig, sweep_index: int, seed_index: int) -> CellResult:
    """Closed evaluation on a square matrix: averaged orders, no simulation."""
    q = np.asarray(config.source.q, dtype=float)
    inst = UnitSupplyInstance.uniform(q)
    ss = np.random.SeedSequence([config.seeds.base, sweep_index, seed_index])
    estimator_seq = ss.spawn(1)[0]
    model = RewardModel.from_value_matrix(q)
    if config.estimator.kind == "noise":
        rng = np.random.Generator(np.random.PCG64(estimator_seq))
        q_hat = noisy_estimate(model, config.estimator.sigma, rng).q_hat
    else:
        q_hat = model.q
    values: dict[str, float] = {}
    for pc in config.policies:
        if pc.kind == "greedy":
            scores = q_hat
        else:
            scores = q_hat - pc.beta * population_means(q_hat, inst.weights)
        values[pc.display_name] = enumerate_policy_value(inst, scores)
    if config.evaluation.include_optimal:
        values["optimal"], _ = assignment_optimal_value(inst)
    std_errors = {name: 0.0 for name in values}
    return CellResult(
        sweep_index=sweep_index,
        seed_index=seed_index,
        values=values,
        std_errors=std_errors,
    )


def _cell_worker(config: ExperimentConfig, sweep_index: int, seed_index: int) -> CellResult:
    return run_cell(config, sweep_index, seed_index)


def _config_hash(config: ExperimentConfig) -> str:
    canonical = json.dumps(asdict(config), sort_keys=True, default=str)
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def _write_summary(path: Path, config: ExperimentConfig, results: list[CellResult]) -> None:
    greedy = _greedy_name(config)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(SUMMARY_COLUMNS)
        for cell in results:
            sweep_value = config.sweep.values[cell.sweep_index]
            seed = config.seeds.base + cell.seed_index
            baseline = cell.values.get(greedy) if greedy else None
            for name in cell.values:
                value = cell.values[name]
                if baseline and baseline != 0:
                    relative = _fmt(value / baseline)
                else:
                    relative = ""
                writer.writerow(
                    [
                        config.sweep.parameter,
                        _fmt(sweep_value),
                        seed,
                        name,
                        _fmt(value),
                        _fmt(cell.std_errors[name]),
                        relative,
                    ]
                )


def _pad_to(arr: np.ndarray, length: int) -> np.ndarray:
    if arr.shape[0] >= length:
        return arr[:length]
    tail = np.full(length - arr.shape[0], arr[-1] if arr.size else 0.0)
    return np.concatenate([arr, tail])


def _write_trace(path: Path, config: ExperimentConfig, results: list[CellResult]) -> None:
    names = list(results[0].cumulative)
    longest = max(cell.cumulative[name].shape[0] for cell in results for name in names)
    averaged = {
        name: np.mean([_pad_to(cell.cumulative[name], longest) for cell in results], axis=0)
        for name in names
    }
    greedy = _greedy_name(config)
    baseline = averaged.get(greedy) if greedy else None
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(TRACE_COLUMNS)
        for name in names:
            series = averaged[name]
            for t in range(longest):
                if baseline is not None and baseline[t] > 0:
                    relative = _fmt(series[t] / baseline[t])
                else:
                    relative = ""
                writer.writerow([t + 1, name, _fmt(series[t]), relative])


def _write_allocation(path: Path, config: ExperimentConfig, results: list[CellResult]) -> None:
    keys = list(results[0].shares)
    averaged = {key: np.mean([cell.shares[key] for cell in results], axis=0) for key in keys}
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(ALLOCATION_COLUMNS)
        for checkpoint, name in keys:
            share = averaged[(checkpoint, name)]
            for user in range(share.shape[0]):
                for action in range(share.shape[1]):
                    writer.writerow([checkpoint, name, user, action, _fmt(share[user, action])])


def run_experiment(config: ExperimentConfig, out_dir, jobs: int = 1) -> dict[str, Path]:
    """Run every cell and write summary/trace/allocation CSVs plus a manifest.

    Returns the written paths keyed by file role. On any failure the files
    written so far are removed before the error propagates.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []
    try:
        grid = [
            (sweep_index, seed_index)
            for sweep_index in range(len(config.sweep.values))
            for seed_index in range(config.seeds.count)
        ]
        if jobs > 1:
            with ProcessPoolExecutor(max_workers=jobs) as pool:
                futures = [pool.submit(_cell_worker, config, si, di) for si, di in grid]
                results = [f.result() for f in futures]
        else:
            results = [run_cell(config, si, di) for si, di in grid]
        results.sort(key=lambda cell: (cell.sweep_index, cell.seed_index))

        if config.environment.horizon == "auto" and config.evaluation.kind == "simulate":
            leftover = sum(1 for cell in results if not cell.depleted)
            if leftover:
                log.warning("%d of %d cells ended with stock remaining", leftover, len(results))

        paths: dict[str, Path] = {}
        summary = out / "summary.csv"
        _write_summary(summary, config, results)
        written.append(summary)
        paths["summary"] = summary
        if config.outputs.trace:
            trace = out / "trace.csv"
            _write_trace(trace, config, results)
            written.append(trace)
            paths["trace"] = trace
        if config.outputs.allocation:
            allocation = out / "allocation.csv"
            _write_allocation(allocation, config, results)
            written.append(allocation)
            paths["allocation"] = allocation

        manifest = out / "manifest.json"
        payload = {
            "name": config.name,
            "config_sha256": _config_hash(config),
            "base_seed": config.seeds.base,
            "seed_count": config.seeds.count,
            "sweep_parameter": config.sweep.parameter,
            "sweep_values": list(config.sweep.values),
            "package_version": supplybandit.__version__,
            "python_version": sys.version.split()[0],
            "numpy_version": np.__version__,
            "files": {role: path.name for role, path in paths.items()},
            "columns": {
                "summary": list(SUMMARY_COLUMNS),
                "trace": list(TRACE_COLUMNS),
                "allocation": list(ALLOCATION_COLUMNS),
            },
        }
        with open(manifest, "w", encoding="utf-8") as fh:
            json.dump(payload, fh, indent=2, sort_keys=True)
            fh.write("\n")
        written.append(manifest)
        paths["manifest"] = manifest
        return paths
    except BaseException:
        for path in written:
            path.unlink(missing_ok=True)
        raise
