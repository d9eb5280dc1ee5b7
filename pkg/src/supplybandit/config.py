"""Experiment configuration: schema, defaults, validation, loading.

Configs are YAML files with nested blocks (environment, source, estimator,
policies, evaluation, sweep, seeds, outputs). Loading applies documented
defaults and validates everything up front, reporting problems as
(field path, message) pairs instead of failing midway through a run.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

import numpy as np
import yaml

__all__ = [
    "ConfigError",
    "ExperimentConfig",
    "load_config",
    "validate_config",
    "resolve_config",
]

SUPPLY_SCHEMES = ("proportional", "inverse_proportional", "random")
ARRIVAL_MODES = ("iid", "permutation")
NOISE_KINDS = ("normal", "truncated_normal")
SOURCE_KINDS = ("synthetic", "matrix", "interactions")
ESTIMATOR_KINDS = ("exact", "noise", "ridge")
POLICY_KINDS = ("greedy", "relative_gap", "mixed", "softmax")
EVALUATION_KINDS = ("simulate", "exact")
SWEEP_PARAMETERS = ("none", "lambda", "users", "s_max", "estimator_sigma")


class ConfigError(Exception):
    """Raised when a config fails validation; carries the diagnostics."""

    def __init__(self, diagnostics: list[tuple[str, str]]):
        self.diagnostics = diagnostics
        lines = "; ".join(f"{fld}: {msg}" for fld, msg in diagnostics)
        super().__init__(f"invalid config: {lines}")


@dataclass(frozen=True)
class EnvironmentConfig:
    users: int = 200
    actions: int = 100
    context_dim: int = 10
    lam: float = 0.5
    supply_scheme: str = "random"
    s_max: int = 20
    horizon: int | str = "auto"
    arrival_mode: str = "iid"
    reward_noise_kind: str = "normal"
    reward_noise_sigma: float = 3.0


@dataclass(frozen=True)
class SourceConfig:
    kind: str = "synthetic"
    q: tuple[tuple[float, ...], ...] | None = None
    labels: tuple[str, ...] | None = None
    ratings: str | None = None
    features: str | None = None
    users: int | None = None
    items: int | None = None


@dataclass(frozen=True)
class EstimatorConfig:
    kind: str = "exact"
    sigma: float = 1.0
    penalty: float = 1.0
    target: str = "product_cr"


@dataclass(frozen=True)
class LoggingPolicyConfig:
    beta: float = -1.0
    episodes: int = 1
    q_hat_noise_sigma: float = 0.0


@dataclass(frozen=True)
class PolicyConfig:
    kind: str
    beta: float = 1.0
    name: str | None = None

    @property
    def display_name(self) -> str:
        return self.name if self.name is not None else self.kind


@dataclass(frozen=True)
class EvaluationConfig:
    kind: str = "simulate"
    n_sims: int = 1
    include_optimal: bool = False


@dataclass(frozen=True)
class SweepConfig:
    parameter: str = "none"
    values: tuple[float, ...] = (0.0,)


@dataclass(frozen=True)
class SeedsConfig:
    count: int = 100
    base: int = 0


@dataclass(frozen=True)
class OutputsConfig:
    directory: str | None = None
    trace: bool = False
    allocation: bool = False
    checkpoints: tuple[int, ...] = (10, 30, 60)


@dataclass(frozen=True)
class ExperimentConfig:
    name: str
    environment: EnvironmentConfig = field(default_factory=EnvironmentConfig)
    source: SourceConfig = field(default_factory=SourceConfig)
    estimator: EstimatorConfig = field(default_factory=EstimatorConfig)
    logging_policy: LoggingPolicyConfig | None = None
    policies: tuple[PolicyConfig, ...] = (PolicyConfig("greedy"), PolicyConfig("relative_gap"))
    evaluation: EvaluationConfig = field(default_factory=EvaluationConfig)
    sweep: SweepConfig = field(default_factory=SweepConfig)
    seeds: SeedsConfig = field(default_factory=SeedsConfig)
    outputs: OutputsConfig = field(default_factory=OutputsConfig)

    def policy_names(self) -> list[str]:
        return [p.display_name for p in self.policies]


class _Checker:
    """Accumulates diagnostics while pulling typed values out of raw YAML."""

    def __init__(self):
        self.diagnostics: list[tuple[str, str]] = []

    def fail(self, fld: str, msg: str) -> None:
        self.diagnostics.append((fld, msg))

    def block(self, raw: dict, key: str, allowed: set[str]) -> dict:
        sub = raw.get(key) or {}
        if not isinstance(sub, dict):
            self.fail(key, "must be a mapping")
            return {}
        for unknown in sorted(set(sub) - allowed):
            self.fail(f"{key}.{unknown}", "unknown field")
        return sub

    def number(self, blk: dict, fld: str, default, lo=None, hi=None, integer=False):
        value = blk.get(fld.split(".")[-1], default)
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            self.fail(fld, "must be a number")
            return default
        if integer and int(value) != value:
            self.fail(fld, "must be an integer")
            return default
        if lo is not None and value < lo:
            self.fail(fld, f"must be >= {lo}")
            return default
        if hi is not None and value > hi:
            self.fail(fld, f"must be <= {hi}")
            return default
        return int(value) if integer else float(value)

    def choice(self, blk: dict, fld: str, options: tuple[str, ...], default: str) -> str:
        value = blk.get(fld.split(".")[-1], default)
        if value not in options:
            self.fail(fld, f"must be one of {', '.join(options)}")
            return default
        return value


def resolve_config(raw: Any, origin: str = "<config>") -> ExperimentConfig:
    """Turn parsed YAML into a validated ExperimentConfig.

    Raises ConfigError listing every problem found, each tagged with the
    dotted path of the offending field.
    """
    check = _Checker()
    if not isinstance(raw, dict):
        raise ConfigError([("", f"{origin} must contain a mapping at the top level")])
    top_allowed = {
        "name", "environment", "source", "estimator", "logging_policy",
        "policies", "evaluation", "sweep", "seeds", "outputs",
    }
    for unknown in sorted(set(raw) - top_allowed):
        check.fail(unknown, "unknown field")

    name = raw.get("name", "experiment")
    if not isinstance(name, str) or not name:
        check.fail("name", "must be a nonempty string")
        name = "experiment"

    env_raw = check.block(raw, "environment", {
        "users", "actions", "context_dim", "lambda", "supply_scheme", "s_max",
        "horizon", "arrival_mode", "reward_noise_kind", "reward_noise_sigma",
    })
    horizon = env_raw.get("horizon", "auto")
    if horizon != "auto":
        if isinstance(horizon, bool) or not isinstance(horizon, int) or horizon < 1:
            check.fail("environment.horizon", "must be 'auto' or a positive integer")
            horizon = "auto"
    environment = EnvironmentConfig(
        users=check.number(env_raw, "environment.users", 200, lo=1, integer=True),
        actions=check.number(env_raw, "environment.actions", 100, lo=1, integer=True),
        context_dim=check.number(env_raw, "environment.context_dim", 10, lo=1, integer=True),
        lam=check.number(env_raw, "environment.lambda", 0.5, lo=0.0, hi=1.0),
        supply_scheme=check.choice(env_raw, "environment.supply_scheme", SUPPLY_SCHEMES, "random"),
        s_max=check.number(env_raw, "environment.s_max", 20, lo=1, integer=True),
        horizon=horizon,
        arrival_mode=check.choice(env_raw, "environment.arrival_mode", ARRIVAL_MODES, "iid"),
        reward_noise_kind=check.choice(env_raw, "environment.reward_noise_kind", NOISE_KINDS, "normal"),
        reward_noise_sigma=check.number(env_raw, "environment.reward_noise_sigma", 3.0, lo=0.0),
    )

    src_raw = check.block(raw, "source", {"kind", "q", "labels", "ratings", "features", "users", "items"})
    src_kind = check.choice(src_raw, "source.kind", SOURCE_KINDS, "synthetic")
    q_matrix = None
    labels = None
    if src_kind == "matrix":
        q_raw = src_raw.get("q")
        try:
            arr = np.asarray(q_raw, dtype=float)
            if arr.ndim != 2 or arr.size == 0 or not np.all(np.isfinite(arr)):
                raise ValueError
            q_matrix = tuple(tuple(float(v) for v in row) for row in arr)
        except (ValueError, TypeError):
            check.fail("source.q", "must be a rectangular numeric matrix")
        raw_labels = src_raw.get("labels")
        if raw_labels is not None:
            if not isinstance(raw_labels, list) or not all(isinstance(s, str) for s in raw_labels):
                check.fail("source.labels", "must be a list of strings")
            elif q_matrix is not None and len(raw_labels) != len(q_matrix[0]):
                check.fail("source.labels", "must have one label per action column")
            else:
                labels = tuple(raw_labels)
    elif src_kind == "interactions":
        for key in ("ratings", "features"):
            if not isinstance(src_raw.get(key), str):
                check.fail(f"source.{key}", "must be a file path")
    source = SourceConfig(
        kind=src_kind,
        q=q_matrix,
        labels=labels,
        ratings=src_raw.get("ratings") if isinstance(src_raw.get("ratings"), str) else None,
        features=src_raw.get("features") if isinstance(src_raw.get("features"), str) else None,
        users=check.number(src_raw, "source.users", None, lo=1, integer=True) if "users" in src_raw else None,
        items=check.number(src_raw, "source.items", None, lo=1, integer=True) if "items" in src_raw else None,
    )

    est_raw = check.block(raw, "estimator", {"kind", "sigma", "penalty", "target"})
    estimator = EstimatorConfig(
        kind=check.choice(est_raw, "estimator.kind", ESTIMATOR_KINDS, "exact"),
        sigma=check.number(est_raw, "estimator.sigma", 1.0, lo=0.0),
        penalty=check.number(est_raw, "estimator.penalty", 1.0),
        target=check.choice(est_raw, "estimator.target", ("product_cr", "reward_r"), "product_cr"),
    )
    if estimator.kind == "ridge" and estimator.penalty <= 0:
        check.fail("estimator.penalty", "must be positive")

    logging_policy = None
    if "logging_policy" in raw and raw["logging_policy"] is not None:
        log_raw = check.block(raw, "logging_policy", {"beta", "episodes", "q_hat_noise_sigma"})
        logging_policy = LoggingPolicyConfig(
            beta=check.number(log_raw, "logging_policy.beta", -1.0),
            episodes=check.number(log_raw, "logging_policy.episodes", 1, lo=1, integer=True),
            q_hat_noise_sigma=check.number(log_raw, "logging_policy.q_hat_noise_sigma", 0.0, lo=0.0),
        )
    if estimator.kind == "ridge" and logging_policy is None:
        check.fail("logging_policy", "required when estimator.kind is ridge (the fit needs logged data)")

    raw_policies = raw.get("policies", [{"kind": "greedy"}, {"kind": "relative_gap"}])
    policies: list[PolicyConfig] = []
    if not isinstance(raw_policies, list) or not raw_policies:
        check.fail("policies", "must be a nonempty list")
    else:
        for i, entry in enumerate(raw_policies):
            if not isinstance(entry, dict):
                check.fail(f"policies[{i}]", "must be a mapping")
                continue
            for unknown in sorted(set(entry) - {"kind", "beta", "name"}):
                check.fail(f"policies[{i}].{unknown}", "unknown field")
            kind = entry.get("kind")
            if kind not in POLICY_KINDS:
                check.fail(f"policies[{i}].kind", f"must be one of {', '.join(POLICY_KINDS)}")
                continue
            beta = entry.get("beta", 1.0 if kind != "softmax" else -1.0)
            if isinstance(beta, bool) or not isinstance(beta, (int, float)):
                check.fail(f"policies[{i}].beta", "must be a number")
                beta = 1.0
            if kind == "relative_gap" and not 0.0 <= beta <= 1.0:
                check.fail(f"policies[{i}].beta", "must lie in [0, 1]")
                beta = 1.0
            pname = entry.get("name")
            if pname is not None and not isinstance(pname, str):
                check.fail(f"policies[{i}].name", "must be a string")
                pname = None
            policies.append(PolicyConfig(kind=kind, beta=float(beta), name=pname))
        names = [p.display_name for p in policies]
        if len(set(names)) != len(names):
            check.fail("policies", "display names must be unique (set name: on duplicates)")

    eval_raw = check.block(raw, "evaluation", {"kind", "n_sims", "include_optimal"})
    include_optimal = eval_raw.get("include_optimal", False)
    if not isinstance(include_optimal, bool):
        check.fail("evaluation.include_optimal", "must be a boolean")
        include_optimal = False
    evaluation = EvaluationConfig(
        kind=check.choice(eval_raw, "evaluation.kind", EVALUATION_KINDS, "simulate"),
        n_sims=check.number(eval_raw, "evaluation.n_sims", 1, lo=1, integer=True),
        include_optimal=include_optimal,
    )

    sweep_raw = raw.get("sweep")
    if sweep_raw is None:
        sweep = SweepConfig()
    else:
        sweep_blk = check.block(raw, "sweep", {"parameter", "values"})
        parameter = check.choice(sweep_blk, "sweep.parameter", SWEEP_PARAMETERS, "none")
        values_raw = sweep_blk.get("values", [0.0])
        values: tuple[float, ...] = (0.0,)
        if not isinstance(values_raw, list) or not values_raw:
            check.fail("sweep.values", "must be a nonempty list of numbers")
        elif any(isinstance(v, bool) or not isinstance(v, (int, float)) for v in values_raw):
            check.fail("sweep.values", "must be a nonempty list of numbers")
        else:
            values = tuple(float(v) for v in values_raw)
            if parameter == "lambda" and any(not 0.0 <= v <= 1.0 for v in values):
                check.fail("sweep.values", "lambda values must lie in [0, 1]")
            if parameter in ("users", "s_max") and any(v < 1 or int(v) != v for v in values):
                check.fail("sweep.values", f"{parameter} values must be positive integers")
            if parameter == "estimator_sigma" and any(v < 0 for v in values):
                check.fail("sweep.values", "sigma values must be nonnegative")
        sweep = SweepConfig(parameter=parameter, values=values)

    seeds_raw = check.block(raw, "seeds", {"count", "base"})
    seeds = SeedsConfig(
        count=check.number(seeds_raw, "seeds.count", 100, lo=1, integer=True),
        base=check.number(seeds_raw, "seeds.base", 0, lo=0, integer=True),
    )

    out_raw = check.block(raw, "outputs", {"directory", "trace", "allocation", "checkpoints"})
    directory = out_raw.get("directory")
    if directory is not None and not isinstance(directory, str):
        check.fail("outputs.directory", "must be a path string")
        directory = None
    flags = {}
    for key in ("trace", "allocation"):
        value = out_raw.get(key, False)
        if not isinstance(value, bool):
            check.fail(f"outputs.{key}", "must be a boolean")
            value = False
        flags[key] = value
    checkpoints_raw = out_raw.get("checkpoints", [10, 30, 60])
    checkpoints = (10, 30, 60)
    if (
        not isinstance(checkpoints_raw, list)
        or not checkpoints_raw
        or any(isinstance(v, bool) or not isinstance(v, int) or v < 1 for v in checkpoints_raw)
    ):
        check.fail("outputs.checkpoints", "must be a nonempty list of positive integers")
    else:
        checkpoints = tuple(checkpoints_raw)
    outputs = OutputsConfig(
        directory=directory,
        trace=flags.get("trace", False),
        allocation=flags.get("allocation", False),
        checkpoints=checkpoints,
    )

    # Cross-field constraints.
    if sweep.parameter == "lambda" and source.kind != "synthetic":
        check.fail("sweep.parameter", "lambda sweeps need a synthetic source")
    if sweep.parameter == "users" and source.kind == "matrix":
        check.fail("sweep.parameter", "cannot sweep users with a fixed matrix source")
    if sweep.parameter == "estimator_sigma" and estimator.kind != "noise":
        check.fail("sweep.parameter", "estimator_sigma sweeps need estimator.kind noise")
    if evaluation.kind == "exact":
        if source.kind != "matrix":
            check.fail("evaluation.kind", "exact evaluation needs a matrix source")
        elif q_matrix is not None and len(q_matrix) != len(q_matrix[0]):
            check.fail("source.q", "exact evaluation needs a square matrix (one user per action)")
        if sweep.parameter != "none":
            check.fail("sweep.parameter", "exact evaluation does not sweep")
        bad = [p.kind for p in policies if p.kind not in ("greedy", "relative_gap")]
        if bad:
            check.fail("policies", f"exact evaluation supports greedy and relative_gap, not {bad[0]}")
    if evaluation.include_optimal and evaluation.kind != "exact":
        check.fail("evaluation.include_optimal", "only available under exact evaluation")
    if outputs.trace or outputs.allocation:
        if sweep.parameter != "none":
            check.fail("outputs", "trace/allocation files need a no-sweep config")
        if evaluation.kind == "exact":
            check.fail("outputs", "trace/allocation files need simulate evaluation")

    if check.diagnostics:
        raise ConfigError(check.diagnostics)
    return ExperimentConfig(
        name=name,
        environment=environment,
        source=source,
        estimator=estimator,
        logging_policy=logging_policy,
        policies=tuple(policies),
        evaluation=evaluation,
        sweep=sweep,
        seeds=seeds,
        outputs=outputs,
    )


def load_config(path) -> ExperimentConfig:
    """Read and validate a YAML config file."""
    with open(path, "r", encoding="utf-8") as fh:
        try:
            raw = yaml.safe_load(fh)
        except yaml.YAMLError as exc:
            raise ConfigError([("", f"YAML parse error: {exc}")]) from exc
    return resolve_config(raw, origin=str(path))


def validate_config(path) -> list[tuple[str, str]]:
    """Validate a config file, returning diagnostics instead of raising."""
    try:
        load_config(path)
    except ConfigError as exc:
        return exc.diagnostics
    return []
