"""Command-line entry point.

Subcommands:
  run       execute an experiment config and write CSV results
  validate  check a config file and print diagnostics
  demo      run the packaged three-user demo preset

Exit codes: 0 on success, 2 on a config problem, 1 on a runtime failure.
SUPPLYBANDIT_OUT and SUPPLYBANDIT_JOBS override the output directory and
worker count; explicit flags beat both.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from dataclasses import replace
from importlib import resources
from pathlib import Path

from supplybandit.config import ConfigError, load_config, validate_config
from supplybandit.experiment import run_experiment

__all__ = ["main"]


def _preset_path(name: str) -> Path | None:
    base = name if name.endswith(".yaml") else name + ".yaml"
    candidate = resources.files("supplybandit") / "presets" / base
    if candidate.is_file():
        return Path(str(candidate))
    return None


def list_presets() -> list[str]:
    root = resources.files("supplybandit") / "presets"
    return sorted(p.name[: -len(".yaml")] for p in root.iterdir() if p.name.endswith(".yaml"))


def _resolve_config_arg(value: str) -> Path:
    """Accept a filesystem path, or the bare name of a packaged preset."""
    path = Path(value)
    if path.is_file():
        return path
    preset = _preset_path(value)
    if preset is not None:
        return preset
    raise FileNotFoundError(f"no such config file or preset: {value!r}")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="supplybandit",
        description="Off-policy learning experiments for limited-supply recommendation.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run an experiment config")
    run.add_argument("--config", required=True, help="config file path, or a packaged preset name")
    run.add_argument("--out", default=None, help="output directory")
    run.add_argument("--jobs", type=int, default=None, help="worker processes (default 1)")
    run.add_argument("--seed", type=int, default=None, help="override the base seed")

    val = sub.add_parser("validate", help="validate a config file")
    val.add_argument("--config", required=True, help="config file path, or a packaged preset name")

    demo = sub.add_parser("demo", help="run the packaged small-scale demo")
    demo.add_argument("--out", default=None, help="output directory")
    demo.add_argument("--jobs", type=int, default=None, help="worker processes (default 1)")
    demo.add_argument("--seed", type=int, default=None, help="override the base seed")

    presets = sub.add_parser("presets", help="list packaged preset names")
    return parser


def _pick_out_dir(flag: str | None, config) -> Path:
    if flag is not None:
        return Path(flag)
    env = os.environ.get("SUPPLYBANDIT_OUT")
    if env:
        return Path(env) / config.name
    if config.outputs.directory:
        return Path(config.outputs.directory)
    return Path("results") / config.name


def _pick_jobs(flag: int | None) -> int:
    if flag is not None:
        return max(1, flag)
    env = os.environ.get("SUPPLYBANDIT_JOBS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            print(f"ignoring non-integer SUPPLYBANDIT_JOBS={env!r}", file=sys.stderr)
    return 1


def _run(config_path: Path, out_flag: str | None, jobs_flag: int | None, seed_flag: int | None) -> int:
    try:
        config = load_config(config_path)
    except ConfigError as err:
        for fld, msg in err.diagnostics:
            print(f"config error: {fld}: {msg}", file=sys.stderr)
        return 2
    if seed_flag is not None:
        config = replace(config, seeds=replace(config.seeds, base=seed_flag))
    out_dir = _pick_out_dir(out_flag, config)
    jobs = _pick_jobs(jobs_flag)
    try:
        paths = run_experiment(config, out_dir, jobs=jobs)
    except Exception as err:
        print(f"run failed: {err}", file=sys.stderr)
        return 1
    for role in sorted(paths):
        print(f"{role}: {paths[role]}")
    return 0


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    args = _build_parser().parse_args(argv)

    if args.command == "presets":
        for name in list_presets():
            print(name)
        return 0

    if args.command == "validate":
        try:
            path = _resolve_config_arg(args.config)
        except FileNotFoundError as err:
            print(f"config error: {err}", file=sys.stderr)
            return 2
        diagnostics = validate_config(path)
        if diagnostics:
            for fld, msg in diagnostics:
                print(f"{fld}: {msg}", file=sys.stderr)
            return 2
        print("ok")
        return 0

    if args.command == "demo":
        path = _preset_path("demo")
        if path is None:
            print("demo preset missing from the installation", file=sys.stderr)
            return 1
        return _run(path, args.out, args.jobs, args.seed)

    try:
        path = _resolve_config_arg(args.config)
    except FileNotFoundError as err:
        print(f"config error: {err}", file=sys.stderr)
        return 2
    return _run(path, args.out, args.jobs, args.seed)


if __name__ == "__main__":
    sys.exit(main())
