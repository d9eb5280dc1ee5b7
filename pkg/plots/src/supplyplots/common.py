"""Shared plumbing: schema-checked CSV readers and deterministic saving."""

from __future__ import annotations

import csv
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

SUMMARY_COLUMNS = ["sweep_param", "sweep_value", "seed", "policy", "value", "std_error", "relative_to_greedy"]
TRACE_COLUMNS = ["t", "policy", "mean_cumulative_value", "relative_to_greedy"]
ALLOCATION_COLUMNS = ["checkpoint_t", "policy", "user", "action", "share"]

STYLE = {
    "figure.dpi": 110,
    "font.size": 10,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "svg.hashsalt": "supplyplots",
}

# one stable color per line index
COLORS = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#8c564b", "#e377c2"]


class InputError(SystemExit):
    """Bad or empty input file; carries a nonzero exit status."""

    def __init__(self, message: str):
        super().__init__(f"error: {message}")


def read_csv(path, columns: list[str]) -> list[dict]:
    path = Path(path)
    if not path.is_file():
        raise InputError(f"no such input file: {path}")
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise InputError(f"{path}: empty file")
        if list(reader.fieldnames) != columns:
            raise InputError(f"{path}: expected columns {','.join(columns)}")
        rows = list(reader)
    if not rows:
        raise InputError(f"{path}: no data rows")
    return rows


def parse_float(row: dict, key: str, path) -> float:
    try:
        return float(row[key])
    except ValueError:
        raise InputError(f"{path}: non-numeric {key} value {row[key]!r}") from None


def save_figure(fig, path) -> None:
    """Write the figure without any timestamp metadata, then close it."""
    path = Path(path)
    suffix = path.suffix.lower()
    metadata = {}
    if suffix == ".svg":
        metadata = {"Date": None}
    elif suffix == ".pdf":
        metadata = {"CreationDate": None}
    fig.savefig(path, metadata=metadata, bbox_inches="tight")
    plt.close(fig)


def policy_order(rows: list[dict]) -> list[str]:
    seen: list[str] = []
    for row in rows:
        if row["policy"] not in seen:
            seen.append(row["policy"])
    return seen
