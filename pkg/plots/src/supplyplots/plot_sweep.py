"""Relative policy value against the swept parameter.

Reads a summary.csv produced by the supplybandit CLI. Each non-baseline
policy becomes one line of seed-mean relative values with a shaded min-max
band across seeds; a dashed reference marks ratio 1. Styling is fixed
(colors by line index, grid on) so output bytes depend only on the input.
"""

from __future__ import annotations

import argparse
from collections import defaultdict

import matplotlib.pyplot as plt
import numpy as np

from supplyplots.common import (
    COLORS,
    STYLE,
    SUMMARY_COLUMNS,
    InputError,
    parse_float,
    policy_order,
    read_csv,
    save_figure,
)


def build_figure(rows: list[dict], source: str = "summary.csv"):
    ratios = defaultdict(lambda: defaultdict(list))
    for row in rows:
        if row["relative_to_greedy"] == "":
            continue
        value = parse_float(row, "sweep_value", source)
        ratios[row["policy"]][value].append(parse_float(row, "relative_to_greedy", source))
    policies = [p for p in policy_order(rows) if p in ratios and p != "greedy"]
    if not policies:
        raise InputError(f"{source}: no policies with relative values to plot")

    param = rows[0]["sweep_param"]
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(6.0, 4.0))
        for i, policy in enumerate(policies):
            grid = sorted(ratios[policy])
            mean = np.array([np.mean(ratios[policy][v]) for v in grid])
            lo = np.array([np.min(ratios[policy][v]) for v in grid])
            hi = np.array([np.max(ratios[policy][v]) for v in grid])
            color = COLORS[i % len(COLORS)]
            ax.plot(grid, mean, marker="o", color=color, label=policy)
            if any(h > l for l, h in zip(lo, hi)):
                ax.fill_between(grid, lo, hi, color=color, alpha=0.2, linewidth=0)
        ax.axhline(1.0, color="gray", linestyle="--", linewidth=1)
        ax.set_xlabel("parameter" if param == "none" else param)
        ax.set_ylabel("relative policy value")
        ax.legend()
        fig.tight_layout()
    return fig


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--input", required=True, help="summary.csv path")
    parser.add_argument("--output", required=True, help="figure file (.png/.svg/.pdf)")
    args = parser.parse_args(argv)
    rows = read_csv(args.input, SUMMARY_COLUMNS)
    fig = build_figure(rows, source=args.input)
    save_figure(fig, args.output)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
