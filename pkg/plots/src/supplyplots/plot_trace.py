"""Per-timestep relative policy value.

Reads a trace.csv produced by the supplybandit CLI and draws each
non-baseline policy's relative cumulative value over rounds, with a dashed
reference at 1. Data points are rendered exactly as read, in time order.
Styling is fixed so output bytes depend only on the input.
"""

from __future__ import annotations

import argparse
from collections import defaultdict

import matplotlib.pyplot as plt

from supplyplots.common import (
    COLORS,
    STYLE,
    TRACE_COLUMNS,
    InputError,
    parse_float,
    policy_order,
    read_csv,
    save_figure,
)


def build_figure(rows: list[dict], source: str = "trace.csv"):
    series = defaultdict(list)
    for row in rows:
        if row["relative_to_greedy"] == "":
            continue
        series[row["policy"]].append((int(row["t"]), parse_float(row, "relative_to_greedy", source)))
    policies = [p for p in policy_order(rows) if p in series and p != "greedy"]
    if not policies:
        raise InputError(f"{source}: no policies with relative values to plot")

    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(6.0, 4.0))
        for i, policy in enumerate(policies):
            points = sorted(series[policy])
            ax.plot(
                [t for t, _ in points],
                [v for _, v in points],
                color=COLORS[i % len(COLORS)],
                label=policy,
            )
        ax.axhline(1.0, color="gray", linestyle="--", linewidth=1)
        ax.set_xlabel("round")
        ax.set_ylabel("relative policy value")
        ax.legend()
        fig.tight_layout()
    return fig


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--input", required=True, help="trace.csv path")
    parser.add_argument("--output", required=True, help="figure file (.png/.svg/.pdf)")
    args = parser.parse_args(argv)
    rows = read_csv(args.input, TRACE_COLUMNS)
    fig = build_figure(rows, source=args.input)
    save_figure(fig, args.output)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
