"""User-by-action allocation shares as checkpoint heatmaps.

Reads an allocation.csv produced by the supplybandit CLI and renders one
panel per (policy, checkpoint): a user x action grid colored by the share
of the action's initial stock each user consumed. Shares must lie in
[0, 1]; all-zero grids are legal. Styling is fixed so output bytes depend
only on the input.
"""

from __future__ import annotations

import argparse
from collections import defaultdict

import matplotlib.pyplot as plt
import numpy as np

from supplyplots.common import (
    ALLOCATION_COLUMNS,
    STYLE,
    InputError,
    parse_float,
    policy_order,
    read_csv,
    save_figure,
)


def build_grids(rows: list[dict], source: str, policy_filter: str | None):
    cells = defaultdict(dict)
    n_users = 0
    n_actions = 0
    for row in rows:
        if policy_filter is not None and row["policy"] != policy_filter:
            continue
        share = parse_float(row, "share", source)
        if not 0.0 <= share <= 1.0:
            raise InputError(f"{source}: share {share} outside [0, 1]")
        user, action = int(row["user"]), int(row["action"])
        n_users = max(n_users, user + 1)
        n_actions = max(n_actions, action + 1)
        cells[(row["policy"], int(row["checkpoint_t"]))][(user, action)] = share
    if not cells:
        raise InputError(f"{source}: no allocation rows to plot")
    grids = {}
    for key, entries in cells.items():
        grid = np.zeros((n_users, n_actions))
        for (user, action), share in entries.items():
            grid[user, action] = share
        grids[key] = grid
    return grids


def build_figure(rows: list[dict], source: str = "allocation.csv", policy: str | None = None):
    grids = build_grids(rows, source, policy)
    policies = [p for p in policy_order(rows) if any(k[0] == p for k in grids)]
    checkpoints = sorted({t for _, t in grids})

    with plt.rc_context(STYLE):
        fig, axes = plt.subplots(
            len(policies),
            len(checkpoints),
            figsize=(2.6 * len(checkpoints), 2.4 * len(policies)),
            squeeze=False,
        )
        for r, pol in enumerate(policies):
            for c, t in enumerate(checkpoints):
                ax = axes[r][c]
                grid = grids.get((pol, t))
                if grid is None:
                    grid = np.zeros_like(next(iter(grids.values())))
                image = ax.imshow(grid, vmin=0.0, vmax=1.0, cmap="viridis", aspect="auto")
                ax.set_title(f"{pol}, t={t}", fontsize=9)
                ax.set_xlabel("action")
                ax.set_ylabel("user")
                ax.grid(False)
        fig.colorbar(image, ax=[ax for row in axes for ax in row], label="share of initial stock")
    return fig


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--input", required=True, help="allocation.csv path")
    parser.add_argument("--output", required=True, help="figure file (.png/.svg/.pdf)")
    parser.add_argument("--policy", default=None, help="only plot this policy's panels")
    args = parser.parse_args(argv)
    rows = read_csv(args.input, ALLOCATION_COLUMNS)
    fig = build_figure(rows, source=args.input, policy=args.policy)
    save_figure(fig, args.output)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
