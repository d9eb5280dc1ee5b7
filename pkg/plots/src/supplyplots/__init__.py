"""Figure scripts for supplybandit result CSVs.

Each submodule is a standalone script with --input/--output flags:
plot_sweep (relative value vs. swept parameter with a seed band),
plot_trace (per-timestep relative value), plot_heatmap (user-by-action
allocation shares at checkpoints). Scripts only read the CSVs; nothing is
recomputed and rendering is deterministic.
"""

__version__ = "0.1.0"
