"""supplybandit: contextual bandit simulation with per-item limited supply."""

from supplybandit.core import (
    ActionSet,
    InventoryState,
    LoggedDataset,
    LoggedTuple,
    Trajectory,
    UserPopulation,
    available_actions,
    update_inventory,
)
from supplybandit.reward import RewardEstimate, RewardModel
from supplybandit.policies import (
    GreedyPolicy,
    MixedSupplyPolicy,
    RelativeGapPolicy,
    SoftmaxPolicy,
)
from supplybandit.sim import EnvironmentSpec, ValueEstimate

__version__ = "0.1.0"

__all__ = [
    "ActionSet",
    "EnvironmentSpec",
    "GreedyPolicy",
    "InventoryState",
    "LoggedDataset",
    "LoggedTuple",
    "MixedSupplyPolicy",
    "RelativeGapPolicy",
    "RewardEstimate",
    "RewardModel",
    "SoftmaxPolicy",
    "Trajectory",
    "UserPopulation",
    "ValueEstimate",
    "available_actions",
    "update_inventory",
]
