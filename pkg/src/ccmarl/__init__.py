"""Six-player Chinese Checkers engine with multi-agent PPO self-play.

Modules
-------
hexgrid     cube coordinates, the star board, rotations, grid indices
rules       board state, legal submoves, jump chains, win and truncation
env         agent-facing observations, actions, masks and rewards
nn          numpy MLP, masked categorical, Adam
ppo         rollouts, GAE, clipped surrogate, the three sharing layouts
agents      random, greedy and policy players
eval        win rates, three-way matches, peg heatmaps
cli         the ``ccmarl`` command
"""

from .env import ChineseCheckersEnv, RewardScheme
from .kernels import BACKEND
from .ppo import PolicySet, PpoConfig, Sharing, Trainer, train
from .rules import BoardState, IllegalSubmove, Submove, initial_state

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "BoardState",
    "ChineseCheckersEnv",
    "IllegalSubmove",
    "PolicySet",
    "PpoConfig",
    "RewardScheme",
    "Sharing",
    "Submove",
    "Trainer",
    "initial_state",
    "train",
]
