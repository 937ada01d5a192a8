"""Agent-facing environment: rotated observations, flat actions, masks, rewards.

Everything an agent sees or sends is expressed in its own rotated frame,
with its home corner at the top. Observations are 8 stacked binary layers
over the (4N+1)^2 grid, flattened layer-major then row-major:

    0     acting player's pegs
    1-5   the other players, clockwise from the acting player
    6     cells the acting peg jumped away from this turn
    7     the acting peg, if the previous submove this turn was a jump

Action ``a = ((i*G + j)*6 + dir)*2 + is_jump`` for grid cell (i, j) with
G = 4N+1; the final index ``12*G*G`` is end-turn.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Optional

import numpy as np

from . import kernels
from .hexgrid import CubeCoord, axial_to_grid, grid_size, grid_to_axial, rotate60cw
from .rules import (
    END_CODE,
    BoardState,
    IllegalSubmove,
    Kind,
    Status,
    Submove,
    code_from_submove,
    initial_state,
)
from .tables import NUM_PLAYERS, board_tables

GOAL_BONUS = 0.1
MOVE_BONUS = 0.001


class RewardScheme(Enum):
    SPARSE = "sparse"
    SPARSE_GOAL = "sparse-goal"
    SPARSE_MOVE = "sparse-move"
    POSITIVE_SUM = "positive-sum"

    @property
    def goal_bonus(self) -> bool:
        return self in (RewardScheme.SPARSE_GOAL, RewardScheme.POSITIVE_SUM)

    @property
    def move_bonus(self) -> bool:
        return self in (RewardScheme.SPARSE_MOVE, RewardScheme.POSITIVE_SUM)

    @property
    def losing_penalty(self) -> bool:
        return self is not RewardScheme.POSITIVE_SUM

    @classmethod
    def parse(cls, value) -> "RewardScheme":
        if isinstance(value, cls):
            return value
        return cls(str(value).lower().replace("_", "-"))


DEFAULT_SCHEME = RewardScheme.POSITIVE_SUM


@dataclass
class StepResult:
    rewards: np.ndarray  # float64[6]
    terminated: bool
    truncated: bool
    agent: int  # next acting player


def obs_dim(n: int) -> int:
    return 8 * grid_size(n) ** 2


def act_dim(n: int) -> int:
    return 12 * grid_size(n) ** 2 + 1


# --------------------------------------------------------------------------- frames
def canonicalize(s: BoardState, p: int) -> BoardState:
    """Rotate the whole position so player ``p`` sits at the top as player 0.

    Coordinates turn by -p sixths and player labels shift by -p, so the
    result seen by player 0 is what ``p`` sees in ``s``.
    """
    t = s.tables
    rot = t.to_canon[p]
    cells = {}
    for q in range(NUM_PLAYERS):
        cells[(q - p) % NUM_PLAYERS] = rot[s.pegs[q]].tolist()
    out = BoardState.from_cells(s.n, cells, current=(s.current - p) % NUM_PLAYERS, turn_limit=s.turn_limit)
    out.turn_count = s.turn_count
    out.submove_count = s.submove_count
    out.player_turns = [s.player_turns[(q + p) % NUM_PLAYERS] for q in range(NUM_PLAYERS)]
    out.chain = [int(rot[c]) for c in s.chain]
    out.visited[out.chain] = 1
    out.status = s.status
    out.winner = None if s.winner is None else (s.winner - p) % NUM_PLAYERS
    return out


def encode_observation(s: BoardState, p: Optional[int] = None, out: Optional[np.ndarray] = None) -> np.ndarray:
    """Flat binary observation for player ``p`` (default: the player to act).

    Jump layers are only filled for the player to act.
    """
    if p is None:
        p = s.current
    t = s.tables
    if out is None:
        out = np.empty(t.obs_dim, np.float32)
    chain = np.asarray(s.chain if p == s.current else (), dtype=np.int32)
    kernels.encode_obs(s.board, p, t.to_canon[p], chain, len(chain), out)
    return out


def observation_indices(s: BoardState, p: Optional[int] = None) -> np.ndarray:
    """Indices of the ones in :func:`encode_observation`."""
    if p is None:
        p = s.current
    t = s.tables
    chain = np.asarray(s.chain if p == s.current else (), dtype=np.int32)
    out = np.empty(int((s.board >= 0).sum()) + len(chain), np.int32)
    k = kernels.obs_indices(s.board, p, t.to_canon[p], chain, len(chain), out)
    return out[:k]


# --------------------------------------------------------------------------- actions
def encode_action(q: int, r: int, d: int, is_jump: bool, n: int) -> int:
    if not 0 <= d < 6:
        raise ValueError(f"direction {d} outside [0, 5]")
    i, j = axial_to_grid(CubeCoord(q, r, -q - r), n)
    return ((i * grid_size(n) + j) * 6 + d) * 2 + int(bool(is_jump))


def decode_action(a: int, n: int) -> Submove:
    """Flat action index -> submove, both in the acting player's frame."""
    g = grid_size(n)
    end = 12 * g * g
    if not 0 <= a <= end:
        raise ValueError(f"action {a} outside [0, {end}]")
    if a == end:
        return Submove.end()
    cell, rest = divmod(a, 12)
    d, jump = divmod(rest, 2)
    src = grid_to_axial(cell // g, cell % g, n)
    return Submove(Kind.JUMP if jump else Kind.MOVE, src, d)


def end_action(n: int) -> int:
    return 12 * grid_size(n) ** 2


def action_to_code(a: int, p: int, n: int) -> int:
    """Rotated-frame action of player ``p`` -> absolute submove code."""
    t = board_tables(n)
    if a == t.end_action:
        return END_CODE
    cell, rest = divmod(a, 12)
    d, jump = divmod(rest, 2)
    src = int(t.from_canon[p, cell])
    if src < 0:
        return -2  # off the star; never legal
    return (src * 6 + (d - p) % 6) * 2 + jump


def to_absolute(m: Submove, p: int) -> Submove:
    if m.kind is Kind.END:
        return m
    return Submove(m.kind, rotate60cw(m.src, p), (m.dir - p) % 6)


def legal_actions(s: BoardState) -> np.ndarray:
    """Legal flat actions for the player to act (rotated frame)."""
    return s.legal_codes(player_frame=True)[1]


def action_mask(s: BoardState) -> np.ndarray:
    mask = np.zeros(s.tables.act_dim, np.uint8)
    mask[legal_actions(s)] = 1
    return mask


# --------------------------------------------------------------------------- rewards
def reward_for(n, mover, src, dst, status, winner, scheme, out=None):
    """Per-player reward of one applied submove given its absolute cells."""
    t = board_tables(n)
    rewards = np.zeros(NUM_PLAYERS) if out is None else out
    if src >= 0:
        bonus = 0.0
        if scheme.move_bonus:
            dr = t.canon_r[mover, dst] - t.canon_r[mover, src]
            if dr > 0:
                bonus += MOVE_BONUS
            elif dr < 0:
                bonus -= MOVE_BONUS
        if scheme.goal_bonus:
            tf = t.target_flag[mover]
            bonus += GOAL_BONUS * (int(tf[dst]) - int(tf[src]))
        rewards[mover] += bonus
    if status is Status.WON:
        rewards[winner] += 5 * n
        if scheme.losing_penalty:
            for q in range(NUM_PLAYERS):
                if q != winner:
                    rewards[q] -= n
    return rewards


def compute_rewards(before: BoardState, m: Submove, after: BoardState, scheme=DEFAULT_SCHEME) -> np.ndarray:
    """Rewards for absolute-frame submove ``m`` taking ``before`` to ``after``."""
    scheme = RewardScheme.parse(scheme)
    src = dst = -1
    if m.kind is not Kind.END:
        code = code_from_submove(m, before.n)
        src = code // 12
        t = before.tables
        dst = int((t.jump if m.kind is Kind.JUMP else t.step)[src, m.dir])
    return reward_for(before.n, before.current, src, dst, after.status, after.winner, scheme)


# --------------------------------------------------------------------------- stepping
def step(s: BoardState, a: int, scheme=DEFAULT_SCHEME):
    """Functional step: returns ``(successor, StepResult)`` and leaves ``s`` alone."""
    s2 = s.copy()
    return s2, step_inplace(s2, a, RewardScheme.parse(scheme))


def step_inplace(s: BoardState, a: int, scheme: RewardScheme) -> StepResult:
    if s.status is not Status.RUNNING:
        raise IllegalSubmove("game is over")
    abs_codes, can = s.legal_codes(player_frame=True)
    hit = np.flatnonzero(can == a)
    if hit.size == 0:
        raise IllegalSubmove(f"action {a} is masked out")
    mover = s.current
    src, dst = s.apply_code(int(abs_codes[hit[0]]))
    rewards = reward_for(s.n, mover, src, dst, s.status, s.winner, scheme)
    return StepResult(rewards, s.status is Status.WON, s.status is Status.TRUNCATED, s.current)


class ChineseCheckersEnv:
    """Turn-based six-seat environment; one agent acts per step.

    >>> env = ChineseCheckersEnv(n=2)
    >>> env.reset()
    >>> int(env.action_mask().sum())
    6
    """

    def __init__(self, n: int = 2, scheme=DEFAULT_SCHEME, turn_limit: Optional[int] = None,
                 starting_player: int = 0):
        self.n = n
        self.scheme = RewardScheme.parse(scheme)
        self.turn_limit = turn_limit
        self.starting_player = starting_player
        self.tables = board_tables(n)
        self.state: BoardState = initial_state(n, turn_limit, starting_player)
        self._obs = np.empty(self.tables.obs_dim, np.float32)

    @property
    def agent(self) -> int:
        return self.state.current

    @property
    def done(self) -> bool:
        return not self.state.running

    def reset(self, starting_player: Optional[int] = None):
        if starting_player is not None:
            self.starting_player = starting_player
        self.state = initial_state(self.n, self.turn_limit, self.starting_player)

    def observe(self, p: Optional[int] = None) -> np.ndarray:
        return encode_observation(self.state, p).copy()

    def observe_sparse(self, p: Optional[int] = None) -> np.ndarray:
        return observation_indices(self.state, p)

    def legal_actions(self) -> np.ndarray:
        return legal_actions(self.state)

    def action_mask(self) -> np.ndarray:
        return action_mask(self.state)

    def step(self, a: int) -> StepResult:
        return step_inplace(self.state, int(a), self.scheme)
