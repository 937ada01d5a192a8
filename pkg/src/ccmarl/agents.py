"""Decision makers that pick a flat action for the player to act.

Agents see the position through :class:`~ccmarl.rules.BoardState` and answer
with a position into the legal-action list, which keeps the game loops free
of mask construction. ``act`` wraps that into a flat action index.
"""

from __future__ import annotations

from typing import Optional

import numpy as np

from .env import observation_indices
from .ppo import PolicySet


class ConfigurationError(ValueError):
    pass


def random_act(mask: np.ndarray, rng) -> int:
    legal = np.flatnonzero(mask)
    return int(legal[rng.integers(legal.size)])


def greedy_act(state) -> int:
    """Action chosen by :class:`GreedyAgent`.

    Jumps are only chosen when no simple move exists and ending the turn is
    not allowed; otherwise a blocked agent ends its turn.
    """
    abs_codes, legal = state.legal_codes(player_frame=True)
    return int(legal[GreedyAgent.pick(state, abs_codes, legal)])


def policy_act(state, policy: PolicySet, mode: str = "sample", rng=None, seat: Optional[int] = None) -> int:
    if policy.n != state.n:
        raise ConfigurationError(f"policy trained for N={policy.n}, board has N={state.n}")
    abs_codes, legal = state.legal_codes(player_frame=True)
    i, _, _ = policy.act_sparse(state.current if seat is None else seat,
                                observation_indices(state), legal, rng, mode)
    return int(legal[i])


class Agent:
    name = "agent"

    def choose(self, state, abs_codes, legal, rng) -> int:
        raise NotImplementedError

    def act(self, state, rng=None) -> int:
        abs_codes, legal = state.legal_codes(player_frame=True)
        return int(legal[self.choose(state, abs_codes, legal, rng)])


class RandomAgent(Agent):
    name = "random"

    def choose(self, state, abs_codes, legal, rng):
        return int(rng.integers(len(legal)))


def _hex_dist(a, b, g: int):
    dq = a // g - b // g
    dr = a % g - b % g
    return np.maximum(np.maximum(np.abs(dq), np.abs(dr)), np.abs(dq + dr))


class GreedyAgent(Agent):
    """Forward-only baseline that walks pegs to the target corner without jumping.

    A simple move is scored by the rows it gains in the mover's frame, then
    by how much closer it brings the peg to the nearest empty target cell;
    the smallest action index breaks the remaining ties. Without the second
    key, ties between the two forward directions steer pegs into a side arm
    of the star and cost extra sideways moves.
    """

    name = "greedy"

    @staticmethod
    def pick(state, abs_codes, legal):
        t = state.tables
        p = state.current
        end = np.flatnonzero(abs_codes == -1)
        targets = t.home[(p + 3) % 6]
        free = targets[state.board[targets] < 0]
        if free.size == 0:
            free = targets
        for jumps in (False, True):
            best, best_key = -1, None
            table = t.jump if jumps else t.step
            for i, (c, a) in enumerate(zip(abs_codes.tolist(), legal.tolist())):
                if c < 0 or bool(c & 1) != jumps:
                    continue
                src = c // 12
                dst = int(table[src, (c >> 1) % 6])
                gain = int(t.canon_r[p, dst] - t.canon_r[p, src])
                closer = int(_hex_dist(src, free, t.g).min() - _hex_dist(dst, free, t.g).min())
                key = (gain, closer, -a)
                if best_key is None or key > best_key:
                    best, best_key = i, key
            if best >= 0:
                return best
            if end.size:
                return int(end[0])
        raise AssertionError("no legal submove")

    def choose(self, state, abs_codes, legal, rng):
        return self.pick(state, abs_codes, legal)


class PolicyAgent(Agent):
    """Neural policy playing through a chosen seat's parameters.

    ``seat`` fixes which encoder/heads are used; by default the seat the
    agent is sitting in.
    """

    name = "policy"

    def __init__(self, policy: PolicySet, seat: Optional[int] = None, mode: str = "sample"):
        if mode not in ("sample", "argmax"):
            raise ConfigurationError(f"unknown policy mode {mode!r}")
        self.policy = policy
        self.seat = seat
        self.mode = mode

    def choose(self, state, abs_codes, legal, rng):
        if self.policy.n != state.n:
            raise ConfigurationError(f"policy trained for N={self.policy.n}, board has N={state.n}")
        seat = state.current if self.seat is None else self.seat
        i, _, _ = self.policy.act_sparse(seat, observation_indices(state), legal, rng, self.mode)
        return i
