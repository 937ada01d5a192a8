import itertools

import numpy as np
import pytest
from conftest import random_states

from ccmarl.agents import (
    ConfigurationError,
    GreedyAgent,
    PolicyAgent,
    RandomAgent,
    greedy_act,
    policy_act,
    random_act,
)
from ccmarl.env import action_mask, step
from ccmarl.hexgrid import cube, hex_distance
from ccmarl.ppo import PolicySet
from ccmarl.rules import BoardState, home_cells, initial_state, target_cells


def _solo(n):
    s = BoardState.from_placement(n, {0: sorted(home_cells(0, n))})
    jumps = 0
    while s.running:
        a = greedy_act(s)
        if s.current == 0 and a % 2 == 1 and a != s.tables.end_action:
            jumps += 1
        s, _ = step(s, a)
    return s, jumps


def test_greedy_solo_takes_twenty_turns():
    s, jumps = _solo(2)
    assert s.winner == 0
    assert s.player_turns[0] == 20
    assert jumps == 0


def test_twenty_is_the_minimal_walking_distance():
    """Cheapest assignment of home pegs to target cells, by brute force."""
    home = sorted(home_cells(0, 2))
    target = sorted(target_cells(0, 2))
    best = min(sum(hex_distance(h, t) for h, t in zip(home, perm)) for perm in itertools.permutations(target))
    assert best == 20
    assert sorted(hex_distance(h, t) for h, t in zip(home, target)) in ([6, 6, 8], [6, 7, 7])


def test_random_frequencies_within_three_sigma():
    rng = np.random.default_rng(0)
    mask = action_mask(initial_state(2))
    legal = np.flatnonzero(mask)
    draws = 100_000
    picks = np.array([random_act(mask, rng) for _ in range(draws)])
    counts = np.array([(picks == a).sum() for a in legal])
    sigma = np.sqrt(draws * (1 / 6) * (5 / 6))
    assert counts.sum() == draws
    assert np.all(np.abs(counts - draws / 6) <= 3 * sigma)


def test_random_single_legal_action():
    mask = np.zeros(973, np.uint8)
    mask[17] = 1
    rng = np.random.default_rng(1)
    assert {random_act(mask, rng) for _ in range(50)} == {17}


def test_agents_only_choose_legal_actions():
    policy = PolicySet.init(2, "shared-encoder", np.random.default_rng(0))
    agents = [RandomAgent(), GreedyAgent(), PolicyAgent(policy), PolicyAgent(policy, mode="argmax")]
    rng = np.random.default_rng(3)
    for k, s in enumerate(random_states(2, 4000, seed=8)):
        mask = action_mask(s)
        a = agents[k % len(agents)].act(s, rng)
        assert mask[a] == 1


def test_random_agent_legality_fuzz():
    rng = np.random.default_rng(4)
    agent = RandomAgent()
    checked = 0
    for s in random_states(2, 100_000, seed=9):
        if checked % 7 == 0:
            assert action_mask(s)[agent.act(s, rng)] == 1
        checked += 1
    assert checked == 100_000


def test_greedy_is_deterministic_and_never_jumps_from_start():
    s = initial_state(2)
    a = greedy_act(s)
    assert a == greedy_act(s.copy())
    assert a % 2 == 0


def test_policy_modes():
    policy = PolicySet.init(2, "fully-shared", np.random.default_rng(0))
    s = initial_state(2)
    assert policy_act(s, policy, "argmax") == policy_act(s, policy, "argmax")
    seq_a = [policy_act(s, policy, "sample", np.random.default_rng(5)) for _ in range(3)]
    seq_b = [policy_act(s, policy, "sample", np.random.default_rng(5)) for _ in range(3)]
    assert seq_a == seq_b


def test_policy_single_legal_action_both_modes():
    # a boxed-in tip peg: neither neighbour nor jump landing is free, so only the pass remains
    blockers = [cube(1, -3), cube(2, -3), cube(0, -2), cube(2, -2)]
    s = BoardState.from_placement(2, {0: [cube(2, -4)], 1: blockers})
    assert np.flatnonzero(action_mask(s)).tolist() == [s.tables.end_action]
    policy = PolicySet.init(2, "fully-shared", np.random.default_rng(0))
    for mode in ("sample", "argmax"):
        assert policy_act(s, policy, mode, np.random.default_rng(0)) == s.tables.end_action


def test_policy_board_mismatch():
    policy = PolicySet.init(1, "fully-shared", np.random.default_rng(0))
    with pytest.raises(ConfigurationError):
        policy_act(initial_state(2), policy)
    with pytest.raises(ConfigurationError):
        PolicyAgent(policy).act(initial_state(2), np.random.default_rng(0))
