import numpy as np
import pytest

from ccmarl import eval as ev
from ccmarl.agents import ConfigurationError, GreedyAgent, RandomAgent
from ccmarl.ppo import PolicySet
from ccmarl.rules import Status


@pytest.fixture(scope="module")
def policy():
    return PolicySet.init(2, "shared-encoder", np.random.default_rng(0))


def test_random_baseline_never_wins_at_short_limit():
    rep = ev.evaluate_vs_random(None, games=12, turn_limit=150, seed=1, n=2)
    assert rep.win_rate_incl == 0.0
    assert rep.win_rate_decided == 0.0
    assert rep.truncated == 12
    assert all(0 < x <= 150 for x in rep.lengths)
    assert rep.mean_length == 25.0


def test_eval_seat_rotates_with_game_index(policy):
    rep = ev.evaluate_vs_random(policy, games=7, turn_limit=30, seed=2)
    for r in rep.records:
        assert r.seats.index("eval") == r.game % 6
        assert r.seats.count("eval") == 1


def test_eval_is_deterministic_and_worker_independent(policy):
    a = ev.evaluate_vs_random(policy, games=6, turn_limit=60, seed=3)
    b = ev.evaluate_vs_random(policy, games=6, turn_limit=60, seed=3)
    c = ev.evaluate_vs_random(policy, games=6, turn_limit=60, seed=3, workers=2)
    assert ev.report_table(a) == ev.report_table(b) == ev.report_table(c)
    d = ev.evaluate_vs_random(policy, games=6, turn_limit=60, seed=4)
    assert ev.report_table(a) != ev.report_table(d)


def test_decided_rate_excludes_truncations():
    recs = [
        ev.GameRecord(0, 0, ["eval"] + ["random"] * 5, 0, 100, 17),
        ev.GameRecord(1, 0, ["random", "eval"] + ["random"] * 4, -1, 150, 25),
        ev.GameRecord(2, 0, ["random", "random", "eval"] + ["random"] * 3, 4, 120, 20),
        ev.GameRecord(3, 0, ["random"] * 3 + ["eval"] + ["random"] * 2, -1, 150, 25),
    ]
    rep = ev.summarize_eval(recs, 4)
    assert rep.win_rate_incl == 0.25
    assert rep.win_rate_decided == 0.5
    assert rep.truncated == 2
    assert rep.mean_win_length == 17


def test_rotated_start_rotates_the_winner():
    """The board is symmetric under 60 degree turns: shifting who starts shifts who wins."""
    agents = [GreedyAgent() for _ in range(6)]
    rng = np.random.default_rng(0)
    base, _ = ev.play_game(agents, 2, 400, rng, starting_player=0)
    assert base.status is Status.WON
    for k in range(1, 6):
        s, _ = ev.play_game(agents, 2, 400, rng, starting_player=k)
        assert s.winner == (base.winner + k) % 6
        assert s.turn_count == base.turn_count


def test_match_seating_is_uniform(policy):
    rep = ev.head_to_head(policy, policy, policy, games=600, turn_limit=6, seed=5, names=("a", "b", "c"))
    counts = np.zeros((6, 3))
    for r in rep.records:
        assert sorted(r.seats) == ["a", "a", "b", "b", "c", "c"]
        for seat, name in enumerate(r.seats):
            counts[seat, "abc".index(name)] += 1
    expected = 600 / 3
    chi2 = ((counts - expected) ** 2 / expected).sum()
    # 6 seats x 2 free columns = 12 degrees of freedom; 0.999 quantile is 32.9
    assert chi2 < 32.9
    assert rep.truncated == 600
    assert rep.wins == [0, 0, 0]


def test_match_rejects_mixed_board_sizes(policy):
    small = PolicySet.init(1, "fully-shared", np.random.default_rng(0))
    with pytest.raises(ConfigurationError):
        ev.head_to_head(policy, policy, small, games=1)


def test_heatmap_totals_and_start_position(policy):
    grid = ev.collect_heatmaps(policy, games=12, snapshot_turns=(0, 5, 10, 20), seed=6, turn_limit=60)
    assert grid.counts.shape == (4, 9, 9)
    np.testing.assert_array_equal(grid.counts.sum(axis=(1, 2)), 12 * 3)
    # turn 0 lies on the three home cells of the evaluated player's own frame
    rows = [(q + 4, r + 4) for q, r in ((2, -4), (1, -3), (2, -3))]
    expect = np.zeros((9, 9), int)
    for i, j in rows:
        expect[i, j] = 12
    np.testing.assert_array_equal(grid.counts[0], expect)
    assert grid.target_mass()[0] == 0.0


def test_heatmap_records_final_position_for_short_games(policy):
    grid = ev.collect_heatmaps(policy, games=6, snapshot_turns=(0, 40), seed=7, turn_limit=30)
    np.testing.assert_array_equal(grid.counts.sum(axis=(1, 2)), 18)


def test_heatmap_rejects_unsorted_turns(policy):
    with pytest.raises(ValueError):
        ev.collect_heatmaps(policy, games=1, snapshot_turns=(5, 0))


def test_exports(tmp_path, policy):
    rep = ev.evaluate_vs_random(policy, games=3, turn_limit=30, seed=8)
    text = ev.report_table(rep)
    lines = text.splitlines()
    assert lines[0].split("\t")[:4] == ["game", "seed", "seats", "winner"]
    assert sum(1 for x in lines if x.startswith("#summary")) == len(rep.summary())
    grid = ev.collect_heatmaps(policy, games=2, snapshot_turns=(0, 5), seed=9, turn_limit=30)
    paths = ev.write_heatmaps(grid, tmp_path)
    assert [p.name for p in paths] == ["turn_000.csv", "turn_005.csv"]
    np.testing.assert_array_equal(np.loadtxt(paths[0], delimiter=",", dtype=int), grid.counts[0])


@pytest.mark.parametrize("seed", range(4))
def test_play_game_totals(seed):
    agents = [RandomAgent() for _ in range(6)]
    s, totals = ev.play_game(agents, 1, 40, np.random.default_rng(seed))
    assert not s.running
    losers = [p for p in range(6) if p != s.winner]
    assert np.all(np.abs(totals[losers]) < 1.0)
    if s.status is Status.WON:
        assert totals[s.winner] > 5.0


def test_random_in_the_eval_seat_wins_one_sixth():
    """A random agent in the evaluated seat is indistinguishable from the others."""
    rep = ev.evaluate_vs_random(None, games=600, turn_limit=100, seed=10, n=1)
    decided = rep.games - rep.truncated
    assert decided > 300
    p = 1 / 6
    sigma = np.sqrt(p * (1 - p) / decided)
    assert abs(rep.win_rate_decided - p) < 3 * sigma
