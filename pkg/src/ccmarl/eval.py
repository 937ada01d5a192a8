"""Evaluation harnesses: play against random seats, three-way matches, heatmaps.

Every game draws from its own RNG derived from ``(seed, game index)``, so
results do not depend on how games are spread over worker processes.
"""

from __future__ import annotations

import csv
import io
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional, Sequence

import numpy as np

from .agents import ConfigurationError, PolicyAgent, RandomAgent
from .env import RewardScheme, reward_for
from .rules import Status, initial_state
from .tables import NUM_PLAYERS, board_tables

EVAL_GAMES = 30
EVAL_TURN_LIMIT = 150
MATCH_GAMES = 20
MATCH_TURN_LIMIT = 200
HEATMAP_GAMES = 100


def game_rngs(seed: int, games: int):
    return [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(games)]


def game_seeds(seed: int, games: int) -> List[int]:
    return [int(s.generate_state(1)[0]) for s in np.random.SeedSequence(seed).spawn(games)]


def play_game(agents: Sequence, n: int, turn_limit: int, rng, scheme=RewardScheme.POSITIVE_SUM,
              starting_player: int = 0, observer=None):
    """Play one game to the end. Returns ``(final_state, total_rewards[6])``.

    ``observer(state)`` is called after every completed turn.
    """
    scheme = RewardScheme.parse(scheme)
    s = initial_state(n, turn_limit, starting_player)
    totals = np.zeros(NUM_PLAYERS)
    if observer is not None:
        observer(s)
    while s.running:
        p = s.current
        abs_codes, legal = s.legal_codes(player_frame=True)
        i = agents[p].choose(s, abs_codes, legal, rng)
        src, dst = s.apply_code(int(abs_codes[i]))
        reward_for(n, p, src, dst, s.status, s.winner, scheme, out=totals)
        if observer is not None and s.current != p:
            observer(s)
    return s, totals


@dataclass
class GameRecord:
    game: int
    seed: int
    seats: List[str]
    winner: int  # seat, -1 when truncated
    turns: int  # completed player-turns in total
    eval_turns: int  # turns taken by the evaluated seat (-1 when not applicable)
    eval_reward: float = 0.0


@dataclass
class EvalReport:
    games: int
    wins: dict
    truncated: int
    win_rate_incl: float
    win_rate_decided: float
    lengths: List[int]
    mean_length: float
    mean_win_length: float
    mean_reward: float
    records: List[GameRecord] = field(default_factory=list)

    @property
    def win_rate(self) -> float:
        return self.win_rate_incl

    def summary(self) -> dict:
        return {
            "games": self.games,
            "wins": sum(self.wins.values()) if self.wins else 0,
            "truncated": self.truncated,
            "win_rate_incl": self.win_rate_incl,
            "win_rate_decided": self.win_rate_decided,
            "mean_length": self.mean_length,
            "mean_win_length": self.mean_win_length,
            "mean_reward": self.mean_reward,
        }


def _eval_game(args):
    policy, g, seed, n, turn_limit, mode, scheme = args
    seat = g % NUM_PLAYERS
    agents = [RandomAgent() for _ in range(NUM_PLAYERS)]
    agents[seat] = PolicyAgent(policy, seat=None, mode=mode) if policy is not None else RandomAgent()
    rng = np.random.default_rng(seed)
    s, totals = play_game(agents, n, turn_limit, rng, scheme)
    labels = ["random"] * NUM_PLAYERS
    labels[seat] = "eval"
    winner = s.winner if s.status is Status.WON else -1
    return GameRecord(g, seed, labels, winner, s.turn_count, s.player_turns[seat], float(totals[seat]))


def _map(fn, items, workers):
    if workers and workers > 1 and len(items) > 1:
        with ProcessPoolExecutor(workers) as ex:
            return list(ex.map(fn, items, chunksize=max(1, len(items) // (4 * workers))))
    return [fn(x) for x in items]


def evaluate_vs_random(policy, games: int = EVAL_GAMES, turn_limit: int = EVAL_TURN_LIMIT, seed: int = 0,
                       mode: str = "sample", n: Optional[int] = None, scheme=RewardScheme.POSITIVE_SUM,
                       workers: int = 1) -> EvalReport:
    """One evaluated seat against five uniformly random seats.

    The evaluated seat rotates with the game index, so multi-head policies
    are exercised through all six of their heads. ``policy=None`` evaluates a
    random agent in that seat (a baseline).
    """
    if games < 1:
        raise ValueError("games must be >= 1")
    if n is None:
        n = policy.n
    seeds = game_seeds(seed, games)
    records = _map(_eval_game, [(policy, g, seeds[g], n, turn_limit, mode, scheme) for g in range(games)],
                   workers)
    return summarize_eval(records, games)


def summarize_eval(records: List[GameRecord], games: int) -> EvalReport:
    won = [r for r in records if r.winner >= 0 and r.seats[r.winner] == "eval"]
    decided = [r for r in records if r.winner >= 0]
    lengths = [r.eval_turns for r in records]
    win_lengths = [r.eval_turns for r in won]
    return EvalReport(
        games=games,
        wins={"eval": len(won)},
        truncated=games - len(decided),
        win_rate_incl=len(won) / games,
        win_rate_decided=len(won) / len(decided) if decided else 0.0,
        lengths=lengths,
        mean_length=float(np.mean(lengths)),
        mean_win_length=float(np.mean(win_lengths)) if win_lengths else float("nan"),
        mean_reward=float(np.mean([r.eval_reward for r in records])),
        records=records,
    )


# ----------------------------------------------------------------------------- matches
@dataclass
class MatchReport:
    names: List[str]
    games: int
    wins: List[int]
    truncated: int
    win_share: List[float]
    mean_win_length: List[float]
    records: List[GameRecord] = field(default_factory=list)

    def summary(self) -> dict:
        return {name: {"wins": w, "win_share": s, "mean_win_length": m}
                for name, w, s, m in zip(self.names, self.wins, self.win_share, self.mean_win_length)}


def _match_game(args):
    policies, names, g, seed, n, turn_limit, mode = args
    rng = np.random.default_rng(seed)
    owners = rng.permutation(np.repeat(np.arange(len(policies)), NUM_PLAYERS // len(policies)))
    agents = [PolicyAgent(policies[o], mode=mode) for o in owners]
    s, _ = play_game(agents, n, turn_limit, rng)
    winner = s.winner if s.status is Status.WON else -1
    turns = s.player_turns[winner] if winner >= 0 else -1
    return GameRecord(g, seed, [names[o] for o in owners], winner, s.turn_count, turns)


def head_to_head(policy_a, policy_b, policy_c, games: int = MATCH_GAMES, turn_limit: int = MATCH_TURN_LIMIT,
                 seed: int = 0, names=("A", "B", "C"), mode: str = "sample", workers: int = 1) -> MatchReport:
    """Two seats per architecture, seats shuffled uniformly every game.

    A seat plays through its own seat's parameters in its architecture.
    Truncated games count as a win for no one.
    """
    policies = [policy_a, policy_b, policy_c]
    if len({p.n for p in policies}) != 1:
        raise ConfigurationError("all policies must share one board size")
    n = policies[0].n
    seeds = game_seeds(seed, games)
    names = list(names)
    records = _map(_match_game, [(policies, names, g, seeds[g], n, turn_limit, mode) for g in range(games)],
                   workers)
    wins = [0] * len(policies)
    lengths = [[] for _ in policies]
    for r in records:
        if r.winner >= 0:
            k = names.index(r.seats[r.winner])
            wins[k] += 1
            lengths[k].append(r.eval_turns)
    truncated = sum(r.winner < 0 for r in records)
    return MatchReport(names, games, wins, truncated, [w / games for w in wins],
                       [float(np.mean(x)) if x else float("nan") for x in lengths], records)


# ----------------------------------------------------------------------------- heatmaps
@dataclass
class HeatmapGrid:
    n: int
    snapshot_turns: List[int]
    counts: np.ndarray  # int64[len(snapshot_turns), G, G]
    games: int

    def target_mass(self) -> np.ndarray:
        """Fraction of evaluated-player pegs in its target corner per snapshot."""
        t = board_tables(self.n)
        flag = t.target_flag[0].reshape(t.g, t.g)
        per = self.games * t.pegs_per_player
        return (self.counts * flag).sum(axis=(1, 2)) / per


def _heatmap_game(args):
    policy, g, seed, n, turns, turn_limit, mode = args
    t = board_tables(n)
    seat = g % NUM_PLAYERS
    agents = [RandomAgent() for _ in range(NUM_PLAYERS)]
    agents[seat] = PolicyAgent(policy, mode=mode) if policy is not None else RandomAgent()
    rng = np.random.default_rng(seed)
    counts = np.zeros((len(turns), t.ncell), np.int64)
    pending = list(range(len(turns)))

    def snap(s):
        done = s.player_turns[seat]
        while pending and turns[pending[0]] <= done:
            counts[pending.pop(0), t.to_canon[seat, s.pegs[seat]]] += 1

    s, _ = play_game(agents, n, turn_limit, rng, observer=snap)
    for k in pending:  # game ended first: use the final position
        counts[k, t.to_canon[seat, s.pegs[seat]]] += 1
    return counts


def collect_heatmaps(policy, games: int = HEATMAP_GAMES, snapshot_turns=(0, 5, 10, 15, 20), seed: int = 0,
                     turn_limit: int = EVAL_TURN_LIMIT, n: Optional[int] = None, mode: str = "sample",
                     workers: int = 1) -> HeatmapGrid:
    """Where the evaluated player's pegs sit after it completes each snapshot turn.

    Counts are in the evaluated player's own frame (its home corner on top).
    """
    turns = list(snapshot_turns)
    if games < 1:
        raise ValueError("games must be >= 1")
    if turns != sorted(turns):
        raise ValueError("snapshot turns must be ascending")
    if n is None:
        n = policy.n
    t = board_tables(n)
    seeds = game_seeds(seed, games)
    parts = _map(_heatmap_game, [(policy, g, seeds[g], n, turns, turn_limit, mode) for g in range(games)],
                 workers)
    total = np.sum(parts, axis=0)
    return HeatmapGrid(n, turns, total.reshape(len(turns), t.g, t.g), games)


# ----------------------------------------------------------------------------- export
def report_table(report) -> str:
    """Per-game records then summary rows, tab separated."""
    buf = io.StringIO()
    w = csv.writer(buf, delimiter="\t", lineterminator="\n")
    w.writerow(["game", "seed", "seats", "winner", "turns", "winner_turns" if isinstance(report, MatchReport)
                else "eval_turns", "eval_reward"])
    for r in report.records:
        w.writerow([r.game, r.seed, ",".join(r.seats), r.winner, r.turns, r.eval_turns, f"{r.eval_reward:.6f}"])
    if isinstance(report, MatchReport):
        for name, wins, share, ml in zip(report.names, report.wins, report.win_share, report.mean_win_length):
            w.writerow(["#summary", name, wins, f"{share:.6f}", f"{ml:.4f}"])
        w.writerow(["#summary", "truncated", report.truncated])
    else:
        for k, v in report.summary().items():
            w.writerow(["#summary", k, v if isinstance(v, int) else f"{v:.6f}"])
    return buf.getvalue()


def write_heatmaps(grid: HeatmapGrid, out_dir) -> List[Path]:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = []
    for k, turn in enumerate(grid.snapshot_turns):
        path = out_dir / f"turn_{turn:03d}.csv"
        np.savetxt(path, grid.counts[k], fmt="%d", delimiter=",")
        paths.append(path)
    return paths
