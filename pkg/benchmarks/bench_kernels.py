"""Compiled kernels against the numpy fallback.

    python3 benchmarks/bench_kernels.py [--n 2] [--states 2000] [--repeat 5]

Times move generation and both observation encoders on a fixed set of
positions from random play, then random self-play games end to end.
"""

import argparse
import time

import numpy as np

from ccmarl import kernels
from ccmarl.agents import RandomAgent
from ccmarl.eval import play_game
from ccmarl.rules import initial_state


def sample_states(n, count, seed):
    rng = np.random.default_rng(seed)
    s = initial_state(n, turn_limit=60)
    out = []
    while len(out) < count:
        if not s.running:
            s = initial_state(n, turn_limit=60)
        out.append(s.copy())
        codes = s.legal_codes()
        s.apply_code(int(codes[rng.integers(len(codes))]))
    return out


def bench_kernels(mod, states, repeat):
    t = states[0].tables
    cap = 12 * t.pegs_per_player + 1
    a, c = np.empty(cap, np.int32), np.empty(cap, np.int32)
    dense = np.empty(t.obs_dim, np.float32)
    idx = np.empty(t.obs_dim, np.int32)
    args = []
    for s in states:
        p = s.current
        chain = np.asarray(s.chain, np.int32)
        args.append((s, p, t.to_canon[p], chain))
    times = {}
    for name in ("legal_codes", "encode_obs", "obs_indices"):
        best = np.inf
        for _ in range(repeat):
            t0 = time.perf_counter()
            if name == "legal_codes":
                for s, p, canon, _ in args:
                    mod.legal_codes(s.board, s.pegs[p], t.step, t.jump, s.visited, s.active, p, canon, a, c)
            elif name == "encode_obs":
                for s, p, canon, chain in args:
                    mod.encode_obs(s.board, p, canon, chain, len(chain), dense)
            else:
                for s, p, canon, chain in args:
                    mod.obs_indices(s.board, p, canon, chain, len(chain), idx)
            best = min(best, time.perf_counter() - t0)
        times[name] = best / len(states) * 1e6
    return times


def bench_games(mod, n, games, turn_limit):
    saved = kernels.legal_codes, kernels.encode_obs, kernels.obs_indices
    kernels.legal_codes, kernels.encode_obs, kernels.obs_indices = mod.legal_codes, mod.encode_obs, mod.obs_indices
    try:
        agents = [RandomAgent() for _ in range(6)]
        rng = np.random.default_rng(0)
        turns = 0
        t0 = time.perf_counter()
        for _ in range(games):
            s, _ = play_game(agents, n, turn_limit, rng)
            turns += s.turn_count
        return turns / (time.perf_counter() - t0)
    finally:
        kernels.legal_codes, kernels.encode_obs, kernels.obs_indices = saved


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=2)
    ap.add_argument("--states", type=int, default=2000)
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--games", type=int, default=20)
    args = ap.parse_args(argv)

    backends = [("numpy", kernels.py)]
    if kernels.compiled is not None:
        backends.insert(0, ("cython", kernels.compiled))
    else:
        print("compiled extension not built; timing the fallback only")

    states = sample_states(args.n, args.states, seed=0)
    rows = {name: bench_kernels(mod, states, args.repeat) for name, mod in backends}
    for name, mod in backends:
        rows[name]["turns/s"] = bench_games(mod, args.n, args.games, 150)

    cols = ["legal_codes", "encode_obs", "obs_indices"]
    print(f"N={args.n}, {args.states} positions, best of {args.repeat} (microseconds per call)")
    print(f"{'backend':8s}" + "".join(f"{c:>13s}" for c in cols) + f"{'turns/s':>11s}")
    for name, r in rows.items():
        print(f"{name:8s}" + "".join(f"{r[c]:13.2f}" for c in cols) + f"{r['turns/s']:11.0f}")
    if len(rows) == 2:
        cy, py = rows["cython"], rows["numpy"]
        print(f"{'speedup':8s}" + "".join(f"{py[c] / cy[c]:12.1f}x" for c in cols)
              + f"{cy['turns/s'] / py['turns/s']:10.1f}x")


if __name__ == "__main__":
    main()
