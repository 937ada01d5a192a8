"""The ``ccmarl`` command.

Every subcommand accepts ``--config FILE`` with flat ``key = value`` lines
whose keys are the long flag names. Values given on the command line win
over the file, and the file wins over built-in defaults.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import pickle
import sys
import time
from pathlib import Path
from typing import Dict, List, Optional

import numpy as np

from . import checkpoint, eval as evaluation, gamelog
from .agents import ConfigurationError, GreedyAgent, PolicyAgent, RandomAgent
from .env import RewardScheme
from .ppo import PpoConfig, Sharing, Trainer
from .rules import IllegalSubmove, default_turn_limit, divide, initial_state, perft, submove_from_code

log = logging.getLogger("ccmarl")

METRICS_COLUMNS = ["iteration", "env_steps", "episodes", "mean_return", "loss", "policy_loss", "value_loss",
                   "entropy", "approx_kl", "clip_frac", "eval_win_rate_incl", "eval_win_rate_decided",
                   "eval_mean_length", "eval_mean_win_length"]


class CliError(Exception):
    pass


# ----------------------------------------------------------------------------- config files
def read_config(path) -> Dict[str, str]:
    """Parse ``key = value`` lines. ``#`` starts a comment."""
    out = {}
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise CliError(f"cannot read config {path}: {exc.strerror}") from None
    for no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise CliError(f"{path}:{no}: expected 'key = value'")
        key, value = (x.strip() for x in line.split("=", 1))
        out[key.replace("-", "_")] = value
    return out


def write_config(path: Path, values: dict):
    lines = [f"{k} = {v}" for k, v in sorted(values.items()) if k not in ("func", "config", "command", "resume", "verbose") and v is not None]
    path.write_text("\n".join(lines) + "\n")


def _apply_config(sub: argparse.ArgumentParser, values: Dict[str, str]):
    actions = {a.dest: a for a in sub._actions}
    defaults = {}
    for key, raw in values.items():
        a = actions.get(key)
        if a is None or key in ("help", "config"):
            raise CliError(f"unknown config key {key!r}")
        if isinstance(a, argparse._StoreTrueAction):
            defaults[key] = raw.lower() in ("1", "true", "yes", "on")
        elif a.type is not None:
            try:
                defaults[key] = a.type(raw)
            except (ValueError, argparse.ArgumentTypeError) as exc:
                raise CliError(f"config key {key}: {exc}") from None
        else:
            defaults[key] = raw
        if a.choices is not None and defaults[key] not in a.choices:
            raise CliError(f"config key {key}: {raw!r} is not one of {sorted(a.choices)}")
    sub.set_defaults(**defaults)


def _turns(text: str) -> List[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _positive(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return v


# ----------------------------------------------------------------------------- train
def _metrics_row(rec, report) -> List[str]:
    s = rec.stats
    row = [rec.iteration, rec.env_steps, rec.episodes, float(np.mean(rec.mean_reward))]
    row += [s.get(k, float("nan")) for k in ("loss", "policy_loss", "value_loss", "entropy", "approx_kl",
                                              "clip_frac")]
    if report is None:
        row += [float("nan")] * 4
    else:
        row += [report.win_rate_incl, report.win_rate_decided, report.mean_length, report.mean_win_length]
    return [f"{v:.6g}" if isinstance(v, float) else str(v) for v in row]


def cmd_train(args) -> int:
    out = Path(args.out)
    if args.resume:
        return _resume(args)
    cfg = PpoConfig(clip=args.clip, gamma=args.gamma, lam=args.lam, entropy_coef=args.entropy_coef,
                    value_coef=args.value_coef, epochs=args.epochs, minibatch=args.minibatch, steps=args.steps,
                    iterations=args.iterations, lr=args.lr, max_grad_norm=args.max_grad_norm)
    trainer = Trainer(args.n, args.sharing, cfg, args.seed, args.scheme, args.turn_limit)
    (out / "checkpoints").mkdir(parents=True, exist_ok=True)
    (out / "eval").mkdir(exist_ok=True)
    write_config(out / "config.txt", vars(args))
    (out / "metrics.log").write_text("\t".join(METRICS_COLUMNS) + "\n")
    return _run(args, trainer)


def _resume(args) -> int:
    """Continue a run from its saved trainer; the run's own config.txt applies.

    Only ``--iterations`` and ``--workers`` may differ from the original run.
    """
    out = Path(args.out)
    state_path = out / "trainer.pkl"
    if not state_path.exists():
        raise CliError(f"nothing to resume in {out}")
    with open(state_path, "rb") as fh:
        trainer = pickle.load(fh)
    saved = read_config(out / "config.txt")
    saved["iterations"] = str(args.iterations)
    (out / "config.txt").write_text("".join(f"{k} = {v}\n" for k, v in sorted(saved.items())))
    ns = argparse.Namespace(**vars(args))
    for key in ("eval_every", "eval_games", "eval_turn_limit", "checkpoint_every"):
        if key in saved:
            setattr(ns, key, int(saved[key]))
    return _run(ns, trainer)


def _run(args, trainer: Trainer) -> int:
    out = Path(args.out)
    state_path = out / "trainer.pkl"
    meta_path = out / "run_meta.json"
    meta = json.loads(meta_path.read_text()) if meta_path.exists() else {"sessions": []}
    meta["sessions"].append({"started": time.strftime("%Y-%m-%dT%H:%M:%S"), "from_iteration": trainer.iteration})
    meta_path.write_text(json.dumps(meta, indent=1) + "\n")

    while trainer.iteration < args.iterations:
        rec = trainer.run_iteration()
        report = None
        if args.eval_every and rec.iteration % args.eval_every == 0:
            report = evaluation.evaluate_vs_random(trainer.policy, args.eval_games, args.eval_turn_limit,
                                                   seed=trainer.eval_seed(rec.iteration), workers=args.workers)
            (out / "eval" / f"iter_{rec.iteration:04d}.tsv").write_text(evaluation.report_table(report))
        if rec.iteration % args.checkpoint_every == 0 or rec.iteration == args.iterations:
            checkpoint.save(out / "checkpoints" / f"iter_{rec.iteration:04d}.ckpt", trainer.policy,
                            {"iteration": rec.iteration, "env_steps": rec.env_steps, "seed": trainer.seed})
        with open(out / "metrics.log", "a") as fh:
            fh.write("\t".join(_metrics_row(rec, report)) + "\n")
        tmp = state_path.with_suffix(".tmp")
        with open(tmp, "wb") as fh:
            pickle.dump(trainer, fh)
        tmp.replace(state_path)
        msg = f"iter {rec.iteration:4d}  steps {rec.env_steps:7d}  entropy {rec.stats['entropy']:.3f}"
        if report is not None:
            msg += f"  win {report.win_rate_incl:.2f} (decided {report.win_rate_decided:.2f})"
        print(msg, flush=True)
    meta["sessions"][-1]["finished"] = time.strftime("%Y-%m-%dT%H:%M:%S")
    meta_path.write_text(json.dumps(meta, indent=1) + "\n")
    return 0


# ----------------------------------------------------------------------------- eval / match / heatmap
def _load(path):
    try:
        policy, _ = checkpoint.load(path)
    except FileNotFoundError as exc:
        raise CliError(str(exc)) from None
    except checkpoint.CheckpointError as exc:
        raise CliError(f"{path}: {exc}") from None
    return policy


def _json(d) -> str:
    def clean(v):
        if isinstance(v, dict):
            return {k: clean(x) for k, x in v.items()}
        return None if isinstance(v, float) and v != v else v
    return json.dumps(clean(d))


def _mode(args) -> str:
    return "argmax" if args.deterministic else "sample"


def _emit(text: str, out: Optional[str]):
    if out:
        Path(out).parent.mkdir(parents=True, exist_ok=True)
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def cmd_eval(args) -> int:
    policy = None if args.checkpoint == "random" else _load(args.checkpoint)
    report = evaluation.evaluate_vs_random(policy, args.games, args.turn_limit, args.seed, _mode(args),
                                           n=args.n if policy is None else None, workers=args.workers)
    _emit(evaluation.report_table(report), args.out)
    if args.out:
        print(_json(report.summary()))
    return 0


def cmd_match(args) -> int:
    if len(args.checkpoints) != 3:
        raise CliError("match needs exactly three checkpoints")
    names = args.names.split(",") if args.names else [Path(p).stem for p in args.checkpoints]
    if len(names) != 3 or len(set(names)) != 3:
        raise CliError("--names needs three distinct comma-separated names")
    policies = [_load(p) for p in args.checkpoints]
    report = evaluation.head_to_head(*policies, games=args.games, turn_limit=args.turn_limit, seed=args.seed,
                                     names=names, mode=_mode(args), workers=args.workers)
    _emit(evaluation.report_table(report), args.out)
    if args.out:
        print(_json(report.summary()))
    return 0


def cmd_heatmap(args) -> int:
    policy = _load(args.checkpoint)
    turns = args.turns if 0 in args.turns else [0] + args.turns
    grid = evaluation.collect_heatmaps(policy, args.games, sorted(turns), args.seed, args.turn_limit,
                                       mode=_mode(args), workers=args.workers)
    paths = evaluation.write_heatmaps(grid, args.out)
    mass = grid.target_mass()
    lines = ["turn\ttarget_mass"] + [f"{t}\t{m:.6f}" for t, m in zip(grid.snapshot_turns, mass)]
    (Path(args.out) / "summary.tsv").write_text("\n".join(lines) + "\n")
    for p in paths:
        print(p)
    return 0


# ----------------------------------------------------------------------------- engine tools
def cmd_perft(args) -> int:
    s = initial_state(args.n, args.turn_limit)
    if args.divide:
        for key, count in sorted(divide(s, args.depth).items(), key=lambda kv: str(kv[0])):
            print(f"{key}\t{count}")
        return 0
    for d in range(1, args.depth + 1):
        print(f"{d}\t{perft(s, d)}")
    return 0


def cmd_render(args) -> int:
    try:
        text = sys.stdin.read() if args.log == "-" else Path(args.log).read_text()
    except OSError as exc:
        raise CliError(f"cannot read {args.log}: {exc.strerror}") from None
    try:
        sys.stdout.write(gamelog.render_log(text))
    except gamelog.LogParseError as exc:
        raise CliError(f"{args.log}: {exc}") from None
    return 0


def _make_agent(spec: str):
    if spec == "random":
        return RandomAgent()
    if spec == "greedy":
        return GreedyAgent()
    return PolicyAgent(_load(spec))


def cmd_play(args) -> int:
    specs = args.agents.split(",")
    if len(specs) == 1:
        specs *= 6
    if len(specs) != 6:
        raise CliError("--agents takes one spec or six comma-separated specs")
    agents = [_make_agent(x) for x in specs]
    limit = args.turn_limit or default_turn_limit(args.n)
    rng = np.random.default_rng(args.seed)
    s = initial_state(args.n, limit)
    moves = []
    while s.running:
        p = s.current
        abs_codes, legal = s.legal_codes(player_frame=True)
        code = int(abs_codes[agents[p].choose(s, abs_codes, legal, rng)])
        m = submove_from_code(code, args.n)
        moves.append((p, m))
        s.apply_code(code)
    _emit(gamelog.dumps(gamelog.LogHeader(args.n, limit, 0), moves), args.out)
    if args.out:
        result = f"winner {s.winner}" if s.winner is not None else "truncated"
        print(f"{result} after {s.turn_count} turns")
    return 0


def cmd_serve(args) -> int:
    from .protocol import serve
    serve()
    return 0


# ----------------------------------------------------------------------------- parser
def build_parser() -> argparse.ArgumentParser:
    cores = os.cpu_count() or 1
    parser = argparse.ArgumentParser(prog="ccmarl", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    subs = parser.add_subparsers(dest="command", required=True)

    def sub(name, func, help_):
        p = subs.add_parser(name, help=help_)
        p.add_argument("--config", help="flat key = value file; flags override it")
        p.set_defaults(func=func)
        return p

    p = sub("train", cmd_train, "self-play PPO training")
    p.add_argument("--out", required=False, default="runs/default")
    p.add_argument("--n", type=_positive, default=2)
    p.add_argument("--sharing", default="fully-shared", choices=[s.value for s in Sharing])
    p.add_argument("--scheme", default="positive-sum", choices=[s.value for s in RewardScheme])
    p.add_argument("--turn-limit", type=_positive, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--iterations", type=int, default=100)
    p.add_argument("--steps", type=_positive, default=4000)
    p.add_argument("--epochs", type=_positive, default=4)
    p.add_argument("--minibatch", type=_positive, default=128)
    p.add_argument("--lr", type=float, default=3e-4)
    p.add_argument("--clip", type=float, default=0.2)
    p.add_argument("--gamma", type=float, default=0.99)
    p.add_argument("--lam", type=float, default=0.95)
    p.add_argument("--entropy-coef", type=float, default=0.0)
    p.add_argument("--value-coef", type=float, default=0.5)
    p.add_argument("--max-grad-norm", type=float, default=0.0)
    p.add_argument("--eval-every", type=int, default=1, help="0 disables evaluation")
    p.add_argument("--eval-games", type=_positive, default=evaluation.EVAL_GAMES)
    p.add_argument("--eval-turn-limit", type=_positive, default=evaluation.EVAL_TURN_LIMIT)
    p.add_argument("--checkpoint-every", type=_positive, default=1)
    p.add_argument("--workers", type=_positive, default=1)
    p.add_argument("--resume", action="store_true")

    p = sub("eval", cmd_eval, "one policy against five random seats")
    p.add_argument("--checkpoint", required=True, help="checkpoint file, or 'random' for a baseline")
    p.add_argument("--n", type=_positive, default=2, help="board size for the random baseline")
    p.add_argument("--games", type=_positive, default=evaluation.EVAL_GAMES)
    p.add_argument("--turn-limit", type=_positive, default=evaluation.EVAL_TURN_LIMIT)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--deterministic", action="store_true", help="take the most likely action instead of sampling")
    p.add_argument("--workers", type=_positive, default=cores)
    p.add_argument("--out")

    p = sub("match", cmd_match, "three-way match, two seats per checkpoint")
    p.add_argument("--checkpoints", nargs="+", required=True)
    p.add_argument("--names")
    p.add_argument("--games", type=_positive, default=evaluation.MATCH_GAMES)
    p.add_argument("--turn-limit", type=_positive, default=evaluation.MATCH_TURN_LIMIT)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--deterministic", action="store_true", help="take the most likely action instead of sampling")
    p.add_argument("--workers", type=_positive, default=cores)
    p.add_argument("--out")

    p = sub("heatmap", cmd_heatmap, "peg-position heatmaps against random seats")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--games", type=_positive, default=evaluation.HEATMAP_GAMES)
    p.add_argument("--turns", type=_turns, default=[0, 5, 10, 15, 20])
    p.add_argument("--turn-limit", type=_positive, default=evaluation.EVAL_TURN_LIMIT)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--deterministic", action="store_true", help="take the most likely action instead of sampling")
    p.add_argument("--workers", type=_positive, default=cores)
    p.add_argument("--out", default="heatmaps")

    p = sub("perft", cmd_perft, "count submove sequences from the initial position")
    p.add_argument("--n", type=_positive, default=2)
    p.add_argument("--depth", type=int, default=3)
    p.add_argument("--turn-limit", type=_positive, default=None)
    p.add_argument("--divide", action="store_true", help="per first-submove counts at the given depth")

    p = sub("render", cmd_render, "print a game log as text boards")
    p.add_argument("log", help="game log path, or - for stdin")

    p = sub("play", cmd_play, "play one game and write its log")
    p.add_argument("--agents", default="random", help="random, greedy or a checkpoint path; one or six")
    p.add_argument("--n", type=_positive, default=2)
    p.add_argument("--turn-limit", type=_positive, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")

    sub("serve", cmd_serve, "speak the JSON-lines environment protocol on stdin/stdout")
    return parser


def _subparser(parser: argparse.ArgumentParser, name: str) -> argparse.ArgumentParser:
    for a in parser._actions:
        if isinstance(a, argparse._SubParsersAction):
            return a.choices[name]
    raise KeyError(name)


def main(argv: Optional[List[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.config:
            _apply_config(_subparser(parser, args.command), read_config(args.config))
            args = parser.parse_args(argv)
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                            format="%(levelname)s %(name)s: %(message)s")
        return args.func(args)
    except CliError as exc:
        print(f"ccmarl: error: {exc}", file=sys.stderr)
        return 2
    except (ConfigurationError, IllegalSubmove, ValueError) as exc:
        print(f"ccmarl: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
