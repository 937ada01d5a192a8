"""Line-delimited JSON protocol for driving the environment over stdin/stdout.

One request per line, one response per line, strictly in order. See
``docs/protocol.md`` for the field reference.
"""

from __future__ import annotations

import json
import sys
from typing import IO, Optional

from .env import ChineseCheckersEnv, RewardScheme
from .hexgrid import from_flat
from .rules import IllegalSubmove

PROTOCOL_VERSION = 1


class ProtocolError(ValueError):
    pass


def _bits(a) -> list:
    return [int(x) for x in a]


def _qr(cell, n: int) -> list:
    c = from_flat(int(cell), n)
    return [c.q, c.r]


class Session:
    """Holds one environment between requests."""

    def __init__(self):
        self.env: Optional[ChineseCheckersEnv] = None

    def _need_env(self) -> ChineseCheckersEnv:
        if self.env is None:
            raise ProtocolError("no game in progress; send reset first")
        return self.env

    def _frame(self) -> dict:
        env = self._need_env()
        s = env.state
        return {
            "agent": s.current,
            "terminated": s.status.name == "WON",
            "truncated": s.status.name == "TRUNCATED",
        }

    def reset(self, req: dict) -> dict:
        n = int(req.get("n", 2))
        if n < 1:
            raise ProtocolError("n must be >= 1")
        scheme = RewardScheme.parse(req.get("scheme", "positive-sum"))
        limit = req.get("turn_limit")
        start = int(req.get("starting_player", 0))
        # the engine has no chance elements; the seed is accepted and echoed
        self.env = ChineseCheckersEnv(n, scheme, None if limit is None else int(limit), start % 6)
        out = self._frame()
        out.update(seed=req.get("seed"), obs=_bits(self.env.observe()), mask=_bits(self.env.action_mask()))
        return out

    def step(self, req: dict) -> dict:
        env = self._need_env()
        if "action" not in req:
            raise ProtocolError("step needs an 'action'")
        res = env.step(int(req["action"]))
        out = self._frame()
        out["rewards"] = [float(r) for r in res.rewards]
        if not env.done:
            out.update(obs=_bits(env.observe()), mask=_bits(env.action_mask()))
        return out

    def observe(self, req: dict) -> dict:
        env = self._need_env()
        p = req.get("player")
        out = self._frame()
        out["obs"] = _bits(env.observe(None if p is None else int(p) % 6))
        return out

    def mask(self, req: dict) -> dict:
        env = self._need_env()
        out = self._frame()
        out["mask"] = _bits(env.action_mask()) if not env.done else []
        return out

    def state(self, req: dict) -> dict:
        env = self._need_env()
        s = env.state
        out = self._frame()
        out.update(
            n=s.n,
            turn_count=s.turn_count,
            turn_limit=s.turn_limit,
            player_turns=list(s.player_turns),
            winner=-1 if s.winner is None else int(s.winner),
            pegs=[[_qr(c, s.n) for c in s.pegs[p]] for p in range(6)],
            chain=[_qr(c, s.n) for c in s.chain],
        )
        return out

    def handle(self, req: dict) -> dict:
        cmd = req.get("cmd")
        fn = {"reset": self.reset, "step": self.step, "observe": self.observe,
              "mask": self.mask, "state": self.state}.get(cmd)
        if fn is None:
            raise ProtocolError(f"unknown cmd {cmd!r}")
        return fn(req)


def respond(session: Session, line: str) -> dict:
    req_id = None
    try:
        req = json.loads(line)
        if not isinstance(req, dict):
            raise ProtocolError("request must be a JSON object")
        req_id = req.get("id")
        v = req.get("v", PROTOCOL_VERSION)
        if v != PROTOCOL_VERSION:
            raise ProtocolError(f"unsupported protocol version {v}")
        out = {"v": PROTOCOL_VERSION, "ok": True}
        out.update(session.handle(req))
    except (ProtocolError, IllegalSubmove, ValueError, TypeError) as exc:
        out = {"v": PROTOCOL_VERSION, "ok": False, "error": str(exc)}
    if req_id is not None:
        out["id"] = req_id
    return out


def serve(stdin: IO[str] = None, stdout: IO[str] = None) -> int:
    """Answer requests until end of input. Returns the number of requests served."""
    stdin = stdin or sys.stdin
    stdout = stdout or sys.stdout
    session = Session()
    count = 0
    for line in stdin:
        if not line.strip():
            continue
        stdout.write(json.dumps(respond(session, line), separators=(",", ":")) + "\n")
        stdout.flush()
        count += 1
    return count
