"""Line-oriented game logs and a fixed-width text renderer.

A log starts with a header line and then holds one submove per line in the
absolute frame::

    # ccmarl-log v1 n=2 turn_limit=200 start=0
    0 2 -4 4 1        player q r direction is_jump
    0 end             player ends the turn
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, List, Tuple

from .hexgrid import cube, grid_size, on_board
from .rules import BoardState, IllegalSubmove, Kind, Submove, initial_state

LOG_VERSION = "v1"
PLAYER_LETTERS = "ABCDEF"


class LogParseError(ValueError):
    def __init__(self, line_no: int, msg: str):
        super().__init__(f"line {line_no}: {msg}")
        self.line_no = line_no


@dataclass
class LogHeader:
    n: int
    turn_limit: int
    start: int = 0

    def line(self) -> str:
        return f"# ccmarl-log {LOG_VERSION} n={self.n} turn_limit={self.turn_limit} start={self.start}"


def format_record(player: int, m: Submove) -> str:
    if m.kind is Kind.END:
        return f"{player} end"
    return f"{player} {m.src.q} {m.src.r} {m.dir} {int(m.kind is Kind.JUMP)}"


def dumps(header: LogHeader, moves: Iterable[Tuple[int, Submove]]) -> str:
    lines = [header.line()] + [format_record(p, m) for p, m in moves]
    return "\n".join(lines) + "\n"


def loads(text: str, with_lines: bool = False):
    """Parse a log into ``(header, [(player, Submove), ...])``.

    ``with_lines`` appends the source line number of every record.
    """
    lines = text.splitlines()
    if not lines or not lines[0].startswith("# ccmarl-log"):
        raise LogParseError(1, "missing '# ccmarl-log' header")
    fields = lines[0].split()
    if len(fields) < 3 or fields[2] != LOG_VERSION:
        raise LogParseError(1, f"unsupported log version (expected {LOG_VERSION})")
    try:
        kv = dict(f.split("=", 1) for f in fields[3:])
        header = LogHeader(int(kv["n"]), int(kv["turn_limit"]), int(kv.get("start", 0)))
    except (KeyError, ValueError) as exc:
        raise LogParseError(1, f"bad header: {exc}") from None
    moves, line_nos = [], []
    for no, raw in enumerate(lines[1:], start=2):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        try:
            player = int(parts[0])
            if not 0 <= player < 6:
                raise ValueError("player must be in [0, 5]")
            if parts[1:] == ["end"]:
                moves.append((player, Submove.end()))
                line_nos.append(no)
                continue
            if len(parts) != 5:
                raise ValueError("expected 'player q r direction is_jump' or 'player end'")
            q, r, d, j = map(int, parts[1:])
            if j not in (0, 1) or not 0 <= d < 6:
                raise ValueError("direction must be 0-5 and is_jump 0 or 1")
        except (ValueError, IndexError) as exc:
            raise LogParseError(no, str(exc)) from None
        moves.append((player, Submove(Kind.JUMP if j else Kind.MOVE, cube(q, r), d)))
        line_nos.append(no)
    if with_lines:
        return header, moves, line_nos
    return header, moves


def replay(header: LogHeader, moves, line_nos=None) -> List[BoardState]:
    """States after each submove (the initial state first). Validates every record."""
    if line_nos is None:
        line_nos = list(range(2, len(moves) + 2))
    s = initial_state(header.n, header.turn_limit, header.start)
    states = [s.copy()]
    for (player, m), no in zip(moves, line_nos):
        if player != s.current:
            raise LogParseError(no, f"player {player} moved but player {s.current} was to act")
        try:
            s.apply(m)
        except (IllegalSubmove, RuntimeError) as exc:
            raise LogParseError(no, str(exc)) from None
        states.append(s.copy())
    return states


def render(s: BoardState) -> str:
    """Fixed-width diagram, player 0's corner on top, one letter per player."""
    n = s.n
    g = grid_size(n)
    rows = []
    for r in range(-2 * n, 2 * n + 1):
        line = [" "] * (12 * n + 1)
        for q in range(-2 * n, 2 * n + 1):
            c = cube(q, r)
            if not on_board(c, n):
                continue
            x = 2 * q + r + 6 * n
            owner = s.board[(q + 2 * n) * g + (r + 2 * n)]
            line[x] = PLAYER_LETTERS[owner] if owner >= 0 else "."
        rows.append("".join(line).rstrip())
    return "\n".join(rows)


def render_log(text: str) -> str:
    header, moves, line_nos = loads(text, with_lines=True)
    states = replay(header, moves, line_nos)
    frames = []
    for k, s in enumerate(states):
        title = "initial" if k == 0 else f"submove {k}: player {moves[k - 1][0]} {moves[k - 1][1]}"
        frames.append(f"== {title} (turn {s.turn_count}, {s.status.name.lower()})\n{render(s)}")
    return "\n\n".join(frames) + "\n"
