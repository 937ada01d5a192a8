"""Six-player Chinese Checkers rules.

A turn is one simple move, or a chain of jumps by a single peg closed by an
end-turn submove. A jumping peg may never land on a cell it already occupied
during the current turn, including the cell it started the turn on. A player
may pass (end-turn without moving) only when no move or jump exists.

The game stops at the first winner or when the total number of completed
player-turns reaches the turn limit.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import IntEnum
from typing import Iterable, Mapping, Optional

import numpy as np

from . import kernels
from .hexgrid import CubeCoord, direction_vector, from_flat, flat_index, on_board, rotate60cw
from .tables import NUM_PLAYERS, BoardTables, board_tables, canonical_home

END_CODE = -1
EMPTY = -1

DEFAULT_TURN_LIMITS = {1: 100, 2: 200, 3: 500, 4: 1000}


def default_turn_limit(n: int) -> int:
    return DEFAULT_TURN_LIMITS.get(n, 1000)


class IllegalSubmove(ValueError):
    pass


class GameOver(RuntimeError):
    """Raised when a terminal state is asked for moves."""


class Kind(IntEnum):
    MOVE = 0
    JUMP = 1
    END = 2


class Status(IntEnum):
    RUNNING = 0
    WON = 1
    TRUNCATED = 2


@dataclass(frozen=True, order=True)
class Submove:
    kind: Kind
    src: Optional[CubeCoord] = None
    dir: Optional[int] = None

    @classmethod
    def move(cls, src, d):
        return cls(Kind.MOVE, CubeCoord(*src), d)

    @classmethod
    def jump(cls, src, d):
        return cls(Kind.JUMP, CubeCoord(*src), d)

    @classmethod
    def end(cls):
        return cls(Kind.END)

    @property
    def target(self) -> Optional[CubeCoord]:
        if self.kind is Kind.END:
            return None
        return self.src + direction_vector(self.dir).scale(2 if self.kind is Kind.JUMP else 1)

    def __str__(self):
        if self.kind is Kind.END:
            return "end"
        return f"{self.kind.name.lower()}({self.src.q},{self.src.r}) d{self.dir}"


@dataclass(frozen=True)
class JumpContext:
    active_peg: Optional[CubeCoord]
    visited: frozenset
    origins: frozenset


def home_cells(p: int, n: int) -> frozenset:
    return frozenset(rotate60cw(c, p) for c in canonical_home(n))


def target_cells(p: int, n: int) -> frozenset:
    return frozenset(rotate60cw(c, 3) for c in home_cells(p, n))


def encode_code(cell: int, d: int, is_jump: bool) -> int:
    return (cell * 6 + d) * 2 + int(is_jump)


def submove_from_code(code: int, n: int) -> Submove:
    if code == END_CODE:
        return Submove.end()
    d = (code >> 1) % 6
    src = from_flat(code // 12, n)
    return Submove(Kind.JUMP if code & 1 else Kind.MOVE, src, d)


def code_from_submove(m: Submove, n: int) -> int:
    if m.kind is Kind.END:
        return END_CODE
    return encode_code(flat_index(m.src, n), m.dir, m.kind is Kind.JUMP)


class BoardState:
    """Mutable game state over flat grid arrays.

    ``board[cell]`` holds the owning player or -1. ``chain`` lists the cells
    the jumping peg has occupied this turn, oldest first; it is empty until
    the first jump of a turn.
    """

    __slots__ = (
        "n",
        "tables",
        "turn_limit",
        "board",
        "pegs",
        "current",
        "turn_count",
        "submove_count",
        "player_turns",
        "chain",
        "visited",
        "status",
        "winner",
        "_abs",
        "_can",
    )

    def __init__(self, n, turn_limit, board, pegs, current, *, turn_count=0, submove_count=0,
                 player_turns=None, chain=(), status=Status.RUNNING, winner=None):
        self.n = n
        self.tables: BoardTables = board_tables(n)
        self.turn_limit = int(turn_limit)
        self.board = board
        self.pegs = pegs
        self.current = current
        self.turn_count = turn_count
        self.submove_count = submove_count
        self.player_turns = list(player_turns) if player_turns is not None else [0] * NUM_PLAYERS
        self.chain = list(chain)
        self.visited = np.zeros(self.tables.ncell, np.uint8)
        self.visited[self.chain] = 1
        self.status = status
        self.winner = winner
        cap = 12 * max(len(p) for p in pegs) + 1
        self._abs = np.empty(cap, np.int32)
        self._can = np.empty(cap, np.int32)

    # ------------------------------------------------------------------ builders
    @classmethod
    def initial(cls, n: int, turn_limit: Optional[int] = None, starting_player: int = 0):
        if turn_limit is None:
            turn_limit = default_turn_limit(n)
        if turn_limit < 1:
            raise ValueError("turn_limit must be >= 1")
        t = board_tables(n)
        return cls.from_cells(n, {p: t.home[p] for p in range(NUM_PLAYERS)}, current=starting_player,
                              turn_limit=turn_limit)

    @classmethod
    def from_placement(cls, n: int, placement: Mapping[int, Iterable], current: int = 0,
                       turn_limit: Optional[int] = None):
        """Arbitrary position from ``{player: [CubeCoord, ...]}``; missing players own no pegs."""
        cells = {}
        for p, coords in placement.items():
            lst = []
            for c in coords:
                c = CubeCoord(*c)
                if not on_board(c, n):
                    raise ValueError(f"{c} is off the board")
                lst.append(flat_index(c, n))
            cells[p] = lst
        return cls.from_cells(n, cells, current=current,
                              turn_limit=turn_limit or default_turn_limit(n))

    @classmethod
    def from_cells(cls, n, cells, current=0, turn_limit=None):
        t = board_tables(n)
        board = np.full(t.ncell, EMPTY, np.int8)
        pegs = []
        for p in range(NUM_PLAYERS):
            arr = np.array(sorted(cells.get(p, ())), dtype=np.int32)
            if np.any(board[arr] != EMPTY):
                raise ValueError("two pegs on one cell")
            board[arr] = p
            pegs.append(arr)
        return cls(n, turn_limit or default_turn_limit(n), board, pegs, current)

    def copy(self) -> "BoardState":
        return BoardState(
            self.n,
            self.turn_limit,
            self.board.copy(),
            [p.copy() for p in self.pegs],
            self.current,
            turn_count=self.turn_count,
            submove_count=self.submove_count,
            player_turns=self.player_turns,
            chain=self.chain,
            status=self.status,
            winner=self.winner,
        )

    # ------------------------------------------------------------------ queries
    @property
    def running(self) -> bool:
        return self.status is Status.RUNNING

    @property
    def active(self) -> int:
        return self.chain[-1] if self.chain else -1

    @property
    def jump_ctx(self) -> JumpContext:
        n = self.n
        if not self.chain:
            return JumpContext(None, frozenset(), frozenset())
        return JumpContext(
            from_flat(self.chain[-1], n),
            frozenset(from_flat(c, n) for c in self.chain),
            frozenset(from_flat(c, n) for c in self.chain[:-1]),
        )

    def occupancy(self) -> dict:
        return {from_flat(int(c), self.n): (int(v) if v >= 0 else None)
                for c, v in enumerate(self.board) if self.tables.onboard[c]}

    def peg_cells(self, p: int) -> frozenset:
        return frozenset(from_flat(int(c), self.n) for c in self.pegs[p])

    def is_winner(self, p: int) -> bool:
        pegs = self.pegs[p]
        return len(pegs) == self.tables.pegs_per_player and bool(self.tables.target_flag[p, pegs].all())

    def legal_codes(self, player_frame: bool = False):
        """Legal submoves as absolute codes (END_CODE for end-turn).

        With ``player_frame`` also return the matching action indices in the
        current player's rotated frame.
        """
        if self.status is not Status.RUNNING:
            raise GameOver(f"game is over ({self.status.name})")
        t = self.tables
        p = self.current
        k = kernels.legal_codes(self.board, self.pegs[p], t.step, t.jump, self.visited,
                                self.active, p, t.to_canon[p], self._abs, self._can)
        if self.chain or k == 0:
            self._abs[k] = END_CODE
            self._can[k] = t.end_action
            k += 1
        if player_frame:
            return self._abs[:k].copy(), self._can[:k].copy()
        return self._abs[:k].copy()

    def legal_submoves(self) -> set:
        return {submove_from_code(int(c), self.n) for c in self.legal_codes()}

    # ------------------------------------------------------------------ mutation
    def apply_code(self, code: int):
        """Apply an absolute submove code without legality checks.

        Returns ``(src, dst)`` flat cells, or ``(-1, -1)`` for end-turn.
        """
        p = self.current
        self.submove_count += 1
        if code == END_CODE:
            self._pass_turn(p)
            return -1, -1
        src = code // 12
        d = (code >> 1) % 6
        if code & 1:
            dst = int(self.tables.jump[src, d])
        else:
            dst = int(self.tables.step[src, d])
        self.board[src] = EMPTY
        self.board[dst] = p
        pegs = self.pegs[p]
        pegs[np.flatnonzero(pegs == src)[0]] = dst
        if code & 1:
            if not self.chain:
                self.chain.append(src)
                self.visited[src] = 1
            self.chain.append(dst)
            self.visited[dst] = 1
        else:
            self._pass_turn(p)
        return src, dst

    def _pass_turn(self, p):
        if self.chain:
            self.visited[self.chain] = 0
            self.chain.clear()
        self.turn_count += 1
        self.player_turns[p] += 1
        if self.is_winner(p):
            self.status = Status.WON
            self.winner = p
        elif self.turn_count >= self.turn_limit:
            self.status = Status.TRUNCATED
        self.current = (p + 1) % NUM_PLAYERS

    def apply(self, m: Submove) -> "BoardState":
        """Apply ``m`` in place after checking legality."""
        code = self.check(m)
        self.apply_code(code)
        return self

    def check(self, m: Submove) -> int:
        if self.status is not Status.RUNNING:
            raise GameOver(f"game is over ({self.status.name})")
        code = code_from_submove(m, self.n) if _on_grid(m, self.n) else None
        if code is not None and code in set(self.legal_codes().tolist()):
            return code
        raise IllegalSubmove(f"{m}: {self._illegal_reason(m)}")

    def _illegal_reason(self, m: Submove) -> str:
        n = self.n
        if m.kind is Kind.END:
            return "end-turn without a prior jump is only allowed when no move exists"
        if m.dir is None or not 0 <= m.dir < 6:
            return "direction must be in [0, 5]"
        if not on_board(m.src, n):
            return "source is off the board"
        if self.board[flat_index(m.src, n)] != self.current:
            return f"source does not hold a peg of player {self.current}"
        if self.chain:
            if m.kind is Kind.MOVE:
                return "only jumps may follow a jump"
            if flat_index(m.src, n) != self.chain[-1]:
                return "only the peg that jumped may continue the chain"
        tgt = m.target
        if not on_board(tgt, n):
            return "target is off the board"
        if self.board[flat_index(tgt, n)] != EMPTY:
            return "target is occupied"
        if m.kind is Kind.JUMP:
            mid = m.src + direction_vector(m.dir)
            if self.board[flat_index(mid, n)] == EMPTY:
                return "no peg to jump over"
            if self.visited[flat_index(tgt, n)]:
                return "jump returns to a cell already occupied this turn"
        return "not legal in this position"


def _on_grid(m: Submove, n: int) -> bool:
    if m.kind is Kind.END:
        return True
    if m.src is None or m.dir is None or not 0 <= m.dir < 6:
        return False
    return abs(m.src.q) <= 2 * n and abs(m.src.r) <= 2 * n


def initial_state(n: int, turn_limit: Optional[int] = None, starting_player: int = 0) -> BoardState:
    return BoardState.initial(n, turn_limit, starting_player)


def legal_submoves(s: BoardState) -> set:
    return s.legal_submoves()


def apply_submove(s: BoardState, m: Submove) -> BoardState:
    """Return the successor state, leaving ``s`` untouched."""
    return s.copy().apply(m)


def is_winner(s: BoardState, p: int) -> bool:
    return s.is_winner(p)


def perft(s: BoardState, depth: int) -> int:
    """Number of legal submove sequences of exactly ``depth`` submoves."""
    if depth == 0:
        return 1
    if s.status is not Status.RUNNING:
        return 0
    codes = s.legal_codes()
    if depth == 1:
        return len(codes)
    total = 0
    for c in codes:
        child = s.copy()
        child.apply_code(int(c))
        total += perft(child, depth - 1)
    return total


def divide(s: BoardState, depth: int) -> dict:
    """Per-first-submove perft counts, for debugging move generation."""
    out = {}
    for c in s.legal_codes():
        child = s.copy()
        child.apply_code(int(c))
        out[submove_from_code(int(c), s.n)] = perft(child, depth - 1)
    return out
