"""Flat lookup tables over the (4N+1)^2 grid used by the kernels.

Cells are addressed by flat grid index ``i * G + j``. Everything here is
derived once per board size and shared read-only.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .hexgrid import DIRECTIONS, cube, flat_index, grid_size, on_board, rotate60cw

NUM_PLAYERS = 6


@dataclass(frozen=True, eq=False)
class BoardTables:
    n: int
    g: int
    ncell: int
    pegs_per_player: int
    onboard: np.ndarray  # uint8[ncell]
    step: np.ndarray  # int32[ncell, 6], neighbour or -1
    jump: np.ndarray  # int32[ncell, 6], cell two steps away or -1
    to_canon: np.ndarray  # int32[6, ncell], absolute -> player-p frame (-1 off board)
    from_canon: np.ndarray  # int32[6, ncell]
    canon_r: np.ndarray  # int32[6, ncell], r coordinate in player-p frame
    home: np.ndarray  # int32[6, P], sorted flat indices
    target_flag: np.ndarray  # uint8[6, ncell]

    @property
    def obs_dim(self) -> int:
        return 8 * self.ncell

    @property
    def act_dim(self) -> int:
        return 12 * self.ncell + 1

    @property
    def end_action(self) -> int:
        return 12 * self.ncell


def canonical_home(n: int):
    return [c for c in _cells(n) if c.r <= -(n + 1)]


def _cells(n):
    span = range(-2 * n, 2 * n + 1)
    return [cube(q, r) for q in span for r in span if on_board(cube(q, r), n)]


@lru_cache(maxsize=None)
def board_tables(n: int) -> BoardTables:
    if n < 1:
        raise ValueError("board size must be >= 1")
    g = grid_size(n)
    ncell = g * g
    cells = _cells(n)
    onboard = np.zeros(ncell, np.uint8)
    for c in cells:
        onboard[flat_index(c, n)] = 1

    step = np.full((ncell, 6), -1, np.int32)
    jump = np.full((ncell, 6), -1, np.int32)
    for c in cells:
        a = flat_index(c, n)
        for d, v in enumerate(DIRECTIONS):
            t1 = c + v
            if on_board(t1, n):
                step[a, d] = flat_index(t1, n)
            t2 = t1 + v
            if on_board(t1, n) and on_board(t2, n):
                jump[a, d] = flat_index(t2, n)

    to_canon = np.full((NUM_PLAYERS, ncell), -1, np.int32)
    from_canon = np.full((NUM_PLAYERS, ncell), -1, np.int32)
    canon_r = np.zeros((NUM_PLAYERS, ncell), np.int32)
    for p in range(NUM_PLAYERS):
        for c in cells:
            cc = rotate60cw(c, -p)
            a, b = flat_index(c, n), flat_index(cc, n)
            to_canon[p, a] = b
            from_canon[p, b] = a
            canon_r[p, a] = cc.r

    top = canonical_home(n)
    home = np.array(
        [sorted(flat_index(rotate60cw(c, p), n) for c in top) for p in range(NUM_PLAYERS)],
        dtype=np.int32,
    )
    target_flag = np.zeros((NUM_PLAYERS, ncell), np.uint8)
    for p in range(NUM_PLAYERS):
        target_flag[p, home[(p + 3) % NUM_PLAYERS]] = 1

    for arr in (onboard, step, jump, to_canon, from_canon, canon_r, home, target_flag):
        arr.setflags(write=False)
    return BoardTables(
        n=n,
        g=g,
        ncell=ncell,
        pegs_per_player=len(top),
        onboard=onboard,
        step=step,
        jump=jump,
        to_canon=to_canon,
        from_canon=from_canon,
        canon_r=canon_r,
        home=home,
        target_flag=target_flag,
    )
