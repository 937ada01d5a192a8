"""Cube/axial coordinates for the six-pointed star board.

Screen convention: q grows to the right, r grows downward, s = -q - r.
A board of size N is the star whose corner triangles have side N; it is
embedded in the (4N+1) x (4N+1) axial grid [-2N, 2N]^2.
"""

from __future__ import annotations

from functools import lru_cache
from typing import Iterator, NamedTuple


class CubeCoord(NamedTuple):
    q: int
    r: int
    s: int

    def __add__(self, other):  # type: ignore[override]
        return CubeCoord(self.q + other.q, self.r + other.r, self.s + other.s)

    def __sub__(self, other):
        return CubeCoord(self.q - other.q, self.r - other.r, self.s - other.s)

    def __neg__(self):
        return CubeCoord(-self.q, -self.r, -self.s)

    def scale(self, k: int) -> "CubeCoord":
        return CubeCoord(self.q * k, self.r * k, self.s * k)

    def length(self) -> int:
        return (abs(self.q) + abs(self.r) + abs(self.s)) // 2


def cube(q: int, r: int) -> CubeCoord:
    """Build a cube coordinate from axial (q, r)."""
    return CubeCoord(q, r, -q - r)


# Counterclockwise from due right; index 1 is up-right because r grows downward.
DIRECTIONS: tuple[CubeCoord, ...] = (
    CubeCoord(1, 0, -1),
    CubeCoord(1, -1, 0),
    CubeCoord(0, -1, 1),
    CubeCoord(-1, 0, 1),
    CubeCoord(-1, 1, 0),
    CubeCoord(0, 1, -1),
)


def direction_vector(d: int) -> CubeCoord:
    return DIRECTIONS[d]


def rotate60cw(c: CubeCoord, k: int = 1) -> CubeCoord:
    """Rotate ``c`` clockwise about the center by ``k`` sixths of a turn.

    Negative ``k`` rotates counterclockwise.
    """
    q, r, s = c
    for _ in range(k % 6):
        q, r, s = -r, -s, -q
    return CubeCoord(q, r, s)


def hex_distance(a: CubeCoord, b: CubeCoord) -> int:
    return (a - b).length()


def on_board(c: CubeCoord, n: int) -> bool:
    q, r, s = c
    return (q <= n and r <= n and s <= n) or (q >= -n and r >= -n and s >= -n)


def cell_count(n: int) -> int:
    return 6 * n * n + 6 * n + 1


def grid_size(n: int) -> int:
    return 4 * n + 1


def iter_board(n: int) -> Iterator[CubeCoord]:
    """All on-board cells in grid (row-major) order."""
    span = range(-2 * n, 2 * n + 1)
    for q in span:
        for r in span:
            c = cube(q, r)
            if on_board(c, n):
                yield c


@lru_cache(maxsize=None)
def board_cells(n: int) -> tuple[CubeCoord, ...]:
    return tuple(iter_board(n))


def axial_to_grid(c: CubeCoord, n: int) -> tuple[int, int]:
    if abs(c.q) > 2 * n or abs(c.r) > 2 * n:
        raise ValueError(f"{c} lies outside the {grid_size(n)}x{grid_size(n)} grid")
    return c.q + 2 * n, c.r + 2 * n


def grid_to_axial(i: int, j: int, n: int) -> CubeCoord:
    g = grid_size(n)
    if not (0 <= i < g and 0 <= j < g):
        raise ValueError(f"grid index ({i}, {j}) outside [0, {g - 1}]")
    return cube(i - 2 * n, j - 2 * n)


def flat_index(c: CubeCoord, n: int) -> int:
    i, j = axial_to_grid(c, n)
    return i * grid_size(n) + j


def from_flat(idx: int, n: int) -> CubeCoord:
    g = grid_size(n)
    return grid_to_axial(idx // g, idx % g, n)
