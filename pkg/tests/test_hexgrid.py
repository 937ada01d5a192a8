import pytest
from hypothesis import given
from hypothesis import strategies as st

from ccmarl.hexgrid import (
    DIRECTIONS,
    CubeCoord,
    axial_to_grid,
    cell_count,
    cube,
    direction_vector,
    grid_to_axial,
    on_board,
    rotate60cw,
)


def brute_count(n):
    return sum(
        on_board(cube(q, r), n)
        for q in range(-2 * n, 2 * n + 1)
        for r in range(-2 * n, 2 * n + 1)
    )


def test_direction_table():
    assert direction_vector(0) == (1, 0, -1)
    assert direction_vector(1) == (1, -1, 0)
    assert direction_vector(3) == (-1, 0, 1)
    total = CubeCoord(0, 0, 0)
    for v in DIRECTIONS:
        assert sum(v) == 0
        total = total + v
    assert total == (0, 0, 0)
    assert len(set(DIRECTIONS)) == 6
    for d in range(6):
        assert direction_vector((d + 3) % 6) == -direction_vector(d)


def test_rotation_examples():
    assert rotate60cw(CubeCoord(1, 0, -1), 1) == (0, 1, -1)
    assert rotate60cw(CubeCoord(2, -4, 2), 3) == (-2, 4, -2)
    assert rotate60cw(CubeCoord(1, -3, 2), 6) == (1, -3, 2)


def test_clockwise_rotation_steps_directions_backwards():
    # a clockwise turn maps direction d onto d - 1
    for d in range(6):
        assert rotate60cw(direction_vector(d), 1) == direction_vector((d - 1) % 6)


coords = st.builds(cube, st.integers(-8, 8), st.integers(-8, 8))


@given(coords, st.integers(-12, 12))
def test_rotation_properties(c, k):
    r = rotate60cw(c, k)
    assert sum(r) == 0
    assert rotate60cw(c, 6) == c
    assert rotate60cw(c, 3) == -c
    assert rotate60cw(r, -k) == c


@given(coords, st.integers(1, 4))
def test_on_board_is_rotation_invariant(c, n):
    for k in range(6):
        assert on_board(rotate60cw(c, k), n) == on_board(c, n)


def test_on_board_examples():
    assert on_board(CubeCoord(0, 0, 0), 2)
    assert not on_board(CubeCoord(3, -4, 1), 2)


@pytest.mark.parametrize("n,expected", [(1, 13), (2, 37), (3, 73), (4, 121)])
def test_cell_count(n, expected):
    assert brute_count(n) == expected
    assert cell_count(n) == expected


def test_star_corner_is_three_pegs_at_n2():
    corner = [c for q in range(-4, 5) for r in range(-4, 5)
              if on_board(c := cube(q, r), 2) and c.r <= -3]
    assert sorted(corner) == [(1, -3, 2), (2, -4, 2), (2, -3, 1)]


def test_grid_mapping():
    assert axial_to_grid(CubeCoord(0, 0, 0), 2) == (4, 4)
    assert axial_to_grid(CubeCoord(2, -4, 2), 2) == (6, 0)
    for i in range(9):
        for j in range(9):
            assert axial_to_grid(grid_to_axial(i, j, 2), 2) == (i, j)
    for q in range(-4, 5):
        for r in range(-4, 5):
            assert grid_to_axial(*axial_to_grid(cube(q, r), 2), 2) == cube(q, r)


def test_grid_range_errors():
    with pytest.raises(ValueError):
        axial_to_grid(cube(5, 0), 2)
    with pytest.raises(ValueError):
        grid_to_axial(9, 0, 2)
