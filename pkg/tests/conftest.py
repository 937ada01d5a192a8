import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from ccmarl.rules import END_CODE, initial_state, submove_from_code  # noqa: E402


def as_tuple(m):
    """Engine Submove -> oracle move tuple."""
    from ccmarl.rules import Kind

    if m.kind is Kind.END:
        return "end"
    return (*m.src, m.dir, m.kind is Kind.JUMP)


def random_states(n, count, seed, turn_limit=60):
    """Yield states reached by uniformly random play, restarting finished games."""
    rng = np.random.default_rng(seed)
    s = initial_state(n, turn_limit=turn_limit)
    for _ in range(count):
        if not s.running:
            s = initial_state(n, turn_limit=turn_limit, starting_player=int(rng.integers(6)))
        yield s
        codes = s.legal_codes()
        s.apply_code(int(codes[rng.integers(len(codes))]))


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


# ----------------------------------------------------------------------------- acceptance report
ACCEPTANCE_LINES = []


def record_criterion(number, name, passed, detail=""):
    line = f"[{'PASS' if passed else 'FAIL'}] criterion {number}: {name}" + (f" ({detail})" if detail else "")
    ACCEPTANCE_LINES.append(line)
    print(line)
    return passed


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
