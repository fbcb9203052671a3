import itertools

import pytest
from hypothesis import strategies as st

from pedprag.world import default_world, make_world


@pytest.fixture(scope="session")
def world():
    return default_world()


@st.composite
def random_worlds(draw, min_blocks=2, max_blocks=5):
    n_kinds = draw(st.integers(2, 3))
    kinds = [f"k{i}" for i in range(n_kinds)]
    per_kind = [draw(st.integers(2, 4)) for _ in kinds]
    values = [(k, f"{k}v{j}") for k, n in zip(kinds, per_kind) for j in range(n)]
    n_blocks = draw(st.integers(min_blocks, max_blocks))
    blocks = []
    for b in range(1, n_blocks + 1):
        attrs = {k: f"{k}v{draw(st.integers(0, n - 1))}" for k, n in zip(kinds, per_kind)}
        blocks.append((b, attrs))
    return make_world(kinds, values, blocks)


# Brute-force oracles below read block attributes directly and never call the
# world module's resolves/valid_goals machinery.

def oracle_valid_goal_pairs(world, x, y):
    """All unordered id pairs {a, b} with a carrying x and b carrying y."""
    out = set()
    for ba, bb in itertools.permutations(world.blocks, 2):
        if x in ba.values() and y in bb.values():
            out.add(frozenset((ba.id, bb.id)))
    return out


def oracle_grammar(world):
    return [(x, y) for x in world.values for y in world.values if oracle_valid_goal_pairs(world, x, y)]


def oracle_posterior(table_row_by_goal, prior):
    """Multiply likelihoods by the prior and normalize, in plain Python."""
    joint = [l * p for l, p in zip(table_row_by_goal, prior)]
    z = sum(joint)
    return [j / z for j in joint] if z > 0 else None


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
