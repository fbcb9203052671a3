"""Grid block-world: blocks on a W x W board moved one cell at a time.

A goal holds when its two blocks are within Chebyshev distance 1
(including diagonal contact).
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass
from functools import lru_cache

from .world import BlockWorld, Goal, WorldError

DIRECTIONS = {
    "up": (-1, 0),
    "down": (1, 0),
    "left": (0, -1),
    "right": (0, 1),
}

Cell = tuple[int, int]

MIN_WIDTH = 4


class GridError(ValueError):
    pass


@dataclass(frozen=True)
class GridAction:
    block: int
    direction: str


@dataclass(frozen=True)
class GridState:
    width: int
    ids: tuple[int, ...]
    positions: tuple[Cell, ...]  # aligned with ids

    def __post_init__(self):
        if len(self.ids) != len(self.positions):
            raise GridError("ids and positions differ in length")
        for r, c in self.positions:
            if not (0 <= r < self.width and 0 <= c < self.width):
                raise GridError(f"cell {(r, c)} is off a {self.width}-wide grid")
        if len(set(self.positions)) != len(self.positions):
            raise GridError("two blocks share a cell")

    @property
    def key(self) -> tuple[Cell, ...]:
        """Positions in block-id order; the tabular state key."""
        return self.positions

    def position(self, block: int) -> Cell:
        return self.positions[self.ids.index(block)]

    def as_dict(self) -> dict[int, Cell]:
        return dict(zip(self.ids, self.positions))


def make_state(width: int, positions: dict[int, Cell]) -> GridState:
    ids = tuple(sorted(positions))
    return GridState(width, ids, tuple(tuple(positions[i]) for i in ids))


@lru_cache(maxsize=64)
def actions(world: BlockWorld) -> tuple[GridAction, ...]:
    """Every (block, direction) pair in block-id then direction order."""
    return tuple(GridAction(b, d) for b in sorted(world.block_ids) for d in DIRECTIONS)


def _close(p: Cell, q: Cell) -> bool:
    return abs(p[0] - q[0]) <= 1 and abs(p[1] - q[1]) <= 1


def reset(world: BlockWorld, width: int, rng: random.Random, max_tries: int = 10_000) -> GridState:
    """Place every block on a distinct cell with no goal already achieved."""
    if width < MIN_WIDTH:
        raise GridError(f"width must be >= {MIN_WIDTH}, got {width}")
    ids = tuple(sorted(world.block_ids))
    if not _has_spread_placement(width, len(ids)):
        raise GridError(f"no placement of {len(ids)} pairwise non-adjacent blocks fits a {width}x{width} grid")
    cells = [(r, c) for r in range(width) for c in range(width)]
    for _ in range(max_tries):
        pos = tuple(rng.sample(cells, len(ids)))
        if not any(_close(p, q) for p, q in itertools.combinations(pos, 2)):
            return GridState(width, ids, pos)
    raise GridError("rejection sampling for a reset state did not converge")


@lru_cache(maxsize=None)
def _has_spread_placement(width: int, n: int) -> bool:
    # Exhaustive backtracking; only called for small boards.
    cells = [(r, c) for r in range(width) for c in range(width)]

    def extend(start: int, placed: list[Cell]) -> bool:
        if len(placed) == n:
            return True
        for k in range(start, len(cells)):
            if all(not _close(cells[k], p) for p in placed):
                placed.append(cells[k])
                if extend(k + 1, placed):
                    return True
                placed.pop()
        return False

    return extend(0, [])


def step(state: GridState, action: GridAction) -> GridState:
    """Move one block one cell; off-grid or occupied targets leave the state unchanged."""
    try:
        k = state.ids.index(action.block)
    except ValueError:
        raise GridError(f"no block {action.block} on the grid") from None
    dr, dc = DIRECTIONS[action.direction]
    r, c = state.positions[k]
    target = (r + dr, c + dc)
    w = state.width
    if not (0 <= target[0] < w and 0 <= target[1] < w) or target in state.positions:
        return state
    pos = list(state.positions)
    pos[k] = target
    return GridState(w, state.ids, tuple(pos))


def goal_achieved(state: GridState, goal: Goal) -> bool:
    try:
        return _close(state.position(goal.a), state.position(goal.b))
    except ValueError:
        raise WorldError(f"goal {goal} names a block not on the grid") from None


def achieved_goals(state: GridState) -> frozenset[Goal]:
    out = []
    for (i, p), (j, q) in itertools.combinations(zip(state.ids, state.positions), 2):
        if _close(p, q):
            out.append(Goal(i, j))
    return frozenset(out)
