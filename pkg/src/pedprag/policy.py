"""Instruction policies, teacher constructions, and Bayesian goal inference.

An instruction policy is a table ``table[g, i] = P(instruction i | goal g)``
over the world's canonical goal and instruction orders. The same table is used
to speak (sample an instruction for a goal) and to listen (as the likelihood
when inferring the goal behind a heard instruction).
"""

from __future__ import annotations

import csv
import io
import logging
import random
import warnings
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .world import AttributeKind, BlockWorld, Goal, Instruction, WorldError

log = logging.getLogger(__name__)

NORM_TOL = 1e-9
TIE_TOL = 1e-12


class PolicyError(ValueError):
    pass


class RowResetWarning(UserWarning):
    """A pragmatic decrement zeroed a whole row; the row was reset to validity-uniform."""


@dataclass(frozen=True, eq=False)
class InstructionPolicy:
    world: BlockWorld
    table: np.ndarray  # (n_goals, n_instructions)

    def __post_init__(self):
        t = np.array(self.table, dtype=float)
        t.setflags(write=False)
        object.__setattr__(self, "table", t)
        valid = self.world.validity.cells.T
        if t.shape != valid.shape:
            raise PolicyError(f"table shape {t.shape} does not match world {valid.shape}")
        if (t < 0).any():
            raise PolicyError("negative probability in policy table")
        if (t[~valid] != 0).any():
            raise PolicyError("policy puts mass on an instruction invalid for its goal")
        sums = t.sum(axis=1)
        bad = np.flatnonzero(np.abs(sums - 1.0) > NORM_TOL)
        if bad.size:
            g = self.world.goals[bad[0]]
            raise PolicyError(f"row for goal {g} sums to {sums[bad[0]]!r}")

    def prob(self, instr: Instruction, goal: Goal) -> float:
        w = self.world
        return float(self.table[w.goal_index[goal], w.instruction_index[instr]])

    def row(self, goal: Goal) -> dict[Instruction, float]:
        r = self.table[self.world.goal_index[goal]]
        return {ins: float(p) for ins, p in zip(self.world.instructions, r)}

    def support(self, goal: Goal) -> list[Instruction]:
        r = self.table[self.world.goal_index[goal]]
        return [ins for ins, p in zip(self.world.instructions, r) if p > 0]

    def copy(self) -> InstructionPolicy:
        return InstructionPolicy(self.world, self.table.copy())

    def __eq__(self, other):
        if not isinstance(other, InstructionPolicy):
            return NotImplemented
        return self.world == other.world and np.array_equal(self.table, other.table)

    def to_csv(self, mark_invalid: bool = False) -> str:
        """One row per instruction, one column per goal, 6-decimal cells.

        With ``mark_invalid`` the cells of instructions that are not valid for
        the goal read ``x`` instead of ``0.000000``.
        """
        valid = self.world.validity.cells
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["instruction"] + [f"goal_{g.a}_{g.b}" for g in self.world.goals])
        for i, instr in enumerate(self.world.instructions):
            cells = ["x" if mark_invalid and not valid[i, j] else f"{p:.6f}" for j, p in enumerate(self.table[:, i])]
            writer.writerow([str(instr)] + cells)
        return buf.getvalue()


def _normalized_rows(world: BlockWorld, weights: np.ndarray) -> np.ndarray:
    sums = weights.sum(axis=1, keepdims=True)
    empty = np.flatnonzero(sums[:, 0] <= 0)
    if empty.size:
        raise PolicyError(f"goal {world.goals[empty[0]]} has no instruction to use")
    return weights / sums


@lru_cache(maxsize=64)
def build_validity_uniform(world: BlockWorld) -> InstructionPolicy:
    """Uniform over the instructions valid for each goal (naive teacher, fresh learner)."""
    weights = world.validity.cells.T.astype(float)
    return InstructionPolicy(world, _normalized_rows(world, weights))


def unique_instructions(world: BlockWorld) -> dict[Goal, list[Instruction]]:
    """Instructions valid for exactly one goal, grouped by that goal."""
    cells = world.validity.cells
    out = {g: [] for g in world.goals}
    for i, instr in enumerate(world.instructions):
        (cols,) = np.nonzero(cells[i])
        if cols.size == 1:
            out[world.goals[cols[0]]].append(instr)
    return out


def build_pedagogical(world: BlockWorld) -> InstructionPolicy:
    unique = unique_instructions(world)
    weights = np.zeros((len(world.goals), len(world.instructions)))
    for g, instrs in unique.items():
        if not instrs:
            raise PolicyError(f"goal {g} has no unambiguous instruction; no pedagogical policy exists")
        for instr in instrs:
            weights[world.goal_index[g], world.instruction_index[instr]] = 1.0
    return InstructionPolicy(world, _normalized_rows(world, weights))


def build_preference(world: BlockWorld, preferred: AttributeKind | str, beta: float = 10.0) -> InstructionPolicy:
    """Weight each valid instruction by ``beta ** (mentions of the preferred kind)``."""
    kind = world.kind(preferred) if isinstance(preferred, str) else preferred
    if kind not in world.kinds:
        raise WorldError(f"unknown attribute kind {kind}")
    if not beta >= 1:
        raise PolicyError(f"beta must be >= 1, got {beta}")
    mentions = np.array(
        [(ins.x.kind == kind) + (ins.y.kind == kind) for ins in world.instructions], dtype=float
    )
    weights = world.validity.cells.T * np.power(float(beta), mentions)[None, :]
    return InstructionPolicy(world, _normalized_rows(world, weights))


@dataclass(frozen=True)
class GoalPosterior:
    goals: tuple[Goal, ...]
    probs: np.ndarray
    evidence: float = 1.0  # normalizer under the policy that was asked
    fallback: bool = False  # True when the validity-uniform likelihood had to be used

    def __post_init__(self):
        p = np.array(self.probs, dtype=float)
        p.setflags(write=False)
        object.__setattr__(self, "probs", p)
        if p.shape != (len(self.goals),):
            raise PolicyError("posterior length does not match goal list")
        if (p < 0).any() or abs(p.sum() - 1.0) > NORM_TOL:
            raise PolicyError(f"posterior is not normalized: {p}")

    def __getitem__(self, goal: Goal) -> float:
        return float(self.probs[self.goals.index(goal)])

    def as_dict(self) -> dict[Goal, float]:
        return {g: float(p) for g, p in zip(self.goals, self.probs)}


def uniform_prior(world: BlockWorld) -> GoalPosterior:
    n = len(world.goals)
    return GoalPosterior(world.goals, np.full(n, 1.0 / n))


def bgi_posterior(policy: InstructionPolicy, instr: Instruction, prior: GoalPosterior | None = None) -> GoalPosterior:
    """P(g | instr) proportional to P(instr | g) * P(g).

    If ``policy`` gives ``instr`` zero probability under every goal, the
    validity-uniform policy of the same world supplies the likelihood instead
    and ``fallback`` is set on the result.
    """
    world = policy.world
    if prior is None:
        prior = uniform_prior(world)
    elif prior.goals != world.goals:
        raise PolicyError("prior is over a different goal set")
    i = world.instruction_index.get(instr)
    if i is None:
        raise PolicyError(f"{instr} is not in the grammar")
    joint = policy.table[:, i] * prior.probs
    z = float(joint.sum())
    if z > 0:
        return GoalPosterior(world.goals, joint / z, evidence=z)
    joint = build_validity_uniform(world).table[:, i] * prior.probs
    z_fb = float(joint.sum())
    if z_fb <= 0:
        raise PolicyError(f"{instr} is not valid for any goal with prior mass")
    return GoalPosterior(world.goals, joint / z_fb, evidence=z, fallback=True)


def infer_goal(posterior: GoalPosterior, mode: str = "map", rng: random.Random | None = None) -> Goal:
    """Pick a goal: ``map`` takes the argmax (random tie-break), ``sample`` draws."""
    rng = rng or random.Random()
    p = posterior.probs
    if mode == "map":
        top = p.max()
        ties = [g for g, v in zip(posterior.goals, p) if top - v <= TIE_TOL]
        return ties[0] if len(ties) == 1 else rng.choice(ties)
    if mode == "sample":
        return rng.choices(posterior.goals, weights=p.tolist())[0]
    raise PolicyError(f"unknown inference mode {mode!r}")


def sample_instruction(policy: InstructionPolicy, goal: Goal, rng: random.Random) -> Instruction:
    row = policy.table[policy.world.goal_index[goal]]
    if not row.any():
        raise PolicyError(f"row for goal {goal} is all zero")
    return rng.choices(policy.world.instructions, weights=row.tolist())[0]


def pragmatic_update(policy: InstructionPolicy, instr: Instruction, goal: Goal, gamma: float = 0.1) -> InstructionPolicy:
    """Lower P(instr | goal) by ``gamma`` (floored at 0) and renormalize that row.

    Returns a new policy. When the floor empties the row, the row is restored
    to validity-uniform and a :class:`RowResetWarning` is issued.
    """
    if not gamma > 0:
        raise PolicyError(f"gamma must be > 0, got {gamma}")
    world = policy.world
    gi = world.goal_index[goal]
    ii = world.instruction_index[instr]
    table = policy.table.copy()
    if table[gi, ii] <= 0:
        raise PolicyError(f"{instr} has zero probability under {goal}; nothing to decrement")
    table[gi, ii] = max(table[gi, ii] - gamma, 0.0)
    total = table[gi].sum()
    if total <= 0:
        table[gi] = build_validity_uniform(world).table[gi]
        log.debug("row %s emptied by decrement of %s; reset", goal, instr)
        warnings.warn(f"row for {goal} emptied; reset to validity-uniform", RowResetWarning, stacklevel=2)
    else:
        table[gi] /= total
    return InstructionPolicy(world, table)

