"""Blocks, attributes, goals and the instruction grammar.

A world is a set of blocks, each carrying exactly one value per attribute
kind. Goals are unordered pairs of distinct blocks ("these two blocks are
close"); instructions are ordered pairs of attribute values ("put the x block
next to the y block"). An instruction is valid for a goal when some choice of
referents for x and y yields that goal's pair.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np


class WorldError(ValueError):
    pass


@dataclass(frozen=True, order=True)
class AttributeKind:
    name: str

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True)
class AttributeValue:
    kind: AttributeKind
    label: str

    def __str__(self) -> str:
        return self.label


@dataclass(frozen=True)
class Block:
    id: int
    attributes: tuple[tuple[AttributeKind, AttributeValue], ...]

    def value(self, kind: AttributeKind) -> AttributeValue:
        for k, v in self.attributes:
            if k == kind:
                return v
        raise WorldError(f"block {self.id} has no value for kind {kind}")

    def values(self) -> tuple[AttributeValue, ...]:
        return tuple(v for _, v in self.attributes)


@dataclass(frozen=True, order=True)
class Goal:
    """Two distinct blocks being close; stored as a sorted id pair."""

    a: int
    b: int

    def __post_init__(self):
        if self.a == self.b:
            raise WorldError(f"goal needs two distinct blocks, got {self.a} twice")
        if self.a > self.b:
            lo, hi = self.b, self.a
            object.__setattr__(self, "a", lo)
            object.__setattr__(self, "b", hi)

    @property
    def pair(self) -> frozenset[int]:
        return frozenset((self.a, self.b))

    def __str__(self) -> str:
        return f"{{{self.a},{self.b}}}"


@dataclass(frozen=True)
class Instruction:
    """'Put the ``x`` block next to the ``y`` block'."""

    x: AttributeValue
    y: AttributeValue

    def __str__(self) -> str:
        return f"({self.x.label},{self.y.label})"

    def text(self) -> str:
        return f"Put the {self.x.label} block next to the {self.y.label} block"


@dataclass(frozen=True)
class ValidityMatrix:
    instructions: tuple[Instruction, ...]
    goals: tuple[Goal, ...]
    cells: np.ndarray  # bool, shape (len(instructions), len(goals))

    def column_sums(self) -> tuple[int, ...]:
        return tuple(int(s) for s in self.cells.sum(axis=0))


@dataclass(frozen=True, eq=False)
class BlockWorld:
    kinds: tuple[AttributeKind, ...]
    values: tuple[AttributeValue, ...]
    blocks: tuple[Block, ...]
    _hash: int = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        names = [k.name for k in self.kinds]
        if len(set(names)) != len(names):
            raise WorldError(f"duplicate attribute kinds: {names}")
        keys = [(v.kind, v.label) for v in self.values]
        if len(set(keys)) != len(keys):
            raise WorldError("duplicate attribute values in vocabulary")
        for v in self.values:
            if v.kind not in self.kinds:
                raise WorldError(f"value {v.label!r} has undeclared kind {v.kind}")
        ids = [b.id for b in self.blocks]
        if len(set(ids)) != len(ids):
            raise WorldError(f"duplicate block ids: {ids}")
        for b in self.blocks:
            if b.id < 1:
                raise WorldError(f"block ids must be positive, got {b.id}")
            bkinds = [k for k, _ in b.attributes]
            if sorted(bkinds) != sorted(self.kinds) or len(set(bkinds)) != len(bkinds):
                raise WorldError(f"block {b.id} must carry exactly one value per kind")
            for k, v in b.attributes:
                if v not in self.values or v.kind != k:
                    raise WorldError(f"block {b.id}: {v.label!r} is not a {k} value")
        object.__setattr__(self, "_hash", hash((self.kinds, self.values, self.blocks)))

    # Worlds are compared structurally so caches keyed on them are shared
    # between equal worlds.
    def __eq__(self, other):
        if not isinstance(other, BlockWorld):
            return NotImplemented
        return (self.kinds, self.values, self.blocks) == (other.kinds, other.values, other.blocks)

    def __hash__(self):
        return self._hash

    def kind(self, name: str) -> AttributeKind:
        for k in self.kinds:
            if k.name == name:
                return k
        raise WorldError(f"unknown attribute kind {name!r}")

    def value(self, label: str, kind: str | None = None) -> AttributeValue:
        found = [v for v in self.values if v.label == label and (kind is None or v.kind.name == kind)]
        if not found:
            raise WorldError(f"unknown attribute value {label!r}")
        if len(found) > 1:
            raise WorldError(f"value label {label!r} is ambiguous across kinds; pass kind=")
        return found[0]

    def instruction(self, x: str, y: str) -> Instruction:
        """Look up an instruction by its two value labels."""
        instr = Instruction(self.value(x), self.value(y))
        if instr not in self.instruction_index:
            raise WorldError(f"{instr} is not in the grammar")
        return instr

    def block(self, block_id: int) -> Block:
        for b in self.blocks:
            if b.id == block_id:
                return b
        raise WorldError(f"unknown block {block_id}")

    @property
    def block_ids(self) -> tuple[int, ...]:
        return tuple(b.id for b in self.blocks)

    @cached_property
    def goals(self) -> tuple[Goal, ...]:
        ids = sorted(self.block_ids)
        return tuple(Goal(a, b) for a, b in itertools.combinations(ids, 2))

    @cached_property
    def goal_index(self) -> dict[Goal, int]:
        return {g: i for i, g in enumerate(self.goals)}

    @cached_property
    def instructions(self) -> tuple[Instruction, ...]:
        return tuple(enumerate_instructions(self))

    @cached_property
    def instruction_index(self) -> dict[Instruction, int]:
        return {ins: i for i, ins in enumerate(self.instructions)}

    @cached_property
    def validity(self) -> ValidityMatrix:
        return validity_matrix(self)


def referent_set(world: BlockWorld, value: AttributeValue) -> frozenset[int]:
    """Ids of the blocks carrying ``value``."""
    if value not in world.values:
        raise WorldError(f"{value.label!r} is not in the world vocabulary")
    return frozenset(b.id for b in world.blocks if b.value(value.kind) == value)


def resolves(world: BlockWorld, instr: Instruction) -> frozenset[frozenset[int]]:
    xs = referent_set(world, instr.x)
    ys = referent_set(world, instr.y)
    return frozenset(frozenset((bx, by)) for bx in xs for by in ys if bx != by)


def enumerate_instructions(world: BlockWorld) -> list[Instruction]:
    """All ordered value pairs with a nonempty resolve set, in declared value order."""
    out = []
    for x in world.values:
        for y in world.values:
            instr = Instruction(x, y)
            if resolves(world, instr):
                out.append(instr)
    return out


def valid_goals(world: BlockWorld, instr: Instruction) -> frozenset[Goal]:
    return frozenset(g for g in world.goals if g.pair in resolves(world, instr))


def validity_matrix(world: BlockWorld) -> ValidityMatrix:
    instrs = world.instructions
    goals = world.goals
    cells = np.zeros((len(instrs), len(goals)), dtype=bool)
    for i, instr in enumerate(instrs):
        pairs = resolves(world, instr)
        for j, g in enumerate(goals):
            cells[i, j] = g.pair in pairs
    return ValidityMatrix(instrs, goals, cells)


def make_world(kinds, values, blocks) -> BlockWorld:
    """Build a world from plain data.

    ``kinds`` is a list of names, ``values`` a list of ``(kind, label)`` pairs
    in canonical order, and ``blocks`` a list of ``(id, {kind: label})``.
    """
    kind_objs = tuple(AttributeKind(k) for k in kinds)
    by_name = {k.name: k for k in kind_objs}
    value_objs = []
    for kind, label in values:
        if kind not in by_name:
            raise WorldError(f"value {label!r} refers to unknown kind {kind!r}")
        value_objs.append(AttributeValue(by_name[kind], label))
    lookup = {(v.kind.name, v.label): v for v in value_objs}
    block_objs = []
    for block_id, attrs in blocks:
        unknown = set(attrs) - set(by_name)
        if unknown:
            raise WorldError(f"block {block_id} has unknown kinds {sorted(unknown)}")
        pairs = []
        for k in kind_objs:
            if k.name not in attrs:
                raise WorldError(f"block {block_id} is missing a {k.name} value")
            key = (k.name, attrs[k.name])
            if key not in lookup:
                raise WorldError(f"block {block_id}: unknown {k.name} value {attrs[k.name]!r}")
            pairs.append((k, lookup[key]))
        block_objs.append(Block(int(block_id), tuple(pairs)))
    return BlockWorld(kind_objs, tuple(value_objs), tuple(block_objs))


def default_world() -> BlockWorld:
    """Red plain block 1, blue plain block 2, blue striped block 3."""
    return make_world(
        kinds=["color", "texture"],
        values=[("color", "red"), ("color", "blue"), ("texture", "plain"), ("texture", "striped")],
        blocks=[
            (1, {"color": "red", "texture": "plain"}),
            (2, {"color": "blue", "texture": "plain"}),
            (3, {"color": "blue", "texture": "striped"}),
        ],
    )


def world_from_dict(data: dict) -> BlockWorld:
    try:
        return make_world(
            kinds=data["kinds"],
            values=[(v["kind"], v["label"]) for v in data["values"]],
            blocks=[(b["id"], b["attributes"]) for b in data["blocks"]],
        )
    except (KeyError, TypeError) as exc:
        raise WorldError(f"malformed world definition: {exc}") from exc


def world_to_dict(world: BlockWorld) -> dict:
    return {
        "kinds": [k.name for k in world.kinds],
        "values": [{"kind": v.kind.name, "label": v.label} for v in world.values],
        "blocks": [
            {"id": b.id, "attributes": {k.name: v.label for k, v in b.attributes}}
            for b in world.blocks
        ],
    }


def load_world(source: str | Path) -> BlockWorld:
    """``"default"`` or a path to a JSON world definition."""
    if str(source) == "default":
        return default_world()
    path = Path(source)
    if not path.exists():
        raise WorldError(f"world file not found: {path}")
    return world_from_dict(json.loads(path.read_text()))
