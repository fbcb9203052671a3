"""Tabular goal-conditioned Q-learning with hindsight relabeling.

The learner's action policy is an epsilon-greedy readout of a Q-table keyed by
(state positions, goal). Per-step online updates are complemented by a
"final"-strategy hindsight pass that replays each finished trajectory for the
other goals its last state happened to achieve.
"""

from __future__ import annotations

import csv
import hashlib
import random
from dataclasses import dataclass, field
from pathlib import Path

from .gridworld import GridAction, GridState, achieved_goals, actions, goal_achieved, reset, step
from .world import BlockWorld, Goal

SNAPSHOT_VERSION = 1


class RLError(ValueError):
    pass


@dataclass
class QTable:
    n_actions: int
    alpha: float = 0.1
    discount: float = 0.95
    epsilon: float = 0.1
    values: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if not 0 < self.alpha <= 1:
            raise RLError(f"alpha must be in (0, 1], got {self.alpha}")
        if not 0 <= self.discount < 1:
            raise RLError(f"discount must be in [0, 1), got {self.discount}")
        if not 0 <= self.epsilon <= 1:
            raise RLError(f"epsilon must be in [0, 1], got {self.epsilon}")

    def get(self, key, goal: Goal) -> list[float] | None:
        return self.values.get((key, goal))

    def row(self, key, goal: Goal) -> list[float]:
        k = (key, goal)
        vals = self.values.get(k)
        if vals is None:
            vals = self.values[k] = [0.0] * self.n_actions
        return vals

    def update(self, key, goal: Goal, a: int, reward: float, next_key, terminal: bool) -> None:
        vals = self.row(key, goal)
        target = reward
        if not terminal:
            nxt = self.values.get((next_key, goal))
            if nxt is not None:
                target += self.discount * max(nxt)
        vals[a] += self.alpha * (target - vals[a])

    def digest(self) -> str:
        h = hashlib.sha256()
        for k in sorted(self.values, key=repr):
            h.update(repr((k, self.values[k])).encode())
        return h.hexdigest()

    def bounds(self) -> tuple[float, float]:
        flat = [v for row in self.values.values() for v in row]
        return (min(flat), max(flat)) if flat else (0.0, 0.0)

    def save(self, path: str | Path) -> None:
        """CSV snapshot of the nonzero entries."""
        with open(path, "w", newline="") as f:
            w = csv.writer(f, lineterminator="\n")
            w.writerow(["version", SNAPSHOT_VERSION, self.n_actions, self.alpha, self.discount, self.epsilon])
            w.writerow(["state", "goal", "action", "value"])
            for (key, goal), row in sorted(self.values.items(), key=lambda kv: repr(kv[0])):
                state = ";".join(f"{r},{c}" for r, c in key)
                for a, v in enumerate(row):
                    if v != 0.0:
                        w.writerow([state, f"{goal.a}-{goal.b}", a, repr(v)])

    @classmethod
    def load(cls, path: str | Path) -> QTable:
        with open(path, newline="") as f:
            rows = list(csv.reader(f))
        head = rows[0]
        if head[0] != "version" or int(head[1]) != SNAPSHOT_VERSION:
            raise RLError(f"unsupported snapshot header {head}")
        q = cls(int(head[2]), float(head[3]), float(head[4]), float(head[5]))
        for state, goal, a, v in rows[2:]:
            key = tuple(tuple(int(x) for x in cell.split(",")) for cell in state.split(";"))
            ga, gb = (int(x) for x in goal.split("-"))
            q.row(key, Goal(ga, gb))[int(a)] = float(v)
        return q


def new_qtable(world: BlockWorld, **kwargs) -> QTable:
    return QTable(len(actions(world)), **kwargs)


def _greedy_index(vals: list[float] | None, n: int, rng: random.Random) -> int:
    if vals is None:
        return rng.randrange(n)
    top = max(vals)
    best = [i for i, v in enumerate(vals) if v == top]
    return best[0] if len(best) == 1 else rng.choice(best)


def act_index(q: QTable, state: GridState, goal: Goal, rng: random.Random, epsilon: float | None = None) -> int:
    eps = q.epsilon if epsilon is None else epsilon
    if eps > 0 and rng.random() < eps:
        return rng.randrange(q.n_actions)
    return _greedy_index(q.get(state.key, goal), q.n_actions, rng)


def act(world: BlockWorld, q: QTable, state: GridState, goal: Goal, rng: random.Random,
        epsilon: float | None = None) -> GridAction:
    """Epsilon-greedy action; greedy ties are broken uniformly at random."""
    return actions(world)[act_index(q, state, goal, rng, epsilon)]


@dataclass(frozen=True)
class Transition:
    state: GridState
    action: int
    next_state: GridState


@dataclass
class EpisodeTrace:
    goal: Goal
    transitions: list[Transition]
    success: bool

    @property
    def length(self) -> int:
        return len(self.transitions)

    @property
    def final_state(self) -> GridState:
        return self.transitions[-1].next_state


def run_episode(q: QTable, world: BlockWorld, goal: Goal, width: int = 5, horizon: int = 12,
                rng: random.Random | None = None, learn: bool = True, epsilon: float | None = None,
                start: GridState | None = None) -> EpisodeTrace:
    """Reset, then act until ``goal`` holds or ``horizon`` steps pass.

    With ``learn`` the table gets an online update after every step, reward 1
    on the (terminal) step that achieves the goal, 0 otherwise.
    """
    if horizon < 1:
        raise RLError(f"horizon must be >= 1, got {horizon}")
    rng = rng or random.Random()
    acts = actions(world)
    state = start if start is not None else reset(world, width, rng)
    transitions = []
    success = False
    for _ in range(horizon):
        a = act_index(q, state, goal, rng, epsilon)
        nxt = step(state, acts[a])
        done = goal_achieved(nxt, goal)
        if learn:
            q.update(state.key, goal, a, 1.0 if done else 0.0, nxt.key, done)
        transitions.append(Transition(state, a, nxt))
        state = nxt
        if done:
            success = True
            break
    return EpisodeTrace(goal, transitions, success)


def hindsight_relabel(q: QTable, trace: EpisodeTrace) -> QTable:
    """Replay ``trace`` for every other goal achieved in its final state.

    The replay for a relabeled goal stops at the step where that goal first
    held, which is rewarded as terminal. Returns ``q`` (updated in place).
    """
    if not trace.transitions:
        return q
    for g in sorted(achieved_goals(trace.final_state) - {trace.goal}):
        for tr in trace.transitions:
            done = goal_achieved(tr.next_state, g)
            q.update(tr.state.key, g, tr.action, 1.0 if done else 0.0, tr.next_state.key, done)
            if done:
                break
    return q


def evaluate_gra(q: QTable, world: BlockWorld, width: int = 5, horizon: int = 12, rollouts: int = 10,
                 rng: random.Random | None = None) -> float:
    """Mean greedy success rate over the goal space; never touches the table."""
    if rollouts < 1:
        raise RLError(f"rollouts must be >= 1, got {rollouts}")
    rng = rng or random.Random()
    rates = []
    for g in world.goals:
        wins = sum(
            run_episode(q, world, g, width, horizon, rng, learn=False, epsilon=0.0).success
            for _ in range(rollouts)
        )
        rates.append(wins / rollouts)
    return sum(rates) / len(rates)


def oracle_executor(goal: Goal, p_success: float, rng: random.Random) -> bool:
    if not 0 <= p_success <= 1:
        raise RLError(f"p_success must be in [0, 1], got {p_success}")
    return rng.random() < p_success


class QLearningExecutor:
    """Runs one learning episode per agreed goal; hindsight pass every ``update_every`` episodes."""

    def __init__(self, world: BlockWorld, rng: random.Random, width: int = 5, horizon: int = 12,
                 alpha: float = 0.1, discount: float = 0.95, epsilon: float = 0.1, update_every: int = 1):
        if update_every < 1:
            raise RLError(f"update_every must be >= 1, got {update_every}")
        self.world = world
        self.rng = rng
        self.width = width
        self.horizon = horizon
        self.update_every = update_every
        self.q = new_qtable(world, alpha=alpha, discount=discount, epsilon=epsilon)
        self._pending: list[EpisodeTrace] = []
        self.episodes = 0

    def pursue(self, goal: Goal) -> bool:
        trace = run_episode(self.q, self.world, goal, self.width, self.horizon, self.rng)
        self._pending.append(trace)
        self.episodes += 1
        if self.episodes % self.update_every == 0:
            for tr in self._pending:
                hindsight_relabel(self.q, tr)
            self._pending.clear()
        return trace.success

    def evaluate(self, rollouts: int, rng: random.Random) -> float:
        return evaluate_gra(self.q, self.world, self.width, self.horizon, rollouts, rng)


class OracleExecutor:
    """Stand-in executor that succeeds with a fixed probability."""

    def __init__(self, world: BlockWorld, rng: random.Random, p_success: float = 1.0):
        if not 0 <= p_success <= 1:
            raise RLError(f"p_success must be in [0, 1], got {p_success}")
        self.world = world
        self.rng = rng
        self.p_success = p_success

    def pursue(self, goal: Goal) -> bool:
        return oracle_executor(goal, self.p_success, self.rng)

    def evaluate(self, rollouts: int, rng: random.Random) -> float:
        rates = [
            sum(oracle_executor(g, self.p_success, rng) for _ in range(rollouts)) / rollouts
            for g in self.world.goals
        ]
        return sum(rates) / len(rates)
