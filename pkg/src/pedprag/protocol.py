"""Teacher/learner goal communication and the teaching session loop.

One exchange: the teacher speaks an instruction for its goal, the learner
infers a goal and answers with its own instruction for it, and the teacher
checks whether that answer decodes back to the intended goal. Mismatches are
communication errors; the teacher tries again with a fresh instruction and a
pragmatic learner first lowers the probability of the answer that failed.
"""

from __future__ import annotations

import logging
import random
from dataclasses import dataclass, field
from typing import Callable, Protocol

from .policy import InstructionPolicy, bgi_posterior, infer_goal, pragmatic_update, sample_instruction, uniform_prior
from .world import Goal, Instruction

log = logging.getLogger(__name__)


class ProtocolError(ValueError):
    pass


@dataclass
class Agent:
    role: str  # "teacher" | "learner"
    policy: InstructionPolicy
    pragmatic: bool = False
    inference_mode: str = "map"

    def __post_init__(self):
        if self.role not in ("teacher", "learner"):
            raise ProtocolError(f"unknown role {self.role!r}")
        if self.role == "teacher" and self.pragmatic:
            raise ProtocolError("teachers never adapt their policy")
        if self.inference_mode not in ("map", "sample"):
            raise ProtocolError(f"unknown inference mode {self.inference_mode!r}")

    def speak(self, goal: Goal, rng: random.Random) -> Instruction:
        return sample_instruction(self.policy, goal, rng)

    def listen(self, instr: Instruction, rng: random.Random) -> Goal:
        post = bgi_posterior(self.policy, instr, uniform_prior(self.policy.world))
        return infer_goal(post, self.inference_mode, rng)


@dataclass(frozen=True)
class Attempt:
    instruction: Instruction
    inferred: Goal  # learner's reading of the instruction
    feedback: Instruction
    verified: Goal  # teacher's reading of the feedback
    matched: bool


@dataclass
class ExchangeResult:
    goal: Goal
    attempts: list[Attempt] = field(default_factory=list)

    @property
    def errors(self) -> int:
        return sum(not a.matched for a in self.attempts)

    @property
    def agreed(self) -> bool:
        return bool(self.attempts) and self.attempts[-1].matched

    @property
    def agreed_goal(self) -> Goal | None:
        return self.attempts[-1].inferred if self.agreed else None

    @property
    def mismatched_agreement(self) -> bool:
        """Teacher accepted, but the learner is about to pursue a different goal."""
        return self.agreed and self.agreed_goal != self.goal


def run_exchange(teacher: Agent, learner: Agent, goal: Goal, rng: random.Random,
                 max_retries: int = 20, gamma: float = 0.1) -> ExchangeResult:
    if max_retries < 1:
        raise ProtocolError(f"max_retries must be >= 1, got {max_retries}")
    result = ExchangeResult(goal)
    for _ in range(max_retries):
        instr = teacher.speak(goal, rng)
        inferred = learner.listen(instr, rng)
        feedback = learner.speak(inferred, rng)
        verified = teacher.listen(feedback, rng)
        matched = verified == goal
        result.attempts.append(Attempt(instr, inferred, feedback, verified, matched))
        if log.isEnabledFor(logging.DEBUG):
            log.debug("goal %s: %s -> %s, feedback %s -> %s%s", goal, instr, inferred,
                      feedback, verified, "" if matched else " (error)")
        if matched:
            break
        if learner.pragmatic:
            learner.policy = pragmatic_update(learner.policy, feedback, inferred, gamma)
    return result


class Executor(Protocol):
    def pursue(self, goal: Goal) -> bool: ...

    def evaluate(self, rollouts: int, rng: random.Random) -> float: ...


@dataclass(frozen=True)
class EpisodeRecord:
    episode: int  # 1-based
    exchange: ExchangeResult
    instructions_given: int
    comm_errors: int
    agreed_episodes: int
    mismatched_agreements: int
    reached: bool | None  # None when the environment episode was skipped


@dataclass
class SessionLog:
    records: list[EpisodeRecord] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.records)

    @property
    def instructions_given(self) -> int:
        return self.records[-1].instructions_given if self.records else 0

    @property
    def comm_errors(self) -> int:
        return self.records[-1].comm_errors if self.records else 0

    def cumulative_errors(self) -> list[int]:
        return [r.comm_errors for r in self.records]


def uniform_schedule(goals: tuple[Goal, ...]) -> Callable[[random.Random], Goal]:
    return lambda rng: rng.choice(goals)


def run_teaching_session(teacher: Agent, learner: Agent, executor: Executor | None, episodes: int,
                         exchange_rng: random.Random, goal_rng: random.Random, *,
                         schedule: Callable[[random.Random], Goal] | None = None,
                         max_retries: int = 20, gamma: float = 0.1,
                         on_episode: Callable[[EpisodeRecord], None] | None = None) -> SessionLog:
    """Run ``episodes`` rounds of goal sampling, exchange, and (if agreed) acting.

    Goals are drawn from ``goal_rng`` and exchanges consume only
    ``exchange_rng``, so the goal sequence is the same whatever the agents do.
    ``on_episode`` sees every record as soon as it is appended.
    """
    world = teacher.policy.world
    schedule = schedule or uniform_schedule(world.goals)
    log_ = SessionLog()
    instructions = errors = agreed = mismatched = 0
    for ep in range(1, episodes + 1):
        goal = schedule(goal_rng)
        ex = run_exchange(teacher, learner, goal, exchange_rng, max_retries, gamma)
        instructions += len(ex.attempts)
        errors += ex.errors
        reached = None
        if ex.agreed:
            agreed += 1
            mismatched += ex.mismatched_agreement
            if executor is not None:
                reached = executor.pursue(ex.agreed_goal)
        else:
            log.info("episode %d: no agreement on %s after %d attempts", ep, goal, max_retries)
        rec = EpisodeRecord(ep, ex, instructions, errors, agreed, mismatched, reached)
        log_.records.append(rec)
        if on_episode is not None:
            on_episode(rec)
    return log_


def communication_error_rate(log_: SessionLog, start: int = 0, stop: int | None = None) -> float:
    """Errors per episode over records ``[start, stop)`` (0-based, slice semantics)."""
    window = log_.records[start:stop]
    if not window:
        raise ProtocolError(f"empty window [{start}, {stop}) over a log of {len(log_)} episodes")
    return sum(r.exchange.errors for r in window) / len(window)
