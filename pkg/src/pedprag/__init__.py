"""Pedagogical teachers and pragmatic learners resolving referential ambiguity."""

from .policy import (
    GoalPosterior,
    InstructionPolicy,
    bgi_posterior,
    build_pedagogical,
    build_preference,
    build_validity_uniform,
    infer_goal,
    pragmatic_update,
    sample_instruction,
)
from .protocol import Agent, run_exchange, run_teaching_session
from .world import BlockWorld, Goal, Instruction, default_world

__all__ = [
    "Agent",
    "BlockWorld",
    "Goal",
    "GoalPosterior",
    "Instruction",
    "InstructionPolicy",
    "bgi_posterior",
    "build_pedagogical",
    "build_preference",
    "build_validity_uniform",
    "default_world",
    "infer_goal",
    "pragmatic_update",
    "run_exchange",
    "run_teaching_session",
    "sample_instruction",
]
