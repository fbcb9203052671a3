"""Experiment configuration, seeded runs, metrics rows, and comparisons."""

from __future__ import annotations

import csv
import dataclasses
import io
import json
import logging
import math
import random
import statistics
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, TextIO

from .policy import InstructionPolicy, build_pedagogical, build_preference, build_validity_uniform
from .protocol import Agent, EpisodeRecord, SessionLog, run_teaching_session
from .rl import OracleExecutor, QLearningExecutor
from .world import BlockWorld, load_world

log = logging.getLogger(__name__)

TEACHERS = ("naive", "pedagogical", "pref_color", "pref_texture")
LEARNERS = ("literal", "pragmatic")
EXECUTORS = ("qlearning", "oracle")
CSV_HEADER = ["seed", "teacher", "learner", "episode", "instructions_given", "comm_errors", "gra",
              "agreed_episodes", "mismatched_agreements"]
GRA_THRESHOLD = 0.9


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    world: str = "default"
    teacher: str = "naive"
    learner: str = "literal"
    executor: str = "qlearning"
    gamma: float = 0.1
    beta: float = 10.0
    p_success: float = 1.0
    inference_mode: str = "map"
    max_retries: int = 20
    episodes: int = 2000
    eval_every: int = 100
    eval_rollouts: int = 10
    width: int = 5
    horizon: int = 12
    alpha: float = 0.1
    discount: float = 0.95
    epsilon: float = 0.1
    update_every: int = 1
    seeds: list[int] = field(default_factory=lambda: [0])

    def validate(self) -> ExperimentConfig:
        def need(name, ok, rng):
            if not ok:
                raise ConfigError(f"{name}={getattr(self, name)!r} out of range: expected {rng}")

        need("teacher", self.teacher in TEACHERS, f"one of {TEACHERS}")
        need("learner", self.learner in LEARNERS, f"one of {LEARNERS}")
        need("executor", self.executor in EXECUTORS, f"one of {EXECUTORS}")
        need("inference_mode", self.inference_mode in ("map", "sample"), "map or sample")
        need("gamma", self.gamma > 0, "> 0")
        need("beta", self.beta >= 1, ">= 1")
        need("p_success", 0 <= self.p_success <= 1, "[0, 1]")
        need("max_retries", self.max_retries >= 1, ">= 1")
        need("episodes", self.episodes >= 1, ">= 1")
        need("eval_every", self.eval_every >= 1, ">= 1")
        need("eval_rollouts", self.eval_rollouts >= 1, ">= 1")
        need("width", self.width >= 4, ">= 4")
        need("horizon", self.horizon >= 1, ">= 1")
        need("alpha", 0 < self.alpha <= 1, "(0, 1]")
        need("discount", 0 <= self.discount < 1, "[0, 1)")
        need("epsilon", 0 <= self.epsilon <= 1, "[0, 1]")
        need("update_every", self.update_every >= 1, ">= 1")
        need("seeds", len(self.seeds) >= 1 and all(isinstance(s, int) for s in self.seeds),
             "a nonempty list of integers")
        return self

    @property
    def label(self) -> str:
        return f"{self.teacher}+{self.learner}"

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


_FIELDS = {f.name: f for f in dataclasses.fields(ExperimentConfig)}


def _coerce(name: str, value):
    kind = _FIELDS[name].type
    try:
        if kind == "list[int]":
            if isinstance(value, str):
                value = value.replace(",", " ").split()
            return [int(v) for v in value]
        if kind == "int":
            if isinstance(value, float) and not value.is_integer():
                raise ValueError
            return int(value)
        if kind == "float":
            return float(value)
        return str(value)
    except (TypeError, ValueError):
        raise ConfigError(f"{name}: cannot interpret {value!r} as {kind}") from None


def load_config(path: str | Path | None = None, overrides: dict | None = None) -> ExperimentConfig:
    """Defaults, then the JSON file (if any), then ``overrides``; unknown keys are rejected."""
    data = {}
    if path is not None:
        p = Path(path)
        if not p.exists():
            raise ConfigError(f"config file not found: {p}")
        text = p.read_text().strip()
        if text:
            try:
                data = json.loads(text)
            except json.JSONDecodeError as exc:
                raise ConfigError(f"{p}: invalid JSON ({exc})") from None
            if not isinstance(data, dict):
                raise ConfigError(f"{p}: top level must be an object")
    data.update({k: v for k, v in (overrides or {}).items() if v is not None})
    unknown = sorted(set(data) - set(_FIELDS))
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
    return ExperimentConfig(**{k: _coerce(k, v) for k, v in data.items()}).validate()


class Streams:
    """Independent named random streams derived from one seed."""

    def __init__(self, seed: int):
        self.seed = seed

    def get(self, name: str) -> random.Random:
        return random.Random(f"{self.seed}:{name}")


def teacher_policy(world: BlockWorld, kind: str, beta: float = 10.0) -> InstructionPolicy:
    if kind == "naive":
        return build_validity_uniform(world)
    if kind == "pedagogical":
        return build_pedagogical(world)
    if kind == "pref_color":
        return build_preference(world, "color", beta)
    if kind == "pref_texture":
        return build_preference(world, "texture", beta)
    raise ConfigError(f"unknown teacher {kind!r}")


@dataclass(frozen=True)
class MetricsRow:
    seed: int
    teacher: str
    learner: str
    episode: int
    instructions_given: int
    comm_errors: int
    gra: float
    agreed_episodes: int
    mismatched_agreements: int

    def cells(self) -> list[str]:
        return [str(self.seed), self.teacher, self.learner, str(self.episode), str(self.instructions_given),
                str(self.comm_errors), f"{self.gra:.6f}", str(self.agreed_episodes),
                str(self.mismatched_agreements)]


@dataclass
class RunResult:
    seed: int
    rows: list[MetricsRow]
    session: SessionLog


def run_seed(config: ExperimentConfig, seed: int,
             on_row: Callable[[MetricsRow], None] | None = None) -> RunResult:
    world = load_world(config.world)
    streams = Streams(seed)
    teacher = Agent("teacher", teacher_policy(world, config.teacher, config.beta),
                    inference_mode=config.inference_mode)
    learner = Agent("learner", build_validity_uniform(world), pragmatic=config.learner == "pragmatic",
                    inference_mode=config.inference_mode)
    env_rng = streams.get("env")
    if config.executor == "qlearning":
        executor = QLearningExecutor(world, env_rng, config.width, config.horizon, config.alpha,
                                     config.discount, config.epsilon, config.update_every)
    else:
        executor = OracleExecutor(world, env_rng, config.p_success)
    rows: list[MetricsRow] = []

    def checkpoint(rec: EpisodeRecord):
        if rec.episode % config.eval_every and rec.episode != config.episodes:
            return
        gra = executor.evaluate(config.eval_rollouts, streams.get(f"eval:{rec.episode}"))
        row = MetricsRow(seed, config.teacher, config.learner, rec.episode, rec.instructions_given,
                         rec.comm_errors, gra, rec.agreed_episodes, rec.mismatched_agreements)
        rows.append(row)
        if on_row is not None:
            on_row(row)

    session = run_teaching_session(
        teacher, learner, executor, config.episodes, streams.get("exchange"), streams.get("goals"),
        max_retries=config.max_retries, gamma=config.gamma, on_episode=checkpoint,
    )
    return RunResult(seed, rows, session)


def run_experiment(config: ExperimentConfig, out: TextIO | None = None,
                   on_row: Callable[[MetricsRow], None] | None = None) -> tuple[list[RunResult], dict]:
    """Run every seed in order, writing CSV rows to ``out`` as they are produced."""
    config.validate()
    writer = None
    if out is not None:
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(CSV_HEADER)

    def emit(row: MetricsRow):
        if writer is not None:
            writer.writerow(row.cells())
            out.flush()
        if on_row is not None:
            on_row(row)

    results = []
    for seed in config.seeds:
        log.info("%s seed %d: %d episodes", config.label, seed, config.episodes)
        results.append(run_seed(config, seed, emit))
    return results, summarize(config, results)


def instructions_to_threshold(rows: Iterable[MetricsRow], threshold: float = GRA_THRESHOLD) -> float:
    """First ``instructions_given`` at which GRA reached ``threshold``; inf if never."""
    for r in rows:
        if r.gra >= threshold:
            return r.instructions_given
    return math.inf


def summarize(config: ExperimentConfig, results: list[RunResult], threshold: float = GRA_THRESHOLD) -> dict:
    finals = [r.rows[-1] for r in results]
    return {
        "teacher": config.teacher,
        "learner": config.learner,
        "executor": config.executor,
        "seeds": [r.seed for r in results],
        "median_final_gra": statistics.median(f.gra for f in finals),
        "median_comm_errors": statistics.median(f.comm_errors for f in finals),
        "median_instructions_given": statistics.median(f.instructions_given for f in finals),
        "median_instructions_to_threshold": statistics.median(
            instructions_to_threshold(r.rows, threshold) for r in results),
    }


def dump_policy_table(kind: str, config: ExperimentConfig | None = None, fmt: str = "csv") -> str:
    """The teacher's table, one row per instruction.

    Grammar-invalid cells are written as ``x`` so they stay distinct from
    valid cells that carry zero probability.
    """
    config = config or ExperimentConfig()
    world = load_world(config.world)
    policy = teacher_policy(world, kind, config.beta)
    table = policy.to_csv(mark_invalid=True)
    if fmt == "csv":
        return table
    if fmt == "text":
        rows = list(csv.reader(io.StringIO(table)))
        widths = [max(len(r[c]) for r in rows) for c in range(len(rows[0]))]
        return "\n".join("  ".join(cell.ljust(wd) for cell, wd in zip(r, widths)).rstrip() for r in rows) + "\n"
    raise ConfigError(f"unknown format {fmt!r}")


def compare_combos(configs: list[ExperimentConfig], threshold: float = GRA_THRESHOLD,
                   runs: dict[int, list[RunResult]] | None = None) -> list[dict]:
    """Summaries sorted by median instructions-to-threshold, then by median errors.

    ``runs`` may carry precomputed results keyed by config position.
    """
    if len(configs) < 2:
        raise ConfigError("compare needs at least two configs")
    budget = {(c.episodes, tuple(c.seeds)) for c in configs}
    if len(budget) != 1:
        raise ConfigError("compared configs must share episodes and seeds")
    summaries = []
    for k, cfg in enumerate(configs):
        results = runs[k] if runs and k in runs else run_experiment(cfg)[0]
        summaries.append(summarize(cfg, results, threshold))
    return sorted(summaries, key=lambda s: (s["median_instructions_to_threshold"], s["median_comm_errors"]))


def format_report(summaries: list[dict]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["rank", "teacher", "learner", "executor", "median_final_gra", "median_instructions_to_threshold",
                "median_comm_errors", "median_instructions_given"])
    for rank, s in enumerate(summaries, 1):
        itt = s["median_instructions_to_threshold"]
        w.writerow([rank, s["teacher"], s["learner"], s["executor"], f"{s['median_final_gra']:.6f}",
                    "not reached" if math.isinf(itt) else f"{itt:g}", f"{s['median_comm_errors']:g}",
                    f"{s['median_instructions_given']:g}"])
    return buf.getvalue()
