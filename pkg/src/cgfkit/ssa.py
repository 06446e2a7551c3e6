"""Exact stochastic simulation (Gillespie direct method) over CGF programs.

Randomness comes from numpy's PCG64.  A trajectory is seeded by child 0 of
``SeedSequence(seed)``; ensemble trial ``i`` uses child ``i`` of the same
sequence, so results are reproducible and independent of worker count.
"""

from __future__ import annotations

import csv
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import IO, Callable, Iterable, Sequence

import numpy as np

from .cgf import CgfProgram, Reaction, ReactionIndex, Solution

__all__ = [
    "GENERATOR_NAME",
    "OUTCOME_TERMINAL",
    "SimState",
    "StopCondition",
    "Trajectory",
    "TrajectoryStep",
    "TrialSummary",
    "run_ensemble",
    "simulate",
    "step",
    "trajectory_to_csv",
    "trial_summaries_to_csv",
    "trial_summaries_to_json",
]

GENERATOR_NAME = "numpy.random.PCG64"

OUTCOME_TERMINAL = "terminal"
OUTCOME_STOPPED = "stopped"


@dataclass(frozen=True)
class StopCondition:
    """When to stop a run: at terminal states only, or earlier."""

    kind: str  # "terminal" | "max-steps" | "max-time" | "species-reached"
    steps: int | None = None
    time: float | None = None
    species: str | None = None
    count: int | None = None

    @staticmethod
    def terminal() -> "StopCondition":
        return StopCondition("terminal")

    @staticmethod
    def max_steps(steps: int) -> "StopCondition":
        if steps < 0:
            raise ValueError("step budget must be nonnegative")
        return StopCondition("max-steps", steps=steps)

    @staticmethod
    def max_time(time: float) -> "StopCondition":
        if time < 0:
            raise ValueError("time horizon must be nonnegative")
        return StopCondition("max-time", time=time)

    @staticmethod
    def species_reached(species: str, count: int) -> "StopCondition":
        if count < 0:
            raise ValueError("target count must be nonnegative")
        return StopCondition("species-reached", species=species, count=count)

    def describe(self) -> str:
        if self.kind == "max-steps":
            return f"max-steps({self.steps})"
        if self.kind == "max-time":
            return f"max-time({self.time})"
        if self.kind == "species-reached":
            return f"species-reached({self.species},{self.count})"
        return self.kind


@dataclass
class SimState:
    """Mutable cursor of one running trajectory; the rng is shared forward."""

    solution: Solution
    rng: np.random.Generator
    time: float = 0.0
    step_count: int = 0


@dataclass(frozen=True)
class TrajectoryStep:
    time: float
    reaction: Reaction
    solution: Solution


@dataclass(frozen=True)
class Trajectory:
    seed: int
    trial: int
    steps: tuple[TrajectoryStep, ...]
    outcome: str
    stopped_by: StopCondition | None
    final: Solution
    final_time: float
    step_count: int
    rng_name: str = GENERATOR_NAME


@dataclass(frozen=True)
class TrialSummary:
    trial: int
    seed: int
    outcome: str
    stopped_by: str | None
    final: Solution
    step_count: int
    final_time: float
    trajectory: Trajectory | None = None


def _trial_rng(seed: int, trial: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(trial,))))


def _lean_step(
    solution: Solution, index: ReactionIndex, rng: np.random.Generator
) -> tuple[float, int, float, tuple] | None:
    """(wait, position, propensity, template entry) of one sampled event.

    Waiting time is sampled by inverse transform on (0, 1]; the reaction is
    picked by a second uniform draw against cumulative propensities.
    """
    total, enabled = index.enabled_with_total(solution)
    if not enabled:
        return None
    wait = -math.log(1.0 - rng.random()) / total
    pick = rng.random() * total
    acc = 0.0
    position = len(enabled) - 1
    for at, candidate in enumerate(enabled):
        acc += candidate[0]
        if pick < acc:
            position = at
            break
    chosen = enabled[position]
    return wait, position, chosen[0], chosen[1]


def step(state: SimState, env: ReactionIndex | CgfProgram) -> tuple[Reaction, SimState] | None:
    """One direct-method step, or None when no reaction is enabled."""
    index = env if isinstance(env, ReactionIndex) else ReactionIndex(env.env)
    sampled = _lean_step(state.solution, index, state.rng)
    if sampled is None:
        return None
    wait, position, propensity, entry = sampled
    reaction = ReactionIndex.materialize(propensity, entry)
    next_state = SimState(
        solution=index.successor(state.solution, position, entry),
        rng=state.rng,
        time=state.time + wait,
        step_count=state.step_count + 1,
    )
    return reaction, next_state


def _stop_reached(stop: StopCondition, solution: Solution, time: float, steps: int) -> bool:
    if stop.kind == "max-steps":
        return steps >= (stop.steps or 0)
    if stop.kind == "species-reached":
        return solution.count(stop.species or "") >= (stop.count or 0)
    return False


def simulate(
    program: CgfProgram,
    stop: StopCondition = StopCondition.terminal(),
    seed: int = 0,
    *,
    trial: int = 0,
    step_limit: int = 1_000_000,
    record_steps: bool = True,
    observer: Callable[[Reaction, Solution, Solution], None] | None = None,
    index: ReactionIndex | None = None,
) -> Trajectory:
    """Run one seeded trajectory until the stop condition or a terminal state.

    ``step_limit`` is a hard budget on top of any stop condition; exceeding
    it reports a max-steps stop rather than raising.  ``observer`` is called
    as (reaction, before, after) per applied step, which suits per-step
    audits without retaining the whole trajectory.
    """
    index = index if index is not None else ReactionIndex(program.env)
    rng = _trial_rng(seed, trial)
    solution, time, count = program.init, 0.0, 0
    steps: list[TrajectoryStep] = []
    limit = min(step_limit, stop.steps) if stop.kind == "max-steps" else step_limit
    while True:
        if _stop_reached(stop, solution, time, count):
            outcome, stopped_by = OUTCOME_STOPPED, stop
            break
        if count >= limit:
            outcome, stopped_by = OUTCOME_STOPPED, StopCondition.max_steps(limit)
            break
        sampled = _lean_step(solution, index, rng)
        if sampled is None:
            outcome, stopped_by = OUTCOME_TERMINAL, None
            break
        wait, position, propensity, entry = sampled
        if stop.kind == "max-time" and time + wait > (stop.time or 0.0):
            # The jump past the horizon is not applied; the clock parks there.
            time = stop.time or 0.0
            outcome, stopped_by = OUTCOME_STOPPED, stop
            break
        after = index.successor(solution, position, entry)
        time += wait
        count += 1
        if record_steps or observer is not None:
            reaction = ReactionIndex.materialize(propensity, entry)
            if observer is not None:
                observer(reaction, solution, after)
            if record_steps:
                steps.append(TrajectoryStep(time, reaction, after))
        solution = after
    return Trajectory(
        seed=seed,
        trial=trial,
        steps=tuple(steps),
        outcome=outcome,
        stopped_by=stopped_by,
        final=solution,
        final_time=time,
        step_count=count,
    )


def _summarize(trajectory: Trajectory, keep_steps: bool) -> TrialSummary:
    return TrialSummary(
        trial=trajectory.trial,
        seed=trajectory.seed,
        outcome=trajectory.outcome,
        stopped_by=trajectory.stopped_by.describe() if trajectory.stopped_by else None,
        final=trajectory.final,
        step_count=trajectory.step_count,
        final_time=trajectory.final_time,
        trajectory=trajectory if keep_steps else None,
    )


def _run_trials(args: tuple) -> list[TrialSummary]:
    program, stop, seed, trial_range, step_limit, keep_steps = args
    index = ReactionIndex(program.env)
    return [
        _summarize(
            simulate(
                program,
                stop,
                seed,
                trial=trial,
                step_limit=step_limit,
                record_steps=keep_steps,
                index=index,
            ),
            keep_steps,
        )
        for trial in trial_range
    ]


def run_ensemble(
    program: CgfProgram,
    stop: StopCondition,
    trials: int,
    seed: int = 0,
    *,
    jobs: int = 1,
    step_limit: int = 1_000_000,
    keep_steps: bool = False,
) -> list[TrialSummary]:
    """Independent seeded trials in trial order; identical for any job count."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if jobs <= 1:
        return _run_trials((program, stop, seed, range(trials), step_limit, keep_steps))
    chunk = max(1, -(-trials // (jobs * 4)))
    batches = [
        (program, stop, seed, range(low, min(low + chunk, trials)), step_limit, keep_steps)
        for low in range(0, trials, chunk)
    ]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return [summary for batch in pool.map(_run_trials, batches) for summary in batch]


def trajectory_to_csv(
    trajectory: Trajectory,
    species: Sequence[str],
    out: IO[str],
    *,
    initial: Solution | None = None,
) -> None:
    """Rows: trial, step, time, reaction_id and one column per species."""
    writer = csv.writer(out)
    writer.writerow(["trial", "step", "time", "reaction_id", *species])
    if initial is not None:
        writer.writerow(
            [trajectory.trial, 0, repr(0.0), "", *(initial.count(s) for s in species)]
        )
    for n, record in enumerate(trajectory.steps, start=1):
        writer.writerow(
            [
                trajectory.trial,
                n,
                repr(record.time),
                record.reaction.label,
                *(record.solution.count(s) for s in species),
            ]
        )


def trial_summaries_to_csv(summaries: Iterable[TrialSummary], species: Sequence[str], out: IO[str]) -> None:
    writer = csv.writer(out)
    writer.writerow(["trial", "outcome", "stopped_by", "steps", "time", *species])
    for summary in summaries:
        writer.writerow(
            [
                summary.trial,
                summary.outcome,
                summary.stopped_by or "",
                summary.step_count,
                repr(summary.final_time),
                *(summary.final.count(s) for s in species),
            ]
        )


def trial_summaries_to_json(summaries: Iterable[TrialSummary], seed: int) -> str:
    payload = {
        "seed": seed,
        "rng": GENERATOR_NAME,
        "trials": [
            {
                "trial": s.trial,
                "outcome": s.outcome,
                "stopped_by": s.stopped_by,
                "steps": s.step_count,
                "time": s.final_time,
                "final_counts": s.final.as_dict(),
            }
            for s in summaries
        ],
    }
    return json.dumps(payload, indent=2, sort_keys=True)
