"""Quantitative checks: closed forms, exact absorbing-chain solves, bounds,
and Monte-Carlo estimation with Wilson confidence intervals.

The decrement gadget used throughout is a one-decrement machine whose two
halt sinks are distinguishable by their instruction-token marker: I1 for a
completed decrement, I2 for a taken jump.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import IO, Callable, Iterable, Sequence

import numpy as np

from .cgf import CgfProgram, ReactionIndex, Solution, enumerate_reactions
from .compiler import (
    NAIVE,
    RECURSIVE,
    CompiledMachine,
    EncodingConfig,
    compile_naive,
    compile_recursive,
    decode_solution,
    encode_state,
    machine_with_state,
)
from .rm import DecJump, Halt, RmProgram, RmState, rm_run
from .ssa import StopCondition, run_ensemble

__all__ = [
    "CONSISTENT",
    "VIOLATED",
    "StateSpace",
    "StateSpaceOverflowError",
    "TerminationBound",
    "VerificationReport",
    "absorption_probabilities",
    "decrement_gadget",
    "enumerate_state_space",
    "faithful_run_bound",
    "jump_probability_closed_form",
    "proposition_bound",
    "reports_to_csv",
    "reports_to_json",
    "termination_bound",
    "verify_proposition",
    "verify_termination",
    "wilson_interval",
]

CONSISTENT = "consistent"
VIOLATED = "violated"

# two-sided 99% normal quantile, used by every confidence interval here
Z_99 = 2.5758293035489004

EXACT_VS_CLOSED_TOL = 1e-9
SOLVE_RESIDUAL_TOL = 1e-10
DENSE_SOLVE_LIMIT = 2000


class StateSpaceOverflowError(RuntimeError):
    """Reachable states exceeded the cap: not desk-scale analyzable."""


class NonAbsorbingChainError(RuntimeError):
    pass


# ---------------------------------------------------------------------------
# closed forms and bounds


def jump_probability_closed_form(l: int, h: int) -> float:
    """Probability the inhibited decrement resolves correctly.

    With the register empty the jump is the only exit, so the geometric
    retry series sums to one.  Otherwise each round decrements with weight
    l against 1 for entering the retry state, where h inhibitor copies
    send the token back; summing the rounds gives s / (1 - q) for
    s = l/(l+1) and q = h / ((l+1)(h+1)).
    """
    if l < 0 or h < 0:
        raise ValueError("counts must be nonnegative")
    if l == 0:
        return 1.0
    s = Fraction(l, l + 1)
    q = Fraction(h, (l + 1) * (h + 1))
    return float(s / (1 - q))


def proposition_bound(l: int, h: int) -> float:
    """Lower bound 1 - 1/h that the correct-decrement probability beats."""
    if l < 1 or h < 1:
        raise ValueError("the bound is stated for l >= 1 and h >= 1")
    return float(1 - Fraction(1, h))


@dataclass(frozen=True)
class TerminationBound:
    sum_bound: float  # 1 - sum_{k=h}^{h+d} 1/k, possibly <= 0 (vacuous)
    product_bound: float  # prod_{k=h}^{h+d} (1 - 1/k), the sharper form


def termination_bound(h: int, d: int) -> TerminationBound:
    if h < 1:
        raise ValueError("initial inhibitor count must be >= 1")
    if d < 0:
        raise ValueError("decrement count must be nonnegative")
    ks = range(h, h + d + 1)
    total = math.fsum(1.0 / k for k in ks)
    product = 1.0
    for k in ks:
        product *= 1.0 - 1.0 / k
    return TerminationBound(sum_bound=1.0 - total, product_bound=product)


def faithful_run_bound(h: int, yields: Sequence[int]) -> float:
    """Product of (1 - 1/c) over decrement executions, where c is the
    inhibitor count seen by each execution: starts at h, grows by the
    observed per-decrement yield."""
    if h < 1:
        raise ValueError("initial inhibitor count must be >= 1")
    count = h
    bound = 1.0
    for produced in yields:
        if produced < 0:
            raise ValueError("yields must be nonnegative")
        bound *= 1.0 - 1.0 / count
        count += produced
    return bound


# ---------------------------------------------------------------------------
# state space and absorption


@dataclass(frozen=True)
class StateSpace:
    states: tuple[Solution, ...]
    transitions: tuple[tuple[tuple[int, float], ...], ...]  # per state: (target, rate)
    absorbing: frozenset[int]
    initial: int = 0

    @property
    def size(self) -> int:
        return len(self.states)


def enumerate_state_space(program: CgfProgram, max_states: int = 20_000) -> StateSpace:
    """Breadth-first reachability from the initial solution."""
    if max_states < 1:
        raise ValueError("max_states must be >= 1")
    index = ReactionIndex(program.env)
    order: dict[Solution, int] = {program.init: 0}
    states: list[Solution] = [program.init]
    transitions: list[tuple[tuple[int, float], ...]] = []
    absorbing: set[int] = set()
    at = 0
    while at < len(states):
        solution = states[at]
        outgoing: dict[int, float] = {}
        for reaction in index.reactions(solution):
            successor = solution.subtract(reaction.consumed).add(reaction.produced)
            target = order.get(successor)
            if target is None:
                if len(states) >= max_states:
                    raise StateSpaceOverflowError(
                        f"more than {max_states} reachable states from {program.init}"
                    )
                target = len(states)
                order[successor] = target
                states.append(successor)
            outgoing[target] = outgoing.get(target, 0.0) + reaction.propensity
        if not outgoing:
            absorbing.add(at)
        transitions.append(tuple(sorted(outgoing.items())))
        at += 1
    return StateSpace(tuple(states), tuple(transitions), frozenset(absorbing))


def _check_absorbing_reachable(space: StateSpace) -> None:
    # reverse reachability from the absorbing set
    incoming: dict[int, list[int]] = {i: [] for i in range(space.size)}
    for source, edges in enumerate(space.transitions):
        for target, _ in edges:
            incoming[target].append(source)
    seen = set(space.absorbing)
    frontier = list(space.absorbing)
    while frontier:
        state = frontier.pop()
        for source in incoming[state]:
            if source not in seen:
                seen.add(source)
                frontier.append(source)
    if len(seen) != space.size:
        missing = space.size - len(seen)
        raise NonAbsorbingChainError(f"{missing} states cannot reach any absorbing state")


def absorption_probabilities(space: StateSpace, target: Callable[[Solution], bool]) -> float:
    """Probability of being absorbed in a target state, from the initial one.

    Solves the embedded-chain equations p = P p with p fixed at 1 on
    absorbing target states and 0 on other absorbing states.  Dense direct
    solve for small spaces, Gauss-Seidel sweeps beyond.
    """
    if not space.absorbing:
        raise NonAbsorbingChainError("chain has no absorbing state")
    _check_absorbing_reachable(space)
    transient = [i for i in range(space.size) if i not in space.absorbing]
    hit = {i: (1.0 if target(space.states[i]) else 0.0) for i in space.absorbing}
    if space.initial in space.absorbing:
        return hit[space.initial]
    column = {state: k for k, state in enumerate(transient)}
    n = len(transient)
    if n <= DENSE_SOLVE_LIMIT:
        matrix = np.eye(n)
        rhs = np.zeros(n)
        for k, state in enumerate(transient):
            total = math.fsum(rate for _, rate in space.transitions[state])
            for successor, rate in space.transitions[state]:
                weight = rate / total
                if successor in column:
                    matrix[k, column[successor]] -= weight
                else:
                    rhs[k] += weight * hit[successor]
        solution = np.linalg.solve(matrix, rhs)
        residual = float(np.max(np.abs(matrix @ solution - rhs)))
    else:
        solution = np.zeros(n)
        for _ in range(1_000_000):
            worst = 0.0
            for k, state in enumerate(transient):
                total = math.fsum(rate for _, rate in space.transitions[state])
                acc = 0.0
                for successor, rate in space.transitions[state]:
                    weight = rate / total
                    acc += weight * (solution[column[successor]] if successor in column else hit[successor])
                worst = max(worst, abs(acc - solution[k]))
                solution[k] = acc
            if worst < 1e-12:
                break
        residual = worst
    if residual > SOLVE_RESIDUAL_TOL:
        raise NonAbsorbingChainError(f"linear solve residual {residual:.3e} too large")
    return float(solution[column[space.initial]])


# ---------------------------------------------------------------------------
# gadgets and verification


def decrement_gadget(
    l: int,
    h: int = 0,
    *,
    scheme: str = RECURSIVE,
    register: int = 1,
    sirna_per_cleave: int = 1,
    sirna_per_degrade: int = 1,
) -> CompiledMachine:
    """One-decrement machine from (pc=0, register=l): the decrement sink
    leaves token I1, the jump sink leaves token I2."""
    program = RmProgram((DecJump(register, 2), Halt(), Halt()))
    cfg = EncodingConfig(
        scheme=scheme,
        h=h if scheme == RECURSIVE else 0,
        sirna_per_cleave=sirna_per_cleave,
        sirna_per_degrade=sirna_per_degrade,
    )
    machine = compile_naive(program, cfg) if scheme == NAIVE else compile_recursive(program, cfg)
    state = RmState(0, l if register == 1 else 0, l if register == 2 else 0)
    return machine_with_state(machine, state)


def _token_target(name: str) -> Callable[[Solution], bool]:
    return lambda solution: solution.count(name) == 1


@dataclass(frozen=True)
class VerificationReport:
    """One verified quantity with every route that produced a value."""

    name: str
    exact: float | None = None
    closed_form: float | None = None
    bound: float | None = None
    mc_estimate: float | None = None
    ci_low: float | None = None
    ci_high: float | None = None
    trials: int = 0
    verdict: str = CONSISTENT
    notes: tuple[str, ...] = ()
    context: dict = field(default_factory=dict, compare=False)

    @property
    def consistent(self) -> bool:
        return self.verdict == CONSISTENT


def wilson_interval(successes: int, trials: int, z: float = Z_99) -> tuple[float, float]:
    if trials <= 0:
        raise ValueError("trials must be positive")
    if not 0 <= successes <= trials:
        raise ValueError("successes out of range")
    p = successes / trials
    denom = 1 + z * z / trials
    center = (p + z * z / (2 * trials)) / denom
    spread = z * math.sqrt(p * (1 - p) / trials + z * z / (4 * trials * trials)) / denom
    # the limits are exactly 0/1 at the boundaries; keep them so
    low = 0.0 if successes == 0 else max(0.0, center - spread)
    high = 1.0 if successes == trials else min(1.0, center + spread)
    return low, high


def _gadget_success_fraction(
    machine: CompiledMachine, success_token: str, trials: int, seed: int, jobs: int
) -> tuple[int, int]:
    summaries = run_ensemble(
        machine.program, StopCondition.terminal(), trials, seed, jobs=jobs, step_limit=100_000
    )
    wins = sum(1 for s in summaries if s.outcome == "terminal" and s.final.count(success_token) == 1)
    return wins, trials


def verify_proposition(
    l_values: Iterable[int],
    h_values: Iterable[int],
    *,
    mc_trials: int = 0,
    seed: int = 0,
    jobs: int = 1,
    sirna_per_cleave: int = 1,
    gadget: CompiledMachine | None = None,
) -> list[VerificationReport]:
    """Exact vs closed-form vs bound (vs optional Monte-Carlo) for the
    inhibited decrement across the given count ranges.

    ``gadget`` overrides the compiled machine for single-cell runs, which
    lets regression tests feed deliberately broken encodings through the
    same verdict logic.
    """
    reports = []
    cell = 0
    for l in l_values:
        for h in h_values:
            machine = gadget or decrement_gadget(
                l, h, scheme=RECURSIVE, sirna_per_cleave=sirna_per_cleave
            )
            success_token = machine.instruction_species[1 if l > 0 else 2]
            space = enumerate_state_space(machine.program)
            exact = absorption_probabilities(space, _token_target(success_token))
            closed = jump_probability_closed_form(l, h)
            bound = proposition_bound(l, h) if l >= 1 and h >= 1 else None
            notes = []
            ok = abs(exact - closed) < EXACT_VS_CLOSED_TOL
            if not ok:
                notes.append(f"exact {exact!r} differs from closed form {closed!r}")
            if bound is not None and not closed > bound:
                ok = False
                notes.append(f"closed form {closed!r} does not beat bound {bound!r}")
            estimate = ci_low = ci_high = None
            if mc_trials > 0:
                wins, n = _gadget_success_fraction(
                    machine, success_token, mc_trials, seed + cell, jobs
                )
                estimate = wins / n
                ci_low, ci_high = wilson_interval(wins, n)
                if not ci_low <= exact <= ci_high:
                    ok = False
                    notes.append(f"99% interval [{ci_low:.4f}, {ci_high:.4f}] misses exact {exact:.6f}")
            reports.append(
                VerificationReport(
                    name=f"decrement-probability(l={l}, h={h})",
                    exact=exact,
                    closed_form=closed,
                    bound=bound,
                    mc_estimate=estimate,
                    ci_low=ci_low,
                    ci_high=ci_high,
                    trials=mc_trials,
                    verdict=CONSISTENT if ok else VIOLATED,
                    notes=tuple(notes),
                    context={"l": l, "h": h, "states": space.size},
                )
            )
            cell += 1
    return reports


def _oracle_yields(run, cfg: EncodingConfig) -> list[int]:
    yields = []
    for register, success in run.decrement_events:
        if not success:
            yields.append(0)
        elif register == 1:
            yields.append(cfg.sirna_per_cleave)
        else:
            yields.append(cfg.sirna_per_degrade)
    return yields


def verify_termination(
    rm: RmProgram,
    initial: RmState,
    h_values: Iterable[int],
    trials: int,
    *,
    seed: int = 0,
    jobs: int = 1,
    cfg: EncodingConfig | None = None,
    oracle_budget: int = 100_000,
    step_limit: int = 1_000_000,
) -> list[VerificationReport]:
    """Fraction of runs reproducing the deterministic machine, against the
    product bound computed from the oracle's decrement/yield sequence.

    A trajectory is faithful when it reaches a terminal solution whose
    decoded registers equal the oracle's final registers; runs cut off by
    the step budget count as unfaithful.
    """
    base = cfg or EncodingConfig(scheme=RECURSIVE)
    oracle = rm_run(rm, initial, max_steps=oracle_budget)
    if not oracle.halted:
        return [
            VerificationReport(
                name=f"termination(h={h})",
                verdict=CONSISTENT,
                notes=("not applicable: the machine does not halt on this input",),
                context={"h": h, "halts": False},
            )
            for h in h_values
        ]
    final = oracle.final
    reports = []
    for offset, h in enumerate(h_values):
        machine_cfg = EncodingConfig(
            scheme=RECURSIVE,
            h=h,
            sirna_per_cleave=base.sirna_per_cleave,
            sirna_per_degrade=base.sirna_per_degrade,
            aberrant_branch=base.aberrant_branch,
        )
        machine = machine_with_state(compile_recursive(rm, machine_cfg), initial)
        summaries = run_ensemble(
            machine.program,
            StopCondition.terminal(),
            trials,
            seed + offset,
            jobs=jobs,
            step_limit=step_limit,
        )
        faithful = 0
        for summary in summaries:
            if summary.outcome != "terminal":
                continue
            observed = decode_solution(summary.final, machine)
            if observed.halted and (observed.r1, observed.r2) == (final.r1, final.r2):
                faithful += 1
        estimate = faithful / trials
        ci_low, ci_high = wilson_interval(faithful, trials)
        bound = faithful_run_bound(h, _oracle_yields(oracle, machine_cfg))
        generic = termination_bound(h, oracle.decrement_executions)
        # Violated only when the whole 99% interval sits below the bound;
        # the boundary case (deterministic machines, bound exactly 1) leaves
        # no room above, so the interval width is the statistical tolerance.
        ok = ci_high >= bound
        notes = ()
        if not ok:
            notes = (f"99% interval [{ci_low:.4f}, {ci_high:.4f}] entirely below bound {bound:.4f}",)
        elif ci_low < bound:
            notes = (f"margin warning: lower confidence limit {ci_low:.4f} under bound {bound:.4f}",)
        reports.append(
            VerificationReport(
                name=f"termination(h={h})",
                exact=None,
                closed_form=None,
                bound=bound,
                mc_estimate=estimate,
                ci_low=ci_low,
                ci_high=ci_high,
                trials=trials,
                verdict=CONSISTENT if ok else VIOLATED,
                notes=notes,
                context={
                    "h": h,
                    "halts": True,
                    "d": oracle.decrement_executions,
                    "final_r1": final.r1,
                    "final_r2": final.r2,
                    "sum_bound": generic.sum_bound,
                    "product_bound": generic.product_bound,
                },
            )
        )
    return reports


# ---------------------------------------------------------------------------
# report output


def _report_row(report: VerificationReport) -> list:
    def cell(value):
        return "" if value is None else repr(value) if isinstance(value, float) else value

    return [
        report.name,
        cell(report.context.get("l", "")),
        cell(report.context.get("h", "")),
        cell(report.exact),
        cell(report.closed_form),
        cell(report.bound),
        cell(report.mc_estimate),
        cell(report.ci_low),
        cell(report.ci_high),
        report.trials,
        report.verdict,
    ]


def reports_to_csv(reports: Iterable[VerificationReport], out: IO[str]) -> None:
    writer = csv.writer(out)
    writer.writerow(
        ["name", "l", "h", "exact", "closed_form", "bound", "mc_estimate", "ci_low", "ci_high", "trials", "verdict"]
    )
    for report in reports:
        writer.writerow(_report_row(report))


def reports_to_json(reports: Iterable[VerificationReport]) -> str:
    payload = [
        {
            "name": r.name,
            "exact": r.exact,
            "closed_form": r.closed_form,
            "bound": r.bound,
            "mc_estimate": r.mc_estimate,
            "ci_low": r.ci_low,
            "ci_high": r.ci_high,
            "trials": r.trials,
            "verdict": r.verdict,
            "notes": list(r.notes),
            "context": r.context,
        }
        for r in reports
    ]
    return json.dumps(payload, indent=2, sort_keys=True)
