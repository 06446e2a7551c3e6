"""Trajectory audits for compiled machines.

These helpers inspect simulated runs of a compiled machine: counting
instruction tokens, watching the inhibitor pool, spotting wrong jumps, and
decoding the visited machine states for comparison with the deterministic
interpreter.
"""

from __future__ import annotations

from .cgf import Reaction, Solution
from .compiler import NAIVE, CompiledMachine, decode_solution
from .rm import DecJump, RmRun
from .ssa import Trajectory

__all__ = [
    "decoded_instruction_trace",
    "inhibitor_deltas",
    "oracle_instruction_trace",
    "token_count",
    "wrong_jump",
]


def token_count(machine: CompiledMachine, solution: Solution) -> int:
    return sum(n for name, n in solution.counts if name in machine.token_species)


def wrong_jump(machine: CompiledMachine, before: Solution, reaction: Reaction) -> bool:
    """True when this reaction takes a jump although the register is nonempty.

    The jump is the second choice of the instruction token (naive) or of the
    retry token (recursive); it is wrong exactly when the tested register
    unit is still present.
    """
    if reaction.kind != "decay" or reaction.choice != 1:
        return False
    try:
        index, retrying = machine.token_index(reaction.species)
    except KeyError:
        return False
    # the jump decay sits on the instruction token in the naive scheme and
    # on the retry token in the recursive one (where the instruction
    # token's tau choice merely enters the retry state)
    if retrying != (machine.config.scheme != NAIVE):
        return False
    instruction = machine.source.instructions[index]
    if not isinstance(instruction, DecJump):
        return False
    unit = ("dsRNA", "mRNA")[instruction.register - 1]
    return before.count(unit) > 0


def _collapse(points: list[tuple[int, int, int]]) -> list[tuple[int, int, int]]:
    collapsed: list[tuple[int, int, int]] = []
    for point in points:
        if not collapsed or collapsed[-1] != point:
            collapsed.append(point)
    return collapsed


def decoded_instruction_trace(machine: CompiledMachine, trajectory: Trajectory) -> list[tuple[int, int, int]]:
    """(pc, r1, r2) at every visited instruction-token state, collapsed.

    Retry states are skipped; consecutive duplicates (retry round trips)
    merge, mirroring :func:`oracle_instruction_trace`.
    """
    points: list[tuple[int, int, int]] = []
    solutions = [machine.program.init] + [record.solution for record in trajectory.steps]
    for solution in solutions:
        observed = decode_solution(solution, machine)
        if observed.instruction is None or observed.retrying:
            continue
        points.append((observed.instruction, observed.r1, observed.r2))
    return _collapse(points)


def oracle_instruction_trace(run: RmRun) -> list[tuple[int, int, int]]:
    return _collapse([(state.pc, state.r1, state.r2) for state in run.trace])


def inhibitor_deltas(trajectory: Trajectory, initial: Solution) -> list[int]:
    """Change of the siRNA count at each step."""
    counts = [initial.count("siRNA")] + [record.solution.count("siRNA") for record in trajectory.steps]
    return [after - before for before, after in zip(counts, counts[1:])]
