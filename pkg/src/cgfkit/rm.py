"""Two-register Minsky machines: representation, interpreter, text format.

The interpreter is the deterministic ground truth that compiled stochastic
runs are checked against.  Conventions: a successful decrement advances to
the next instruction; decrementing an empty register jumps to the target.
Running past the last instruction halts (an implicit sink), as does an
explicit HALT.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, replace

__all__ = [
    "DecJump",
    "Halt",
    "Inc",
    "RmError",
    "RmParseError",
    "RmProgram",
    "RmRun",
    "RmState",
    "parse_rm",
    "print_rm",
    "rm_run",
    "rm_step",
    "transfer_program",
]


class RmError(ValueError):
    pass


class RmParseError(RmError):
    pass


@dataclass(frozen=True)
class Inc:
    register: int


@dataclass(frozen=True)
class DecJump:
    register: int
    target: int


@dataclass(frozen=True)
class Halt:
    pass


Instruction = Inc | DecJump | Halt


def _check_register(register: int) -> None:
    if register not in (1, 2):
        raise RmError(f"register must be 1 or 2, got {register}")


@dataclass(frozen=True)
class RmProgram:
    instructions: tuple[Instruction, ...]

    def __post_init__(self) -> None:
        if not self.instructions:
            raise RmError("a program needs at least one instruction")
        for index, instruction in enumerate(self.instructions):
            if isinstance(instruction, (Inc, DecJump)):
                _check_register(instruction.register)
            if isinstance(instruction, DecJump) and not (
                0 <= instruction.target < len(self.instructions)
            ):
                raise RmError(
                    f"instruction {index}: jump target {instruction.target} out of range"
                )

    def __len__(self) -> int:
        return len(self.instructions)


@dataclass(frozen=True)
class RmState:
    pc: int
    r1: int
    r2: int
    halted: bool = False

    def __post_init__(self) -> None:
        if self.r1 < 0 or self.r2 < 0:
            raise RmError("registers cannot be negative")

    def register(self, which: int) -> int:
        _check_register(which)
        return self.r1 if which == 1 else self.r2


@dataclass(frozen=True)
class RmRun:
    trace: tuple[RmState, ...]
    halted: bool
    decrement_executions: int
    # (register, succeeded) per executed DecJump, in execution order
    decrement_events: tuple[tuple[int, bool], ...]

    @property
    def final(self) -> RmState:
        return self.trace[-1]


def rm_step(program: RmProgram, state: RmState) -> RmState:
    if state.halted:
        raise RmError("cannot step a halted state")
    instruction = program.instructions[state.pc]
    if isinstance(instruction, Halt):
        return replace(state, halted=True)
    if isinstance(instruction, Inc):
        bumped = {"r1": state.r1 + 1} if instruction.register == 1 else {"r2": state.r2 + 1}
        return _advance(program, replace(state, **bumped))
    if state.register(instruction.register) > 0:
        dropped = {"r1": state.r1 - 1} if instruction.register == 1 else {"r2": state.r2 - 1}
        return _advance(program, replace(state, **dropped))
    return replace(state, pc=instruction.target)


def _advance(program: RmProgram, state: RmState) -> RmState:
    pc = state.pc + 1
    if pc == len(program.instructions):
        return replace(state, pc=pc, halted=True)
    return replace(state, pc=pc)


def rm_run(program: RmProgram, initial: RmState, max_steps: int = 100_000) -> RmRun:
    """Iterate the machine; budget exhaustion reports halted=False."""
    trace = [initial]
    state = initial
    events: list[tuple[int, bool]] = []
    for _ in range(max_steps):
        if state.halted:
            break
        instruction = program.instructions[state.pc]
        if isinstance(instruction, DecJump):
            events.append((instruction.register, state.register(instruction.register) > 0))
        state = rm_step(program, state)
        trace.append(state)
    return RmRun(
        trace=tuple(trace),
        halted=state.halted,
        decrement_executions=len(events),
        decrement_events=tuple(events),
    )


_LINE_RE = re.compile(
    r"(?P<index>\d+)\s*:\s*(?P<mnemonic>[A-Za-z]+)(?:\s+(?P<register>\S+))?(?:\s+(?P<target>\S+))?\s*\Z"
)


def _parse_register(text: str | None, lineno: int) -> int:
    if text not in ("r1", "r2"):
        raise RmParseError(f"line {lineno}: bad register name {text!r} (expected r1 or r2)")
    return 1 if text == "r1" else 2


def parse_rm(text: str) -> RmProgram:
    """Parse lines of "IDX: INC r1|r2", "IDX: DECJMP r1|r2 TARGET", "IDX: HALT"."""
    instructions: list[Instruction] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        source = raw.split("#", 1)[0].strip()
        if not source:
            continue
        match = _LINE_RE.match(source)
        if match is None:
            raise RmParseError(f"line {lineno}: cannot parse instruction {source!r}")
        index = int(match.group("index"))
        if index != len(instructions):
            raise RmParseError(
                f"line {lineno}: instruction index {index} out of order (expected {len(instructions)})"
            )
        mnemonic = match.group("mnemonic").upper()
        register, target = match.group("register"), match.group("target")
        if mnemonic == "INC":
            if target is not None:
                raise RmParseError(f"line {lineno}: INC takes a single register operand")
            instructions.append(Inc(_parse_register(register, lineno)))
        elif mnemonic == "DECJMP":
            if target is None or not target.isdigit():
                raise RmParseError(f"line {lineno}: DECJMP needs a numeric jump target")
            instructions.append(DecJump(_parse_register(register, lineno), int(target)))
        elif mnemonic == "HALT":
            if register is not None or target is not None:
                raise RmParseError(f"line {lineno}: HALT takes no operands")
            instructions.append(Halt())
        else:
            raise RmParseError(f"line {lineno}: unknown mnemonic {mnemonic!r}")
    try:
        return RmProgram(tuple(instructions))
    except RmError as err:
        raise RmParseError(str(err)) from err


def print_rm(program: RmProgram) -> str:
    lines = []
    for index, instruction in enumerate(program.instructions):
        if isinstance(instruction, Inc):
            lines.append(f"{index}: INC r{instruction.register}")
        elif isinstance(instruction, DecJump):
            lines.append(f"{index}: DECJMP r{instruction.register} {instruction.target}")
        else:
            lines.append(f"{index}: HALT")
    return "\n".join(lines) + "\n"


def transfer_program(capacity: int = 20) -> RmProgram:
    """Machine computing r1 := r1 + r2 for any r2 <= capacity.

    Successful decrements fall through to the next instruction, so an
    unbounded transfer loop cannot jump backwards; instead the drain is
    unrolled as a ladder of DECJMP/INC pairs that all bail out to HALT
    once r2 is empty.
    """
    if capacity < 1:
        raise RmError("capacity must be >= 1")
    halt_index = 2 * capacity + 1
    instructions: list[Instruction] = []
    for _ in range(capacity):
        instructions.append(DecJump(2, halt_index))
        instructions.append(Inc(1))
    instructions.append(DecJump(2, halt_index))
    instructions.append(Halt())
    return RmProgram(tuple(instructions))
