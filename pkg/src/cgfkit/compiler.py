"""Compiling register machines into CGF reagents.

Two schemes share the register encoding (r1 as dsRNA, r2 as mRNA, channels
a1/a2) and differ in how a decrement that finds its register empty behaves:

* naive: the jump branch is a bare decay racing the collision, so a
  nonempty register still jumps with probability 1/(count+1);
* recursive: the jump is guarded by an inhibitor species (siRNA) on
  channel s.  Each retry returns to the instruction, so wrong jumps
  need the lone jump decay to win against the whole inhibitor pool.

Every instruction i owns a token species I{i}; recursive decrements add a
retry token B{i}.  Exactly one token is present until the machine halts,
after which the halt index's inert token remains as a marker.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

from .cgf import CgfProgram, Molecule, Solution, receive, send, tau
from .rm import DecJump, Halt, Inc, RmProgram, RmState

__all__ = [
    "CompiledMachine",
    "EncodingConfig",
    "NAIVE",
    "Observation",
    "RECURSIVE",
    "compile_naive",
    "compile_recursive",
    "decode_solution",
    "encode_state",
    "machine_with_state",
]

NAIVE = "naive"
RECURSIVE = "recursive"

REGISTER_UNITS = ("dsRNA", "mRNA")
INHIBITOR = "siRNA"
ABERRANT = "mRNAab"
REGISTER_CHANNELS = ("a1", "a2")
INHIBITOR_CHANNEL = "s"


@dataclass(frozen=True)
class EncodingConfig:
    """Knobs of the machine encoding; rates are all fixed at 1.0 so branch
    probabilities are count ratios."""

    scheme: str = RECURSIVE
    h: int = 0
    sirna_per_cleave: int = 1
    sirna_per_degrade: int = 1
    aberrant_branch: bool = False

    def __post_init__(self) -> None:
        if self.scheme not in (NAIVE, RECURSIVE):
            raise ValueError(f"unknown scheme {self.scheme!r}")
        if self.h < 0:
            raise ValueError("initial inhibitor count must be nonnegative")
        if self.sirna_per_cleave < 1 or self.sirna_per_degrade < 1:
            raise ValueError("per-reaction inhibitor yields must be >= 1")


@dataclass(frozen=True)
class CompiledMachine:
    program: CgfProgram
    source: RmProgram
    config: EncodingConfig
    instruction_species: tuple[str, ...]  # index -> I{i}, including the off-end sink
    retry_species: tuple[tuple[str, int], ...]  # (B{i}, i) pairs, recursive only
    register_channels: tuple[str, str] = REGISTER_CHANNELS
    inhibitor_channel: str = INHIBITOR_CHANNEL

    @property
    def token_species(self) -> frozenset[str]:
        return frozenset(self.instruction_species) | frozenset(name for name, _ in self.retry_species)

    def token_index(self, species: str) -> tuple[int, bool]:
        """(instruction index, is_retry) of a token species."""
        for index, name in enumerate(self.instruction_species):
            if name == species:
                return index, False
        for name, index in self.retry_species:
            if name == species:
                return index, True
        raise KeyError(species)


@dataclass(frozen=True)
class Observation:
    """Decoded machine view of a solution."""

    instruction: int | None
    retrying: bool
    halted: bool
    r1: int
    r2: int
    sirna: int


def _unit_solution(*entries: tuple[str, int]) -> Solution:
    return Solution.from_counts(dict(entries))


def _instruction_names(rm: RmProgram) -> tuple[tuple[str, ...], bool]:
    """Token names by index; True when the off-end sink I{len} is referenced."""
    size = len(rm.instructions)
    off_end = any(
        isinstance(ins, (Inc, DecJump)) and index + 1 == size
        for index, ins in enumerate(rm.instructions)
    )
    names = tuple(f"I{i}" for i in range(size + 1 if off_end else size))
    return names, off_end


def _register_unit(register: int) -> str:
    return REGISTER_UNITS[register - 1]


def _compile(rm: RmProgram, cfg: EncodingConfig) -> CompiledMachine:
    names, off_end = _instruction_names(rm)
    env: dict[str, Molecule] = {}
    retries: list[tuple[str, int]] = []
    for index, instruction in enumerate(rm.instructions):
        token = names[index]
        if isinstance(instruction, Halt):
            env[token] = Molecule.inert()
        elif isinstance(instruction, Inc):
            unit = _register_unit(instruction.register)
            env[token] = Molecule.of((tau(), _unit_solution((unit, 1), (names[index + 1], 1))))
        else:
            channel = REGISTER_CHANNELS[instruction.register - 1]
            onward = _unit_solution((names[index + 1], 1))
            target = _unit_solution((names[instruction.target], 1))
            if cfg.scheme == NAIVE:
                env[token] = Molecule.of((send(channel), onward), (tau(), target))
            else:
                retry = f"B{index}"
                retries.append((retry, index))
                env[token] = Molecule.of(
                    (send(channel), onward),
                    (tau(), _unit_solution((retry, 1))),
                )
                env[retry] = Molecule.of(
                    (send(INHIBITOR_CHANNEL), _unit_solution((token, 1))),
                    (tau(), target),
                )
    if off_end:
        env[names[-1]] = Molecule.inert()
    env.update(_register_reagents(cfg))
    program = CgfProgram(env, encode_state(RmState(0, 0, 0), cfg))
    return CompiledMachine(
        program=program,
        source=rm,
        config=cfg,
        instruction_species=names,
        retry_species=tuple(retries),
    )


def _register_reagents(cfg: EncodingConfig) -> dict[str, Molecule]:
    sirna_cleave = _unit_solution((INHIBITOR, cfg.sirna_per_cleave))
    reagents: dict[str, Molecule] = {
        "dsRNA": Molecule.of((receive(REGISTER_CHANNELS[0]), sirna_cleave)),
        ABERRANT: Molecule.inert(),
    }
    if cfg.scheme == NAIVE:
        reagents[INHIBITOR] = Molecule.inert()
        reagents["mRNA"] = Molecule.of((receive(REGISTER_CHANNELS[1]), Solution.of("Deg")))
        reagents["Deg"] = Molecule.of((tau(), Solution()), (tau(), Solution.of(ABERRANT)))
        return reagents
    reagents[INHIBITOR] = Molecule.of((receive(INHIBITOR_CHANNEL), Solution.of(INHIBITOR)))
    sirna_degrade = _unit_solution((INHIBITOR, cfg.sirna_per_degrade))
    if cfg.aberrant_branch:
        reagents["mRNA"] = Molecule.of((receive(REGISTER_CHANNELS[1]), Solution.of("DegR")))
        reagents["DegR"] = Molecule.of(
            (tau(), sirna_degrade),
            (tau(), sirna_degrade.add(Solution.of(ABERRANT))),
        )
    else:
        reagents["mRNA"] = Molecule.of((receive(REGISTER_CHANNELS[1]), sirna_degrade))
    return reagents


def compile_naive(rm: RmProgram, cfg: EncodingConfig | None = None) -> CompiledMachine:
    """Direct encoding: decrements race a bare jump decay, so a nonempty
    register jumps wrongly with probability 1/(count+1)."""
    cfg = replace(cfg, scheme=NAIVE, h=0) if cfg is not None else EncodingConfig(scheme=NAIVE)
    return _compile(rm, cfg)


def compile_recursive(rm: RmProgram, cfg: EncodingConfig) -> CompiledMachine:
    """Inhibited encoding: cfg.h inhibitor copies guard every jump, and each
    successful decrement feeds the pool."""
    if cfg.scheme != RECURSIVE:
        raise ValueError("compile_recursive needs cfg.scheme == 'recursive'")
    return _compile(rm, cfg)


def encode_state(state: RmState, cfg: EncodingConfig) -> Solution:
    """Solution holding the pc token, register units, and the inhibitor pool."""
    counts = {
        f"I{state.pc}": 1,
        "dsRNA": state.r1,
        "mRNA": state.r2,
    }
    if cfg.scheme == RECURSIVE:
        counts[INHIBITOR] = cfg.h
    return Solution.from_counts(counts)


def machine_with_state(machine: CompiledMachine, state: RmState) -> CompiledMachine:
    """Same reagents, initial solution encoding the given machine state."""
    solution = encode_state(state, machine.config)
    for name, _ in solution.counts:
        if name not in machine.program.env:
            raise ValueError(f"state {state} is not representable: no species {name!r}")
    return replace(machine, program=CgfProgram(machine.program.env, solution))


def decode_solution(solution: Solution, machine: CompiledMachine) -> Observation:
    """Read the unique instruction token and register counts back out.

    A token at a HALT instruction (or past the end) reports halted; more
    than one token means the encoding invariant broke.
    """
    tokens = [
        (name, count) for name, count in solution.counts if name in machine.token_species
    ]
    total = sum(count for _, count in tokens)
    if total > 1:
        raise ValueError(f"solution holds {total} instruction tokens: {tokens}")
    counts = solution.as_dict()
    if not tokens:
        return Observation(None, False, True, counts.get("dsRNA", 0), counts.get("mRNA", 0), counts.get(INHIBITOR, 0))
    index, retrying = machine.token_index(tokens[0][0])
    instructions = machine.source.instructions
    halted = index >= len(instructions) or isinstance(instructions[index], Halt)
    return Observation(
        instruction=index,
        retrying=retrying,
        halted=halted,
        r1=counts.get("dsRNA", 0),
        r2=counts.get("mRNA", 0),
        sirna=counts.get(INHIBITOR, 0),
    )
