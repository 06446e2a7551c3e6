"""cgfkit: a stochastic Chemical Ground Form engine with a register-machine
compiler, interference-network builders, and verification tooling."""

from .cgf import (
    CgfError,
    CgfProgram,
    Molecule,
    Prefix,
    Reaction,
    Solution,
    apply_reaction,
    enumerate_reactions,
    species_count,
)
from .compiler import (
    CompiledMachine,
    EncodingConfig,
    compile_naive,
    compile_recursive,
    decode_solution,
    encode_state,
)
from .parser import parse_cgf, print_cgf
from .rm import DecJump, Halt, Inc, RmProgram, RmState, parse_rm, print_rm, rm_run, rm_step
from .ssa import StopCondition, Trajectory, run_ensemble, simulate

__version__ = "0.1.0"
