"""RNA-interference reaction networks as CGF programs.

The plain network wires transcription, polymerization, cleavage and
degradation; the recursive variant adds inhibition of Dicer and RISC by
the accumulating siRNA pool.  Reactions realized per species pair:

    Gene            -> mRNA + Gene            (transcription, catalytic Gene)
    RdRp + mRNAab   -> dsRNA + RdRp           (polymerization, channel p)
    dsRNA + Dicer   -> k1 * siRNA             (cleavage, channel c; Dicer spent)
    mRNA + RISC     -> Deg + RISC             (degradation, channel g)
    Deg             -> 0  |  mRNAab           (fate of a degraded message)
    siRNA + Dicer   -> 0                      (inhibition, channel d, recursive)
    siRNA + RISC    -> 0                      (inhibition, channel r, recursive)

In the recursive network the degradation fate also releases k2 siRNAs.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass

from .cgf import CgfProgram, Molecule, Solution, receive, send, tau

__all__ = ["RnaiParams", "build_rnai", "build_recursive_rnai", "load_params", "parse_param_overrides"]


@dataclass(frozen=True)
class RnaiParams:
    transcription_rate: float = 1.0
    polymerization_rate: float = 1.0
    cleavage_rate: float = 1.0
    degradation_rate: float = 1.0
    # fate split of a degraded message: plain loss vs aberration
    degrade_branch_rate: float = 1.0
    aberrate_branch_rate: float = 1.0
    dicer_inhibition_rate: float = 1.0
    risc_inhibition_rate: float = 1.0
    sirna_per_cleave: int = 2
    sirna_per_degrade: int = 1
    dsrna: int = 0
    mrna: int = 0
    mrna_ab: int = 0
    sirna: int = 0
    dicer: int = 0
    risc: int = 0
    rdrp: int = 0
    gene: int = 0

    def __post_init__(self) -> None:
        for name, value in dataclasses.asdict(self).items():
            if name.endswith("_rate") and value <= 0:
                raise ValueError(f"{name} must be positive")
            if not name.endswith("_rate") and value < 0:
                raise ValueError(f"{name} must be nonnegative")
        if self.sirna_per_cleave < 1 or self.sirna_per_degrade < 1:
            raise ValueError("siRNA yields must be >= 1")


def _initial(params: RnaiParams) -> Solution:
    return Solution.from_counts(
        {
            "dsRNA": params.dsrna,
            "mRNA": params.mrna,
            "mRNAab": params.mrna_ab,
            "siRNA": params.sirna,
            "Dicer": params.dicer,
            "RISC": params.risc,
            "RdRp": params.rdrp,
            "Gene": params.gene,
        }
    )


def build_rnai(params: RnaiParams) -> CgfProgram:
    """Plain interference network; siRNA is inert (nothing consumes it)."""
    sirnas = Solution.from_counts({"siRNA": params.sirna_per_cleave})
    env = {
        "Gene": Molecule.of((tau(params.transcription_rate), Solution.of("mRNA", "Gene"))),
        "RdRp": Molecule.of((send("p", params.polymerization_rate), Solution())),
        "mRNAab": Molecule.of((receive("p", params.polymerization_rate), Solution.of("dsRNA", "RdRp"))),
        "Dicer": Molecule.of((send("c", params.cleavage_rate), Solution())),
        "dsRNA": Molecule.of((receive("c", params.cleavage_rate), sirnas)),
        "RISC": Molecule.of((send("g", params.degradation_rate), Solution.of("RISC"))),
        "mRNA": Molecule.of((receive("g", params.degradation_rate), Solution.of("Deg"))),
        "Deg": Molecule.of(
            (tau(params.degrade_branch_rate), Solution()),
            (tau(params.aberrate_branch_rate), Solution.of("mRNAab")),
        ),
        "siRNA": Molecule.inert(),
    }
    return CgfProgram(env, _initial(params))


def build_recursive_rnai(params: RnaiParams) -> CgfProgram:
    """Interference network with feedback: siRNA also destroys Dicer and RISC,
    and degradation itself feeds the siRNA pool."""
    cleave_sirnas = Solution.from_counts({"siRNA": params.sirna_per_cleave})
    degrade_sirnas = Solution.from_counts({"siRNA": params.sirna_per_degrade})
    env = {
        "Gene": Molecule.of((tau(params.transcription_rate), Solution.of("mRNA", "Gene"))),
        "RdRp": Molecule.of((send("p", params.polymerization_rate), Solution())),
        "mRNAab": Molecule.of((receive("p", params.polymerization_rate), Solution.of("dsRNA", "RdRp"))),
        "Dicer": Molecule.of(
            (receive("d", params.dicer_inhibition_rate), Solution()),
            (send("c", params.cleavage_rate), Solution()),
        ),
        "dsRNA": Molecule.of((receive("c", params.cleavage_rate), cleave_sirnas)),
        "RISC": Molecule.of(
            (receive("r", params.risc_inhibition_rate), Solution()),
            (send("g", params.degradation_rate), Solution.of("RISC")),
        ),
        "mRNA": Molecule.of((receive("g", params.degradation_rate), Solution.of("DegR"))),
        "DegR": Molecule.of(
            (tau(params.degrade_branch_rate), degrade_sirnas),
            (tau(params.aberrate_branch_rate), degrade_sirnas.add(Solution.of("mRNAab"))),
        ),
        "siRNA": Molecule.of(
            (send("d", params.dicer_inhibition_rate), Solution()),
            (send("r", params.risc_inhibition_rate), Solution()),
        ),
    }
    return CgfProgram(env, _initial(params))


_INT_FIELDS = {
    f.name for f in dataclasses.fields(RnaiParams) if not f.name.endswith("_rate")
}


def parse_param_overrides(pairs: list[str]) -> dict[str, float | int]:
    """Parse "key=value" strings against the RnaiParams fields."""
    known = {f.name for f in dataclasses.fields(RnaiParams)}
    values: dict[str, float | int] = {}
    for pair in pairs:
        key, _, raw = pair.partition("=")
        key = key.strip()
        if not _ or key not in known:
            raise ValueError(f"unknown parameter {pair!r} (fields: {', '.join(sorted(known))})")
        values[key] = int(raw) if key in _INT_FIELDS else float(raw)
    return values


def load_params(text: str, overrides: dict[str, float | int] | None = None) -> RnaiParams:
    """Build params from flat "key=value" lines plus optional overrides."""
    pairs = [
        line.split("#", 1)[0].strip()
        for line in text.splitlines()
        if line.split("#", 1)[0].strip()
    ]
    values = parse_param_overrides(pairs)
    if overrides:
        values.update(overrides)
    return RnaiParams(**values)
