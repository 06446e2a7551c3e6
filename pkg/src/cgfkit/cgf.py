"""Chemical Ground Form: species, solutions, and reaction semantics.

A program is a pair of a reagent environment (species name -> molecule)
and an initial solution (multiset of species).  A molecule is a choice
of rate-annotated prefixes, each releasing a continuation solution.
Two rules drive the system: a tau prefix decays on its own, and a ?a
prefix collides with a !a prefix on the same channel.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping

import math
import re

__all__ = [
    "CgfError",
    "ChannelRateError",
    "DuplicateDefinitionError",
    "Molecule",
    "CgfProgram",
    "Prefix",
    "Reaction",
    "ReactionIndex",
    "ReactionNotEnabledError",
    "Solution",
    "UndefinedSpeciesError",
    "apply_reaction",
    "enumerate_reactions",
    "species_count",
]

_NAME_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*\Z")

TAU = "tau"
IN = "in"
OUT = "out"


class CgfError(ValueError):
    """Base class for malformed programs and illegal operations."""


class UndefinedSpeciesError(CgfError):
    pass


class DuplicateDefinitionError(CgfError):
    pass


class ChannelRateError(CgfError):
    pass


class ReactionNotEnabledError(CgfError):
    pass


def _check_name(name: str) -> str:
    if not _NAME_RE.match(name):
        raise CgfError(f"invalid species or channel name {name!r}")
    return name


@dataclass(frozen=True)
class Prefix:
    """A rate-annotated interaction capability: tau, ?channel or !channel."""

    kind: str
    channel: str | None
    rate: float = 1.0

    def __post_init__(self) -> None:
        if self.kind not in (TAU, IN, OUT):
            raise CgfError(f"unknown prefix kind {self.kind!r}")
        if self.kind == TAU:
            if self.channel is not None:
                raise CgfError("tau prefix carries no channel")
        else:
            _check_name(self.channel or "")
        if not (math.isfinite(self.rate) and self.rate > 0):
            raise CgfError(f"rate must be positive and finite, got {self.rate!r}")


def tau(rate: float = 1.0) -> Prefix:
    return Prefix(TAU, None, rate)


def receive(channel: str, rate: float = 1.0) -> Prefix:
    return Prefix(IN, channel, rate)


def send(channel: str, rate: float = 1.0) -> Prefix:
    return Prefix(OUT, channel, rate)


@dataclass(frozen=True)
class Solution:
    """Immutable multiset of species instances.

    Canonical form: name-sorted pairs with strictly positive counts, so
    equal multisets hash equally and can key state-space tables.
    """

    counts: tuple[tuple[str, int], ...] = ()

    @staticmethod
    def from_counts(counts: Mapping[str, int] | Iterable[tuple[str, int]]) -> "Solution":
        items = counts.items() if isinstance(counts, Mapping) else counts
        merged: Counter[str] = Counter()
        for name, n in items:
            if n < 0:
                raise CgfError(f"negative count {n} for species {name!r}")
            if n:
                merged[_check_name(name)] += n
        return Solution(tuple(sorted(merged.items())))

    @staticmethod
    def of(*names: str) -> "Solution":
        return Solution.from_counts(Counter(names))

    def count(self, name: str) -> int:
        for key, n in self.counts:
            if key == name:
                return n
        return 0

    @property
    def size(self) -> int:
        return sum(n for _, n in self.counts)

    @property
    def species(self) -> tuple[str, ...]:
        return tuple(name for name, _ in self.counts)

    def items(self) -> Iterator[tuple[str, int]]:
        return iter(self.counts)

    def as_dict(self) -> dict[str, int]:
        return dict(self.counts)

    def add(self, other: "Solution") -> "Solution":
        merged = dict(self.counts)
        for name, n in other.counts:
            merged[name] = merged.get(name, 0) + n
        return Solution(tuple(sorted(merged.items())))

    def subtract(self, other: "Solution") -> "Solution":
        merged = dict(self.counts)
        for name, n in other.counts:
            left = merged.get(name, 0) - n
            if left < 0:
                raise CgfError(f"cannot remove {n} of {name!r}: only {self.count(name)} present")
            if left:
                merged[name] = left
            else:
                del merged[name]
        return Solution(tuple(sorted(merged.items())))

    def contains(self, other: "Solution") -> bool:
        return all(self.count(name) >= n for name, n in other.counts)

    def __bool__(self) -> bool:
        return bool(self.counts)

    def __str__(self) -> str:
        if not self.counts:
            return "0"
        return " | ".join(f"{n}*{name}" if n > 1 else name for name, n in self.counts)


EMPTY_SOLUTION = Solution()


@dataclass(frozen=True)
class Molecule:
    """An ordered choice of (prefix, continuation) pairs; empty means inert."""

    choices: tuple[tuple[Prefix, Solution], ...] = ()

    @staticmethod
    def inert() -> "Molecule":
        return Molecule(())

    @staticmethod
    def of(*choices: tuple[Prefix, Solution]) -> "Molecule":
        return Molecule(tuple(choices))

    @property
    def is_inert(self) -> bool:
        return not self.choices


@dataclass(frozen=True, eq=False)
class CgfProgram:
    """Reagent environment plus initial solution.

    The environment is owned by the program and must not be mutated after
    construction; validation runs once here.
    """

    env: Mapping[str, Molecule]
    init: Solution
    channel_rates: dict[str, float] = field(init=False, repr=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "env", dict(self.env))
        for name in self.env:
            _check_name(name)
        self._validate_closed()
        object.__setattr__(self, "channel_rates", self._validate_channel_rates())

    def _validate_closed(self) -> None:
        for name, molecule in self.env.items():
            for _, continuation in molecule.choices:
                for used, _ in continuation.counts:
                    if used not in self.env:
                        raise UndefinedSpeciesError(
                            f"species {used!r} used in definition of {name!r} is not defined"
                        )
        for used, _ in self.init.counts:
            if used not in self.env:
                raise UndefinedSpeciesError(f"species {used!r} in the initial solution is not defined")

    def _validate_channel_rates(self) -> dict[str, float]:
        rates: dict[str, float] = {}
        for name, molecule in self.env.items():
            for prefix, _ in molecule.choices:
                if prefix.kind == TAU:
                    continue
                channel = prefix.channel or ""
                known = rates.setdefault(channel, prefix.rate)
                if known != prefix.rate:
                    raise ChannelRateError(
                        f"channel {channel!r} carries rate {prefix.rate} in {name!r}"
                        f" but rate {known} elsewhere"
                    )
        return rates

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, CgfProgram):
            return NotImplemented
        return dict(self.env) == dict(other.env) and self.init == other.init


@dataclass(frozen=True)
class Reaction:
    """One enabled decay or collision instance with its CTMC propensity.

    ``species``/``choice`` identify the decaying molecule for a decay and
    the ?-side for a collision; ``partner``/``partner_choice`` identify the
    !-side of a collision.
    """

    kind: str  # "decay" | "collision"
    species: str
    choice: int
    partner: str | None
    partner_choice: int | None
    channel: str | None
    propensity: float
    consumed: Solution
    produced: Solution

    @property
    def label(self) -> str:
        if self.kind == "decay":
            return f"tau:{self.species}.{self.choice}"
        return f"{self.channel}:{self.species}.{self.choice}+{self.partner}.{self.partner_choice}"

    def _sort_key(self) -> tuple:
        return (
            0 if self.kind == "decay" else 1,
            self.species,
            self.choice,
            self.partner or "",
            self.partner_choice or 0,
            self.channel or "",
        )


class ReactionIndex:
    """Reaction templates extracted from an environment once.

    Consumed/produced multisets of every possible decay and offer pairing
    are static per environment, so enumeration over a solution only has to
    look up counts and scale rates.  Emission order is presorted (decays by
    species and choice, then collisions by ?-side species, choice, !-side
    species, choice), which keeps trajectories replayable.
    """

    def __init__(self, env: Mapping[str, Molecule]):
        self.env = env
        # species -> [(choice, rate, consumed, produced)]
        self.decays: dict[str, list[tuple[int, float, Solution, Solution]]] = {}
        # ?-side species -> [(choice, out_species, out_choice, channel, rate, consumed, produced)]
        self.collisions: dict[str, list[tuple[int, str, int, str, float, Solution, Solution]]] = {}
        inputs: dict[str, list[tuple[str, int, float, Solution]]] = {}
        outputs: dict[str, list[tuple[str, int, float, Solution]]] = {}
        for name in sorted(env):
            for idx, (prefix, continuation) in enumerate(env[name].choices):
                if prefix.kind == TAU:
                    here = Solution(((name, 1),))
                    self.decays.setdefault(name, []).append(
                        (idx, prefix.rate, here, continuation)
                    )
                elif prefix.kind == IN:
                    inputs.setdefault(prefix.channel, []).append((name, idx, prefix.rate, continuation))
                else:
                    outputs.setdefault(prefix.channel, []).append((name, idx, prefix.rate, continuation))
        pairings = []
        for channel in set(inputs) & set(outputs):
            for in_species, i, rate, in_cont in inputs[channel]:
                for out_species, j, _, out_cont in outputs[channel]:
                    if in_species == out_species:
                        consumed = Solution(((in_species, 2),))
                    else:
                        consumed = Solution(tuple(sorted(((in_species, 1), (out_species, 1)))))
                    pairings.append(
                        (in_species, i, out_species, j, channel, rate, consumed, in_cont.add(out_cont))
                    )
        pairings.sort(key=lambda p: (p[0], p[1], p[2], p[3], p[4]))
        for in_species, i, out_species, j, channel, rate, consumed, produced in pairings:
            self.collisions.setdefault(in_species, []).append(
                (i, out_species, j, channel, rate, consumed, produced)
            )
        # Enabled-set and successor memos, keyed by solution counts.  Small
        # systems revisit the same handful of states constantly (retry
        # loops especially), so this turns most steps into lookups.
        self._enabled_cache: dict[tuple, tuple[float, tuple]] = {}
        self._successor_cache: dict[tuple[tuple, int], Solution] = {}

    def propensities(self, solution: Solution) -> list[tuple[float, Reaction]]:
        """(propensity, reaction) pairs of every enabled reaction, in the
        deterministic emission order; reactions carry their propensity too."""
        return [(r.propensity, r) for r in self.reactions(solution)]

    def scan(self, solution: Solution) -> list:
        """Lean enabled-reaction list of (propensity, (species, template));
        :meth:`materialize` rebuilds a full Reaction from an entry.  The
        last two template slots are always the consumed/produced pair."""
        counts = dict(solution.counts)
        decays = self.decays
        collisions = self.collisions
        enabled = []
        for name, n in solution.counts:
            if name not in self.env:
                raise UndefinedSpeciesError(f"species {name!r} is not defined")
            table = decays.get(name)
            if table:
                for template in table:
                    enabled.append((template[1] * n, (name, template)))
        for name, n in solution.counts:
            table = collisions.get(name)
            if table:
                for template in table:
                    out_species = template[1]
                    if out_species == name:
                        pairs = n * (n - 1)
                    else:
                        pairs = n * counts.get(out_species, 0)
                    if pairs:
                        enabled.append((template[4] * pairs, (name, template)))
        return enabled

    def enabled_with_total(self, solution: Solution) -> tuple[float, tuple]:
        """Total propensity plus the enabled (propensity, entry) tuple,
        memoized per distinct solution."""
        key = solution.counts
        hit = self._enabled_cache.get(key)
        if hit is None:
            enabled = tuple(self.scan(solution))
            total = 0.0
            for propensity, _ in enabled:
                total += propensity
            hit = (total, enabled)
            if len(self._enabled_cache) < 200_000:
                self._enabled_cache[key] = hit
        return hit

    def successor(self, solution: Solution, position: int, entry) -> Solution:
        """Apply the reaction behind ``entry`` (at ``position`` within the
        enabled tuple), memoized per (solution, position)."""
        key = (solution.counts, position)
        after = self._successor_cache.get(key)
        if after is None:
            template = entry[1]
            after = solution.subtract(template[-2]).add(template[-1])
            if len(self._successor_cache) < 200_000:
                self._successor_cache[key] = after
        return after

    @staticmethod
    def materialize(propensity: float, entry) -> Reaction:
        name, template = entry
        if len(template) == 4:
            choice, _, consumed, produced = template
            return Reaction(
                kind="decay",
                species=name,
                choice=choice,
                partner=None,
                partner_choice=None,
                channel=None,
                propensity=propensity,
                consumed=consumed,
                produced=produced,
            )
        i, out_species, j, channel, _, consumed, produced = template
        return Reaction(
            kind="collision",
            species=name,
            choice=i,
            partner=out_species,
            partner_choice=j,
            channel=channel,
            propensity=propensity,
            consumed=consumed,
            produced=produced,
        )

    def reactions(self, solution: Solution) -> list[Reaction]:
        return [self.materialize(propensity, entry) for propensity, entry in self.scan(solution)]


def enumerate_reactions(
    solution: Solution, env: Mapping[str, Molecule] | ReactionIndex
) -> list[Reaction]:
    """All enabled reactions of ``solution``, deterministically ordered.

    Decay propensity is rate * count; collision propensity is rate times
    the number of ordered distinct-instance offer pairs.
    """
    index = env if isinstance(env, ReactionIndex) else ReactionIndex(env)
    return index.reactions(solution)


def apply_reaction(solution: Solution, reaction: Reaction) -> Solution:
    if not solution.contains(reaction.consumed):
        raise ReactionNotEnabledError(f"reaction {reaction.label} not enabled in {solution}")
    return solution.subtract(reaction.consumed).add(reaction.produced)


def species_count(solution: Solution, name: str) -> int:
    return solution.count(name)


def terminal(solution: Solution, env: Mapping[str, Molecule] | ReactionIndex) -> bool:
    return not enumerate_reactions(solution, env)
