"""Shared fixtures: random program generation and instance-level oracles."""

from __future__ import annotations

import random
from collections import Counter

from cgfkit.cgf import IN, OUT, TAU, CgfProgram, Molecule, Prefix, Solution


def random_program(rng: random.Random, max_species: int = 6) -> CgfProgram:
    """A syntactically valid program with consistent channel rates."""
    names = [f"X{i}" for i in range(rng.randint(1, max_species))]
    channels = {ch: round(rng.uniform(0.1, 4.0), 3) for ch in ("a", "b", "c")}

    def random_solution(max_size: int = 4) -> Solution:
        picks = rng.randint(0, max_size)
        return Solution.from_counts(Counter(rng.choice(names) for _ in range(picks)))

    env = {}
    for name in names:
        choices = []
        for _ in range(rng.randint(0, 3)):
            kind = rng.choice([TAU, IN, OUT])
            if kind == TAU:
                prefix = Prefix(TAU, None, round(rng.uniform(0.1, 5.0), 3))
            else:
                channel = rng.choice(sorted(channels))
                prefix = Prefix(kind, channel, channels[channel])
            choices.append((prefix, random_solution()))
        env[name] = Molecule(tuple(choices))
    return CgfProgram(env, random_solution(max_size=5))


def brute_force_reactions(solution: Solution, env) -> tuple[dict, dict]:
    """Reference enumeration that instantiates every molecule copy.

    Returns aggregated propensities: (species, choice) -> total for decays,
    and (?species, ?choice, !species, !choice, channel) -> total for
    collisions over ordered pairs of distinct instances.
    """
    instances: list[str] = []
    for name, n in solution.items():
        instances.extend([name] * n)
    decays: Counter = Counter()
    collisions: Counter = Counter()
    for k, a in enumerate(instances):
        for i, (prefix, _) in enumerate(env[a].choices):
            if prefix.kind == TAU:
                decays[(a, i)] += prefix.rate
    for k, a in enumerate(instances):
        for m, b in enumerate(instances):
            if k == m:
                continue
            for i, (pa, _) in enumerate(env[a].choices):
                if pa.kind != IN:
                    continue
                for j, (pb, _) in enumerate(env[b].choices):
                    if pb.kind == OUT and pb.channel == pa.channel:
                        collisions[(a, i, b, j, pa.channel)] += pa.rate
    return dict(decays), dict(collisions)
