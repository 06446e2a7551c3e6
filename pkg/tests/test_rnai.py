"""Interference networks: stoichiometry audit and conservation properties."""

from __future__ import annotations

import math

import pytest

from cgfkit.cgf import Solution, enumerate_reactions
from cgfkit.rnai import RnaiParams, build_recursive_rnai, build_rnai, load_params, parse_param_overrides
from cgfkit.ssa import StopCondition, run_ensemble, simulate


def counts(**kwargs) -> Solution:
    return Solution.from_counts(kwargs)


# Expected consumed/produced multisets per reaction, probed on the smallest
# solution that enables exactly that reaction.
PLAIN_AUDIT = [
    ("transcription", counts(Gene=1), counts(Gene=1), counts(Gene=1, mRNA=1)),
    ("polymerization", counts(RdRp=1, mRNAab=1), counts(RdRp=1, mRNAab=1), counts(dsRNA=1, RdRp=1)),
    ("cleavage", counts(dsRNA=1, Dicer=1), counts(dsRNA=1, Dicer=1), counts(siRNA=2)),
    ("degradation", counts(mRNA=1, RISC=1), counts(mRNA=1, RISC=1), counts(RISC=1, Deg=1)),
]

RECURSIVE_AUDIT = [
    ("transcription", counts(Gene=1), counts(Gene=1), counts(Gene=1, mRNA=1)),
    ("polymerization", counts(RdRp=1, mRNAab=1), counts(RdRp=1, mRNAab=1), counts(dsRNA=1, RdRp=1)),
    ("cleavage", counts(dsRNA=1, Dicer=1), counts(dsRNA=1, Dicer=1), counts(siRNA=2)),
    ("degradation", counts(mRNA=1, RISC=1), counts(mRNA=1, RISC=1), counts(RISC=1, DegR=1)),
    ("dicer inhibition", counts(siRNA=1, Dicer=1), counts(siRNA=1, Dicer=1), counts()),
    ("risc inhibition", counts(siRNA=1, RISC=1), counts(siRNA=1, RISC=1), counts()),
]


class TestStoichiometry:
    @pytest.mark.parametrize("name,solution,consumed,produced", PLAIN_AUDIT)
    def test_plain_rows(self, name, solution, consumed, produced):
        program = build_rnai(RnaiParams())
        (reaction,) = enumerate_reactions(solution, program.env)
        assert reaction.consumed == consumed, name
        assert reaction.produced == produced, name

    @pytest.mark.parametrize("name,solution,consumed,produced", RECURSIVE_AUDIT)
    def test_recursive_rows(self, name, solution, consumed, produced):
        program = build_recursive_rnai(RnaiParams())
        matching = [
            r
            for r in enumerate_reactions(solution, program.env)
            if r.consumed == consumed and r.produced == produced
        ]
        assert len(matching) == 1, name

    def test_recursive_pair_solutions_have_single_reaction(self):
        # each probed pair enables exactly the audited reaction
        program = build_recursive_rnai(RnaiParams())
        for name, solution, _, _ in RECURSIVE_AUDIT:
            assert len(enumerate_reactions(solution, program.env)) == 1, name

    def test_degradation_fates_plain(self):
        program = build_rnai(RnaiParams())
        first, second = enumerate_reactions(counts(Deg=1), program.env)
        assert first.produced == counts()
        assert second.produced == counts(mRNAab=1)

    def test_degradation_fates_recursive_release_sirna(self):
        program = build_recursive_rnai(RnaiParams(sirna_per_degrade=3))
        first, second = enumerate_reactions(counts(DegR=1), program.env)
        assert first.produced == counts(siRNA=3)
        assert second.produced == counts(siRNA=3, mRNAab=1)

    def test_cleave_yield_configurable(self):
        program = build_rnai(RnaiParams(sirna_per_cleave=5))
        (reaction,) = enumerate_reactions(counts(dsRNA=1, Dicer=1), program.env)
        assert reaction.produced == counts(siRNA=5)

    def test_sirna_inert_in_plain_network(self):
        program = build_rnai(RnaiParams())
        assert enumerate_reactions(counts(siRNA=4), program.env) == []

    def test_inhibition_pairs_reach_terminal(self):
        program = build_recursive_rnai(RnaiParams())
        for pair in (counts(siRNA=1, Dicer=1), counts(siRNA=1, RISC=1)):
            (reaction,) = enumerate_reactions(pair, program.env)
            after = pair.subtract(reaction.consumed).add(reaction.produced)
            assert after == counts()
            assert enumerate_reactions(after, program.env) == []


class TestConservation:
    def test_dicer_nonincreasing_plain(self):
        params = RnaiParams(dsrna=6, dicer=4, mrna=3, risc=2, gene=1)
        program = build_rnai(params)
        trajectory = simulate(program, StopCondition.max_steps(200), seed=3)
        level = program.init.count("Dicer")
        for record in trajectory.steps:
            assert record.solution.count("Dicer") <= level
            level = record.solution.count("Dicer")

    def test_risc_conserved_by_degradation_destroyed_by_inhibition(self):
        params = RnaiParams(mrna=8, risc=3, sirna=3, gene=0)
        plain = simulate(build_rnai(params), StopCondition.max_steps(150), seed=5)
        for record in plain.steps:
            assert record.solution.count("RISC") == 3  # nothing eats RISC here
        recursive = simulate(build_recursive_rnai(params), StopCondition.max_steps(150), seed=5)
        level = 3
        for record in recursive.steps:
            now = record.solution.count("RISC")
            if now != level:
                assert now == level - 1
                assert record.reaction.channel == "r"
            level = now

    def test_sirna_nondecreasing_plain(self):
        params = RnaiParams(dsrna=5, dicer=5, mrna=5, risc=2, gene=1)
        trajectory = simulate(build_rnai(params), StopCondition.max_steps(300), seed=11)
        level = 0
        for record in trajectory.steps:
            assert record.solution.count("siRNA") >= level
            level = record.solution.count("siRNA")


class TestDynamics:
    def test_transcription_mean_growth(self):
        # counting process at constant rate: mRNA(t) ~ Poisson(rate * t)
        rate, horizon, trials = 1.5, 2.0, 2000
        program = build_rnai(RnaiParams(transcription_rate=rate, gene=1))
        summaries = run_ensemble(program, StopCondition.max_time(horizon), trials, seed=17)
        mean = sum(s.final.count("mRNA") for s in summaries) / trials
        expected = rate * horizon
        se = math.sqrt(expected / trials)
        assert abs(mean - expected) < 3 * se

    def test_strong_inhibition_attenuates_silencing(self):
        params = RnaiParams(
            dsrna=4,
            dicer=6,
            mrna=10,
            risc=6,
            sirna=8,
            dicer_inhibition_rate=50.0,
            risc_inhibition_rate=50.0,
            gene=0,
        )
        trials = 400
        plain = run_ensemble(build_rnai(params), StopCondition.terminal(), trials, seed=23, step_limit=4000)
        recursive = run_ensemble(
            build_recursive_rnai(params), StopCondition.terminal(), trials, seed=23, step_limit=4000
        )
        plain_mrna = sum(s.final.count("mRNA") for s in plain) / trials
        recursive_mrna = sum(s.final.count("mRNA") for s in recursive) / trials
        assert recursive_mrna > plain_mrna


class TestParams:
    def test_invalid_rate(self):
        with pytest.raises(ValueError):
            RnaiParams(cleavage_rate=0.0)

    def test_invalid_count(self):
        with pytest.raises(ValueError):
            RnaiParams(dicer=-1)

    def test_override_parsing(self):
        values = parse_param_overrides(["dicer=3", "cleavage_rate=0.25"])
        assert values == {"dicer": 3, "cleavage_rate": 0.25}
        with pytest.raises(ValueError):
            parse_param_overrides(["bogus=1"])

    def test_load_params_file(self):
        text = "# demo\nmrna=10\nrisc = 2\ntranscription_rate=0.5\n"
        params = load_params(text, {"mrna": 12})
        assert params.mrna == 12 and params.risc == 2
        assert params.transcription_rate == 0.5
