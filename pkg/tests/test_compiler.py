"""Machine encodings: shapes, encode/decode, exact probabilities, invariants."""

from __future__ import annotations

import random

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cgfkit.analysis import (
    absorption_probabilities,
    decrement_gadget,
    enumerate_state_space,
)
from cgfkit.audit import (
    decoded_instruction_trace,
    oracle_instruction_trace,
    token_count,
    wrong_jump,
)
from cgfkit.cgf import Solution, enumerate_reactions, tau
from cgfkit.compiler import (
    NAIVE,
    RECURSIVE,
    EncodingConfig,
    compile_naive,
    compile_recursive,
    decode_solution,
    encode_state,
    machine_with_state,
)
from cgfkit.rm import DecJump, Halt, Inc, RmProgram, RmState, rm_run, transfer_program
from cgfkit.ssa import StopCondition, run_ensemble, simulate


def hand_chain_probability(l: int, h: int) -> float:
    """Independent oracle: the embedded two-transient-state jump chain of the
    inhibited decrement, solved directly.

    From the instruction state the decrement wins with weight l against 1
    for entering the retry state; from retry the pool (h) sends the token
    back against 1 for jumping.  Solve (I - P) x = b for absorption into
    the decremented sink.
    """
    P = np.array([[0.0, 1.0 / (l + 1)], [h / (h + 1.0), 0.0]])
    b = np.array([l / (l + 1.0), 0.0])
    return float(np.linalg.solve(np.eye(2) - P, b)[0])


RECURSIVE_CFG = EncodingConfig(scheme=RECURSIVE, h=0)


class TestNaiveShapes:
    def test_increment_shape(self):
        machine = compile_naive(RmProgram((Inc(1), Halt())))
        env = machine.program.env
        prefix, continuation = env["I0"].choices[0]
        assert prefix.kind == "tau" and prefix.rate == 1.0
        assert continuation == Solution.of("dsRNA", "I1")
        assert env["I1"].is_inert

    def test_increment_r2_releases_mrna(self):
        machine = compile_naive(RmProgram((Inc(2), Halt())))
        assert machine.program.env["I0"].choices[0][1] == Solution.of("I1", "mRNA")

    def test_decrement_shape(self):
        machine = compile_naive(RmProgram((DecJump(1, 1), Halt())))
        choices = machine.program.env["I0"].choices
        assert choices[0][0].kind == "out" and choices[0][0].channel == "a1"
        assert choices[0][1] == Solution.of("I1")
        assert choices[1][0].kind == "tau"
        assert choices[1][1] == Solution.of("I1")

    def test_register_reagents(self):
        machine = compile_naive(RmProgram((DecJump(2, 1), Halt())))
        env = machine.program.env
        assert env["dsRNA"].choices[0][0].channel == "a1"
        assert env["mRNA"].choices[0][1] == Solution.of("Deg")
        deg = env["Deg"].choices
        assert [c[1] for c in deg] == [Solution(), Solution.of("mRNAab")]
        assert env["siRNA"].is_inert and env["mRNAab"].is_inert

    def test_all_rates_are_one(self):
        machine = compile_naive(transfer_program(5))
        for molecule in machine.program.env.values():
            for prefix, _ in molecule.choices:
                assert prefix.rate == 1.0

    def test_compiled_program_validates(self):
        # construction runs the full environment validation
        machine = compile_naive(transfer_program(5))
        assert "I0" in machine.program.env


class TestRecursiveShapes:
    def test_retry_reagent_choices(self):
        machine = compile_recursive(RmProgram((DecJump(1, 1), Halt())), RECURSIVE_CFG)
        retry = machine.program.env["B0"].choices
        assert retry[0][0].kind == "out" and retry[0][0].channel == "s"
        assert retry[0][1] == Solution.of("I0")
        assert retry[1][0].kind == "tau"
        assert retry[1][1] == Solution.of("I1")

    def test_inhibitor_is_recycled(self):
        machine = compile_recursive(RmProgram((DecJump(1, 1), Halt())), RECURSIVE_CFG)
        env = machine.program.env
        assert env["siRNA"].choices[0][0].channel == "s"
        assert env["siRNA"].choices[0][1] == Solution.of("siRNA")
        # an inhibition event consumes one siRNA and one B0 and re-emits both tokens
        solution = Solution.from_counts({"B0": 1, "siRNA": 3})
        reactions = [r for r in enumerate_reactions(solution, env) if r.kind == "collision"]
        (inhibit,) = reactions
        after = solution.subtract(inhibit.consumed).add(inhibit.produced)
        assert after.count("siRNA") == 3

    def test_yields_configurable(self):
        cfg = EncodingConfig(scheme=RECURSIVE, h=2, sirna_per_cleave=3, sirna_per_degrade=2)
        machine = compile_recursive(RmProgram((DecJump(1, 1), Halt())), cfg)
        env = machine.program.env
        assert env["dsRNA"].choices[0][1] == Solution.from_counts({"siRNA": 3})
        assert env["mRNA"].choices[0][1] == Solution.from_counts({"siRNA": 2})

    def test_aberrant_branch_variant(self):
        cfg = EncodingConfig(scheme=RECURSIVE, h=1, aberrant_branch=True)
        machine = compile_recursive(RmProgram((DecJump(2, 1), Halt())), cfg)
        env = machine.program.env
        assert env["mRNA"].choices[0][1] == Solution.of("DegR")
        fates = [c[1] for c in env["DegR"].choices]
        assert fates[0] == Solution.of("siRNA")
        assert fates[1] == Solution.of("siRNA", "mRNAab")

    def test_scheme_guard(self):
        with pytest.raises(ValueError):
            compile_recursive(RmProgram((Halt(),)), EncodingConfig(scheme=NAIVE))


class TestEncodeDecode:
    def test_encode_shape(self):
        cfg = EncodingConfig(scheme=RECURSIVE, h=3)
        assert encode_state(RmState(0, 2, 1), cfg) == Solution.from_counts(
            {"I0": 1, "dsRNA": 2, "mRNA": 1, "siRNA": 3}
        )

    def test_encode_naive_drops_inhibitor(self):
        assert encode_state(RmState(0, 0, 0), EncodingConfig(scheme=NAIVE)) == Solution.of("I0")

    def test_encoded_size(self):
        cfg = EncodingConfig(scheme=RECURSIVE, h=5)
        assert encode_state(RmState(2, 3, 4), cfg).size == 1 + 3 + 4 + 5

    def test_decode_inverts_encode(self):
        program = transfer_program(5)  # 12 instructions
        cfg = EncodingConfig(scheme=RECURSIVE, h=0)
        machine = compile_recursive(program, cfg)
        for pc in range(0, min(len(program.instructions), 11)):
            for r1 in range(0, 11, 5):
                for r2 in range(0, 11, 5):
                    for h in range(0, 11, 5):
                        cfg_h = EncodingConfig(scheme=RECURSIVE, h=h)
                        observed = decode_solution(encode_state(RmState(pc, r1, r2), cfg_h), machine)
                        assert (observed.instruction, observed.r1, observed.r2) == (pc, r1, r2)
                        assert observed.sirna == h

    def test_two_tokens_is_an_error(self):
        machine = compile_naive(RmProgram((Inc(1), Halt())))
        with pytest.raises(ValueError, match="tokens"):
            decode_solution(Solution.of("I0", "I1"), machine)

    def test_halted_run_decodes_final_registers(self):
        machine = machine_with_state(
            compile_recursive(transfer_program(), EncodingConfig(scheme=RECURSIVE, h=50)),
            RmState(0, 2, 3),
        )
        trajectory = simulate(machine.program, StopCondition.terminal(), seed=8)
        assert trajectory.outcome == "terminal"
        observed = decode_solution(trajectory.final, machine)
        assert observed.halted
        oracle = rm_run(transfer_program(), RmState(0, 2, 3))
        assert (observed.r1, observed.r2) == (oracle.final.r1, oracle.final.r2)


class TestExactProbabilities:
    def test_hand_oracle_spot_values(self):
        # frozen independent values: the proof chain solved by hand
        assert hand_chain_probability(1, 10) == pytest.approx(11 / 12, abs=1e-12)
        assert hand_chain_probability(2, 1) == pytest.approx(4 / 5, abs=1e-12)

    def test_recursive_gadget_matches_hand_oracle(self):
        for l, h in [(1, 10), (2, 1), (3, 7), (1, 1)]:
            machine = decrement_gadget(l, h)
            space = enumerate_state_space(machine.program)
            exact = absorption_probabilities(space, lambda s: s.count("I1") == 1)
            assert exact == pytest.approx(hand_chain_probability(l, h), abs=1e-10)

    def test_naive_gadget_even_race(self):
        # one register unit: decrement and wrong jump race at equal propensity
        machine = decrement_gadget(1, scheme=NAIVE)
        reactions = enumerate_reactions(machine.program.init, machine.program.env)
        assert sorted(r.propensity for r in reactions) == [1.0, 1.0]
        space = enumerate_state_space(machine.program)
        assert absorption_probabilities(space, lambda s: s.count("I1") == 1) == pytest.approx(0.5)
        assert absorption_probabilities(space, lambda s: s.count("I2") == 1) == pytest.approx(0.5)

    def test_naive_wrong_jump_rate(self):
        for l in range(1, 6):
            machine = decrement_gadget(l, scheme=NAIVE)
            space = enumerate_state_space(machine.program)
            wrong = absorption_probabilities(space, lambda s: s.count("I2") == 1)
            assert wrong == pytest.approx(1 / (l + 1), abs=1e-10)


class TestTrajectoryInvariants:
    def test_token_uniqueness_along_runs(self):
        machine = machine_with_state(
            compile_recursive(transfer_program(), EncodingConfig(scheme=RECURSIVE, h=5)),
            RmState(0, 2, 3),
        )
        summaries = run_ensemble(
            machine.program, StopCondition.terminal(), 50, seed=4, keep_steps=True, step_limit=5000
        )
        for summary in summaries:
            assert token_count(machine, machine.program.init) == 1
            for record in summary.trajectory.steps:
                assert token_count(machine, record.solution) == 1

    def test_inhibitor_monotone_and_fed_by_decrements(self):
        cfg = EncodingConfig(scheme=RECURSIVE, h=4, sirna_per_cleave=2, sirna_per_degrade=1)
        machine = machine_with_state(compile_recursive(transfer_program(), cfg), RmState(0, 2, 3))
        summaries = run_ensemble(
            machine.program, StopCondition.terminal(), 50, seed=14, keep_steps=True, step_limit=5000
        )
        for summary in summaries:
            before = machine.program.init
            for record in summary.trajectory.steps:
                delta = record.solution.count("siRNA") - before.count("siRNA")
                assert delta >= 0
                if record.reaction.kind == "collision" and record.reaction.channel == "a2":
                    assert delta == cfg.sirna_per_degrade
                if record.reaction.kind == "collision" and record.reaction.channel == "a1":
                    assert delta == cfg.sirna_per_cleave
                before = record.solution

    def test_wrong_jump_detector(self):
        machine = decrement_gadget(1, 1)
        for seed in range(40):
            trajectory = simulate(machine.program, StopCondition.terminal(), seed=seed)
            flagged = False
            before = machine.program.init
            for record in trajectory.steps:
                if wrong_jump(machine, before, record.reaction):
                    flagged = True
                before = record.solution
            wrongly_jumped = trajectory.final.count("I2") == 1
            assert flagged == wrongly_jumped

    def test_faithful_traces_match_oracle(self):
        # compare decoded machine states with the interpreter on runs
        # that never take a wrong jump
        rng = random.Random(5)
        oracle = rm_run(transfer_program(), RmState(0, 2, 3))
        machine = machine_with_state(
            compile_recursive(transfer_program(), EncodingConfig(scheme=RECURSIVE, h=8)),
            RmState(0, 2, 3),
        )
        matched = 0
        for seed in range(30):
            trajectory = simulate(machine.program, StopCondition.terminal(), seed=seed)
            before = machine.program.init
            clean = True
            for record in trajectory.steps:
                if wrong_jump(machine, before, record.reaction):
                    clean = False
                    break
                before = record.solution
            if not clean:
                continue
            assert decoded_instruction_trace(machine, trajectory) == oracle_instruction_trace(oracle)
            matched += 1
        assert matched >= 20


class TestIncrementOnly:
    @given(st.lists(st.sampled_from([1, 2]), min_size=1, max_size=6))
    @settings(max_examples=20, deadline=None)
    def test_increment_machines_are_deterministic(self, registers):
        program = RmProgram(tuple(Inc(r) for r in registers) + (Halt(),))
        oracle = rm_run(program, RmState(0, 0, 0))
        machine = compile_recursive(program, EncodingConfig(scheme=RECURSIVE, h=1))
        for seed in range(5):
            trajectory = simulate(machine.program, StopCondition.terminal(), seed=seed)
            observed = decode_solution(trajectory.final, machine)
            assert trajectory.outcome == "terminal"
            assert observed.halted
            assert (observed.r1, observed.r2) == (oracle.final.r1, oracle.final.r2)
