import numpy as np
import pytest
from hypothesis import given, strategies as st

from pars.errors import EmptyBatch
from pars.records import PromptRecord
from pars.sampler import (
    DiscardReason,
    ParsConfig,
    ParsOutcome,
    RoundStats,
    ScheduleMode,
    TemperatureSchedule,
    next_temperature,
    round_stats,
    run_pars,
    should_halt,
)
from pars.teacher import Candidate, PrefetchingTeacher, SimTeacher, TraceGenerator


class ScriptedTeacher(TraceGenerator):
    """Returns scripted predictions keyed by (round, j); None means a trace
    whose answer extraction failed."""

    def __init__(self, script, tokens_out=100):
        self.script = script
        self.tokens_out = tokens_out
        self.calls = []

    def generate(self, record, temperature, round_index, j):
        self.calls.append((round_index, j, temperature))
        prediction = self.script.get((round_index, j))
        trace = "" if prediction is None else f'{{"answer": {prediction}}}'
        return Candidate(trace=trace, prediction=prediction, tokens_in=10,
                         tokens_out=self.tokens_out, round_index=round_index,
                         batch_index_j=j, temperature=temperature)


def record(y=10.0, envelope=80.0, rid="p"):
    return PromptRecord(id=rid, ground_truth_y=y, prompt_text="q",
                        envelope_override=envelope)


class TestRoundStats:
    def test_matches_two_pass_oracle(self):
        errors = [2.0, 3.0, 4.0, 5.0]
        stats = round_stats(errors)
        assert stats.mean_error == pytest.approx(np.mean(errors), abs=1e-12)
        assert stats.sample_variance == pytest.approx(np.var(errors, ddof=1), abs=1e-12)
        assert stats.sample_variance == pytest.approx(5.0 / 3.0)
        assert stats.best_error == 2.0

    def test_constant_batch(self):
        stats = round_stats([3.0, 3.0, 3.0, 3.0])
        assert stats.sample_variance == 0.0
        assert stats.best_error == 3.0

    def test_single_sample_variance_zero(self):
        stats = round_stats([7.0])
        assert stats.sample_variance == 0.0
        assert stats.best_error == 7.0

    def test_improvement_against_previous_best(self):
        stats = round_stats([2.5, 4.0], prev_best=3.0, round_index=2)
        assert stats.improvement == pytest.approx(0.5)

    def test_empty_batch_raises(self):
        with pytest.raises(EmptyBatch):
            round_stats([])

    @given(st.lists(st.floats(min_value=0, max_value=100), min_size=2, max_size=12))
    def test_oracle_equivalence_randomized(self, errors):
        stats = round_stats(errors)
        assert stats.mean_error == pytest.approx(float(np.mean(errors)), abs=1e-9)
        assert stats.sample_variance == pytest.approx(
            float(np.var(errors, ddof=1)), abs=1e-9)
        assert stats.best_error == min(errors)


class TestShouldHalt:
    def test_variance_halt_from_round_one(self):
        stats = RoundStats(1, 3.0, 0.5, 2.0)
        assert should_halt(stats, ParsConfig(eps_var=1.0), 4) is DiscardReason.VARIANCE_HALT

    def test_improvement_halt(self):
        stats = RoundStats(2, 3.0, 5.0, 2.5, improvement=0.5)
        assert should_halt(stats, ParsConfig(eps_var=1.0, delta_imp=1.0),
                           8) is DiscardReason.IMPROVEMENT_HALT

    def test_budget_exhausted(self):
        stats = RoundStats(3, 3.0, 5.0, 2.5, improvement=2.0)
        assert should_halt(stats, ParsConfig(batch_size_b=4, k_max=12),
                           12) is DiscardReason.BUDGET_EXHAUSTED

    def test_no_trigger(self):
        stats = RoundStats(1, 3.0, 5.0, 2.0)
        assert should_halt(stats, ParsConfig(), 4) is None

    def test_variance_checked_before_improvement(self):
        stats = RoundStats(2, 3.0, 0.5, 2.5, improvement=0.5)
        assert should_halt(stats, ParsConfig(), 8) is DiscardReason.VARIANCE_HALT

    def test_halting_disabled_only_budget(self):
        cfg = ParsConfig(halting_enabled=False)
        stats = RoundStats(1, 3.0, 0.0, 3.0)
        assert should_halt(stats, cfg, 4) is None
        assert should_halt(stats, cfg, 12) is DiscardReason.BUDGET_EXHAUSTED


class TestTemperature:
    def test_additive_schedule(self):
        schedule = TemperatureSchedule(t_min=0.6, t_max=1.0, delta_t=0.2)
        assert next_temperature(0.6, schedule) == pytest.approx(0.8)
        assert next_temperature(0.8, schedule) == pytest.approx(1.0)
        assert next_temperature(1.0, schedule) == pytest.approx(1.0)

    def test_multiplicative_cap(self):
        schedule = TemperatureSchedule(t_min=0.5, t_max=0.9,
                                       mode=ScheduleMode.MULTIPLICATIVE, gamma=2.0)
        assert next_temperature(0.5, schedule) == pytest.approx(0.9)

    def test_fixed_point_at_cap(self):
        schedule = TemperatureSchedule()
        assert next_temperature(schedule.t_max, schedule) == schedule.t_max

    def test_sequence_non_decreasing_and_capped(self):
        schedule = TemperatureSchedule(t_min=0.6, t_max=1.0, delta_t=0.2)
        t, seq = schedule.t_min, [schedule.t_min]
        for _ in range(6):
            t = next_temperature(t, schedule)
            seq.append(t)
        assert seq == sorted(seq)
        assert max(seq) <= schedule.t_max
        assert seq[:4] == pytest.approx([0.6, 0.8, 1.0, 1.0])


class TestRunPars:
    def test_immediate_acceptance(self):
        teacher = ScriptedTeacher({(1, j): 10.0 for j in range(1, 5)})
        outcome = run_pars(record(), teacher)
        assert outcome.accepted is not None
        assert outcome.accepted.batch_index_j == 1
        assert outcome.candidates_generated_g == 1
        assert len(teacher.calls) == 1

    def test_constant_wrong_prediction_variance_halts(self):
        teacher = ScriptedTeacher({(1, j): 15.0 for j in range(1, 5)})
        outcome = run_pars(record(), teacher, pars_cfg=ParsConfig(eps_var=1.0))
        assert outcome.discard_reason is DiscardReason.VARIANCE_HALT
        assert outcome.candidates_generated_g == 4
        assert outcome.rounds[0].sample_variance == 0.0

    def test_smallest_j_accepted(self):
        script = {(1, 1): 15.0, (1, 2): 10.2, (1, 3): 10.1, (1, 4): 15.0}
        outcome = run_pars(record(), ScriptedTeacher(script))
        assert outcome.accepted.batch_index_j == 2

    def test_acceptance_in_later_round(self):
        script = {(1, j): 14.0 + j for j in range(1, 5)}
        script.update({(2, 1): 17.0, (2, 2): 10.5, (2, 3): 18.0, (2, 4): 19.0})
        cfg = ParsConfig(eps_var=0.5, delta_imp=-100.0)
        outcome = run_pars(record(), ScriptedTeacher(script), pars_cfg=cfg)
        assert outcome.accepted is not None
        assert (outcome.accepted.round_index, outcome.accepted.batch_index_j) == (2, 2)
        assert outcome.candidates_generated_g == 6

    def test_budget_truncation(self):
        script = {(r, j): 50.0 + r * j for r in range(1, 5) for j in range(1, 5)}
        cfg = ParsConfig(batch_size_b=4, k_max=10, halting_enabled=False)
        teacher = ScriptedTeacher(script)
        outcome = run_pars(record(), teacher, pars_cfg=cfg)
        assert outcome.discard_reason is DiscardReason.BUDGET_EXHAUSTED
        assert outcome.candidates_generated_g == 10
        # final round truncated to the remaining 2 candidates
        assert teacher.calls[-1][:2] == (3, 2)

    def test_extraction_failures_count_budget_not_stats(self):
        script = {(1, 1): None, (1, 2): 15.0, (1, 3): None, (1, 4): 17.0}
        outcome = run_pars(record(), ScriptedTeacher(script),
                           pars_cfg=ParsConfig(eps_var=2.0))
        assert outcome.candidates_generated_g == 4
        stats = outcome.rounds[0]
        assert stats.mean_error == pytest.approx(6.0)
        assert stats.best_error == pytest.approx(5.0)

    def test_all_extraction_failures_halt(self):
        script = {(r, j): None for r in range(1, 4) for j in range(1, 5)}
        outcome = run_pars(record(), ScriptedTeacher(script))
        assert outcome.discard_reason is DiscardReason.VARIANCE_HALT
        assert outcome.candidates_generated_g == 4

    def test_temperature_sequence_realized(self):
        cfg = ParsConfig(batch_size_b=4, k_max=20, halting_enabled=False)
        teacher = ScriptedTeacher({(r, j): 50.0 for r in range(1, 6) for j in range(1, 5)})
        run_pars(record(), teacher, pars_cfg=cfg)
        temps = {}
        for round_index, _, temperature in teacher.calls:
            temps[round_index] = temperature
        assert [temps[r] for r in sorted(temps)] == pytest.approx(
            [0.6, 0.8, 1.0, 1.0, 1.0])

    def test_determinism_with_sim_teacher(self, noiseless_sim):
        import dataclasses

        sim = dataclasses.replace(noiseless_sim, sigma_base=2.0, seed=7)
        out1 = run_pars(record(rid="d1"), SimTeacher(sim))
        out2 = run_pars(record(rid="d1"), SimTeacher(sim))
        assert out1 == out2

    def test_outcome_invariant_exactly_one_terminal(self):
        with pytest.raises(ValueError):
            ParsOutcome(accepted=None, discard_reason=None, rounds=(),
                        candidates_generated_g=0, tokens_in=0, tokens_out=0)

    def test_accepted_candidate_passes_gates(self, noiseless_sim):
        import dataclasses

        sim = dataclasses.replace(noiseless_sim, sigma_base=1.5, seed=3)
        for i in range(50):
            outcome = run_pars(record(rid=f"g{i}"), SimTeacher(sim))
            if outcome.accepted is not None:
                prediction = outcome.accepted.prediction
                assert 0.0 <= prediction <= 100.0
                assert abs(prediction - 10.0) <= 1.0
                assert prediction <= 80.0

    def test_prefetching_matches_sequential(self, noiseless_sim):
        import dataclasses

        sim = dataclasses.replace(noiseless_sim, sigma_base=2.0, seed=11)
        sequential = run_pars(record(rid="c1"), SimTeacher(sim))
        prefetched = run_pars(record(rid="c1"),
                              PrefetchingTeacher(SimTeacher(sim), max_workers=4))
        assert prefetched.accepted == sequential.accepted
        assert prefetched.discard_reason == sequential.discard_reason
        assert prefetched.candidates_generated_g == sequential.candidates_generated_g

    def test_prefetching_reports_overshoot_tokens(self):
        base = ScriptedTeacher({(1, j): 10.0 for j in range(1, 5)})
        outcome = run_pars(record(), PrefetchingTeacher(base, max_workers=4))
        assert outcome.accepted is not None
        assert outcome.candidates_generated_g == 1
        # prefetched generations beyond j=1 may land in overshoot, never in G
        assert outcome.tokens_out == base.tokens_out
        assert outcome.overshoot_tokens_out % base.tokens_out == 0

    def test_halting_reduces_budget_on_paired_seeds(self, noiseless_sim):
        import dataclasses

        sim = dataclasses.replace(noiseless_sim, sigma_base=2.0, seed=5)
        total_on = total_off = 0
        for i in range(200):
            rec = record(rid=f"h{i}")
            on = run_pars(rec, SimTeacher(sim), pars_cfg=ParsConfig())
            off = run_pars(rec, SimTeacher(sim),
                           pars_cfg=ParsConfig(halting_enabled=False))
            total_on += on.candidates_generated_g
            total_off += off.candidates_generated_g
        assert total_on <= total_off
