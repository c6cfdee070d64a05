import pytest
from hypothesis import given, strategies as st

from pars.accounting import (
    MeasuredCost,
    TokenCostModel,
    empirical_cost,
    tokens_per_accepted,
    tokens_per_prompt,
)
from pars.errors import EmptyInput, ZeroAcceptance
from pars.sampler import DiscardReason, ParsOutcome
from pars.teacher import Candidate


def outcome(g, tokens_in, tokens_out, accepted=False,
            overshoot_in=0, overshoot_out=0):
    candidate = None
    reason = DiscardReason.BUDGET_EXHAUSTED
    if accepted:
        candidate = Candidate(trace="t", prediction=1.0, tokens_in=0,
                              tokens_out=0, round_index=1, batch_index_j=1,
                              temperature=0.6)
        reason = None
    return ParsOutcome(accepted=candidate, discard_reason=reason, rounds=(),
                       candidates_generated_g=g, tokens_in=tokens_in,
                       tokens_out=tokens_out, overshoot_tokens_in=overshoot_in,
                       overshoot_tokens_out=overshoot_out)


class TestWorkedExample:
    MODEL = TokenCostModel(t_teach_in=900, t_teach_out=2000, t_select=0,
                           k_avg=6.4, r_acc=0.8)

    def test_per_prompt_offline(self):
        assert tokens_per_prompt(self.MODEL) == pytest.approx(18_560, abs=1e-6)

    def test_per_prompt_judge(self):
        model = TokenCostModel(t_teach_in=900, t_teach_out=2000, t_select=0,
                               k_avg=6.4, r_acc=0.8, judge_pass=True)
        assert tokens_per_prompt(model) == pytest.approx(37_120, abs=1e-6)

    def test_per_accepted_offline(self):
        assert tokens_per_accepted(self.MODEL) == pytest.approx(23_200, abs=1e-6)

    def test_per_accepted_judge(self):
        model = TokenCostModel(t_teach_in=900, t_teach_out=2000, t_select=0,
                               k_avg=6.4, r_acc=0.8, judge_pass=True)
        assert tokens_per_accepted(model) == pytest.approx(46_400, abs=1e-6)


def test_zero_budget_zero_cost():
    model = TokenCostModel(t_teach_in=900, t_teach_out=2000, t_select=0, k_avg=0)
    assert tokens_per_prompt(model) == 0.0


def test_r_acc_one_identity():
    model = TokenCostModel(t_teach_in=10, t_teach_out=20, t_select=5,
                           k_avg=3, r_acc=1.0)
    assert tokens_per_accepted(model) == tokens_per_prompt(model)


def test_zero_acceptance_raises():
    model = TokenCostModel(t_teach_in=10, t_teach_out=20, k_avg=3, r_acc=0.0)
    with pytest.raises(ZeroAcceptance):
        tokens_per_accepted(model)


@given(
    t_in=st.floats(min_value=0, max_value=1e4),
    t_out=st.floats(min_value=0, max_value=1e4),
    t_select=st.floats(min_value=0, max_value=1e4),
    k_avg=st.floats(min_value=0, max_value=100),
    r_acc=st.floats(min_value=0.01, max_value=1.0),
    judge=st.booleans(),
)
def test_per_accepted_times_r_acc_identity(t_in, t_out, t_select, k_avg, r_acc, judge):
    model = TokenCostModel(t_teach_in=t_in, t_teach_out=t_out, t_select=t_select,
                           k_avg=k_avg, r_acc=r_acc, judge_pass=judge)
    assert tokens_per_accepted(model) * r_acc == pytest.approx(
        tokens_per_prompt(model), rel=1e-12, abs=1e-9)


@given(
    t_in=st.floats(min_value=0, max_value=1e4),
    bump=st.floats(min_value=0, max_value=1e3),
)
def test_per_prompt_monotone(t_in, bump):
    base = TokenCostModel(t_teach_in=t_in, t_teach_out=100, t_select=10, k_avg=5)
    for field, value in (("t_teach_in", t_in + bump), ("t_teach_out", 100 + bump),
                         ("t_select", 10 + bump), ("k_avg", 5 + bump)):
        import dataclasses

        bumped = dataclasses.replace(base, **{field: value})
        assert tokens_per_prompt(bumped) >= tokens_per_prompt(base)


class TestEmpiricalCost:
    def test_simple_arithmetic(self):
        cost = empirical_cost([outcome(1, 900, 2000, accepted=True),
                               outcome(3, 2700, 6000)])
        assert cost.model.k_avg == pytest.approx(2.0)
        assert cost.model.r_acc == pytest.approx(0.5)

    def test_all_accepted_at_one(self):
        cost = empirical_cost([outcome(1, 900, 2000, accepted=True)] * 4)
        assert cost.model.k_avg == 1.0
        assert cost.model.r_acc == 1.0

    def test_overshoot_itemized_separately(self):
        cost = empirical_cost([outcome(1, 900, 2000, accepted=True,
                                       overshoot_in=100, overshoot_out=300)])
        assert cost.overshoot_tokens_in == 100
        assert cost.overshoot_tokens_out == 300
        # fitted averages come only from consumed tokens
        assert cost.model.t_teach_in == pytest.approx(900)
        assert cost.model.t_teach_out == pytest.approx(2000)

    def test_empty_raises(self):
        with pytest.raises(EmptyInput):
            empirical_cost([])

    def test_fitted_model_predicts_measured_totals(self):
        import dataclasses

        from pars.experiments import make_sim_corpus
        from pars.sampler import run_pars
        from pars.teacher import SimTeacher, SimTeacherConfig

        sim = SimTeacherConfig(seed=3)
        corpus = make_sim_corpus(1000, 3)
        teacher = SimTeacher(sim)
        outcomes = [run_pars(r, teacher) for r in corpus]
        cost = empirical_cost(outcomes)
        predicted = tokens_per_prompt(cost.model) * cost.n_prompts
        measured = cost.total_consumed_tokens
        assert predicted == pytest.approx(measured, rel=0.05)
