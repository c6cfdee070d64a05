"""Expected token-cost model for trace selection, plus fitting it from runs.

Per-prompt cost is the average number of generated traces times the per-trace
token cost, plus any selection-pass cost; the judge variant approximates the
judge pass as a second teacher pass. Per-accepted cost divides by the
acceptance rate.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import EmptyInput, ZeroAcceptance
from .sampler import ParsOutcome


@dataclass(frozen=True)
class TokenCostModel:
    t_teach_in: float
    t_teach_out: float
    t_select: float = 0.0
    k_avg: float = 0.0
    r_acc: float = 1.0
    judge_pass: bool = False

    def __post_init__(self):
        for name in ("t_teach_in", "t_teach_out", "t_select", "k_avg"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")
        if not 0.0 <= self.r_acc <= 1.0:
            raise ValueError("r_acc must lie in [0, 1]")


def tokens_per_prompt(model: TokenCostModel) -> float:
    per_trace = model.t_teach_in + model.t_teach_out
    if model.judge_pass:
        return 2.0 * model.k_avg * per_trace
    return model.k_avg * per_trace + model.t_select


def tokens_per_accepted(model: TokenCostModel) -> float:
    if model.r_acc <= 0.0:
        raise ZeroAcceptance("per-accepted cost undefined when r_acc == 0")
    return tokens_per_prompt(model) / model.r_acc


@dataclass(frozen=True)
class MeasuredCost:
    model: TokenCostModel
    total_tokens_in: int
    total_tokens_out: int
    overshoot_tokens_in: int
    overshoot_tokens_out: int
    n_prompts: int
    n_accepted: int

    @property
    def total_consumed_tokens(self) -> int:
        return self.total_tokens_in + self.total_tokens_out


def empirical_cost(outcomes: list[ParsOutcome],
                   judge_pass: bool = False) -> MeasuredCost:
    """Fit the cost model from observed runs and report exact token sums.

    Overshoot tokens (spent on generations never consumed as candidates) are
    excluded from the fitted averages and itemized separately.
    """
    if not outcomes:
        raise EmptyInput("no outcomes to account")
    n = len(outcomes)
    total_g = sum(o.candidates_generated_g for o in outcomes)
    n_accepted = sum(1 for o in outcomes if o.accepted is not None)
    total_in = sum(o.tokens_in for o in outcomes)
    total_out = sum(o.tokens_out for o in outcomes)
    k_avg = total_g / n
    t_in = total_in / total_g if total_g else 0.0
    t_out = total_out / total_g if total_g else 0.0
    model = TokenCostModel(
        t_teach_in=t_in,
        t_teach_out=t_out,
        t_select=0.0,
        k_avg=k_avg,
        r_acc=n_accepted / n,
        judge_pass=judge_pass,
    )
    return MeasuredCost(
        model=model,
        total_tokens_in=total_in,
        total_tokens_out=total_out,
        overshoot_tokens_in=sum(o.overshoot_tokens_in for o in outcomes),
        overshoot_tokens_out=sum(o.overshoot_tokens_out for o in outcomes),
        n_prompts=n,
        n_accepted=n_accepted,
    )
