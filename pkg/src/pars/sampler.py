"""Round loop for physics-aware rejection sampling.

Per prompt: draw mini-batches of candidates at an increasing temperature,
accept the earliest candidate that passes all gates, otherwise apply
variance / improvement / budget halting before starting the next round.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from enum import Enum

from .errors import EmptyBatch
from .gates import GateConfig, check
from .records import PromptRecord
from .teacher import Candidate, TraceGenerator

logger = logging.getLogger(__name__)


class ScheduleMode(Enum):
    ADDITIVE = "additive"
    MULTIPLICATIVE = "multiplicative"


@dataclass(frozen=True)
class TemperatureSchedule:
    t_min: float = 0.6
    t_max: float = 1.0
    mode: ScheduleMode = ScheduleMode.ADDITIVE
    delta_t: float = 0.2
    gamma: float = 2.0

    def __post_init__(self):
        if self.t_min <= 0:
            raise ValueError("t_min must be > 0")
        if self.t_max < self.t_min:
            raise ValueError("t_max must be >= t_min")
        if self.mode is ScheduleMode.ADDITIVE and self.delta_t <= 0:
            raise ValueError("additive schedule needs delta_t > 0")
        if self.mode is ScheduleMode.MULTIPLICATIVE and self.gamma <= 1:
            raise ValueError("multiplicative schedule needs gamma > 1")


def next_temperature(t_r: float, schedule: TemperatureSchedule) -> float:
    if schedule.mode is ScheduleMode.ADDITIVE:
        return min(schedule.t_max, t_r + schedule.delta_t)
    return min(schedule.t_max, schedule.gamma * t_r)


class DiscardReason(Enum):
    VARIANCE_HALT = "VARIANCE_HALT"
    IMPROVEMENT_HALT = "IMPROVEMENT_HALT"
    BUDGET_EXHAUSTED = "BUDGET_EXHAUSTED"


@dataclass(frozen=True)
class ParsConfig:
    batch_size_b: int = 4
    k_max: int = 12
    eps_var: float = 1.0
    delta_imp: float = 1.0
    schedule: TemperatureSchedule = field(default_factory=TemperatureSchedule)
    halting_enabled: bool = True

    def __post_init__(self):
        if self.batch_size_b < 1:
            raise ValueError("batch_size_b must be >= 1")
        if self.k_max < self.batch_size_b:
            raise ValueError("k_max must be >= batch_size_b")
        if self.eps_var < 0:
            raise ValueError("eps_var must be >= 0")


@dataclass(frozen=True)
class RoundStats:
    round_index_r: int
    mean_error: float
    sample_variance: float
    best_error: float
    improvement: float | None = None


def round_stats(errors: list[float], prev_best: float | None = None,
                round_index: int = 1) -> RoundStats:
    """Mean, (b-1)-denominator sample variance, and best of a round's errors.

    A single-sample round has variance 0 by convention; with a variance
    threshold that can trigger the variance halt, reflecting that one point
    carries no diversity signal.
    """
    if not errors:
        raise EmptyBatch("round has no numeric errors")
    b = len(errors)
    mean = sum(errors) / b
    variance = sum((e - mean) ** 2 for e in errors) / (b - 1) if b > 1 else 0.0
    best = min(errors)
    improvement = prev_best - best if prev_best is not None else None
    return RoundStats(
        round_index_r=round_index,
        mean_error=mean,
        sample_variance=variance,
        best_error=best,
        improvement=improvement,
    )


def should_halt(stats: RoundStats, config: ParsConfig,
                cumulative_candidates: int) -> DiscardReason | None:
    """Halting decision for a round in which no candidate passed the gates.

    Checks run in a fixed order (variance, improvement, budget) so the
    reported reason is deterministic.
    """
    if config.halting_enabled:
        if stats.sample_variance <= config.eps_var:
            return DiscardReason.VARIANCE_HALT
        if stats.improvement is not None and stats.improvement <= config.delta_imp:
            return DiscardReason.IMPROVEMENT_HALT
    if cumulative_candidates >= config.k_max:
        return DiscardReason.BUDGET_EXHAUSTED
    return None


@dataclass(frozen=True)
class ParsOutcome:
    accepted: Candidate | None
    discard_reason: DiscardReason | None
    rounds: tuple[RoundStats, ...]
    candidates_generated_g: int
    tokens_in: int
    tokens_out: int
    overshoot_tokens_in: int = 0
    overshoot_tokens_out: int = 0

    def __post_init__(self):
        if (self.accepted is None) == (self.discard_reason is None):
            raise ValueError("exactly one of accepted / discard_reason must be set")


def run_pars(
    record: PromptRecord,
    teacher: TraceGenerator,
    gate_cfg: GateConfig = GateConfig(),
    pars_cfg: ParsConfig = ParsConfig(),
) -> ParsOutcome:
    """Run the full sampling loop for one prompt.

    The final round is truncated to the remaining budget, so the number of
    consumed candidates never exceeds k_max. Candidates whose answer
    extraction fails count against the budget but are excluded from the
    round statistics.
    """
    env = record.resolve_envelope()
    y = record.ground_truth_y
    temperature = pars_cfg.schedule.t_min

    rounds: list[RoundStats] = []
    consumed = 0
    tokens_in = tokens_out = 0
    overshoot_in = overshoot_out = 0
    accepted: Candidate | None = None
    discard_reason: DiscardReason | None = None
    prev_best: float | None = None
    r = 0

    while consumed < pars_cfg.k_max and accepted is None and discard_reason is None:
        r += 1
        batch = min(pars_cfg.batch_size_b, pars_cfg.k_max - consumed)
        teacher.begin_round(record, temperature, r, batch)
        errors: list[float] = []
        for j in range(1, batch + 1):
            candidate = teacher.generate(record, temperature, r, j)
            consumed += 1
            tokens_in += candidate.tokens_in
            tokens_out += candidate.tokens_out
            if candidate.prediction is None:
                continue
            if not math.isfinite(candidate.prediction):
                continue
            verdict = check(candidate.prediction, y, env, gate_cfg)
            if verdict.passed:
                accepted = candidate
                break
            errors.append(verdict.abs_error)
        o_in, o_out = teacher.end_round()
        overshoot_in += o_in
        overshoot_out += o_out
        if accepted is not None:
            break
        if errors:
            stats = round_stats(errors, prev_best=prev_best, round_index=r)
            rounds.append(stats)
            discard_reason = should_halt(stats, pars_cfg, consumed)
            prev_best = stats.best_error
        else:
            # Every generation in the round failed extraction: no diversity
            # signal at all, same treatment as a zero-variance batch.
            discard_reason = (DiscardReason.VARIANCE_HALT if pars_cfg.halting_enabled
                              else None)
            if discard_reason is None and consumed >= pars_cfg.k_max:
                discard_reason = DiscardReason.BUDGET_EXHAUSTED
        if discard_reason is None and consumed < pars_cfg.k_max:
            temperature = next_temperature(temperature, pars_cfg.schedule)

    if accepted is None and discard_reason is None:
        discard_reason = DiscardReason.BUDGET_EXHAUSTED

    return ParsOutcome(
        accepted=accepted,
        discard_reason=discard_reason,
        rounds=tuple(rounds),
        candidates_generated_g=consumed,
        tokens_in=tokens_in,
        tokens_out=tokens_out,
        overshoot_tokens_in=overshoot_in,
        overshoot_tokens_out=overshoot_out,
    )
