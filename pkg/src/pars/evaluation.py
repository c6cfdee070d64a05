"""Student-side evaluation: median-of-N ensembling, MAE, R², Spearman rho,
and the physics-violation rate over all individual ensemble predictions."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import stats

from .errors import EmptyInput
from .selectors import median


@dataclass(frozen=True)
class PredictionSet:
    prompt_id: str
    ground_truth_y: float
    envelope_percent: float
    runs: tuple[float, ...]

    def __post_init__(self):
        if not self.runs:
            raise EmptyInput(f"prediction set {self.prompt_id!r} has no runs")


@dataclass(frozen=True)
class EvalReport:
    mae: float
    r2: float | None
    spearman_rho: float | None
    violation_rate: float
    n_prompts: int


def median_ensemble(values: list[float]) -> float:
    if not values:
        raise EmptyInput("no values to ensemble")
    return median(list(values))


def is_violation(prediction: float, envelope_percent: float) -> bool:
    """A prediction violates physics when it leaves [0, 100] or exceeds the
    recipe envelope; no post hoc clipping is applied anywhere."""
    return prediction < 0.0 or prediction > 100.0 or prediction > envelope_percent


def compute_metrics(sets: list[PredictionSet]) -> EvalReport:
    """Point metrics on the median-ensembled predictions; violation rate over
    every individual run prediction. R² and Spearman rho are reported as None
    when either side is degenerate (zero variance / fewer than two prompts)."""
    if not sets:
        raise EmptyInput("no prediction sets")
    truths = np.array([s.ground_truth_y for s in sets], dtype=float)
    medians = np.array([median_ensemble(list(s.runs)) for s in sets], dtype=float)

    mae = float(np.mean(np.abs(medians - truths)))

    ss_tot = float(np.sum((truths - truths.mean()) ** 2))
    if len(sets) >= 2 and ss_tot > 0.0:
        ss_res = float(np.sum((truths - medians) ** 2))
        r2 = 1.0 - ss_res / ss_tot
    else:
        r2 = None

    if len(sets) >= 2 and np.ptp(truths) > 0 and np.ptp(medians) > 0:
        rho = float(stats.spearmanr(medians, truths).statistic)
    else:
        rho = None

    violations = 0
    total_runs = 0
    for s in sets:
        for pred in s.runs:
            total_runs += 1
            if is_violation(pred, s.envelope_percent):
                violations += 1

    return EvalReport(
        mae=mae,
        r2=r2,
        spearman_rho=rho,
        violation_rate=violations / total_runs,
        n_prompts=len(sets),
    )
