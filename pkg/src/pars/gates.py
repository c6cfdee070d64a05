"""Physics-aware acceptance gates for a single candidate prediction.

A candidate passes only if its prediction (a) lies in the reportable 0-100
percent range, (b) is within the continuous error tolerance of the wet-lab
ground truth, and (c) does not exceed the recipe's PLQY-derived upper bound.
All comparisons are non-strict, so exact boundary values pass.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import NonFiniteInput
from .recipe import Envelope


@dataclass(frozen=True)
class GateConfig:
    eps_mae: float = 1.0
    range_lo: float = 0.0
    range_hi: float = 100.0

    def __post_init__(self):
        if self.eps_mae < 0:
            raise ValueError("eps_mae must be >= 0")
        if not self.range_lo < self.range_hi:
            raise ValueError("range_lo must be < range_hi")


@dataclass(frozen=True)
class GateVerdict:
    passed: bool
    range_ok: bool
    mae_ok: bool
    envelope_ok: bool
    abs_error: float


def check(
    prediction: float,
    ground_truth: float,
    envelope: Envelope,
    config: GateConfig = GateConfig(),
) -> GateVerdict:
    if not (math.isfinite(prediction) and math.isfinite(ground_truth)):
        raise NonFiniteInput(
            f"gate inputs must be finite: prediction={prediction}, truth={ground_truth}"
        )
    abs_error = abs(prediction - ground_truth)
    range_ok = config.range_lo <= prediction <= config.range_hi
    mae_ok = abs_error <= config.eps_mae
    envelope_ok = prediction <= envelope.value_percent
    return GateVerdict(
        passed=range_ok and mae_ok and envelope_ok,
        range_ok=range_ok,
        mae_ok=mae_ok,
        envelope_ok=envelope_ok,
        abs_error=abs_error,
    )
