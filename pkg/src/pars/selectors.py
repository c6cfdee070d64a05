"""Baseline trace-selection strategies over a fixed pool of candidates.

Each strategy picks from a pool of K generated candidates per prompt; only
multi-sampling keeps the whole pool. Ties always break toward the smallest
(round, j) pair for reproducibility.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from enum import Enum

from .errors import EmptyPool, NoNumericAnswers
from .teacher import Candidate


class Strategy(Enum):
    FIRST = "first"
    RANDOM = "random"
    SELF_CONSISTENCY = "self_consistency"
    LONGEST = "longest"
    JUDGE_RANKED = "judge_ranked"
    MULTI_ALL = "multi_all"
    PARS = "pars"


@dataclass(frozen=True)
class SelectionResult:
    selected: tuple[Candidate, ...]
    strategy: Strategy
    rationale: str = ""


def _order_key(candidate: Candidate) -> tuple[int, int]:
    return (candidate.round_index, candidate.batch_index_j)


def _require_pool(pool):
    if not pool:
        raise EmptyPool("candidate pool is empty")


def select_first(pool: list[Candidate]) -> SelectionResult:
    _require_pool(pool)
    chosen = min(pool, key=_order_key)
    return SelectionResult((chosen,), Strategy.FIRST, "first generated trace")


def select_random(pool: list[Candidate], seed: int) -> SelectionResult:
    _require_pool(pool)
    index = random.Random(seed).randrange(len(pool))
    return SelectionResult((pool[index],), Strategy.RANDOM, f"uniform index {index}")


def median(values: list[float]) -> float:
    """Standard median; even counts average the two middle values."""
    ordered = sorted(values)
    n = len(ordered)
    mid = n // 2
    if n % 2 == 1:
        return ordered[mid]
    return (ordered[mid - 1] + ordered[mid]) / 2.0


def select_self_consistency(pool: list[Candidate]) -> SelectionResult:
    """Candidate whose extracted answer is closest to the pool median.

    Candidates without an extracted answer take part in neither the median
    nor the selection.
    """
    _require_pool(pool)
    numeric = [c for c in pool if c.prediction is not None]
    if not numeric:
        raise NoNumericAnswers("no candidate has an extracted answer")
    m = median([c.prediction for c in numeric])
    chosen = min(numeric, key=lambda c: (abs(c.prediction - m), _order_key(c)))
    return SelectionResult((chosen,), Strategy.SELF_CONSISTENCY, f"median {m}")


def select_longest(pool: list[Candidate]) -> SelectionResult:
    _require_pool(pool)
    chosen = min(pool, key=lambda c: (-c.tokens_out, _order_key(c)))
    return SelectionResult((chosen,), Strategy.LONGEST,
                           f"longest trace: {chosen.tokens_out} tokens")


def select_multi(pool: list[Candidate]) -> SelectionResult:
    _require_pool(pool)
    return SelectionResult(tuple(pool), Strategy.MULTI_ALL,
                           f"all {len(pool)} traces retained")
