"""Seeded Monte-Carlo experiments: compute-accuracy frontier across selection
strategies, the halting ablation, and the correctness-ratio sweep. All runs
use the simulated teacher and are deterministic given their seeds."""

from __future__ import annotations

import csv
import hashlib
import io
import logging
from dataclasses import dataclass, replace

import numpy as np

from .config import RunConfig
from .pipeline import curate_records
from .records import PromptRecord
from .sampler import ParsConfig
from .selectors import Strategy
from .teacher import SimTeacher, SimTeacherConfig

logger = logging.getLogger(__name__)

FRONTIER_STRATEGIES = (
    Strategy.PARS,
    Strategy.FIRST,
    Strategy.RANDOM,
    Strategy.SELF_CONSISTENCY,
    Strategy.LONGEST,
    Strategy.MULTI_ALL,
)


def _corpus_rng(seed: int, index: int) -> np.random.Generator:
    digest = hashlib.sha256(f"corpus|{seed}|{index}".encode()).digest()
    return np.random.default_rng(int.from_bytes(digest[:16], "big"))


def make_sim_corpus(n_prompts: int, seed: int,
                    y_lo: float = 2.0, y_hi: float = 15.0,
                    envelope_headroom: float = 25.0) -> list[PromptRecord]:
    """Synthetic prompt corpus with per-record envelope overrides.

    Ground truths never exceed their envelope, mirroring the physical bound
    the envelope encodes.
    """
    records = []
    for i in range(n_prompts):
        rng = _corpus_rng(seed, i)
        y = float(rng.uniform(y_lo, y_hi))
        env = float(min(100.0, y + rng.uniform(0.5, envelope_headroom)))
        records.append(PromptRecord(
            id=f"sim-{seed}-{i:06d}",
            ground_truth_y=y,
            prompt_text=f"Predict efficiency for synthetic device sim-{seed}-{i:06d}.",
            envelope_override=env,
        ))
    return records


@dataclass(frozen=True)
class FrontierRow:
    strategy: str
    seed: int
    tokens_per_prompt: float
    selected_mae: float | None
    k_avg: float
    r_acc: float


def simulate_frontier(
    sim_cfg: SimTeacherConfig,
    strategies: tuple[Strategy, ...] = FRONTIER_STRATEGIES,
    seeds: tuple[int, ...] = (0, 1, 2, 3, 4),
    n_prompts: int = 300,
    base_cfg: RunConfig | None = None,
) -> list[FrontierRow]:
    """One row per (strategy, seed): measured per-prompt token cost and the
    MAE of the selected traces."""
    rows = []
    for seed in seeds:
        corpus = make_sim_corpus(n_prompts, seed)
        for strategy in strategies:
            cfg = base_cfg or RunConfig()
            cfg = replace_strategy(cfg, strategy, seed)
            teacher = SimTeacher(replace(sim_cfg, seed=seed))
            _, report = curate_records(corpus, cfg, teacher)
            rows.append(FrontierRow(
                strategy=strategy.value,
                seed=seed,
                tokens_per_prompt=report.tokens_measured["tokens_per_prompt"],
                selected_mae=report.selected_trace_mae,
                k_avg=report.k_avg_measured,
                r_acc=report.r_acc_measured,
            ))
    return rows


def replace_strategy(cfg: RunConfig, strategy: Strategy, seed: int) -> RunConfig:
    from copy import copy

    out = copy(cfg)
    out.strategy = strategy
    out.seed = seed
    out.sim_teacher = replace(cfg.sim_teacher, seed=seed)
    return out


def frontier_csv(rows: list[FrontierRow]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(["strategy", "seed", "tokens_per_prompt", "selected_mae",
                     "k_avg", "r_acc"])
    for row in rows:
        writer.writerow([row.strategy, row.seed,
                         f"{row.tokens_per_prompt:.3f}",
                         "" if row.selected_mae is None else f"{row.selected_mae:.6f}",
                         f"{row.k_avg:.4f}", f"{row.r_acc:.4f}"])
    return buf.getvalue()


@dataclass(frozen=True)
class HaltingAblation:
    k_avg_halting_on: float
    k_avg_halting_off: float
    mae_halting_on: float | None
    mae_halting_off: float | None


def halting_ablation(sim_cfg: SimTeacherConfig, seed: int = 0,
                     n_prompts: int = 1000,
                     pars_cfg: ParsConfig | None = None) -> HaltingAblation:
    """Paired-seed comparison of the sampling budget with and without the
    variance / improvement halting checks."""
    corpus = make_sim_corpus(n_prompts, seed)
    base = pars_cfg or ParsConfig()

    cfg_on = RunConfig(seed=seed, strategy=Strategy.PARS,
                       pars=replace(base, halting_enabled=True))
    cfg_off = RunConfig(seed=seed, strategy=Strategy.PARS,
                        pars=replace(base, halting_enabled=False))
    sim = replace(sim_cfg, seed=seed)
    _, report_on = curate_records(corpus, cfg_on, SimTeacher(sim))
    _, report_off = curate_records(corpus, cfg_off, SimTeacher(sim))
    return HaltingAblation(
        k_avg_halting_on=report_on.k_avg_measured,
        k_avg_halting_off=report_off.k_avg_measured,
        mae_halting_on=report_on.selected_trace_mae,
        mae_halting_off=report_off.selected_trace_mae,
    )


@dataclass(frozen=True)
class SweepRow:
    sigma_base: float
    acceptance_ratio: float
    curated_mae: float | None
    k_avg: float
    n_violations: int


def sweep_correctness_ratio(
    sigma_levels: tuple[float, ...] = (0.0, 0.5, 1.0, 2.0, 4.0, 8.0),
    seed: int = 0,
    n_prompts: int = 500,
    base_sim: SimTeacherConfig | None = None,
) -> list[SweepRow]:
    """Vary the teacher's noise level and report the acceptance ratio and the
    error statistics of the curated set at each level."""
    from .evaluation import is_violation

    rows = []
    corpus = make_sim_corpus(n_prompts, seed)
    envelopes = {r.id: r.envelope_override for r in corpus}
    for sigma in sigma_levels:
        sim = replace(base_sim or SimTeacherConfig(), sigma_base=sigma, seed=seed)
        cfg = RunConfig(seed=seed, strategy=Strategy.PARS, sim_teacher=sim)
        results, report = curate_records(corpus, cfg, SimTeacher(sim))
        violations = 0
        for result in results:
            for row in result.curated_rows:
                if is_violation(row["answer"], envelopes[result.prompt_id]):
                    violations += 1
        rows.append(SweepRow(
            sigma_base=sigma,
            acceptance_ratio=report.r_acc_measured,
            curated_mae=report.selected_trace_mae,
            k_avg=report.k_avg_measured,
            n_violations=violations,
        ))
    return rows


def sweep_csv(rows: list[SweepRow]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(["sigma_base", "acceptance_ratio", "curated_mae", "k_avg",
                     "n_violations"])
    for row in rows:
        writer.writerow([row.sigma_base, f"{row.acceptance_ratio:.4f}",
                         "" if row.curated_mae is None else f"{row.curated_mae:.6f}",
                         f"{row.k_avg:.4f}", row.n_violations])
    return buf.getvalue()
