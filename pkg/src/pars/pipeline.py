"""Corpus ingestion, strategy dispatch, curated-dataset emission, and run
reports. All outputs are JSON-lines (UTF-8, one row per line) with a schema
id embedded in every row; runs against the simulated teacher are fully
deterministic given (input, config, seed) and resumable after an abort."""

from __future__ import annotations

import json
import logging
import os
from dataclasses import asdict, dataclass, field
from importlib import resources

import jsonschema

from .accounting import TokenCostModel, tokens_per_accepted, tokens_per_prompt
from .config import RunConfig
from .errors import (
    InputSchemaError,
    NoNumericAnswers,
    NoScoredCandidates,
    ParsError,
    TeacherUnavailable,
    UnparseableVerdict,
)
from .judge import JudgeClient, select_judge_ranked
from .records import PromptRecord
from .sampler import run_pars
from .selectors import (
    SelectionResult,
    Strategy,
    select_first,
    select_longest,
    select_multi,
    select_random,
    select_self_consistency,
)
from .teacher import Candidate, SimTeacher, TraceGenerator, render_prompt

logger = logging.getLogger(__name__)

CURATED_FILE = "curated.jsonl"
DISCARD_FILE = "discards.jsonl"
PROGRESS_FILE = "progress.jsonl"
REPORT_FILE = "report.json"


def _load_schema(name: str) -> dict:
    text = resources.files("pars.schemas").joinpath(name).read_text(encoding="utf-8")
    return json.loads(text)


PROMPT_SCHEMA = _load_schema("prompt_record.schema.json")
CURATED_SCHEMA = _load_schema("curated_record.schema.json")
DISCARD_SCHEMA = _load_schema("discard_record.schema.json")

_prompt_validator = jsonschema.Draft202012Validator(PROMPT_SCHEMA)


def read_jsonl(path: str) -> list[dict]:
    rows = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                rows.append(json.loads(line))
    return rows


def dump_row(row: dict) -> str:
    return json.dumps(row, sort_keys=True, ensure_ascii=False)


def load_prompt_records(path: str) -> list[PromptRecord]:
    """Parse and validate the prompts file; any bad row (schema violation or
    unresolvable envelope) rejects the whole input."""
    records = []
    for lineno, row in enumerate(read_jsonl(path), start=1):
        errors = sorted(_prompt_validator.iter_errors(row), key=str)
        if errors:
            raise InputSchemaError(f"{path}:{lineno}: {errors[0].message}")
        record = PromptRecord(
            id=row["id"],
            ground_truth_y=float(row["ground_truth_y"]),
            recipe_text=row.get("recipe_text"),
            prompt_text=row.get("prompt_text"),
            envelope_override=row.get("envelope_override"),
        )
        try:
            record.resolve_envelope()
        except ParsError as exc:
            raise InputSchemaError(f"{path}:{lineno}: {exc}") from exc
        records.append(record)
    return records


@dataclass
class RunReport:
    strategy: str
    n_prompts: int
    n_curated: int
    k_avg_measured: float
    r_acc_measured: float
    selected_trace_mae: float | None
    tokens_measured: dict
    tokens_modeled: dict
    discard_reason_histogram: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class _PromptResult:
    prompt_id: str
    curated_rows: list[dict]
    discard_row: dict | None
    g: int
    tokens_in: int
    tokens_out: int
    overshoot_in: int
    overshoot_out: int
    accepted: bool
    selected_errors: list[float]
    judge_tokens: int = 0


def _prompt_text_for(record: PromptRecord) -> str:
    if record.prompt_text is not None:
        return record.prompt_text
    return render_prompt(record.recipe_text or "")


def _curated_row(record: PromptRecord, prompt_text: str, candidate: Candidate,
                 strategy: Strategy, accepted: bool) -> dict:
    return {
        "schema": "curated/v1",
        "prompt_id": record.id,
        "prompt_text": prompt_text,
        "trace": candidate.trace,
        "answer": candidate.prediction,
        "strategy": strategy.value,
        "round_index": candidate.round_index,
        "batch_index_j": candidate.batch_index_j,
        "tokens_in": candidate.tokens_in,
        "tokens_out": candidate.tokens_out,
        "accepted": accepted,
    }


def _discard_row(record: PromptRecord, reason: str, g: int,
                 tokens_in: int, tokens_out: int) -> dict:
    return {
        "schema": "discard/v1",
        "prompt_id": record.id,
        "reason": reason,
        "candidates_generated_g": g,
        "tokens_in": tokens_in,
        "tokens_out": tokens_out,
    }


def _record_seed(base_seed: int, prompt_id: str) -> int:
    import hashlib

    digest = hashlib.sha256(f"{base_seed}|select|{prompt_id}".encode()).digest()
    return int.from_bytes(digest[:8], "big")


class CurationEngine:
    """Runs one selection strategy over prompt records against a teacher."""

    def __init__(self, cfg: RunConfig, teacher: TraceGenerator,
                 judge: JudgeClient | None = None):
        self.cfg = cfg
        self.teacher = teacher
        self.judge = judge
        if cfg.strategy is Strategy.JUDGE_RANKED and judge is None:
            raise ValueError("judge_ranked strategy needs a judge client")

    def process(self, record: PromptRecord) -> _PromptResult:
        if self.cfg.strategy is Strategy.PARS:
            return self._process_pars(record)
        return self._process_fixed_k(record)

    def _process_pars(self, record: PromptRecord) -> _PromptResult:
        prompt_text = _prompt_text_for(record)
        outcome = run_pars(record, self.teacher, self.cfg.gate, self.cfg.pars)
        if outcome.accepted is not None:
            rows = [_curated_row(record, prompt_text, outcome.accepted,
                                 Strategy.PARS, accepted=True)]
            discard = None
            errors = [abs(outcome.accepted.prediction - record.ground_truth_y)]
        else:
            rows = []
            discard = _discard_row(record, outcome.discard_reason.value,
                                   outcome.candidates_generated_g,
                                   outcome.tokens_in, outcome.tokens_out)
            errors = []
        return _PromptResult(
            prompt_id=record.id,
            curated_rows=rows,
            discard_row=discard,
            g=outcome.candidates_generated_g,
            tokens_in=outcome.tokens_in,
            tokens_out=outcome.tokens_out,
            overshoot_in=outcome.overshoot_tokens_in,
            overshoot_out=outcome.overshoot_tokens_out,
            accepted=outcome.accepted is not None,
            selected_errors=errors,
        )

    def _generate_pool(self, record: PromptRecord) -> tuple[list[Candidate], int, int]:
        pool = []
        tokens_in = tokens_out = 0
        k = self.cfg.k_fixed
        self.teacher.begin_round(record, self.cfg.base_temperature, 1, k)
        for j in range(1, k + 1):
            candidate = self.teacher.generate(
                record, self.cfg.base_temperature, 1, j)
            pool.append(candidate)
            tokens_in += candidate.tokens_in
            tokens_out += candidate.tokens_out
        self.teacher.end_round()
        return pool, tokens_in, tokens_out

    def _select(self, record: PromptRecord, prompt_text: str,
                pool: list[Candidate]) -> tuple[SelectionResult, int]:
        strategy = self.cfg.strategy
        judge_tokens = 0
        if strategy is Strategy.FIRST:
            return select_first(pool), judge_tokens
        if strategy is Strategy.RANDOM:
            return select_random(pool, _record_seed(self.cfg.seed, record.id)), judge_tokens
        if strategy is Strategy.SELF_CONSISTENCY:
            return select_self_consistency(pool), judge_tokens
        if strategy is Strategy.LONGEST:
            return select_longest(pool), judge_tokens
        if strategy is Strategy.MULTI_ALL:
            return select_multi(pool), judge_tokens
        if strategy is Strategy.JUDGE_RANKED:
            scores = {}
            tokens_before = self.judge.tokens_used
            for i, candidate in enumerate(pool):
                try:
                    scores[i] = self.judge.score_trace(prompt_text, candidate.trace)
                except UnparseableVerdict:
                    logger.warning("prompt %s candidate %d: unparseable verdict",
                                   record.id, i)
            judge_tokens = self.judge.tokens_used - tokens_before
            return select_judge_ranked(pool, scores), judge_tokens
        raise ValueError(f"unsupported strategy {strategy}")

    def _process_fixed_k(self, record: PromptRecord) -> _PromptResult:
        prompt_text = _prompt_text_for(record)
        pool, tokens_in, tokens_out = self._generate_pool(record)
        try:
            selection, judge_tokens = self._select(record, prompt_text, pool)
        except (NoNumericAnswers, NoScoredCandidates):
            discard = _discard_row(record, "NO_NUMERIC_ANSWERS",
                                   len(pool), tokens_in, tokens_out)
            return _PromptResult(record.id, [], discard, len(pool), tokens_in,
                                 tokens_out, 0, 0, False, [])
        rows = []
        errors = []
        for candidate in selection.selected:
            if candidate.prediction is None:
                continue  # a supervision row needs a numeric answer
            rows.append(_curated_row(record, prompt_text, candidate,
                                     self.cfg.strategy, accepted=False))
            errors.append(abs(candidate.prediction - record.ground_truth_y))
        return _PromptResult(record.id, rows, None, len(pool), tokens_in,
                             tokens_out, 0, 0, True, errors,
                             judge_tokens=judge_tokens)


def build_report(strategy: Strategy, results: list[_PromptResult],
                 judge_pass: bool = False) -> RunReport:
    n = len(results)
    n_curated = sum(len(r.curated_rows) for r in results)
    total_g = sum(r.g for r in results)
    n_accepted = sum(1 for r in results if r.accepted)
    total_in = sum(r.tokens_in for r in results)
    total_out = sum(r.tokens_out for r in results)
    all_errors = [e for r in results for e in r.selected_errors]
    k_avg = total_g / n if n else 0.0
    r_acc = n_accepted / n if n else 0.0
    model = TokenCostModel(
        t_teach_in=total_in / total_g if total_g else 0.0,
        t_teach_out=total_out / total_g if total_g else 0.0,
        t_select=0.0,
        k_avg=k_avg,
        r_acc=r_acc,
        judge_pass=judge_pass,
    )
    histogram: dict[str, int] = {}
    for r in results:
        if r.discard_row is not None:
            reason = r.discard_row["reason"]
            histogram[reason] = histogram.get(reason, 0) + 1
    modeled = {
        "t_teach_in": model.t_teach_in,
        "t_teach_out": model.t_teach_out,
        "k_avg": model.k_avg,
        "r_acc": model.r_acc,
        "judge_pass": judge_pass,
        "tokens_per_prompt": tokens_per_prompt(model),
        "tokens_per_accepted": tokens_per_accepted(model) if r_acc > 0 else None,
    }
    measured = {
        "tokens_in": total_in,
        "tokens_out": total_out,
        "overshoot_tokens_in": sum(r.overshoot_in for r in results),
        "overshoot_tokens_out": sum(r.overshoot_out for r in results),
        "judge_tokens": sum(r.judge_tokens for r in results),
        "tokens_per_prompt": (total_in + total_out) / n if n else 0.0,
    }
    return RunReport(
        strategy=strategy.value,
        n_prompts=n,
        n_curated=n_curated,
        k_avg_measured=k_avg,
        r_acc_measured=r_acc,
        selected_trace_mae=(sum(all_errors) / len(all_errors)) if all_errors else None,
        tokens_measured=measured,
        tokens_modeled=modeled,
        discard_reason_histogram=histogram,
    )


def _result_to_progress(result: _PromptResult) -> dict:
    return {
        "schema": "progress/v1",
        "prompt_id": result.prompt_id,
        "g": result.g,
        "tokens_in": result.tokens_in,
        "tokens_out": result.tokens_out,
        "overshoot_in": result.overshoot_in,
        "overshoot_out": result.overshoot_out,
        "accepted": result.accepted,
        "n_curated": len(result.curated_rows),
        "discard_reason": (result.discard_row or {}).get("reason"),
        "selected_errors": result.selected_errors,
        "judge_tokens": result.judge_tokens,
    }


def _progress_to_result(row: dict) -> _PromptResult:
    discard = None
    if row.get("discard_reason"):
        discard = {"reason": row["discard_reason"]}
    return _PromptResult(
        prompt_id=row["prompt_id"],
        curated_rows=[{}] * row.get("n_curated", 0),
        discard_row=discard,
        g=row["g"],
        tokens_in=row["tokens_in"],
        tokens_out=row["tokens_out"],
        overshoot_in=row.get("overshoot_in", 0),
        overshoot_out=row.get("overshoot_out", 0),
        accepted=row["accepted"],
        selected_errors=row.get("selected_errors", []),
        judge_tokens=row.get("judge_tokens", 0),
    )


def curate_records(records: list[PromptRecord], cfg: RunConfig,
                   teacher: TraceGenerator,
                   judge: JudgeClient | None = None) -> tuple[list[_PromptResult], RunReport]:
    """In-memory curation used by experiments and tests."""
    engine = CurationEngine(cfg, teacher, judge)
    results = [engine.process(record) for record in records]
    report = build_report(cfg.strategy, results,
                          judge_pass=cfg.strategy is Strategy.JUDGE_RANKED)
    return results, report


def curate_to_dir(records: list[PromptRecord], cfg: RunConfig, out_dir: str,
                  teacher: TraceGenerator | None = None,
                  judge: JudgeClient | None = None) -> RunReport:
    """File-backed curation with resume support.

    Prompts already present in the progress log are skipped; an aborted run
    leaves well-formed partial outputs plus a resumable cursor, and a rerun
    produces the same final files as an uninterrupted run.
    """
    if teacher is None:
        if not cfg.use_sim:
            raise ValueError("no teacher given and sim mode disabled")
        teacher = SimTeacher(cfg.sim_teacher)
    os.makedirs(out_dir, exist_ok=True)
    curated_path = os.path.join(out_dir, CURATED_FILE)
    discard_path = os.path.join(out_dir, DISCARD_FILE)
    progress_path = os.path.join(out_dir, PROGRESS_FILE)
    report_path = os.path.join(out_dir, REPORT_FILE)

    done: dict[str, _PromptResult] = {}
    if os.path.exists(progress_path):
        for row in read_jsonl(progress_path):
            done[row["prompt_id"]] = _progress_to_result(row)

    engine = CurationEngine(cfg, teacher, judge)
    results: list[_PromptResult] = []
    with open(curated_path, "a", encoding="utf-8") as curated_fh, \
            open(discard_path, "a", encoding="utf-8") as discard_fh, \
            open(progress_path, "a", encoding="utf-8") as progress_fh:
        for record in records:
            if record.id in done:
                results.append(done[record.id])
                continue
            try:
                result = engine.process(record)
            except TeacherUnavailable:
                logger.error("teacher unavailable at prompt %s; aborting with "
                             "resumable outputs in %s", record.id, out_dir)
                raise
            for row in result.curated_rows:
                curated_fh.write(dump_row(row) + "\n")
            if result.discard_row is not None:
                discard_fh.write(dump_row(result.discard_row) + "\n")
            progress_fh.write(dump_row(_result_to_progress(result)) + "\n")
            curated_fh.flush()
            discard_fh.flush()
            progress_fh.flush()
            results.append(result)

    report = build_report(cfg.strategy, results,
                          judge_pass=cfg.strategy is Strategy.JUDGE_RANKED)
    with open(report_path, "w", encoding="utf-8") as fh:
        json.dump(report.to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")
    return report
