"""HTTP surface for the stateless operations: gate checks, selection,
accounting, evaluation, judge-verdict parsing, and recipe envelopes.

Long-running curation jobs stay in the CLI; this service exposes the pure
per-request computations for multi-client use.
"""

from __future__ import annotations

from fastapi import FastAPI, HTTPException
from pydantic import BaseModel, Field

from . import accounting, evaluation, gates, judge, selectors
from .errors import ParsError
from .recipe import Envelope, EnvelopeSource, envelope as recipe_envelope, parse_recipe
from .teacher import Candidate, extract_answer

app = FastAPI(title="pars", description="Physics-aware trace curation service")


class GateCheckRequest(BaseModel):
    prediction: float
    ground_truth: float
    envelope_percent: float = 100.0
    eps_mae: float = 1.0


class GateCheckResponse(BaseModel):
    passed: bool
    range_ok: bool
    mae_ok: bool
    envelope_ok: bool
    abs_error: float


class AccountRequest(BaseModel):
    t_teach_in: float = Field(ge=0)
    t_teach_out: float = Field(ge=0)
    t_select: float = Field(default=0.0, ge=0)
    k_avg: float = Field(ge=0)
    r_acc: float = Field(default=1.0, ge=0, le=1)
    judge_pass: bool = False


class AccountResponse(BaseModel):
    tokens_per_prompt: float
    tokens_per_accepted: float | None


class PredictionSetIn(BaseModel):
    prompt_id: str
    y: float
    envelope: float = 100.0
    runs: list[float]


class EvaluateRequest(BaseModel):
    sets: list[PredictionSetIn]


class EvaluateResponse(BaseModel):
    mae: float
    r2: float | None
    spearman_rho: float | None
    violation_rate: float
    n_prompts: int


class CandidateIn(BaseModel):
    trace: str = ""
    prediction: float | None = None
    tokens_in: int = 0
    tokens_out: int = 0
    round_index: int = 1
    batch_index_j: int = 1
    temperature: float = 0.6


class SelectRequest(BaseModel):
    strategy: str
    pool: list[CandidateIn]
    seed: int = 0


class SelectResponse(BaseModel):
    strategy: str
    rationale: str
    selected_indices: list[int]


class EnvelopeRequest(BaseModel):
    recipe_text: str


class EnvelopeResponse(BaseModel):
    value_percent: float
    source: str


class VerdictParseRequest(BaseModel):
    reply: str


class VerdictParseResponse(BaseModel):
    groundedness: float
    causal: float
    numeric_discipline: float
    assumption_quality: float
    clarity: float
    composite: float


class MethodScoreRequest(BaseModel):
    composites: list[float]


class ExtractRequest(BaseModel):
    trace: str


@app.get("/healthz")
def healthz():
    return {"status": "ok"}


@app.post("/gates/check", response_model=GateCheckResponse)
def gates_check(req: GateCheckRequest):
    try:
        verdict = gates.check(
            req.prediction, req.ground_truth,
            Envelope(req.envelope_percent, EnvelopeSource.OVERRIDE),
            gates.GateConfig(eps_mae=req.eps_mae),
        )
    except ParsError as exc:
        raise HTTPException(status_code=422, detail=str(exc))
    return GateCheckResponse(
        passed=verdict.passed, range_ok=verdict.range_ok, mae_ok=verdict.mae_ok,
        envelope_ok=verdict.envelope_ok, abs_error=verdict.abs_error,
    )


@app.post("/account", response_model=AccountResponse)
def account(req: AccountRequest):
    model = accounting.TokenCostModel(
        t_teach_in=req.t_teach_in, t_teach_out=req.t_teach_out,
        t_select=req.t_select, k_avg=req.k_avg, r_acc=req.r_acc,
        judge_pass=req.judge_pass,
    )
    per_prompt = accounting.tokens_per_prompt(model)
    per_accepted = accounting.tokens_per_accepted(model) if req.r_acc > 0 else None
    return AccountResponse(tokens_per_prompt=per_prompt,
                           tokens_per_accepted=per_accepted)


@app.post("/evaluate", response_model=EvaluateResponse)
def evaluate(req: EvaluateRequest):
    try:
        sets = [
            evaluation.PredictionSet(
                prompt_id=s.prompt_id, ground_truth_y=s.y,
                envelope_percent=s.envelope, runs=tuple(s.runs),
            )
            for s in req.sets
        ]
        report = evaluation.compute_metrics(sets)
    except ParsError as exc:
        raise HTTPException(status_code=422, detail=str(exc))
    return EvaluateResponse(**report.__dict__)


@app.post("/select", response_model=SelectResponse)
def select(req: SelectRequest):
    pool = [Candidate(**c.model_dump()) for c in req.pool]
    try:
        strategy = selectors.Strategy(req.strategy)
        if strategy is selectors.Strategy.FIRST:
            result = selectors.select_first(pool)
        elif strategy is selectors.Strategy.RANDOM:
            result = selectors.select_random(pool, req.seed)
        elif strategy is selectors.Strategy.SELF_CONSISTENCY:
            result = selectors.select_self_consistency(pool)
        elif strategy is selectors.Strategy.LONGEST:
            result = selectors.select_longest(pool)
        elif strategy is selectors.Strategy.MULTI_ALL:
            result = selectors.select_multi(pool)
        else:
            raise HTTPException(
                status_code=422,
                detail=f"strategy {req.strategy!r} is not selectable over a plain pool",
            )
    except ParsError as exc:
        raise HTTPException(status_code=422, detail=str(exc))
    except ValueError as exc:
        raise HTTPException(status_code=422, detail=str(exc))
    indices = [pool.index(c) for c in result.selected]
    return SelectResponse(strategy=result.strategy.value,
                          rationale=result.rationale, selected_indices=indices)


@app.post("/recipe/envelope", response_model=EnvelopeResponse)
def recipe_envelope_endpoint(req: EnvelopeRequest):
    try:
        env = recipe_envelope(parse_recipe(req.recipe_text))
    except ParsError as exc:
        raise HTTPException(status_code=422, detail=str(exc))
    return EnvelopeResponse(value_percent=env.value_percent, source=env.source.value)


@app.post("/judge/parse", response_model=VerdictParseResponse)
def judge_parse(req: VerdictParseRequest):
    try:
        score = judge.parse_verdict(req.reply)
    except ParsError as exc:
        raise HTTPException(status_code=422, detail=str(exc))
    return VerdictParseResponse(composite=score.composite, **score.__dict__)


@app.post("/judge/method-score")
def judge_method_score(req: MethodScoreRequest):
    try:
        return {"method_score": judge.method_score(req.composites)}
    except ParsError as exc:
        raise HTTPException(status_code=422, detail=str(exc))


@app.post("/extract-answer")
def extract(req: ExtractRequest):
    return {"prediction": extract_answer(req.trace)}
