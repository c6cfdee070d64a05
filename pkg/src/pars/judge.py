"""LLM-as-a-judge scoring of reasoning traces against the five-part rubric.

The judge endpoint returns one labeled score line per rubric; the composite
score for a trace is the sum of the five sub-scores (ranges total 10), and a
method-level score is the mean composite across prompts.
"""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass, field
from importlib import resources

import httpx

from .errors import EmptyInput, NoScoredCandidates, UnparseableVerdict
from .selectors import SelectionResult, Strategy, _order_key, _require_pool
from .teacher import Candidate, EndpointConfig, GenerationRequest, RemoteTeacher

logger = logging.getLogger(__name__)

PROMPT_SLOT = "<Prompt>"
RESPONSE_SLOT = "<Response>"

RUBRIC_CAPS = {
    "groundedness": 2.5,
    "causal": 2.0,
    "numeric_discipline": 2.0,
    "assumption_quality": 2.0,
    "clarity": 1.5,
}

_RUBRIC_PATTERNS = {
    "groundedness": re.compile(r"Groundedness\s+to\s+Prompt\s*:\s*([0-9.]+)", re.I),
    "causal": re.compile(r"Causal\s+Reasoning\s+Quality\s*:\s*([0-9.]+)", re.I),
    "numeric_discipline": re.compile(
        r"Numerical\s*&\s*Unit\s+Discipline\s*:\s*([0-9.]+)", re.I),
    "assumption_quality": re.compile(r"Assumption\s+Quality\s*:\s*([0-9.]+)", re.I),
    "clarity": re.compile(r"Clarity\s*&\s*Structure\s*:\s*([0-9.]+)", re.I),
}


@dataclass(frozen=True)
class RubricScore:
    groundedness: float
    causal: float
    numeric_discipline: float
    assumption_quality: float
    clarity: float

    def __post_init__(self):
        for name, cap in RUBRIC_CAPS.items():
            value = getattr(self, name)
            if not 0.0 <= value <= cap:
                raise ValueError(f"{name} must lie in [0, {cap}], got {value}")

    @property
    def composite(self) -> float:
        return (self.groundedness + self.causal + self.numeric_discipline
                + self.assumption_quality + self.clarity)


def rubric_template() -> str:
    return resources.files("pars.assets").joinpath("judge_rubric.txt").read_text(
        encoding="utf-8")


def render_judge_prompt(prompt_text: str, trace: str) -> str:
    template = rubric_template()
    template = template.replace(f"{PROMPT_SLOT}: Device recipe",
                                f"{PROMPT_SLOT}:\n{prompt_text}")
    template = template.replace(
        f"{RESPONSE_SLOT}: Model's reasoning trace + final prediction.",
        f"{RESPONSE_SLOT}:\n{trace}")
    return template


def parse_verdict(reply: str) -> RubricScore:
    """Strict label-by-label parse; a partial verdict is a failure, never
    zero-filled."""
    values = {}
    for name, pattern in _RUBRIC_PATTERNS.items():
        m = pattern.search(reply)
        if not m:
            raise UnparseableVerdict(f"rubric {name!r} not found in judge reply")
        values[name] = float(m.group(1))
    try:
        return RubricScore(**values)
    except ValueError as exc:
        raise UnparseableVerdict(str(exc)) from exc


@dataclass
class JudgeConfig:
    endpoint: EndpointConfig
    parse_retries: int = 2


def default_judge_endpoint(base_url: str, model_id: str) -> EndpointConfig:
    import os

    env = "PARS_JUDGE_API_KEY" if os.environ.get("PARS_JUDGE_API_KEY") else "PARS_API_KEY"
    return EndpointConfig(base_url=base_url, model_id=model_id, api_key_env=env)


class JudgeClient:
    def __init__(self, cfg: JudgeConfig, transport: httpx.BaseTransport | None = None):
        self.cfg = cfg
        self.tokens_used = 0
        self._client = RemoteTeacher(cfg.endpoint, transport=transport)

    def close(self) -> None:
        self._client.close()

    def score_trace(self, prompt_text: str, trace: str) -> RubricScore:
        """Request the judge and parse its verdict, re-asking on parse failure
        up to parse_retries times."""
        request = GenerationRequest(
            prompt_text=render_judge_prompt(prompt_text, trace),
            temperature=0.0,
            max_output_tokens=self.cfg.endpoint.max_output_tokens,
            model_id=self.cfg.endpoint.model_id,
        )
        last_error: UnparseableVerdict | None = None
        for attempt in range(self.cfg.parse_retries + 1):
            candidate = self._client.generate_from_request(request)
            self.tokens_used += candidate.tokens_in + candidate.tokens_out
            try:
                return parse_verdict(candidate.trace)
            except UnparseableVerdict as exc:
                last_error = exc
                logger.warning("unparseable judge verdict (attempt %d): %s",
                               attempt + 1, exc)
        raise last_error


def select_judge_ranked(pool: list[Candidate],
                        scores: dict[int, RubricScore]) -> SelectionResult:
    """Pick the highest-composite candidate; ``scores`` maps pool index to
    verdict, with unscored (unparseable) candidates simply absent."""
    _require_pool(pool)
    scored = [(i, c) for i, c in enumerate(pool) if i in scores]
    if not scored:
        raise NoScoredCandidates("no candidate received a parseable verdict")
    index, chosen = min(
        scored, key=lambda ic: (-scores[ic[0]].composite, _order_key(ic[1])))
    return SelectionResult((chosen,), Strategy.JUDGE_RANKED,
                           f"composite {scores[index].composite}")


def method_score(per_prompt_composites: list[float]) -> float:
    """Mean composite across prompts, on the 0-10 scale."""
    if not per_prompt_composites:
        raise EmptyInput("no composites to average")
    return sum(per_prompt_composites) / len(per_prompt_composites)
