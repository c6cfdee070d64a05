"""Candidate trace generation: prompt templating, answer extraction, a
deterministic simulated teacher, and an HTTP chat-completion client."""

from __future__ import annotations

import hashlib
import json
import logging
import math
import os
import re
import time
from dataclasses import dataclass, field
from importlib import resources

import httpx
import numpy as np

from .errors import (
    AuthFailure,
    EmptyRecipe,
    ResponseMalformed,
    TeacherUnavailable,
)
from .records import PromptRecord

logger = logging.getLogger(__name__)

RECIPE_SLOT = "<Query QD-LED recipe>"
DEFAULT_CHARS_PER_TOKEN = 4.0

_ANSWER_BLOCK = re.compile(r"\{[^{}]*\"answer\"[^{}]*\}", re.DOTALL)
_ANSWER_VALUE = re.compile(
    r"\"answer\"\s*:\s*\"?\s*([-+]?\d*\.?\d+(?:[eE][-+]?\d+)?)\s*%?\s*\"?"
)


def _load_asset(name: str) -> str:
    return resources.files("pars.assets").joinpath(name).read_text(encoding="utf-8")


def prompt_template() -> str:
    return _load_asset("prompt_template.txt")


def render_prompt(recipe_text: str) -> str:
    """Substitute the recipe into the task template. Braces in the recipe are
    preserved literally (plain replacement, no format-string expansion)."""
    if not recipe_text or not recipe_text.strip():
        raise EmptyRecipe("recipe text is empty")
    return prompt_template().replace(RECIPE_SLOT, recipe_text)


def extract_answer(trace: str) -> float | None:
    """Pull the numeric prediction from the last JSON answer block of a trace.

    Tolerates a bare number, a quoted numeric string, and the percent-suffixed
    form the prompt asks for. Returns None when no parseable answer exists.
    """
    blocks = _ANSWER_BLOCK.findall(trace)
    for block in reversed(blocks):
        try:
            obj = json.loads(block)
        except (json.JSONDecodeError, ValueError):
            obj = None
        if isinstance(obj, dict) and "answer" in obj:
            value = obj["answer"]
            if isinstance(value, (int, float)) and math.isfinite(value):
                return float(value)
            if isinstance(value, str):
                m = _ANSWER_VALUE.search(f'"answer": "{value}"')
                if m:
                    return float(m.group(1))
            continue
        m = _ANSWER_VALUE.search(block)
        if m:
            return float(m.group(1))
    return None


def estimate_tokens(text: str, chars_per_token: float = DEFAULT_CHARS_PER_TOKEN) -> int:
    return max(1, round(len(text) / chars_per_token))


@dataclass(frozen=True)
class Candidate:
    trace: str
    prediction: float | None
    tokens_in: int
    tokens_out: int
    round_index: int
    batch_index_j: int
    temperature: float
    tokens_estimated: bool = False


@dataclass(frozen=True)
class GenerationRequest:
    prompt_text: str
    temperature: float
    max_output_tokens: int = 8192
    model_id: str = "teacher"


class TraceGenerator:
    """Round-oriented generation interface driven by the sampler.

    ``generate`` is called with increasing j within a round; ``begin_round``
    and ``end_round`` let concurrent implementations prefetch a whole batch
    and report tokens spent on generations that were never consumed.
    """

    def begin_round(self, record: PromptRecord, temperature: float,
                    round_index: int, batch_size: int) -> None:
        pass

    def generate(self, record: PromptRecord, temperature: float,
                 round_index: int, j: int) -> Candidate:
        raise NotImplementedError

    def end_round(self) -> tuple[int, int]:
        """Return (tokens_in, tokens_out) of unconsumed in-flight generations."""
        return (0, 0)


@dataclass(frozen=True)
class SimTeacherConfig:
    bias: float = 0.0
    sigma_base: float = 1.6
    sigma_per_temp: float = 1.0
    outlier_prob: float = 0.05
    outlier_scale: float = 8.0
    out_of_range_prob: float = 0.02
    token_len_log_mean: float = 7.6
    token_len_log_sd: float = 0.4
    seed: int = 0

    def __post_init__(self):
        for p in (self.outlier_prob, self.out_of_range_prob):
            if not 0.0 <= p <= 1.0:
                raise ValueError("probabilities must lie in [0, 1]")
        if self.sigma_base < 0 or self.sigma_per_temp < 0:
            raise ValueError("spread parameters must be >= 0")


def _keyed_rng(seed: int, prompt_id: str, round_index: int, j: int) -> np.random.Generator:
    digest = hashlib.sha256(
        f"{seed}|{prompt_id}|{round_index}|{j}".encode()
    ).digest()
    return np.random.default_rng(int.from_bytes(digest[:16], "big"))


def sim_generate(
    cfg: SimTeacherConfig,
    y: float,
    temperature: float,
    prompt_id: str,
    round_index: int,
    j: int,
    prompt_tokens: int = 900,
) -> Candidate:
    """Deterministic stochastic stand-in for a teacher model.

    A pure function of (cfg.seed, prompt_id, round_index, j): identical keys
    give byte-identical candidates regardless of call order.
    """
    rng = _keyed_rng(cfg.seed, prompt_id, round_index, j)
    sigma = cfg.sigma_base + cfg.sigma_per_temp * temperature
    noise = rng.normal(0.0, sigma) if sigma > 0 else 0.0
    if rng.random() < cfg.outlier_prob:
        noise *= cfg.outlier_scale
    prediction = y + cfg.bias + noise
    if rng.random() < cfg.out_of_range_prob:
        margin = rng.uniform(0.5, 25.0)
        prediction = -margin if rng.random() < 0.5 else 100.0 + margin
    tokens_out = max(1, int(rng.lognormal(cfg.token_len_log_mean, cfg.token_len_log_sd)
                            if cfg.token_len_log_sd > 0
                            else math.exp(cfg.token_len_log_mean)))
    trace = (
        f"Given: recipe {prompt_id}. Reasoning: estimated efficiency from layer "
        f"stack and film quality at T={temperature}.\n"
        f'{{"answer": "{prediction!r} %"}}'
    )
    return Candidate(
        trace=trace,
        prediction=prediction,
        tokens_in=prompt_tokens,
        tokens_out=tokens_out,
        round_index=round_index,
        batch_index_j=j,
        temperature=temperature,
    )


class SimTeacher(TraceGenerator):
    def __init__(self, cfg: SimTeacherConfig, prompt_tokens: int = 900):
        self.cfg = cfg
        self.prompt_tokens = prompt_tokens

    def generate(self, record: PromptRecord, temperature: float,
                 round_index: int, j: int) -> Candidate:
        return sim_generate(
            self.cfg, record.ground_truth_y, temperature, record.id,
            round_index, j, prompt_tokens=self.prompt_tokens,
        )


class PrefetchingTeacher(TraceGenerator):
    """Dispatches a whole round concurrently over a base generator.

    Indices j are fixed at dispatch time, so acceptance order never depends
    on completion order. Generations that complete but are not consumed
    (because an earlier j was accepted) are reported as overshoot tokens.
    """

    def __init__(self, base: TraceGenerator, max_workers: int = 4):
        self.base = base
        self.max_workers = max_workers
        self._futures = {}
        self._consumed: set[int] = set()
        self._executor = None

    def begin_round(self, record: PromptRecord, temperature: float,
                    round_index: int, batch_size: int) -> None:
        from concurrent.futures import ThreadPoolExecutor

        self.end_round()
        self._executor = ThreadPoolExecutor(max_workers=self.max_workers)
        self._consumed = set()
        self._futures = {
            j: self._executor.submit(
                self.base.generate, record, temperature, round_index, j
            )
            for j in range(1, batch_size + 1)
        }

    def generate(self, record: PromptRecord, temperature: float,
                 round_index: int, j: int) -> Candidate:
        if j not in self._futures:
            return self.base.generate(record, temperature, round_index, j)
        self._consumed.add(j)
        return self._futures[j].result()

    def end_round(self) -> tuple[int, int]:
        tokens_in = tokens_out = 0
        for j, future in self._futures.items():
            if j in self._consumed:
                continue
            if future.cancel():
                continue
            try:
                candidate = future.result()
            except Exception:  # failed overshoot generation spent no known tokens
                continue
            tokens_in += candidate.tokens_in
            tokens_out += candidate.tokens_out
        self._futures = {}
        self._consumed = set()
        if self._executor is not None:
            self._executor.shutdown(wait=False)
            self._executor = None
        return (tokens_in, tokens_out)


@dataclass
class EndpointConfig:
    base_url: str
    model_id: str
    api_key_env: str = "PARS_API_KEY"
    timeout_s: float = 120.0
    max_retries: int = 3
    backoff_base_s: float = 1.0
    max_output_tokens: int = 8192
    chars_per_token: float = DEFAULT_CHARS_PER_TOKEN
    system_prompt: str | None = None
    extra_headers: dict = field(default_factory=dict)

    def api_key(self) -> str | None:
        return os.environ.get(self.api_key_env)


class RemoteTeacher(TraceGenerator):
    """Client for a chat-completion style inference endpoint."""

    def __init__(self, cfg: EndpointConfig, transport: httpx.BaseTransport | None = None):
        self.cfg = cfg
        headers = dict(cfg.extra_headers)
        key = cfg.api_key()
        if key:
            headers["Authorization"] = f"Bearer {key}"
        self._client = httpx.Client(
            base_url=cfg.base_url,
            headers=headers,
            timeout=cfg.timeout_s,
            transport=transport,
        )

    def close(self) -> None:
        self._client.close()

    def complete(self, request: GenerationRequest) -> dict:
        """POST the messages-array completion request, retrying transient
        failures with exponential backoff."""
        messages = []
        if self.cfg.system_prompt:
            messages.append({"role": "system", "content": self.cfg.system_prompt})
        messages.append({"role": "user", "content": request.prompt_text})
        body = {
            "model": request.model_id or self.cfg.model_id,
            "messages": messages,
            "temperature": request.temperature,
            "max_tokens": request.max_output_tokens,
        }
        last_error: Exception | None = None
        for attempt in range(self.cfg.max_retries + 1):
            try:
                response = self._client.post("/chat/completions", json=body)
            except httpx.HTTPError as exc:
                last_error = exc
            else:
                if response.status_code in (401, 403):
                    raise AuthFailure(f"endpoint returned {response.status_code}")
                if response.status_code < 400:
                    try:
                        return response.json()
                    except ValueError as exc:
                        raise ResponseMalformed("response body is not JSON") from exc
                last_error = TeacherUnavailable(
                    f"endpoint returned {response.status_code}"
                )
            if attempt < self.cfg.max_retries:
                delay = self.cfg.backoff_base_s * (2 ** attempt)
                logger.warning("generation attempt %d failed (%s); retrying in %.1fs",
                               attempt + 1, last_error, delay)
                time.sleep(delay)
        raise TeacherUnavailable(f"retries exhausted: {last_error}")

    def generate_from_request(self, request: GenerationRequest,
                              round_index: int = 1, j: int = 1) -> Candidate:
        payload = self.complete(request)
        try:
            trace = payload["choices"][0]["message"]["content"]
        except (KeyError, IndexError, TypeError) as exc:
            raise ResponseMalformed(f"unexpected completion payload: {payload!r}") from exc
        usage = payload.get("usage") or {}
        tokens_in = usage.get("prompt_tokens")
        tokens_out = usage.get("completion_tokens")
        estimated = tokens_in is None or tokens_out is None
        if tokens_in is None:
            tokens_in = estimate_tokens(request.prompt_text, self.cfg.chars_per_token)
        if tokens_out is None:
            tokens_out = estimate_tokens(trace, self.cfg.chars_per_token)
        return Candidate(
            trace=trace,
            prediction=extract_answer(trace),
            tokens_in=int(tokens_in),
            tokens_out=int(tokens_out),
            round_index=round_index,
            batch_index_j=j,
            temperature=request.temperature,
            tokens_estimated=estimated,
        )

    def generate(self, record: PromptRecord, temperature: float,
                 round_index: int, j: int) -> Candidate:
        prompt_text = record.prompt_text or render_prompt(record.recipe_text or "")
        request = GenerationRequest(
            prompt_text=prompt_text,
            temperature=temperature,
            max_output_tokens=self.cfg.max_output_tokens,
            model_id=self.cfg.model_id,
        )
        return self.generate_from_request(request, round_index=round_index, j=j)
