"""Physics-aware rejection sampling for curating teacher reasoning traces."""

from .gates import GateConfig, GateVerdict, check
from .recipe import Envelope, EnvelopeSource, RecipeDocument, envelope, parse_recipe
from .records import PromptRecord
from .sampler import (
    DiscardReason,
    ParsConfig,
    ParsOutcome,
    RoundStats,
    TemperatureSchedule,
    run_pars,
)
from .selectors import Strategy
from .teacher import Candidate, SimTeacher, SimTeacherConfig, extract_answer, render_prompt

__version__ = "0.1.0"

__all__ = [
    "Candidate",
    "DiscardReason",
    "Envelope",
    "EnvelopeSource",
    "GateConfig",
    "GateVerdict",
    "ParsConfig",
    "ParsOutcome",
    "PromptRecord",
    "RecipeDocument",
    "RoundStats",
    "SimTeacher",
    "SimTeacherConfig",
    "Strategy",
    "TemperatureSchedule",
    "check",
    "envelope",
    "extract_answer",
    "parse_recipe",
    "render_prompt",
    "run_pars",
]
