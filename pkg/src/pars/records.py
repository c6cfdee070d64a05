"""Prompt-record input type shared by the sampler, teacher, and pipeline."""

from __future__ import annotations

from dataclasses import dataclass

from .errors import InputSchemaError
from .recipe import Envelope, EnvelopeSource, envelope as recipe_envelope, parse_recipe


@dataclass(frozen=True)
class PromptRecord:
    id: str
    ground_truth_y: float
    recipe_text: str | None = None
    prompt_text: str | None = None
    envelope_override: float | None = None

    def __post_init__(self):
        if self.recipe_text is None and self.prompt_text is None:
            raise InputSchemaError(
                f"record {self.id!r} needs recipe_text or prompt_text"
            )

    def resolve_envelope(self) -> Envelope:
        """Override wins; else derive from the recipe; else the full range."""
        if self.envelope_override is not None:
            return Envelope(self.envelope_override, EnvelopeSource.OVERRIDE)
        if self.recipe_text is not None:
            return recipe_envelope(parse_recipe(self.recipe_text))
        return Envelope(100.0, EnvelopeSource.DEFAULT_FULL_RANGE)
