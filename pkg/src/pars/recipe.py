"""Structured device-recipe parsing and the recipe-specific prediction envelope.

A recipe is a plain-text block with an optional ``substrate:`` preamble and a
sequence of bracketed layer blocks (``[HIL layer]``, ``[EML layer]``, ...),
each carrying ``key: value`` attributes. The emissive layer's measured film
PLQY bounds the achievable external quantum efficiency, so the parsed document
is the source of the per-recipe upper bound used by the acceptance gates.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from enum import Enum

from .errors import EmptyInput, InvalidPlqy, MalformedStructure

AttributeMap = dict[str, "str | float"]

_LAYER_HEADER = re.compile(r"^\s*\[([^\]]+)\]\s*$")
_KEY_VALUE = re.compile(r"^\s*([A-Za-z_][A-Za-z0-9_]*)\s*:\s*(.*)$")

PLQY_FILM_KEY = "PLQY_film_fraction"


class LayerRole(Enum):
    HIL = "HIL"
    HTL = "HTL"
    EML = "EML"
    ETL = "ETL"
    OTHER = "OTHER"


class EnvelopeSource(Enum):
    PLQY_FILM = "PLQY_FILM"
    DEFAULT_FULL_RANGE = "DEFAULT_FULL_RANGE"
    OVERRIDE = "OVERRIDE"


@dataclass(frozen=True)
class Layer:
    role: LayerRole
    header: str
    attributes: AttributeMap = field(default_factory=dict)


@dataclass(frozen=True)
class Envelope:
    value_percent: float
    source: EnvelopeSource

    def __post_init__(self):
        if not (0.0 < self.value_percent <= 100.0):
            raise InvalidPlqy(
                f"envelope must lie in (0, 100], got {self.value_percent}"
            )


@dataclass(frozen=True)
class RecipeDocument:
    raw_text: str
    substrate: AttributeMap
    layers: tuple[Layer, ...]


def _role_for_header(header: str) -> LayerRole:
    upper = header.upper()
    for role in (LayerRole.EML, LayerRole.HIL, LayerRole.HTL, LayerRole.ETL):
        if role.value in upper:
            return role
    return LayerRole.OTHER


def _split_top_level(line: str) -> list[str]:
    """Split on commas that are not inside parentheses."""
    parts, depth, start = [], 0, 0
    for i, ch in enumerate(line):
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth = max(0, depth - 1)
        elif ch == "," and depth == 0:
            parts.append(line[start:i])
            start = i + 1
    parts.append(line[start:])
    return [p.strip() for p in parts if p.strip()]


def _coerce(value: str) -> str | float:
    try:
        num = float(value)
    except ValueError:
        return value
    return num if math.isfinite(num) else value


class _AttributeCollector:
    """Accumulates key/value fragments, tolerating values wrapped onto the
    next line and retaining unparseable fragments under synthesized keys."""

    def __init__(self):
        self.attributes: AttributeMap = {}
        self._pending_key: str | None = None
        self._raw_index = 0

    def feed(self, fragment: str) -> None:
        m = _KEY_VALUE.match(fragment)
        if m:
            key, value = m.group(1), m.group(2).strip()
            if value:
                self._flush_pending()
                self.attributes[key] = _coerce(value)
            else:
                self._flush_pending()
                self._pending_key = key
        elif self._pending_key is not None:
            self.attributes[self._pending_key] = _coerce(fragment)
            self._pending_key = None
        else:
            self.attributes[f"_raw_{self._raw_index}"] = fragment
            self._raw_index += 1

    def _flush_pending(self) -> None:
        if self._pending_key is not None:
            self.attributes[self._pending_key] = ""
            self._pending_key = None

    def finish(self) -> AttributeMap:
        self._flush_pending()
        return self.attributes


def parse_recipe(text: str) -> RecipeDocument:
    """Parse recipe text into substrate attributes plus ordered layer blocks.

    Raises EmptyInput for blank text and MalformedStructure when no bracketed
    layer block is present; either means the record should be rejected at
    ingestion.
    """
    if not text or not text.strip():
        raise EmptyInput("recipe text is empty")

    substrate = _AttributeCollector()
    layers: list[tuple[str, _AttributeCollector]] = []
    current: _AttributeCollector | None = None

    for line in text.splitlines():
        if not line.strip():
            continue
        header = _LAYER_HEADER.match(line)
        if header:
            current = _AttributeCollector()
            layers.append((header.group(1).strip(), current))
            continue
        target = current if current is not None else substrate
        for fragment in _split_top_level(line):
            target.feed(fragment)

    if not layers:
        raise MalformedStructure("no bracketed layer blocks found")

    built = tuple(
        Layer(role=_role_for_header(h), header=h, attributes=c.finish())
        for h, c in layers
    )
    return RecipeDocument(raw_text=text, substrate=substrate.finish(), layers=built)


def serialize_recipe(doc: RecipeDocument) -> str:
    """Canonical writer; parse(serialize(parse(text))) is structurally stable."""
    lines = []
    for key, value in doc.substrate.items():
        lines.append(f"{key}: {value}")
    for layer in doc.layers:
        lines.append(f"[{layer.header}]")
        for key, value in layer.attributes.items():
            lines.append(f"  {key}: {value}")
    return "\n".join(lines) + "\n"


def envelope(recipe: RecipeDocument) -> Envelope:
    """Upper bound on the predicted efficiency, in percent.

    Uses the highest film PLQY among emissive layers; without a measured film
    PLQY the envelope degenerates to the full 0-100 range.
    """
    fractions = []
    for layer in recipe.layers:
        if layer.role is not LayerRole.EML:
            continue
        value = layer.attributes.get(PLQY_FILM_KEY)
        if value is None:
            continue
        if not isinstance(value, float) or not (0.0 < value <= 1.0):
            raise InvalidPlqy(f"{PLQY_FILM_KEY} must lie in (0, 1], got {value!r}")
        fractions.append(value)
    if not fractions:
        return Envelope(100.0, EnvelopeSource.DEFAULT_FULL_RANGE)
    return Envelope(100.0 * max(fractions), EnvelopeSource.PLQY_FILM)
