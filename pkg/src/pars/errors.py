"""Exception types shared across the package."""


class ParsError(Exception):
    """Base class for all package errors."""


class EmptyInput(ParsError):
    pass


class MalformedStructure(ParsError):
    """Recipe text has no recognizable layer blocks."""


class InvalidPlqy(ParsError):
    """PLQY_film_fraction outside (0, 1]; recipe data is corrupt."""


class NonFiniteInput(ParsError):
    """A gate received NaN/inf; upstream extraction is broken."""


class EmptyBatch(ParsError):
    pass


class EmptyPool(ParsError):
    pass


class NoNumericAnswers(ParsError):
    """No candidate in the pool has a successfully extracted answer."""


class NoScoredCandidates(ParsError):
    """Every candidate's judge verdict was unparseable."""


class EmptyRecipe(ParsError):
    pass


class TeacherUnavailable(ParsError):
    """Generation endpoint failed after exhausting retries."""


class AuthFailure(ParsError):
    pass


class ResponseMalformed(ParsError):
    pass


class JudgeUnavailable(ParsError):
    pass


class UnparseableVerdict(ParsError):
    """Judge reply did not contain all five rubric scores after retries."""


class ZeroAcceptance(ParsError):
    """Per-accepted cost is undefined when r_acc == 0."""


class InputSchemaError(ParsError):
    """A prompt-record row failed schema validation."""
