"""Exception hierarchy shared across the package.

Everything raised on bad inputs or bad configuration derives from
:class:`ValidationError`; everything raised because a remote endpoint
misbehaved derives from :class:`TransportError`. The CLI maps the former
to exit code 1 and the latter to exit code 2.
"""

from __future__ import annotations


class PathCalibError(Exception):
    """Base class for all package errors."""


class ValidationError(PathCalibError):
    """Bad input data or configuration."""


class UnparseableAnswer(ValidationError):
    """No canonical answer could be extracted from a raw answer string."""


class InvalidShape(ValidationError):
    """Path shaping was asked for an impossible step budget."""


class SchemaViolation(ValidationError):
    """A record in an input file does not match its schema."""


class DimensionMismatch(ValidationError):
    """Vector or table dimensions disagree with the ensemble's N or M."""


class DegenerateEnsemble(ValidationError):
    """An operation needs more paths than the ensemble provides."""


class MissingGold(ValidationError):
    """An accuracy computation met a question without a gold answer."""


class TemplateNotFound(ValidationError):
    """Unknown verification prompt template identifier."""


class InvalidTarget(ValidationError):
    """Verification target step lies beyond the path's real steps."""


class OracleMissing(ValidationError):
    """No oracle verdicts available for the requested question."""


class ZeroVector(ValidationError):
    """Cosine similarity is undefined for a zero-norm vector."""


class EmptySource(ValidationError):
    """A source-anchored metric was asked to run without source steps."""


class NoRealSteps(ValidationError):
    """A step-indexed metric was asked to run on a path of only pads."""


class EmptyTokens(ValidationError):
    """Perplexity needs at least one token log-probability."""


class PositiveLogProb(ValidationError):
    """A token log-probability was > 0, which is not a probability."""


class EmptyInput(ValidationError):
    """An aggregate was asked to run over zero reports."""


class QuestionSetMismatch(ValidationError):
    """Report runs being compared cover different question sets."""


class EndpointNotConfigured(ValidationError):
    """No completion endpoint base address is configured."""


class TransportError(PathCalibError):
    """The completion endpoint could not be reached or kept failing."""


class AuthError(TransportError):
    """The completion endpoint rejected the configured credential."""


class RateLimited(TransportError):
    """The completion endpoint kept responding 429 past the retry budget."""


class MalformedResponse(TransportError):
    """The completion endpoint answered with an unusable payload."""
