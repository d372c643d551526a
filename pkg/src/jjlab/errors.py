"""Exception and warning types shared across the toolkit.

Every raised error carries a human-readable message naming the offending
quantity; callers rely on the types, log messages go to people.
"""


class JjlabError(Exception):
    """Base class for all toolkit errors."""


class DomainError(JjlabError, ValueError):
    """An argument is outside the physical domain of an operation."""


class UnsupportedRegimeError(JjlabError, ValueError):
    """The requested evaluation point is outside the validity of the model."""


class AnalysisError(JjlabError, RuntimeError):
    """A data-driven extraction could not be carried out on this input."""


class NoResonanceError(AnalysisError):
    """No resonance dip distinguishable from the noise floor."""


class FitEvaluationError(JjlabError, RuntimeError):
    """The model returned non-finite values at the initial parameters."""


class RankDeficiencyError(JjlabError, ValueError):
    """The data cannot constrain the requested parameters."""


class GeometryError(DomainError):
    """A geometric dimension is non-physical after corrections."""


class SchemaError(JjlabError, ValueError):
    """A file or configuration does not match its declared schema."""


class UnmetDependencyError(JjlabError, RuntimeError):
    """A requested output needs analysis results that are not present."""


class NormalStateWarning(UserWarning):
    """Evaluation above the critical temperature; the gap is zero there."""
