"""Exception types shared across the package.

Retraction failures (:class:`NotPositiveDefinite`, :class:`NonTimelike`) are
recoverable signals consumed by the proximal-parameter escalation logic, not
faults.
"""

from __future__ import annotations


class GeometryError(Exception):
    """Base class for manifold-contract violations."""


class DimensionMismatch(GeometryError):
    """Coordinate array shape does not match the manifold's ambient shape."""


class MembershipViolation(GeometryError):
    """Point coordinates fail the manifold membership test."""


class TangencyViolation(GeometryError):
    """Vector coordinates do not lie in the tangent space at the base point."""


class BaseMismatch(GeometryError):
    """Tangent vectors based at different points were mixed in one operation."""


class ComponentCountMismatch(DimensionMismatch):
    """Product-manifold operands have differing numbers of components."""


class RetractionFailure(GeometryError):
    """Retraction left the manifold; caller should escalate the proximal parameter."""


class NotPositiveDefinite(RetractionFailure):
    """X + xi lost positive definiteness beyond the configured margin."""


class NonTimelike(RetractionFailure):
    """x + v cannot be normalized back onto the hyperboloid sheet."""


class DegenerateModel(Exception):
    """No active set of the cutting-plane subproblem passed the feasibility checks."""


class BudgetExhausted(Exception):
    """A hard iteration cap was hit (doubling cap, or reference-run budget)."""


class StepFailure(Exception):
    """Subgradient step could not be completed after repeated halvings."""


class ParseError(ValueError):
    """Malformed config file or flag value."""


class ValidationError(ValueError):
    """Config violates an experiment invariant."""


class MalformedTrace(ValueError):
    """Trace CSV does not follow the pinned schema."""


class EmptyTrace(ValueError):
    """A plot was requested for a trace with no rows."""
