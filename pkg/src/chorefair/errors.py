"""Exception types shared across the package."""

from __future__ import annotations

from dataclasses import dataclass


class ChoreFairError(Exception):
    """Base class for all errors raised by this package."""


@dataclass(frozen=True)
class ValidationIssue:
    """One defect found while checking a candidate instance.

    ``code`` is one of ``"NegativeCost"``, ``"ShapeMismatch"`` or
    ``"BadRational"``; ``where`` names the offending cell or field.
    """

    code: str
    where: str
    message: str

    def __str__(self) -> str:
        return f"{self.code} at {self.where}: {self.message}"


class ValidationError(ChoreFairError):
    """Candidate instance rejected; carries every issue found, not just the first."""

    def __init__(self, issues: list[ValidationIssue]):
        self.issues = list(issues)
        super().__init__("; ".join(str(i) for i in self.issues))


class WrongAgentCount(ChoreFairError):
    """Solver invoked on an instance outside its agent-count contract."""


class TooFewItems(ChoreFairError):
    """Operation requires at least as many items as agents."""


class BundleOverlap(ChoreFairError):
    """Two bundles of an allocation share an item."""


class UnknownItem(ChoreFairError):
    """A bundle references an item index outside the instance."""


class FallbackRequired(ChoreFairError):
    """Large-item structure violates the bound guaranteed by the dispatch
    precondition; the caller should have taken the head/tail fallback."""


class PreconditionViolated(ChoreFairError):
    """Input breaks a documented precondition of the operation."""


class NotBiValued(ChoreFairError):
    """Cost matrix has more than two distinct values."""


class BudgetExceeded(ChoreFairError):
    """Exhaustive search would examine more states than allowed."""


class BadParams(ChoreFairError):
    """Generator parameters out of range or inconsistent."""


class InapplicableAlgorithm(ChoreFairError):
    """Requested algorithm does not apply to the given instance."""


class UnknownSuite(ChoreFairError):
    """Benchmark suite name not registered."""


class ParseError(ChoreFairError):
    """Input file is malformed; message pins down the location."""


class MismatchedFiles(ChoreFairError):
    """Allocation file does not fit the instance file."""
