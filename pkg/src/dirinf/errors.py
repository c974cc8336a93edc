"""Exception hierarchy shared by every module of the package."""


class DirInfError(Exception):
    """Base class for all package errors."""


class EmptySetError(DirInfError):
    """The polyhedron (or other set) has no points."""


class DimensionLimitError(DirInfError):
    """Input exceeds the desk-scale caps of the exact engine."""


class NotMemberError(DirInfError):
    """A point violates a set constraint by more than the activity tolerance."""


class NumericalFailure(DirInfError):
    """The LP pivoting hit a pivot that is too small, or failed to converge."""


class BoundedSetError(DirInfError):
    """An operation that needs an unbounded set received a bounded one."""


class UnsupportedError(DirInfError):
    """The function expression lies outside the supported grammar."""


class NotInDomainError(DirInfError):
    """The point is outside the effective domain of the function."""


class ParseError(DirInfError):
    """Malformed function or polyhedron document.

    Parameters
    ----------
    message : str
        Human readable description.
    location : str
        JSON-path-like location of the offending key, e.g. ``$.sum[1].quad``.
    """

    def __init__(self, message, location="$"):
        super().__init__(f"{location}: {message}")
        self.location = location


class DomainUnreachable(DirInfError):
    """No sample along the requested direction lies in the domain."""


class QualificationUnknown(DirInfError):
    """The singular estimate is too unstable to decide a qualification."""


class LipschitzPreconditionFailed(DirInfError):
    """A constraint function is not Lipschitz at infinity in the direction."""


class InfeasibleError(DirInfError):
    """The search region is empty."""


class NoViolatingSamples(DirInfError):
    """All samples satisfy the constraint, so no ratio can be formed."""


class EvalOverflow(DirInfError, ArithmeticError):
    """A finite function value exceeded 1e300 in magnitude."""


class GridTooCoarse(UserWarning):
    """Neighbouring directions of a sweep received different verdicts."""
