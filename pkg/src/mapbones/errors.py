"""Exception types shared across the package."""


class DomainError(ValueError):
    """A precondition on the mathematical domain was violated."""


class InfeasibleError(DomainError):
    """A combinatorial object admitted by the filters has no realization.

    Raised when a backward solve exits [0,1] or a forward check fails; this
    flags a sufficiency gap rather than a plain bad argument.
    """


class TraceError(RuntimeError):
    """Curve continuation failed to complete (budget, corrector, boundary)."""


class BudgetError(RuntimeError):
    """A computation exceeded its configured lap or step budget."""
