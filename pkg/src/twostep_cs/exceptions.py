"""Exception types raised across the package."""


class DomainError(ValueError):
    """An argument lies outside the domain of a mathematical function."""


class BracketError(ValueError):
    """A root-finding bracket does not enclose a sign change."""


class QuadratureError(RuntimeError):
    """Adaptive quadrature failed to reach the requested tolerance."""


class SizeError(ValueError):
    """Problem dimensions exceed what an exhaustive routine accepts."""


class SolverError(RuntimeError):
    """An LP solve did not finish with an optimal status.

    ``stage`` names the step of the two-step procedure that failed
    (``"l1"`` or ``"weighted"``) when raised from there.
    """

    def __init__(self, message, status=None, stage=None):
        super().__init__(message)
        self.status = status
        self.stage = stage
