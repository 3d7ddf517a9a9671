"""Exception hierarchy shared by all modules."""


class SelfSimError(Exception):
    """Base class for domain errors (CLI exit code 1)."""


class ParseError(SelfSimError):
    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class PresentationMismatch(SelfSimError):
    pass


class BudgetExceeded(SelfSimError):
    """A configurable resource cap was hit. Never a claim about the answer."""

    def __init__(self, message, partial=None):
        self.partial = partial
        super().__init__(message)


class InvalidTransversal(SelfSimError):
    pass


class LiftingError(SelfSimError):
    pass


class BranchAmbiguity(LiftingError):
    pass


class ClearanceError(LiftingError):
    pass


class MatchError(SelfSimError):
    """Ambiguous nearest-neighbour matching of lifted endpoints."""


class SeparationError(SelfSimError):
    pass


class GeometryError(SelfSimError):
    pass
