"""
Errors - exception hierarchy shared by the planner, simulator and scorers
"""


class NavigationError(Exception):
    """Base class for every domain failure an episode can record"""

    @property
    def code(self) -> str:
        """Short name written into episode rows as the failure reason"""
        return type(self).__name__


class DegenerateCloud(NavigationError):
    pass


class EmptyIndex(NavigationError):
    pass


class EmptyObjectIndex(EmptyIndex):
    pass


class EmptyObject(NavigationError):
    pass


class NoQueriedObject(NavigationError):
    pass


class NoFeasibleCandidate(NavigationError):
    pass


class NoOperationDirection(NavigationError):
    pass


class Unreachable(NavigationError):
    pass


class GoalTooDeep(NavigationError):
    pass


class Stuck(NavigationError):
    """Repeated collisions; `partial` holds the controller state reached before giving up"""

    def __init__(self, message: str, partial=None):
        super().__init__(message)
        self.partial = partial


class ObjectNotFound(NavigationError):
    pass


class SegmentNotFound(NavigationError):
    pass


class NoVisibleCandidates(NavigationError):
    pass


class EmptyResults(NavigationError):
    pass


class UnknownTemplate(NavigationError):
    pass


class MalformedTrace(NavigationError):
    pass


class ScorerError(NavigationError):
    """Failure talking to or interpreting a scorer"""


class Transport(ScorerError):
    pass


class Malformed(ScorerError):
    pass


class LengthMismatch(ScorerError):
    pass
