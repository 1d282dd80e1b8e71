"""Exception hierarchy.

Domain errors signal invalid parameters or a regime where the requested
object does not exist; solver errors signal numerical failure.  The CLI
maps the two families onto distinct exit codes.
"""

from __future__ import annotations


class AnomalousError(Exception):
    """Base class for every error raised by this package."""


class DomainError(AnomalousError, ValueError):
    """Parameters outside the admissible range of an operation."""


class NoEternalSolutions(DomainError):
    """No eternal self-similar solution exists (m >= m_c)."""


class ConstraintViolated(DomainError):
    """A closed-form family was requested off its admissible parameter set."""


class Unsupported(DomainError):
    """A (critical point, direction) pair that carries no profile behaviour."""


class SolverError(AnomalousError, RuntimeError):
    """Base class for numerical failures."""


class StepFailure(SolverError):
    def __init__(self, message: str, param: float, state: tuple[float, float]):
        super().__init__(f"{message} at param={param:.17g}, state={state}")
        self.param = param
        self.state = state


class BracketLost(SolverError):
    """A bracketed sign change vanished under dense output."""


class BracketNotFound(SolverError):
    """Geometric expansion could not bracket a sign change of g(K)."""


class NotEquilibrium(SolverError):
    """The point handed to a linearization is not a zero of the field."""


class DegenerateOrbit(SolverError):
    """An orbit lacks the asymptotic regime needed for reconstruction."""


class NonIntegrableTail(SolverError):
    """Fitted tail decays too slowly for the mass integral to converge."""


class ShootingError(SolverError):
    """A separatrix ended in an outcome the shooting bookkeeping rejects."""
