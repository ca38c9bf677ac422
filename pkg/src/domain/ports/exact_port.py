"""
Exact Port - Abstract interface for ground-state solvers.
"""

from abc import ABC, abstractmethod

from src.domain.entities.chimera import Instance
from src.domain.entities.exact import ExactResult


class GroundStateSolver(ABC):
    """Abstract exact solver returning E0, a witness and optionally the degeneracy."""

    @property
    @abstractmethod
    def name(self) -> str:
        """Solver name recorded in results."""
        ...

    @abstractmethod
    def supports(self, instance: Instance) -> bool:
        """
        Check whether the instance is within the solver's limits.

        Args:
            instance: Candidate instance

        Returns:
            True if `solve` will not raise InstanceTooLargeError
        """
        ...

    @abstractmethod
    def solve(self, instance: Instance) -> ExactResult:
        """
        Compute the exact ground state.

        Args:
            instance: Instance to solve

        Returns:
            ExactResult whose witness has energy E0 exactly

        Raises:
            InstanceTooLargeError: If the instance exceeds the solver's limits
            WitnessMismatchError: If the reconstructed witness is inconsistent
        """
        ...


class ExactSolverError(Exception):
    """Base exception for exact solver errors."""

    def __init__(self, message: str, cause: Exception | None = None):
        super().__init__(message)
        self.cause = cause


class InstanceTooLargeError(ExactSolverError):
    """Raised when an instance exceeds a solver's size limit."""

    pass


class WitnessMismatchError(ExactSolverError):
    """Raised when a witness does not reproduce the computed ground energy."""

    pass
