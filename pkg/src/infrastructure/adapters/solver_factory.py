"""
Solver Factory - Picks an exact ground-state solver per instance.
"""

from enum import StrEnum

import structlog

from src.domain.entities.chimera import Instance
from src.domain.ports.exact_port import GroundStateSolver, InstanceTooLargeError
from src.infrastructure.adapters.brute_force import DEFAULT_MAX_SPINS, BruteForceSolver
from src.infrastructure.adapters.column_dp import DEFAULT_MAX_STATE_BITS, ColumnDPSolver

logger = structlog.get_logger(__name__)

AUTO_BRUTE_FORCE_SPINS = 20


class SolverKind(StrEnum):
    """Supported exact solvers."""

    BRUTE_FORCE = "brute_force"
    COLUMN_DP = "column_dp"
    AUTO = "auto"  # brute force up to 20 spins, column DP beyond


class SolverFactory:
    """
    Factory for exact solvers.

    AUTO strategy:
    1. Brute force for instances with at most 20 active vertices
    2. Column DP otherwise, if its interface fits the state-bit limit
    3. Brute force as a last resort while within its spin limit
    """

    def __init__(
        self,
        max_spins: int = DEFAULT_MAX_SPINS,
        max_state_bits: int = DEFAULT_MAX_STATE_BITS,
    ) -> None:
        self._brute_force = BruteForceSolver(max_spins)
        self._column_dp = ColumnDPSolver(max_state_bits)
        logger.debug(
            "SolverFactory initialized", max_spins=max_spins, max_state_bits=max_state_bits
        )

    def create(self, kind: SolverKind | str, instance: Instance) -> GroundStateSolver:
        """
        Choose a solver for an instance.

        Raises:
            InstanceTooLargeError: If AUTO finds no solver within its limits
        """
        kind = SolverKind(kind)
        if kind is SolverKind.BRUTE_FORCE:
            return self._brute_force
        if kind is SolverKind.COLUMN_DP:
            return self._column_dp
        if instance.size <= AUTO_BRUTE_FORCE_SPINS:
            return self._brute_force
        for solver in (self._column_dp, self._brute_force):
            if solver.supports(instance):
                return solver
        raise InstanceTooLargeError(f"no exact solver can handle instance {instance.id}")
