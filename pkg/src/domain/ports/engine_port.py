"""
Engine Port - Abstract interfaces for Metropolis sweep kernels and samplers.

A kernel owns the spin state of L lanes on one graph and updates one
bipartition class per call. Every acceptance decision compares one 64-bit draw
against floor(exp(-dE / T) * 2^64); moves with dE <= 0 are always accepted.
Kernels share the threshold table below so that different spin layouts make
bit-identical decisions from identical draws.
"""

from abc import ABC, abstractmethod
from collections.abc import Sequence

import numpy as np
import numpy.typing as npt

from src.domain.entities.chimera import ChimeraGraph, ColorClass, Instance
from src.domain.entities.run import HeuristicResult, RunConfig, RunOutput, TemperatureLadder

BELOW_ONE = np.nextafter(1.0, 0.0)


def metropolis_thresholds(
    delta_e: npt.ArrayLike, temperature: npt.ArrayLike
) -> tuple[npt.NDArray[np.bool_], npt.NDArray[np.uint64]]:
    """
    Acceptance thresholds for 64-bit uniform draws.

    Args:
        delta_e: Energy changes of the proposed flips
        temperature: Temperatures, broadcastable against `delta_e`

    Returns:
        (always, thresholds): accept when `always` or draw < threshold
    """
    delta = np.asarray(delta_e, dtype=np.float64)
    temps = np.asarray(temperature, dtype=np.float64)
    always = np.broadcast_to(delta <= 0.0, np.broadcast(delta, temps).shape).copy()
    p = np.exp(-np.maximum(delta, 0.0) / temps)
    p = np.where(always, 0.0, np.minimum(p, BELOW_ONE))
    return always, np.floor(np.ldexp(p, 64)).astype(np.uint64)


class AcceptanceTable:
    """
    Precomputed thresholds for integer energy changes on a temperature ladder.

    Entries cover dE in [-bound, bound]; lookups clip to that range.
    """

    def __init__(self, ladder: TemperatureLadder, bound: int) -> None:
        self.bound = int(bound)
        deltas = np.arange(-self.bound, self.bound + 1, dtype=np.float64)
        self.always, self.thresholds = metropolis_thresholds(
            deltas[None, :], ladder.as_array()[:, None]
        )

    def lookup(
        self, temperature_index: npt.NDArray[np.int64], delta_e: npt.ArrayLike
    ) -> tuple[npt.NDArray[np.bool_], npt.NDArray[np.uint64]]:
        """
        Thresholds for each lane and energy change.

        Args:
            temperature_index: (L,) ladder index of each lane
            delta_e: (V,) or (L, V) integer-valued energy changes

        Returns:
            (always, thresholds) of shape (L, V)
        """
        column = np.clip(np.rint(np.asarray(delta_e)).astype(np.int64), -self.bound, self.bound)
        column = column + self.bound
        rows = temperature_index[:, None]
        return self.always[rows, column], self.thresholds[rows, column]


class SweepKernel(ABC):
    """
    Abstract Metropolis kernel over L lanes of one graph.

    Lanes are grouped by instance: lane = instance * lanes_per_instance + copy.
    """

    @property
    @abstractmethod
    def n_lanes(self) -> int:
        """Number of simulated lanes."""
        ...

    @abstractmethod
    def half_sweep(
        self,
        color: int,
        temperature_index: npt.NDArray[np.int64],
        draws: npt.NDArray[np.uint64],
    ) -> npt.NDArray[np.float64]:
        """
        Attempt one flip per vertex of a bipartition class in every lane.

        Args:
            color: Bipartition class (0 or 1)
            temperature_index: (L,) ladder index of each lane
            draws: (L, V) raw 64-bit uniforms, one per lane and vertex

        Returns:
            (L,) energy change of each lane
        """
        ...

    @abstractmethod
    def spins(self) -> npt.NDArray[np.int8]:
        """(L, N) copy of the current spins."""
        ...

    @abstractmethod
    def lane_spins(self, lane: int) -> npt.NDArray[np.int8]:
        """(N,) copy of one lane's spins."""
        ...


class KernelFactoryPort(ABC):
    """Creates kernels for a batch of instances sharing one graph."""

    @abstractmethod
    def create(
        self,
        graph: ChimeraGraph,
        classes: tuple[ColorClass, ColorClass],
        instances: Sequence[Instance],
        lanes_per_instance: int,
        spins: npt.NDArray[np.int8],
        table: AcceptanceTable | None,
        temperatures: npt.NDArray[np.float64],
    ) -> SweepKernel:
        """
        Build a kernel.

        Args:
            graph: Shared graph
            classes: Bipartition classes of the graph
            instances: One instance per lane group
            lanes_per_instance: Lanes per instance
            spins: (L, N) initial spins
            table: Integer threshold table, None for real-valued couplings
            temperatures: Ladder temperatures

        Raises:
            PackingError: If the requested layout cannot hold the batch
        """
        ...


class SamplerPort(ABC):
    """
    Abstract parallel-tempering sampler.

    The hardness escalation depends only on this contract, so it can be driven
    by a real engine or by synthetic trace generators.
    """

    @abstractmethod
    def run(
        self,
        instances: Sequence[Instance],
        ladder: TemperatureLadder,
        config: RunConfig,
    ) -> list[RunOutput]:
        """
        Run parallel tempering on every instance.

        Returns:
            One RunOutput per instance, in input order
        """
        ...

    @abstractmethod
    def solve_batch(
        self,
        instances: Sequence[Instance],
        ladder: TemperatureLadder,
        config: RunConfig,
        targets: Sequence[float] | None = None,
    ) -> list[HeuristicResult]:
        """
        Bounded heuristic solves, stopping each instance at its first hit.

        Returns:
            One HeuristicResult per instance, in input order
        """
        ...


class EngineError(Exception):
    """Base exception for Monte Carlo engine errors."""

    def __init__(self, message: str, cause: Exception | None = None):
        super().__init__(message)
        self.cause = cause


class PackingError(EngineError):
    """Raised when lanes cannot be bit-packed together."""

    pass


class EnergyBookkeepingError(EngineError):
    """Raised when incremental energies disagree with a recomputation."""

    pass


class PermutationError(EngineError):
    """Raised when a temperature permutation is corrupted."""

    pass
