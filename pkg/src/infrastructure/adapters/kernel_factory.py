"""
Kernel Factory - Chooses between the scalar and the multi-spin coded kernel.
"""

from collections.abc import Sequence
from enum import StrEnum

import numpy as np
import numpy.typing as npt
import structlog

from src.domain.entities.chimera import ChimeraGraph, ColorClass, Instance
from src.domain.ports.engine_port import (
    AcceptanceTable,
    KernelFactoryPort,
    PackingError,
    SweepKernel,
)
from src.infrastructure.adapters.packed_kernel import MAX_WORD_SIZE, PackedKernel
from src.infrastructure.adapters.scalar_kernel import ScalarKernel

logger = structlog.get_logger(__name__)


class KernelKind(StrEnum):
    """Supported sweep kernels."""

    SCALAR = "scalar"
    PACKED = "packed"
    AUTO = "auto"  # packed when every instance is +-1 with zero fields


class KernelFactory(KernelFactoryPort):
    """
    Factory for sweep kernels.

    AUTO strategy:
    1. Multi-spin coded kernel for batches of +-1, zero-field instances
    2. Scalar kernel for anything else (perturbed couplings, fields)
    """

    def __init__(
        self, kind: KernelKind | str = KernelKind.AUTO, word_size: int = MAX_WORD_SIZE
    ) -> None:
        """
        Initialize the factory.

        Args:
            kind: Which kernel to build (scalar, packed, or auto)
            word_size: Lanes per word for the packed kernel
        """
        self._kind = KernelKind(kind)
        if not 1 <= word_size <= MAX_WORD_SIZE:
            raise PackingError(f"word_size must lie in 1..{MAX_WORD_SIZE}, got {word_size}")
        self._word_size = word_size

    @property
    def kind(self) -> KernelKind:
        """Requested kernel kind."""
        return self._kind

    @property
    def word_size(self) -> int:
        """Lanes per word for packed kernels."""
        return self._word_size

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
        packable = table is not None and all(inst.is_standard for inst in instances)
        use_packed = self._kind is KernelKind.PACKED or (
            self._kind is KernelKind.AUTO and packable
        )
        if use_packed:
            if table is None:
                raise PackingError("packed kernel requires integer couplings")
            logger.debug("Creating packed kernel", graph=graph.label, word_size=self._word_size)
            return PackedKernel(
                classes, instances, lanes_per_instance, spins, table, self._word_size
            )
        logger.debug("Creating scalar kernel", graph=graph.label)
        return ScalarKernel(classes, instances, lanes_per_instance, spins, table, temperatures)
