"""
Scalar Kernel - Reference Metropolis implementation on int8 spin arrays.

Local fields are gathered through the padded neighbour tables of each
bipartition class, so one call updates a whole class in every lane at once.
Works for any rational couplings and fields.
"""

from collections.abc import Sequence

import numpy as np
import numpy.typing as npt
import structlog

from src.domain.entities.chimera import ColorClass, Instance
from src.domain.ports.engine_port import AcceptanceTable, SweepKernel, metropolis_thresholds

logger = structlog.get_logger(__name__)


class ScalarKernel(SweepKernel):
    """
    Metropolis kernel with one int8 per spin.

    Uses the shared integer threshold table when one is supplied, and computes
    thresholds directly for real-valued couplings otherwise.
    """

    def __init__(
        self,
        classes: tuple[ColorClass, ColorClass],
        instances: Sequence[Instance],
        lanes_per_instance: int,
        spins: npt.NDArray[np.int8],
        table: AcceptanceTable | None,
        temperatures: npt.NDArray[np.float64],
    ) -> None:
        """
        Initialize the kernel.

        Args:
            classes: Bipartition classes of the shared graph
            instances: One instance per lane group
            lanes_per_instance: Lanes per instance
            spins: (L, N) initial spins, copied
            table: Integer threshold table or None
            temperatures: Ladder temperatures
        """
        self._classes = classes
        self._groups = len(instances)
        self._per_group = lanes_per_instance
        self._spins = np.array(spins, dtype=np.int8, copy=True)
        self._table = table
        self._temperatures = np.asarray(temperatures, dtype=np.float64)

        couplings = np.stack([inst.coupling_array for inst in instances])
        self._fields = np.stack([inst.field_array for inst in instances])
        # (groups, V, D) couplings per neighbour slot, zero on padded slots
        self._weights = tuple(
            np.where(c.valid[None, :, :], couplings[:, c.edge_ids], 0.0) for c in classes
        )
        logger.debug(
            "ScalarKernel initialized",
            lanes=self.n_lanes,
            groups=self._groups,
            tabulated=table is not None,
        )

    @property
    def n_lanes(self) -> int:
        """Number of simulated lanes."""
        return int(self._spins.shape[0])

    def half_sweep(
        self,
        color: int,
        temperature_index: npt.NDArray[np.int64],
        draws: npt.NDArray[np.uint64],
    ) -> npt.NDArray[np.float64]:
        cls = self._classes[color]
        if cls.size == 0:
            return np.zeros(self.n_lanes)
        n = self._spins.shape[1]
        grouped = self._spins.reshape(self._groups, self._per_group, n)
        neighbor_spins = grouped[:, :, cls.neighbors]
        local = np.einsum("gcvd,gvd->gcv", neighbor_spins, self._weights[color])
        local += self._fields[:, None, cls.positions]
        own = grouped[:, :, cls.positions]
        delta = (-2.0 * own * local).reshape(self.n_lanes, cls.size)

        if self._table is not None:
            always, thresholds = self._table.lookup(temperature_index, delta)
        else:
            always, thresholds = metropolis_thresholds(
                delta, self._temperatures[temperature_index][:, None]
            )
        accepted = always | (draws < thresholds)

        flips = np.where(accepted, -1, 1).astype(np.int8)
        self._spins[:, cls.positions] = self._spins[:, cls.positions] * flips
        return np.asarray((delta * accepted).sum(axis=1), dtype=np.float64)

    def spins(self) -> npt.NDArray[np.int8]:
        return self._spins.copy()

    def lane_spins(self, lane: int) -> npt.NDArray[np.int8]:
        return self._spins[lane].copy()
