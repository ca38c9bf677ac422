"""
Brute Force Solver - Exhaustive ground-state enumeration.

The free spins are split into two halves A and B; all 2^|A| x 2^|B| energies
E_A + E_B + s_A^T J_AB s_B are evaluated block by block as dense matrix
products. With zero fields the last spin is fixed to +1 and counts are doubled.
"""

import numpy as np
import numpy.typing as npt
import structlog

from src.domain.entities.chimera import Instance, SpinConfig, energy
from src.domain.entities.exact import ExactResult
from src.domain.ports.exact_port import (
    GroundStateSolver,
    InstanceTooLargeError,
    WitnessMismatchError,
)
from src.infrastructure.adapters.scaled import scale_instance, spin_table

logger = structlog.get_logger(__name__)

DEFAULT_MAX_SPINS = 32
BLOCK_ELEMENTS = 2**22


def _half_energy(
    spins: npt.NDArray[np.int64],
    pairs: list[tuple[int, int, int]],
    fields: npt.NDArray[np.int64],
) -> npt.NDArray[np.float64]:
    total = spins @ fields
    for u, v, j in pairs:
        total = total + j * spins[:, u] * spins[:, v]
    return np.asarray(total, dtype=np.float64)


class BruteForceSolver(GroundStateSolver):
    """Exact enumeration for instances with at most `max_spins` active vertices."""

    def __init__(self, max_spins: int = DEFAULT_MAX_SPINS):
        self.max_spins = max_spins

    @property
    def name(self) -> str:
        return "brute_force"

    def supports(self, instance: Instance) -> bool:
        return instance.size <= self.max_spins

    def solve(self, instance: Instance) -> ExactResult:
        n = instance.size
        if n > self.max_spins:
            raise InstanceTooLargeError(
                f"brute force limited to {self.max_spins} spins, instance {instance.id} has {n}"
            )
        scaled = scale_instance(instance)
        if n == 0:
            return ExactResult(
                instance_id=instance.id,
                e0=scaled.energy(0),
                witness=SpinConfig(values=()),
                degeneracy=1,
                solver=self.name,
            )

        symmetric = not instance.has_fields
        n_free = n - 1 if symmetric else n
        size_a = n_free // 2
        fields = scaled.fields[:n_free].copy()
        pairs_a: list[tuple[int, int, int]] = []
        pairs_b: list[tuple[int, int, int]] = []
        cross = np.zeros((size_a, n_free - size_a), dtype=np.int64)
        for (pu, pv), coupling in zip(instance.graph.edge_positions, scaled.couplings, strict=True):
            j = int(coupling)
            if pv >= n_free:
                fields[pu] += j  # partner fixed at +1
            elif pv < size_a:
                pairs_a.append((pu, pv, j))
            elif pu >= size_a:
                pairs_b.append((pu - size_a, pv - size_a, j))
            else:
                cross[pu, pv - size_a] += j

        spins_a = spin_table(size_a)
        spins_b = spin_table(n_free - size_a)
        energy_a = _half_energy(spins_a, pairs_a, fields[:size_a])
        energy_b = _half_energy(spins_b, pairs_b, fields[size_a:])
        coupled = (spins_a @ cross).astype(np.float64)
        spins_b_t = spins_b.T.astype(np.float64)

        best = np.inf
        count = 0
        where = (0, 0)
        rows = max(1, BLOCK_ELEMENTS // spins_b.shape[0])
        for start in range(0, spins_a.shape[0], rows):
            stop = min(start + rows, spins_a.shape[0])
            block = energy_a[start:stop, None] + energy_b[None, :] + coupled[start:stop] @ spins_b_t
            low = block.min()
            if low < best:
                best, count = low, 0
                flat = int(np.argmin(block))
                where = (start + flat // block.shape[1], flat % block.shape[1])
            if low == best:
                count += int(np.count_nonzero(block == best))

        values = np.concatenate([spins_a[where[0]], spins_b[where[1]], [1] * (n - n_free)])
        witness = SpinConfig.from_array(values)
        e0 = scaled.energy(int(best))
        if energy(instance, witness) != e0:
            raise WitnessMismatchError(f"brute-force witness of {instance.id} does not reach E0")
        degeneracy = 2 * count if symmetric else count
        logger.debug("Brute force solved", instance=instance.id, e0=str(e0), degeneracy=degeneracy)
        return ExactResult(
            instance_id=instance.id,
            e0=e0,
            witness=witness,
            degeneracy=degeneracy,
            solver=self.name,
        )
