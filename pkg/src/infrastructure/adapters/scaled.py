"""
Scaled integer views of rational instances.

Couplings and fields are multiplied by the least common multiple of their
denominators so that every partial energy is an exact int64 (and exact in
float64 below 2^53).
"""

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
import numpy.typing as npt

from src.domain.entities.chimera import Instance
from src.domain.ports.exact_port import InstanceTooLargeError

EXACT_FLOAT_LIMIT = 2**53


@dataclass(frozen=True, slots=True, eq=False)
class ScaledInstance:
    """Integer couplings and fields with their common scale."""

    scale: int
    couplings: npt.NDArray[np.int64]
    fields: npt.NDArray[np.int64]

    def energy(self, value: int) -> Fraction:
        """Unscaled energy of a scaled integer value."""
        return Fraction(int(value), self.scale)


def scale_instance(instance: Instance) -> ScaledInstance:
    """
    Raises:
        InstanceTooLargeError: If scaled energies could exceed exact float range
    """
    scale = 1
    for value in (*instance.couplings, *instance.fields):
        scale = math.lcm(scale, value.denominator)
    if instance.energy_bound() * scale >= EXACT_FLOAT_LIMIT:
        raise InstanceTooLargeError(f"scaled energies of {instance.id} exceed 2^53")
    return ScaledInstance(
        scale=scale,
        couplings=np.asarray([int(j * scale) for j in instance.couplings], dtype=np.int64),
        fields=np.asarray([int(h * scale) for h in instance.fields], dtype=np.int64),
    )


def spin_table(bits: int) -> npt.NDArray[np.int64]:
    """(2^bits, bits) matrix of all +-1 assignments; bit j of row x is the (bits-1-j)th binary digit."""
    states = np.arange(2**bits, dtype=np.int64)[:, None]
    shifts = np.arange(bits - 1, -1, -1, dtype=np.int64)[None, :]
    return 1 - 2 * ((states >> shifts) & 1)
