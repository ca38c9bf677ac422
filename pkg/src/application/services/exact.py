"""
Exact Service - Ground-state bookkeeping around the exact solvers.
"""

from collections import Counter
from collections.abc import Callable, Sequence
from fractions import Fraction

import numpy as np
import numpy.typing as npt
import structlog

from src.domain.entities.chimera import Instance, SpinConfig, energy, energy_batch
from src.domain.entities.exact import ExactResult, StateLabel
from src.domain.ports.exact_port import GroundStateSolver

logger = structlog.get_logger(__name__)

EXCITATION_GAP = 2


def stored_energies(
    instance: Instance, configs: npt.ArrayLike
) -> list[Fraction]:
    """Exact energies of stored configurations, one row per configuration."""
    rows = np.asarray(configs, dtype=np.int8).reshape(-1, instance.size)
    if instance.is_integral:
        return [Fraction(int(round(e))) for e in energy_batch(instance, rows)]
    return [energy(instance, SpinConfig.from_array(row)) for row in rows]


def excitation_gap_states(
    instance: Instance,
    configs: npt.ArrayLike,
    e0: Fraction,
    gap: int = EXCITATION_GAP,
) -> list[StateLabel]:
    """
    Label stored configurations relative to the ground state.

    GS when E = E0, ES when E = E0 + gap, other otherwise. ES labels are only
    assigned on +-1, zero-field instances; perturbed couplings have no
    universal gap.

    Args:
        instance: Instance the configurations belong to
        configs: (n, N) spin configurations
        e0: Exact ground-state energy
        gap: Minimal excitation gap

    Returns:
        One label per configuration
    """
    labels = []
    for e in stored_energies(instance, configs):
        if e == e0:
            labels.append(StateLabel.GS)
        elif instance.is_standard and e == e0 + gap:
            labels.append(StateLabel.ES)
        else:
            labels.append(StateLabel.OTHER)
    return labels


def label_counts(labels: Sequence[StateLabel]) -> dict[StateLabel, int]:
    counts = Counter(labels)
    return {label: counts.get(label, 0) for label in StateLabel}


def solve_all(
    instances: Sequence[Instance], choose: Callable[[Instance], GroundStateSolver]
) -> list[ExactResult]:
    """Solve every instance with the solver chosen for it."""
    results = []
    for inst in instances:
        solver = choose(inst)
        result = solver.solve(inst)
        logger.info(
            "Ground state solved",
            instance=inst.id,
            solver=solver.name,
            e0=str(result.e0),
            degeneracy=result.degeneracy_label,
        )
        results.append(result)
    return results

