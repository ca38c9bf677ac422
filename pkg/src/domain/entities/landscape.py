"""
Landscape Entity - Energy-versus-temperature curves, zero-temperature
extrapolations, chaos detections and overlap distributions.
"""

from dataclasses import dataclass
from enum import StrEnum
from typing import Any

import numpy as np
import numpy.typing as npt

MASS_TOLERANCE = 1e-12


class PairType(StrEnum):
    """Which labeled snapshots an overlap distribution compares."""

    GS_GS = "GS-GS"
    GS_ES = "GS-ES"


@dataclass(frozen=True, slots=True, eq=False)
class EnergyCurve:
    """
    Mean energy above the ground state per ladder temperature.

    Attributes:
        temperatures: Ladder temperatures
        excess: <E>(T_i) - E0
        errors: Jackknife errors, non-negative
        burn_in_steps: Steps discarded before averaging
        tau_steps: Mixing time in steps used for the burn-in gate
        blocks: Number of jackknife blocks
    """

    temperatures: npt.NDArray[np.float64]
    excess: npt.NDArray[np.float64]
    errors: npt.NDArray[np.float64]
    burn_in_steps: int = 0
    tau_steps: float = 0.0
    blocks: int = 0

    def __post_init__(self) -> None:
        """Validate alignment and error signs."""
        if not (self.temperatures.shape == self.excess.shape == self.errors.shape):
            raise ValueError("temperatures, excess and errors must be aligned")
        if np.any(self.errors < 0):
            raise ValueError("errors must be non-negative")
        if np.any(np.diff(self.temperatures) <= 0):
            raise ValueError("temperatures must be strictly increasing")

    @classmethod
    def create(
        cls,
        temperatures: npt.ArrayLike,
        excess: npt.ArrayLike,
        errors: npt.ArrayLike | None = None,
    ) -> "EnergyCurve":
        """Curve from array-likes; errors default to zero."""
        t = np.asarray(temperatures, dtype=np.float64)
        return cls(
            temperatures=t,
            excess=np.asarray(excess, dtype=np.float64),
            errors=np.zeros_like(t) if errors is None else np.asarray(errors, dtype=np.float64),
        )

    @property
    def size(self) -> int:
        """Number of ladder points on the curve."""
        return int(self.temperatures.size)


@dataclass(frozen=True, slots=True)
class ZeroTemperatureEstimate:
    """
    Linear extrapolation in x = exp(-gap / T) to x = 0.

    Attributes:
        excess: Extrapolated E(0) - E0 (the systematic error of the estimate)
        t_low: Ladder temperature used near the low anchor
        t_high: Ladder temperature used near the high anchor
        gap: Excitation gap used for the variable x
    """

    excess: float
    t_low: float
    t_high: float
    gap: float


@dataclass(frozen=True, slots=True)
class ChaosDetection:
    """
    One sudden jump of <E>(T) between adjacent ladder temperatures.

    Attributes:
        temperature: Midpoint of the flagged pair
        t_low: Lower temperature of the pair
        t_high: Upper temperature of the pair
        jump: Energy increase across the pair
    """

    temperature: float
    t_low: float
    t_high: float
    jump: float


@dataclass(frozen=True, slots=True)
class OverlapDistribution:
    """
    Histogram of |q| on [0, 1].

    Attributes:
        pair_type: GS-GS or GS-ES
        bin_width: Histogram bin width
        mass: Probability mass per bin, summing to 1 when sufficient
        samples: Number of sampled pairs
        median: Median |q| of the sampled pairs
        sufficient: False when too few labeled snapshots were available
    """

    pair_type: PairType
    bin_width: float
    mass: tuple[float, ...]
    samples: int
    median: float
    sufficient: bool = True

    def __post_init__(self) -> None:
        """Validate normalization and the median range."""
        if not self.sufficient:
            return
        if abs(sum(self.mass) - 1.0) > MASS_TOLERANCE * max(len(self.mass), 1):
            raise ValueError("histogram mass must sum to 1")
        if not 0.0 <= self.median <= 1.0:
            raise ValueError("median |q| must lie in [0, 1]")

    @classmethod
    def insufficient(cls, pair_type: PairType, bin_width: float) -> "OverlapDistribution":
        """Placeholder for a pair type with too few samples for a histogram."""
        return cls(
            pair_type=pair_type,
            bin_width=bin_width,
            mass=(),
            samples=0,
            median=float("nan"),
            sufficient=False,
        )

    @property
    def bin_edges(self) -> npt.NDArray[np.float64]:
        """Edges of the uniform bins of the overlap magnitude on [0, 1]."""
        return np.linspace(0.0, 1.0, len(self.mass) + 1)

    def to_dict(self) -> dict[str, Any]:
        """Summary fields for logs and tables."""
        return {
            "pair_type": self.pair_type.value,
            "samples": self.samples,
            "median": self.median,
            "sufficient": self.sufficient,
        }


@dataclass(frozen=True, slots=True)
class OverlapPair:
    """GS-GS and GS-ES distributions of one instance."""

    instance_id: str
    gs_gs: OverlapDistribution
    gs_es: OverlapDistribution


@dataclass(frozen=True, slots=True)
class TypicalOverlap:
    """Median over instances of the per-instance median |q|."""

    generation: int
    gs_gs_median: float
    gs_es_median: float
    instances: int


@dataclass(frozen=True, slots=True)
class LandscapeOutcome:
    """
    Landscape analyses of one equilibrated instance.

    Attributes:
        instance_id: Instance
        generation: Hardness generation, None between bins
        steps: Length of the landscape run in elementary steps
        curve: <E>(T) - E0, None when the run was rejected
        estimate: Zero-temperature extrapolation, None when not computable
        detections: Temperature-chaos jumps
        overlaps: GS-GS and GS-ES distributions
        labels: Snapshot counts per state label
        skipped: Reason the instance was not analysed, if any
    """

    instance_id: str
    generation: int | None
    steps: int
    curve: EnergyCurve | None = None
    estimate: ZeroTemperatureEstimate | None = None
    detections: tuple[ChaosDetection, ...] = ()
    overlaps: OverlapPair | None = None
    labels: tuple[tuple[str, int], ...] = ()
    skipped: str | None = None
