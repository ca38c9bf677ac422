"""
Hardness Entity - Temperature random walks, their autocorrelation and the
per-instance hardness report.

Times are kept in elementary steps inside traces and curves; tau in reports is
always in full-lattice Metropolis sweeps (steps * sweeps_per_step).
"""

from dataclasses import dataclass
from enum import StrEnum
from typing import Any

import numpy as np
import numpy.typing as npt


class FitStatus(StrEnum):
    """Outcome of a two-exponential fit."""

    CONVERGED = "converged"
    UNRESOLVED = "unresolved"


class HardnessStatus(StrEnum):
    """Final classification of an instance after escalation."""

    RESOLVED = "resolved"
    UNRESOLVED = "unresolved"
    LOWER_BOUND = "lower_bound"


@dataclass(frozen=True, slots=True, eq=False)
class WalkTrace:
    """
    Temperature-index series i_t of one copy.

    Attributes:
        copy_id: Copy index r * N_T + k
        series: 1-based ladder indices, one per elementary step
        n_temperatures: Ladder size N_T
        sweeps_per_step: Sweeps per elementary step of the producing run
    """

    copy_id: int
    series: npt.NDArray[np.int16]
    n_temperatures: int
    sweeps_per_step: int = 10

    def __post_init__(self) -> None:
        """Validate the series."""
        if self.series.ndim != 1 or self.series.size == 0:
            raise ValueError("Trace must be a non-empty one-dimensional series")
        if self.series.min() < 1 or self.series.max() > self.n_temperatures:
            raise ValueError(f"Trace entries must lie in 1..{self.n_temperatures}")
        if self.sweeps_per_step < 1:
            raise ValueError("sweeps_per_step must be at least 1")

    @property
    def length(self) -> int:
        """Number of recorded lags."""
        return int(self.series.size)


@dataclass(frozen=True, slots=True, eq=False)
class CorrelationCurve:
    """
    C_PT(s) = <i_t i_{t+s}> - (N_T + 1)^2 / 4 on a grid of lags.

    Attributes:
        lags: Lags in elementary steps, strictly increasing, starting at 0
        values: C_PT at each lag
        counts: Number of (t, t + s) pairs averaged at each lag
        n_temperatures: Ladder size N_T
        sweeps_per_step: Conversion factor to sweeps
        trace_length: Length L of the contributing traces
    """

    lags: npt.NDArray[np.int64]
    values: npt.NDArray[np.float64]
    counts: npt.NDArray[np.int64]
    n_temperatures: int
    sweeps_per_step: int
    trace_length: int

    def __post_init__(self) -> None:
        """Validate alignment of lags, values and counts."""
        if not (self.lags.shape == self.values.shape == self.counts.shape):
            raise ValueError("lags, values and counts must be aligned")
        if np.any(self.counts < 1):
            raise ValueError("every lag must average at least one pair")


@dataclass(frozen=True, slots=True)
class TwoExpFit:
    """
    Fit of a1 exp(-s / tau1) + a2 exp(-s / tau2), in elementary steps.

    Attributes:
        status: Whether the fit converged
        tau: Leading time tau1 (steps)
        tau_sub: Sub-leading time tau2 (steps), tau >= tau_sub > 0
        a1: Amplitude of the leading term
        a2: Amplitude of the sub-leading term
        residual: Root-mean-square residual relative to C(0)
        points: Number of lags used
    """

    status: FitStatus
    tau: float = float("nan")
    tau_sub: float = float("nan")
    a1: float = float("nan")
    a2: float = float("nan")
    residual: float = float("nan")
    points: int = 0

    def __post_init__(self) -> None:
        """Validate converged fits."""
        if self.status is FitStatus.CONVERGED:
            if not self.tau >= self.tau_sub > 0:
                raise ValueError("Converged fit requires tau >= tau_sub > 0")
            if self.a1 < 0 or self.a2 < 0:
                raise ValueError("Fit amplitudes must be non-negative")

    @classmethod
    def unresolved(cls, points: int = 0) -> "TwoExpFit":
        """Fit record for a curve the fitter could not resolve."""
        return cls(status=FitStatus.UNRESOLVED, points=points)

    @property
    def converged(self) -> bool:
        """True when the least-squares fit converged."""
        return self.status is FitStatus.CONVERGED


@dataclass(frozen=True, slots=True)
class RoundRecord:
    """
    Which instances one escalation round simulated and which advanced.

    Attributes:
        round: 1-based round number
        steps: Elementary steps simulated per instance
        simulated: Instance ids run in this round
        advanced: Instance ids carried into the next round
    """

    round: int
    steps: int
    simulated: tuple[str, ...]
    advanced: tuple[str, ...]


@dataclass(frozen=True, slots=True)
class HardnessReport:
    """
    Immutable classical-hardness report of one instance.

    Attributes:
        instance_id: Instance identifier
        status: resolved, unresolved, or lower_bound (tau >= bound)
        tau: Mixing time in sweeps (the bound itself for lower_bound rows)
        tau_sub: Sub-leading time in sweeps
        a1: Leading amplitude
        a2: Sub-leading amplitude
        residual: Fit residual
        figure_of_merit: Minimum fraction of time at high temperatures, in [0, 1]
        generation: k with 10^k <= tau <= 3 10^k, None between bins or unresolved
        rounds: Escalation rounds completed
        steps: Trace length of the final round, in elementary steps
        tau_error: Jackknife error of tau in sweeps (NaN when not computed)
    """

    instance_id: str
    status: HardnessStatus
    tau: float
    tau_sub: float
    a1: float
    a2: float
    residual: float
    figure_of_merit: float
    generation: int | None
    rounds: int
    steps: int
    tau_error: float = float("nan")

    def __post_init__(self) -> None:
        """Validate the report."""
        if not 0.0 <= self.figure_of_merit <= 1.0:
            raise ValueError("figure_of_merit must lie in [0, 1]")
        if self.status is HardnessStatus.RESOLVED and not self.tau >= self.tau_sub > 0:
            raise ValueError("Resolved report requires tau >= tau_sub > 0")
        if self.rounds < 1:
            raise ValueError("rounds must be at least 1")

    @property
    def resolved(self) -> bool:
        """True when a generation gave a converged tau."""
        return self.status is HardnessStatus.RESOLVED

    @property
    def generation_label(self) -> str:
        """Table label: the generation when one is known, otherwise the outcome."""
        if self.status is HardnessStatus.LOWER_BOUND:
            return "bound"
        if self.status is HardnessStatus.UNRESOLVED:
            return "unresolved"
        return "between" if self.generation is None else str(self.generation)

    def to_dict(self) -> dict[str, Any]:
        """Row fields for the hardness table and logs."""
        return {
            "id": self.instance_id,
            "status": self.status.value,
            "tau": self.tau,
            "tau_sub": self.tau_sub,
            "residual": self.residual,
            "f": self.figure_of_merit,
            "generation": self.generation_label,
            "rounds": self.rounds,
        }
