"""
Anneal Entity - Coupling-noise experiments and success-probability records.

Covers the J-chaos types (perturbation specs, programming-cycle results,
percentile reports) and the time-to-solution types (anneal records, TTS rows,
power-law fits, annealing-time windows).
"""

import math
from collections.abc import Callable, Sequence
from dataclasses import dataclass
from enum import StrEnum
from typing import Any

import numpy as np

from src.domain.entities.chimera import ChimeraGraph

BiasHook = Callable[[ChimeraGraph, np.random.Generator], Sequence[float]]


class RecordSource(StrEnum):
    """Provenance of an anneal record."""

    SIMULATED = "simulated"
    IMPORTED = "imported"


class WindowBand(StrEnum):
    """Lower [20, 60) or upper [60, 200) part of a decade window, in us * 10^k."""

    LOW = "low"
    HIGH = "high"


@dataclass(frozen=True, slots=True)
class PerturbationSpec:
    """
    Gaussian coupling noise J -> J + R with R ~ N(0, delta_j).

    Attributes:
        delta_j: Standard deviation of the noise, in units of J
        seed: Seed of the noise draw
        clamp: Optional (low, high) range applied to perturbed couplings
        decimals: Decimal places kept in perturbed couplings
        bias_hook: Optional per-vertex field bias (graph, rng) -> biases
    """

    delta_j: float = 0.05
    seed: int = 0
    clamp: tuple[float, float] | None = None
    decimals: int = 9
    bias_hook: BiasHook | None = None

    def __post_init__(self) -> None:
        """Validate the noise parameters."""
        if not self.delta_j >= 0:
            raise ValueError("delta_j must be non-negative")
        if self.clamp is not None and self.clamp[0] > self.clamp[1]:
            raise ValueError("clamp range must satisfy low <= high")
        if not 0 <= self.decimals <= 15:
            raise ValueError("decimals must lie in 0..15")

    def with_seed(self, seed: int) -> "PerturbationSpec":
        """Same perturbation drawn from another seed."""
        return PerturbationSpec(
            delta_j=self.delta_j,
            seed=seed,
            clamp=self.clamp,
            decimals=self.decimals,
            bias_hook=self.bias_hook,
        )


@dataclass(frozen=True, slots=True)
class CycleResult:
    """
    Outcome of one simulated programming cycle.

    Attributes:
        instance_id: Unperturbed instance
        cycle: Cycle index
        gauge_seed: Seed of the random gauge
        perturb_seed: Seed of the coupling noise
        attempts: X
        hits: Y, attempts reaching the unperturbed ground-state energy
    """

    instance_id: str
    cycle: int
    gauge_seed: int
    perturb_seed: int
    attempts: int
    hits: int

    def __post_init__(self) -> None:
        """Validate 0 <= Y <= X."""
        if self.attempts < 1:
            raise ValueError("attempts must be at least 1")
        if not 0 <= self.hits <= self.attempts:
            raise ValueError("hits must lie in 0..attempts")

    @property
    def p(self) -> float:
        """Empirical success probability hits / attempts."""
        return self.hits / self.attempts


@dataclass(frozen=True, slots=True)
class GroundStateShift:
    """
    How far coupling noise moves the exact ground state.

    Attributes:
        instance_id: Unperturbed instance
        delta_j: Noise level
        overlaps: |q| between the original and the perturbed witness, per trial
        changed: Trials whose perturbed witness is not an original ground state
    """

    instance_id: str
    delta_j: float
    overlaps: tuple[float, ...]
    changed: int

    @property
    def trials(self) -> int:
        """Number of perturbed instances tried."""
        return len(self.overlaps)

    @property
    def changed_fraction(self) -> float:
        """Fraction of trials whose ground state changed."""
        return self.changed / self.trials if self.overlaps else float("nan")


@dataclass(frozen=True, slots=True)
class PercentileReport:
    """
    Percentiles of per-cycle success probabilities of one instance.

    Attributes:
        instance_id: Instance
        cycles: Number of cycles
        i50: Median p
        i80: 80th percentile
        i90: 90th percentile
        r89: i80 / i90, None when i90 == 0
        i50_error: Bootstrap error of the median
    """

    instance_id: str
    cycles: int
    i50: float
    i80: float
    i90: float
    r89: float | None
    i50_error: float = float("nan")


@dataclass(frozen=True, slots=True)
class AnnealRecord:
    """
    One programming cycle at one annealing time.

    Attributes:
        instance_id: Instance
        t_ann_us: Annealing time in microseconds
        cycle: Cycle index
        attempts: X
        hits: Y
        source: simulated or imported
    """

    instance_id: str
    t_ann_us: float
    cycle: int
    attempts: int
    hits: int
    source: RecordSource = RecordSource.SIMULATED

    def __post_init__(self) -> None:
        """Validate the record."""
        if not self.t_ann_us > 0:
            raise ValueError("t_ann must be positive")
        if self.attempts < 1:
            raise ValueError("attempts must be at least 1")
        if not 0 <= self.hits <= self.attempts:
            raise ValueError("hits must lie in 0..attempts")


@dataclass(frozen=True, slots=True)
class Aggregate:
    """
    P = Y_tot / X_tot with its resolution floor 1 / X_tot.

    Attributes:
        attempts: X_tot
        hits: Y_tot
    """

    attempts: int
    hits: int

    @property
    def p(self) -> float:
        """Pooled success probability hits / attempts."""
        return self.hits / self.attempts

    @property
    def floor(self) -> float:
        """Smallest resolvable probability, one hit in all attempts."""
        return 1.0 / self.attempts

    @property
    def below_resolution(self) -> bool:
        """True when no attempt hit the ground state."""
        return self.hits == 0


@dataclass(frozen=True, slots=True)
class TtsRow:
    """Aggregated success probability and time-to-solution at one t_ann."""

    instance_id: str
    t_ann_us: float
    p: float
    floor: float
    tts_us: float

    @property
    def resolved(self) -> bool:
        """True when the time-to-solution is finite."""
        return math.isfinite(self.tts_us)


@dataclass(frozen=True, slots=True)
class TypicalTts:
    """
    Median over instances of the per-instance minimal tts.

    Attributes:
        generation: Hardness generation k
        tts_us: Median minimal tts (inf when unresolved)
        instances: Number of instances
        low_us: Lower bootstrap bound
        high_us: Upper bootstrap bound
    """

    generation: int
    tts_us: float
    instances: int
    low_us: float = float("nan")
    high_us: float = float("nan")

    @property
    def resolved(self) -> bool:
        """True when the time-to-solution is finite."""
        return math.isfinite(self.tts_us)


@dataclass(frozen=True, slots=True)
class ScalingFit:
    """
    Power-law fit y = amplitude * x^exponent.

    Attributes:
        exponent: Fitted slope in log-log space
        amplitude: Prefactor
        stderr: Standard error of the exponent
        x_min: Smallest x in the fit window
        x_max: Largest x in the fit window
        points: Points used (at least 3)
        excluded: Points dropped for non-positive or non-finite values
        tag: Percentile track or series label
    """

    exponent: float
    amplitude: float
    stderr: float
    x_min: float
    x_max: float
    points: int
    excluded: int = 0
    tag: str = ""

    def __post_init__(self) -> None:
        """Validate the fit."""
        if self.points < 3:
            raise ValueError("fit window must contain at least 3 points")
        if not (math.isfinite(self.exponent) and math.isfinite(self.amplitude)):
            raise ValueError("fit parameters must be finite")

    def to_dict(self) -> dict[str, Any]:
        """Fit parameters for logs and summaries."""
        return {
            "tag": self.tag,
            "exponent": self.exponent,
            "amplitude": self.amplitude,
            "stderr": self.stderr,
            "x_min": self.x_min,
            "x_max": self.x_max,
            "points": self.points,
            "excluded": self.excluded,
        }


@dataclass(frozen=True, slots=True)
class TimeWindow:
    """Annealing-time window: 20 <= t / 10^k < 60 (low) or 60 <= t / 10^k < 200 (high) us."""

    decade: int
    band: WindowBand

    @property
    def sort_key(self) -> tuple[int, int]:
        """Ordering by decade, low band first."""
        return self.decade, 0 if self.band is WindowBand.LOW else 1

    @property
    def label(self) -> str:
        """Window label such as k1-low."""
        return f"k{self.decade}-{self.band.value}"

    @property
    def bounds_us(self) -> tuple[float, float]:
        """Half-open annealing-time range of the window in microseconds."""
        scale = 10.0**self.decade
        if self.band is WindowBand.LOW:
            return 20.0 * scale, 60.0 * scale
        return 60.0 * scale, 200.0 * scale


@dataclass(frozen=True, slots=True)
class WindowPercentile:
    """
    Percentile of p over the instances of one generation in one window.

    Attributes:
        generation: Hardness generation k
        window: Annealing-time window
        quantile: Requested quantile in [0, 1]
        value: Percentile of p (NaN when unresolved)
        t_ann_us: Representative annealing time of the window
        instances: Number of instances
        below_resolution: Instances with zero measured hits
        resolved: False when too many instances are below resolution
    """

    generation: int
    window: TimeWindow
    quantile: float
    value: float
    t_ann_us: float
    instances: int
    below_resolution: int
    resolved: bool


@dataclass(frozen=True, slots=True)
class JChaosOutcome:
    """
    Coupling-noise results of one instance.

    Attributes:
        instance_id: Instance
        cycles: Simulated programming cycles
        report: Percentiles of p, None with fewer than ten cycles
        median_notation: Median p in value(error) notation
        shift: Exact ground-state shift, None when not measured
    """

    instance_id: str
    cycles: tuple[CycleResult, ...]
    report: PercentileReport | None = None
    median_notation: str = "NA"
    shift: GroundStateShift | None = None


@dataclass(frozen=True, slots=True)
class HeuristicRow:
    """Typical first-hit sweeps of heuristic PT in one generation."""

    generation: int
    tau_sweeps: float
    sweeps: float


@dataclass(frozen=True, slots=True)
class TtsSummary:
    """
    Everything the time-to-solution stage emits.

    Attributes:
        records: Simulated and imported anneal records
        rows: P and tts per (instance, t_ann)
        typical: Typical tts per generation
        generation_taus: Median tau in sweeps per generation
        windows: Percentile tracks keyed by quantile
        fits: alpha, theta and heuristic-PT exponents
        heuristic: Heuristic-PT rows per generation
    """

    records: tuple[AnnealRecord, ...]
    rows: tuple[TtsRow, ...]
    typical: tuple[TypicalTts, ...]
    generation_taus: tuple[tuple[int, float], ...]
    windows: tuple[tuple[float, tuple[WindowPercentile, ...]], ...]
    fits: tuple[ScalingFit, ...]
    heuristic: tuple[HeuristicRow, ...] = ()
