"""
Landscape Service - Thermodynamics and configuration-space structure.

Energy-versus-temperature curves from equilibrated runs, their linear
extrapolation in exp(-gap / T) to zero temperature, detection of sudden energy
jumps (temperature chaos) and spin-overlap distributions between ground and
first excited states.
"""

import math
from collections.abc import Mapping, Sequence
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
import numpy.typing as npt
import structlog

from src.domain.entities.chimera import SpinConfig
from src.domain.entities.exact import StateLabel
from src.domain.entities.landscape import (
    ChaosDetection,
    EnergyCurve,
    OverlapDistribution,
    OverlapPair,
    PairType,
    TypicalOverlap,
    ZeroTemperatureEstimate,
)
from src.domain.entities.run import RunOutput
from src.domain.errors import InsufficientDataError

logger = structlog.get_logger(__name__)


@dataclass
class LandscapeConfig:
    """Thresholds and sampling settings of the landscape analyses."""

    burn_in_factor: float = 3.0  # keep steps t > burn_in_factor * tau
    min_length_factor: float = 10.0  # runs shorter than this many tau are rejected
    blocks: int = 10
    gap: float = 2.0
    t_low: float = 0.2
    t_high: float = 0.3
    tc_error_factor: float = 5.0
    tc_median_factor: float = 5.0
    tc_window: int = 2
    tc_min_jump: float = 0.5
    bin_width: float = 0.02
    pair_samples: int = 100_000
    seed: int = 0

    def __post_init__(self) -> None:
        if self.blocks < 2:
            raise ValueError("at least two jackknife blocks are required")
        if not 0 < self.bin_width <= 1:
            raise ValueError("bin_width must lie in (0, 1]")
        if self.pair_samples < 1:
            raise ValueError("pair_samples must be positive")


def energy_curve(
    output: RunOutput,
    e0: Fraction | float,
    tau_steps: float,
    config: LandscapeConfig | None = None,
) -> EnergyCurve:
    """
    Time-averaged <E>(T_i) - E0 with block-jackknife errors.

    Args:
        output: Run with replica-averaged energies per step, or per block of
            `trace_stride` steps
        e0: Exact ground-state energy
        tau_steps: Mixing time of the instance in elementary steps
        config: Burn-in and blocking settings

    Raises:
        InsufficientDataError: If the run is shorter than min_length_factor * tau
            or leaves fewer post-burn-in energy rows than blocks
    """
    cfg = config or LandscapeConfig()
    steps = output.steps
    if steps < cfg.min_length_factor * tau_steps or steps == 0:
        raise InsufficientDataError(
            f"run of {steps} steps is shorter than {cfg.min_length_factor} tau ({tau_steps:g})"
        )
    burn_in = int(math.floor(cfg.burn_in_factor * tau_steps))
    # rows are kept only when they start at or after the burn-in
    kept = output.energies[-(-burn_in // output.trace_stride) :]
    if kept.shape[0] < cfg.blocks:
        raise InsufficientDataError(
            f"{kept.shape[0]} post-equilibration energy rows cannot fill {cfg.blocks} blocks"
        )

    usable = kept.shape[0] - kept.shape[0] % cfg.blocks
    block_means = kept[:usable].reshape(cfg.blocks, -1, kept.shape[1]).mean(axis=1)
    total = block_means.sum(axis=0)
    leave_one = (total[None, :] - block_means) / (cfg.blocks - 1)
    mean = leave_one.mean(axis=0)
    error = np.sqrt((cfg.blocks - 1) / cfg.blocks * ((leave_one - mean) ** 2).sum(axis=0))
    return EnergyCurve(
        temperatures=output.ladder.as_array(),
        excess=kept.mean(axis=0) - float(e0),
        errors=error,
        burn_in_steps=burn_in,
        tau_steps=float(tau_steps),
        blocks=cfg.blocks,
    )


def extrapolate_zero_T(
    curve: EnergyCurve,
    gap: float = 2.0,
    t_low: float = 0.2,
    t_high: float = 0.3,
) -> ZeroTemperatureEstimate:
    """
    Extrapolate the curve linearly in x = exp(-gap / T) to x = 0.

    The ladder points nearest to t_low and t_high are used and recorded. With
    excess energies as input, the extrapolated value is the systematic error
    E_extrap(0) - E0.

    Raises:
        InsufficientDataError: If both anchors map to the same ladder point
    """
    temps = curve.temperatures
    lo = int(np.argmin(np.abs(temps - t_low)))
    hi = int(np.argmin(np.abs(temps - t_high)))
    if lo == hi:
        raise InsufficientDataError("extrapolation anchors fall on the same ladder point")
    x1, x2 = math.exp(-gap / temps[lo]), math.exp(-gap / temps[hi])
    y1, y2 = float(curve.excess[lo]), float(curve.excess[hi])
    intercept = y1 - x1 * (y2 - y1) / (x2 - x1)
    return ZeroTemperatureEstimate(
        excess=intercept, t_low=float(temps[lo]), t_high=float(temps[hi]), gap=gap
    )


def detect_tc(curve: EnergyCurve, config: LandscapeConfig | None = None) -> list[ChaosDetection]:
    """
    Flag sudden rises of <E>(T) between adjacent ladder points.

    A pair (T_i, T_{i+1}) is flagged when its increment exceeds
    `tc_error_factor` combined jackknife errors, its slope exceeds
    `tc_median_factor` times the median slope of the neighbouring pairs within
    `tc_window`, and the increment is at least `tc_min_jump`.
    """
    cfg = config or LandscapeConfig()
    if curve.size < 2:
        return []
    increments = np.diff(curve.excess)
    slopes = increments / np.diff(curve.temperatures)
    errors = np.sqrt(curve.errors[:-1] ** 2 + curve.errors[1:] ** 2)

    found = []
    for i, jump in enumerate(increments):
        if jump < cfg.tc_min_jump or jump <= cfg.tc_error_factor * errors[i]:
            continue
        window = [
            j
            for j in range(max(0, i - cfg.tc_window), min(slopes.size, i + cfg.tc_window + 1))
            if j != i
        ]
        baseline = float(np.median(np.abs(slopes[window]))) if window else 0.0
        if slopes[i] <= cfg.tc_median_factor * baseline:
            continue
        t_lo, t_hi = float(curve.temperatures[i]), float(curve.temperatures[i + 1])
        found.append(
            ChaosDetection(
                temperature=(t_lo + t_hi) / 2, t_low=t_lo, t_high=t_hi, jump=float(jump)
            )
        )
    return found


def overlap(a: SpinConfig, b: SpinConfig) -> Fraction:
    """
    Spin overlap q = 1 - 2 d(a, b) / N with d the Hamming distance.

    Raises:
        ValueError: If the configurations differ in size or are empty
    """
    if a.size != b.size:
        raise ValueError(f"configurations differ in size: {a.size} != {b.size}")
    if a.size == 0:
        raise ValueError("overlap of empty configurations is undefined")
    distance = sum(x != y for x, y in zip(a.values, b.values, strict=True))
    return 1 - Fraction(2 * distance, a.size)


def _pairs(
    left: npt.NDArray[np.intp],
    right: npt.NDArray[np.intp],
    same: bool,
    samples: int,
    rng: np.random.Generator,
) -> tuple[npt.NDArray[np.intp], npt.NDArray[np.intp]]:
    if same:
        total = left.size * (left.size - 1) // 2
        if total <= samples:
            i, j = np.triu_indices(left.size, k=1)
            return left[i], left[j]
        i = rng.integers(0, left.size, samples)
        j = rng.integers(0, left.size - 1, samples)
        j = j + (j >= i)
        return left[i], left[j]
    if left.size * right.size <= samples:
        i, j = np.meshgrid(np.arange(left.size), np.arange(right.size), indexing="ij")
        return left[i.ravel()], right[j.ravel()]
    return left[rng.integers(0, left.size, samples)], right[rng.integers(0, right.size, samples)]


def _distribution(
    configs: npt.NDArray[np.int8],
    pair: tuple[npt.NDArray[np.intp], npt.NDArray[np.intp]],
    pair_type: PairType,
    bin_width: float,
) -> OverlapDistribution:
    a, b = configs[pair[0]].astype(np.int64), configs[pair[1]].astype(np.int64)
    q = np.abs(np.einsum("pn,pn->p", a, b)) / configs.shape[1]
    bins = int(round(1.0 / bin_width))
    counts, _ = np.histogram(q, bins=bins, range=(0.0, 1.0))
    return OverlapDistribution(
        pair_type=pair_type,
        bin_width=1.0 / bins,
        mass=tuple(float(c) for c in counts / q.size),
        samples=int(q.size),
        median=float(np.median(q)),
    )


def overlap_distributions(
    configs: npt.ArrayLike,
    labels: Sequence[StateLabel],
    config: LandscapeConfig | None = None,
) -> tuple[OverlapDistribution, OverlapDistribution]:
    """
    GS-GS and GS-ES distributions of |q| over labeled snapshots.

    Pairs are enumerated exhaustively when there are at most `pair_samples`
    of them and drawn uniformly with replacement otherwise. Each distribution
    is marked insufficient on its own when its snapshots are missing (fewer
    than two GS, or no ES).
    """
    cfg = config or LandscapeConfig()
    matrix = np.asarray(configs, dtype=np.int8)
    if matrix.ndim != 2 or matrix.shape[0] != len(labels):
        raise ValueError("one label per configuration row is required")
    tags = np.asarray([str(label) for label in labels])
    gs = np.flatnonzero(tags == StateLabel.GS.value)
    es = np.flatnonzero(tags == StateLabel.ES.value)
    rng = np.random.default_rng(cfg.seed)

    if gs.size >= 2:
        gs_gs = _distribution(
            matrix, _pairs(gs, gs, True, cfg.pair_samples, rng), PairType.GS_GS, cfg.bin_width
        )
    else:
        gs_gs = OverlapDistribution.insufficient(PairType.GS_GS, cfg.bin_width)
    if gs.size >= 1 and es.size >= 1:
        gs_es = _distribution(
            matrix, _pairs(gs, es, False, cfg.pair_samples, rng), PairType.GS_ES, cfg.bin_width
        )
    else:
        gs_es = OverlapDistribution.insufficient(PairType.GS_ES, cfg.bin_width)
    if not (gs_gs.sufficient and gs_es.sufficient):
        logger.warning("Insufficient labeled snapshots", ground=int(gs.size), excited=int(es.size))
    return gs_gs, gs_es


def _median(values: list[float]) -> float:
    return float(np.median(values)) if values else float("nan")


def typical_overlap(
    pairs: Sequence[OverlapPair], generations: Mapping[str, int | None]
) -> list[TypicalOverlap]:
    """
    Median over instances of the per-instance median |q|, per generation.

    Instances without a generation, and distributions marked insufficient, are
    left out.
    """
    grouped: dict[int, list[OverlapPair]] = {}
    for pair in pairs:
        generation = generations.get(pair.instance_id)
        if generation is not None:
            grouped.setdefault(generation, []).append(pair)
    return [
        TypicalOverlap(
            generation=k,
            gs_gs_median=_median([p.gs_gs.median for p in members if p.gs_gs.sufficient]),
            gs_es_median=_median([p.gs_es.median for p in members if p.gs_es.sufficient]),
            instances=len(members),
        )
        for k, members in sorted(grouped.items())
    ]


def typical_extrapolation_error(
    estimates: Mapping[str, ZeroTemperatureEstimate], generations: Mapping[str, int | None]
) -> dict[int, float]:
    """Median extrapolation error per generation."""
    grouped: dict[int, list[float]] = {}
    for instance_id, estimate in estimates.items():
        generation = generations.get(instance_id)
        if generation is not None:
            grouped.setdefault(generation, []).append(estimate.excess)
    return {k: _median(v) for k, v in sorted(grouped.items())}
