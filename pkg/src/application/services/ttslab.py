"""
TTS Lab - Success probabilities, time-to-solution and scaling fits.

Records of programming cycles are pooled per (instance, t_ann) into
P = Y_tot / X_tot and tts = t_ann / P. Per hardness generation the typical tts
is the median over instances of the minimal tts; infinite values sort last and
an infinite median marks the generation unresolved.
"""

import math
from collections import defaultdict
from collections.abc import Iterable, Mapping, Sequence

import numpy as np
import numpy.typing as npt
import structlog
from scipy import stats

from src.domain.entities.anneal import (
    Aggregate,
    AnnealRecord,
    CycleResult,
    HeuristicRow,
    RecordSource,
    ScalingFit,
    TimeWindow,
    TtsRow,
    TypicalTts,
    WindowBand,
    WindowPercentile,
)
from src.domain.entities.hardness import HardnessReport
from src.domain.errors import FitError, InsufficientDataError

logger = structlog.get_logger(__name__)

WINDOW_DECADES = (0, 1, 2)
LONGEST_ANNEAL_US = 20_000.0
BOOTSTRAP_RESAMPLES = 1000
MIN_FIT_POINTS = 3


def aggregate(records: Sequence[AnnealRecord]) -> Aggregate:
    """
    Pool the records of one instance at one annealing time.

    Raises:
        InsufficientDataError: With no records
        ValueError: If the records mix instances or annealing times
    """
    if not records:
        raise InsufficientDataError("cannot aggregate an empty record set")
    keys = {(r.instance_id, r.t_ann_us) for r in records}
    if len(keys) > 1:
        raise ValueError("records must share one instance and one annealing time")
    return Aggregate(
        attempts=sum(r.attempts for r in records), hits=sum(r.hits for r in records)
    )


def tts(p: float, t_ann_us: float) -> float:
    """t_ann / P, infinite when P = 0."""
    if not 0.0 <= p <= 1.0:
        raise ValueError("P must lie in [0, 1]")
    if p == 0:
        return math.inf
    return t_ann_us / p


def tts_table(records: Iterable[AnnealRecord]) -> list[TtsRow]:
    """One TtsRow per (instance, t_ann), sorted by instance then t_ann."""
    grouped: dict[tuple[str, float], list[AnnealRecord]] = defaultdict(list)
    for record in records:
        grouped[(record.instance_id, record.t_ann_us)].append(record)
    rows = []
    for (instance_id, t_ann), group in sorted(grouped.items()):
        pooled = aggregate(group)
        rows.append(
            TtsRow(
                instance_id=instance_id,
                t_ann_us=t_ann,
                p=pooled.p,
                floor=pooled.floor,
                tts_us=tts(pooled.p, t_ann),
            )
        )
    return rows


def minimal_tts(rows: Iterable[TtsRow]) -> dict[str, float]:
    """Minimum tts over annealing times, per instance."""
    best: dict[str, float] = {}
    for row in rows:
        best[row.instance_id] = min(best.get(row.instance_id, math.inf), row.tts_us)
    return best


def group_typical_tts(values: Sequence[float]) -> float:
    """
    Median with infinite values ordered last.

    For an even count the two middle values are averaged; any infinite middle
    value makes the median infinite.

    Raises:
        InsufficientDataError: For an empty group
    """
    if not values:
        raise InsufficientDataError("empty generation")
    ordered = sorted(values)
    mid = len(ordered) // 2
    if len(ordered) % 2:
        return float(ordered[mid])
    low, high = ordered[mid - 1], ordered[mid]
    if math.isinf(low) or math.isinf(high):
        return math.inf
    return (low + high) / 2.0


def typical_tts_by_generation(
    rows: Sequence[TtsRow],
    generations: Mapping[str, int | None],
    resamples: int = BOOTSTRAP_RESAMPLES,
    seed: int = 0,
) -> list[TypicalTts]:
    """
    Typical tts per generation with a 95% bootstrap interval over instances.
    """
    best = minimal_tts(rows)
    grouped: dict[int, list[float]] = defaultdict(list)
    for instance_id, value in sorted(best.items()):
        generation = generations.get(instance_id)
        if generation is not None:
            grouped[generation].append(value)

    rng = np.random.default_rng(seed)
    result = []
    for generation, values in sorted(grouped.items()):
        typical = group_typical_tts(values)
        picks = rng.integers(0, len(values), size=(resamples, len(values)))
        boot = np.asarray([group_typical_tts([values[i] for i in row]) for row in picks])
        low, high = np.quantile(boot, [0.025, 0.975], method="inverted_cdf")
        if math.isinf(typical):
            logger.warning("Typical tts unresolved", generation=generation)
        result.append(
            TypicalTts(
                generation=generation,
                tts_us=typical,
                instances=len(values),
                low_us=float(low),
                high_us=float(high),
            )
        )
    return result


def fit_power_law(
    x: npt.ArrayLike, y: npt.ArrayLike, tag: str = ""
) -> ScalingFit:
    """
    Least-squares line through (log10 x, log10 y).

    Non-positive and non-finite points are excluded and counted.

    Raises:
        FitError: With fewer than three usable points or constant x
    """
    xs = np.asarray(x, dtype=float)
    ys = np.asarray(y, dtype=float)
    if xs.shape != ys.shape:
        raise ValueError("x and y must be aligned")
    keep = np.isfinite(xs) & np.isfinite(ys) & (xs > 0) & (ys > 0)
    excluded = int(xs.size - keep.sum())
    if keep.sum() < MIN_FIT_POINTS:
        raise FitError(f"power-law fit needs {MIN_FIT_POINTS} positive points, got {keep.sum()}")
    lx, ly = np.log10(xs[keep]), np.log10(ys[keep])
    if np.ptp(lx) == 0:
        raise FitError("power-law fit needs at least two distinct x values")
    fit = stats.linregress(lx, ly)
    if excluded:
        logger.warning("Points excluded from power-law fit", tag=tag, excluded=excluded)
    return ScalingFit(
        exponent=float(fit.slope),
        amplitude=float(10.0**fit.intercept),
        stderr=float(fit.stderr),
        x_min=float(xs[keep].min()),
        x_max=float(xs[keep].max()),
        points=int(keep.sum()),
        excluded=excluded,
        tag=tag,
    )


def window_of(t_ann_us: float) -> TimeWindow | None:
    """
    Annealing-time window of t_ann, or None outside [20 us, 20 ms].

    Windows are half-open; t_ann = 20 ms joins the last window.
    """
    if t_ann_us == LONGEST_ANNEAL_US:
        return TimeWindow(decade=WINDOW_DECADES[-1], band=WindowBand.HIGH)
    for k in WINDOW_DECADES:
        scale = 10.0**k
        if 20.0 * scale <= t_ann_us < 60.0 * scale:
            return TimeWindow(decade=k, band=WindowBand.LOW)
        if 60.0 * scale <= t_ann_us < 200.0 * scale:
            return TimeWindow(decade=k, band=WindowBand.HIGH)
    return None


def time_windows(records: Iterable[AnnealRecord]) -> dict[TimeWindow, list[AnnealRecord]]:
    """Group records by annealing-time window; out-of-range records are dropped with a warning."""
    grouped: dict[TimeWindow, list[AnnealRecord]] = defaultdict(list)
    for record in records:
        window = window_of(record.t_ann_us)
        if window is None:
            logger.warning(
                "Annealing time outside windows",
                instance=record.instance_id,
                t_ann_us=record.t_ann_us,
            )
            continue
        grouped[window].append(record)
    return dict(sorted(grouped.items(), key=lambda item: item[0].sort_key))


def percentile_by_generation(
    records: Iterable[AnnealRecord],
    generations: Mapping[str, int | None],
    quantile: float,
) -> list[WindowPercentile]:
    """
    Percentile of per-instance p for every (generation, window) group.

    Records of one instance inside a window are pooled. A group is unresolved
    when the fraction of instances with zero hits exceeds the quantile, since
    the percentile then lies below the resolution floor.
    """
    if not 0.0 <= quantile <= 1.0:
        raise ValueError("quantile must lie in [0, 1]")
    table = []
    for window, members in time_windows(records).items():
        by_group: dict[int, dict[str, list[AnnealRecord]]] = defaultdict(lambda: defaultdict(list))
        for record in members:
            generation = generations.get(record.instance_id)
            if generation is not None:
                by_group[generation][record.instance_id].append(record)
        for generation, per_instance in sorted(by_group.items()):
            pooled = [
                Aggregate(
                    attempts=sum(r.attempts for r in recs), hits=sum(r.hits for r in recs)
                )
                for _, recs in sorted(per_instance.items())
            ]
            p = np.asarray([a.p for a in pooled])
            zeros = int(sum(a.below_resolution for a in pooled))
            resolved = zeros / len(pooled) <= quantile and zeros < len(pooled)
            times = [r.t_ann_us for recs in per_instance.values() for r in recs]
            table.append(
                WindowPercentile(
                    generation=generation,
                    window=window,
                    quantile=quantile,
                    value=float(np.quantile(p, quantile)) if resolved else float("nan"),
                    t_ann_us=float(np.median(times)),
                    instances=len(pooled),
                    below_resolution=zeros,
                    resolved=resolved,
                )
            )
    return sorted(table, key=lambda w: (w.generation, w.window.sort_key))


def fit_theta(percentiles: Sequence[WindowPercentile]) -> dict[int, ScalingFit]:
    """
    theta per generation: exponent of p ~ t_ann^theta over resolved windows.

    Generations with fewer than three resolved windows are skipped.
    """
    fits = {}
    grouped: dict[int, list[WindowPercentile]] = defaultdict(list)
    for entry in percentiles:
        if entry.resolved:
            grouped[entry.generation].append(entry)
    for generation, entries in sorted(grouped.items()):
        tag = f"theta-q{round(entries[0].quantile * 100)}-g{generation}"
        try:
            fits[generation] = fit_power_law(
                [e.t_ann_us for e in entries], [e.value for e in entries], tag=tag
            )
        except FitError as exc:
            logger.warning("theta fit skipped", generation=generation, reason=str(exc))
    return fits


def heuristic_scaling(
    first_hits: Mapping[str, int | None],
    taus: Mapping[str, float],
    generations: Mapping[str, int | None],
) -> tuple[list[HeuristicRow], ScalingFit | None]:
    """
    Typical first-hit sweeps per generation against the median tau.

    Unsolved attempts count as infinite. Returns one row per generation and the
    power-law fit of sweeps against tau, or None when fewer than three
    generations give a usable point.
    """
    grouped: dict[int, list[str]] = defaultdict(list)
    for instance_id, generation in generations.items():
        if generation is not None and instance_id in first_hits and instance_id in taus:
            grouped[generation].append(instance_id)
    rows = []
    for generation, ids in sorted(grouped.items()):
        sweeps = [math.inf if (hit := first_hits[i]) is None else float(hit) for i in ids]
        rows.append(
            HeuristicRow(
                generation=generation,
                tau_sweeps=float(np.median([taus[i] for i in ids])),
                sweeps=group_typical_tts(sweeps),
            )
        )
    try:
        fit = fit_power_law(
            [r.tau_sweeps for r in rows], [r.sweeps for r in rows], tag="pt-heuristic"
        )
    except FitError:
        fit = None
    return rows, fit


def generation_taus(reports: Iterable[HardnessReport]) -> dict[int, float]:
    """Median tau (sweeps) of the resolved instances of every generation."""
    grouped: dict[int, list[float]] = defaultdict(list)
    for report in reports:
        if report.resolved and report.generation is not None:
            grouped[report.generation].append(report.tau)
    return {k: float(np.median(v)) for k, v in sorted(grouped.items())}


def generation_map(reports: Iterable[HardnessReport]) -> dict[str, int | None]:
    """Generation of every instance, None for unresolved or between-bin instances."""
    return {r.instance_id: r.generation if r.resolved else None for r in reports}


def fit_alpha(
    typical: Sequence[TypicalTts], taus: Mapping[int, float], tag: str = "alpha"
) -> ScalingFit:
    """
    Exponent of typical tts against the median tau of each generation.

    Unresolved generations are excluded by the fit as non-finite points.
    """
    pairs = [(taus[t.generation], t.tts_us) for t in typical if t.generation in taus]
    return fit_power_law([x for x, _ in pairs], [y for _, y in pairs], tag=tag)


def records_from_cycles(cycles: Iterable[CycleResult], t_ann_us: float) -> list[AnnealRecord]:
    """Simulated programming cycles as anneal records at a nominal t_ann."""
    return [
        AnnealRecord(
            instance_id=c.instance_id,
            t_ann_us=t_ann_us,
            cycle=c.cycle,
            attempts=c.attempts,
            hits=c.hits,
            source=RecordSource.SIMULATED,
        )
        for c in cycles
    ]
