"""
Tab-Separated Tables - Deterministic, versioned text tables.

Every table starts with `# <name> v1`, optional `# key=value` metadata lines,
then a header row and data rows. Floats carry 9 significant digits, infinite
values print as `inf`, missing values as `NA`.
"""

import math
from collections.abc import Callable, Iterable, Mapping, Sequence
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from pathlib import Path
from typing import Any, TextIO, TypeVar

import numpy as np
import structlog

from src.domain.entities.anneal import (
    AnnealRecord,
    CycleResult,
    GroundStateShift,
    HeuristicRow,
    PercentileReport,
    RecordSource,
    ScalingFit,
    TimeWindow,
    TtsRow,
    TtsSummary,
    TypicalTts,
    WindowBand,
    WindowPercentile,
)
from src.domain.entities.campaign import TauHistogram
from src.domain.entities.exact import ExactResult, StateLabel
from src.domain.entities.hardness import HardnessReport, HardnessStatus, RoundRecord
from src.domain.entities.landscape import (
    ChaosDetection,
    EnergyCurve,
    LandscapeOutcome,
    OverlapDistribution,
    TypicalOverlap,
    ZeroTemperatureEstimate,
)
from src.domain.errors import TableFormatError
from src.infrastructure.adapters.instance_format import format_value

logger = structlog.get_logger(__name__)

T = TypeVar("T")

TABLE_VERSION = "v1"
MISSING = "NA"

HARDNESS_COLUMNS = (
    "id", "tau_sweeps", "tau_sub_sweeps", "residual", "f", "generation", "rounds",
    "status", "tau_error_sweeps", "steps",
)
ANNEAL_COLUMNS = ("instance_id", "t_ann_us", "cycle", "X", "Y", "source")
EXACT_COLUMNS = ("id", "E0", "degeneracy", "solver")
CYCLE_COLUMNS = ("instance_id", "cycle", "gauge_seed", "perturb_seed", "X", "Y", "p")
PERCENTILE_COLUMNS = ("id", "n_cycles", "I50", "I80", "I90", "R89", "I50_error", "I50_notation")
TTS_COLUMNS = ("instance_id", "t_ann_us", "P", "floor", "tts_us")
TYPICAL_TTS_COLUMNS = ("generation", "tau_sweeps", "tts_us", "low_us", "high_us", "instances")
WINDOW_COLUMNS = (
    "generation", "window", "quantile", "p", "t_ann_us", "instances", "below_resolution",
    "resolved",
)
FIT_COLUMNS = ("tag", "exponent", "amplitude", "stderr", "x_min", "x_max", "points", "excluded")
HISTOGRAM_COLUMNS = ("low_sweeps", "high_sweeps", "center_sweeps", "count", "density")
TAIL_COLUMNS = ("tau_sweeps", "fraction_above")
ROUND_COLUMNS = ("round", "steps", "id", "advanced")
CURVE_COLUMNS = ("id", "T", "excess_energy", "error")
EXTRAPOLATION_COLUMNS = ("id", "generation", "extrapolation_error", "t_low", "t_high", "gap")
TC_COLUMNS = ("id", "T_c", "t_low", "t_high", "jump")
OVERLAP_COLUMNS = ("id", "pair", "q_low", "q_high", "mass")
LANDSCAPE_RUN_COLUMNS = (
    "id", "generation", "steps", "gs", "es", "other", "gs_gs_median", "gs_es_median",
    "skipped",
)
TYPICAL_OVERLAP_COLUMNS = ("generation", "gs_gs_median", "gs_es_median", "instances")
SHIFT_COLUMNS = ("id", "delta_j", "trials", "changed", "changed_fraction", "median_overlap")
HEURISTIC_COLUMNS = ("generation", "tau_sweeps", "first_hit_sweeps")


def format_cell(value: Any) -> str:
    """Render one cell deterministically."""
    if value is None:
        return MISSING
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, Enum):
        return str(value.value)
    if isinstance(value, int):
        return str(value)
    if isinstance(value, Fraction):
        return format_value(value)
    if isinstance(value, float):
        if math.isnan(value):
            return MISSING
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return f"{value:.9g}"
    return str(value)


@dataclass(frozen=True, slots=True)
class Table:
    """A parsed table: name, metadata, header and string cells."""

    name: str
    columns: tuple[str, ...]
    rows: tuple[dict[str, str], ...]
    meta: dict[str, str] = field(default_factory=dict)
    lines: tuple[int, ...] = ()

    def require(self, columns: Iterable[str]) -> None:
        """
        Raises:
            TableFormatError: If a required column is missing
        """
        missing = [c for c in columns if c not in self.columns]
        if missing:
            raise TableFormatError(f"table {self.name!r} lacks column {missing[0]!r}", 1)


def render_table(
    name: str,
    columns: Sequence[str],
    rows: Iterable[Sequence[Any]],
    meta: Mapping[str, Any] | None = None,
) -> str:
    lines = [f"# {name} {TABLE_VERSION}"]
    lines.extend(f"# {key}={format_cell(value)}" for key, value in (meta or {}).items())
    lines.append("\t".join(columns))
    for row in rows:
        if len(row) != len(columns):
            raise ValueError(f"row has {len(row)} cells, table {name!r} has {len(columns)} columns")
        lines.append("\t".join(format_cell(v) for v in row))
    return "\n".join(lines) + "\n"


def write_table(
    target: Path | TextIO,
    name: str,
    columns: Sequence[str],
    rows: Iterable[Sequence[Any]],
    meta: Mapping[str, Any] | None = None,
) -> None:
    """Write a table to a path or an open text stream."""
    text = render_table(name, columns, rows, meta)
    if isinstance(target, Path):
        target.parent.mkdir(parents=True, exist_ok=True)
        target.write_text(text, encoding="utf-8")
        logger.debug("Table written", table=name, path=str(target))
    else:
        target.write(text)


def parse_table(text: str) -> Table:
    """
    Parse a table rendered by `render_table`.

    Raises:
        TableFormatError: On a missing version line, a missing header or ragged rows
    """
    raw = text.splitlines()
    if not raw or not raw[0].startswith("# "):
        raise TableFormatError("missing header: expected '# <name> v1'", 1 if raw else None)
    title = raw[0][2:].split()
    if len(title) != 2 or title[1] != TABLE_VERSION:
        raise TableFormatError(f"unsupported table version line {raw[0]!r}", 1)
    meta: dict[str, str] = {}
    columns: tuple[str, ...] | None = None
    rows: list[dict[str, str]] = []
    lines: list[int] = []
    for number, line in enumerate(raw[1:], start=2):
        if not line.strip():
            continue
        if columns is None and line.startswith("#"):
            key, _, value = line[1:].strip().partition("=")
            meta[key.strip()] = value.strip()
            continue
        cells = line.split("\t")
        if columns is None:
            columns = tuple(cells)
            continue
        if len(cells) != len(columns):
            raise TableFormatError(
                f"row has {len(cells)} cells, header has {len(columns)}", number
            )
        rows.append(dict(zip(columns, cells, strict=True)))
        lines.append(number)
    if columns is None:
        raise TableFormatError("missing column header line")
    return Table(name=title[0], columns=columns, rows=tuple(rows), meta=meta, lines=tuple(lines))


def read_table(path: Path) -> Table:
    try:
        return parse_table(Path(path).read_text(encoding="utf-8"))
    except TableFormatError as exc:
        raise exc.located(str(path)) from exc


def load_table(path: Path, convert: Callable[[Table], T]) -> T:
    """
    Read a table and convert its rows, locating any error in the file.

    Raises:
        TableFormatError: Naming the file and, when known, the line
    """
    table = read_table(path)
    try:
        return convert(table)
    except TableFormatError as exc:
        raise exc.located(str(path)) from exc


def _float(cell: str) -> float:
    return float("nan") if cell == MISSING else float(cell)


def _cells(table: Table) -> Iterable[tuple[int, dict[str, str]]]:
    return zip(table.lines, table.rows, strict=True)


def _convert(table: Table, columns: Sequence[str], build: Any) -> list[Any]:
    table.require(columns)
    items = []
    for line, row in _cells(table):
        try:
            items.append(build(row))
        except (ValueError, KeyError) as exc:
            raise TableFormatError(str(exc), line) from exc
    return items


def hardness_rows(reports: Iterable[HardnessReport]) -> list[tuple[Any, ...]]:
    return [
        (
            r.instance_id, r.tau, r.tau_sub, r.residual, r.figure_of_merit,
            r.generation_label, r.rounds, r.status, r.tau_error, r.steps,
        )
        for r in reports
    ]


def hardness_reports(table: Table) -> list[HardnessReport]:
    """Reports from a hardness table."""

    def build(row: dict[str, str]) -> HardnessReport:
        label = row["generation"]
        return HardnessReport(
            instance_id=row["id"],
            status=HardnessStatus(row["status"]),
            tau=_float(row["tau_sweeps"]),
            tau_sub=_float(row["tau_sub_sweeps"]),
            a1=float("nan"),
            a2=float("nan"),
            residual=_float(row["residual"]),
            figure_of_merit=float(row["f"]),
            generation=int(label) if label.lstrip("-").isdigit() else None,
            rounds=int(row["rounds"]),
            steps=int(row["steps"]),
            tau_error=_float(row["tau_error_sweeps"]),
        )

    return _convert(table, HARDNESS_COLUMNS, build)


def anneal_rows(records: Iterable[AnnealRecord]) -> list[tuple[Any, ...]]:
    return [(r.instance_id, r.t_ann_us, r.cycle, r.attempts, r.hits, r.source) for r in records]


def anneal_records(table: Table) -> list[AnnealRecord]:
    """Anneal records, simulated or imported."""

    def build(row: dict[str, str]) -> AnnealRecord:
        return AnnealRecord(
            instance_id=row["instance_id"],
            t_ann_us=float(row["t_ann_us"]),
            cycle=int(row["cycle"]),
            attempts=int(row["X"]),
            hits=int(row["Y"]),
            source=RecordSource(row["source"]),
        )

    return _convert(table, ANNEAL_COLUMNS, build)


def exact_rows(results: Iterable[ExactResult]) -> list[tuple[Any, ...]]:
    return [(r.instance_id, r.e0, r.degeneracy_label, r.solver) for r in results]


def exact_energies(table: Table) -> dict[str, Fraction]:
    """Ground-state energy per instance id."""
    pairs = _convert(table, ("id", "E0"), lambda row: (row["id"], Fraction(row["E0"])))
    return dict(pairs)


def cycle_rows(results: Iterable[CycleResult]) -> list[tuple[Any, ...]]:
    return [
        (r.instance_id, r.cycle, r.gauge_seed, r.perturb_seed, r.attempts, r.hits, r.p)
        for r in results
    ]


def percentile_rows(
    reports: Iterable[PercentileReport], notation: Mapping[str, str]
) -> list[tuple[Any, ...]]:
    return [
        (
            r.instance_id, r.cycles, r.i50, r.i80, r.i90, r.r89, r.i50_error,
            notation.get(r.instance_id, MISSING),
        )
        for r in reports
    ]


def tts_rows(rows: Iterable[TtsRow]) -> list[tuple[Any, ...]]:
    return [(r.instance_id, r.t_ann_us, r.p, r.floor, r.tts_us) for r in rows]


def typical_tts_rows(
    typical: Iterable[TypicalTts], taus: Mapping[int, float]
) -> list[tuple[Any, ...]]:
    return [
        (t.generation, taus.get(t.generation), t.tts_us, t.low_us, t.high_us, t.instances)
        for t in typical
    ]


def window_rows(entries: Iterable[WindowPercentile]) -> list[tuple[Any, ...]]:
    return [
        (
            w.generation, w.window.label, w.quantile, w.value, w.t_ann_us, w.instances,
            w.below_resolution, w.resolved,
        )
        for w in entries
    ]


def _window(label: str) -> TimeWindow:
    decade, _, band = label.partition("-")
    if not decade.startswith("k"):
        raise ValueError(f"invalid window label {label!r}")
    return TimeWindow(decade=int(decade[1:]), band=WindowBand(band))


def window_percentiles(table: Table) -> list[WindowPercentile]:
    """Windowed percentile entries, as written by `window_rows`."""

    def build(row: dict[str, str]) -> WindowPercentile:
        return WindowPercentile(
            generation=int(row["generation"]),
            window=_window(row["window"]),
            quantile=float(row["quantile"]),
            value=_float(row["p"]),
            t_ann_us=float(row["t_ann_us"]),
            instances=int(row["instances"]),
            below_resolution=int(row["below_resolution"]),
            resolved=row["resolved"] == "true",
        )

    return _convert(table, WINDOW_COLUMNS, build)


def fit_rows(fits: Iterable[ScalingFit]) -> list[tuple[Any, ...]]:
    return [
        (f.tag, f.exponent, f.amplitude, f.stderr, f.x_min, f.x_max, f.points, f.excluded)
        for f in fits
    ]


def numeric_column(table: Table, column: str) -> list[float]:
    """A column as floats; NA becomes NaN and `inf` stays infinite."""
    return _convert(table, (column,), lambda row: _float(row[column]))


def histogram_rows(histogram: TauHistogram) -> list[tuple[Any, ...]]:
    edges = histogram.edges
    return [
        (float(edges[i]), float(edges[i + 1]), float(c), int(n), float(d))
        for i, (c, n, d) in enumerate(
            zip(histogram.centers, histogram.counts, histogram.density, strict=True)
        )
    ]


def round_rows(rounds: Iterable[RoundRecord]) -> list[tuple[Any, ...]]:
    """One row per instance simulated in a round; `advanced` marks survivors."""
    rows = []
    for record in rounds:
        advanced = set(record.advanced)
        rows.extend(
            (record.round, record.steps, instance_id, instance_id in advanced)
            for instance_id in record.simulated
        )
    return rows


def curve_rows(instance_id: str, curve: EnergyCurve) -> list[tuple[Any, ...]]:
    return [
        (instance_id, float(t), float(e), float(err))
        for t, e, err in zip(curve.temperatures, curve.excess, curve.errors, strict=True)
    ]


def extrapolation_row(
    instance_id: str, generation: int | None, estimate: ZeroTemperatureEstimate
) -> tuple[Any, ...]:
    return (instance_id, generation, estimate.excess, estimate.t_low, estimate.t_high, estimate.gap)


def tc_rows(instance_id: str, detections: Iterable[ChaosDetection]) -> list[tuple[Any, ...]]:
    return [(instance_id, d.temperature, d.t_low, d.t_high, d.jump) for d in detections]


def overlap_rows(instance_id: str, distribution: OverlapDistribution) -> list[tuple[Any, ...]]:
    """Histogram rows of a distribution; insufficient ones give no rows."""
    if not distribution.sufficient:
        return []
    edges = distribution.bin_edges
    return [
        (instance_id, distribution.pair_type, float(edges[i]), float(edges[i + 1]), mass)
        for i, mass in enumerate(distribution.mass)
    ]


def landscape_run_rows(outcomes: Iterable[LandscapeOutcome]) -> list[tuple[Any, ...]]:
    rows = []
    for o in outcomes:
        counts = dict(o.labels)
        gs_gs = o.overlaps.gs_gs.median if o.overlaps else None
        gs_es = o.overlaps.gs_es.median if o.overlaps else None
        rows.append(
            (
                o.instance_id, o.generation, o.steps,
                counts.get(StateLabel.GS.value), counts.get(StateLabel.ES.value),
                counts.get(StateLabel.OTHER.value), gs_gs, gs_es, o.skipped,
            )
        )
    return rows


def typical_overlap_rows(typical: Iterable[TypicalOverlap]) -> list[tuple[Any, ...]]:
    return [(t.generation, t.gs_gs_median, t.gs_es_median, t.instances) for t in typical]


def shift_rows(shifts: Iterable[GroundStateShift]) -> list[tuple[Any, ...]]:
    return [
        (
            s.instance_id, s.delta_j, s.trials, s.changed, s.changed_fraction,
            float(np.median(s.overlaps)) if s.overlaps else None,
        )
        for s in shifts
    ]


def heuristic_rows(rows: Iterable[HeuristicRow]) -> list[tuple[Any, ...]]:
    return [(r.generation, r.tau_sweeps, r.sweeps) for r in rows]


TableSpec = tuple[str, Sequence[str], Sequence[Sequence[Any]]]


def histogram_meta(histogram: TauHistogram | None) -> dict[str, Any]:
    if histogram is None:
        return {"resolved": 0}
    return {
        "resolved": histogram.resolved,
        "lower_bounds": histogram.bounded,
        "tail_slope": histogram.tail_slope,
        "tail_stderr": histogram.tail_stderr,
    }


def tts_summary_tables(summary: TtsSummary) -> list[TableSpec]:
    """Every table of a tts summary as (name, columns, rows), in file order."""
    taus = dict(summary.generation_taus)
    tables: list[TableSpec] = [
        ("anneal_records", ANNEAL_COLUMNS, anneal_rows(summary.records)),
        ("tts", TTS_COLUMNS, tts_rows(summary.rows)),
        ("typical_tts", TYPICAL_TTS_COLUMNS, typical_tts_rows(summary.typical, taus)),
        ("fits", FIT_COLUMNS, fit_rows(summary.fits)),
        ("heuristic", HEURISTIC_COLUMNS, heuristic_rows(summary.heuristic)),
    ]
    tables.extend(
        (f"windows_q{round(q * 100)}", WINDOW_COLUMNS, window_rows(entries))
        for q, entries in summary.windows
    )
    return tables
