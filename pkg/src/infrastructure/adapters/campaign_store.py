"""
File Campaign Store - Campaign directory with a text manifest.

    <root>/
      manifest.txt       header lines, then one `stage <name> <sha256>` per
                         completed stage and `failed <name> <message>` lines
      config.txt         canonical campaign config
      generate/          instances/<id>.txt, index.tsv
      hardness/          hardness.tsv, rounds.tsv
      histogram/         tau_histogram.tsv, tail_fractions.tsv
      exact/             exact.tsv, witnesses/<id>.txt
      landscape/         runs.tsv, curves.tsv, extrapolation.tsv,
                         extrapolation_by_generation.tsv, tc.tsv, overlaps.tsv,
                         typical_overlap.tsv
      jchaos/            cycles.tsv, percentiles.tsv, gs_shift.tsv
      tts/               anneal_records.tsv, tts.tsv, typical_tts.tsv,
                         windows_q50.tsv, windows_q80.tsv, fits.tsv, heuristic.tsv

A stage hash covers every file under the stage directory (relative path and
bytes, in path order).
"""

import hashlib
import shutil
from collections.abc import Sequence
from fractions import Fraction
from pathlib import Path
from typing import Any

import structlog

from src.domain.entities.anneal import JChaosOutcome, TtsSummary
from src.domain.entities.campaign import Campaign, Stage, StageMarker, TauHistogram
from src.domain.entities.chimera import Instance
from src.domain.entities.exact import ExactResult
from src.domain.entities.hardness import HardnessReport, RoundRecord
from src.domain.entities.landscape import LandscapeOutcome, TypicalOverlap
from src.domain.errors import CampaignError, FormatError
from src.domain.ports.campaign_port import CampaignStorePort
from src.infrastructure.adapters.instance_format import read_instance, write_instance
from src.infrastructure.adapters.tables import (
    CURVE_COLUMNS,
    CYCLE_COLUMNS,
    EXACT_COLUMNS,
    EXTRAPOLATION_COLUMNS,
    HARDNESS_COLUMNS,
    HISTOGRAM_COLUMNS,
    LANDSCAPE_RUN_COLUMNS,
    OVERLAP_COLUMNS,
    PERCENTILE_COLUMNS,
    ROUND_COLUMNS,
    SHIFT_COLUMNS,
    TAIL_COLUMNS,
    TC_COLUMNS,
    TYPICAL_OVERLAP_COLUMNS,
    TableSpec,
    curve_rows,
    cycle_rows,
    exact_energies,
    exact_rows,
    extrapolation_row,
    hardness_reports,
    hardness_rows,
    histogram_meta,
    histogram_rows,
    landscape_run_rows,
    load_table,
    overlap_rows,
    percentile_rows,
    read_table,
    round_rows,
    shift_rows,
    tc_rows,
    tts_summary_tables,
    typical_overlap_rows,
    write_table,
)

logger = structlog.get_logger(__name__)

MANIFEST_HEADER = "# campaign manifest v1"
MANIFEST = "manifest.txt"
CONFIG = "config.txt"
INDEX_COLUMNS = ("id", "seed", "graph", "file")


def _csv(values: Sequence[int]) -> str:
    return ",".join(str(v) for v in values)


def _ints(text: str) -> tuple[int, ...]:
    return tuple(int(v) for v in text.split(",") if v)


class FileCampaignStore(CampaignStorePort):
    """
    Campaign store on the local filesystem.

    All writes happen in the calling process; the manifest is append-only
    after its header.
    """

    def __init__(self, root: Path | str) -> None:
        """
        Initialize the store.

        Args:
            root: Campaign directory, created on `open`
        """
        self.root = Path(root)
        logger.debug("FileCampaignStore initialized", root=str(self.root))

    @property
    def manifest_path(self) -> Path:
        """Path of the campaign manifest."""
        return self.root / MANIFEST

    def stage_dir(self, stage: Stage) -> Path:
        """Directory holding one stage's outputs."""
        return self.root / stage.value

    def _append(self, line: str) -> None:
        with self.manifest_path.open("a", encoding="utf-8") as handle:
            handle.write(line + "\n")

    def _read_manifest(self) -> tuple[Campaign, str]:
        if not self.manifest_path.exists():
            raise CampaignError(f"{self.manifest_path}: no campaign manifest")
        header: dict[str, str] = {}
        markers: list[StageMarker] = []
        failure = None
        lines = self.manifest_path.read_text(encoding="utf-8").splitlines()
        if not lines or lines[0] != MANIFEST_HEADER:
            raise CampaignError(f"{self.manifest_path}:1: expected {MANIFEST_HEADER!r}")
        for number, line in enumerate(lines[1:], start=2):
            key, _, rest = line.partition(" ")
            where = f"{self.manifest_path}:{number}"
            if key == "stage":
                name, _, digest = rest.partition(" ")
                try:
                    markers.append(StageMarker(stage=Stage(name), digest=digest))
                except ValueError as exc:
                    raise CampaignError(f"{where}: unknown stage {name!r}") from exc
                failure = None
            elif key == "failed":
                failure = rest
            elif key in ("campaign", "config", "instances", "seed", "rounds", "caps"):
                header[key] = rest
            elif line.strip():
                raise CampaignError(f"{where}: unknown manifest record {key!r}")
        try:
            campaign = Campaign(
                campaign_id=header["campaign"],
                instance_count=int(header["instances"]),
                round_steps=_ints(header["rounds"]),
                survivor_caps=_ints(header["caps"]),
                seed=int(header["seed"]),
                completed=tuple(markers),
                failure=failure,
            )
        except KeyError as exc:
            raise CampaignError(f"{self.manifest_path}: missing header {exc.args[0]!r}") from exc
        except ValueError as exc:
            raise CampaignError(f"{self.manifest_path}: {exc}") from exc
        return campaign, header.get("config", "")

    def open(self, campaign: Campaign, config_digest: str, config_text: str) -> Campaign:
        if not self.manifest_path.exists():
            self.root.mkdir(parents=True, exist_ok=True)
            (self.root / CONFIG).write_text(config_text, encoding="utf-8")
            self.manifest_path.write_text(
                "\n".join(
                    [
                        MANIFEST_HEADER,
                        f"campaign {campaign.campaign_id}",
                        f"config {config_digest}",
                        f"instances {campaign.instance_count}",
                        f"seed {campaign.seed}",
                        f"rounds {_csv(campaign.round_steps)}",
                        f"caps {_csv(campaign.survivor_caps)}",
                    ]
                )
                + "\n",
                encoding="utf-8",
            )
            logger.info("Campaign created", root=str(self.root), campaign=campaign.campaign_id)
            return campaign
        existing, digest = self._read_manifest()
        if digest != config_digest:
            raise CampaignError(
                f"{self.root}: directory belongs to a campaign with a different config"
            )
        logger.info(
            "Campaign reopened",
            root=str(self.root),
            completed=[m.stage.value for m in existing.completed],
        )
        return existing

    def progress(self) -> Campaign:
        campaign, _ = self._read_manifest()
        return campaign

    def stage_digest(self, stage: Stage) -> str:
        """sha256 over relative paths and contents of the stage's files."""
        digest = hashlib.sha256()
        folder = self.stage_dir(stage)
        if folder.exists():
            for path in sorted(p for p in folder.rglob("*") if p.is_file()):
                digest.update(path.relative_to(folder).as_posix().encode() + b"\0")
                digest.update(path.read_bytes() + b"\0")
        return digest.hexdigest()

    def verify(self, marker: StageMarker) -> None:
        if self.stage_digest(marker.stage) != marker.digest:
            raise CampaignError(
                f"outputs of completed stage {marker.stage.value} changed on disk",
                stage=marker.stage.value,
            )

    def begin(self, stage: Stage) -> None:
        folder = self.stage_dir(stage)
        if folder.exists():
            logger.warning("Discarding partial stage outputs", stage=stage.value)
            shutil.rmtree(folder)
        folder.mkdir(parents=True)

    def complete(self, stage: Stage) -> StageMarker:
        marker = StageMarker(stage=stage, digest=self.stage_digest(stage))
        self._append(f"stage {stage.value} {marker.digest}")
        return marker

    def record_failure(self, stage: Stage, message: str) -> None:
        self._append(f"failed {stage.value} {' '.join(message.split())}")

    def _path(self, stage: Stage, name: str) -> Path:
        return self.stage_dir(stage) / name

    def _instance_file(self, instance_id: str) -> Path:
        return self._path(Stage.GENERATE, "instances") / f"{instance_id}.txt"

    def save_instances(self, instances: Sequence[Instance]) -> None:
        rows = []
        for inst in instances:
            path = write_instance(self._instance_file(inst.id), inst)
            relative = path.relative_to(self.root).as_posix()
            rows.append((inst.id, inst.seed, inst.graph.label, relative))
        write_table(self._path(Stage.GENERATE, "index.tsv"), "instances", INDEX_COLUMNS, rows)

    def load_instances(self) -> list[Instance]:
        table = read_table(self._path(Stage.GENERATE, "index.tsv"))
        table.require(INDEX_COLUMNS)
        instances = []
        for line, row in zip(table.lines, table.rows, strict=True):
            path = self.root / row["file"]
            try:
                instance = read_instance(path).instance
            except FileNotFoundError as exc:
                raise CampaignError(
                    f"index.tsv:{line}: instance file {row['file']} is missing",
                    stage=Stage.GENERATE.value,
                ) from exc
            except FormatError as exc:
                raise CampaignError(str(exc), stage=Stage.GENERATE.value, cause=exc) from exc
            if instance.id != row["id"]:
                raise CampaignError(
                    f"index.tsv:{line}: {row['file']} holds instance {instance.id!r}",
                    stage=Stage.GENERATE.value,
                )
            instances.append(instance)
        return instances

    def save_hardness(
        self, reports: Sequence[HardnessReport], rounds: Sequence[RoundRecord]
    ) -> None:
        write_table(
            self._path(Stage.HARDNESS, "hardness.tsv"),
            "hardness", HARDNESS_COLUMNS, hardness_rows(reports),
        )
        write_table(
            self._path(Stage.HARDNESS, "rounds.tsv"), "rounds", ROUND_COLUMNS, round_rows(rounds)
        )

    def load_hardness(self) -> list[HardnessReport]:
        return load_table(self._path(Stage.HARDNESS, "hardness.tsv"), hardness_reports)

    def save_histogram(self, histogram: TauHistogram | None) -> None:
        bins: list[tuple[Any, ...]] = []
        tails: list[tuple[float, float]] = []
        if histogram is not None:
            bins, tails = histogram_rows(histogram), list(histogram.tail_fractions)
        write_table(
            self._path(Stage.HISTOGRAM, "tau_histogram.tsv"),
            "tau_histogram", HISTOGRAM_COLUMNS, bins, histogram_meta(histogram),
        )
        write_table(
            self._path(Stage.HISTOGRAM, "tail_fractions.tsv"), "tail_fractions", TAIL_COLUMNS, tails
        )

    def save_exact(self, results: Sequence[ExactResult]) -> None:
        write_table(
            self._path(Stage.EXACT, "exact.tsv"), "exact", EXACT_COLUMNS, exact_rows(results)
        )
        for result in results:
            instance = read_instance(self._instance_file(result.instance_id)).instance
            write_instance(
                self._path(Stage.EXACT, "witnesses") / f"{result.instance_id}.txt",
                instance,
                result.witness,
            )

    def load_exact(self) -> dict[str, Fraction]:
        return load_table(self._path(Stage.EXACT, "exact.tsv"), exact_energies)

    def save_landscape(
        self,
        outcomes: Sequence[LandscapeOutcome],
        typical: Sequence[TypicalOverlap],
        extrapolation: dict[int, float],
    ) -> None:
        curves: list[tuple[Any, ...]] = []
        estimates: list[tuple[Any, ...]] = []
        jumps: list[tuple[Any, ...]] = []
        overlaps: list[tuple[Any, ...]] = []
        for o in outcomes:
            if o.curve is not None:
                curves.extend(curve_rows(o.instance_id, o.curve))
                jumps.extend(tc_rows(o.instance_id, o.detections))
            if o.estimate is not None:
                estimates.append(extrapolation_row(o.instance_id, o.generation, o.estimate))
            if o.overlaps is not None:
                overlaps.extend(overlap_rows(o.instance_id, o.overlaps.gs_gs))
                overlaps.extend(overlap_rows(o.instance_id, o.overlaps.gs_es))
        tables: list[TableSpec] = [
            ("runs", LANDSCAPE_RUN_COLUMNS, landscape_run_rows(outcomes)),
            ("curves", CURVE_COLUMNS, curves),
            ("extrapolation", EXTRAPOLATION_COLUMNS, estimates),
            (
                "extrapolation_by_generation",
                ("generation", "median_extrapolation_error"),
                sorted(extrapolation.items()),
            ),
            ("tc", TC_COLUMNS, jumps),
            ("overlaps", OVERLAP_COLUMNS, overlaps),
            ("typical_overlap", TYPICAL_OVERLAP_COLUMNS, typical_overlap_rows(typical)),
        ]
        for name, columns, rows in tables:
            write_table(self._path(Stage.LANDSCAPE, f"{name}.tsv"), name, columns, rows)

    def save_jchaos(self, outcomes: Sequence[JChaosOutcome]) -> None:
        write_table(
            self._path(Stage.JCHAOS, "cycles.tsv"),
            "cycles", CYCLE_COLUMNS, cycle_rows(c for o in outcomes for c in o.cycles),
        )
        reports = [o.report for o in outcomes if o.report is not None]
        notation = {o.instance_id: o.median_notation for o in outcomes}
        write_table(
            self._path(Stage.JCHAOS, "percentiles.tsv"),
            "percentiles", PERCENTILE_COLUMNS, percentile_rows(reports, notation),
        )
        write_table(
            self._path(Stage.JCHAOS, "gs_shift.tsv"),
            "gs_shift", SHIFT_COLUMNS, shift_rows(o.shift for o in outcomes if o.shift is not None),
        )

    def save_tts(self, summary: TtsSummary) -> None:
        for name, columns, rows in tts_summary_tables(summary):
            write_table(self._path(Stage.TTS, f"{name}.tsv"), name, columns, rows)
        logger.info(
            "TTS tables written", records=len(summary.records), fits=len(summary.fits)
        )
