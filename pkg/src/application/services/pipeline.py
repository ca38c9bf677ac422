"""
Pipeline Service - End-to-end campaign runner.

Stages run in a fixed order: generate, hardness, histogram, exact, landscape,
jchaos, tts. Every stage reads its inputs back through the campaign store and
writes its outputs through it, so a resumed campaign computes from exactly the
bytes an uninterrupted one would have seen. Instance-level work inside a stage
runs on a bounded joblib worker pool; results come back in input order and are
written by the calling process only.
"""

import math
from collections.abc import Callable, Iterable, Mapping, Sequence
from dataclasses import dataclass, replace
from fractions import Fraction
from functools import partial
from typing import TypeVar

import numpy as np
import structlog
from joblib import Parallel, delayed

from src.application.services.campaign_config import CampaignConfig, render_campaign_config
from src.application.services.chaosj import (
    HeuristicBudget,
    JChaosService,
    format_uncertainty,
    gs_shift,
    percentile_report,
)
from src.application.services.engine import ParallelTemperingService
from src.application.services.exact import excitation_gap_states, label_counts, solve_all
from src.application.services.landscape import (
    LandscapeConfig,
    detect_tc,
    energy_curve,
    extrapolate_zero_T,
    overlap_distributions,
    typical_extrapolation_error,
    typical_overlap,
)
from src.application.services.mixing import HardnessService
from src.application.services.ttslab import (
    fit_alpha,
    fit_power_law,
    fit_theta,
    generation_map,
    generation_taus,
    heuristic_scaling,
    percentile_by_generation,
    records_from_cycles,
    tts_table,
    typical_tts_by_generation,
)
from src.domain.entities.anneal import (
    AnnealRecord,
    HeuristicRow,
    JChaosOutcome,
    PerturbationSpec,
    ScalingFit,
    TtsSummary,
)
from src.domain.entities.campaign import Campaign, Stage, TauHistogram
from src.domain.entities.chimera import Instance, generate_instance
from src.domain.entities.exact import ExactResult
from src.domain.entities.hardness import HardnessReport, HardnessStatus
from src.domain.entities.landscape import LandscapeOutcome, OverlapPair
from src.domain.entities.run import HeuristicResult, RunConfig, RunOutput, TemperatureLadder
from src.domain.errors import CampaignError, FitError, InsufficientDataError
from src.domain.ports.campaign_port import CampaignStorePort
from src.domain.ports.engine_port import KernelFactoryPort, SamplerPort
from src.domain.ports.exact_port import ExactSolverError, GroundStateSolver, InstanceTooLargeError

logger = structlog.get_logger(__name__)

WINDOW_QUANTILES = (0.5, 0.8)
LANDSCAPE_CHECKPOINTS = 100

ItemT = TypeVar("ItemT")
ResultT = TypeVar("ResultT")


def derive_seed(seed: int, *key: int) -> int:
    """Independent 64-bit seed for a key (stage, item, ...) under a master seed."""
    word = np.random.SeedSequence(seed, spawn_key=key).generate_state(1, dtype=np.uint64)[0]
    return int(word)


def stage_key(stage: Stage) -> int:
    return Stage.ordered().index(stage)


def _in_worker(
    setup: Callable[[], None] | None, fn: Callable[[ItemT], ResultT], item: ItemT
) -> ResultT:
    if setup is not None:
        setup()
    return fn(item)


def parallel_map(
    fn: Callable[[ItemT], ResultT],
    items: Sequence[ItemT],
    jobs: int = 1,
    worker_setup: Callable[[], None] | None = None,
) -> list[ResultT]:
    """
    Apply fn to every item on at most `jobs` worker processes.

    Args:
        fn: Picklable callable
        items: Work items
        jobs: Worker bound; 1 runs in the calling process
        worker_setup: Called in each worker before fn (e.g. logging setup)

    Returns:
        Results in input order
    """
    if jobs <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    pool = Parallel(n_jobs=min(jobs, len(items)))
    return list(pool(delayed(_in_worker)(worker_setup, fn, item) for item in items))


def tau_histogram(reports: Iterable[HardnessReport], bins_per_decade: int = 5) -> TauHistogram:
    """
    Log-binned density of resolved mixing times with a power-law tail fit.

    Bin edges sit on a grid of `bins_per_decade` per decade and cover the
    smallest to the largest resolved tau; the density integrates to one over
    tau. The tail exponent is fitted through the occupied bins whose center is
    at or above the median tau. Lower-bound reports are counted, not binned.

    Raises:
        InsufficientDataError: Without any resolved report
    """
    if bins_per_decade < 1:
        raise ValueError("bins_per_decade must be at least 1")
    reports = list(reports)
    taus = np.asarray([r.tau for r in reports if r.resolved], dtype=float)
    bounded = sum(r.status is HardnessStatus.LOWER_BOUND for r in reports)
    if taus.size == 0:
        raise InsufficientDataError("tau histogram needs at least one resolved report")

    logs = np.log10(taus)
    lo = math.floor(logs.min() * bins_per_decade) / bins_per_decade
    hi = math.ceil(logs.max() * bins_per_decade) / bins_per_decade
    if hi <= lo:
        hi = lo + 1 / bins_per_decade
    edges = np.logspace(lo, hi, round((hi - lo) * bins_per_decade) + 1)
    edges[0] = min(edges[0], taus.min())
    edges[-1] = max(edges[-1], taus.max())
    counts, _ = np.histogram(taus, bins=edges)
    density = counts / (taus.size * np.diff(edges))

    centers = np.sqrt(edges[:-1] * edges[1:])
    tail = (centers >= np.median(taus)) & (counts > 0)
    slope: float | None = None
    stderr: float | None = None
    try:
        fit = fit_power_law(centers[tail], density[tail], tag="tau-tail")
        slope, stderr = fit.exponent, fit.stderr
    except FitError as exc:
        logger.warning("Tail fit skipped", reason=str(exc))

    decades = range(math.floor(logs.min()), math.ceil(logs.max()) + 1)
    fractions = tuple((10.0**k, float(np.mean(taus > 10.0**k))) for k in decades)
    return TauHistogram(
        edges=edges,
        counts=counts.astype(np.int64),
        density=density,
        tail_slope=slope,
        tail_stderr=stderr,
        tail_fractions=fractions,
        resolved=int(taus.size),
        bounded=bounded,
    )


def _run_chunk(
    kernel_factory: KernelFactoryPort,
    ladder: TemperatureLadder,
    task: tuple[RunConfig, list[Instance]],
) -> list[RunOutput]:
    config, chunk = task
    return ParallelTemperingService(kernel_factory).run(chunk, ladder, config)


def _solve_chunk(
    kernel_factory: KernelFactoryPort,
    ladder: TemperatureLadder,
    task: tuple[RunConfig, list[Instance], list[float] | None],
) -> list[HeuristicResult]:
    config, chunk, targets = task
    return ParallelTemperingService(kernel_factory).solve_batch(chunk, ladder, config, targets)


class ChunkedSampler(SamplerPort):
    """
    Sampler splitting batches into fixed-size chunks spread over workers.

    Chunk c runs with a seed derived from (run seed, c), so outputs depend on
    the chunk size but never on the number of workers.
    """

    def __init__(
        self,
        kernel_factory: KernelFactoryPort,
        chunk_size: int = 64,
        jobs: int = 1,
        worker_setup: Callable[[], None] | None = None,
    ):
        if chunk_size < 1:
            raise ValueError("chunk_size must be at least 1")
        self.kernel_factory = kernel_factory
        self.chunk_size = chunk_size
        self.jobs = jobs
        self.worker_setup = worker_setup

    def _chunks(self, count: int) -> list[slice]:
        return [slice(i, i + self.chunk_size) for i in range(0, count, self.chunk_size)]

    def run(
        self,
        instances: Sequence[Instance],
        ladder: TemperatureLadder,
        config: RunConfig,
    ) -> list[RunOutput]:
        tasks = [
            (replace(config, seed=derive_seed(config.seed, c)), list(instances[part]))
            for c, part in enumerate(self._chunks(len(instances)))
        ]
        logger.debug("Chunked run", instances=len(instances), chunks=len(tasks), jobs=self.jobs)
        done = parallel_map(
            partial(_run_chunk, self.kernel_factory, ladder), tasks, self.jobs, self.worker_setup
        )
        return [output for chunk in done for output in chunk]

    def solve_batch(
        self,
        instances: Sequence[Instance],
        ladder: TemperatureLadder,
        config: RunConfig,
        targets: Sequence[float] | None = None,
    ) -> list[HeuristicResult]:
        if targets is not None and len(targets) != len(instances):
            raise ValueError("one target energy per instance is required")
        tasks = [
            (
                replace(config, seed=derive_seed(config.seed, c)),
                list(instances[part]),
                None if targets is None else list(targets[part]),
            )
            for c, part in enumerate(self._chunks(len(instances)))
        ]
        done = parallel_map(
            partial(_solve_chunk, self.kernel_factory, ladder), tasks, self.jobs, self.worker_setup
        )
        return [result for chunk in done for result in chunk]


@dataclass(frozen=True)
class WorkerContext:
    """Everything a worker needs besides its work item."""

    kernel_factory: KernelFactoryPort
    ladder: TemperatureLadder
    config: CampaignConfig
    solver_for: Callable[[Instance], GroundStateSolver]


@dataclass(frozen=True, slots=True)
class InstanceJob:
    """One instance with its ground-state energy and derived seed."""

    instance: Instance
    e0: Fraction
    seed: int
    steps: int = 0
    tau_steps: float = math.nan
    generation: int | None = None


def landscape_steps(tau_steps: float, factor: float, minimum: int) -> int:
    """Equilibrium run length: factor * tau, at least `minimum`, whole checkpoints."""
    steps = max(minimum, math.ceil(factor * tau_steps))
    return -(-steps // LANDSCAPE_CHECKPOINTS) * LANDSCAPE_CHECKPOINTS


def _exact_task(context: WorkerContext, instance: Instance) -> ExactResult | None:
    try:
        return solve_all([instance], context.solver_for)[0]
    except InstanceTooLargeError as exc:
        logger.warning("Exact solve skipped", instance=instance.id, reason=str(exc))
        return None


def _landscape_task(context: WorkerContext, job: InstanceJob) -> LandscapeOutcome:
    cfg = context.config
    outcome = LandscapeOutcome(
        instance_id=job.instance.id, generation=job.generation, steps=job.steps
    )
    if job.steps > cfg.landscape_max_steps:
        logger.warning("Landscape run skipped", instance=job.instance.id, steps=job.steps)
        return replace(outcome, skipped=f"needs {job.steps} steps, limit {cfg.landscape_max_steps}")

    run_config = RunConfig(
        steps=job.steps,
        seed=job.seed,
        sweeps_per_step=cfg.sweeps_per_step,
        replicas=cfg.replicas,
        checkpoints=LANDSCAPE_CHECKPOINTS,
        store_configs=True,
        trace_budget=cfg.trace_budget,
    )
    output = ParallelTemperingService(context.kernel_factory).run(
        [job.instance], context.ladder, run_config
    )[0]
    settings = LandscapeConfig(seed=job.seed)
    try:
        curve = energy_curve(output, job.e0, job.tau_steps, settings)
    except InsufficientDataError as exc:
        logger.warning("Energy curve skipped", instance=job.instance.id, reason=str(exc))
        return replace(outcome, skipped=str(exc))
    try:
        estimate = extrapolate_zero_T(curve, settings.gap, settings.t_low, settings.t_high)
    except InsufficientDataError as exc:
        logger.warning("Extrapolation skipped", instance=job.instance.id, reason=str(exc))
        estimate = None

    equilibrated = output.snapshot_steps >= curve.burn_in_steps
    configs = output.snapshots[equilibrated].reshape(-1, job.instance.size)
    labels = excitation_gap_states(job.instance, configs, job.e0)
    gs_gs, gs_es = overlap_distributions(configs, labels, settings)
    return replace(
        outcome,
        curve=curve,
        estimate=estimate,
        detections=tuple(detect_tc(curve, settings)),
        overlaps=OverlapPair(instance_id=job.instance.id, gs_gs=gs_gs, gs_es=gs_es),
        labels=tuple((label.value, count) for label, count in label_counts(labels).items()),
    )


def _chaos_service(context: WorkerContext, steps: int) -> JChaosService:
    cfg = context.config
    budget = HeuristicBudget(
        steps=steps, sweeps_per_step=cfg.sweeps_per_step, replicas=cfg.attempt_replicas
    )
    return JChaosService(ParallelTemperingService(context.kernel_factory), context.ladder, budget)


def _jchaos_task(context: WorkerContext, job: InstanceJob) -> JChaosOutcome:
    cfg = context.config
    spec = PerturbationSpec(delta_j=cfg.delta_j)
    cycles = _chaos_service(context, cfg.attempt_steps).simulate_cycles(
        job.instance, spec, cfg.cycles, cfg.attempts, job.e0, job.seed
    )
    report = None
    notation = "NA"
    try:
        report = percentile_report(job.instance.id, cycles, seed=job.seed)
        notation = format_uncertainty(report.i50, report.i50_error)
    except InsufficientDataError as exc:
        logger.warning("Percentiles skipped", instance=job.instance.id, reason=str(exc))

    shift = None
    if cfg.shift_trials:
        try:
            shift = gs_shift(
                job.instance,
                spec.with_seed(derive_seed(job.seed, 0)),
                cfg.shift_trials,
                context.solver_for(job.instance),
            )
        except ExactSolverError as exc:
            logger.warning("Ground-state shift skipped", instance=job.instance.id, reason=str(exc))
    return JChaosOutcome(
        instance_id=job.instance.id,
        cycles=tuple(cycles),
        report=report,
        median_notation=notation,
        shift=shift,
    )


def _anneal_task(context: WorkerContext, job: InstanceJob) -> list[AnnealRecord]:
    cfg = context.config
    cycles = _chaos_service(context, job.steps).simulate_cycles(
        job.instance, PerturbationSpec(delta_j=cfg.delta_j), cfg.tts_cycles, cfg.attempts,
        job.e0, job.seed,
    )
    return records_from_cycles(cycles, t_ann_us=job.steps * cfg.sweeps_per_step * cfg.us_per_sweep)


def _heuristic_task(context: WorkerContext, job: InstanceJob) -> int | None:
    cfg = context.config
    result = ParallelTemperingService(context.kernel_factory).run_heuristic(
        job.instance,
        context.ladder,
        float(job.e0),
        cfg.heuristic_steps,
        job.seed,
        sweeps_per_step=cfg.sweeps_per_step,
        replicas=cfg.replicas,
    )
    return result.first_hit_sweeps


def summarize_tts(
    records: Sequence[AnnealRecord],
    reports: Sequence[HardnessReport],
    first_hits: Mapping[str, int | None] | None = None,
    seed: int = 0,
) -> TtsSummary:
    """
    Every tts table of a campaign from its anneal records and hardness reports.

    Args:
        records: Simulated and imported anneal records
        reports: Hardness reports giving each instance its generation
        first_hits: First-hit sweeps of heuristic PT per instance, if measured
        seed: Seed of the bootstrap over instances
    """
    generations = generation_map(reports)
    taus = generation_taus(reports)
    rows = tts_table(records)
    typical = typical_tts_by_generation(rows, generations, seed=seed)
    windows = tuple(
        (q, tuple(percentile_by_generation(records, generations, q))) for q in WINDOW_QUANTILES
    )

    fits: list[ScalingFit] = []
    try:
        fits.append(fit_alpha(typical, taus))
    except FitError as exc:
        logger.warning("alpha fit skipped", reason=str(exc))
    for _, entries in windows:
        fits.extend(fit_theta(entries).values())

    heuristic: list[HeuristicRow] = []
    if first_hits:
        resolved = {r.instance_id: r.tau for r in reports if r.resolved}
        heuristic, fit = heuristic_scaling(first_hits, resolved, generations)
        if fit is not None:
            fits.append(fit)
    return TtsSummary(
        records=tuple(records),
        rows=tuple(rows),
        typical=tuple(typical),
        generation_taus=tuple(taus.items()),
        windows=windows,
        fits=tuple(fits),
        heuristic=tuple(heuristic),
    )


class CampaignRunner:
    """
    Runs the campaign stages in order, skipping stages already completed.

    A stage that raises has its failure recorded in the manifest and is rerun
    from scratch on the next invocation.
    """

    def __init__(
        self,
        config: CampaignConfig,
        store: CampaignStorePort,
        kernel_factory: KernelFactoryPort,
        solver_for: Callable[[Instance], GroundStateSolver],
        imported_records: Sequence[AnnealRecord] = (),
        worker_setup: Callable[[], None] | None = None,
    ):
        """
        Initialize the runner.

        Args:
            config: Validated campaign config
            store: Campaign directory
            kernel_factory: Sweep kernels for every PT run
            solver_for: Exact solver per instance; must be picklable for jobs > 1
            imported_records: Anneal records added to the simulated ones
            worker_setup: Called in each worker process before it runs work
        """
        self.config = config
        self.store = store
        self.kernel_factory = kernel_factory
        self.imported_records = tuple(imported_records)
        self.worker_setup = worker_setup
        self.context = WorkerContext(
            kernel_factory=kernel_factory,
            ladder=config.ladder(),
            config=config,
            solver_for=solver_for,
        )
        self._stages: dict[Stage, Callable[[], None]] = {
            Stage.GENERATE: self._generate,
            Stage.HARDNESS: self._hardness,
            Stage.HISTOGRAM: self._histogram,
            Stage.EXACT: self._exact,
            Stage.LANDSCAPE: self._landscape,
            Stage.JCHAOS: self._jchaos,
            Stage.TTS: self._tts,
        }
        logger.info("CampaignRunner initialized", campaign=config.campaign_id, jobs=config.jobs)

    def describe(self) -> Campaign:
        cfg = self.config
        return Campaign(
            campaign_id=cfg.campaign_id,
            instance_count=cfg.instances,
            round_steps=cfg.round_steps,
            survivor_caps=cfg.survivor_caps,
            seed=cfg.seed,
        )

    def run(self) -> Campaign:
        """
        Run every stage that is not yet complete.

        Returns:
            The campaign with all stages completed

        Raises:
            CampaignError: If the directory belongs to another config, a
                completed stage's outputs changed, or a stage failed
        """
        campaign = self.store.open(
            self.describe(), self.config.digest(), render_campaign_config(self.config)
        )
        for stage in Stage.ordered():
            marker = next((m for m in campaign.completed if m.stage is stage), None)
            if marker is not None:
                self.store.verify(marker)
                logger.info("Stage current, skipped", stage=stage.value)
                continue
            logger.info("Stage started", stage=stage.value)
            self.store.begin(stage)
            try:
                self._stages[stage]()
            except Exception as exc:
                message = " ".join(f"{type(exc).__name__}: {exc}".split())
                self.store.record_failure(stage, message)
                logger.error("Stage failed", stage=stage.value, error=message)
                raise CampaignError(
                    f"stage {stage.value} failed: {message}", stage=stage.value, cause=exc
                ) from exc
            marker = self.store.complete(stage)
            campaign = campaign.with_stage(marker)
            logger.info("Stage completed", stage=stage.value, digest=marker.digest[:12])
        return campaign

    def _map(
        self, fn: Callable[[WorkerContext, ItemT], ResultT], items: Sequence[ItemT]
    ) -> list[ResultT]:
        return parallel_map(partial(fn, self.context), items, self.config.jobs, self.worker_setup)

    def _seed(self, stage: Stage, *key: int) -> int:
        return derive_seed(self.config.seed, stage_key(stage), *key)

    def _solved(self) -> tuple[list[tuple[int, Instance]], dict[str, Fraction]]:
        energies = self.store.load_exact()
        instances = self.store.load_instances()
        return [(i, inst) for i, inst in enumerate(instances) if inst.id in energies], energies

    def _generate(self) -> None:
        graph = self.config.build_graph()
        instances = [
            generate_instance(graph, self._seed(Stage.GENERATE, i))
            for i in range(self.config.instances)
        ]
        self.store.save_instances(instances)
        logger.info("Instances generated", graph=graph.label, count=len(instances))

    def _hardness(self) -> None:
        instances = self.store.load_instances()
        sampler = ChunkedSampler(
            self.kernel_factory, self.config.chunk_size, self.config.jobs, self.worker_setup
        )
        outcome = HardnessService(sampler, self.config.escalation()).escalate(
            instances, self.context.ladder
        )
        self.store.save_hardness(outcome.reports, outcome.rounds)

    def _histogram(self) -> None:
        reports = self.store.load_hardness()
        histogram = None
        try:
            histogram = tau_histogram(reports, self.config.bins_per_decade)
        except InsufficientDataError as exc:
            logger.warning("Tau histogram empty", reason=str(exc))
        self.store.save_histogram(histogram)

    def _exact(self) -> None:
        results = self._map(_exact_task, self.store.load_instances())
        self.store.save_exact([r for r in results if r is not None])

    def _landscape(self) -> None:
        cfg = self.config
        solved, energies = self._solved()
        reports = {r.instance_id: r for r in self.store.load_hardness()}
        jobs = []
        for index, inst in solved:
            report = reports.get(inst.id)
            if report is None or not report.resolved:
                continue
            tau_steps = report.tau / cfg.sweeps_per_step
            jobs.append(
                InstanceJob(
                    instance=inst,
                    e0=energies[inst.id],
                    seed=self._seed(Stage.LANDSCAPE, index),
                    steps=landscape_steps(tau_steps, cfg.landscape_factor, cfg.landscape_min_steps),
                    tau_steps=tau_steps,
                    generation=report.generation,
                )
            )
        outcomes = self._map(_landscape_task, jobs)
        generations = generation_map(reports.values())
        typical = typical_overlap(
            [o.overlaps for o in outcomes if o.overlaps is not None], generations
        )
        extrapolation = typical_extrapolation_error(
            {o.instance_id: o.estimate for o in outcomes if o.estimate is not None}, generations
        )
        self.store.save_landscape(outcomes, typical, extrapolation)

    def _jchaos(self) -> None:
        solved, energies = self._solved()
        jobs = [
            InstanceJob(instance=inst, e0=energies[inst.id], seed=self._seed(Stage.JCHAOS, i))
            for i, inst in solved
        ]
        self.store.save_jchaos(self._map(_jchaos_task, jobs))

    def _tts(self) -> None:
        cfg = self.config
        solved, energies = self._solved()
        reports = self.store.load_hardness()
        anneal_jobs = [
            InstanceJob(
                instance=inst,
                e0=energies[inst.id],
                seed=self._seed(Stage.TTS, i, b),
                steps=steps,
            )
            for b, steps in enumerate(cfg.tts_steps)
            for i, inst in solved
        ]
        records = [r for batch in self._map(_anneal_task, anneal_jobs) for r in batch]
        records.extend(self.imported_records)

        first_hits = None
        if cfg.heuristic_steps:
            resolved = {r.instance_id for r in reports if r.resolved}
            heuristic_jobs = [
                InstanceJob(instance=inst, e0=energies[inst.id], seed=self._seed(Stage.TTS, i))
                for i, inst in solved
                if inst.id in resolved
            ]
            hits = self._map(_heuristic_task, heuristic_jobs)
            first_hits = {
                job.instance.id: hit for job, hit in zip(heuristic_jobs, hits, strict=True)
            }
        summary = summarize_tts(records, reports, first_hits, seed=self._seed(Stage.TTS))
        self.store.save_tts(summary)


def run_campaign(
    config: CampaignConfig,
    store: CampaignStorePort,
    kernel_factory: KernelFactoryPort,
    solver_for: Callable[[Instance], GroundStateSolver],
    imported_records: Sequence[AnnealRecord] = (),
    worker_setup: Callable[[], None] | None = None,
) -> Campaign:
    """Run or resume a campaign; see CampaignRunner."""
    runner = CampaignRunner(
        config, store, kernel_factory, solver_for, imported_records, worker_setup
    )
    return runner.run()
