"""
Sampling Commands - Parallel-tempering runs, mixing times and the tau histogram.
"""

from pathlib import Path

import click
import structlog

from src.application.services.mixing import (
    EscalationConfig,
    HardnessService,
    analyze_run,
    hardness_report,
)
from src.application.services.pipeline import ChunkedSampler, tau_histogram
from src.domain.entities.hardness import HardnessStatus
from src.domain.entities.run import RunConfig
from src.infrastructure.adapters.kernel_factory import KernelKind
from src.infrastructure.adapters.tables import (
    HARDNESS_COLUMNS,
    HISTOGRAM_COLUMNS,
    ROUND_COLUMNS,
    TAIL_COLUMNS,
    hardness_reports,
    hardness_rows,
    histogram_meta,
    histogram_rows,
    load_table,
    round_rows,
)
from src.infrastructure.adapters.trace_dump import read_run, write_run
from src.infrastructure.cli.common import (
    INPUT_FILE,
    CliError,
    CliState,
    emit,
    handle_errors,
    ladder_from,
    load_instances,
    parse_float_list,
    parse_int_list,
    pass_state,
    seed_option,
)
from src.infrastructure.cli.dependencies import (
    get_kernel_factory,
    get_sampler,
    get_worker_setup,
)

logger = structlog.get_logger(__name__)

PT_COLUMNS = (
    "id", "steps", "sweeps", "min_energy", "min_swap_rate", "mean_swap_rate", "dump",
)

KERNELS = click.Choice([k.value for k in KernelKind])


@click.command("pt")
@click.option("--in", "inputs", type=INPUT_FILE, multiple=True, required=True,
              help="Instance file; repeat for several (same-graph instances share a batch).")
@click.option("--steps", type=click.IntRange(min=0), required=True,
              help="Elementary steps (sweeps-per-step sweeps plus one swap round each).")
@click.option("--replicas", type=click.IntRange(1, 64), default=4, show_default=True,
              help="Replicas per temperature.")
@click.option("--sweeps-per-step", type=click.IntRange(min=1), default=10, show_default=True,
              help="Sweeps per elementary step.")
@click.option("--checkpoints", type=click.IntRange(min=1), default=100, show_default=True,
              help="Evenly spaced snapshot points.")
@click.option("--temperatures", callback=parse_float_list, default="",
              help="Comma-separated ladder; the 30-point benchmark ladder otherwise.")
@click.option("--store-configs", is_flag=True, help="Keep spin snapshots in the dumps.")
@click.option("--trace-budget", type=click.IntRange(min=1),
              help="Keep at most this many trace samples per copy; longer runs are decimated.")
@click.option("--check", is_flag=True, help="Verify permutations and energies while running.")
@click.option("--kernel", type=KERNELS, default="auto", show_default=True, help="Sweep kernel.")
@click.option("--dump-dir", type=click.Path(file_okay=False, path_type=Path),
              help="Write one ptdump file per instance here.")
@seed_option()
@pass_state
@handle_errors
def pt(
    state: CliState,
    inputs: tuple[Path, ...],
    steps: int,
    replicas: int,
    sweeps_per_step: int,
    checkpoints: int,
    temperatures: tuple[float, ...],
    store_configs: bool,
    trace_budget: int | None,
    check: bool,
    kernel: str,
    dump_dir: Path | None,
    seed: int,
) -> None:
    """Run parallel tempering and print a per-instance summary."""
    instances = load_instances(inputs)
    config = RunConfig(
        steps=steps,
        seed=seed,
        sweeps_per_step=sweeps_per_step,
        replicas=replicas,
        checkpoints=checkpoints,
        store_configs=store_configs,
        check_invariants=check,
        trace_budget=trace_budget,
    )
    outputs = get_sampler(state.settings, kernel).run(instances, ladder_from(temperatures), config)
    rows = []
    for output in outputs:
        logger.info("Run finished", **output.to_dict())
        dump = None
        if dump_dir is not None:
            dump = write_run(dump_dir / f"{output.instance_id}.ptdump", output).as_posix()
        rates = output.swap_rates
        rows.append(
            (
                output.instance_id,
                output.steps,
                config.total_sweeps,
                output.min_energy,
                float(rates.min()) if rates.size else None,
                float(rates.mean()) if rates.size else None,
                dump,
            )
        )
    emit(state, "pt_runs", PT_COLUMNS, rows)


@click.command("tau")
@click.option("--dump", "dumps", type=INPUT_FILE, multiple=True,
              help="Analyse finished ptdump runs; repeat for several.")
@click.option("--in", "inputs", type=INPUT_FILE, multiple=True,
              help="Run the escalation protocol on instance files; repeat for several.")
@click.option("--round-steps", callback=parse_int_list, default="100000,1000000,10000000",
              show_default=True, help="Steps per escalation round.")
@click.option("--caps", callback=parse_int_list, default="64,16", show_default=True,
              help="Survivors entering each later round.")
@click.option("--resolvability", type=click.FloatRange(min=0, min_open=True), default=10.0,
              show_default=True, help="Trust tau only when steps >= this * tau.")
@click.option("--replicas", type=click.IntRange(1, 64), default=4, show_default=True,
              help="Replicas per temperature.")
@click.option("--sweeps-per-step", type=click.IntRange(min=1), default=10, show_default=True,
              help="Sweeps per elementary step.")
@click.option("--temperatures", callback=parse_float_list, default="",
              help="Comma-separated ladder; the 30-point benchmark ladder otherwise.")
@click.option("--kernel", type=KERNELS, default="auto", show_default=True, help="Sweep kernel.")
@click.option("--jobs", type=click.IntRange(min=1), help="Worker processes [HARDNESS_JOBS].")
@click.option("--chunk-size", type=click.IntRange(min=1), default=64, show_default=True,
              help="Instances per engine batch.")
@click.option("--rounds-out", type=click.Path(dir_okay=False, path_type=Path),
              help="Write the per-round advancement table here.")
@seed_option()
@pass_state
@handle_errors
def tau(
    state: CliState,
    dumps: tuple[Path, ...],
    inputs: tuple[Path, ...],
    round_steps: tuple[int, ...],
    caps: tuple[int, ...],
    resolvability: float,
    replicas: int,
    sweeps_per_step: int,
    temperatures: tuple[float, ...],
    kernel: str,
    jobs: int | None,
    chunk_size: int,
    rounds_out: Path | None,
    seed: int,
) -> None:
    """Mixing time tau per instance, as a hardness table (times in sweeps).

    With --dump each run is taken as a final round: tau is resolved when the
    run is at least resolvability * tau long, and a lower bound otherwise.
    With --in the full escalation protocol runs.
    """
    if bool(dumps) == bool(inputs):
        raise click.UsageError("give either --dump or --in")
    if dumps:
        reports = []
        for path in dumps:
            output = read_run(path)
            analysis = analyze_run(output)
            status = (
                HardnessStatus.RESOLVED
                if analysis.resolvable(resolvability)
                else HardnessStatus.LOWER_BOUND
            )
            reports.append(hardness_report(output.instance_id, analysis, status, 1, resolvability))
        emit(state, "hardness", HARDNESS_COLUMNS, hardness_rows(reports))
        return

    escalation = EscalationConfig(
        round_steps=round_steps,
        survivor_caps=caps,
        resolvability=resolvability,
        sweeps_per_step=sweeps_per_step,
        replicas=replicas,
        seed=seed,
    )
    sampler = ChunkedSampler(
        get_kernel_factory(state.settings, kernel),
        chunk_size,
        jobs or state.settings.jobs,
        get_worker_setup(state.log_level, state.log_format),
    )
    outcome = HardnessService(sampler, escalation).escalate(
        load_instances(inputs), ladder_from(temperatures)
    )
    if rounds_out is not None:
        emit(state, "rounds", ROUND_COLUMNS, round_rows(outcome.rounds), out=rounds_out)
    emit(state, "hardness", HARDNESS_COLUMNS, hardness_rows(outcome.reports))


@click.command("hist")
@click.option("--in", "source", type=INPUT_FILE, required=True, help="Hardness table.")
@click.option("--bins-per-decade", type=click.IntRange(1, 100), default=5, show_default=True,
              help="Logarithmic bins per decade of tau.")
@click.option("--tails-out", type=click.Path(dir_okay=False, path_type=Path),
              help="Write the tail-fraction table here.")
@pass_state
@handle_errors
def hist(state: CliState, source: Path, bins_per_decade: int, tails_out: Path | None) -> None:
    """Log-binned density of resolved tau with its power-law tail slope."""
    reports = load_table(source, hardness_reports)
    if not reports:
        raise CliError(f"{source}: no hardness rows")
    histogram = tau_histogram(reports, bins_per_decade)
    if tails_out is not None:
        emit(state, "tail_fractions", TAIL_COLUMNS, histogram.tail_fractions, out=tails_out)
    logger.info(
        "Tau histogram built",
        resolved=histogram.resolved,
        bins=len(histogram.counts),
    )
    emit(
        state, "tau_histogram", HISTOGRAM_COLUMNS, histogram_rows(histogram),
        histogram_meta(histogram),
    )
