"""
J-Chaos Command - Success-probability spread over simulated programming cycles.
"""

from fractions import Fraction
from pathlib import Path

import click
import structlog

from src.application.services.chaosj import (
    HeuristicBudget,
    JChaosService,
    format_uncertainty,
    gs_shift,
    percentile_report,
)
from src.application.services.exact import solve_all
from src.application.services.pipeline import derive_seed, stage_key
from src.domain.entities.anneal import (
    CycleResult,
    GroundStateShift,
    PercentileReport,
    PerturbationSpec,
)
from src.domain.entities.campaign import Stage
from src.domain.entities.chimera import Instance
from src.domain.errors import InsufficientDataError
from src.infrastructure.adapters.kernel_factory import KernelKind
from src.infrastructure.adapters.solver_factory import SolverKind
from src.infrastructure.adapters.tables import (
    CYCLE_COLUMNS,
    PERCENTILE_COLUMNS,
    SHIFT_COLUMNS,
    cycle_rows,
    exact_energies,
    load_table,
    percentile_rows,
    shift_rows,
)
from src.infrastructure.cli.common import (
    INPUT_FILE,
    CliError,
    CliState,
    emit,
    handle_errors,
    ladder_from,
    load_instances,
    parse_float_list,
    pass_state,
    seed_option,
)
from src.infrastructure.cli.dependencies import get_sampler, get_solver_chooser

logger = structlog.get_logger(__name__)


def _ground_energies(
    state: CliState, instances: list[Instance], exact_table: Path | None, solver: str
) -> dict[str, Fraction]:
    chooser = get_solver_chooser(state.settings, solver)
    if exact_table is None:
        return {r.instance_id: r.e0 for r in solve_all(instances, chooser)}
    energies = load_table(exact_table, exact_energies)
    missing = [inst.id for inst in instances if inst.id not in energies]
    if missing:
        raise CliError(f"{exact_table}: no ground-state energy for {missing[0]!r}")
    return energies


@click.command("jchaos")
@click.option("--in", "inputs", type=INPUT_FILE, multiple=True, required=True,
              help="Instance file; repeat for several.")
@click.option("--exact", "exact_table", type=INPUT_FILE,
              help="Exact table with E0 per instance; solved on the fly otherwise.")
@click.option("--solver", type=click.Choice([k.value for k in SolverKind]), default="auto",
              show_default=True, help="Exact solver when --exact is not given.")
@click.option("--delta-j", type=click.FloatRange(0, 1), default=0.05, show_default=True,
              help="Standard deviation of the coupling noise.")
@click.option("--cycles", type=click.IntRange(min=0), default=20, show_default=True,
              help="Programming cycles per instance.")
@click.option("--attempts", type=click.IntRange(min=1), default=10, show_default=True,
              help="Heuristic solves per cycle.")
@click.option("--attempt-steps", type=click.IntRange(min=1), default=100, show_default=True,
              help="Elementary steps per solve.")
@click.option("--replicas", type=click.IntRange(1, 64), default=1, show_default=True,
              help="Replicas per temperature in each solve.")
@click.option("--sweeps-per-step", type=click.IntRange(min=1), default=10, show_default=True,
              help="Sweeps per elementary step.")
@click.option("--temperatures", callback=parse_float_list, default="",
              help="Comma-separated ladder; the 30-point benchmark ladder otherwise.")
@click.option("--kernel", type=click.Choice([k.value for k in KernelKind]), default="auto",
              show_default=True, help="Sweep kernel.")
@click.option("--shift-trials", type=click.IntRange(min=0), default=0, show_default=True,
              help="Exact re-solves of perturbed couplings per instance.")
@click.option("--cycles-out", type=click.Path(dir_okay=False, path_type=Path),
              help="Write the per-cycle table here.")
@click.option("--shift-out", type=click.Path(dir_okay=False, path_type=Path),
              help="Write the ground-state shift table here.")
@seed_option()
@pass_state
@handle_errors
def jchaos(
    state: CliState,
    inputs: tuple[Path, ...],
    exact_table: Path | None,
    solver: str,
    delta_j: float,
    cycles: int,
    attempts: int,
    attempt_steps: int,
    replicas: int,
    sweeps_per_step: int,
    temperatures: tuple[float, ...],
    kernel: str,
    shift_trials: int,
    cycles_out: Path | None,
    shift_out: Path | None,
    seed: int,
) -> None:
    """Percentiles I50, I80, I90 and R89 of p over programming cycles.

    Instance i is seeded from (seed, i) as in a campaign's jchaos stage.
    """
    instances = load_instances(inputs)
    energies = _ground_energies(state, instances, exact_table, solver)
    budget = HeuristicBudget(
        steps=attempt_steps, sweeps_per_step=sweeps_per_step, replicas=replicas
    )
    service = JChaosService(get_sampler(state.settings, kernel), ladder_from(temperatures), budget)
    spec = PerturbationSpec(delta_j=delta_j)
    chooser = get_solver_chooser(state.settings, solver)

    all_cycles: list[CycleResult] = []
    reports: list[PercentileReport] = []
    notation: dict[str, str] = {}
    shifts: list[GroundStateShift] = []
    for i, instance in enumerate(instances):
        instance_seed = derive_seed(seed, stage_key(Stage.JCHAOS), i)
        results = service.simulate_cycles(
            instance, spec, cycles, attempts, energies[instance.id], instance_seed
        )
        all_cycles.extend(results)
        try:
            report = percentile_report(instance.id, results, seed=instance_seed)
        except InsufficientDataError as exc:
            logger.warning("Percentiles skipped", instance=instance.id, reason=str(exc))
        else:
            reports.append(report)
            notation[instance.id] = format_uncertainty(report.i50, report.i50_error)
        if shift_trials:
            shifts.append(
                gs_shift(
                    instance,
                    spec.with_seed(derive_seed(instance_seed, 0)),
                    shift_trials,
                    chooser(instance),
                )
            )

    if cycles_out is not None:
        emit(state, "cycles", CYCLE_COLUMNS, cycle_rows(all_cycles), out=cycles_out)
    if shift_out is not None:
        emit(state, "gs_shift", SHIFT_COLUMNS, shift_rows(shifts), out=shift_out)
    emit(state, "percentiles", PERCENTILE_COLUMNS, percentile_rows(reports, notation))
