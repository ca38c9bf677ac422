"""
Instance Commands - Generate instances and solve them exactly.
"""

from pathlib import Path

import click
import structlog

from src.application.services.exact import solve_all
from src.application.services.pipeline import derive_seed, stage_key
from src.domain.entities.campaign import Stage
from src.domain.entities.chimera import generate_instance
from src.infrastructure.adapters.campaign_store import INDEX_COLUMNS
from src.infrastructure.adapters.instance_format import write_instance
from src.infrastructure.adapters.solver_factory import SolverKind
from src.infrastructure.adapters.tables import EXACT_COLUMNS, exact_rows
from src.infrastructure.cli.common import (
    INPUT_FILE,
    CliState,
    build_graph,
    emit,
    handle_errors,
    load_instances,
    parse_graph,
    parse_int_list,
    pass_state,
    seed_option,
)
from src.infrastructure.cli.dependencies import get_solver_chooser

logger = structlog.get_logger(__name__)


@click.command("gen")
@click.option(
    "--graph", default="4x4x4", show_default=True, callback=parse_graph,
    help="Chimera shape rows x cols x shore.",
)
@click.option("--count", type=click.IntRange(min=0), default=1, show_default=True,
              help="Number of instances.")
@click.option("--dead", callback=parse_int_list, default="",
              help="Comma-separated dead vertex ids.")
@click.option("--out", "out_dir", type=click.Path(file_okay=False, path_type=Path),
              default=Path("."), show_default=True, help="Directory for the instance files.")
@seed_option()
@pass_state
@handle_errors
def gen(
    state: CliState, graph: str, count: int, dead: tuple[int, ...], out_dir: Path, seed: int
) -> None:
    """Generate random +-J instances, one file each, and print their index.

    Instance i is seeded from (seed, i) exactly as a campaign's generate stage
    seeds it, so `gen` reproduces campaign instances.
    """
    chimera = build_graph(graph, dead)
    rows = []
    for i in range(count):
        instance = generate_instance(chimera, derive_seed(seed, stage_key(Stage.GENERATE), i))
        path = write_instance(out_dir / f"{instance.id}.txt", instance)
        rows.append((instance.id, instance.seed, chimera.label, path.as_posix()))
    logger.info("Instances generated", graph=chimera.label, count=count, out=str(out_dir))
    emit(state, "instances", INDEX_COLUMNS, rows)


@click.command("exact")
@click.option("--in", "inputs", type=INPUT_FILE,
              multiple=True, required=True, help="Instance file; repeat for several.")
@click.option("--solver", type=click.Choice([k.value for k in SolverKind]), default="auto",
              show_default=True, help="Exact solver.")
@click.option("--witness-dir", type=click.Path(file_okay=False, path_type=Path),
              help="Write each instance with its ground-state witness here.")
@pass_state
@handle_errors
def exact(
    state: CliState, inputs: tuple[Path, ...], solver: str, witness_dir: Path | None
) -> None:
    """Exact ground-state energy and degeneracy: one `id E0 degeneracy solver` row each."""
    instances = load_instances(inputs)
    results = solve_all(instances, get_solver_chooser(state.settings, solver))
    if witness_dir is not None:
        for instance, result in zip(instances, results, strict=True):
            write_instance(witness_dir / f"{instance.id}.txt", instance, result.witness)
    emit(state, "exact", EXACT_COLUMNS, exact_rows(results))
