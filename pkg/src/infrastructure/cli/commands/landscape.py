"""
Landscape Commands - Thermal energy curves and ground-state overlap distributions.
"""

import math
from fractions import Fraction
from pathlib import Path
from typing import Any

import click
import structlog

from src.application.services.exact import excitation_gap_states, label_counts
from src.application.services.landscape import (
    LandscapeConfig,
    detect_tc,
    energy_curve,
    extrapolate_zero_T,
    overlap_distributions,
)
from src.domain.entities.exact import StateLabel
from src.domain.errors import InsufficientDataError
from src.infrastructure.adapters.instance_format import read_instance
from src.infrastructure.adapters.tables import (
    CURVE_COLUMNS,
    OVERLAP_COLUMNS,
    TC_COLUMNS,
    curve_rows,
    overlap_rows,
    tc_rows,
)
from src.infrastructure.adapters.trace_dump import read_run
from src.infrastructure.cli.common import (
    INPUT_FILE,
    CliError,
    CliState,
    emit,
    handle_errors,
    parse_energy,
    pass_state,
    seed_option,
)

logger = structlog.get_logger(__name__)


@click.command("landscape")
@click.option("--dump", type=INPUT_FILE, required=True, help="ptdump run of the instance.")
@click.option("--e0", callback=parse_energy, required=True,
              help="Exact ground-state energy (decimal or p/q).")
@click.option("--tau-steps", type=click.FloatRange(min=0), required=True,
              help="Mixing time of the instance in elementary steps.")
@click.option("--burn-in-factor", type=click.FloatRange(min=0), default=3.0, show_default=True,
              help="Discard steps up to this many tau.")
@click.option("--min-length-factor", type=click.FloatRange(min=0), default=10.0,
              show_default=True, help="Reject runs shorter than this many tau.")
@click.option("--blocks", type=click.IntRange(min=2), default=10, show_default=True,
              help="Jackknife blocks.")
@click.option("--gap", type=click.FloatRange(min=0, min_open=True), default=2.0,
              show_default=True, help="Excitation gap of the zero-temperature extrapolation.")
@click.option("--t-low", type=float, default=0.2, show_default=True,
              help="Lower extrapolation anchor temperature.")
@click.option("--t-high", type=float, default=0.3, show_default=True,
              help="Upper extrapolation anchor temperature.")
@click.option("--tc-out", type=click.Path(dir_okay=False, path_type=Path),
              help="Write the temperature-chaos detection table here.")
@pass_state
@handle_errors
def landscape(
    state: CliState,
    dump: Path,
    e0: Fraction,
    tau_steps: float,
    burn_in_factor: float,
    min_length_factor: float,
    blocks: int,
    gap: float,
    t_low: float,
    t_high: float,
    tc_out: Path | None,
) -> None:
    """Excess energy <E>(T) - E0 per ladder temperature, with jackknife errors.

    The table metadata carries the zero-temperature extrapolation error.
    """
    output = read_run(dump)
    settings = LandscapeConfig(
        burn_in_factor=burn_in_factor,
        min_length_factor=min_length_factor,
        blocks=blocks,
        gap=gap,
        t_low=t_low,
        t_high=t_high,
    )
    curve = energy_curve(output, e0, tau_steps, settings)
    meta: dict[str, Any] = {
        "id": output.instance_id,
        "tau_steps": tau_steps,
        "burn_in_steps": curve.burn_in_steps,
        "blocks": curve.blocks,
        "extrapolation_error": None,
    }
    try:
        estimate = extrapolate_zero_T(curve, gap, t_low, t_high)
        meta.update(
            extrapolation_error=estimate.excess, t_low=estimate.t_low, t_high=estimate.t_high
        )
    except InsufficientDataError as exc:
        logger.warning("Extrapolation skipped", instance=output.instance_id, reason=str(exc))
    if tc_out is not None:
        rows = tc_rows(output.instance_id, detect_tc(curve, settings))
        emit(state, "tc", TC_COLUMNS, rows, out=tc_out)
    emit(state, "curve", CURVE_COLUMNS, curve_rows(output.instance_id, curve), meta)


@click.command("overlap")
@click.option("--in", "source", type=INPUT_FILE, required=True, help="Instance file.")
@click.option("--dump", type=INPUT_FILE, required=True,
              help="ptdump run of the instance, written with --store-configs.")
@click.option("--e0", callback=parse_energy, required=True,
              help="Exact ground-state energy (decimal or p/q).")
@click.option("--tau-steps", type=click.FloatRange(min=0), default=0.0, show_default=True,
              help="Mixing time in elementary steps; sets the burn-in.")
@click.option("--burn-in-factor", type=click.FloatRange(min=0), default=3.0, show_default=True,
              help="Use snapshots after this many tau.")
@click.option("--bin-width", type=click.FloatRange(0, 1, min_open=True), default=0.02,
              show_default=True, help="Histogram bin width in |q|.")
@click.option("--pair-samples", type=click.IntRange(min=1), default=100_000, show_default=True,
              help="Pairs drawn when there are more than this many.")
@seed_option()
@pass_state
@handle_errors
def overlap(
    state: CliState,
    source: Path,
    dump: Path,
    e0: Fraction,
    tau_steps: float,
    burn_in_factor: float,
    bin_width: float,
    pair_samples: int,
    seed: int,
) -> None:
    """GS-GS and GS-ES distributions of |q| over stored snapshots."""
    instance = read_instance(source).instance
    output = read_run(dump)
    if output.instance_id != instance.id:
        raise CliError(f"{dump}: run of {output.instance_id!r}, not of {instance.id!r}")
    if output.n_snapshots == 0:
        raise CliError(f"{dump}: no stored configurations; rerun pt with --store-configs")

    burn_in = math.floor(burn_in_factor * tau_steps)
    configs = output.snapshots[output.snapshot_steps >= burn_in].reshape(-1, instance.size)
    labels = excitation_gap_states(instance, configs, e0)
    settings = LandscapeConfig(bin_width=bin_width, pair_samples=pair_samples, seed=seed)
    gs_gs, gs_es = overlap_distributions(configs, labels, settings)
    counts = label_counts(labels)
    meta = {
        "id": instance.id,
        "burn_in_steps": burn_in,
        "gs": counts[StateLabel.GS],
        "es": counts[StateLabel.ES],
        "other": counts[StateLabel.OTHER],
        "gs_gs_median": gs_gs.median if gs_gs.sufficient else None,
        "gs_es_median": gs_es.median if gs_es.sufficient else None,
    }
    rows = overlap_rows(instance.id, gs_gs) + overlap_rows(instance.id, gs_es)
    emit(state, "overlaps", OVERLAP_COLUMNS, rows, meta)
