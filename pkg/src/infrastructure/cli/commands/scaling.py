"""
Scaling Commands - Time-to-solution tables and power-law fits.
"""

from pathlib import Path

import click
import structlog

from src.application.services.pipeline import summarize_tts
from src.application.services.ttslab import fit_power_law, fit_theta, tts_table
from src.domain.entities.anneal import AnnealRecord, ScalingFit
from src.infrastructure.adapters.tables import (
    FIT_COLUMNS,
    TTS_COLUMNS,
    TYPICAL_TTS_COLUMNS,
    anneal_records,
    fit_rows,
    hardness_reports,
    load_table,
    numeric_column,
    tts_rows,
    tts_summary_tables,
    typical_tts_rows,
    window_percentiles,
)
from src.infrastructure.cli.common import (
    INPUT_FILE,
    CliError,
    CliState,
    emit,
    handle_errors,
    pass_state,
    seed_option,
)

logger = structlog.get_logger(__name__)

FIT_MODES = ("alpha", "theta", "power")


def _columns(source: Path, x: str, y: str) -> tuple[list[float], list[float]]:
    return load_table(source, lambda table: (numeric_column(table, x), numeric_column(table, y)))


@click.command("tts")
@click.option("--records", "sources", type=INPUT_FILE, multiple=True, required=True,
              help="Anneal record table; repeat to pool several.")
@click.option("--hardness", type=INPUT_FILE,
              help="Hardness table; adds typical tts per generation and the fits.")
@click.option("--out", "out_dir", type=click.Path(file_okay=False, path_type=Path),
              help="Write every tts table into this directory.")
@seed_option()
@pass_state
@handle_errors
def tts(
    state: CliState,
    sources: tuple[Path, ...],
    hardness: Path | None,
    out_dir: Path | None,
    seed: int,
) -> None:
    """Time-to-solution tts = t_ann / P per instance and annealing time (microseconds).

    With --hardness the typical tts per generation is printed instead, and
    --out receives the windowed percentiles and the alpha and theta fits.
    """
    records: list[AnnealRecord] = []
    for source in sources:
        records.extend(load_table(source, anneal_records))
    if hardness is None:
        rows = tts_rows(tts_table(records))
        if out_dir is not None:
            emit(state, "tts", TTS_COLUMNS, rows, out=out_dir / "tts.tsv")
        emit(state, "tts", TTS_COLUMNS, rows)
        return

    summary = summarize_tts(records, load_table(hardness, hardness_reports), seed=seed)
    if out_dir is not None:
        for name, columns, rows in tts_summary_tables(summary):
            emit(state, name, columns, rows, out=out_dir / f"{name}.tsv")
    taus = dict(summary.generation_taus)
    emit(state, "typical_tts", TYPICAL_TTS_COLUMNS, typical_tts_rows(summary.typical, taus))


@click.command("fit")
@click.option("--mode", type=click.Choice(FIT_MODES), required=True,
              help="alpha: typical tts vs tau; theta: p vs t_ann per generation; "
                   "power: any two columns.")
@click.option("--in", "source", type=INPUT_FILE, required=True, help="Input table.")
@click.option("--x", "x_column", help="Abscissa column (power mode).")
@click.option("--y", "y_column", help="Ordinate column (power mode).")
@click.option("--tag", help="Label of the fit row; defaults to the mode.")
@pass_state
@handle_errors
def fit(
    state: CliState,
    mode: str,
    source: Path,
    x_column: str | None,
    y_column: str | None,
    tag: str | None,
) -> None:
    """Log-log least-squares power law y = A x^exponent."""
    fits: list[ScalingFit]
    if mode == "alpha":
        fits = [fit_power_law(*_columns(source, "tau_sweeps", "tts_us"), tag=tag or "alpha")]
    elif mode == "theta":
        fits = list(fit_theta(load_table(source, window_percentiles)).values())
        if not fits:
            raise CliError(f"{source}: no generation has three resolved windows")
    else:
        if not (x_column and y_column):
            raise click.UsageError("power mode needs --x and --y")
        x, y = _columns(source, x_column, y_column)
        fits = [fit_power_law(x, y, tag=tag or f"{y_column}~{x_column}")]
    for result in fits:
        logger.info("Power law fitted", tag=result.tag, exponent=result.exponent)
    emit(state, "fits", FIT_COLUMNS, fit_rows(fits))
