"""
Campaign Command - Run, resume or inspect an end-to-end campaign.
"""

from pathlib import Path
from typing import Any

import click
import structlog

from src.application.services.campaign_config import CampaignConfig, load_campaign_config
from src.application.services.pipeline import run_campaign
from src.domain.entities.anneal import AnnealRecord
from src.domain.entities.campaign import Campaign, Stage
from src.infrastructure.adapters.campaign_store import CONFIG
from src.infrastructure.adapters.tables import anneal_records, load_table
from src.infrastructure.cli.common import (
    INPUT_FILE,
    CliError,
    CliState,
    emit,
    handle_errors,
    pass_state,
)
from src.infrastructure.cli.dependencies import (
    Settings,
    get_campaign_store,
    get_kernel_factory,
    get_solver_chooser,
    get_worker_setup,
)

logger = structlog.get_logger(__name__)

STATUS_COLUMNS = ("stage", "state", "digest")


def status_rows(campaign: Campaign) -> list[tuple[Any, ...]]:
    """One row per stage: complete with its digest, failed, or pending."""
    done = {m.stage: m.digest for m in campaign.completed}
    failed = campaign.failure.split(" ", 1)[0] if campaign.failure else None
    rows = []
    for stage in Stage.ordered():
        if stage in done:
            rows.append((stage.value, "complete", done[stage]))
        else:
            rows.append((stage.value, "failed" if stage.value == failed else "pending", None))
    return rows


def _with_jobs(config: CampaignConfig, jobs: int | None, settings: Settings) -> CampaignConfig:
    # --jobs, then the config file, then HARDNESS_JOBS
    if jobs is not None:
        return config.model_copy(update={"jobs": jobs})
    if "jobs" not in config.model_fields_set:
        return config.model_copy(update={"jobs": settings.jobs})
    return config


def _imported_records(config: CampaignConfig, config_path: Path) -> list[AnnealRecord]:
    if not config.anneal_records:
        return []
    path = Path(config.anneal_records)
    if not path.is_absolute():
        path = config_path.parent / path
    records = load_table(path, anneal_records)
    logger.info("Anneal records imported", path=str(path), records=len(records))
    return records


@click.command("campaign")
@click.option("--config", "config_path", type=INPUT_FILE,
              help="Campaign file; defaults to the config.txt stored in the campaign directory.")
@click.option("--dir", "root", type=click.Path(file_okay=False, path_type=Path),
              help="Campaign directory [HARDNESS_CAMPAIGN_DIR].")
@click.option("--jobs", type=click.IntRange(1, 1024),
              help="Worker processes; overrides the campaign file and HARDNESS_JOBS.")
@click.option("--seed", type=click.IntRange(0, 2**64 - 1),
              help="Master seed; overrides the campaign file.")
@click.option("--status", is_flag=True, help="Print stage progress and exit.")
@pass_state
@handle_errors
def campaign(
    state: CliState,
    config_path: Path | None,
    root: Path | None,
    jobs: int | None,
    seed: int | None,
    status: bool,
) -> None:
    """Run every campaign stage not yet complete and print the stage table.

    Completed stages are verified against their recorded hashes and skipped;
    a failed stage is rerun from scratch.
    """
    store = get_campaign_store(root, state.settings)
    if status:
        progress = store.progress()
        meta = {"campaign": progress.campaign_id, "failure": progress.failure}
        emit(state, "campaign_status", STATUS_COLUMNS, status_rows(progress), meta)
        return

    path = config_path or store.root / CONFIG
    if not path.exists():
        raise CliError(f"{path}: no campaign file; pass --config")
    overrides = {"seed": seed} if seed is not None else None
    config = _with_jobs(load_campaign_config(path, overrides), jobs, state.settings)
    result = run_campaign(
        config,
        store,
        get_kernel_factory(state.settings, config.kernel, config.word_size),
        get_solver_chooser(state.settings, config.exact_solver),
        _imported_records(config, path),
        get_worker_setup(state.log_level, state.log_format),
    )
    emit(
        state, "campaign_status", STATUS_COLUMNS, status_rows(result),
        {"campaign": result.campaign_id, "failure": result.failure},
    )
