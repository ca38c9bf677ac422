"""
CLI Dependencies - Settings and factory wiring for the subcommands.
"""

from collections.abc import Callable
from functools import lru_cache, partial
from pathlib import Path

import structlog
from pydantic import Field
from pydantic_settings import BaseSettings, SettingsConfigDict

from src.application.services.engine import ParallelTemperingService
from src.domain.entities.chimera import Instance
from src.domain.ports.exact_port import GroundStateSolver
from src.infrastructure.adapters.campaign_store import FileCampaignStore
from src.infrastructure.adapters.kernel_factory import KernelFactory, KernelKind
from src.infrastructure.adapters.solver_factory import SolverFactory, SolverKind
from src.infrastructure.logging import configure_logging

logger = structlog.get_logger(__name__)


class Settings(BaseSettings):
    """Defaults read from HARDNESS_* environment variables or a .env file."""

    # Campaigns
    campaign_dir: str = "./campaign"
    jobs: int = Field(default=1, ge=1)

    # Logging
    log_level: str = "WARNING"
    log_format: str = "console"

    # Exact solvers
    brute_force_max_spins: int = Field(default=32, ge=1, le=40)
    exact_max_state_bits: int = Field(default=24, ge=1, le=40)

    # Monte Carlo kernels
    kernel: KernelKind = KernelKind.AUTO
    word_size: int = Field(default=64, ge=1, le=64)

    model_config = SettingsConfigDict(
        env_prefix="HARDNESS_",
        env_file=".env",
        env_file_encoding="utf-8",
        case_sensitive=False,
        extra="ignore",
    )


@lru_cache
def get_settings() -> Settings:
    """
    Get cached settings.

    Returns:
        Settings instance loaded from the environment
    """
    return Settings()


def get_kernel_factory(
    settings: Settings, kind: KernelKind | str | None = None, word_size: int | None = None
) -> KernelFactory:
    """
    Kernel factory from settings.

    An explicit non-auto kind (a flag or the campaign config) wins over
    HARDNESS_KERNEL; an explicit word size wins over HARDNESS_WORD_SIZE.
    """
    chosen = KernelKind.AUTO if kind is None else KernelKind(kind)
    if chosen is KernelKind.AUTO:
        chosen = settings.kernel
    return KernelFactory(kind=chosen, word_size=word_size or settings.word_size)


def get_sampler(
    settings: Settings, kind: KernelKind | str | None = None
) -> ParallelTemperingService:
    return ParallelTemperingService(get_kernel_factory(settings, kind))


def get_solver_factory(settings: Settings) -> SolverFactory:
    return SolverFactory(
        max_spins=settings.brute_force_max_spins,
        max_state_bits=settings.exact_max_state_bits,
    )


def get_solver_chooser(
    settings: Settings, kind: SolverKind | str = SolverKind.AUTO
) -> Callable[[Instance], GroundStateSolver]:
    """Per-instance solver choice; picklable so campaign workers can use it."""
    return partial(get_solver_factory(settings).create, SolverKind(kind))


def get_campaign_store(root: Path | str | None, settings: Settings) -> FileCampaignStore:
    return FileCampaignStore(root or settings.campaign_dir)


def get_worker_setup(level: str, fmt: str) -> Callable[[], None]:
    """Logging setup replayed in every campaign worker process."""
    return partial(configure_logging, level, fmt)
