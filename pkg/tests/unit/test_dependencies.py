"""
Unit tests for settings wiring and logging setup.
"""

import pytest
import structlog

from src.domain.entities.chimera import Instance
from src.infrastructure.adapters.kernel_factory import KernelKind
from src.infrastructure.cli.dependencies import (
    Settings,
    get_campaign_store,
    get_kernel_factory,
    get_solver_chooser,
)
from src.infrastructure.logging import configure_logging


def settings(**values: object) -> Settings:
    return Settings(_env_file=None, **values)  # type: ignore[arg-type]


class TestKernelFactory:
    """Tests for kernel choice precedence."""

    def test_settings_fill_auto(self) -> None:
        """Test that HARDNESS_KERNEL applies when no kind is given."""
        factory = get_kernel_factory(settings(kernel="scalar", word_size=16))

        assert factory.kind is KernelKind.SCALAR
        assert factory.word_size == 16

    def test_explicit_kind_wins(self) -> None:
        """Test that a flag or config value overrides the settings."""
        factory = get_kernel_factory(settings(kernel="scalar"), "packed", 8)

        assert factory.kind is KernelKind.PACKED
        assert factory.word_size == 8

    def test_auto_defers_to_settings(self) -> None:
        """Test that an explicit auto still reads the settings."""
        assert get_kernel_factory(settings(kernel="packed"), "auto").kind is KernelKind.PACKED


class TestWiring:
    """Tests for solver and store wiring."""

    def test_solver_chooser(self, toy_instance: Instance) -> None:
        """Test the per-instance solver choice."""
        assert get_solver_chooser(settings())(toy_instance).name == "brute_force"

    def test_campaign_dir_default(self) -> None:
        """Test that the store falls back to HARDNESS_CAMPAIGN_DIR."""
        store = get_campaign_store(None, settings(campaign_dir="/data/runs"))

        assert store.root.as_posix() == "/data/runs"


class TestLogging:
    """Tests for logging configuration."""

    def test_bad_level(self) -> None:
        """Test that unknown levels are rejected."""
        with pytest.raises(ValueError, match="unknown log level"):
            configure_logging("LOUD")

    def test_bad_format(self) -> None:
        """Test that unknown renderers are rejected."""
        with pytest.raises(ValueError, match="log format must be one of"):
            configure_logging("INFO", "xml")

    def test_json_lines_on_stderr(self, capsys: pytest.CaptureFixture[str]) -> None:
        """Test that events are rendered as JSON on stderr only."""
        configure_logging("INFO", "json")

        structlog.get_logger("test").info("Stage started", stage="generate")

        captured = capsys.readouterr()
        assert captured.out == ""
        assert '"event": "Stage started"' in captured.err
        assert '"stage": "generate"' in captured.err
