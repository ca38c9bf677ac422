# CLI Module
"""
Click command-line surface: one group with a subcommand per pipeline stage.
"""

from src.infrastructure.cli.main import cli

__all__ = ["cli"]
