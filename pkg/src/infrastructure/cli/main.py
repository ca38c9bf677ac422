"""
Command-Line Application - Main entry point.

Every subcommand reads and writes the text formats of the library: instance
files, ptdump runs and versioned tab-separated tables. Tables go to stdout (or
to the paths given), logs go to stderr.
"""

import click
import structlog

from src.infrastructure.cli.commands import COMMANDS
from src.infrastructure.cli.common import OUTPUT_FORMATS, CliState
from src.infrastructure.cli.dependencies import get_settings
from src.infrastructure.logging import LOG_FORMATS, configure_logging

logger = structlog.get_logger(__name__)

LOG_LEVELS = ("DEBUG", "INFO", "WARNING", "ERROR")


@click.group(context_settings={"help_option_names": ["-h", "--help"]})
@click.option("--log-level", type=click.Choice(LOG_LEVELS, case_sensitive=False),
              help="Minimum log level [HARDNESS_LOG_LEVEL, default WARNING].")
@click.option("--log-format", type=click.Choice(LOG_FORMATS),
              help="Log renderer [HARDNESS_LOG_FORMAT, default console].")
@click.option("--format", "output_format", type=click.Choice(OUTPUT_FORMATS), default="tsv",
              show_default=True, help="Table output format.")
@click.version_option(package_name="chimera-hardness-lab")
@click.pass_context
def cli(
    ctx: click.Context, log_level: str | None, log_format: str | None, output_format: str
) -> None:
    """Classical-hardness laboratory for Chimera spin glasses."""
    settings = get_settings()
    level = (log_level or settings.log_level).upper()
    fmt = log_format or settings.log_format
    try:
        configure_logging(level, fmt)
    except ValueError as exc:
        raise click.BadParameter(str(exc), param_hint="HARDNESS_LOG_LEVEL/HARDNESS_LOG_FORMAT")
    ctx.obj = CliState(
        settings=settings, log_level=level, log_format=fmt, output_format=output_format
    )
    logger.debug("CLI started", command=ctx.invoked_subcommand, kernel=settings.kernel.value)


for command in COMMANDS:
    cli.add_command(command)


def main() -> None:
    cli()


if __name__ == "__main__":
    main()
