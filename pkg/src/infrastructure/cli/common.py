"""
CLI Common - Shared state, options, table output and error translation.
"""

import functools
from collections.abc import Callable, Iterable, Mapping, Sequence
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import IO, Any, ParamSpec, TextIO, TypeVar

import click
import structlog

from src.application.services.campaign_config import GRAPH_PATTERN
from src.domain.entities.chimera import ChimeraGraph, Instance, build_chimera
from src.domain.entities.run import TemperatureLadder, default_ladder
from src.domain.errors import CampaignError, FitError, FormatError, InsufficientDataError
from src.domain.ports.engine_port import EngineError
from src.domain.ports.exact_port import ExactSolverError
from src.infrastructure.adapters.instance_format import read_instance
from src.infrastructure.adapters.tables import write_table
from src.infrastructure.cli.dependencies import Settings

logger = structlog.get_logger(__name__)

P = ParamSpec("P")
R = TypeVar("R")

OUTPUT_FORMATS = ("tsv",)
INPUT_FILE = click.Path(exists=True, dir_okay=False, path_type=Path)


class CliError(click.ClickException):
    """One-line diagnostic on stderr, exit code 1."""

    def show(self, file: IO[Any] | None = None) -> None:
        stream = file or click.get_text_stream("stderr")
        click.echo(f"error: {self.format_message()}", file=stream)


@dataclass(frozen=True, slots=True)
class CliState:
    """Options of the command group, shared by every subcommand."""

    settings: Settings
    log_level: str
    log_format: str
    output_format: str = "tsv"


pass_state = click.make_pass_decorator(CliState)


def handle_errors(command: Callable[P, R]) -> Callable[P, R]:
    """Turn domain and I/O errors raised by a command into one-line diagnostics."""

    @functools.wraps(command)
    def wrapper(*args: P.args, **kwargs: P.kwargs) -> R:
        try:
            return command(*args, **kwargs)
        except click.ClickException:
            raise
        except CampaignError as exc:
            raise CliError(exc.message) from exc
        except (FormatError, InsufficientDataError, FitError) as exc:
            raise CliError(str(exc)) from exc
        except (EngineError, ExactSolverError) as exc:
            raise CliError(str(exc)) from exc
        except OSError as exc:
            where = f"{exc.filename}: " if exc.filename else ""
            raise CliError(f"{where}{exc.strerror or exc}") from exc
        except ValueError as exc:
            raise CliError(str(exc)) from exc

    return wrapper


def seed_option(default: int = 0) -> Callable[[Callable[P, R]], Callable[P, R]]:
    return click.option(
        "--seed",
        type=click.IntRange(0, 2**64 - 1),
        default=default,
        show_default=True,
        help="Master seed; equal seeds give identical output.",
    )


def parse_graph(_ctx: click.Context, _param: click.Parameter, value: str) -> str:
    if not GRAPH_PATTERN.match(value):
        raise click.BadParameter("expected rows x cols x shore, e.g. 4x4x4")
    return value


def build_graph(shape: str, dead: Sequence[int] = ()) -> ChimeraGraph:
    match = GRAPH_PATTERN.match(shape)
    assert match is not None
    rows, cols, shore = (int(g) for g in match.groups())
    return build_chimera(rows, cols, shore, dead=dead)


def parse_int_list(
    _ctx: click.Context, _param: click.Parameter, value: str | None
) -> tuple[int, ...]:
    if not value:
        return ()
    try:
        return tuple(int(part) for part in value.split(",") if part.strip())
    except ValueError:
        raise click.BadParameter(f"expected comma-separated integers, got {value!r}")


def parse_float_list(
    _ctx: click.Context, _param: click.Parameter, value: str | None
) -> tuple[float, ...]:
    if not value:
        return ()
    try:
        return tuple(float(part) for part in value.split(",") if part.strip())
    except ValueError:
        raise click.BadParameter(f"expected comma-separated numbers, got {value!r}")


def parse_energy(
    _ctx: click.Context, _param: click.Parameter, value: str | None
) -> Fraction | None:
    if value is None:
        return None
    try:
        return Fraction(value)
    except (ValueError, ZeroDivisionError):
        raise click.BadParameter(f"expected an exact decimal or p/q, got {value!r}")


def ladder_from(temperatures: Sequence[float]) -> TemperatureLadder:
    return TemperatureLadder.create(temperatures) if temperatures else default_ladder()


def load_instances(paths: Iterable[Path]) -> list[Instance]:
    """Instances from files, rejecting duplicate ids."""
    instances: list[Instance] = []
    seen: dict[str, Path] = {}
    for path in paths:
        instance = read_instance(path).instance
        if instance.id in seen:
            raise CliError(
                f"{path}: instance {instance.id!r} already read from {seen[instance.id]}"
            )
        seen[instance.id] = path
        instances.append(instance)
    logger.debug("Instances loaded", count=len(instances))
    return instances


def emit(
    state: CliState,
    name: str,
    columns: Sequence[str],
    rows: Iterable[Sequence[Any]],
    meta: Mapping[str, Any] | None = None,
    out: Path | None = None,
) -> None:
    """Write a table to `out`, or to stdout when no path is given."""
    if state.output_format not in OUTPUT_FORMATS:
        raise CliError(f"unsupported output format {state.output_format!r}")
    target: Path | TextIO = out if out is not None else click.get_text_stream("stdout")
    write_table(target, name, columns, list(rows), meta)
