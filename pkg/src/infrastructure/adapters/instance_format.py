"""
Instance File Format - Text codec for Chimera instances.

    # comments and blank lines are ignored
    chimera <rows> <cols> <shore>
    dead <v1> <v2> ...          (optional, may repeat)
    seed <u64>
    id <token>                  (optional)
    J <i> <j> <value>           (one per edge, vertex ids, i < j)
    h <i> <value>               (optional, missing fields are 0)
    config <s1> <s2> ...        (optional witness, +1/-1 per active vertex)

Values are exact decimals ("-1", "0.973251") or, when a rational has no
terminating expansion, "p/q".
"""

from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

import structlog

from src.domain.entities.chimera import (
    ChimeraError,
    ChimeraGraph,
    Instance,
    SpinConfig,
    build_chimera,
    default_instance_id,
)
from src.domain.errors import InstanceFormatError

logger = structlog.get_logger(__name__)

MAX_DECIMALS = 30


@dataclass(frozen=True, slots=True)
class InstanceDocument:
    """A parsed instance file: the instance and its optional witness."""

    instance: Instance
    config: SpinConfig | None = None


def format_value(value: Fraction) -> str:
    """Shortest exact decimal of a rational, or p/q when it does not terminate."""
    if value.denominator == 1:
        return str(value.numerator)
    for places in range(1, MAX_DECIMALS + 1):
        scaled = value * 10**places
        if scaled.denominator == 1:
            digits = str(abs(scaled.numerator)).rjust(places + 1, "0")
            sign = "-" if value < 0 else ""
            return f"{sign}{digits[:-places]}.{digits[-places:]}"
    return f"{value.numerator}/{value.denominator}"


def serialize_instance(instance: Instance, config: SpinConfig | None = None) -> str:
    """
    Render an instance, and optionally a configuration, in the instance format.

    Raises:
        ChimeraError: If the configuration does not match the instance size
    """
    graph = instance.graph
    if config is not None and config.size != instance.size:
        raise ChimeraError(
            f"configuration has {config.size} entries, instance has {instance.size} spins"
        )
    lines = [f"chimera {graph.rows} {graph.cols} {graph.shore}"]
    if graph.dead_vertices:
        lines.append("dead " + " ".join(str(v) for v in sorted(graph.dead_vertices)))
    lines.append(f"seed {instance.seed}")
    if instance.id != default_instance_id(graph, instance.seed):
        lines.append(f"id {instance.id}")
    lines.extend(
        f"J {i} {j} {format_value(value)}"
        for (i, j), value in zip(graph.edges, instance.couplings, strict=True)
    )
    lines.extend(
        f"h {v} {format_value(value)}"
        for v, value in zip(graph.active_vertices, instance.fields, strict=True)
        if value != 0
    )
    if config is not None:
        lines.append("config " + " ".join(f"{s:+d}" for s in config.values))
    return "\n".join(lines) + "\n"


def _int(token: str, what: str, line: int) -> int:
    try:
        return int(token)
    except ValueError:
        raise InstanceFormatError(f"{what} must be an integer, got {token!r}", line) from None


def _value(token: str, line: int) -> Fraction:
    try:
        return Fraction(token)
    except (ValueError, ZeroDivisionError):
        raise InstanceFormatError(f"invalid value {token!r}", line) from None


def _arity(parts: list[str], expected: int, line: int) -> None:
    if len(parts) != expected:
        raise InstanceFormatError(
            f"'{parts[0]}' expects {expected - 1} fields, got {len(parts) - 1}", line
        )


class _Parser:
    """Line-oriented parser holding the header until the graph can be built."""

    def __init__(self) -> None:
        self.shape: tuple[int, int, int] | None = None
        self.dead: list[int] = []
        self.seed: int | None = None
        self.instance_id: str | None = None
        self.couplings: dict[tuple[int, int], tuple[Fraction, int]] = {}
        self.fields: dict[int, tuple[Fraction, int]] = {}
        self.config: tuple[list[int], int] | None = None

    def feed(self, parts: list[str], line: int) -> None:
        keyword = parts[0]
        if self.shape is None and keyword != "chimera":
            raise InstanceFormatError("missing header: expected 'chimera r c k'", line)
        if keyword == "chimera":
            if self.shape is not None:
                raise InstanceFormatError("duplicate 'chimera' header", line)
            _arity(parts, 4, line)
            r, c, k = (_int(t, "graph size", line) for t in parts[1:])
            self.shape = (r, c, k)
        elif keyword == "dead":
            self.dead.extend(_int(t, "dead vertex", line) for t in parts[1:])
        elif keyword == "seed":
            _arity(parts, 2, line)
            self.seed = _int(parts[1], "seed", line)
        elif keyword == "id":
            _arity(parts, 2, line)
            self.instance_id = parts[1]
        elif keyword == "J":
            _arity(parts, 4, line)
            i, j = _int(parts[1], "vertex", line), _int(parts[2], "vertex", line)
            key = (min(i, j), max(i, j))
            if key in self.couplings:
                raise InstanceFormatError(f"duplicate coupling ({key[0]}, {key[1]})", line)
            self.couplings[key] = (_value(parts[3], line), line)
        elif keyword == "h":
            _arity(parts, 3, line)
            v = _int(parts[1], "vertex", line)
            if v in self.fields:
                raise InstanceFormatError(f"duplicate field on vertex {v}", line)
            self.fields[v] = (_value(parts[2], line), line)
        elif keyword == "config":
            if self.config is not None:
                raise InstanceFormatError("duplicate 'config' section", line)
            self.config = ([_int(t, "spin", line) for t in parts[1:]], line)
        else:
            raise InstanceFormatError(f"unknown keyword {keyword!r}", line)

    def graph(self) -> ChimeraGraph:
        """Graph named by the header, with any dead vertices removed."""
        if self.shape is None:
            raise InstanceFormatError("missing header: expected 'chimera r c k'")
        try:
            return build_chimera(*self.shape, dead=self.dead)
        except ChimeraError as exc:
            raise InstanceFormatError(str(exc)) from exc

    def finish(self) -> InstanceDocument:
        graph = self.graph()
        if self.seed is None:
            raise InstanceFormatError("missing 'seed' line")
        for (i, j), (_, line) in self.couplings.items():
            for v in (i, j):
                if not graph.is_active(v):
                    raise InstanceFormatError(f"coupling references dead or unknown vertex {v}", line)
        edges = set(graph.edges)
        for key, (_, line) in self.couplings.items():
            if key not in edges:
                raise InstanceFormatError(f"({key[0]}, {key[1]}) is not an edge of the graph", line)
        missing = [e for e in graph.edges if e not in self.couplings]
        if missing:
            raise InstanceFormatError(f"missing coupling for edge ({missing[0][0]}, {missing[0][1]})")
        for v, (_, line) in self.fields.items():
            if not graph.is_active(v):
                raise InstanceFormatError(f"field references dead or unknown vertex {v}", line)

        try:
            instance = Instance(
                graph=graph,
                couplings=tuple(self.couplings[e][0] for e in graph.edges),
                fields=tuple(
                    self.fields.get(v, (Fraction(0), 0))[0] for v in graph.active_vertices
                ),
                seed=self.seed,
                id=self.instance_id or default_instance_id(graph, self.seed),
            )
        except ChimeraError as exc:
            raise InstanceFormatError(str(exc)) from exc

        config = None
        if self.config is not None:
            spins, line = self.config
            if len(spins) != graph.size:
                raise InstanceFormatError(
                    f"config has {len(spins)} spins, graph has {graph.size}", line
                )
            try:
                config = SpinConfig(values=tuple(spins))
            except ChimeraError as exc:
                raise InstanceFormatError(str(exc), line) from exc
        return InstanceDocument(instance=instance, config=config)


def parse_document(text: str) -> InstanceDocument:
    """
    Parse an instance file together with its optional witness.

    Raises:
        InstanceFormatError: With the offending line number where one exists
    """
    parser = _Parser()
    for number, raw in enumerate(text.splitlines(), start=1):
        content = raw.split("#", 1)[0].strip()
        if content:
            parser.feed(content.split(), number)
    return parser.finish()


def parse_instance(text: str) -> Instance:
    """Parse an instance file, ignoring any witness section."""
    return parse_document(text).instance


def read_instance(path: Path) -> InstanceDocument:
    """
    Read an instance file from disk.

    Raises:
        InstanceFormatError: Located with the file name
        FileNotFoundError: If the file does not exist
    """
    try:
        return parse_document(Path(path).read_text(encoding="utf-8"))
    except InstanceFormatError as exc:
        raise exc.located(str(path)) from exc


def write_instance(path: Path, instance: Instance, config: SpinConfig | None = None) -> Path:
    """Write an instance file, creating parent directories."""
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    target.write_text(serialize_instance(instance, config), encoding="utf-8")
    logger.debug("Instance written", path=str(target), instance=instance.id)
    return target
