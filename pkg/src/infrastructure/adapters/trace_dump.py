"""
Trace Dump - Versioned text dump of a parallel-tempering run.

    # ptdump v2
    instance <id>
    seed <u64>
    ladder <T_1> ... <T_NT>
    replicas <R>
    steps <L>
    stride <d>
    sweeps_per_step <s>
    min_energy <E>
    best <+-string>
    swaps <rate_1> ... <rate_NT-1>
    trace <copy> <i_1> <i_1+d> ...            one line per copy
    energy <row> <E(T_1)> ... <E(T_NT)>       one line per block of d steps
    lagsum <copy> <S_0> ... <S_63>            d > 1 only
    occupancy <copy> <n_1> ... <n_NT>         d > 1 only
    snapshot <step> <replica> <k> <E> <+-string>

Version 1 dumps have no stride line and are read with d = 1.

Floats are written with repr() so a dump reloads to the identical run. Spin
strings use '+' and '-' per active vertex.
"""

from pathlib import Path

import numpy as np
import structlog

from src.domain.entities.chimera import SpinConfig
from src.domain.entities.run import RunOutput, TemperatureLadder, WalkSummary
from src.domain.errors import TraceFormatError

logger = structlog.get_logger(__name__)

DUMP_HEADER = "# ptdump v2"
READABLE_HEADERS = frozenset({"# ptdump v1", DUMP_HEADER})
_HEADER_KEYS = (
    "instance",
    "seed",
    "ladder",
    "replicas",
    "steps",
    "sweeps_per_step",
    "min_energy",
    "best",
    "swaps",
)
_OPTIONAL_KEYS = ("stride",)


def _spins(values: np.ndarray) -> str:
    return "".join("+" if s > 0 else "-" for s in values)


def _parse_spins(text: str, line: int | None) -> list[int]:
    if any(ch not in "+-" for ch in text):
        raise TraceFormatError("spin strings may only contain '+' and '-'", line)
    return [1 if ch == "+" else -1 for ch in text]


def serialize_run(output: RunOutput) -> str:
    """Render a run in the ptdump v2 format."""
    lines = [
        DUMP_HEADER,
        f"instance {output.instance_id}",
        f"seed {output.seed}",
        "ladder " + " ".join(repr(float(t)) for t in output.ladder.temperatures),
        f"replicas {output.replicas}",
        f"steps {output.steps}",
        f"stride {output.trace_stride}",
        f"sweeps_per_step {output.sweeps_per_step}",
        f"min_energy {output.min_energy!r}",
        f"best {_spins(output.best_config.as_array())}",
        "swaps " + " ".join(repr(float(r)) for r in output.swap_rates),
    ]
    for copy, series in enumerate(output.traces):
        lines.append(f"trace {copy} " + " ".join(str(int(i)) for i in series))
    for step, row in enumerate(output.energies):
        lines.append(f"energy {step} " + " ".join(repr(float(e)) for e in row))
    if output.walk is not None:
        for copy, sums in enumerate(output.walk.short_lag_sums):
            lines.append(f"lagsum {copy} " + " ".join(str(int(v)) for v in sums))
        for copy, counts in enumerate(output.walk.occupancy):
            lines.append(f"occupancy {copy} " + " ".join(str(int(v)) for v in counts))
    for c, step in enumerate(output.snapshot_steps):
        for r in range(output.replicas):
            for k in range(output.ladder.size):
                lines.append(
                    f"snapshot {int(step)} {r} {k} {float(output.snapshot_energies[c, r, k])!r} "
                    f"{_spins(output.snapshots[c, r, k])}"
                )
    return "\n".join(lines) + "\n"


def _fields(parts: list[str], count: int, line: int) -> list[str]:
    if len(parts) < count + 1:
        raise TraceFormatError(f"'{parts[0]}' expects at least {count} fields", line)
    return parts[1:]


def parse_run(text: str) -> RunOutput:
    """
    Rebuild a RunOutput from a ptdump v1 or v2 text.

    The replica state after the run is not part of the dump.

    Raises:
        TraceFormatError: On a missing or unknown header, or malformed lines
    """
    rows = [
        (n, raw.strip()) for n, raw in enumerate(text.splitlines(), start=1) if raw.strip()
    ]
    if not rows or rows[0][1] not in READABLE_HEADERS:
        raise TraceFormatError(
            f"missing header: expected {DUMP_HEADER!r}", rows[0][0] if rows else None
        )

    header: dict[str, list[str]] = {}
    traces: dict[int, list[int]] = {}
    energies: dict[int, list[float]] = {}
    lagsums: dict[int, list[int]] = {}
    occupancy: dict[int, list[int]] = {}
    snapshots: dict[tuple[int, int, int], tuple[float, list[int]]] = {}
    line = rows[0][0]
    try:
        for line, content in rows[1:]:
            parts = content.split()
            key = parts[0]
            if key in _HEADER_KEYS or key in _OPTIONAL_KEYS:
                header[key] = parts[1:]
            elif key == "trace":
                values = _fields(parts, 1, line)
                traces[int(values[0])] = [int(v) for v in values[1:]]
            elif key == "energy":
                values = _fields(parts, 1, line)
                energies[int(values[0])] = [float(v) for v in values[1:]]
            elif key in ("lagsum", "occupancy"):
                values = _fields(parts, 1, line)
                target = lagsums if key == "lagsum" else occupancy
                target[int(values[0])] = [int(v) for v in values[1:]]
            elif key == "snapshot":
                values = _fields(parts, 5, line)
                step, r, k = (int(v) for v in values[:3])
                snapshots[(step, r, k)] = (float(values[3]), _parse_spins(values[4], line))
            else:
                raise TraceFormatError(f"unknown record {key!r}", line)
    except TraceFormatError:
        raise
    except ValueError as exc:
        raise TraceFormatError(f"malformed number: {exc}", line) from exc

    missing = [k for k in _HEADER_KEYS if k not in header]
    if missing:
        raise TraceFormatError(f"missing header field {missing[0]!r}")
    try:
        ladder = TemperatureLadder.create([float(t) for t in header["ladder"]])
        replicas = int(header["replicas"][0])
        steps = int(header["steps"][0])
        stride = int(header.get("stride", ["1"])[0])
        if stride < 1:
            raise TraceFormatError(f"stride must be at least 1, got {stride}")
        samples = -(-steps // stride)
        best = SpinConfig(values=tuple(_parse_spins(header["best"][0], None)))
        snap_steps = sorted({step for step, _, _ in snapshots})
        size = best.size
        snap = np.zeros((len(snap_steps), replicas, ladder.size, size), dtype=np.int8)
        snap_energy = np.zeros((len(snap_steps), replicas, ladder.size))
        for c, step in enumerate(snap_steps):
            for r in range(replicas):
                for k in range(ladder.size):
                    e, spins = snapshots[(step, r, k)]
                    snap[c, r, k] = spins
                    snap_energy[c, r, k] = e
        copies = replicas * ladder.size
        walk = None
        if stride > 1:
            walk = WalkSummary(
                short_lag_sums=np.asarray([lagsums[c] for c in range(copies)], dtype=np.int64),
                occupancy=np.asarray([occupancy[c] for c in range(copies)], dtype=np.int64),
            )
        return RunOutput(
            instance_id=header["instance"][0],
            seed=int(header["seed"][0]),
            ladder=ladder,
            replicas=replicas,
            steps=steps,
            sweeps_per_step=int(header["sweeps_per_step"][0]),
            traces=np.asarray(
                [traces[c] for c in range(copies)], dtype=np.int16
            ).reshape(copies, samples),
            energies=np.asarray(
                [energies[t] for t in range(samples)], dtype=float
            ).reshape(samples, ladder.size),
            snapshot_steps=np.asarray(snap_steps, dtype=np.int64),
            snapshots=snap,
            snapshot_energies=snap_energy,
            min_energy=float(header["min_energy"][0]),
            best_config=best,
            swap_rates=np.asarray([float(r) for r in header["swaps"]], dtype=float),
            trace_stride=stride,
            walk=walk,
        )
    except KeyError as exc:
        raise TraceFormatError(f"incomplete dump: no record for {exc.args[0]!r}") from exc
    except TraceFormatError:
        raise
    except (ValueError, IndexError) as exc:
        raise TraceFormatError(f"inconsistent dump: {exc}") from exc


def read_run(path: Path) -> RunOutput:
    """Read a dump file; errors are located with the file name."""
    try:
        return parse_run(Path(path).read_text(encoding="utf-8"))
    except TraceFormatError as exc:
        raise exc.located(str(path)) from exc


def write_run(path: Path, output: RunOutput) -> Path:
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    target.write_text(serialize_run(output), encoding="utf-8")
    logger.debug("Run dumped", path=str(target), instance=output.instance_id, steps=output.steps)
    return target
