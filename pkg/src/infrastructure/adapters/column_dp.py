"""
Column DP Solver - Exact ground states by sweeping cell columns.

The state of column c is the assignment of its active half-1 (horizontal)
spins, r * k bits at most. Given that state, the half-0 spins of the column
form k vertical chains with effective fields and are minimized exactly by a
chain transfer. Columns only interact through horizontal couplers between
matching half-1 spins, so passing the optimum to the next column is a per-bit
min-plus transform of a (2, ..., 2) array.

Values are exact scaled int64; multiplicities are float64 and saturate at 2^53.
Every column keeps a value table of 2^bits entries for the witness pass, so
memory grows as 8 * columns * 2^bits bytes. Interface spins are decoded as int8
in chunks of CHUNK_STATES states and never held for a whole column.
"""

from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np
import numpy.typing as npt
import structlog

from src.domain.entities.chimera import ChimeraGraph, Instance, SpinConfig, energy
from src.domain.entities.exact import ExactResult
from src.domain.ports.exact_port import (
    GroundStateSolver,
    InstanceTooLargeError,
    WitnessMismatchError,
)
from src.infrastructure.adapters.scaled import EXACT_FLOAT_LIMIT, scale_instance

logger = structlog.get_logger(__name__)

DEFAULT_MAX_STATE_BITS = 24
CHUNK_STATES = 2**16
TABLE_BYTES_PER_STATE = 8

Values = npt.NDArray[np.int64]
Counts = npt.NDArray[np.float64]


@dataclass(frozen=True, slots=True)
class _Chain:
    """Active half-0 vertices of one index in one column, top to bottom."""

    positions: tuple[int, ...]
    bonds: tuple[int, ...]  # scaled coupling to the next vertex, 0 across gaps
    taps: tuple[tuple[tuple[int, int], ...], ...]  # per vertex: (interface bit, coupling)


@dataclass(frozen=True, slots=True)
class _Column:
    interface: tuple[int, ...]  # positions of active half-1 vertices, by (row, index)
    interface_fields: tuple[int, ...]
    chains: tuple[_Chain, ...]
    links: tuple[tuple[int, int, int], ...]  # (previous-column bit, bit, coupling)

    @property
    def bits(self) -> int:
        """Number of interface spins, the column's state bits."""
        return len(self.interface)


def interface_bits(graph: ChimeraGraph) -> int:
    """Largest number of active half-1 vertices in a cell column."""
    widest = 0
    for col in range(graph.cols):
        count = sum(
            graph.is_active(graph.vertex_id(row, col, 1, i))
            for row in range(graph.rows)
            for i in range(graph.shore)
        )
        widest = max(widest, count)
    return widest


def table_bytes(graph: ChimeraGraph) -> int:
    """Bytes held by the per-column value tables of one solve."""
    return TABLE_BYTES_PER_STATE * graph.cols * 2 ** interface_bits(graph)


def _spin_column(bits: int, j: int) -> npt.NDArray[np.int64]:
    states = np.arange(2**bits, dtype=np.int64)
    return 1 - 2 * ((states >> (bits - 1 - j)) & 1)


def _decode(start: int, stop: int, bits: int) -> npt.NDArray[np.int8]:
    """(stop - start, bits) spins of a run of states, bit 0 most significant."""
    states = np.arange(start, stop, dtype=np.int64)
    shifts = np.arange(bits - 1, -1, -1, dtype=np.int64)
    return (1 - 2 * ((states[:, None] >> shifts) & 1)).astype(np.int8)


def _spin_of(state: int, bits: int, j: int) -> int:
    return 1 - 2 * ((state >> (bits - 1 - j)) & 1)


def _pick(a0: Values, a1: Values, n0: Counts, n1: Counts) -> tuple[Values, Counts]:
    low = np.minimum(a0, a1)
    return low, n0 * (a0 == low) + n1 * (a1 == low)


def _chain_forward(
    fields: Values, bonds: Sequence[int]
) -> tuple[Values, Counts, list[tuple[npt.NDArray[np.bool_], npt.NDArray[np.bool_]]]]:
    """
    Min-sum transfer along one chain for a batch of field assignments.

    Args:
        fields: (S, L) effective fields of the chain vertices
        bonds: L - 1 couplings between consecutive vertices

    Returns:
        (minimum (S,), multiplicity (S,), back-pointers per link: for each
        target spin +1 / -1 whether the predecessor takes -1)
    """
    plus, minus = fields[:, 0].copy(), -fields[:, 0]
    n_plus = np.ones(fields.shape[0])
    n_minus = np.ones(fields.shape[0])
    history = []
    for link, j in enumerate(bonds, start=1):
        to_plus, c_plus = _pick(plus + j, minus - j, n_plus, n_minus)
        to_minus, c_minus = _pick(plus - j, minus + j, n_plus, n_minus)
        history.append((minus - j < plus + j, minus + j < plus - j))
        plus, minus = to_plus + fields[:, link], to_minus - fields[:, link]
        n_plus, n_minus = c_plus, c_minus
    low, count = _pick(plus, minus, n_plus, n_minus)
    history.append((minus < plus, minus < plus))
    return low, count, history


def _chain_backtrack(
    history: list[tuple[npt.NDArray[np.bool_], npt.NDArray[np.bool_]]], length: int
) -> list[int]:
    """Spins of the optimal assignment of a single-state chain, top to bottom."""
    spins = [0] * length
    last_minus = bool(history[-1][0][0])
    spins[-1] = -1 if last_minus else 1
    for link in range(length - 1, 0, -1):
        choose_plus, choose_minus = history[link - 1]
        pointer = choose_plus if spins[link] == 1 else choose_minus
        spins[link - 1] = -1 if bool(pointer[0]) else 1
    return spins


def _couple(
    values: Values, counts: Counts, prev_bits: int, column: _Column
) -> tuple[Values, Counts]:
    """min over previous states of F(prev) + sum J x y, for every current state."""
    shape = (2,) * prev_bits
    table, mult = values.reshape(shape), counts.reshape(shape)
    labels: list[tuple[str, int]] = [("p", j) for j in range(prev_bits)]
    partner = {p: (q, j) for p, q, j in column.links}
    for p in range(prev_bits):
        axis = labels.index(("p", p))
        v0, v1 = np.take(table, 0, axis=axis), np.take(table, 1, axis=axis)
        n0, n1 = np.take(mult, 0, axis=axis), np.take(mult, 1, axis=axis)
        if p in partner:
            q, j = partner[p]
            up, n_up = _pick(v0 + j, v1 - j, n0, n1)
            down, n_down = _pick(v0 - j, v1 + j, n0, n1)
            table = np.stack([up, down], axis=axis)
            mult = np.stack([n_up, n_down], axis=axis)
            labels[axis] = ("q", q)
        else:
            table, mult = _pick(v0, v1, n0, n1)
            del labels[axis]
    for q in range(column.bits):
        if ("q", q) not in labels:
            table, mult = table[..., None], mult[..., None]
            labels.append(("q", q))
    order = [labels.index(("q", q)) for q in range(column.bits)]
    target = (2,) * column.bits
    table = np.broadcast_to(np.transpose(table, order), target)
    mult = np.broadcast_to(np.transpose(mult, order), target)
    return np.ascontiguousarray(table).reshape(-1), np.ascontiguousarray(mult).reshape(-1)


class ColumnDPSolver(GroundStateSolver):
    """Exact solver whose cost grows as 2^(active half-1 spins per column)."""

    def __init__(self, max_state_bits: int = DEFAULT_MAX_STATE_BITS):
        self.max_state_bits = max_state_bits

    @property
    def name(self) -> str:
        return "column_dp"

    def supports(self, instance: Instance) -> bool:
        return interface_bits(instance.graph) <= self.max_state_bits

    def _columns(self, instance: Instance, couplings: Values, fields: Values) -> list[_Column]:
        graph = instance.graph
        lookup = {
            pair: int(j) for pair, j in zip(graph.edge_positions, couplings, strict=True)
        }

        def bond(u: int, v: int) -> int:
            return lookup.get((min(u, v), max(u, v)), 0)

        columns: list[_Column] = []
        previous: dict[tuple[int, int], int] = {}
        previous_positions: list[int] = []
        for col in range(graph.cols):
            interface: list[int] = []
            bit_of: dict[tuple[int, int], int] = {}
            for row in range(graph.rows):
                for i in range(graph.shore):
                    vertex = graph.vertex_id(row, col, 1, i)
                    if graph.is_active(vertex):
                        bit_of[(row, i)] = len(interface)
                        interface.append(graph.position(vertex))

            chains = []
            for i in range(graph.shore):
                members = [
                    (row, graph.position(graph.vertex_id(row, col, 0, i)))
                    for row in range(graph.rows)
                    if graph.is_active(graph.vertex_id(row, col, 0, i))
                ]
                if not members:
                    continue
                taps = tuple(
                    tuple(
                        (bit_of[(row, b)], bond(pos, interface[bit_of[(row, b)]]))
                        for b in range(graph.shore)
                        if (row, b) in bit_of
                    )
                    for row, pos in members
                )
                bonds = tuple(bond(u, v) for (_, u), (_, v) in zip(members, members[1:], strict=False))
                chains.append(
                    _Chain(positions=tuple(p for _, p in members), bonds=bonds, taps=taps)
                )

            links = tuple(
                (previous[key], bit, bond(interface[bit], previous_positions[previous[key]]))
                for key, bit in bit_of.items()
                if key in previous
            )
            columns.append(
                _Column(
                    interface=tuple(interface),
                    interface_fields=tuple(int(fields[p]) for p in interface),
                    chains=tuple(chains),
                    links=links,
                )
            )
            previous = bit_of
            previous_positions = interface
        return columns

    @staticmethod
    def _column_cost(column: _Column, fields: Values) -> tuple[Values, Counts]:
        n_states = 2**column.bits
        cost = np.empty(n_states, dtype=np.int64)
        mult = np.empty(n_states)
        interface_fields = np.asarray(column.interface_fields, dtype=np.int64)
        for start in range(0, n_states, CHUNK_STATES):
            stop = min(start + CHUNK_STATES, n_states)
            spins = _decode(start, stop, column.bits)
            chunk_cost = spins.astype(np.int64) @ interface_fields
            chunk_mult = np.ones(stop - start)
            for chain in column.chains:
                effective = np.empty((stop - start, len(chain.positions)), dtype=np.int64)
                for slot, (pos, taps) in enumerate(zip(chain.positions, chain.taps, strict=True)):
                    effective[:, slot] = int(fields[pos])
                    for bit, j in taps:
                        effective[:, slot] += j * spins[:, bit].astype(np.int64)
                low, count, _ = _chain_forward(effective, chain.bonds)
                chunk_cost += low
                chunk_mult *= count
            cost[start:stop] = chunk_cost
            mult[start:stop] = chunk_mult
        return cost, mult

    def solve(self, instance: Instance) -> ExactResult:
        widest = interface_bits(instance.graph)
        if widest > self.max_state_bits:
            gib = table_bytes(instance.graph) / 2**30
            raise InstanceTooLargeError(
                f"column interface of {instance.id} needs {widest} state bits "
                f"({gib:.3g} GiB of column tables), limit is {self.max_state_bits}"
            )
        scaled = scale_instance(instance)
        columns = self._columns(instance, scaled.couplings, scaled.fields)

        tables: list[Values] = []
        values, mult = self._column_cost(columns[0], scaled.fields)
        tables.append(values)
        for prev, column in zip(columns, columns[1:], strict=False):
            carried, carried_mult = _couple(values, mult, prev.bits, column)
            cost, cost_mult = self._column_cost(column, scaled.fields)
            values, mult = cost + carried, cost_mult * carried_mult
            tables.append(values)

        best = int(values.min())
        total = float(mult[values == best].sum())
        saturated = total >= EXACT_FLOAT_LIMIT
        witness = self._witness(instance, columns, tables, scaled.fields, int(np.argmin(values)))
        e0 = scaled.energy(best)
        if energy(instance, witness) != e0:
            raise WitnessMismatchError(f"column-DP witness of {instance.id} does not reach E0")
        logger.debug(
            "Column DP solved",
            instance=instance.id,
            e0=str(e0),
            state_bits=widest,
            saturated=saturated,
        )
        return ExactResult(
            instance_id=instance.id,
            e0=e0,
            witness=witness,
            degeneracy=int(min(total, EXACT_FLOAT_LIMIT)),
            saturated=saturated,
            solver=self.name,
        )

    def _witness(
        self,
        instance: Instance,
        columns: list[_Column],
        tables: list[Values],
        fields: Values,
        last_state: int,
    ) -> SpinConfig:
        spins = [1] * instance.size
        state = last_state
        for c in range(len(columns) - 1, -1, -1):
            column = columns[c]
            for j, pos in enumerate(column.interface):
                spins[pos] = _spin_of(state, column.bits, j)
            for chain in column.chains:
                effective = np.asarray(
                    [
                        [
                            int(fields[pos]) + sum(j * spins[column.interface[b]] for b, j in taps)
                            for pos, taps in zip(chain.positions, chain.taps, strict=True)
                        ]
                    ],
                    dtype=np.int64,
                )
                _, _, history = _chain_forward(effective, chain.bonds)
                for pos, s in zip(
                    chain.positions, _chain_backtrack(history, len(chain.positions)), strict=True
                ):
                    spins[pos] = s
            if c == 0:
                break
            prev = columns[c - 1]
            total = tables[c - 1].copy()
            for p, q, j in column.links:
                total += j * _spin_of(state, column.bits, q) * _spin_column(prev.bits, p)
            state = int(np.argmin(total))
        return SpinConfig(values=tuple(spins))
