"""
Chimera Entity - Graph, instance, spin configuration and gauge model.

Vertices are numbered row-major over unit cells, then by half, then by the
index inside the half:

    v = ((row * cols + col) * 2 + half) * k + index

Half 0 (left) couples to the same index in the cells above and below; half 1
(right) couples to the same index in the cells to the left and right. Inside a
cell both halves form a complete bipartite K_{k,k}.

The cost function is H(s) = sum_<ij> J_ij s_i s_j + sum_i h_i s_i. A positive
coupling therefore favours ANTI-alignment; many codebases use the opposite sign.
"""

from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any

import numpy as np
import numpy.typing as npt

SEED_LIMIT = 2**64


class ChimeraError(ValueError):
    """Raised when a graph, instance or configuration is inconsistent."""


@dataclass(frozen=True, slots=True)
class CellCoordinate:
    """Position of a vertex inside the Chimera lattice."""

    row: int
    col: int
    half: int
    index: int


@dataclass(frozen=True, slots=True)
class ColorClass:
    """
    One bipartition class prepared for vectorized sweeps.

    Neighbour tables are padded to the maximum degree; padded slots have
    `valid == False` and point at position 0 / edge 0.

    Attributes:
        positions: Active-vertex positions of this class
        neighbors: (V, D) positions of the neighbours of each vertex
        edge_ids: (V, D) index of the connecting edge in `graph.edges`
        valid: (V, D) mask of real neighbour slots
        degree: (V,) number of real neighbours
    """

    positions: npt.NDArray[np.intp]
    neighbors: npt.NDArray[np.intp]
    edge_ids: npt.NDArray[np.intp]
    valid: npt.NDArray[np.bool_]
    degree: npt.NDArray[np.int64]

    @property
    def size(self) -> int:
        """Number of vertices in the class."""
        return int(self.positions.shape[0])

    @property
    def max_degree(self) -> int:
        """Width of the padded neighbour table."""
        return int(self.neighbors.shape[1])


@dataclass(frozen=True, slots=True)
class ChimeraGraph:
    """
    Immutable Chimera graph C(r, c, k) with an optional dead-vertex set.

    Attributes:
        rows: Number of unit-cell rows (r)
        cols: Number of unit-cell columns (c)
        shore: Half-size of a unit cell (k, 4 on the reference hardware)
        dead_vertices: Vertex ids removed together with their edges
        edges: Sorted, unique (i, j) vertex-id pairs with i < j
    """

    rows: int
    cols: int
    shore: int
    dead_vertices: frozenset[int]
    edges: tuple[tuple[int, int], ...]
    active_vertices: tuple[int, ...] = field(init=False, repr=False, compare=False)
    edge_positions: tuple[tuple[int, int], ...] = field(init=False, repr=False, compare=False)
    _position: dict[int, int] = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        """Validate the graph and index the active vertices."""
        if self.rows < 1 or self.cols < 1 or self.shore < 1:
            raise ChimeraError("rows, cols and shore must all be at least 1")
        ideal = self.ideal_vertex_count
        outside = sorted(v for v in self.dead_vertices if not 0 <= v < ideal)
        if outside:
            raise ChimeraError(f"dead vertex {outside[0]} outside ideal range 0..{ideal - 1}")

        active = tuple(v for v in range(ideal) if v not in self.dead_vertices)
        position = {v: p for p, v in enumerate(active)}
        seen: set[tuple[int, int]] = set()
        for i, j in self.edges:
            if i >= j:
                raise ChimeraError(f"edge ({i}, {j}) must satisfy i < j")
            if i not in position or j not in position:
                dead = i if i not in position else j
                raise ChimeraError(f"edge ({i}, {j}) touches dead or unknown vertex {dead}")
            if (i, j) in seen:
                raise ChimeraError(f"duplicate edge ({i}, {j})")
            seen.add((i, j))

        object.__setattr__(self, "active_vertices", active)
        object.__setattr__(self, "_position", position)
        object.__setattr__(
            self, "edge_positions", tuple((position[i], position[j]) for i, j in self.edges)
        )

    @classmethod
    def create(
        cls, rows: int, cols: int, shore: int = 4, dead: Iterable[int] = ()
    ) -> "ChimeraGraph":
        """Factory method equivalent to `build_chimera`."""
        return build_chimera(rows, cols, shore, dead)

    @property
    def ideal_vertex_count(self) -> int:
        """Vertex count 2kRC of the undamaged graph."""
        return 2 * self.shore * self.rows * self.cols

    @property
    def ideal_edge_count(self) -> int:
        """Edge count of the undamaged graph."""
        k, r, c = self.shore, self.rows, self.cols
        return k * k * r * c + k * r * (c - 1) + k * c * (r - 1)

    @property
    def size(self) -> int:
        """Number of active vertices (N)."""
        return len(self.active_vertices)

    @property
    def label(self) -> str:
        """Shape label RxCxK."""
        return f"{self.rows}x{self.cols}x{self.shore}"

    def vertex_id(self, row: int, col: int, half: int, index: int) -> int:
        """Ideal vertex id of a cell coordinate."""
        return ((row * self.cols + col) * 2 + half) * self.shore + index

    def coordinate(self, vertex: int) -> CellCoordinate:
        """Cell coordinate of an ideal vertex id."""
        if not 0 <= vertex < self.ideal_vertex_count:
            raise ChimeraError(f"vertex {vertex} outside ideal range")
        cell, rest = divmod(vertex, 2 * self.shore)
        half, index = divmod(rest, self.shore)
        row, col = divmod(cell, self.cols)
        return CellCoordinate(row=row, col=col, half=half, index=index)

    def is_active(self, vertex: int) -> bool:
        """True unless the vertex is dead or outside the graph."""
        return vertex in self._position

    def position(self, vertex: int) -> int:
        """Index of an active vertex in `active_vertices`."""
        try:
            return self._position[vertex]
        except KeyError:
            raise ChimeraError(f"vertex {vertex} is dead or outside the graph") from None

    def color(self, vertex: int) -> int:
        """Bipartition class: cell halves alternate in a checkerboard over cells."""
        coord = self.coordinate(vertex)
        return (coord.row + coord.col + coord.half) % 2

    def neighbors(self, vertex: int) -> list[int]:
        """Active neighbours of a vertex, sorted."""
        return sorted(
            [j for i, j in self.edges if i == vertex] + [i for i, j in self.edges if j == vertex]
        )

    def degrees(self) -> dict[int, int]:
        """Degree of every active vertex."""
        counts = dict.fromkeys(self.active_vertices, 0)
        for i, j in self.edges:
            counts[i] += 1
            counts[j] += 1
        return counts

    def color_classes(self) -> tuple[ColorClass, ColorClass]:
        """Neighbour tables for the two bipartition classes, in sweep order."""
        adjacency: list[list[tuple[int, int]]] = [[] for _ in range(self.size)]
        for e, (pu, pv) in enumerate(self.edge_positions):
            adjacency[pu].append((pv, e))
            adjacency[pv].append((pu, e))
        width = max((len(a) for a in adjacency), default=0)

        classes = []
        for color in (0, 1):
            members = [p for p, v in enumerate(self.active_vertices) if self.color(v) == color]
            neighbors = np.zeros((len(members), width), dtype=np.intp)
            edge_ids = np.zeros((len(members), width), dtype=np.intp)
            valid = np.zeros((len(members), width), dtype=bool)
            for row, p in enumerate(members):
                for slot, (q, e) in enumerate(adjacency[p]):
                    neighbors[row, slot] = q
                    edge_ids[row, slot] = e
                    valid[row, slot] = True
            classes.append(
                ColorClass(
                    positions=np.asarray(members, dtype=np.intp),
                    neighbors=neighbors,
                    edge_ids=edge_ids,
                    valid=valid,
                    degree=valid.sum(axis=1).astype(np.int64),
                )
            )
        return classes[0], classes[1]

    def to_dict(self) -> dict[str, Any]:
        """Shape and dead set for logs and manifests."""
        return {
            "rows": self.rows,
            "cols": self.cols,
            "shore": self.shore,
            "dead_vertices": sorted(self.dead_vertices),
            "vertices": self.size,
            "edges": len(self.edges),
        }


def build_chimera(rows: int, cols: int, shore: int = 4, dead: Iterable[int] = ()) -> ChimeraGraph:
    """
    Build the Chimera graph C(rows, cols, shore) minus the dead vertices.

    Args:
        rows: Unit-cell rows
        cols: Unit-cell columns
        shore: Cell half-size k
        dead: Vertex ids to remove along with their incident edges

    Returns:
        The graph, deterministic for fixed inputs

    Raises:
        ChimeraError: If a size is below 1 or a dead id is outside the ideal range
    """
    if rows < 1 or cols < 1 or shore < 1:
        raise ChimeraError("rows, cols and shore must all be at least 1")
    dead_set = frozenset(int(v) for v in dead)
    ideal = 2 * shore * rows * cols
    outside = sorted(v for v in dead_set if not 0 <= v < ideal)
    if outside:
        raise ChimeraError(f"dead vertex {outside[0]} outside ideal range 0..{ideal - 1}")

    def vid(row: int, col: int, half: int, index: int) -> int:
        return ((row * cols + col) * 2 + half) * shore + index

    edges: list[tuple[int, int]] = []
    for row in range(rows):
        for col in range(cols):
            for a in range(shore):
                for b in range(shore):
                    edges.append((vid(row, col, 0, a), vid(row, col, 1, b)))
            for a in range(shore):
                if row + 1 < rows:
                    edges.append((vid(row, col, 0, a), vid(row + 1, col, 0, a)))
                if col + 1 < cols:
                    edges.append((vid(row, col, 1, a), vid(row, col + 1, 1, a)))

    kept = sorted((i, j) for i, j in edges if i not in dead_set and j not in dead_set)
    return ChimeraGraph(
        rows=rows, cols=cols, shore=shore, dead_vertices=dead_set, edges=tuple(kept)
    )


@dataclass(frozen=True, slots=True)
class SpinConfig:
    """
    Immutable Ising configuration over the active vertices.

    Attributes:
        values: s_i in {-1, +1}, ordered like `graph.active_vertices`
    """

    values: tuple[int, ...]

    def __post_init__(self) -> None:
        """Validate spin values."""
        if any(s not in (-1, 1) for s in self.values):
            raise ChimeraError("spin values must be -1 or +1")

    @classmethod
    def from_array(cls, values: npt.ArrayLike) -> "SpinConfig":
        """Configuration from any array of +-1 values."""
        return cls(values=tuple(int(s) for s in np.asarray(values).ravel()))

    @classmethod
    def random(cls, size: int, seed: int) -> "SpinConfig":
        """Uniformly random configuration from a seed."""
        rng = np.random.default_rng(seed)
        return cls.from_array(1 - 2 * rng.integers(0, 2, size=size))

    @property
    def size(self) -> int:
        """Number of spins."""
        return len(self.values)

    def as_array(self) -> npt.NDArray[np.int8]:
        """Spins as an int8 array."""
        return np.asarray(self.values, dtype=np.int8)

    def flipped(self) -> "SpinConfig":
        """Global spin flip of this configuration."""
        return SpinConfig(values=tuple(-s for s in self.values))


@dataclass(frozen=True, slots=True)
class Gauge:
    """
    Gauge transformation eta_i in {-1, +1} per active vertex.

    Attributes:
        values: eta_i, ordered like `graph.active_vertices`
    """

    values: tuple[int, ...]

    def __post_init__(self) -> None:
        """Validate gauge signs."""
        if any(g not in (-1, 1) for g in self.values):
            raise ChimeraError("gauge values must be -1 or +1")

    @classmethod
    def identity(cls, size: int) -> "Gauge":
        """Gauge that changes nothing."""
        return cls(values=(1,) * size)

    @classmethod
    def random(cls, size: int, seed: int) -> "Gauge":
        """Uniformly random gauge from a seed."""
        rng = np.random.default_rng(seed)
        return cls(values=tuple(int(g) for g in 1 - 2 * rng.integers(0, 2, size=size)))

    @property
    def size(self) -> int:
        """Number of vertices the gauge covers."""
        return len(self.values)


@dataclass(frozen=True, slots=True)
class Instance:
    """
    Immutable Ising instance on a Chimera graph.

    Couplings and fields are exact rationals so that integer instances have
    exact integer energies; perturbed instances carry terminating decimals.

    Attributes:
        graph: The underlying Chimera graph
        couplings: J_ij aligned with `graph.edges`
        fields: h_i aligned with `graph.active_vertices`
        seed: 64-bit seed that generated the instance
        id: Stable identifier
    """

    graph: ChimeraGraph
    couplings: tuple[Fraction, ...]
    fields: tuple[Fraction, ...]
    seed: int
    id: str
    coupling_array: npt.NDArray[np.float64] = field(init=False, repr=False, compare=False)
    field_array: npt.NDArray[np.float64] = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        """Validate the instance and cache float views of its parameters."""
        if len(self.couplings) != len(self.graph.edges):
            raise ChimeraError(
                f"expected {len(self.graph.edges)} couplings, got {len(self.couplings)}"
            )
        if len(self.fields) != self.graph.size:
            raise ChimeraError(f"expected {self.graph.size} fields, got {len(self.fields)}")
        if not 0 <= self.seed < SEED_LIMIT:
            raise ChimeraError("seed must be an unsigned 64-bit integer")
        if not self.id or any(ch.isspace() for ch in self.id):
            raise ChimeraError("instance id must be a non-empty token without whitespace")
        object.__setattr__(
            self, "coupling_array", np.asarray([float(j) for j in self.couplings], dtype=float)
        )
        object.__setattr__(
            self, "field_array", np.asarray([float(h) for h in self.fields], dtype=float)
        )

    @classmethod
    def create(
        cls,
        graph: ChimeraGraph,
        couplings: Sequence[Fraction | int | str],
        fields: Sequence[Fraction | int | str] | None = None,
        seed: int = 0,
        instance_id: str | None = None,
    ) -> "Instance":
        """Factory method accepting ints, strings or fractions."""
        return cls(
            graph=graph,
            couplings=tuple(Fraction(j) for j in couplings),
            fields=tuple(Fraction(h) for h in fields) if fields is not None
            else (Fraction(0),) * graph.size,
            seed=seed,
            id=instance_id or default_instance_id(graph, seed),
        )

    @property
    def size(self) -> int:
        """Number of active spins N."""
        return self.graph.size

    @property
    def is_integral(self) -> bool:
        """True when every coupling and field is an integer."""
        return all(j.denominator == 1 for j in self.couplings) and all(
            h.denominator == 1 for h in self.fields
        )

    @property
    def is_standard(self) -> bool:
        """True for the +-1 couplings, zero-field instances of the benchmark."""
        return all(abs(j) == 1 for j in self.couplings) and all(h == 0 for h in self.fields)

    @property
    def has_fields(self) -> bool:
        """True when any local field is non-zero."""
        return any(h != 0 for h in self.fields)

    def energy_bound(self) -> Fraction:
        """Upper bound on |H(s)| over all configurations."""
        return sum((abs(j) for j in self.couplings), Fraction(0)) + sum(
            (abs(h) for h in self.fields), Fraction(0)
        )

    def local_bound(self) -> Fraction:
        """Maximum over vertices of sum_j |J_ij| + |h_i|."""
        totals = [abs(h) for h in self.fields]
        for (pu, pv), j in zip(self.graph.edge_positions, self.couplings, strict=True):
            totals[pu] += abs(j)
            totals[pv] += abs(j)
        return max(totals, default=Fraction(0))

    def with_couplings(
        self, couplings: Sequence[Fraction], instance_id: str | None = None
    ) -> "Instance":
        """Create a copy carrying new couplings."""
        return Instance(
            graph=self.graph,
            couplings=tuple(couplings),
            fields=self.fields,
            seed=self.seed,
            id=instance_id or self.id,
        )

    def to_dict(self) -> dict[str, Any]:
        """Identity and shape for logs, without the couplings."""
        return {
            "id": self.id,
            "seed": self.seed,
            "graph": self.graph.to_dict(),
            "standard": self.is_standard,
        }


def default_instance_id(graph: ChimeraGraph, seed: int) -> str:
    return f"c{graph.label}-{seed:016x}"


def generate_instance(
    graph: ChimeraGraph, seed: int, instance_id: str | None = None
) -> Instance:
    """
    Draw a random +-J instance: each coupling is +1 or -1 with probability 1/2.

    Args:
        graph: Target graph
        seed: 64-bit seed; the same (graph, seed) always yields the same instance
        instance_id: Optional identifier, derived from graph and seed otherwise

    Returns:
        Instance with zero fields
    """
    rng = np.random.default_rng(seed)
    signs = 2 * rng.integers(0, 2, size=len(graph.edges)) - 1
    return Instance(
        graph=graph,
        couplings=tuple(Fraction(int(s)) for s in signs),
        fields=(Fraction(0),) * graph.size,
        seed=seed,
        id=instance_id or default_instance_id(graph, seed),
    )


def _check_dimension(instance: Instance, size: int, what: str) -> None:
    if size != instance.size:
        raise ChimeraError(f"{what} has {size} entries, instance has {instance.size} spins")


def energy(instance: Instance, config: SpinConfig) -> Fraction:
    """
    Exact energy H(s) = sum J_ij s_i s_j + sum h_i s_i.

    Raises:
        ChimeraError: If the configuration size does not match the instance
    """
    _check_dimension(instance, config.size, "configuration")
    s = config.values
    if instance.is_integral:
        total = sum(
            int(j) * s[pu] * s[pv]
            for (pu, pv), j in zip(instance.graph.edge_positions, instance.couplings, strict=True)
        ) + sum(int(h) * si for h, si in zip(instance.fields, s, strict=True))
        return Fraction(total)
    exact = sum(
        (j * s[pu] * s[pv]
         for (pu, pv), j in zip(instance.graph.edge_positions, instance.couplings, strict=True)),
        Fraction(0),
    )
    return exact + sum((h * si for h, si in zip(instance.fields, s, strict=True)), Fraction(0))


def energy_batch(instance: Instance, spins: npt.ArrayLike) -> npt.NDArray[np.float64]:
    """
    Vectorized energies of many configurations.

    Exact for integer couplings (float64 sums of small integers); use `energy`
    when rational exactness matters.

    Args:
        instance: The instance
        spins: (..., N) array of +-1 values

    Returns:
        Array of energies with the leading shape of `spins`
    """
    s = np.asarray(spins, dtype=np.float64)
    _check_dimension(instance, s.shape[-1], "configuration batch")
    if not instance.graph.edges:
        return np.asarray(s @ instance.field_array, dtype=np.float64)
    pos = np.asarray(instance.graph.edge_positions, dtype=np.intp)
    bonds = s[..., pos[:, 0]] * s[..., pos[:, 1]]
    return np.asarray(bonds @ instance.coupling_array + s @ instance.field_array)


def apply_gauge(instance: Instance, gauge: Gauge) -> Instance:
    """Transform J_ij -> eta_i eta_j J_ij and h_i -> eta_i h_i."""
    _check_dimension(instance, gauge.size, "gauge")
    eta = gauge.values
    couplings = tuple(
        j * eta[pu] * eta[pv]
        for (pu, pv), j in zip(instance.graph.edge_positions, instance.couplings, strict=True)
    )
    fields = tuple(h * e for h, e in zip(instance.fields, eta, strict=True))
    return Instance(
        graph=instance.graph,
        couplings=couplings,
        fields=fields,
        seed=instance.seed,
        id=instance.id,
    )


def apply_gauge_config(config: SpinConfig, gauge: Gauge) -> SpinConfig:
    """Transform s_i -> eta_i s_i."""
    if config.size != gauge.size:
        raise ChimeraError(f"gauge has {gauge.size} entries, configuration has {config.size}")
    return SpinConfig(values=tuple(s * e for s, e in zip(config.values, gauge.values, strict=True)))
