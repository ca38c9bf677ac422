"""
Run Entity - Temperature ladders, replica state and Monte Carlo run outputs.

Copies are addressed as (replica r, slot k). The permutation pi[r, k] is the
0-based ladder index of copy (r, k); WalkTrace series use the 1-based indices
i_t = pi + 1.
"""

from dataclasses import dataclass
from typing import Any

import numpy as np
import numpy.typing as npt

from src.domain.entities.chimera import ChimeraGraph, SpinConfig

LOW_TEMPERATURE_RANGE = (0.045, 0.2)
HIGH_TEMPERATURE_RANGE = (0.21, 1.632)
LOW_TEMPERATURE_COUNT = 12
HIGH_TEMPERATURE_COUNT = 18
SHORT_LAGS = 64  # lags kept at full resolution when traces are decimated


@dataclass(frozen=True, slots=True)
class TemperatureLadder:
    """
    Immutable, strictly increasing list of positive temperatures.

    Attributes:
        temperatures: T_1 < T_2 < ... < T_{N_T}, in units of J
    """

    temperatures: tuple[float, ...]

    def __post_init__(self) -> None:
        """Validate ordering and positivity."""
        if not self.temperatures:
            raise ValueError("Ladder must contain at least one temperature")
        if any(t <= 0 for t in self.temperatures):
            raise ValueError("Temperatures must be positive")
        if any(b <= a for a, b in zip(self.temperatures, self.temperatures[1:], strict=False)):
            raise ValueError("Temperatures must be strictly increasing")

    @classmethod
    def create(cls, temperatures: npt.ArrayLike) -> "TemperatureLadder":
        """Ladder from any array-like of temperatures."""
        return cls(temperatures=tuple(float(t) for t in np.asarray(temperatures).ravel()))

    @property
    def size(self) -> int:
        """Number of ladder points N_T."""
        return len(self.temperatures)

    def as_array(self) -> npt.NDArray[np.float64]:
        """Temperatures as a float array."""
        return np.asarray(self.temperatures, dtype=np.float64)

    def nearest_index(self, temperature: float) -> int:
        """0-based index of the ladder point closest to `temperature`."""
        return int(np.argmin(np.abs(self.as_array() - temperature)))


def default_ladder() -> TemperatureLadder:
    """
    The 30-point benchmark ladder.

    Indices 1..12 are evenly spaced on [0.045, 0.2]; indices 13..30 are evenly
    spaced on [0.21, 1.632].
    """
    low = np.linspace(*LOW_TEMPERATURE_RANGE, LOW_TEMPERATURE_COUNT)
    high = np.linspace(*HIGH_TEMPERATURE_RANGE, HIGH_TEMPERATURE_COUNT)
    return TemperatureLadder.create(np.concatenate([low, high]))


@dataclass(frozen=True, slots=True)
class RunConfig:
    """
    Configuration of one parallel-tempering run.

    Attributes:
        steps: Elementary steps (sweeps_per_step sweeps plus one swap round)
        seed: Master seed of the run
        sweeps_per_step: Full-lattice sweeps per elementary step
        replicas: Independent replicas R per temperature
        checkpoints: Evenly spaced snapshot points
        store_configs: Store spin snapshots at the checkpoints
        check_invariants: Verify pi after every swap and energies at checkpoints
        trace_budget: Most trace samples kept per copy; longer runs are decimated
            and carry exact short-lag sums instead. None keeps every step.
    """

    steps: int
    seed: int
    sweeps_per_step: int = 10
    replicas: int = 4
    checkpoints: int = 100
    store_configs: bool = False
    check_invariants: bool = False
    trace_budget: int | None = None

    def __post_init__(self) -> None:
        """Validate the run configuration."""
        if self.steps < 0:
            raise ValueError("steps cannot be negative")
        if self.sweeps_per_step < 1:
            raise ValueError("sweeps_per_step must be at least 1")
        if self.replicas < 1:
            raise ValueError("replicas must be at least 1")
        if self.checkpoints < 1:
            raise ValueError("checkpoints must be at least 1")
        if self.store_configs and self.steps and self.steps % self.checkpoints:
            raise ValueError("steps must be divisible by checkpoints when storing configurations")
        if self.trace_budget is not None and self.trace_budget < 1:
            raise ValueError("trace_budget must be at least 1")

    @property
    def checkpoint_interval(self) -> int:
        """Elementary steps between checkpoints."""
        return max(self.steps // self.checkpoints, 1)

    @property
    def trace_stride(self) -> int:
        """Steps per stored trace sample: 1 unless the run exceeds the budget."""
        if self.trace_budget is None or self.steps <= self.trace_budget:
            return 1
        return -(-self.steps // self.trace_budget)

    @property
    def total_sweeps(self) -> int:
        """Full-lattice sweeps of the whole run."""
        return self.steps * self.sweeps_per_step


@dataclass(frozen=True, slots=True, eq=False)
class ReplicaSet:
    """
    Scalar replica state of one instance.

    Attributes:
        graph: Graph shared by every copy
        spins: (R, N_T, N) int8 spins of copy (r, k)
        permutation: (R, N_T) 0-based ladder index of copy (r, k)
    """

    graph: ChimeraGraph
    spins: npt.NDArray[np.int8]
    permutation: npt.NDArray[np.int64]

    def __post_init__(self) -> None:
        """Validate shapes, spin values and the permutation."""
        if self.spins.ndim != 3 or self.spins.shape[2] != self.graph.size:
            raise ValueError("spins must have shape (replicas, temperatures, N)")
        if self.permutation.shape != self.spins.shape[:2]:
            raise ValueError("permutation must have shape (replicas, temperatures)")
        if not np.all(np.abs(self.spins) == 1):
            raise ValueError("spins must be -1 or +1")
        expected = np.arange(self.spins.shape[1])
        if not np.all(np.sort(self.permutation, axis=1) == expected):
            raise ValueError("each replica's permutation must be a permutation of the ladder")

    @classmethod
    def random(
        cls, graph: ChimeraGraph, replicas: int, temperatures: int, seed: int
    ) -> "ReplicaSet":
        """Uniformly random spins with every copy at its own ladder slot."""
        rng = np.random.default_rng(seed)
        spins = (1 - 2 * rng.integers(0, 2, size=(replicas, temperatures, graph.size))).astype(
            np.int8
        )
        permutation = np.tile(np.arange(temperatures, dtype=np.int64), (replicas, 1))
        return cls(graph=graph, spins=spins, permutation=permutation)

    @property
    def replicas(self) -> int:
        """Replica count R."""
        return int(self.spins.shape[0])

    @property
    def temperatures(self) -> int:
        """Ladder size N_T."""
        return int(self.spins.shape[1])

    @property
    def lanes(self) -> int:
        """Copies R * N_T."""
        return self.replicas * self.temperatures

    def lane_spins(self) -> npt.NDArray[np.int8]:
        """(R * N_T, N) view with lane = r * N_T + k."""
        return self.spins.reshape(self.lanes, self.graph.size)

    def config_at(self, replica: int, temperature_index: int) -> SpinConfig:
        """Configuration currently held at a ladder index."""
        slot = int(np.flatnonzero(self.permutation[replica] == temperature_index)[0])
        return SpinConfig.from_array(self.spins[replica, slot])


@dataclass(frozen=True, slots=True, eq=False)
class PackedReplicaSet:
    """
    Bit-packed replica state: word w, bit b holds lane w * word_size + b.

    A set bit encodes s = -1. Lanes may span several instances on one graph.

    Attributes:
        graph: Graph shared by every lane
        words: (W, N) uint64 spin words
        word_size: Lanes per word (M, 1..64)
        lane_counts: Lanes contributed by each packed replica set, in order
        permutations: Per packed replica set (R, N_T) permutation
    """

    graph: ChimeraGraph
    words: npt.NDArray[np.uint64]
    word_size: int
    lane_counts: tuple[int, ...]
    permutations: tuple[npt.NDArray[np.int64], ...]

    def __post_init__(self) -> None:
        """Validate the word layout."""
        if not 1 <= self.word_size <= 64:
            raise ValueError("word_size must be between 1 and 64")
        needed = -(-self.n_lanes // self.word_size)
        if self.words.shape != (needed, self.graph.size):
            raise ValueError("word array does not match lane count and graph size")

    @property
    def n_lanes(self) -> int:
        """Lanes over every packed replica set."""
        return sum(self.lane_counts)


def sample_count(steps: int, stride: int) -> int:
    """Stored samples of a run recorded every `stride` steps."""
    return -(-steps // stride)


@dataclass(frozen=True, slots=True, eq=False)
class WalkSummary:
    """
    Exact walk statistics accumulated step by step during a decimated run.

    Attributes:
        short_lag_sums: (copies, SHORT_LAGS) sum over t of i_t * i_{t+s}, s = 0..63
        occupancy: (copies, N_T) steps each copy spent at each ladder index
    """

    short_lag_sums: npt.NDArray[np.int64]
    occupancy: npt.NDArray[np.int64]

    def __post_init__(self) -> None:
        """Validate that both blocks describe the same copies."""
        if self.short_lag_sums.ndim != 2 or self.short_lag_sums.shape[1] != SHORT_LAGS:
            raise ValueError(f"short_lag_sums must have shape (copies, {SHORT_LAGS})")
        if self.occupancy.ndim != 2 or self.occupancy.shape[0] != self.short_lag_sums.shape[0]:
            raise ValueError("occupancy must have one row per copy")


@dataclass(frozen=True, slots=True, eq=False)
class RunOutput:
    """
    Immutable result of a parallel-tempering run on one instance.

    With a trace stride d > 1 the traces hold i_t at t = 0, d, 2d, ..., each
    energy row is the mean over its d steps, and `walk` carries the exact
    statistics the decimated traces cannot.

    Attributes:
        instance_id: Identifier of the simulated instance
        seed: Master seed of the run
        ladder: Temperature ladder
        replicas: Replica count R
        steps: Elementary steps executed
        sweeps_per_step: Sweeps per elementary step
        traces: (R * N_T, samples) int16 1-based ladder index of each copy
        energies: (samples, N_T) replica-averaged energy at each temperature
        snapshot_steps: Elementary step of each checkpoint
        snapshots: (checkpoints, R, N_T, N) int8 configurations by ladder index
        snapshot_energies: (checkpoints, R, N_T) energies of the snapshots
        min_energy: Lowest energy visited by any copy
        best_config: A configuration attaining `min_energy`
        swap_rates: (N_T - 1,) acceptance rate of each adjacent pair
        final_state: Replica state after the last step
        trace_stride: Steps per stored trace sample and energy row
        walk: Exact walk statistics, present when trace_stride > 1
    """

    instance_id: str
    seed: int
    ladder: TemperatureLadder
    replicas: int
    steps: int
    sweeps_per_step: int
    traces: npt.NDArray[np.int16]
    energies: npt.NDArray[np.float64]
    snapshot_steps: npt.NDArray[np.int64]
    snapshots: npt.NDArray[np.int8]
    snapshot_energies: npt.NDArray[np.float64]
    min_energy: float
    best_config: SpinConfig
    swap_rates: npt.NDArray[np.float64]
    final_state: ReplicaSet | None = None
    trace_stride: int = 1
    walk: WalkSummary | None = None

    def __post_init__(self) -> None:
        """Validate array shapes against the run metadata."""
        copies = self.replicas * self.ladder.size
        if self.trace_stride < 1:
            raise ValueError("trace_stride must be at least 1")
        if (self.trace_stride > 1) != (self.walk is not None):
            raise ValueError("decimated runs, and only they, carry walk statistics")
        samples = sample_count(self.steps, self.trace_stride)
        if self.traces.shape != (copies, samples):
            raise ValueError("trace lengths must equal the stored sample count for every copy")
        if self.energies.shape != (samples, self.ladder.size):
            raise ValueError("energy series must have shape (samples, temperatures)")
        if self.walk is not None and self.walk.occupancy.shape != (copies, self.ladder.size):
            raise ValueError("walk statistics must cover every copy and ladder index")
        if self.snapshots.shape[:3] != (len(self.snapshot_steps), self.replicas, self.ladder.size):
            raise ValueError("snapshot block must hold R * N_T configurations per checkpoint")

    @property
    def n_copies(self) -> int:
        """Copies R * N_T."""
        return self.replicas * self.ladder.size

    @property
    def samples(self) -> int:
        """Stored trace samples per copy."""
        return int(self.traces.shape[1])

    @property
    def n_snapshots(self) -> int:
        """Stored configurations over every checkpoint."""
        return int(self.snapshots.shape[0] * self.replicas * self.ladder.size)

    def snapshot_matrix(self) -> npt.NDArray[np.int8]:
        """All stored configurations as an (n_snapshots, N) matrix."""
        return self.snapshots.reshape(-1, self.snapshots.shape[-1])

    def to_dict(self) -> dict[str, Any]:
        """Run metadata as a dictionary for logs and tables."""
        return {
            "instance_id": self.instance_id,
            "seed": self.seed,
            "replicas": self.replicas,
            "temperatures": self.ladder.size,
            "steps": self.steps,
            "sweeps_per_step": self.sweeps_per_step,
            "checkpoints": int(self.snapshots.shape[0]),
            "trace_stride": self.trace_stride,
            "min_energy": self.min_energy,
        }


@dataclass(frozen=True, slots=True)
class HeuristicResult:
    """
    Outcome of a bounded heuristic solve.

    Attributes:
        instance_id: Identifier of the solved instance
        first_hit_sweeps: Sweeps elapsed at the first visit of energy <= target,
            None when the target was not reached
        best_energy: Lowest energy visited
        best_config: Configuration attaining `best_energy`
        sweeps: Sweeps executed
    """

    instance_id: str
    first_hit_sweeps: int | None
    best_energy: float
    best_config: SpinConfig
    sweeps: int

    @property
    def found(self) -> bool:
        """Whether the target energy was reached."""
        return self.first_hit_sweeps is not None
