"""
Parallel Tempering Service - Metropolis sweeps plus replica-exchange swaps.

Each elementary step runs `sweeps_per_step` full-lattice sweeps (one pass over
each bipartition class in turn) followed by one swap round over adjacent ladder
pairs, alternating even and odd pairs on successive steps.

Random streams: the instance at batch position p owns the stream
PCG64(SeedSequence(seed, spawn_key=(p,))). It first draws the initial spins,
then per half-sweep one raw 64-bit word per (copy, vertex) of the class, and
per swap round one uniform per (replica, pair). Lanes are laid out as
lane = (p * R + r) * N_T + k, so kernels with different spin layouts consume
exactly the same draws.
"""

import math
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np
import numpy.typing as npt
import structlog

from src.domain.entities.chimera import (
    ChimeraGraph,
    ColorClass,
    Instance,
    SpinConfig,
    energy_batch,
)
from src.domain.entities.run import (
    SHORT_LAGS,
    HeuristicResult,
    ReplicaSet,
    RunConfig,
    RunOutput,
    TemperatureLadder,
    WalkSummary,
    sample_count,
)
from src.domain.ports.engine_port import (
    AcceptanceTable,
    EnergyBookkeepingError,
    KernelFactoryPort,
    PermutationError,
    SamplerPort,
    SweepKernel,
)

logger = structlog.get_logger(__name__)

TARGET_TOLERANCE = 1e-9
WINDOW_CHUNK = 1024  # steps per short-lag accumulation pass


def lane_stream(seed: int, position: int) -> np.random.Generator:
    """Random stream owned by the instance at a batch position."""
    return np.random.Generator(
        np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(position,)))
    )


def pt_swap(
    permutation: npt.NDArray[np.int64],
    energies: npt.NDArray[np.float64],
    ladder: TemperatureLadder,
    rng: np.random.Generator,
    parity: int = 0,
) -> tuple[npt.NDArray[np.int64], npt.NDArray[np.bool_]]:
    """
    One round of temperature swaps between adjacent ladder points.

    Pairs (m, m + 1) with m = parity, parity + 2, ... are attempted in every
    replica. A swap between the copy a at T_m and the copy b at T_{m+1} is
    accepted with probability min(1, exp[(1/T_m - 1/T_{m+1})(E_a - E_b)]).
    Only the permutation changes; spins stay with their copies.

    Args:
        permutation: (R, N_T) 0-based ladder index of each copy
        energies: (R, N_T) current energy of each copy
        ladder: Temperature ladder
        rng: Stream supplying one uniform per attempted pair
        parity: 0 for even pairs, 1 for odd pairs

    Returns:
        (new permutation, (R, pairs) accepted flags)
    """
    perm = np.array(permutation, dtype=np.int64, copy=True)
    replicas, n_temps = perm.shape
    lower = np.arange(parity % 2, n_temps - 1, 2)
    if lower.size == 0:
        return perm, np.zeros((replicas, 0), dtype=bool)

    beta = 1.0 / ladder.as_array()
    holder = np.argsort(perm, axis=1)
    cold = holder[:, lower]
    hot = holder[:, lower + 1]
    rows = np.arange(replicas)[:, None]
    exponent = (beta[lower] - beta[lower + 1])[None, :] * (energies[rows, cold] - energies[rows, hot])
    u = rng.random((replicas, lower.size))
    accepted = u < np.exp(np.minimum(exponent, 0.0))

    r_idx, p_idx = np.nonzero(accepted)
    perm[r_idx, cold[r_idx, p_idx]] = lower[p_idx] + 1
    perm[r_idx, hot[r_idx, p_idx]] = lower[p_idx]
    return perm, accepted


def check_permutation(permutation: npt.NDArray[np.int64]) -> None:
    """
    Raises:
        PermutationError: If a replica's row is not a permutation of the ladder
    """
    expected = np.arange(permutation.shape[1])
    if not np.array_equal(np.sort(permutation, axis=1), np.broadcast_to(expected, permutation.shape)):
        raise PermutationError(f"corrupted temperature permutation: {permutation.tolist()}")


def by_temperature(values: npt.NDArray, permutation: npt.NDArray[np.int64]) -> npt.NDArray:
    """Reorder per-copy values (R, N_T, ...) so that axis 1 is the ladder index."""
    holder = np.argsort(permutation, axis=1)
    index = holder.reshape(holder.shape + (1,) * (values.ndim - 2))
    return np.take_along_axis(values, index, axis=1)


@dataclass
class _GraphBatch:
    """Mutable simulation state of the instances sharing one graph."""

    graph: ChimeraGraph
    positions: list[int]
    instances: list[Instance]
    streams: list[np.random.Generator]
    kernel: SweepKernel
    classes: tuple[ColorClass, ColorClass]
    permutations: npt.NDArray[np.int64]  # (n, R, N_T)
    energies: npt.NDArray[np.float64]  # (n, R, N_T)
    best_energy: npt.NDArray[np.float64]
    best_spins: list[npt.NDArray[np.int8]]
    swap_accepts: npt.NDArray[np.int64]
    swap_attempts: npt.NDArray[np.int64]

    @property
    def size(self) -> int:
        """Number of instances in the batch."""
        return len(self.instances)

    def temperature_index(self) -> npt.NDArray[np.int64]:
        """Ladder index of every lane, flattened."""
        return self.permutations.reshape(-1)

    def lane_block(self, i: int) -> npt.NDArray[np.int8]:
        """(copies, N) spins of batch member i."""
        spins = self.kernel.spins()
        per = self.permutations.shape[1] * self.permutations.shape[2]
        return spins[i * per : (i + 1) * per].reshape(*self.permutations.shape[1:], -1)


class _WalkRecorder:
    """
    Trace and energy recording of one graph batch.

    Every `stride`-th ladder index is stored and energies are averaged over
    blocks of `stride` steps. With stride > 1 the short-lag sums and the ladder
    occupancy are accumulated exactly, one chunk of steps at a time, so memory
    is bounded by the sample budget rather than the run length.
    """

    def __init__(self, n: int, copies: int, n_temps: int, steps: int, stride: int):
        samples = sample_count(steps, stride)
        self.stride = stride
        self.steps = steps
        self.traces = np.zeros((n, copies, samples), dtype=np.int16)
        self.energies = np.zeros((n, samples, n_temps))
        self._block = np.zeros((n, n_temps))
        self.exact = stride > 1
        if self.exact:
            self.lag_sums = np.zeros((n, copies, SHORT_LAGS), dtype=np.int64)
            self.occupancy = np.zeros((n * copies, n_temps), dtype=np.int64)
            self._rows = np.arange(n * copies)
            self._window = np.zeros((n, copies, SHORT_LAGS - 1 + WINDOW_CHUNK), dtype=np.int16)
            self._fill = 0
            self._counted = 0

    def record(
        self, step: int, index: npt.NDArray[np.int16], energy: npt.NDArray[np.float64]
    ) -> None:
        """
        Store step `step`.

        Args:
            step: 0-based elementary step
            index: (n, copies) 1-based ladder index of every copy
            energy: (n, N_T) replica-averaged energy by ladder index
        """
        sample, offset = divmod(step, self.stride)
        if offset == 0:
            self.traces[:, :, sample] = index
        self._block += energy
        if offset == self.stride - 1 or step == self.steps - 1:
            self.energies[:, sample] = self._block / (offset + 1)
            self._block[:] = 0.0
        if self.exact:
            self.occupancy[self._rows, index.reshape(-1) - 1] += 1
            self._window[:, :, self._fill] = index
            self._fill += 1
            if self._fill == self._window.shape[2]:
                self._flush()

    def _flush(self) -> None:
        # pairs are counted at their later step; the carried tail is already counted
        fill, start = self._fill, self._counted
        for s in range(SHORT_LAGS):
            first = max(start, s)
            if first >= fill:
                continue
            self.lag_sums[:, :, s] += np.einsum(
                "nct,nct->nc",
                self._window[:, :, first - s : fill - s],
                self._window[:, :, first:fill],
                dtype=np.int64,
            )
        keep = min(SHORT_LAGS - 1, fill)
        self._window[:, :, :keep] = self._window[:, :, fill - keep : fill]
        self._fill = self._counted = keep

    def walk(self, i: int) -> WalkSummary | None:
        """Exact walk statistics of batch member i, None for full traces."""
        if not self.exact:
            return None
        if self._fill > self._counted:
            self._flush()
        copies = self.traces.shape[1]
        return WalkSummary(
            short_lag_sums=self.lag_sums[i].copy(),
            occupancy=self.occupancy[i * copies : (i + 1) * copies].copy(),
        )


class ParallelTemperingService(SamplerPort):
    """
    Parallel-tempering engine over batches of instances.

    Instances sharing a graph are simulated together as lanes of one kernel;
    the kernel factory decides between the scalar and the bit-packed layout.
    """

    def __init__(self, kernel_factory: KernelFactoryPort):
        """
        Initialize the service.

        Args:
            kernel_factory: Builds the sweep kernel for each graph batch
        """
        self.kernel_factory = kernel_factory
        logger.info("ParallelTemperingService initialized")

    def _prepare(
        self,
        group: list[tuple[int, Instance]],
        ladder: TemperatureLadder,
        config: RunConfig,
    ) -> _GraphBatch:
        graph = group[0][1].graph
        instances = [inst for _, inst in group]
        positions = [p for p, _ in group]
        replicas, n_temps = config.replicas, ladder.size
        streams = [lane_stream(config.seed, p) for p in positions]

        spins = np.concatenate(
            [
                (1 - 2 * g.integers(0, 2, size=(replicas * n_temps, graph.size))).astype(np.int8)
                for g in streams
            ]
        )
        table = None
        if all(inst.is_integral for inst in instances):
            bound = 2 * math.ceil(max(inst.local_bound() for inst in instances))
            table = AcceptanceTable(ladder, bound)
        classes = graph.color_classes()
        kernel = self.kernel_factory.create(
            graph, classes, instances, replicas * n_temps, spins, table, ladder.as_array()
        )

        permutations = np.tile(np.arange(n_temps, dtype=np.int64), (len(instances), replicas, 1))
        energies = np.stack(
            [
                energy_batch(inst, spins[i * replicas * n_temps : (i + 1) * replicas * n_temps])
                for i, inst in enumerate(instances)
            ]
        ).reshape(len(instances), replicas, n_temps)

        batch = _GraphBatch(
            graph=graph,
            positions=positions,
            instances=instances,
            streams=streams,
            kernel=kernel,
            classes=classes,
            permutations=permutations,
            energies=energies,
            best_energy=np.full(len(instances), np.inf),
            best_spins=[np.ones(graph.size, dtype=np.int8) for _ in instances],
            swap_accepts=np.zeros((len(instances), max(n_temps - 1, 0)), dtype=np.int64),
            swap_attempts=np.zeros((len(instances), max(n_temps - 1, 0)), dtype=np.int64),
        )
        self._track_minimum(batch)
        return batch

    def _sweep(self, batch: _GraphBatch) -> None:
        copies = batch.permutations.shape[1] * batch.permutations.shape[2]
        for color in (0, 1):
            width = batch.classes[color].size
            draws = np.concatenate(
                [g.bit_generator.random_raw((copies, width)) for g in batch.streams]
            ).astype(np.uint64)
            delta = batch.kernel.half_sweep(color, batch.temperature_index(), draws)
            batch.energies += delta.reshape(batch.energies.shape)
        self._track_minimum(batch)

    @staticmethod
    def _track_minimum(batch: _GraphBatch) -> None:
        flat = batch.energies.reshape(batch.size, -1)
        lows = flat.min(axis=1)
        copies = flat.shape[1]
        for i in np.flatnonzero(lows < batch.best_energy):
            lane = i * copies + int(np.argmin(flat[i]))
            batch.best_energy[i] = lows[i]
            batch.best_spins[i] = batch.kernel.lane_spins(lane)

    @staticmethod
    def _swap(batch: _GraphBatch, ladder: TemperatureLadder, step: int, checked: bool) -> None:
        parity = step % 2
        for i, stream in enumerate(batch.streams):
            perm, accepted = pt_swap(
                batch.permutations[i], batch.energies[i], ladder, stream, parity
            )
            if checked:
                check_permutation(perm)
            batch.permutations[i] = perm
            if accepted.size:
                pairs = np.arange(parity, ladder.size - 1, 2)
                batch.swap_accepts[i, pairs] += accepted.sum(axis=0)
                batch.swap_attempts[i, pairs] += accepted.shape[0]

    @staticmethod
    def _verify_energies(batch: _GraphBatch) -> None:
        for i, inst in enumerate(batch.instances):
            block = batch.lane_block(i)
            recomputed = energy_batch(inst, block)
            if inst.is_integral:
                consistent = np.array_equal(recomputed, batch.energies[i])
            else:
                consistent = np.allclose(recomputed, batch.energies[i], atol=1e-6)
            if not consistent:
                raise EnergyBookkeepingError(
                    f"incremental energies of {inst.id} disagree with recomputation"
                )

    def _group(self, instances: Sequence[Instance]) -> list[list[tuple[int, Instance]]]:
        groups: dict[ChimeraGraph, list[tuple[int, Instance]]] = {}
        for p, inst in enumerate(instances):
            groups.setdefault(inst.graph, []).append((p, inst))
        return list(groups.values())

    def sweep(
        self,
        replica_set: ReplicaSet,
        instance: Instance,
        ladder: TemperatureLadder,
        rng: np.random.Generator,
    ) -> ReplicaSet:
        """
        One full-lattice Metropolis sweep of every copy at its current temperature.

        Args:
            replica_set: Current state
            instance: Instance on the replica set's graph
            ladder: Temperature ladder
            rng: Stream supplying one raw 64-bit word per proposal

        Returns:
            New replica set; the permutation is unchanged
        """
        table = None
        if instance.is_integral:
            table = AcceptanceTable(ladder, 2 * math.ceil(instance.local_bound()))
        classes = instance.graph.color_classes()
        kernel = self.kernel_factory.create(
            instance.graph,
            classes,
            [instance],
            replica_set.lanes,
            replica_set.lane_spins(),
            table,
            ladder.as_array(),
        )
        index = replica_set.permutation.reshape(-1)
        for color in (0, 1):
            draws = rng.bit_generator.random_raw((replica_set.lanes, classes[color].size))
            kernel.half_sweep(color, index, np.asarray(draws, dtype=np.uint64))
        return ReplicaSet(
            graph=replica_set.graph,
            spins=kernel.spins().reshape(replica_set.spins.shape),
            permutation=replica_set.permutation.copy(),
        )

    def run(
        self,
        instances: Sequence[Instance],
        ladder: TemperatureLadder,
        config: RunConfig,
    ) -> list[RunOutput]:
        outputs: dict[int, RunOutput] = {}
        for group in self._group(instances):
            for p, output in self._run_group(group, ladder, config):
                outputs[p] = output
        return [outputs[p] for p in range(len(instances))]

    def _run_group(
        self,
        group: list[tuple[int, Instance]],
        ladder: TemperatureLadder,
        config: RunConfig,
    ) -> list[tuple[int, RunOutput]]:
        batch = self._prepare(group, ladder, config)
        n, replicas, n_temps, steps = batch.size, config.replicas, ladder.size, config.steps
        stride = config.trace_stride
        logger.info(
            "Run started",
            graph=batch.graph.label,
            instances=n,
            steps=steps,
            lanes=batch.kernel.n_lanes,
            trace_stride=stride,
        )

        recorder = _WalkRecorder(n, replicas * n_temps, n_temps, steps, stride)
        snap_steps: list[int] = []
        snapshots: list[list[npt.NDArray[np.int8]]] = [[] for _ in range(n)]
        snap_energies: list[list[npt.NDArray[np.float64]]] = [[] for _ in range(n)]

        def checkpoint(step: int) -> None:
            if config.check_invariants:
                self._verify_energies(batch)
            if not config.store_configs:
                return
            snap_steps.append(step)
            for i in range(n):
                ordered = by_temperature(batch.lane_block(i), batch.permutations[i])
                snapshots[i].append(ordered)
                snap_energies[i].append(energy_batch(batch.instances[i], ordered))

        if steps == 0:
            checkpoint(0)
        interval = config.checkpoint_interval
        for step in range(steps):
            for _ in range(config.sweeps_per_step):
                self._sweep(batch)
            self._swap(batch, ladder, step, config.check_invariants)
            level_energy = np.stack(
                [
                    by_temperature(batch.energies[i], batch.permutations[i]).mean(axis=0)
                    for i in range(n)
                ]
            )
            recorder.record(
                step, (batch.permutations.reshape(n, -1) + 1).astype(np.int16), level_energy
            )
            if (step + 1) % interval == 0:
                checkpoint(step + 1)

        results = []
        per = replicas * n_temps
        attempts = np.maximum(batch.swap_attempts, 1)
        final = batch.kernel.spins()
        for i, (p, inst) in enumerate(group):
            stored = (
                np.stack(snapshots[i])
                if snapshots[i]
                else np.zeros((0, replicas, n_temps, batch.graph.size), dtype=np.int8)
            )
            stored_energy = (
                np.stack(snap_energies[i]) if snap_energies[i] else np.zeros((0, replicas, n_temps))
            )
            output = RunOutput(
                instance_id=inst.id,
                seed=config.seed,
                ladder=ladder,
                replicas=replicas,
                steps=steps,
                sweeps_per_step=config.sweeps_per_step,
                traces=recorder.traces[i],
                energies=recorder.energies[i],
                snapshot_steps=np.asarray(snap_steps, dtype=np.int64),
                snapshots=stored,
                snapshot_energies=stored_energy,
                min_energy=float(batch.best_energy[i]),
                best_config=SpinConfig.from_array(batch.best_spins[i]),
                swap_rates=batch.swap_accepts[i] / attempts[i],
                final_state=ReplicaSet(
                    graph=batch.graph,
                    spins=final[i * per : (i + 1) * per].reshape(replicas, n_temps, -1),
                    permutation=batch.permutations[i].copy(),
                ),
                trace_stride=stride,
                walk=recorder.walk(i),
            )
            results.append((p, output))
        logger.info("Run completed", graph=batch.graph.label, instances=n, steps=steps)
        return results

    def solve_batch(
        self,
        instances: Sequence[Instance],
        ladder: TemperatureLadder,
        config: RunConfig,
        targets: Sequence[float] | None = None,
    ) -> list[HeuristicResult]:
        if targets is not None and len(targets) != len(instances):
            raise ValueError("one target energy per instance is required")
        results: dict[int, HeuristicResult] = {}
        for group in self._group(instances):
            goal = np.asarray(
                [targets[p] if targets is not None else -np.inf for p, _ in group], dtype=float
            )
            for p, result in self._solve_group(group, ladder, config, goal):
                results[p] = result
        return [results[p] for p in range(len(instances))]

    def _solve_group(
        self,
        group: list[tuple[int, Instance]],
        ladder: TemperatureLadder,
        config: RunConfig,
        goal: npt.NDArray[np.float64],
    ) -> list[tuple[int, HeuristicResult]]:
        batch = self._prepare(group, ladder, config)
        first_hit: list[int | None] = [None] * batch.size
        sweeps = 0

        def record_hits() -> None:
            for i in np.flatnonzero(batch.best_energy <= goal + TARGET_TOLERANCE):
                if first_hit[i] is None:
                    first_hit[i] = sweeps

        record_hits()
        for step in range(config.steps):
            if all(hit is not None for hit in first_hit):
                break
            for _ in range(config.sweeps_per_step):
                self._sweep(batch)
                sweeps += 1
                record_hits()
            self._swap(batch, ladder, step, config.check_invariants)

        logger.debug(
            "Heuristic batch finished",
            graph=batch.graph.label,
            instances=batch.size,
            sweeps=sweeps,
            found=sum(hit is not None for hit in first_hit),
        )
        return [
            (
                p,
                HeuristicResult(
                    instance_id=inst.id,
                    first_hit_sweeps=first_hit[i],
                    best_energy=float(batch.best_energy[i]),
                    best_config=SpinConfig.from_array(batch.best_spins[i]),
                    sweeps=sweeps,
                ),
            )
            for i, (p, inst) in enumerate(group)
        ]

    def run_heuristic(
        self,
        instance: Instance,
        ladder: TemperatureLadder,
        target_energy: float,
        max_steps: int,
        seed: int,
        sweeps_per_step: int = 10,
        replicas: int = 4,
    ) -> HeuristicResult:
        """
        Time to first visit of an energy at or below the target.

        Args:
            instance: Instance to solve
            ladder: Temperature ladder
            target_energy: Target, usually the exact ground-state energy
            max_steps: Elementary-step budget
            seed: Master seed

        Returns:
            HeuristicResult; `first_hit_sweeps` is None when not found
        """
        config = RunConfig(
            steps=max_steps, seed=seed, sweeps_per_step=sweeps_per_step, replicas=replicas
        )
        return self.solve_batch([instance], ladder, config, [target_energy])[0]
