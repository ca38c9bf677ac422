"""
Packed Kernel - Multi-spin coded Metropolis on uint64 words.

Bit b of word w holds lane w * M + b (M = word_size <= 64); a set bit means
s = -1. For +-1 couplings a bond is satisfied when x_i ^ x_j ^ c_ij is set,
with c_ij set for J_ij = -1, and flipping a vertex with n satisfied bonds out of
d costs dE = 4n - 2d. Satisfied-bond counts are accumulated with bit-sliced
adders. Their planes are unpacked once per half sweep so that each lane decides
every vertex against the shared threshold table; the decisions are packed back
into one flip word per vertex.
"""

from collections.abc import Sequence

import numpy as np
import numpy.typing as npt
import structlog

from src.domain.entities.chimera import ColorClass, Instance
from src.domain.entities.run import PackedReplicaSet, ReplicaSet
from src.domain.ports.engine_port import AcceptanceTable, PackingError, SweepKernel

logger = structlog.get_logger(__name__)

ALL_ONES = np.uint64(0xFFFFFFFFFFFFFFFF)
MAX_WORD_SIZE = 64


def _shifts(word_size: int) -> npt.NDArray[np.uint64]:
    if not 1 <= word_size <= MAX_WORD_SIZE:
        raise PackingError(f"word_size must lie in 1..{MAX_WORD_SIZE}, got {word_size}")
    return np.arange(word_size, dtype=np.uint64)


def pack_bits(flags: npt.NDArray[np.bool_], word_size: int) -> npt.NDArray[np.uint64]:
    """
    Pack a (L, X) boolean matrix into (W, X) words, lane l -> word l // M, bit l % M.
    """
    shifts = _shifts(word_size)
    lanes, width = flags.shape
    words = -(-lanes // word_size)
    padded = np.zeros((words * word_size, width), dtype=np.uint64)
    padded[:lanes] = flags
    bits = padded.reshape(words, word_size, width) << shifts[None, :, None]
    return np.bitwise_or.reduce(bits, axis=1)


def unpack_bits(
    words: npt.NDArray[np.uint64], lanes: int, word_size: int
) -> npt.NDArray[np.bool_]:
    """Inverse of `pack_bits`: (W, X) words -> (lanes, X) booleans."""
    shifts = _shifts(word_size)
    bits = (words[:, None, :] >> shifts[None, :, None]) & np.uint64(1)
    return bits.reshape(-1, words.shape[1])[:lanes].astype(bool)


def pack(replica_sets: Sequence[ReplicaSet], word_size: int = MAX_WORD_SIZE) -> PackedReplicaSet:
    """
    Pack the lanes of several replica sets on one graph into spin words.

    Raises:
        PackingError: If the replica sets live on different graphs
    """
    if not replica_sets:
        raise PackingError("nothing to pack")
    graph = replica_sets[0].graph
    if any(rs.graph != graph for rs in replica_sets[1:]):
        raise PackingError("mixed graphs across lanes")
    lanes = np.concatenate([rs.lane_spins() for rs in replica_sets])
    return PackedReplicaSet(
        graph=graph,
        words=pack_bits(lanes == -1, word_size),
        word_size=word_size,
        lane_counts=tuple(rs.lanes for rs in replica_sets),
        permutations=tuple(rs.permutation.copy() for rs in replica_sets),
    )


def unpack(packed: PackedReplicaSet) -> tuple[ReplicaSet, ...]:
    """Recover the scalar replica sets from a packed set."""
    flags = unpack_bits(packed.words, packed.n_lanes, packed.word_size)
    spins = np.where(flags, -1, 1).astype(np.int8)
    result = []
    start = 0
    for count, permutation in zip(packed.lane_counts, packed.permutations, strict=True):
        block = spins[start : start + count].reshape(*permutation.shape, packed.graph.size)
        result.append(ReplicaSet(graph=packed.graph, spins=block, permutation=permutation.copy()))
        start += count
    return tuple(result)


class PackedKernel(SweepKernel):
    """
    Multi-spin coded kernel for +-1 couplings and zero fields.

    With word_size = 1 every word carries a single lane and the kernel reduces
    to the scalar semantics.
    """

    def __init__(
        self,
        classes: tuple[ColorClass, ColorClass],
        instances: Sequence[Instance],
        lanes_per_instance: int,
        spins: npt.NDArray[np.int8],
        table: AcceptanceTable,
        word_size: int = MAX_WORD_SIZE,
    ) -> None:
        """
        Initialize the kernel.

        Args:
            classes: Bipartition classes of the shared graph
            instances: One instance per lane group
            lanes_per_instance: Lanes per instance
            spins: (L, N) initial spins
            table: Integer threshold table shared with the scalar path
            word_size: Lanes per word (M)

        Raises:
            PackingError: If an instance is not a +-1, zero-field instance
        """
        for inst in instances:
            if not inst.is_standard:
                raise PackingError(f"instance {inst.id} is not a +-1 zero-field instance")
        self._classes = classes
        self._word_size = word_size
        self._lanes = int(spins.shape[0])
        self._table = table
        self._words = pack_bits(np.asarray(spins) == -1, word_size)

        antiferro = np.stack([inst.coupling_array < 0 for inst in instances])
        lane_bonds = np.repeat(antiferro, lanes_per_instance, axis=0)
        bond_words = pack_bits(lane_bonds, word_size)
        self._bonds = tuple(bond_words[:, c.edge_ids] for c in classes)
        self._masks = tuple(np.where(c.valid, ALL_ONES, np.uint64(0)) for c in classes)
        self._planes = max(max(c.max_degree for c in classes), 1).bit_length()
        logger.debug(
            "PackedKernel initialized",
            lanes=self._lanes,
            words=int(self._words.shape[0]),
            word_size=word_size,
        )

    @property
    def n_lanes(self) -> int:
        """Number of simulated lanes."""
        return self._lanes

    @property
    def word_size(self) -> int:
        """Lanes per uint64 word."""
        return self._word_size

    def half_sweep(
        self,
        color: int,
        temperature_index: npt.NDArray[np.int64],
        draws: npt.NDArray[np.uint64],
    ) -> npt.NDArray[np.float64]:
        cls = self._classes[color]
        if cls.size == 0:
            return np.zeros(self._lanes)
        own = self._words[:, cls.positions]
        satisfied = own[:, :, None] ^ self._words[:, cls.neighbors] ^ self._bonds[color]
        satisfied &= self._masks[color][None, :, :]

        planes = [np.zeros_like(own) for _ in range(self._planes)]
        for slot in range(cls.max_degree):
            carry = satisfied[:, :, slot]
            for b in range(self._planes):
                planes[b], carry = planes[b] ^ carry, planes[b] & carry

        count = np.zeros((self._lanes, cls.size), dtype=np.int64)
        for b, plane in enumerate(planes):
            count |= unpack_bits(plane, self._lanes, self._word_size).astype(np.int64) << b
        deltas = 4 * count - 2 * cls.degree[None, :]
        always, thresholds = self._table.lookup(temperature_index, deltas)
        accept = always | (draws < thresholds)
        self._words[:, cls.positions] = own ^ pack_bits(accept, self._word_size)
        return np.asarray((accept * deltas).sum(axis=1), dtype=np.float64)

    def spins(self) -> npt.NDArray[np.int8]:
        flags = unpack_bits(self._words, self._lanes, self._word_size)
        return np.where(flags, -1, 1).astype(np.int8)

    def lane_spins(self, lane: int) -> npt.NDArray[np.int8]:
        word, bit = divmod(lane, self._word_size)
        flags = (self._words[word] >> np.uint64(bit)) & np.uint64(1)
        return np.where(flags.astype(bool), -1, 1).astype(np.int8)
