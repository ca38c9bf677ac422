"""
Campaign Entity - Stage bookkeeping of an end-to-end campaign.
"""

from dataclasses import dataclass, field
from enum import StrEnum
from typing import Any

import numpy as np
import numpy.typing as npt


class Stage(StrEnum):
    """Campaign stages, in execution order."""

    GENERATE = "generate"
    HARDNESS = "hardness"
    HISTOGRAM = "histogram"
    EXACT = "exact"
    LANDSCAPE = "landscape"
    JCHAOS = "jchaos"
    TTS = "tts"

    @classmethod
    def ordered(cls) -> tuple["Stage", ...]:
        """Stages in pipeline order."""
        return tuple(cls)


@dataclass(frozen=True, slots=True)
class StageMarker:
    """A completed stage and the content hash of its outputs."""

    stage: Stage
    digest: str


@dataclass(frozen=True, slots=True)
class Campaign:
    """
    Immutable view of a campaign's progress.

    Attributes:
        campaign_id: Identifier from the config
        instance_count: Number of generated instances
        round_steps: Escalation budgets in elementary steps
        survivor_caps: Survivor counts between rounds
        seed: Master seed
        completed: Completed stages, in order
        failure: Last recorded failure, if any
    """

    campaign_id: str
    instance_count: int
    round_steps: tuple[int, ...]
    survivor_caps: tuple[int, ...]
    seed: int
    completed: tuple[StageMarker, ...] = field(default_factory=tuple)
    failure: str | None = None

    def __post_init__(self) -> None:
        """Stage markers must follow the stage order without gaps."""
        expected = Stage.ordered()[: len(self.completed)]
        if tuple(m.stage for m in self.completed) != expected:
            raise ValueError("completed stages must be a prefix of the stage order")

    def is_complete(self, stage: Stage) -> bool:
        """True when the stage has a completion marker."""
        return any(m.stage is stage for m in self.completed)

    def with_stage(self, marker: StageMarker) -> "Campaign":
        """Create a copy with one more completed stage."""
        return Campaign(
            campaign_id=self.campaign_id,
            instance_count=self.instance_count,
            round_steps=self.round_steps,
            survivor_caps=self.survivor_caps,
            seed=self.seed,
            completed=(*self.completed, marker),
            failure=None,
        )

    @property
    def finished(self) -> bool:
        """True when every stage has completed."""
        return len(self.completed) == len(Stage.ordered())

    def to_dict(self) -> dict[str, Any]:
        """Manifest fields for logs."""
        return {
            "campaign_id": self.campaign_id,
            "instances": self.instance_count,
            "completed": [m.stage.value for m in self.completed],
            "failure": self.failure,
        }


@dataclass(frozen=True, slots=True, eq=False)
class TauHistogram:
    """
    Log-binned density of resolved mixing times.

    Attributes:
        edges: Bin edges in sweeps, geometric, covering min..max tau
        counts: Instances per bin
        density: counts / (n * width), integrating to 1
        tail_slope: Exponent of a power law through the occupied bins at or
            above the median tau, None with fewer than three such bins
        tail_stderr: Standard error of the tail exponent
        tail_fractions: (10^k, fraction of resolved instances with tau > 10^k)
        resolved: Number of resolved instances
        bounded: Number of lower-bound instances left out
    """

    edges: npt.NDArray[np.float64]
    counts: npt.NDArray[np.int64]
    density: npt.NDArray[np.float64]
    tail_slope: float | None
    tail_stderr: float | None
    tail_fractions: tuple[tuple[float, float], ...]
    resolved: int
    bounded: int = 0

    def __post_init__(self) -> None:
        """Validate alignment of edges, counts and density."""
        if self.edges.size != self.counts.size + 1 or self.counts.shape != self.density.shape:
            raise ValueError("histogram needs one more edge than bins")

    @property
    def centers(self) -> npt.NDArray[np.float64]:
        """Geometric bin centers."""
        return np.sqrt(self.edges[:-1] * self.edges[1:])
