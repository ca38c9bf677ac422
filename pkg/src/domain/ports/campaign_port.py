"""
Campaign Port - Abstract interface for campaign persistence.

A store owns one campaign directory: the manifest with completed-stage markers
and the artifacts each stage produces.
"""

from abc import ABC, abstractmethod
from collections.abc import Sequence
from fractions import Fraction

from src.domain.entities.anneal import JChaosOutcome, TtsSummary
from src.domain.entities.campaign import Campaign, Stage, StageMarker, TauHistogram
from src.domain.entities.chimera import Instance
from src.domain.entities.exact import ExactResult
from src.domain.entities.hardness import HardnessReport, RoundRecord
from src.domain.entities.landscape import LandscapeOutcome, TypicalOverlap


class CampaignStorePort(ABC):
    """Abstract campaign directory."""

    @abstractmethod
    def open(self, campaign: Campaign, config_digest: str, config_text: str) -> Campaign:
        """
        Create the campaign directory or reopen an existing one.

        Args:
            campaign: Campaign described by the current config
            config_digest: Hash of the settings that affect outputs
            config_text: Canonical config, stored next to the manifest

        Returns:
            The campaign with the stage markers found in the manifest

        Raises:
            CampaignError: If the directory belongs to a different config
        """
        ...

    @abstractmethod
    def progress(self) -> Campaign:
        """
        Read the manifest without checking it against a config.

        Raises:
            CampaignError: If there is no manifest
        """
        ...

    @abstractmethod
    def verify(self, marker: StageMarker) -> None:
        """
        Check a completed stage's outputs against its recorded hash.

        Raises:
            CampaignError: If the outputs changed since the stage completed
        """
        ...

    @abstractmethod
    def begin(self, stage: Stage) -> None:
        """Discard partial outputs of a stage before it runs."""
        ...

    @abstractmethod
    def complete(self, stage: Stage) -> StageMarker:
        """Hash the stage's outputs and append its marker to the manifest."""
        ...

    @abstractmethod
    def record_failure(self, stage: Stage, message: str) -> None:
        """Append a failure line for a stage."""
        ...

    @abstractmethod
    def save_instances(self, instances: Sequence[Instance]) -> None: ...

    @abstractmethod
    def load_instances(self) -> list[Instance]:
        """Instances in generation order."""
        ...

    @abstractmethod
    def save_hardness(
        self, reports: Sequence[HardnessReport], rounds: Sequence[RoundRecord]
    ) -> None: ...

    @abstractmethod
    def load_hardness(self) -> list[HardnessReport]: ...

    @abstractmethod
    def save_histogram(self, histogram: TauHistogram | None) -> None:
        """Write the tau histogram; None writes empty tables."""
        ...

    @abstractmethod
    def save_exact(self, results: Sequence[ExactResult]) -> None: ...

    @abstractmethod
    def load_exact(self) -> dict[str, Fraction]:
        """Ground-state energy per instance id."""
        ...

    @abstractmethod
    def save_landscape(
        self,
        outcomes: Sequence[LandscapeOutcome],
        typical: Sequence[TypicalOverlap],
        extrapolation: dict[int, float],
    ) -> None: ...

    @abstractmethod
    def save_jchaos(self, outcomes: Sequence[JChaosOutcome]) -> None: ...

    @abstractmethod
    def save_tts(self, summary: TtsSummary) -> None: ...

