"""
Unit tests for the file-backed campaign store.
"""

from pathlib import Path

import pytest

from src.domain.entities.campaign import Campaign, Stage
from src.domain.entities.chimera import ChimeraGraph, generate_instance
from src.domain.errors import CampaignError
from src.infrastructure.adapters.campaign_store import FileCampaignStore


@pytest.fixture
def campaign() -> Campaign:
    return Campaign(
        campaign_id="unit",
        instance_count=2,
        round_steps=(100, 1000),
        survivor_caps=(1,),
        seed=3,
    )


@pytest.fixture
def store(campaign_dir: Path, campaign: Campaign) -> FileCampaignStore:
    store = FileCampaignStore(campaign_dir / "run")
    store.open(campaign, "digest-a", "seed = 3\n")
    return store


class TestManifest:
    """Tests for creating and reopening campaign directories."""

    def test_create(self, store: FileCampaignStore, campaign: Campaign) -> None:
        """Test that a new directory records the campaign header."""
        text = store.manifest_path.read_text(encoding="utf-8")

        assert text.startswith("# campaign manifest v1\ncampaign unit\nconfig digest-a\n")
        assert (store.root / "config.txt").read_text(encoding="utf-8") == "seed = 3\n"
        assert store.progress() == campaign

    def test_reopen(self, store: FileCampaignStore, campaign: Campaign) -> None:
        """Test that reopening with the same digest returns the progress."""
        store.begin(Stage.GENERATE)
        store.complete(Stage.GENERATE)

        reopened = store.open(campaign, "digest-a", "ignored")

        assert reopened.is_complete(Stage.GENERATE)
        assert not reopened.is_complete(Stage.HARDNESS)

    def test_reopen_other_config(self, store: FileCampaignStore, campaign: Campaign) -> None:
        """Test that a directory cannot be reused by a different config."""
        with pytest.raises(CampaignError, match="different config"):
            store.open(campaign, "digest-b", "")

    def test_missing_manifest(self, campaign_dir: Path) -> None:
        """Test reading progress from an empty directory."""
        with pytest.raises(CampaignError, match="no campaign manifest"):
            FileCampaignStore(campaign_dir).progress()

    def test_corrupt_manifest(self, store: FileCampaignStore) -> None:
        """Test that unknown manifest records are located."""
        with store.manifest_path.open("a", encoding="utf-8") as handle:
            handle.write("bogus line\n")

        with pytest.raises(CampaignError, match=r"manifest\.txt:8: unknown manifest record"):
            store.progress()


class TestStages:
    """Tests for stage markers, digests and failures."""

    def test_digest_tracks_contents(self, store: FileCampaignStore) -> None:
        """Test that a stage digest covers file contents."""
        store.begin(Stage.GENERATE)
        target = store.stage_dir(Stage.GENERATE) / "a.txt"
        target.write_text("one", encoding="utf-8")
        marker = store.complete(Stage.GENERATE)

        store.verify(marker)
        target.write_text("two", encoding="utf-8")

        with pytest.raises(CampaignError, match="changed on disk"):
            store.verify(marker)

    def test_begin_discards_partial_outputs(self, store: FileCampaignStore) -> None:
        """Test that a restarted stage starts from an empty directory."""
        store.begin(Stage.GENERATE)
        (store.stage_dir(Stage.GENERATE) / "partial.txt").write_text("x", encoding="utf-8")

        store.begin(Stage.GENERATE)

        assert list(store.stage_dir(Stage.GENERATE).iterdir()) == []

    def test_failure_recorded_and_cleared(self, store: FileCampaignStore) -> None:
        """Test that a failure is visible until the stage completes."""
        store.begin(Stage.GENERATE)
        store.record_failure(Stage.GENERATE, "RuntimeError:\n boom")

        assert store.progress().failure == "generate RuntimeError: boom"

        store.complete(Stage.GENERATE)

        assert store.progress().failure is None


class TestInstances:
    """Tests for the generated instance set."""

    def test_round_trip(self, store: FileCampaignStore, c2_graph: ChimeraGraph) -> None:
        """Test that saved instances load back in order."""
        instances = [generate_instance(c2_graph, seed) for seed in (4, 2)]
        store.begin(Stage.GENERATE)

        store.save_instances(instances)

        assert store.load_instances() == instances

    def test_missing_instance_file(self, store: FileCampaignStore, c2_graph: ChimeraGraph) -> None:
        """Test that a deleted instance file is reported with its index line."""
        instance = generate_instance(c2_graph, 4)
        store.begin(Stage.GENERATE)
        store.save_instances([instance])
        (store.stage_dir(Stage.GENERATE) / "instances" / f"{instance.id}.txt").unlink()

        with pytest.raises(CampaignError, match="is missing"):
            store.load_instances()
