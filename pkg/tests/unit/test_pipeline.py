"""
Unit tests for campaign helpers: seeds, worker pools, chunked sampling,
tau histograms and tts summaries.
"""

import numpy as np
import pytest

from src.application.services.pipeline import (
    ChunkedSampler,
    derive_seed,
    landscape_steps,
    parallel_map,
    stage_key,
    summarize_tts,
    tau_histogram,
)
from src.domain.entities.anneal import AnnealRecord
from src.domain.entities.campaign import Stage
from src.domain.entities.chimera import ChimeraGraph, generate_instance
from src.domain.entities.hardness import HardnessReport, HardnessStatus
from src.domain.entities.run import RunConfig, TemperatureLadder
from src.domain.errors import InsufficientDataError
from src.infrastructure.adapters.kernel_factory import KernelFactory


def report(
    instance_id: str,
    tau: float,
    generation: int | None = None,
    status: HardnessStatus = HardnessStatus.RESOLVED,
) -> HardnessReport:
    return HardnessReport(
        instance_id=instance_id,
        status=status,
        tau=tau,
        tau_sub=1.0,
        a1=1.0,
        a2=0.0,
        residual=0.0,
        figure_of_merit=0.5,
        generation=generation,
        rounds=1,
        steps=10**6,
    )


class TestSeeds:
    """Tests for derived seeds and stage keys."""

    def test_derive_seed(self) -> None:
        """Test that derived seeds are reproducible 64-bit words."""
        assert derive_seed(5, 1, 2) == derive_seed(5, 1, 2)
        assert derive_seed(5, 1, 2) != derive_seed(5, 2, 1)
        assert derive_seed(5, 1) != derive_seed(6, 1)
        assert 0 <= derive_seed(5, 1) < 2**64

    def test_stage_key(self) -> None:
        """Test that stage keys follow the execution order."""
        assert [stage_key(s) for s in Stage.ordered()] == list(range(7))


class TestLandscapeSteps:
    """Tests for equilibrium run lengths."""

    @pytest.mark.parametrize(
        ("tau_steps", "factor", "minimum", "expected"),
        [(12.3, 20.0, 1000, 1000), (500.0, 20.0, 1000, 10000), (501.0, 20.0, 100, 10100)],
    )
    def test_lengths(self, tau_steps: float, factor: float, minimum: int, expected: int) -> None:
        """Test the minimum and rounding to whole checkpoints."""
        assert landscape_steps(tau_steps, factor, minimum) == expected


class TestParallelMap:
    """Tests for the bounded worker pool."""

    def test_serial(self) -> None:
        """Test in-process mapping."""
        assert parallel_map(abs, [-3, 1, -2]) == [3, 1, 2]

    @pytest.mark.slow
    def test_workers_keep_order(self) -> None:
        """Test that results come back in input order."""
        assert parallel_map(abs, list(range(-8, 0)), jobs=2) == list(range(8, 0, -1))


class TestChunkedSampler:
    """Tests for chunked engine batches."""

    def test_rejects_bad_chunk(self) -> None:
        """Test chunk size validation."""
        with pytest.raises(ValueError, match="chunk_size"):
            ChunkedSampler(KernelFactory(), chunk_size=0)

    def test_rejects_target_mismatch(
        self, c2_graph: ChimeraGraph, small_ladder: TemperatureLadder
    ) -> None:
        """Test that targets must match the instances."""
        sampler = ChunkedSampler(KernelFactory())

        with pytest.raises(ValueError, match="one target energy per instance"):
            sampler.solve_batch(
                [generate_instance(c2_graph, 1)], small_ladder, RunConfig(steps=1, seed=0), []
            )

    def test_chunk_outputs(self, c2_graph: ChimeraGraph, small_ladder: TemperatureLadder) -> None:
        """Test that chunking keeps instance order and is reproducible."""
        instances = [generate_instance(c2_graph, seed) for seed in range(3)]
        config = RunConfig(steps=20, seed=4, sweeps_per_step=1, replicas=1)
        sampler = ChunkedSampler(KernelFactory(), chunk_size=2)

        first = sampler.run(instances, small_ladder, config)
        second = sampler.run(instances, small_ladder, config)

        assert [o.instance_id for o in first] == [i.id for i in instances]
        for a, b in zip(first, second, strict=True):
            np.testing.assert_array_equal(a.traces, b.traces)

    @pytest.mark.slow
    def test_independent_of_workers(
        self, c2_graph: ChimeraGraph, small_ladder: TemperatureLadder
    ) -> None:
        """Test that the worker count never changes the outputs."""
        instances = [generate_instance(c2_graph, seed) for seed in range(4)]
        config = RunConfig(steps=20, seed=4, sweeps_per_step=1, replicas=1)

        serial = ChunkedSampler(KernelFactory(), chunk_size=2, jobs=1).run(
            instances, small_ladder, config
        )
        pooled = ChunkedSampler(KernelFactory(), chunk_size=2, jobs=2).run(
            instances, small_ladder, config
        )

        for a, b in zip(serial, pooled, strict=True):
            np.testing.assert_array_equal(a.traces, b.traces)
            np.testing.assert_array_equal(a.energies, b.energies)


class TestTauHistogram:
    """Tests for the log-binned tau density."""

    def test_density_and_tail(self) -> None:
        """Test normalization, counts and the tail exponent of a log-uniform sample."""
        rng = np.random.default_rng(0)
        taus = 10 ** rng.uniform(3.0, 6.0, size=400)
        reports = [report(f"i{n}", tau) for n, tau in enumerate(taus)]
        reports.append(report("b", 1e7, status=HardnessStatus.LOWER_BOUND))

        histogram = tau_histogram(reports, bins_per_decade=5)

        assert histogram.resolved == 400
        assert histogram.bounded == 1
        assert int(histogram.counts.sum()) == 400
        assert float(np.sum(histogram.density * np.diff(histogram.edges))) == pytest.approx(1.0)
        assert histogram.tail_slope == pytest.approx(-1.0, abs=0.3)
        assert histogram.tail_fractions[0] == (1000.0, 1.0)
        assert histogram.tail_fractions[-1] == (1e6, 0.0)

    def test_single_value(self) -> None:
        """Test that one resolved tau still gives a valid bin."""
        histogram = tau_histogram([report("a", 2000.0)])

        assert histogram.counts.tolist() == [1]
        assert histogram.tail_slope is None

    def test_no_resolved_reports(self) -> None:
        """Test that bounds alone cannot be binned."""
        with pytest.raises(InsufficientDataError, match="at least one resolved"):
            tau_histogram([report("b", 1e7, status=HardnessStatus.LOWER_BOUND)])

    def test_bins_per_decade(self) -> None:
        """Test resolution validation."""
        with pytest.raises(ValueError, match="bins_per_decade"):
            tau_histogram([report("a", 10.0)], bins_per_decade=0)


class TestSummarizeTts:
    """Tests for the assembled tts tables."""

    def test_alpha_and_heuristic(self) -> None:
        """Test that tts and first hits proportional to tau give unit exponents."""
        reports = [report(f"g{k}", 1.5 * 10**k, generation=k) for k in (3, 4, 5)]
        records = [
            AnnealRecord(
                instance_id=f"g{k}", t_ann_us=20.0, cycle=0, attempts=1000, hits=5 * 10 ** (5 - k)
            )
            for k in (3, 4, 5)
        ]
        first_hits = {f"g{k}": 15 * 10**k for k in (3, 4, 5)}

        summary = summarize_tts(records, reports, first_hits)

        fits = {fit.tag: fit for fit in summary.fits}
        assert [t.generation for t in summary.typical] == [3, 4, 5]
        assert fits["alpha"].exponent == pytest.approx(1.0)
        assert fits["pt-heuristic"].exponent == pytest.approx(1.0)
        assert [q for q, _ in summary.windows] == [0.5, 0.8]
        assert len(summary.heuristic) == 3
        assert dict(summary.generation_taus) == {3: 1500.0, 4: 15000.0, 5: 150000.0}

    def test_without_fits(self) -> None:
        """Test that too few generations leave the fits out."""
        reports = [report("a", 2e4, generation=4)]
        records = [AnnealRecord(instance_id="a", t_ann_us=20.0, cycle=0, attempts=10, hits=1)]

        summary = summarize_tts(records, reports)

        assert summary.fits == ()
        assert summary.heuristic == ()
        assert summary.typical[0].tts_us == pytest.approx(200.0)
