"""
Unit tests for success probabilities, time-to-solution and scaling fits.
"""

import math

import numpy as np
import pytest

from src.application.services.ttslab import (
    aggregate,
    fit_alpha,
    fit_power_law,
    fit_theta,
    generation_map,
    generation_taus,
    group_typical_tts,
    heuristic_scaling,
    minimal_tts,
    percentile_by_generation,
    records_from_cycles,
    time_windows,
    tts,
    tts_table,
    typical_tts_by_generation,
    window_of,
)
from src.domain.entities.anneal import (
    AnnealRecord,
    CycleResult,
    RecordSource,
    TimeWindow,
    TtsRow,
    TypicalTts,
    WindowBand,
)
from src.domain.entities.hardness import HardnessReport, HardnessStatus
from src.domain.errors import FitError, InsufficientDataError


def record(
    instance_id: str, t_ann: float, hits: int, attempts: int = 100, cycle: int = 0
) -> AnnealRecord:
    return AnnealRecord(
        instance_id=instance_id, t_ann_us=t_ann, cycle=cycle, attempts=attempts, hits=hits
    )


def report(
    instance_id: str, tau: float, generation: int | None, resolved: bool = True
) -> HardnessReport:
    return HardnessReport(
        instance_id=instance_id,
        status=HardnessStatus.RESOLVED if resolved else HardnessStatus.UNRESOLVED,
        tau=tau,
        tau_sub=1.0,
        a1=1.0,
        a2=0.1,
        residual=0.0,
        figure_of_merit=0.5,
        generation=generation,
        rounds=1,
        steps=1000,
    )


class TestAggregate:
    """Tests for pooling programming cycles."""

    def test_pools_cycles(self) -> None:
        """Test P = Y_tot / X_tot with its resolution floor."""
        pooled = aggregate([record("a", 20, 3, cycle=0), record("a", 20, 1, cycle=1)])

        assert pooled.p == pytest.approx(0.02)
        assert pooled.floor == pytest.approx(1 / 200)
        assert not pooled.below_resolution

    def test_empty(self) -> None:
        """Test that an empty set cannot be pooled."""
        with pytest.raises(InsufficientDataError, match="empty record set"):
            aggregate([])

    def test_mixed_keys(self) -> None:
        """Test that records of different annealing times are not pooled."""
        with pytest.raises(ValueError, match="one instance and one annealing time"):
            aggregate([record("a", 20, 1), record("a", 40, 1)])

    def test_record_validation(self) -> None:
        """Test that annealing times must be positive."""
        with pytest.raises(ValueError, match="t_ann must be positive"):
            record("a", 0, 1)


class TestTts:
    """Tests for time-to-solution values."""

    def test_values(self) -> None:
        """Test t_ann / P and the infinite unsolved case."""
        assert tts(0.5, 20.0) == 40.0
        assert tts(0.0, 20.0) == math.inf

    def test_rejects_probability_out_of_range(self) -> None:
        """Test that P lies in [0, 1]."""
        with pytest.raises(ValueError, match=r"\[0, 1\]"):
            tts(1.5, 20.0)

    def test_table_and_minimum(self) -> None:
        """Test pooled rows and the per-instance minimum over annealing times."""
        records = [
            record("b", 20, 10),
            record("a", 40, 0),
            record("a", 20, 50),
            record("a", 20, 50, cycle=1),
        ]

        rows = tts_table(records)

        assert [(r.instance_id, r.t_ann_us) for r in rows] == [("a", 20), ("a", 40), ("b", 20)]
        assert rows[0].tts_us == pytest.approx(40.0)
        assert not rows[1].resolved
        assert minimal_tts(rows) == {"a": pytest.approx(40.0), "b": pytest.approx(200.0)}


class TestTypicalTts:
    """Tests for medians with infinite values."""

    @pytest.mark.parametrize(
        ("values", "expected"),
        [
            ([3.0, 1.0, 2.0], 2.0),
            ([1.0, 2.0, 3.0, 4.0], 2.5),
            ([1.0, math.inf, math.inf], math.inf),
            ([1.0, 2.0, math.inf, math.inf], math.inf),
            ([1.0, 2.0, 3.0, math.inf], 2.5),
        ],
    )
    def test_median(self, values: list[float], expected: float) -> None:
        """Test that infinite values sort last."""
        assert group_typical_tts(values) == expected

    def test_empty_group(self) -> None:
        """Test that an empty generation has no median."""
        with pytest.raises(InsufficientDataError, match="empty generation"):
            group_typical_tts([])

    def test_by_generation(self) -> None:
        """Test grouping, ordering and the bootstrap interval."""
        rows = [
            TtsRow(instance_id=name, t_ann_us=20.0, p=0.1, floor=0.01, tts_us=value)
            for name, value in [("a", 100.0), ("b", 300.0), ("c", 200.0), ("d", 5.0), ("e", 1.0)]
        ]
        generations = {"a": 4, "b": 4, "c": 4, "d": 3, "e": None}

        typical = typical_tts_by_generation(rows, generations, resamples=200)

        assert [t.generation for t in typical] == [3, 4]
        assert typical[1].tts_us == pytest.approx(200.0)
        assert typical[1].instances == 3
        assert 100.0 <= typical[1].low_us <= typical[1].tts_us <= typical[1].high_us <= 300.0
        assert typical[0].tts_us == pytest.approx(5.0)


class TestPowerLaw:
    """Tests for log-log least-squares fits."""

    def test_exact_power_law(self) -> None:
        """Test recovery of exponent and amplitude."""
        x = np.asarray([10.0, 100.0, 1000.0, 10000.0])

        fit = fit_power_law(x, 3.0 * x**1.5, tag="demo")

        assert fit.exponent == pytest.approx(1.5)
        assert fit.amplitude == pytest.approx(3.0)
        assert fit.stderr == pytest.approx(0.0, abs=1e-9)
        assert (fit.x_min, fit.x_max, fit.points, fit.excluded) == (10.0, 10000.0, 4, 0)

    def test_excludes_unusable_points(self) -> None:
        """Test that infinite and non-positive points are dropped and counted."""
        fit = fit_power_law([1, 10, 100, 1000, 5], [1, 10, 100, math.inf, 0])

        assert fit.exponent == pytest.approx(1.0)
        assert fit.points == 3
        assert fit.excluded == 2

    def test_too_few_points(self) -> None:
        """Test that two points are not enough."""
        with pytest.raises(FitError, match="needs 3 positive points"):
            fit_power_law([1, 10], [1, 10])

    def test_constant_x(self) -> None:
        """Test that a degenerate x range is rejected."""
        with pytest.raises(FitError, match="distinct x values"):
            fit_power_law([5, 5, 5], [1, 2, 3])

    def test_alpha(self) -> None:
        """Test that tts proportional to tau gives alpha = 1."""
        typical = [
            TypicalTts(generation=k, tts_us=2.0 * 10**k, instances=5) for k in (3, 4, 5, 6)
        ]
        taus = {k: 1.5 * 10**k for k in (3, 4, 5)}

        fit = fit_alpha(typical, taus)

        assert fit.exponent == pytest.approx(1.0)
        assert fit.points == 3
        assert fit.tag == "alpha"

    def test_alpha_skips_unresolved(self) -> None:
        """Test that an infinite typical tts is left out of the fit."""
        typical = [
            TypicalTts(generation=k, tts_us=10.0**k if k < 7 else math.inf, instances=5)
            for k in (4, 5, 6, 7)
        ]
        taus = {k: 10.0**k for k in (4, 5, 6, 7)}

        fit = fit_alpha(typical, taus)

        assert fit.points == 3
        assert fit.excluded == 1


class TestWindows:
    """Tests for annealing-time windows."""

    @pytest.mark.parametrize(
        ("t_ann", "window"),
        [
            (20.0, TimeWindow(0, WindowBand.LOW)),
            (59.9, TimeWindow(0, WindowBand.LOW)),
            (60.0, TimeWindow(0, WindowBand.HIGH)),
            (200.0, TimeWindow(1, WindowBand.LOW)),
            (1500.0, TimeWindow(1, WindowBand.HIGH)),
            (20_000.0, TimeWindow(2, WindowBand.HIGH)),
            (19.9, None),
            (20_001.0, None),
        ],
    )
    def test_window_of(self, t_ann: float, window: TimeWindow | None) -> None:
        """Test half-open windows and the closed upper end."""
        assert window_of(t_ann) == window

    def test_grouping_drops_outliers(self) -> None:
        """Test that records group by window in window order."""
        grouped = time_windows([record("a", 100, 1), record("a", 30, 1), record("a", 5, 1)])

        assert [w.label for w in grouped] == ["k0-low", "k0-high"]

    def test_percentiles(self) -> None:
        """Test per-generation percentiles and the resolution flag."""
        records = [record(f"i{n}", 30, hits) for n, hits in enumerate([10, 20, 30, 40, 0])]
        records += [record(f"j{n}", 30, 0) for n in range(3)] + [record("j3", 30, 5)]
        generations = {**{f"i{n}": 4 for n in range(5)}, **{f"j{n}": 5 for n in range(4)}}

        table = percentile_by_generation(records, generations, 0.5)

        assert [(w.generation, w.resolved) for w in table] == [(4, True), (5, False)]
        assert table[0].value == pytest.approx(0.2)
        assert table[0].below_resolution == 1
        assert math.isnan(table[1].value)

    def test_theta(self) -> None:
        """Test the exponent of p against annealing time across windows."""
        records = []
        for t_ann in (30.0, 100.0, 300.0, 1000.0):
            hits = int(round(100_000 * 0.001 * t_ann**0.5))
            records += [record(f"i{n}", t_ann, hits, attempts=100_000) for n in range(3)]
        table = percentile_by_generation(records, {f"i{n}": 4 for n in range(3)}, 0.5)

        fits = fit_theta(table)

        assert fits[4].exponent == pytest.approx(0.5, abs=0.02)
        assert fits[4].tag == "theta-q50-g4"


class TestGenerations:
    """Tests for hardness bookkeeping shared by the fits."""

    def test_generation_taus(self) -> None:
        """Test median tau over resolved instances per generation."""
        reports = [
            report("a", 1.5e4, 4),
            report("b", 2.5e4, 4),
            report("c", 2e5, 5),
            report("d", 9e9, None, resolved=False),
        ]

        assert generation_taus(reports) == {4: pytest.approx(2e4), 5: pytest.approx(2e5)}
        assert generation_map(reports) == {"a": 4, "b": 4, "c": 5, "d": None}

    def test_heuristic_scaling(self) -> None:
        """Test typical first-hit sweeps against tau."""
        taus = {f"g{k}": 10.0**k for k in (3, 4, 5)}
        hits = {f"g{k}": 7 * 10**k for k in (3, 4, 5)}
        generations = {f"g{k}": k for k in (3, 4, 5)}

        rows, fit = heuristic_scaling(hits, taus, generations)

        assert [r.generation for r in rows] == [3, 4, 5]
        assert fit is not None
        assert fit.exponent == pytest.approx(1.0)
        assert fit.tag == "pt-heuristic"

    def test_heuristic_scaling_unsolved(self) -> None:
        """Test that unsolved attempts count as infinite and stop the fit."""
        rows, fit = heuristic_scaling({"a": None}, {"a": 100.0}, {"a": 3})

        assert rows[0].sweeps == math.inf
        assert fit is None

    def test_records_from_cycles(self) -> None:
        """Test conversion of simulated cycles into anneal records."""
        cycles = [
            CycleResult(
                instance_id="a", cycle=c, gauge_seed=0, perturb_seed=0, attempts=10, hits=c
            )
            for c in range(3)
        ]

        records = records_from_cycles(cycles, 20.0)

        assert [r.hits for r in records] == [0, 1, 2]
        assert all(r.source is RecordSource.SIMULATED and r.t_ann_us == 20.0 for r in records)
