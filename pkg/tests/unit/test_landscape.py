"""
Unit tests for energy curves, zero-temperature extrapolation, chaos detection
and overlap distributions.
"""

import itertools
import math
from fractions import Fraction

import numpy as np
import pytest

from src.application.services.engine import ParallelTemperingService
from src.application.services.landscape import (
    LandscapeConfig,
    detect_tc,
    energy_curve,
    extrapolate_zero_T,
    overlap,
    overlap_distributions,
    typical_extrapolation_error,
    typical_overlap,
)
from src.domain.entities.chimera import Instance, SpinConfig, energy
from src.domain.entities.exact import StateLabel
from src.domain.entities.landscape import (
    EnergyCurve,
    OverlapDistribution,
    OverlapPair,
    PairType,
    ZeroTemperatureEstimate,
)
from src.domain.entities.run import RunConfig, RunOutput, TemperatureLadder
from src.domain.errors import InsufficientDataError
from src.infrastructure.adapters.brute_force import BruteForceSolver
from src.infrastructure.adapters.kernel_factory import KernelFactory


def energy_output(energies: np.ndarray, ladder: TemperatureLadder, size: int = 4) -> RunOutput:
    steps, n_temps = energies.shape
    return RunOutput(
        instance_id="synthetic",
        seed=0,
        ladder=ladder,
        replicas=1,
        steps=steps,
        sweeps_per_step=1,
        traces=np.ones((n_temps, steps), dtype=np.int16),
        energies=energies,
        snapshot_steps=np.zeros(0, dtype=np.int64),
        snapshots=np.zeros((0, 1, n_temps, size), dtype=np.int8),
        snapshot_energies=np.zeros((0, 1, n_temps)),
        min_energy=float(energies.min()) if energies.size else 0.0,
        best_config=SpinConfig(values=(1,) * size),
        swap_rates=np.zeros(n_temps - 1),
    )


def gs_pair(instance_id: str, gs_median: float, es_median: float) -> OverlapPair:
    def single(pair_type: PairType, median: float) -> OverlapDistribution:
        return OverlapDistribution(
            pair_type=pair_type, bin_width=0.5, mass=(0.0, 1.0), samples=1, median=median
        )

    return OverlapPair(
        instance_id=instance_id,
        gs_gs=single(PairType.GS_GS, gs_median),
        gs_es=single(PairType.GS_ES, es_median),
    )


class TestEnergyCurve:
    """Tests for time-averaged energies above the ground state."""

    def test_constant_series(self) -> None:
        """Test that a constant series gives its excess with zero error."""
        ladder = TemperatureLadder.create([0.5, 1.0, 2.0])
        energies = np.tile([-10.0, -8.0, -4.0], (200, 1))

        curve = energy_curve(energy_output(energies, ladder), Fraction(-12), tau_steps=5)

        np.testing.assert_allclose(curve.excess, [2.0, 4.0, 8.0])
        np.testing.assert_allclose(curve.errors, 0.0, atol=1e-12)
        assert curve.burn_in_steps == 15
        assert curve.blocks == 10

    def test_burn_in_discarded(self) -> None:
        """Test that steps before three mixing times are ignored."""
        ladder = TemperatureLadder.create([1.0])
        energies = np.zeros((100, 1))
        energies[:30] = 50.0

        curve = energy_curve(energy_output(energies, ladder), 0, tau_steps=10)

        assert curve.excess[0] == pytest.approx(0.0)

    def test_errors_track_fluctuations(self) -> None:
        """Test that a fluctuating series gets a positive jackknife error."""
        ladder = TemperatureLadder.create([1.0, 2.0])
        rng = np.random.default_rng(4)
        energies = rng.normal(-5.0, 1.0, size=(1000, 2))

        curve = energy_curve(energy_output(energies, ladder), -6, tau_steps=0)

        assert np.all(curve.errors > 0)
        np.testing.assert_allclose(curve.excess, 1.0, atol=5 * curve.errors.max())

    def test_rejects_short_run(self) -> None:
        """Test that runs shorter than ten mixing times are rejected."""
        ladder = TemperatureLadder.create([1.0])

        with pytest.raises(InsufficientDataError, match="shorter than"):
            energy_curve(energy_output(np.zeros((50, 1)), ladder), 0, tau_steps=10)

    def test_rejects_unfillable_blocks(self) -> None:
        """Test that too few kept steps cannot be blocked."""
        ladder = TemperatureLadder.create([1.0])
        config = LandscapeConfig(burn_in_factor=9.0, min_length_factor=10.0)

        with pytest.raises(InsufficientDataError, match="cannot fill"):
            energy_curve(energy_output(np.zeros((10, 1)), ladder), 0, tau_steps=1, config=config)

    def test_config_validation(self) -> None:
        """Test that jackknife needs two blocks."""
        with pytest.raises(ValueError, match="two jackknife blocks"):
            LandscapeConfig(blocks=1)

    @pytest.mark.slow
    def test_matches_canonical_average(self, toy_instance: Instance) -> None:
        """Test a simulated curve against exact thermal averages of the toy instance."""
        ladder = TemperatureLadder.create([0.8, 1.2, 2.0, 3.0])
        service = ParallelTemperingService(KernelFactory())
        config = RunConfig(steps=2000, seed=8, sweeps_per_step=1, replicas=200)
        e0 = BruteForceSolver().solve(toy_instance).e0
        energies = [
            float(energy(toy_instance, SpinConfig(values=s)))
            for s in itertools.product((-1, 1), repeat=4)
        ]

        output = service.run([toy_instance], ladder, config)[0]
        curve = energy_curve(output, e0, tau_steps=10)

        for i, temperature in enumerate(ladder.temperatures):
            weights = np.asarray([math.exp(-e / temperature) for e in energies])
            exact = float(np.dot(weights, energies) / weights.sum()) - float(e0)
            assert abs(curve.excess[i] - exact) < 5 * curve.errors[i] + 0.05


class TestExtrapolation:
    """Tests for the linear fit in exp(-gap / T)."""

    def test_recovers_intercept(self) -> None:
        """Test that a curve linear in exp(-2 / T) extrapolates to its intercept."""
        temps = np.asarray([0.1, 0.2, 0.3, 0.5])
        curve = EnergyCurve.create(temps, 0.25 + 40.0 * np.exp(-2.0 / temps))

        estimate = extrapolate_zero_T(curve)

        assert estimate.excess == pytest.approx(0.25)
        assert estimate.t_low == pytest.approx(0.2)
        assert estimate.t_high == pytest.approx(0.3)

    def test_direct_formula(self) -> None:
        """Test the two-point intercept against a hand computation."""
        curve = EnergyCurve.create([0.2, 0.3], [1.0, 3.0])
        x1, x2 = math.exp(-10.0), math.exp(-2.0 / 0.3)

        estimate = extrapolate_zero_T(curve, gap=2.0)

        assert estimate.excess == pytest.approx(1.0 - x1 * 2.0 / (x2 - x1))

    def test_nearest_ladder_points(self) -> None:
        """Test that anchors snap to the closest ladder temperatures."""
        curve = EnergyCurve.create([0.15, 0.21, 0.33, 0.9], [0.0, 0.1, 0.4, 3.0])

        estimate = extrapolate_zero_T(curve)

        assert (estimate.t_low, estimate.t_high) == (0.21, 0.33)

    def test_same_anchor(self) -> None:
        """Test that a single nearby ladder point cannot be extrapolated."""
        curve = EnergyCurve.create([0.25, 1.5], [0.0, 2.0])

        with pytest.raises(InsufficientDataError, match="same ladder point"):
            extrapolate_zero_T(curve)


class TestDetectTc:
    """Tests for temperature-chaos jump detection."""

    def test_flags_sharp_jump(self) -> None:
        """Test that a step on a smooth curve is reported once."""
        temps = np.linspace(0.1, 1.0, 10)
        excess = 0.1 * temps
        excess[6:] += 2.0

        found = detect_tc(EnergyCurve.create(temps, excess, np.full(10, 0.01)))

        assert len(found) == 1
        assert found[0].t_low == pytest.approx(temps[5])
        assert found[0].t_high == pytest.approx(temps[6])
        assert found[0].jump == pytest.approx(2.0 + 0.01)

    def test_smooth_curve(self) -> None:
        """Test that a smooth rise is not flagged."""
        temps = np.linspace(0.1, 1.0, 10)

        assert detect_tc(EnergyCurve.create(temps, 3.0 * temps**2, np.full(10, 0.01))) == []

    def test_noisy_jump_ignored(self) -> None:
        """Test that a jump within its error bars is not flagged."""
        temps = np.linspace(0.1, 1.0, 10)
        excess = np.zeros(10)
        excess[6:] = 2.0

        assert detect_tc(EnergyCurve.create(temps, excess, np.full(10, 1.0))) == []

    def test_single_point(self) -> None:
        """Test that one temperature yields nothing."""
        assert detect_tc(EnergyCurve.create([0.5], [1.0])) == []


class TestOverlap:
    """Tests for the spin overlap."""

    @pytest.mark.parametrize(
        ("b", "q"),
        [
            ((1, 1, -1, -1), Fraction(1)),
            ((-1, -1, 1, 1), Fraction(-1)),
            ((1, -1, -1, 1), Fraction(0)),
            ((1, 1, -1, 1), Fraction(1, 2)),
        ],
    )
    def test_values(self, b: tuple[int, ...], q: Fraction) -> None:
        """Test q = 1 - 2 d / N."""
        assert overlap(SpinConfig(values=(1, 1, -1, -1)), SpinConfig(values=b)) == q

    def test_size_mismatch(self) -> None:
        """Test that configurations must match in size."""
        with pytest.raises(ValueError, match="differ in size"):
            overlap(SpinConfig(values=(1,)), SpinConfig(values=(1, 1)))


class TestOverlapDistributions:
    """Tests for GS-GS and GS-ES histograms."""

    def test_flipped_ground_states(self) -> None:
        """Test that a state and its flip have |q| = 1 and the ES offset is exact."""
        base = np.asarray([1, -1, 1, 1, -1, 1, -1, -1], dtype=np.int8)
        excited = base.copy()
        excited[0] = -excited[0]
        configs = np.stack([base, -base, base, excited])
        labels = [StateLabel.GS, StateLabel.GS, StateLabel.GS, StateLabel.ES]

        gs_gs, gs_es = overlap_distributions(configs, labels, LandscapeConfig(bin_width=0.125))

        assert gs_gs.samples == 3
        assert gs_gs.median == pytest.approx(1.0)
        assert gs_gs.mass[-1] == pytest.approx(1.0)
        assert gs_es.samples == 3
        assert gs_es.median == pytest.approx(0.75)
        assert sum(gs_es.mass) == pytest.approx(1.0)
        assert gs_es.mass[6] == pytest.approx(1.0)

    def test_sampled_pairs(self) -> None:
        """Test drawing pairs when there are more than the sample budget."""
        rng = np.random.default_rng(2)
        configs = 1 - 2 * rng.integers(0, 2, size=(60, 16))
        labels = [StateLabel.GS] * 40 + [StateLabel.ES] * 20

        gs_gs, gs_es = overlap_distributions(configs, labels, LandscapeConfig(pair_samples=100))

        assert gs_gs.samples == 100
        assert gs_es.samples == 100
        assert 0.0 <= gs_gs.median <= 1.0

    def test_insufficient_labels(self) -> None:
        """Test that missing excited states mark only the GS-ES distribution."""
        configs = np.ones((3, 4), dtype=np.int8)
        labels = [StateLabel.GS, StateLabel.GS, StateLabel.OTHER]

        gs_gs, gs_es = overlap_distributions(configs, labels)

        assert gs_gs.sufficient
        assert not gs_es.sufficient
        assert math.isnan(gs_es.median)

    def test_label_count_mismatch(self) -> None:
        """Test that every row needs a label."""
        with pytest.raises(ValueError, match="one label per configuration row"):
            overlap_distributions(np.ones((2, 4)), [StateLabel.GS])


class TestTypicalValues:
    """Tests for per-generation medians."""

    def test_typical_overlap(self) -> None:
        """Test grouping by generation and skipping unbinned instances."""
        pairs = [gs_pair("a", 0.9, 0.5), gs_pair("b", 0.7, 0.3), gs_pair("c", 0.1, 0.1)]
        generations = {"a": 4, "b": 4, "c": None}

        rows = typical_overlap(pairs, generations)

        assert len(rows) == 1
        assert rows[0].generation == 4
        assert rows[0].gs_gs_median == pytest.approx(0.8)
        assert rows[0].gs_es_median == pytest.approx(0.4)
        assert rows[0].instances == 2

    def test_typical_extrapolation_error(self) -> None:
        """Test the median extrapolation error per generation."""
        estimates = {
            name: ZeroTemperatureEstimate(excess=value, t_low=0.2, t_high=0.3, gap=2.0)
            for name, value in [("a", 0.1), ("b", 0.3), ("c", 0.2), ("d", 5.0)]
        }

        result = typical_extrapolation_error(estimates, {"a": 3, "b": 3, "c": 3, "d": 5})

        assert result == {3: pytest.approx(0.2), 5: pytest.approx(5.0)}
