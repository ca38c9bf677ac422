"""
Unit tests for coupling noise, programming cycles and success percentiles.
"""

from fractions import Fraction

import numpy as np
import pytest

from src.application.services.chaosj import (
    HeuristicBudget,
    JChaosService,
    bootstrap_median_error,
    cycle_seeds,
    format_uncertainty,
    gs_shift,
    percentile,
    percentile_report,
    perturb,
    ratio_89,
)
from src.application.services.engine import ParallelTemperingService
from src.domain.entities.anneal import CycleResult, PerturbationSpec
from src.domain.entities.chimera import ChimeraGraph, Instance, generate_instance
from src.domain.entities.run import default_ladder
from src.domain.errors import InsufficientDataError
from src.infrastructure.adapters.brute_force import BruteForceSolver
from src.infrastructure.adapters.column_dp import ColumnDPSolver
from src.infrastructure.adapters.kernel_factory import KernelFactory


def cycles_with(hits: list[int], attempts: int = 10) -> list[CycleResult]:
    return [
        CycleResult(
            instance_id="x", cycle=i, gauge_seed=0, perturb_seed=0, attempts=attempts, hits=h
        )
        for i, h in enumerate(hits)
    ]


class TestPerturbationSpec:
    """Tests for noise parameter validation."""

    def test_negative_noise(self) -> None:
        """Test that the noise level cannot be negative."""
        with pytest.raises(ValueError, match="non-negative"):
            PerturbationSpec(delta_j=-0.1)

    def test_inverted_clamp(self) -> None:
        """Test that a clamp range must be ordered."""
        with pytest.raises(ValueError, match="low <= high"):
            PerturbationSpec(clamp=(1.0, -1.0))

    def test_with_seed(self) -> None:
        """Test that reseeding keeps the other settings."""
        spec = PerturbationSpec(delta_j=0.1, decimals=4).with_seed(9)

        assert (spec.delta_j, spec.seed, spec.decimals) == (0.1, 9, 4)


class TestPerturb:
    """Tests for Gaussian coupling noise."""

    def test_zero_noise_is_identity(self, c2_instance: Instance) -> None:
        """Test that no noise returns the instance itself."""
        assert perturb(c2_instance, PerturbationSpec(delta_j=0.0)) is c2_instance

    def test_reproducible(self, c2_instance: Instance) -> None:
        """Test that the noise seed fixes the perturbed couplings."""
        spec = PerturbationSpec(delta_j=0.05, seed=3)

        assert perturb(c2_instance, spec) == perturb(c2_instance, spec)
        assert perturb(c2_instance, spec) != perturb(c2_instance, spec.with_seed(4))

    def test_noise_level(self, c2_instance: Instance) -> None:
        """Test identity, rounding and the size of the shifts."""
        perturbed = perturb(c2_instance, PerturbationSpec(delta_j=0.05, seed=1, decimals=6))
        shifts = np.asarray(
            [float(p - j) for p, j in zip(perturbed.couplings, c2_instance.couplings, strict=True)]
        )

        assert perturbed.id == f"{c2_instance.id}+p1"
        assert perturbed.graph == c2_instance.graph
        assert all(10**6 % p.denominator == 0 for p in perturbed.couplings)
        assert 0.02 < shifts.std() < 0.08
        assert perturbed.fields == c2_instance.fields
        assert not perturbed.is_standard

    def test_clamp(self, c2_instance: Instance) -> None:
        """Test that clamped couplings stay inside the range."""
        spec = PerturbationSpec(delta_j=0.5, seed=2, clamp=(-1.0, 1.0))

        perturbed = perturb(c2_instance, spec)

        assert all(-1 <= j <= 1 for j in perturbed.couplings)

    def test_bias_hook(self, cell_graph: ChimeraGraph) -> None:
        """Test that a bias hook adds fields."""
        instance = generate_instance(cell_graph, seed=2)
        spec = PerturbationSpec(delta_j=0.0, bias_hook=lambda graph, rng: [0.25] * graph.size)

        perturbed = perturb(instance, spec)

        assert perturbed.fields == (Fraction(1, 4),) * 8
        assert perturbed.couplings == instance.couplings


class TestGroundStateShift:
    """Tests for exact ground-state comparisons under noise."""

    def test_no_noise(self, cell_graph: ChimeraGraph) -> None:
        """Test that zero noise keeps the exact ground state."""
        instance = generate_instance(cell_graph, seed=4)

        shift = gs_shift(instance, PerturbationSpec(delta_j=0.0), 3, BruteForceSolver())

        assert shift.overlaps == (1.0, 1.0, 1.0)
        assert shift.changed == 0
        assert shift.changed_fraction == 0.0

    def test_small_noise_keeps_energy(self, c2_instance: Instance) -> None:
        """Test that weak noise cannot lift a state across the excitation gap."""
        spec = PerturbationSpec(delta_j=0.01, seed=5)

        shift = gs_shift(c2_instance, spec, 3, ColumnDPSolver())

        assert shift.trials == 3
        assert shift.changed == 0
        assert all(0.0 <= q <= 1.0 for q in shift.overlaps)


class TestCycles:
    """Tests for simulated programming cycles."""

    def test_cycle_seeds(self) -> None:
        """Test that cycle seeds are reproducible and distinct."""
        assert cycle_seeds(1, 0) == cycle_seeds(1, 0)
        assert cycle_seeds(1, 0) != cycle_seeds(1, 1)
        assert len(set(cycle_seeds(1, 0))) == 3

    def test_easy_instance_always_solved(self, cell_graph: ChimeraGraph) -> None:
        """Test that a generous budget solves a single cell in every attempt."""
        instance = generate_instance(cell_graph, seed=6)
        e0 = BruteForceSolver().solve(instance).e0
        service = JChaosService(
            ParallelTemperingService(KernelFactory()),
            default_ladder(),
            HeuristicBudget(steps=50, sweeps_per_step=5, replicas=1),
        )

        results = service.simulate_cycles(
            instance, PerturbationSpec(delta_j=0.01), n_cycles=3, attempts=2, e0=e0, seed=11
        )

        assert [r.cycle for r in results] == [0, 1, 2]
        assert all(r.hits == r.attempts == 2 for r in results)
        assert all(r.p == 1.0 for r in results)

    def test_rejects_zero_attempts(self, cell_graph: ChimeraGraph) -> None:
        """Test that a cycle needs attempts."""
        instance = generate_instance(cell_graph, seed=6)
        service = JChaosService(
            ParallelTemperingService(KernelFactory()), default_ladder(), HeuristicBudget()
        )

        with pytest.raises(ValueError, match="at least 1"):
            service.simulate_cycles(instance, PerturbationSpec(), 1, 0, Fraction(0), 0)

    def test_cycle_validation(self) -> None:
        """Test that hits cannot exceed attempts."""
        with pytest.raises(ValueError, match="0..attempts"):
            cycles_with([11])


class TestPercentiles:
    """Tests for percentile statistics of success probabilities."""

    def test_linear_interpolation(self) -> None:
        """Test quantiles of an evenly spaced sample."""
        values = [i / 10 for i in range(11)]

        assert percentile(values, 0.5) == pytest.approx(0.5)
        assert percentile(values, 0.85) == pytest.approx(0.85)

    def test_needs_ten_values(self) -> None:
        """Test that percentiles need ten cycles."""
        with pytest.raises(InsufficientDataError, match="at least 10 cycles"):
            percentile([0.1] * 9, 0.5)

    def test_ratio_undefined_at_zero(self) -> None:
        """Test that R_89 is undefined when I_0.9 vanishes."""
        assert ratio_89([0.0] * 12) is None
        assert ratio_89([0.5] * 12) == pytest.approx(1.0)

    def test_report(self) -> None:
        """Test the assembled percentile report."""
        report = percentile_report("x", cycles_with(list(range(11))))

        assert report.cycles == 11
        assert report.i50 == pytest.approx(0.5)
        assert report.i90 == pytest.approx(0.9)
        assert report.r89 == pytest.approx(0.8 / 0.9)
        assert report.i50_error > 0

    def test_bootstrap_constant(self) -> None:
        """Test that a constant sample has no median uncertainty."""
        assert bootstrap_median_error([0.3] * 20) == 0.0


class TestFormatUncertainty:
    """Tests for value(error) rendering."""

    @pytest.mark.parametrize(
        ("value", "error", "text"),
        [
            (6.7e-4, 5e-5, "6.7(5)e-04"),
            (123.0, 4.0, "1.23(4)e+02"),
            (1.0, 0.096, "1.0(1)e+00"),
            (1.0, 0.0, "1"),
            (0.25, float("nan"), "0.25"),
        ],
    )
    def test_rendering(self, value: float, error: float, text: str) -> None:
        """Test one significant error digit."""
        assert format_uncertainty(value, error) == text
