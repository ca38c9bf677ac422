"""
Unit tests for the Chimera graph, instances, energies and gauges.
"""

from fractions import Fraction

import numpy as np
import pytest

from src.domain.entities.chimera import (
    ChimeraError,
    ChimeraGraph,
    Gauge,
    Instance,
    SpinConfig,
    apply_gauge,
    apply_gauge_config,
    build_chimera,
    energy,
    energy_batch,
    generate_instance,
)


class TestBuildChimera:
    """Tests for graph construction."""

    @pytest.mark.parametrize(
        ("rows", "cols", "vertices", "edges"),
        [(1, 1, 8, 16), (2, 2, 32, 80), (8, 8, 512, 1472)],
    )
    def test_counts(self, rows: int, cols: int, vertices: int, edges: int) -> None:
        """Test vertex and edge counts of ideal graphs."""
        graph = build_chimera(rows, cols, 4)

        assert graph.size == vertices
        assert len(graph.edges) == edges

    @pytest.mark.parametrize("shape", [(r, c, k) for r in (1, 3, 8) for c in (1, 2, 5) for k in (1, 4)])
    def test_closed_form(self, shape: tuple[int, int, int]) -> None:
        """Test that every ideal graph matches the closed-form counts."""
        graph = build_chimera(*shape)

        assert graph.size == graph.ideal_vertex_count
        assert len(graph.edges) == graph.ideal_edge_count

    def test_edges_sorted_and_unique(self, c2_graph: ChimeraGraph) -> None:
        """Test the canonical edge ordering."""
        assert list(c2_graph.edges) == sorted(set(c2_graph.edges))
        assert all(i < j for i, j in c2_graph.edges)

    def test_degrees(self, c2_graph: ChimeraGraph) -> None:
        """Test that every vertex of C(2, 2, 4) has degree five."""
        degrees = c2_graph.degrees()

        assert max(degrees.values()) == 5
        assert min(degrees.values()) == 5

    def test_dead_vertices_removed(self) -> None:
        """Test that a dead vertex takes its edges with it."""
        graph = build_chimera(2, 2, 4, dead=[0])

        assert graph.size == 31
        assert len(graph.edges) == 80 - 5
        assert not graph.is_active(0)
        assert all(0 not in edge for edge in graph.edges)

    def test_rejects_out_of_range_dead(self) -> None:
        """Test validation of dead ids."""
        with pytest.raises(ChimeraError, match="dead vertex 8 outside"):
            build_chimera(1, 1, 4, dead=[8])

    def test_rejects_zero_size(self) -> None:
        """Test validation of graph sizes."""
        with pytest.raises(ChimeraError, match="at least 1"):
            build_chimera(0, 1, 4)

    def test_bipartition(self, c2_graph: ChimeraGraph) -> None:
        """Test that every edge joins the two colour classes."""
        assert all(c2_graph.color(i) != c2_graph.color(j) for i, j in c2_graph.edges)

    def test_color_classes_cover_graph(self, c2_graph: ChimeraGraph) -> None:
        """Test that the sweep classes partition the active vertices."""
        first, second = c2_graph.color_classes()
        members = sorted([*first.positions.tolist(), *second.positions.tolist()])

        assert members == list(range(c2_graph.size))
        assert int(first.degree.sum() + second.degree.sum()) == 2 * len(c2_graph.edges)

    def test_coordinate_round_trip(self, c2_graph: ChimeraGraph) -> None:
        """Test that vertex ids and cell coordinates agree."""
        coord = c2_graph.coordinate(21)

        assert c2_graph.vertex_id(coord.row, coord.col, coord.half, coord.index) == 21

    def test_deterministic(self) -> None:
        """Test that equal inputs build equal graphs."""
        assert build_chimera(3, 2, 4, dead=[5]) == ChimeraGraph.create(3, 2, 4, dead=[5])


class TestGenerateInstance:
    """Tests for random +-J instances."""

    def test_reproducible(self, c2_graph: ChimeraGraph) -> None:
        """Test that a seed fixes the instance."""
        first = generate_instance(c2_graph, seed=42)
        second = generate_instance(c2_graph, seed=42)

        assert first == second
        assert first.id == second.id

    def test_couplings_are_pm_one(self, c2_instance: Instance) -> None:
        """Test that generated instances are standard."""
        assert c2_instance.is_standard
        assert set(c2_instance.couplings) <= {Fraction(1), Fraction(-1)}
        assert not c2_instance.has_fields

    def test_balanced_signs(self) -> None:
        """Test that +1 couplings appear with probability one half."""
        graph = build_chimera(8, 8, 4)
        positive = sum(
            int((generate_instance(graph, seed).coupling_array > 0).sum()) for seed in range(200)
        )
        total = 200 * len(graph.edges)
        sigma = (total * 0.25) ** 0.5

        assert abs(positive - total / 2) < 3 * sigma

    def test_empty_graph(self) -> None:
        """Test an instance on a graph without edges."""
        graph = build_chimera(1, 1, 1, dead=[1])
        instance = generate_instance(graph, seed=1)

        assert instance.couplings == ()
        assert energy(instance, SpinConfig(values=(1,))) == 0

    def test_rejects_bad_id(self, c2_graph: ChimeraGraph) -> None:
        """Test that ids may not contain whitespace."""
        with pytest.raises(ChimeraError, match="without whitespace"):
            generate_instance(c2_graph, seed=1, instance_id="bad id")


class TestEnergy:
    """Tests for exact energies."""

    def test_single_bond(self) -> None:
        """Test a single antiferromagnetic bond."""
        graph = build_chimera(1, 1, 1)
        instance = Instance.create(graph, couplings=[1])

        assert energy(instance, SpinConfig(values=(1, -1))) == -1

    def test_ferromagnetic_cell(self, cell_graph: ChimeraGraph) -> None:
        """Test an aligned ferromagnetic cell."""
        instance = Instance.create(cell_graph, couplings=[-1] * 16)

        assert energy(instance, SpinConfig(values=(1,) * 8)) == -16

    def test_matches_edge_sum(self, c2_instance: Instance) -> None:
        """Test against an independent sum over the edge list."""
        config = SpinConfig.random(c2_instance.size, seed=11)
        s = dict(zip(c2_instance.graph.active_vertices, config.values, strict=True))
        expected = sum(
            int(j) * s[u] * s[v]
            for (u, v), j in zip(c2_instance.graph.edges, c2_instance.couplings, strict=True)
        )

        assert energy(c2_instance, config) == expected

    def test_rational_energy_exact(self, toy_instance: Instance) -> None:
        """Test that fractional fields stay exact."""
        assert energy(toy_instance, SpinConfig(values=(1, 1, 1, 1))) == Fraction(1, 2)

    def test_batch_agrees(self, c2_instance: Instance) -> None:
        """Test the vectorized path against the exact path."""
        rng = np.random.default_rng(3)
        spins = 1 - 2 * rng.integers(0, 2, size=(20, c2_instance.size))
        batch = energy_batch(c2_instance, spins)

        for row, value in zip(spins, batch, strict=True):
            assert energy(c2_instance, SpinConfig.from_array(row)) == value

    def test_dimension_mismatch(self, c2_instance: Instance) -> None:
        """Test that a short configuration is rejected."""
        with pytest.raises(ChimeraError, match="configuration has 3 entries"):
            energy(c2_instance, SpinConfig(values=(1, 1, 1)))


class TestGauge:
    """Tests for gauge transformations."""

    def test_identity(self, c2_instance: Instance) -> None:
        """Test that the identity gauge changes nothing."""
        assert apply_gauge(c2_instance, Gauge.identity(c2_instance.size)) == c2_instance

    def test_global_flip_without_fields(self, c2_instance: Instance) -> None:
        """Test that flipping every sign leaves a zero-field instance intact."""
        flip = Gauge(values=(-1,) * c2_instance.size)

        assert apply_gauge(c2_instance, flip) == c2_instance

    def test_energy_invariant(self, toy_instance: Instance) -> None:
        """Test that energies are preserved under a paired transformation."""
        gauge = Gauge(values=(1, -1, -1, 1))
        for seed in range(8):
            config = SpinConfig.random(4, seed)
            transformed = apply_gauge(toy_instance, gauge)

            assert energy(transformed, apply_gauge_config(config, gauge)) == energy(
                toy_instance, config
            )

    def test_involution(self, c2_instance: Instance) -> None:
        """Test that applying a gauge twice is the identity."""
        gauge = Gauge.random(c2_instance.size, seed=5)

        assert apply_gauge(apply_gauge(c2_instance, gauge), gauge) == c2_instance

    def test_dimension_mismatch(self, c2_instance: Instance) -> None:
        """Test validation of the gauge length."""
        with pytest.raises(ChimeraError, match="gauge has 2 entries"):
            apply_gauge(c2_instance, Gauge(values=(1, -1)))
