"""
Pytest configuration and shared fixtures.
"""

from fractions import Fraction
from pathlib import Path

import pytest
import structlog

from src.domain.entities.chimera import ChimeraGraph, Instance, build_chimera, generate_instance
from src.domain.entities.run import TemperatureLadder
from src.infrastructure.adapters.kernel_factory import KernelFactory, KernelKind


@pytest.fixture(autouse=True)
def quiet_logging() -> None:
    """Drop log events below WARNING so test output stays readable."""
    structlog.configure(wrapper_class=structlog.make_filtering_bound_logger(30))


@pytest.fixture
def cell_graph() -> ChimeraGraph:
    """A single K_{4,4} unit cell."""
    return build_chimera(1, 1, 4)


@pytest.fixture
def c2_graph() -> ChimeraGraph:
    """The 32-spin C(2, 2, 4) graph."""
    return build_chimera(2, 2, 4)


@pytest.fixture
def c2_instance(c2_graph: ChimeraGraph) -> Instance:
    """A seeded +-1 instance on C(2, 2, 4)."""
    return generate_instance(c2_graph, seed=7)


@pytest.fixture
def toy_instance() -> Instance:
    """Four spins on a C(1, 1, 2) cell with mixed couplings and one field."""
    graph = build_chimera(1, 1, 2)
    return Instance.create(
        graph,
        couplings=[1, -1, -1, 1],
        fields=[Fraction(1, 2), 0, 0, 0],
        seed=3,
        instance_id="toy",
    )


@pytest.fixture
def small_ladder() -> TemperatureLadder:
    """Six temperatures spanning the cold and hot regimes."""
    return TemperatureLadder.create([0.2, 0.35, 0.5, 0.8, 1.2, 1.632])


@pytest.fixture
def scalar_factory() -> KernelFactory:
    return KernelFactory(KernelKind.SCALAR)


@pytest.fixture
def campaign_dir(tmp_path: Path) -> Path:
    """An empty directory for campaign artifacts."""
    target = tmp_path / "campaign"
    target.mkdir()
    return target
