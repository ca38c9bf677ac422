from src.infrastructure.adapters.brute_force import BruteForceSolver
from src.infrastructure.adapters.campaign_store import FileCampaignStore
from src.infrastructure.adapters.column_dp import ColumnDPSolver
from src.infrastructure.adapters.kernel_factory import KernelFactory, KernelKind
from src.infrastructure.adapters.packed_kernel import PackedKernel
from src.infrastructure.adapters.scalar_kernel import ScalarKernel
from src.infrastructure.adapters.solver_factory import SolverFactory, SolverKind

__all__ = [
    "BruteForceSolver",
    "ColumnDPSolver",
    "FileCampaignStore",
    "KernelFactory",
    "KernelKind",
    "PackedKernel",
    "ScalarKernel",
    "SolverFactory",
    "SolverKind",
]
