from src.domain.ports.campaign_port import CampaignStorePort
from src.domain.ports.engine_port import (
    EngineError,
    KernelFactoryPort,
    SamplerPort,
    SweepKernel,
)
from src.domain.ports.exact_port import ExactSolverError, GroundStateSolver

__all__ = [
    "CampaignStorePort",
    "EngineError",
    "ExactSolverError",
    "GroundStateSolver",
    "KernelFactoryPort",
    "SamplerPort",
    "SweepKernel",
]
