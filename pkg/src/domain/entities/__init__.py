from src.domain.entities.anneal import (
    AnnealRecord,
    CycleResult,
    PerturbationSpec,
    ScalingFit,
    TtsRow,
    TtsSummary,
)
from src.domain.entities.campaign import Campaign, Stage, StageMarker, TauHistogram
from src.domain.entities.chimera import ChimeraGraph, Gauge, Instance, SpinConfig
from src.domain.entities.exact import ExactResult, StateLabel
from src.domain.entities.hardness import FitStatus, HardnessReport, HardnessStatus
from src.domain.entities.landscape import EnergyCurve, LandscapeOutcome, OverlapDistribution
from src.domain.entities.run import RunConfig, RunOutput, TemperatureLadder

__all__ = [
    "AnnealRecord",
    "Campaign",
    "ChimeraGraph",
    "CycleResult",
    "EnergyCurve",
    "ExactResult",
    "FitStatus",
    "Gauge",
    "HardnessReport",
    "HardnessStatus",
    "Instance",
    "LandscapeOutcome",
    "OverlapDistribution",
    "PerturbationSpec",
    "RunConfig",
    "RunOutput",
    "ScalingFit",
    "SpinConfig",
    "Stage",
    "StageMarker",
    "StateLabel",
    "TauHistogram",
    "TemperatureLadder",
    "TtsRow",
    "TtsSummary",
]
