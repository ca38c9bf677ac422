from src.application.services.campaign_config import CampaignConfig
from src.application.services.chaosj import JChaosService
from src.application.services.engine import ParallelTemperingService
from src.application.services.mixing import EscalationConfig, HardnessService
from src.application.services.pipeline import CampaignRunner, run_campaign

__all__ = [
    "CampaignConfig",
    "CampaignRunner",
    "EscalationConfig",
    "HardnessService",
    "JChaosService",
    "ParallelTemperingService",
    "run_campaign",
]
