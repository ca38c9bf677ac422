# Commands Module
"""
CLI Commands - One click command per pipeline stage.
"""

from src.infrastructure.cli.commands.campaign import campaign
from src.infrastructure.cli.commands.chaos import jchaos
from src.infrastructure.cli.commands.instances import exact, gen
from src.infrastructure.cli.commands.landscape import landscape, overlap
from src.infrastructure.cli.commands.sampling import hist, pt, tau
from src.infrastructure.cli.commands.scaling import fit, tts

COMMANDS = (gen, pt, tau, exact, landscape, overlap, jchaos, tts, fit, campaign, hist)

__all__ = [
    "COMMANDS",
    "campaign",
    "exact",
    "fit",
    "gen",
    "hist",
    "jchaos",
    "landscape",
    "overlap",
    "pt",
    "tau",
    "tts",
]
