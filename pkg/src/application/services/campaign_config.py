"""
Campaign Config - Validated settings of an end-to-end campaign.

Campaign files are plain `key = value` text with `#` comments; list values are
comma-separated:

    campaign_id = desk-c4
    graph = 4x4x4
    instances = 1000
    round_steps = 100000, 1000000, 10000000
    survivor_caps = 64, 16
"""

import hashlib
import re
from pathlib import Path
from typing import Any

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from src.application.services.mixing import TRACE_BUDGET, EscalationConfig
from src.domain.entities.chimera import ChimeraGraph, build_chimera
from src.domain.entities.run import TemperatureLadder, default_ladder
from src.domain.errors import ConfigFormatError

GRAPH_PATTERN = re.compile(r"^(\d+)x(\d+)x(\d+)$")
SOLVER_KINDS = ("auto", "brute_force", "column_dp")
KERNEL_KINDS = ("auto", "scalar", "packed")
# settings that change how fast a campaign runs but never what it produces
RUNTIME_ONLY = frozenset({"jobs"})


class CampaignConfig(BaseModel):
    """
    Settings of a campaign. Unknown keys are rejected.

    Attributes:
        campaign_id: Name recorded in the manifest
        graph: Chimera shape "rows x cols x shore"
        instances: Number of random +-J instances
        round_steps: Escalation budgets in elementary steps
        survivor_caps: Instances carried into rounds 2, 3, ...
    """

    model_config = ConfigDict(extra="forbid", frozen=True)

    campaign_id: str = Field(default="campaign", pattern=r"^\S+$", description="Campaign name")
    graph: str = Field(default="4x4x4", description="Chimera shape rows x cols x shore")
    dead: tuple[int, ...] = Field(default=(), description="Dead vertex ids")
    instances: int = Field(default=100, ge=0, le=10**7, description="Instances to generate")
    seed: int = Field(default=0, ge=0, lt=2**64, description="Master seed")
    temperatures: tuple[float, ...] | None = Field(
        default=None, description="Ladder override; the 30-point benchmark ladder otherwise"
    )

    round_steps: tuple[int, ...] = Field(
        default=(10**5, 10**6, 10**7), min_length=1, description="Steps per escalation round"
    )
    survivor_caps: tuple[int, ...] = Field(
        default=(64, 16), description="Survivors entering each later round"
    )
    sweeps_per_step: int = Field(default=10, ge=1, description="Sweeps per elementary step")
    replicas: int = Field(default=4, ge=1, le=64, description="Replicas per temperature")
    resolvability: float = Field(default=10.0, gt=0, description="Trusted when steps >= this * tau")
    chunk_size: int = Field(default=64, ge=1, description="Instances per engine batch")
    trace_budget: int = Field(
        default=TRACE_BUDGET, ge=1, description="Trace samples kept per copy; longer runs decimate"
    )

    exact_solver: str = Field(default="auto", description="auto, brute_force or column_dp")

    landscape_factor: float = Field(default=20.0, gt=0, description="Landscape run length in tau")
    landscape_min_steps: int = Field(default=1000, ge=1, description="Shortest landscape run")
    landscape_max_steps: int = Field(default=10**6, ge=1, description="Longest landscape run")
    bins_per_decade: int = Field(default=5, ge=1, le=100, description="Tau histogram resolution")

    delta_j: float = Field(default=0.05, ge=0, le=1, description="Coupling noise sigma")
    cycles: int = Field(default=20, ge=0, description="Programming cycles per instance")
    attempts: int = Field(default=10, ge=1, description="Solves per cycle (X)")
    attempt_steps: int = Field(default=100, ge=1, description="Elementary steps per attempt")
    attempt_replicas: int = Field(default=1, ge=1, le=64, description="Replicas per attempt")
    shift_trials: int = Field(default=10, ge=0, description="Exact ground-state shift trials")

    tts_steps: tuple[int, ...] = Field(
        default=(2, 6, 20, 60, 200, 600, 2000), description="Attempt budgets of the tts sweep"
    )
    tts_cycles: int = Field(default=10, ge=1, description="Cycles per budget")
    us_per_sweep: float = Field(default=1.0, gt=0, description="Nominal microseconds per sweep")
    heuristic_steps: int = Field(default=10**5, ge=0, description="Heuristic PT step budget")
    anneal_records: str | None = Field(default=None, description="Imported anneal record table")

    jobs: int = Field(default=1, ge=1, le=1024, description="Worker processes")
    kernel: str = Field(default="auto", description="auto, scalar or packed")
    word_size: int = Field(default=64, ge=1, le=64, description="Lanes per packed word")

    @field_validator(
        "dead", "temperatures", "round_steps", "survivor_caps", "tts_steps", mode="before"
    )
    @classmethod
    def split_list(cls, value: Any) -> Any:
        """Comma-separated lists from the text format."""
        if isinstance(value, str):
            return tuple(part.strip() for part in value.split(",") if part.strip())
        return value

    @field_validator("graph")
    @classmethod
    def check_graph(cls, value: str) -> str:
        """Graph shapes are rows x cols x shore."""
        if not GRAPH_PATTERN.match(value):
            raise ValueError("graph must look like 4x4x4 (rows x cols x shore)")
        return value

    @field_validator("exact_solver")
    @classmethod
    def check_solver(cls, value: str) -> str:
        """Solver names must be known."""
        if value not in SOLVER_KINDS:
            raise ValueError(f"exact_solver must be one of {', '.join(SOLVER_KINDS)}")
        return value

    @field_validator("kernel")
    @classmethod
    def check_kernel(cls, value: str) -> str:
        """Kernel names must be known."""
        if value not in KERNEL_KINDS:
            raise ValueError(f"kernel must be one of {', '.join(KERNEL_KINDS)}")
        return value

    @model_validator(mode="after")
    def check_rounds(self) -> "CampaignConfig":
        """Cross-field checks of rounds, budgets and landscape limits."""
        if len(self.survivor_caps) != len(self.round_steps) - 1:
            raise ValueError("survivor_caps needs one entry per round after the first")
        if any(s < 1 for s in self.round_steps) or any(c < 0 for c in self.survivor_caps):
            raise ValueError("round_steps must be positive and survivor_caps non-negative")
        if any(s < 1 for s in self.tts_steps):
            raise ValueError("tts_steps must be positive")
        if self.landscape_min_steps > self.landscape_max_steps:
            raise ValueError("landscape_min_steps exceeds landscape_max_steps")
        return self

    @property
    def shape(self) -> tuple[int, int, int]:
        """(rows, cols, shore) of the graph."""
        match = GRAPH_PATTERN.match(self.graph)
        assert match is not None
        rows, cols, shore = (int(g) for g in match.groups())
        return rows, cols, shore

    def build_graph(self) -> ChimeraGraph:
        """Chimera graph with the configured dead vertices."""
        return build_chimera(*self.shape, dead=self.dead)

    def ladder(self) -> TemperatureLadder:
        """Configured ladder, or the 30-point benchmark ladder."""
        if self.temperatures is None:
            return default_ladder()
        return TemperatureLadder.create(self.temperatures)

    def escalation(self) -> EscalationConfig:
        """Escalation settings of the hardness stage."""
        return EscalationConfig(
            round_steps=self.round_steps,
            survivor_caps=self.survivor_caps,
            resolvability=self.resolvability,
            sweeps_per_step=self.sweeps_per_step,
            replicas=self.replicas,
            seed=self.seed,
            trace_budget=self.trace_budget,
        )

    def digest(self) -> str:
        """Hash of every setting that affects campaign outputs."""
        payload = self.model_dump_json(exclude=set(RUNTIME_ONLY))
        return hashlib.sha256(payload.encode()).hexdigest()


def parse_campaign_config(text: str, overrides: dict[str, Any] | None = None) -> CampaignConfig:
    """
    Parse and validate a campaign file.

    Args:
        text: File contents
        overrides: Values taking precedence over the file (e.g. --jobs)

    Raises:
        ConfigFormatError: With the line of the offending key when known
    """
    values: dict[str, Any] = {}
    lines: dict[str, int] = {}
    for number, raw in enumerate(text.splitlines(), start=1):
        content = raw.split("#", 1)[0].strip()
        if not content:
            continue
        key, sep, value = content.partition("=")
        key = key.strip()
        if not sep or not key:
            raise ConfigFormatError("expected 'key = value'", number)
        if key in values:
            raise ConfigFormatError(f"duplicate key {key!r}", number)
        values[key] = value.strip()
        lines[key] = number
    values.update(overrides or {})
    try:
        return CampaignConfig(**values)
    except ValidationError as exc:
        error = exc.errors()[0]
        key = str(error["loc"][0]) if error["loc"] else ""
        raise ConfigFormatError(
            f"{key}: {error['msg']}" if key else error["msg"], lines.get(key)
        ) from exc


def load_campaign_config(path: Path, overrides: dict[str, Any] | None = None) -> CampaignConfig:
    """Read a campaign file; errors are located with the file name."""
    try:
        return parse_campaign_config(Path(path).read_text(encoding="utf-8"), overrides)
    except ConfigFormatError as exc:
        raise exc.located(str(path)) from exc


def render_campaign_config(config: CampaignConfig) -> str:
    """Canonical campaign file; parsing it gives back the same config."""
    lines = [f"# campaign {config.campaign_id}"]
    for key, value in config.model_dump(exclude=set(RUNTIME_ONLY)).items():
        if value is None:
            continue
        if isinstance(value, tuple | list):
            value = ", ".join(str(v) for v in value)
        lines.append(f"{key} = {value}")
    return "\n".join(lines) + "\n"
