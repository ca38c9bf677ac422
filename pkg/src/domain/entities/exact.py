"""
Exact Entity - Ground-state results and state labels.
"""

from dataclasses import dataclass
from enum import StrEnum
from fractions import Fraction
from typing import Any

from src.domain.entities.chimera import SpinConfig


class StateLabel(StrEnum):
    """Label of a stored configuration relative to the ground state."""

    GS = "GS"
    ES = "ES"
    OTHER = "other"


@dataclass(frozen=True, slots=True)
class ExactResult:
    """
    Immutable ground-state result.

    Attributes:
        instance_id: Solved instance
        e0: Exact ground-state energy
        witness: A configuration with energy e0
        degeneracy: Number of ground states, None when not computed
        saturated: True when the degeneracy count hit its ceiling
        solver: Name of the producing solver
    """

    instance_id: str
    e0: Fraction
    witness: SpinConfig
    degeneracy: int | None = None
    saturated: bool = False
    solver: str = ""

    def __post_init__(self) -> None:
        """Validate the degeneracy."""
        if self.degeneracy is not None and self.degeneracy < 1:
            raise ValueError("degeneracy must be at least 1")

    @property
    def degeneracy_label(self) -> str:
        """Degeneracy for tables, NA when unknown and >=n when saturated."""
        if self.degeneracy is None:
            return "NA"
        return f">={self.degeneracy}" if self.saturated else str(self.degeneracy)

    def to_dict(self) -> dict[str, Any]:
        """Result fields for the exact table and logs."""
        return {
            "id": self.instance_id,
            "e0": str(self.e0),
            "degeneracy": self.degeneracy_label,
            "solver": self.solver,
        }
