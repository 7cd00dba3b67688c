"""Monitor triggers and the environment modifications they cause.

Triggers are evaluated after an agent's decision is produced but before it
is committed to the channel, so a triggering decision is itself discarded.
Every intervention respects irreversibility: nothing at or before a channel
checkpoint is ever undone, and the commons harvest log is append-only.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

from .commons import CommonsState
from .errors import InvalidInterventionError
from .whodunit import WhodunitState


class InterventionKind(str, Enum):
    FULL_RESET = "full-reset"
    ROUND_RESET = "round-reset"
    RESAMPLE = "resample"
    NONE = "none"


@dataclass(frozen=True)
class InterventionPolicy:
    """``resample_temperature`` overrides the backend's sampling temperature
    on the re-invocation only; resampling a temperature-0 model without it
    is a deterministic no-op."""

    kind: InterventionKind = InterventionKind.NONE
    cap_per_role: int = 1
    resample_temperature: Optional[float] = None

    def __post_init__(self) -> None:
        if self.cap_per_role < 0:
            raise ValueError("cap must be non-negative")

    def to_json_obj(self) -> dict:
        obj = {"kind": self.kind.value, "cap": self.cap_per_role}
        if self.resample_temperature is not None:
            obj["resample_temperature"] = self.resample_temperature
        return obj

    @classmethod
    def from_json_obj(cls, obj: dict) -> "InterventionPolicy":
        return cls(
            kind=InterventionKind(obj["kind"]),
            cap_per_role=obj["cap"],
            resample_temperature=obj.get("resample_temperature"),
        )


@dataclass
class TriggerBudget:
    """Per-role trigger accounting; a role at its cap can no longer trigger."""

    cap_per_role: int
    used: dict[str, int] = field(default_factory=dict)

    def remaining(self, role: str) -> int:
        return self.cap_per_role - self.used.get(role, 0)


def evaluate_trigger(
    probability: float, tau: float, budget: TriggerBudget, role: str
) -> bool:
    """True iff the success estimate is strictly below tau and the role has
    budget left; consumes one unit of budget when true."""
    if probability < tau and budget.remaining(role) > 0:
        budget.used[role] = budget.used.get(role, 0) + 1
        return True
    return False


def evaluate_random_trigger(fired: bool, budget: TriggerBudget, role: str) -> bool:
    """Budget gate for the random-baseline monitor."""
    if fired and budget.remaining(role) > 0:
        budget.used[role] = budget.used.get(role, 0) + 1
        return True
    return False


def full_reset(state: WhodunitState) -> None:
    """Restart the game in place: channel emptied, per-game turn counter
    back to 1. Only valid while no accusation has been committed (the
    cumulative dialog counter lives in the harness and keeps running)."""
    if state.terminal or state.channel.checkpoints:
        raise InvalidInterventionError("cannot fully reset after an accusation")
    state.channel.rollback_to_checkpoint()
    state.turn_index = 1
    state.next_index = 0


def round_reset(state: CommonsState) -> None:
    """Drop everything said since the last harvest; harvests stay."""
    state.channel.rollback_to_checkpoint()
