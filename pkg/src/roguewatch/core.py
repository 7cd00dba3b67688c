"""Shared game data model: attribute schemas, suspect generation, the
communication channel with checkpoint/rollback, and trajectory records.

All randomness flows through ``random.Random`` (Mersenne Twister), which
CPython documents as stable across versions and platforms, so generated
games and trajectories replay bit-identically anywhere. Per-game streams
are derived with :func:`derive_seed`.
"""

from __future__ import annotations

import hashlib
import json
import math
import random
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

from .errors import InfeasibleRequestError, RollbackPastCheckpointError

# Attribute table used by both game variants. The first 12 rows form the
# asymmetric schema; the symmetric schema uses all 20.
ATTRIBUTE_TABLE: tuple[tuple[str, tuple[str, ...]], ...] = (
    ("hat", ("brown", "black")),
    ("mood", ("happy", "sad")),
    ("shirt_color", ("pink", "green")),
    ("hobby", ("basketball", "dancing")),
    ("pants", ("long", "short")),
    ("pants_color", ("brown", "black")),
    ("eye_color", ("blue", "brown", "green")),
    ("eye_glasses", ("circular", "square")),
    ("shirt", ("button-up", "tee")),
    ("shoe_color", ("red", "white")),
    ("hair", ("long", "short")),
    ("watch", ("bronze", "silver")),
    ("socks", ("dotted", "white")),
    ("jacket", ("yellow", "jean")),
    ("height", ("short", "tall")),
    ("age", ("young", "old")),
    ("build", ("medium", "muscular")),
    ("personality", ("introverted", "extroverted")),
    ("interests", ("sports", "arts")),
    ("occupation", ("professional", "student")),
)

ASYMMETRIC_ATTRIBUTE_COUNT = 12


class Variant(str, Enum):
    ASYMMETRIC = "asymmetric"
    SYMMETRIC = "symmetric"


class MessageKind(str, Enum):
    REQUEST_SPECIFIC = "request-specific"
    REQUEST_BROAD = "request-broad"
    RESPOND = "respond"
    RESPOND_BROAD = "respond-broad"
    SHARE = "share"
    ACCUSE = "accuse"
    SKIP = "skip"
    DISCUSSION = "discussion"
    SYSTEM = "system"


class Outcome(str, Enum):
    SUCCESS = "success"
    WRONG_ACCUSATION = "wrong-accusation"
    TIMEOUT = "timeout"


def derive_seed(base: int, *parts: object) -> int:
    """Derive a 64-bit child seed from a base seed and a label path.

    Uses blake2b so derived streams are decorrelated and portable.
    """
    h = hashlib.blake2b(digest_size=8)
    h.update(str(base).encode())
    for part in parts:
        h.update(b"/")
        h.update(str(part).encode())
    return int.from_bytes(h.digest(), "big")


@dataclass(frozen=True)
class AttributeSchema:
    """Ordered attribute names, each with 2-3 possible values."""

    attributes: tuple[tuple[str, tuple[str, ...]], ...]

    def __post_init__(self) -> None:
        names = [name for name, _ in self.attributes]
        if len(names) != len(set(names)):
            raise ValueError("attribute names must be unique")
        for name, values in self.attributes:
            if len(set(values)) < 2:
                raise ValueError(f"attribute {name!r} needs at least 2 distinct values")

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(name for name, _ in self.attributes)

    def values_of(self, name: str) -> tuple[str, ...]:
        for attr, values in self.attributes:
            if attr == name:
                return values
        raise KeyError(name)

    def combination_space(self) -> int:
        return math.prod(len(values) for _, values in self.attributes)

    @classmethod
    def for_variant(cls, variant: Variant | str) -> "AttributeSchema":
        variant = Variant(variant)
        if variant is Variant.ASYMMETRIC:
            return cls(ATTRIBUTE_TABLE[:ASYMMETRIC_ATTRIBUTE_COUNT])
        return cls(ATTRIBUTE_TABLE)


@dataclass(frozen=True)
class SuspectProfile:
    """One suspect: a 1-based id plus a full attribute assignment."""

    suspect_id: int
    assignment: tuple[tuple[str, str], ...]

    def value_of(self, attribute: str) -> str:
        for name, value in self.assignment:
            if name == attribute:
                return value
        raise KeyError(attribute)

    def as_dict(self) -> dict[str, str]:
        return dict(self.assignment)


@dataclass(frozen=True)
class GameSpec:
    """A sampled game instance. Immutable and JSON-serializable."""

    schema: AttributeSchema
    suspects: tuple[SuspectProfile, ...]
    culprit_id: int
    turn_limit: int
    variant: Variant
    seed: int

    def __post_init__(self) -> None:
        vectors = [tuple(v for _, v in s.assignment) for s in self.suspects]
        if len(vectors) != len(set(vectors)):
            raise ValueError("suspect assignments must be pairwise distinct")
        if not 1 <= self.culprit_id <= len(self.suspects):
            raise ValueError("culprit id out of range")

    @property
    def culprit(self) -> SuspectProfile:
        return self.suspects[self.culprit_id - 1]

    def to_json_obj(self) -> dict:
        return {
            "variant": self.variant.value,
            "schema": [[name, list(values)] for name, values in self.schema.attributes],
            "suspects": [
                {"id": s.suspect_id, "assignment": s.as_dict()} for s in self.suspects
            ],
            "culprit_id": self.culprit_id,
            "turn_limit": self.turn_limit,
            "seed": self.seed,
        }

    @classmethod
    def from_json_obj(cls, obj: dict) -> "GameSpec":
        schema = AttributeSchema(
            tuple((name, tuple(values)) for name, values in obj["schema"])
        )
        suspects = tuple(
            SuspectProfile(
                suspect_id=entry["id"],
                assignment=tuple(
                    (name, entry["assignment"][name]) for name in schema.names
                ),
            )
            for entry in obj["suspects"]
        )
        return cls(
            schema=schema,
            suspects=suspects,
            culprit_id=obj["culprit_id"],
            turn_limit=obj["turn_limit"],
            variant=Variant(obj["variant"]),
            seed=obj["seed"],
        )

    def to_json(self) -> str:
        return json.dumps(self.to_json_obj(), sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "GameSpec":
        return cls.from_json_obj(json.loads(text))


def generate_game(
    variant: Variant | str,
    n_suspects: int,
    turn_limit: int,
    seed: int,
) -> GameSpec:
    """Sample a game: distinct suspect profiles plus a uniform culprit.

    Deterministic for fixed inputs. Profiles are drawn uniformly over the
    attribute product space with rejection until pairwise distinct, so the
    culprit's full description matches exactly one suspect.
    """
    if n_suspects < 2:
        raise InfeasibleRequestError("need at least 2 suspects")
    if turn_limit < 1:
        raise InfeasibleRequestError("turn limit must be positive")
    schema = AttributeSchema.for_variant(variant)
    if schema.combination_space() <= n_suspects:
        raise InfeasibleRequestError(
            f"{n_suspects} distinct profiles exceed the combination space "
            f"of {schema.combination_space()}"
        )

    rng = random.Random(seed)
    seen: set[tuple[str, ...]] = set()
    suspects: list[SuspectProfile] = []
    attempts = 0
    max_attempts = 1000 * n_suspects + 10_000
    while len(suspects) < n_suspects:
        attempts += 1
        if attempts > max_attempts:
            raise InfeasibleRequestError("rejection sampling did not converge")
        vector = tuple(
            values[rng.randrange(len(values))] for _, values in schema.attributes
        )
        if vector in seen:
            continue
        seen.add(vector)
        suspects.append(
            SuspectProfile(
                suspect_id=len(suspects) + 1,
                assignment=tuple(zip(schema.names, vector)),
            )
        )
    culprit_id = rng.randrange(n_suspects) + 1
    return GameSpec(
        schema=schema,
        suspects=tuple(suspects),
        culprit_id=culprit_id,
        turn_limit=turn_limit,
        variant=Variant(variant),
        seed=seed,
    )


@dataclass
class Message:
    """A rendered channel entry plus its structured payload."""

    author: str
    kind: MessageKind
    text: str
    payload: dict = field(default_factory=dict)

    def to_json_obj(self) -> dict:
        return {
            "author": self.author,
            "kind": self.kind.value,
            "text": self.text,
            "payload": self.payload,
        }


class CommunicationChannel:
    """Ordered message log with checkpoint marks at irreversible boundaries.

    The message prefix up to the last checkpoint is immutable: every
    rollback operation refuses to cross it.
    """

    def __init__(self) -> None:
        self._messages: list[Message] = []
        self._checkpoints: list[int] = []

    @property
    def messages(self) -> tuple[Message, ...]:
        return tuple(self._messages)

    @property
    def checkpoints(self) -> tuple[int, ...]:
        return tuple(self._checkpoints)

    def __len__(self) -> int:
        return len(self._messages)

    @property
    def last_checkpoint(self) -> int:
        """Index (message count) of the last irreversible boundary, 0 if none."""
        return self._checkpoints[-1] if self._checkpoints else 0

    def append(self, message: Message, irreversible: bool = False) -> None:
        self._messages.append(message)
        if irreversible:
            self._checkpoints.append(len(self._messages))

    def mark_checkpoint(self) -> None:
        """Place a checkpoint at the current tail without a message."""
        if not self._checkpoints or self._checkpoints[-1] < len(self._messages):
            self._checkpoints.append(len(self._messages))

    def rollback_to_checkpoint(self) -> None:
        """Remove every message after the last checkpoint."""
        del self._messages[self.last_checkpoint :]

    def drop_last(self, k: int) -> None:
        """Remove the last ``k`` messages, never crossing a checkpoint."""
        if k < 0:
            raise ValueError("k must be non-negative")
        if k > len(self._messages) - self.last_checkpoint:
            raise RollbackPastCheckpointError(
                f"dropping {k} messages would cross the checkpoint at "
                f"{self.last_checkpoint}"
            )
        if k:
            del self._messages[-k:]

    def rendered(self) -> list[str]:
        return [m.text for m in self._messages]


@dataclass
class TurnRecord:
    """One agent turn: decision summary, features, and any intervention.

    ``dialog_index`` counts turns over the whole run and never resets;
    ``turn_index`` is the in-game counter that restarts on a full reset.
    """

    turn_index: int
    dialog_index: int
    agent_id: str
    role: str
    action: dict
    features: Optional[dict]
    trigger_fired: bool = False
    intervention: Optional[str] = None

    def to_json_obj(self) -> dict:
        return {
            "turn": self.turn_index,
            "dialog": self.dialog_index,
            "agent": self.agent_id,
            "role": self.role,
            "action": self.action,
            "features": self.features,
            "trigger": self.trigger_fired,
            "intervention": self.intervention,
        }


@dataclass
class Trajectory:
    """Per-turn records of one game plus the final outcome."""

    game: GameSpec
    turns: list[TurnRecord] = field(default_factory=list)
    outcome: Optional[Outcome] = None
    accused_id: Optional[int] = None

    @property
    def length(self) -> int:
        """Final cumulative dialog index (= number of recorded turns)."""
        return self.turns[-1].dialog_index if self.turns else 0

    def to_jsonl(self) -> str:
        lines = [json.dumps(t.to_json_obj(), sort_keys=True) for t in self.turns]
        lines.append(
            json.dumps(
                {
                    "outcome": self.outcome.value if self.outcome else None,
                    "accused": self.accused_id,
                    "length": self.length,
                    "game_seed": self.game.seed,
                },
                sort_keys=True,
            )
        )
        return "\n".join(lines) + "\n"


def parse_trajectory_jsonl(text: str) -> list[dict]:
    """Split a trajectories JSONL stream into per-game record lists.

    Returns one dict per game: {"turns": [...], "outcome": ..., "accused": ...,
    "length": ..., "game_seed": ...}.
    """
    games: list[dict] = []
    turns: list[dict] = []
    for line in text.splitlines():
        line = line.strip()
        if not line:
            continue
        obj = json.loads(line)
        if "outcome" in obj:
            games.append({"turns": turns, **obj})
            turns = []
        else:
            turns.append(obj)
    return games
