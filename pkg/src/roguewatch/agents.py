"""Agent decision contract, deterministic scripted oracles, and a synthetic
rogue wrapper with controllable corruption.

Scripted agents re-derive their view of the game from the rendered channel
on every turn instead of carrying incremental state. That makes them
trivially consistent after channel rollbacks and makes resampling a
deterministic no-op, at the cost of re-parsing a few dozen lines per turn.

The rogue wrapper is a test instrument: it receives the ground-truth
GameSpec so its corruption can be made failure-forcing, which real agents
obviously cannot do. Its corruption RNG stream deliberately survives
resets, so a re-run after an intervention draws fresh corruption coins.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

from .core import GameSpec, MessageKind
from .whodunit import AsymAction, KnowledgeSet, SymAction, parse_rendered

CLEAN_BAND = (0.0, 0.2)
CORRUPT_BAND = (0.8, math.log(10.0))

BEHAVIOR_HALLUCINATE = "hallucinate-fact"
BEHAVIOR_REPEAT = "repeat-query"
BEHAVIOR_WRONG_ACCUSATION = "wrong-accusation"
BEHAVIOR_DROP_FACT = "drop-known-fact"

_ONE_HOT_10 = (1.0,) + (0.0,) * 9


@dataclass(frozen=True)
class AgentObservation:
    """Everything an agent may condition on: its private knowledge, the
    rendered channel, and the public game parameters."""

    knowledge: KnowledgeSet
    channel_view: tuple[str, ...]
    turn_index: int
    turn_limit: int
    role: str
    n_suspects: int
    task: str = "whodunit"


@dataclass
class AgentDecision:
    action: object
    generation_text: str = ""
    positions: tuple[tuple[float, ...], ...] = ()


def decide(backend, observation: AgentObservation) -> AgentDecision:
    """Dispatch to a backend; exists so harness code reads uniformly."""
    return backend.decide(observation)


def distribution_with_entropy(target: float, size: int = 10) -> tuple[float, ...]:
    """A two-level distribution over ``size`` candidates with the given
    entropy (nats): probability p on the first entry, the rest uniform.

    Entropy runs monotonically from 0 (p=1) to ln(size) (p=1/size), so the
    target is found by bisection.
    """
    max_h = math.log(size)
    if not 0.0 <= target <= max_h + 1e-12:
        raise ValueError(f"entropy target {target} outside [0, ln {size}]")

    def h(p: float) -> float:
        if p >= 1.0:
            return 0.0
        rest = (1.0 - p) / (size - 1)
        return -p * math.log(p) - (1.0 - p) * math.log(rest)

    lo, hi = 1.0 / size, 1.0  # h(lo)=ln(size), h(hi)=0
    for _ in range(80):
        mid = (lo + hi) / 2.0
        if h(mid) > target:
            lo = mid
        else:
            hi = mid
    p = (lo + hi) / 2.0
    rest = (1.0 - p) / (size - 1)
    return (p,) + (rest,) * (size - 1)


def _paired_responses(channel_view: Sequence[str]) -> list[dict]:
    """Parse the channel, pairing each yes/no respond with the request it
    answers so downstream updates see (target, property, value, truth)."""
    events: list[dict] = []
    last_request: Optional[dict] = None
    for line in channel_view:
        parsed = parse_rendered(line)
        if parsed is None:
            continue
        kind = parsed["kind"]
        if kind is MessageKind.REQUEST_SPECIFIC:
            last_request = parsed
        elif kind is MessageKind.RESPOND and last_request is not None:
            parsed = {**parsed, "property": last_request["property"]}
        events.append(parsed)
    return events


class ScriptedAccuser:
    """Elimination accuser: keeps a candidate set, asks about the lowest-id
    candidate's next unconfirmed attribute using the believed culprit value,
    and accuses once a single candidate remains or is fully confirmed.

    Yes/no answers eliminate one candidate at a time; broad answers
    intersect the candidate set with the returned character list.
    ``belief_overrides`` lets the rogue wrapper corrupt what the agent
    thinks the culprit looks like.
    """

    def __init__(self) -> None:
        self.belief_overrides: dict[str, str] = {}

    def reset(self) -> None:
        self.belief_overrides.clear()

    def _believed(self, knowledge: KnowledgeSet) -> dict[str, str]:
        believed = dict(knowledge.culprit_facts)
        believed.update(self.belief_overrides)
        return believed

    def survey(self, obs: AgentObservation) -> tuple[set[int], dict[int, set[str]]]:
        """Candidates and per-candidate confirmed attributes, derived from
        the rendered channel under the current beliefs."""
        believed = self._believed(obs.knowledge)
        candidates = set(range(1, obs.n_suspects + 1))
        confirmed: dict[int, set[str]] = {i: set() for i in candidates}
        for event in _paired_responses(obs.channel_view):
            kind = event["kind"]
            if kind is MessageKind.RESPOND and "property" in event:
                target, prop = event["target"], event["property"]
                asked_value = event["value"]
                if event["truth"]:
                    if asked_value == believed.get(prop):
                        confirmed.setdefault(target, set()).add(prop)
                    else:
                        candidates.discard(target)
                elif asked_value == believed.get(prop):
                    candidates.discard(target)
            elif kind is MessageKind.RESPOND_BROAD:
                prop, value = event["property"], event["value"]
                listed = set(event["characters"])
                if believed.get(prop) == value:
                    candidates &= listed
                    for c in candidates:
                        confirmed.setdefault(c, set()).add(prop)
                else:
                    candidates -= listed
        return candidates, confirmed

    def decide(self, obs: AgentObservation) -> AgentDecision:
        believed = self._believed(obs.knowledge)
        attribute_order = [prop for prop, _ in obs.knowledge.culprit_facts]
        candidates, confirmed = self.survey(obs)

        if len(candidates) == 1:
            action = AsymAction(MessageKind.ACCUSE, target=min(candidates))
        elif not candidates:
            # Contradictory transcript (only reachable with corrupted
            # beliefs or a lying partner): best-effort accusation.
            action = AsymAction(MessageKind.ACCUSE, target=1)
        else:
            target = min(candidates)
            fully_confirmed = [
                c for c in sorted(candidates) if confirmed[c] >= set(attribute_order)
            ]
            if fully_confirmed:
                action = AsymAction(MessageKind.ACCUSE, target=fully_confirmed[0])
            else:
                prop = next(p for p in attribute_order if p not in confirmed[target])
                action = AsymAction(
                    MessageKind.REQUEST_SPECIFIC,
                    target=target,
                    prop=prop,
                    value=believed[prop],
                )
        return AgentDecision(action=action, positions=(_ONE_HOT_10,))


class ScriptedIntel:
    """Truthful intel. With ``broad_for_specific`` (the default) it answers
    a specific request with a broad message on the queried property and
    value, listing every matching character; otherwise it answers yes/no.
    Broad requests get the (property, value) split that most evenly divides
    the suspects still consistent with the culprit values revealed by the
    requester's earlier specific queries."""

    def __init__(self, broad_for_specific: bool = True) -> None:
        self.broad_for_specific = broad_for_specific

    def reset(self) -> None:
        pass

    def _matching(self, table, prop: str, value: str) -> tuple[int, ...]:
        return tuple(
            s.suspect_id for s in table if s.value_of(prop) == value
        )

    def decide(self, obs: AgentObservation) -> AgentDecision:
        table = obs.knowledge.suspect_table
        events = _paired_responses(obs.channel_view)
        pending = events[-1] if events else None

        if pending and pending["kind"] is MessageKind.REQUEST_SPECIFIC:
            prop, value = pending["property"], pending["value"]
            if self.broad_for_specific:
                action = AsymAction(
                    MessageKind.RESPOND_BROAD,
                    prop=prop,
                    value=value,
                    broad_list=self._matching(table, prop, value),
                )
            else:
                target = pending["target"]
                truth = any(
                    s.suspect_id == target and s.value_of(prop) == value for s in table
                )
                action = AsymAction(MessageKind.RESPOND, truth=truth)
            return AgentDecision(action=action, positions=(_ONE_HOT_10,))

        # Broad request (or nothing pending): pick the most even split.
        revealed = {
            e["property"]: e["value"]
            for e in events
            if e["kind"] is MessageKind.REQUEST_SPECIFIC
        }
        consistent = [
            s
            for s in table
            if all(s.value_of(p) == v for p, v in revealed.items())
        ]
        broadcast_pairs = {
            (e["property"], e["value"])
            for e in events
            if e["kind"] is MessageKind.RESPOND_BROAD
        }
        schema_pairs = []
        for prop, _ in table[0].assignment:
            values = sorted({s.value_of(prop) for s in table})
            schema_pairs.extend((prop, value) for value in values)

        best = None
        best_score = -1
        for prop, value in schema_pairs:
            if (prop, value) in broadcast_pairs:
                continue
            inside = sum(1 for s in consistent if s.value_of(prop) == value)
            score = min(inside, len(consistent) - inside)
            if score > best_score:
                best, best_score = (prop, value), score
        if best is None:
            best = schema_pairs[0]
        prop, value = best
        action = AsymAction(
            MessageKind.RESPOND_BROAD,
            prop=prop,
            value=value,
            broad_list=self._matching(table, prop, value),
        )
        return AgentDecision(action=action, positions=(_ONE_HOT_10,))


class ScriptedSymmetricPlayer:
    """Shares the first own fact that shrinks the publicly-consistent
    candidate set; accuses when that set is a singleton; skips otherwise."""

    def __init__(self) -> None:
        self.belief_overrides: dict[str, str] = {}

    def reset(self) -> None:
        self.belief_overrides.clear()

    def decide(self, obs: AgentObservation) -> AgentDecision:
        table = obs.knowledge.suspect_table
        public: dict[str, str] = {}
        for line in obs.channel_view:
            parsed = parse_rendered(line)
            if parsed and parsed["kind"] is MessageKind.SHARE:
                public[parsed["property"]] = parsed["value"]
        consistent = [
            s for s in table if all(s.value_of(p) == v for p, v in public.items())
        ]
        if len(consistent) == 1:
            action: SymAction = SymAction(
                MessageKind.ACCUSE, target=consistent[0].suspect_id
            )
            return AgentDecision(action=action, positions=(_ONE_HOT_10,))

        for index, (prop, value) in enumerate(obs.knowledge.culprit_facts):
            value = self.belief_overrides.get(prop, value)
            if prop in public:
                continue
            survivors = [s for s in consistent if s.value_of(prop) == value]
            if len(survivors) < len(consistent):
                action = SymAction(
                    MessageKind.SHARE, fact_index=index, fact=(prop, value)
                )
                return AgentDecision(action=action, positions=(_ONE_HOT_10,))
        return AgentDecision(
            action=SymAction(MessageKind.SKIP), positions=(_ONE_HOT_10,)
        )


@dataclass(frozen=True)
class RogueProfile:
    """Corruption knobs for the synthetic rogue.

    ``epsilon`` is the per-turn corruption probability; ``behaviors`` is a
    weighted choice over corruption kinds; the entropy bands control the
    annotated-position uncertainty on clean vs corrupted turns and must be
    separated (clean upper bound below the corrupt lower bound).
    """

    epsilon: float
    behaviors: tuple[tuple[str, float], ...] = ((BEHAVIOR_HALLUCINATE, 1.0),)
    clean_band: tuple[float, float] = CLEAN_BAND
    corrupt_band: tuple[float, float] = CORRUPT_BAND

    def __post_init__(self) -> None:
        if not 0.0 <= self.epsilon <= 1.0:
            raise ValueError("epsilon must be in [0, 1]")
        total = math.fsum(w for _, w in self.behaviors)
        if abs(total - 1.0) > 1e-9:
            raise ValueError(f"behavior weights sum to {total}, not 1")
        if not self.clean_band[1] < self.corrupt_band[0]:
            raise ValueError("clean band must sit strictly below the corrupt band")

    def to_json_obj(self) -> dict:
        return {
            "epsilon": self.epsilon,
            "behaviors": {name: w for name, w in self.behaviors},
            "clean_band": list(self.clean_band),
            "corrupt_band": list(self.corrupt_band),
        }

    @classmethod
    def from_json_obj(cls, obj: dict) -> "RogueProfile":
        return cls(
            epsilon=obj["epsilon"],
            behaviors=tuple(sorted(obj["behaviors"].items())),
            clean_band=tuple(obj.get("clean_band", CLEAN_BAND)),
            corrupt_band=tuple(obj.get("corrupt_band", CORRUPT_BAND)),
        )


class RogueAgent:
    """Wraps a scripted policy and corrupts it per turn with probability
    epsilon. Corrupted turns carry corrupt-band uncertainty annotations.

    hallucinate-fact flips one believed culprit fact (the outward queries
    then use the wrong value, exactly the failure mode of an agent that
    misremembers the target description) and marks the agent poisoned;
    poisoned accusations are redirected to the lowest-id non-culprit so a
    corrupted game can never succeed by luck. wrong-accusation ends the
    game immediately on a random non-culprit. repeat-query re-issues the
    previous request. drop-known-fact re-asks something already answered.
    """

    def __init__(
        self,
        profile: RogueProfile,
        base_factory: Callable[[], object],
        spec: GameSpec,
        seed: int,
    ) -> None:
        self.profile = profile
        self.spec = spec
        self.rng = random.Random(seed)
        self._base_factory = base_factory
        self.base = base_factory()
        self.poisoned = False
        self.last_action: Optional[object] = None

    def reset(self) -> None:
        """Fresh game, same corruption stream (interventions do not reroll
        the past, they give the agent a clean second attempt)."""
        self.base = self._base_factory()
        self.poisoned = False
        self.last_action = None

    def _lowest_non_culprit(self) -> int:
        return min(
            s.suspect_id for s in self.spec.suspects
            if s.suspect_id != self.spec.culprit_id
        )

    def _random_non_culprit(self) -> int:
        ids = [
            s.suspect_id for s in self.spec.suspects
            if s.suspect_id != self.spec.culprit_id
        ]
        return self.rng.choice(ids)

    def _flip_belief(self, obs: AgentObservation) -> None:
        overrides = self.base.belief_overrides
        for prop, value in obs.knowledge.culprit_facts:
            if prop in overrides:
                continue
            values = self.spec.schema.values_of(prop)
            believed = overrides.get(prop, value)
            overrides[prop] = values[(values.index(believed) + 1) % len(values)]
            return

    def _band_positions(self, corrupted: bool) -> tuple[tuple[float, ...], ...]:
        band = self.profile.corrupt_band if corrupted else self.profile.clean_band
        target = self.rng.uniform(*band)
        return (distribution_with_entropy(target),)

    def decide(self, obs: AgentObservation) -> AgentDecision:
        corrupted = self.rng.random() < self.profile.epsilon
        behavior = None
        if corrupted:
            names = [name for name, _ in self.profile.behaviors]
            weights = [w for _, w in self.profile.behaviors]
            behavior = self.rng.choices(names, weights=weights)[0]

        if behavior == BEHAVIOR_HALLUCINATE:
            self._flip_belief(obs)
            self.poisoned = True
            action = self.base.decide(obs).action
        elif behavior == BEHAVIOR_WRONG_ACCUSATION:
            self.poisoned = True
            if isinstance(self.base, ScriptedSymmetricPlayer):
                action = SymAction(MessageKind.ACCUSE, target=self._random_non_culprit())
            else:
                action = AsymAction(MessageKind.ACCUSE, target=self._random_non_culprit())
        elif behavior == BEHAVIOR_REPEAT and self.last_action is not None:
            action = self.last_action
        elif behavior == BEHAVIOR_DROP_FACT:
            action = self._re_ask_known(obs)
        else:
            action = self.base.decide(obs).action

        if self.poisoned and getattr(action, "prime", None) is MessageKind.ACCUSE:
            redirect = self._lowest_non_culprit()
            if isinstance(action, SymAction):
                action = SymAction(MessageKind.ACCUSE, target=redirect)
            else:
                action = AsymAction(MessageKind.ACCUSE, target=redirect)

        self.last_action = action
        return AgentDecision(action=action, positions=self._band_positions(corrupted))

    def _re_ask_known(self, obs: AgentObservation) -> object:
        base_action = self.base.decide(obs).action
        if not isinstance(self.base, ScriptedAccuser):
            return base_action
        candidates, confirmed = self.base.survey(obs)
        for target in sorted(candidates):
            if confirmed[target]:
                prop = sorted(confirmed[target])[0]
                believed = self.base._believed(obs.knowledge)
                return AsymAction(
                    MessageKind.REQUEST_SPECIFIC,
                    target=target,
                    prop=prop,
                    value=believed[prop],
                )
        return base_action
