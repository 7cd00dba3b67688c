"""Per-role success-probability monitors.

Pipeline: min-max normalize the selected features to [-1, 1] using bounds
fitted on the training rows only (out-of-range values extrapolate, no
clamping), expand into all monomials up to the chosen total degree (cross
terms and intercept included), and fit ridge regression with an unpenalized
intercept against the 0/1 game-success labels. The trigger threshold tau
and the (feature subset, degree) cell are selected by exhaustive search on
validation gain. The turn count is always part of the input.
"""

from __future__ import annotations

import itertools
import json
import math
import random
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import InsufficientDataError, SingularSystemError
from .uncertainty import FeatureVector

STATISTIC_NAMES = ("entropy", "varentropy", "kurtosis")

DEFAULT_ALPHA = 1.0
DEFAULT_TAUS = tuple(i / 100.0 for i in range(101))
DEGREES = (1, 2, 3, 4, 5)


def all_feature_masks() -> tuple[tuple[str, ...], ...]:
    """The 7 non-empty statistic subsets, smallest first, in a fixed order."""
    masks = []
    for size in (1, 2, 3):
        masks.extend(itertools.combinations(STATISTIC_NAMES, size))
    return tuple(masks)


@dataclass(frozen=True)
class CorpusRow:
    features: FeatureVector
    game_id: str
    role: str
    label: float


@dataclass
class TrainingCorpus:
    rows: list[CorpusRow] = field(default_factory=list)

    def labels(self) -> list[float]:
        return [r.label for r in self.rows]


@dataclass(frozen=True)
class GameRecord:
    """One validation/test game: its monitored-turn features and outcome."""

    features: tuple[FeatureVector, ...]
    label: bool
    game_id: str = ""


def _raw_inputs(fv: FeatureVector, mask: Sequence[str]) -> list[float]:
    by_name = {
        "entropy": fv.max_entropy,
        "varentropy": fv.max_varentropy,
        "kurtosis": fv.max_kurtosis,
    }
    return [by_name[name] for name in mask] + [float(fv.turn_index)]


def _monomials(n_inputs: int, degree: int) -> list[tuple[int, ...]]:
    terms: list[tuple[int, ...]] = []
    for d in range(degree + 1):
        terms.extend(itertools.combinations_with_replacement(range(n_inputs), d))
    return terms


@dataclass(frozen=True)
class MonitorModel:
    """A fitted monitor: normalization bounds, polynomial ridge weights,
    and (after selection) the trigger threshold tau."""

    role: str
    feature_mask: tuple[str, ...]
    degree: int
    normalization: tuple[tuple[float, float], ...]
    weights: tuple[float, ...]
    tau: Optional[float] = None
    validation_gain: Optional[float] = None

    def _normalize(self, raw: Sequence[float]) -> list[float]:
        scaled = []
        for x, (lo, hi) in zip(raw, self.normalization):
            if hi == lo:
                scaled.append(0.0)
            else:
                scaled.append(-1.0 + 2.0 * (x - lo) / (hi - lo))
        return scaled

    def linear_output(self, features: FeatureVector) -> float:
        """Unclamped ridge output; predict_success clamps this to [0, 1]."""
        scaled = self._normalize(_raw_inputs(features, self.feature_mask))
        total = 0.0
        for weight, term in zip(self.weights, _monomials(len(scaled), self.degree)):
            value = weight
            for index in term:
                value *= scaled[index]
            total += value
        return total

    def predict_success(self, features: FeatureVector) -> float:
        return min(1.0, max(0.0, self.linear_output(features)))

    def with_threshold(self, tau: float, validation_gain: float) -> "MonitorModel":
        return MonitorModel(
            role=self.role,
            feature_mask=self.feature_mask,
            degree=self.degree,
            normalization=self.normalization,
            weights=self.weights,
            tau=tau,
            validation_gain=validation_gain,
        )

    def to_json_obj(self) -> dict:
        return {
            "role": self.role,
            "feature_mask": list(self.feature_mask),
            "degree": self.degree,
            "normalization": [list(pair) for pair in self.normalization],
            "weights": list(self.weights),
            "tau": self.tau,
            "validation_gain": self.validation_gain,
        }

    @classmethod
    def from_json_obj(cls, obj: dict) -> "MonitorModel":
        return cls(
            role=obj["role"],
            feature_mask=tuple(obj["feature_mask"]),
            degree=obj["degree"],
            normalization=tuple(tuple(pair) for pair in obj["normalization"]),
            weights=tuple(obj["weights"]),
            tau=obj["tau"],
            validation_gain=obj["validation_gain"],
        )

    def to_json(self) -> str:
        return json.dumps(self.to_json_obj(), sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "MonitorModel":
        return cls.from_json_obj(json.loads(text))


def fit_monitor(
    corpus: TrainingCorpus,
    feature_mask: Sequence[str],
    degree: int,
    alpha: float = DEFAULT_ALPHA,
    role: str = "",
) -> MonitorModel:
    """Fit one (mask, degree) cell on the corpus. No threshold yet."""
    if not corpus.rows:
        raise InsufficientDataError("empty training corpus")
    if degree not in DEGREES:
        raise ValueError(f"degree must be in {DEGREES}")
    mask = tuple(feature_mask)

    raw = np.array(
        [_raw_inputs(row.features, mask) for row in corpus.rows], dtype=float
    )
    lows = raw.min(axis=0)
    highs = raw.max(axis=0)
    spans = highs - lows
    safe = np.where(spans == 0.0, 1.0, spans)
    scaled = -1.0 + 2.0 * (raw - lows) / safe
    scaled[:, spans == 0.0] = 0.0

    terms = _monomials(raw.shape[1], degree)
    design = np.empty((raw.shape[0], len(terms)))
    for j, term in enumerate(terms):
        column = np.ones(raw.shape[0])
        for index in term:
            column = column * scaled[:, index]
        design[:, j] = column

    y = np.array(corpus.labels(), dtype=float)
    penalty = np.eye(len(terms)) * alpha
    penalty[0, 0] = 0.0  # the intercept term () comes first and is unpenalized
    gram = design.T @ design + penalty
    if alpha == 0.0 and np.linalg.matrix_rank(design) < len(terms):
        raise SingularSystemError("rank-deficient design with alpha=0")
    weights = np.linalg.solve(gram, design.T @ y)

    return MonitorModel(
        role=role,
        feature_mask=mask,
        degree=degree,
        normalization=tuple((float(lo), float(hi)) for lo, hi in zip(lows, highs)),
        weights=tuple(float(w) for w in weights),
    )


def game_triggers(model: MonitorModel, tau: float, game: GameRecord) -> bool:
    """Whether any monitored turn of the game falls below tau."""
    return any(model.predict_success(fv) < tau for fv in game.features)


def validation_gain(
    model: MonitorModel, tau: float, games: Sequence[GameRecord]
) -> float:
    """Net correctly-vs-falsely triggered game percentage.

    A failed game counts for the monitor when any of its turns triggers; a
    successful game counts against it when any turn triggers.
    """
    if not games:
        return 0.0
    true_triggers = 0
    false_triggers = 0
    for game in games:
        if game_triggers(model, tau, game):
            if game.label:
                false_triggers += 1
            else:
                true_triggers += 1
    return 100.0 * (true_triggers - false_triggers) / len(games)


def _best_threshold(
    model: MonitorModel, validation: Sequence[GameRecord], taus: Sequence[float]
) -> MonitorModel:
    """Attach the gain-maximizing tau (lowest tau wins ties)."""
    minima = [
        min((model.predict_success(fv) for fv in game.features), default=math.inf)
        for game in validation
    ]
    labels = [game.label for game in validation]
    best_tau, best_gain = taus[0], -math.inf
    for tau in taus:
        true_triggers = sum(1 for m, label in zip(minima, labels) if m < tau and not label)
        false_triggers = sum(1 for m, label in zip(minima, labels) if m < tau and label)
        gain = 100.0 * (true_triggers - false_triggers) / len(validation)
        if gain > best_gain:
            best_tau, best_gain = tau, gain
    return model.with_threshold(best_tau, best_gain)


def grid_search_ranked(
    train: TrainingCorpus,
    validation: Sequence[GameRecord],
    alpha: float = DEFAULT_ALPHA,
    role: str = "",
    taus: Sequence[float] = DEFAULT_TAUS,
) -> list[MonitorModel]:
    """Every (degree, feature subset) cell with its best tau, ranked by
    validation gain. Ties break toward lower degree, fewer features, lower
    tau, and finally the fixed mask order, so the ranking is deterministic.
    """
    if not train.rows or not validation:
        raise InsufficientDataError("need non-empty train and validation sets")
    candidates: list[MonitorModel] = []
    for degree in DEGREES:
        for mask in all_feature_masks():
            model = fit_monitor(train, mask, degree, alpha=alpha, role=role)
            candidates.append(_best_threshold(model, validation, taus))
    order = {mask: i for i, mask in enumerate(all_feature_masks())}
    candidates.sort(
        key=lambda m: (
            -m.validation_gain,
            m.degree,
            len(m.feature_mask),
            m.tau,
            order[m.feature_mask],
        )
    )
    return candidates


def grid_search(
    train: TrainingCorpus,
    validation: Sequence[GameRecord],
    alpha: float = DEFAULT_ALPHA,
    role: str = "",
    taus: Sequence[float] = DEFAULT_TAUS,
) -> MonitorModel:
    """The validation-gain-maximizing monitor over the full grid."""
    return grid_search_ranked(train, validation, alpha=alpha, role=role, taus=taus)[0]


class RandomMonitor:
    """Baseline that triggers i.i.d. with probability p on monitored turns."""

    def __init__(self, p: float, seed: int) -> None:
        if not 0.0 <= p <= 1.0:
            raise ValueError("p must be in [0, 1]")
        self.p = p
        self._rng = random.Random(seed)

    def should_trigger(self) -> bool:
        return self._rng.random() < self.p


def expected_random_gain(p: float, games: Sequence[GameRecord]) -> float:
    """Closed-form expected gain of a random monitor: a game with n
    monitored turns triggers with probability 1 - (1-p)^n."""
    if not games:
        return 0.0
    total = 0.0
    for game in games:
        prob = 1.0 - (1.0 - p) ** len(game.features)
        total += -prob if game.label else prob
    return 100.0 * total / len(games)


def calibrate_random_monitor(
    games: Sequence[GameRecord], ps: Sequence[float] = DEFAULT_TAUS
) -> tuple[float, float]:
    """Pick the trigger probability maximizing expected validation gain."""
    best_p, best_gain = 0.0, -math.inf
    for p in ps:
        gain = expected_random_gain(p, games)
        if gain > best_gain:
            best_p, best_gain = p, gain
    return best_p, best_gain
