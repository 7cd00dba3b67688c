"""Uncertainty statistics over probability vectors and per-turn features.

Entropy is -sum(p * ln p) in nats, varentropy the variance of the surprisal
-ln p under p, and kurtosis the normalized fourth moment of the surprisal:
sum(p * (-ln p - H)^4) / varentropy^2. A turn's feature vector takes the
maximum of each statistic over the turn's annotated positions, plus the
turn count.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

from .errors import DegenerateDistributionError, InvalidDistributionError

SUM_TOLERANCE = 1e-9
# Exactly-uniform vectors accumulate ~1e-31 of float noise in the surprisal
# deviations; anything below this is treated as a zero varentropy.
DEGENERATE_VARENTROPY = 1e-24

KURTOSIS_FALLBACK = 0.0


def _check_distribution(p: Sequence[float]) -> None:
    if len(p) == 0:
        raise InvalidDistributionError("empty probability vector")
    total = math.fsum(p)
    if any(x < 0.0 for x in p):
        raise InvalidDistributionError("negative probability entry")
    if abs(total - 1.0) > SUM_TOLERANCE:
        raise InvalidDistributionError(f"probabilities sum to {total!r}, not 1")


def entropy(p: Sequence[float]) -> float:
    """Shannon entropy in nats, with 0 * ln 0 = 0."""
    _check_distribution(p)
    return -math.fsum(x * math.log(x) for x in p if x > 0.0)


def varentropy(p: Sequence[float]) -> float:
    """Variance of the surprisal -ln p under p. Always non-negative."""
    _check_distribution(p)
    h = -math.fsum(x * math.log(x) for x in p if x > 0.0)
    return math.fsum(x * (-math.log(x) - h) ** 2 for x in p if x > 0.0)


def kurtosis(p: Sequence[float]) -> float:
    """Normalized fourth moment of the surprisal.

    Raises DegenerateDistributionError when the varentropy is zero (all
    surprisals equal, e.g. a one-hot or uniform vector); callers substitute
    a configured fallback.
    """
    _check_distribution(p)
    h = -math.fsum(x * math.log(x) for x in p if x > 0.0)
    var = math.fsum(x * (-math.log(x) - h) ** 2 for x in p if x > 0.0)
    if var < DEGENERATE_VARENTROPY:
        raise DegenerateDistributionError("zero varentropy")
    fourth = math.fsum(x * (-math.log(x) - h) ** 4 for x in p if x > 0.0)
    return fourth / (var * var)


@dataclass(frozen=True)
class FeatureVector:
    """Per-turn monitor input: position-wise maxima plus the turn count."""

    max_entropy: float
    max_varentropy: float
    max_kurtosis: float
    turn_index: int

    def __post_init__(self) -> None:
        for value in (self.max_entropy, self.max_varentropy, self.max_kurtosis):
            if not math.isfinite(value):
                raise ValueError("feature statistics must be finite")

    def to_json_obj(self) -> dict:
        return {
            "entropy": self.max_entropy,
            "varentropy": self.max_varentropy,
            "kurtosis": self.max_kurtosis,
            "turn": self.turn_index,
        }

    @classmethod
    def from_json_obj(cls, obj: dict) -> "FeatureVector":
        return cls(
            max_entropy=obj["entropy"],
            max_varentropy=obj["varentropy"],
            max_kurtosis=obj["kurtosis"],
            turn_index=obj["turn"],
        )


def extract_features(
    positions: Sequence[Sequence[float]],
    turn_index: int,
    kurtosis_fallback: float = KURTOSIS_FALLBACK,
) -> Optional[FeatureVector]:
    """Pool a turn's annotated positions into a FeatureVector.

    Returns None on a no-signal turn (no annotated positions). Degenerate
    positions contribute the kurtosis fallback.
    """
    if not positions:
        return None
    entropies = []
    varentropies = []
    kurtoses = []
    for p in positions:
        entropies.append(entropy(p))
        varentropies.append(varentropy(p))
        try:
            kurtoses.append(kurtosis(p))
        except DegenerateDistributionError:
            kurtoses.append(kurtosis_fallback)
    return FeatureVector(
        max_entropy=max(entropies),
        max_varentropy=max(varentropies),
        max_kurtosis=max(kurtoses),
        turn_index=turn_index,
    )
