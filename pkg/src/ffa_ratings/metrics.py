"""Rank-prediction metrics.

Every metric takes a :class:`RankOutcome`, whose rows are already in
predicted-rank order: position 1 is the player predicted to win. The graded
metrics credit each prediction with ``relevance = 1 / (1 + error)``.
"""

from __future__ import annotations

import math
from collections.abc import Callable, Sequence
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache

import numpy as np
from scipy.stats import kendalltau

from ffa_ratings.models.errors import InvalidMatchError
from ffa_ratings.models.match import RankOutcome


class MetricName(str, Enum):
    ACCURACY = "accuracy"
    MAE = "mae"
    KENDALL_TAU = "kendall_tau"
    MRR = "mrr"
    AP = "ap"
    NDCG = "ndcg"


METRIC_NAMES: tuple[str, ...] = tuple(m.value for m in MetricName)


@dataclass(frozen=True)
class MetricValue:
    name: MetricName
    value: float


@dataclass(frozen=True)
class NdcgWeighting:
    """Position discount for NDCG; positions are 1-based."""

    discount: Callable[[np.ndarray], np.ndarray]
    label: str = "log2"

    @classmethod
    def log(cls, base: float = 2.0) -> NdcgWeighting:
        if base <= 1.0:
            raise ValueError(f"log base must exceed 1, got {base}")
        if base == 2.0:
            return cls(lambda pos: 1.0 / np.log2(pos + 1.0), "log2")
        ln_base = math.log(base)
        return cls(lambda pos: ln_base / np.log(pos + 1.0), f"log{base:g}")

    @classmethod
    def reciprocal(cls) -> NdcgWeighting:
        return cls(lambda pos: 1.0 / pos, "reciprocal")

    @classmethod
    def named(cls, name: str) -> NdcgWeighting:
        if name == "log2":
            return cls.log(2.0)
        if name == "reciprocal":
            return cls.reciprocal()
        raise ValueError(f"unknown NDCG discount {name!r}")

    def weights(self, n: int) -> np.ndarray:
        return _discounts(self, n)


@lru_cache(maxsize=256)
def _discounts(weighting: NdcgWeighting, n: int) -> np.ndarray:
    weights = weighting.discount(np.arange(1, n + 1, dtype=np.float64))
    weights.setflags(write=False)
    return weights


DEFAULT_WEIGHTING = NdcgWeighting.log(2.0)


def relevance(error: int | float | np.ndarray) -> float | np.ndarray:
    """Graded credit for one prediction: 1 for a hit, 1/2 one rank off, ..."""
    if np.any(np.asarray(error) < 0):
        raise InvalidMatchError("prediction errors are non-negative")
    return 1.0 / (1.0 + np.asarray(error, dtype=np.float64))


def accuracy(outcome: RankOutcome) -> float:
    return float(np.count_nonzero(outcome.errors == 0)) / outcome.n_players


def mae(outcome: RankOutcome) -> float:
    return float(outcome.errors.sum()) / outcome.n_players


def kendall_tau(outcome: RankOutcome) -> float:
    """(concordant - discordant) / C(N, 2).

    Both columns are permutations, so there are no ties and scipy's tau-b
    coincides with this definition.
    """
    if outcome.n_players < 2:
        raise InvalidMatchError("Kendall tau needs at least 2 players")
    result = kendalltau(outcome.predicted, outcome.observed, method="asymptotic")
    return float(np.clip(result.statistic, -1.0, 1.0))


def kendall_tau_bruteforce(outcome: RankOutcome) -> float:
    """O(N^2) pair counting."""
    pred, obs = outcome.predicted, outcome.observed
    n = outcome.n_players
    concordant = discordant = 0
    for i in range(n):
        for j in range(i + 1, n):
            s = (pred[i] - pred[j]) * (obs[i] - obs[j])
            if s > 0:
                concordant += 1
            elif s < 0:
                discordant += 1
    return (concordant - discordant) / (n * (n - 1) // 2)


def mrr(outcome: RankOutcome) -> float:
    return float(np.mean(relevance(outcome.errors)))


def average_precision(outcome: RankOutcome, hit_threshold: int = 0) -> float:
    """Mean of P(i) * relevance_i, where P(i) is the hit rate up to position i.

    A position counts as a hit when its error is at most ``hit_threshold``.
    """
    errors = outcome.errors
    hits = np.cumsum(errors <= hit_threshold)
    precision = hits / np.arange(1, errors.size + 1, dtype=np.float64)
    return float(np.mean(precision * relevance(errors)))


def ndcg(outcome: RankOutcome, weighting: NdcgWeighting = DEFAULT_WEIGHTING) -> float:
    weights = weighting.weights(outcome.n_players)
    dcg = float(np.sum(weights * relevance(outcome.errors)))
    # ideal ordering: every relevance 1 at the same positions
    idcg = float(np.sum(weights))
    return dcg / idcg


def evaluate_all(
    outcome: RankOutcome,
    *,
    weighting: NdcgWeighting = DEFAULT_WEIGHTING,
    hit_threshold: int = 0,
) -> list[MetricValue]:
    """All six metrics in :class:`MetricName` order."""
    values = _error_metrics(outcome.errors, weighting, hit_threshold)
    values[MetricName.KENDALL_TAU.value] = kendall_tau(outcome)
    return [MetricValue(name, values[name.value]) for name in MetricName]


def _error_metrics(
    errors: np.ndarray, weighting: NdcgWeighting, hit_threshold: int
) -> dict[str, float]:
    # every metric except Kendall tau is a function of the error column alone
    k = errors.size
    rel = relevance(errors)
    weights = weighting.weights(k)
    hits = np.cumsum(errors <= hit_threshold)
    precision = hits / np.arange(1, k + 1, dtype=np.float64)
    return {
        MetricName.ACCURACY.value: float(np.count_nonzero(errors == 0)) / k,
        MetricName.MAE.value: float(errors.sum()) / k,
        MetricName.MRR.value: float(np.mean(rel)),
        MetricName.AP.value: float(np.mean(precision * rel)),
        MetricName.NDCG.value: float(np.sum(weights * rel)) / float(np.sum(weights)),
    }


def restrict(outcome: RankOutcome, positions: Sequence[int]) -> RankOutcome:
    """Sub-outcome over the rows at ``positions`` (0-based), with both rank
    columns re-ranked 1..k within the subset."""
    idx = np.sort(np.asarray(positions, dtype=np.int64))
    pred = np.arange(1, idx.size + 1)
    obs = np.argsort(np.argsort(outcome.observed[idx], kind="stable"), kind="stable") + 1
    return RankOutcome.build(
        outcome.match_id,
        [outcome.player_ids[i] for i in idx],
        pred,
        obs,
        outcome.is_new[idx],
    )


def evaluate_subset(
    outcome: RankOutcome,
    positions: Sequence[int],
    *,
    weighting: NdcgWeighting = DEFAULT_WEIGHTING,
    hit_threshold: int = 0,
) -> dict[str, float]:
    """Metrics over a subset of a match's players.

    Rows keep the errors they had in the full match and are re-indexed to
    positions 1..k by predicted rank. Kendall tau is computed on the
    subset's own predicted and observed orders and is NaN for one player.
    """
    idx = np.sort(np.asarray(positions, dtype=np.int64))
    if idx.size == 0:
        raise InvalidMatchError("cannot evaluate an empty subset")
    values = _error_metrics(outcome.errors[idx], weighting, hit_threshold)
    values[MetricName.KENDALL_TAU.value] = (
        kendall_tau(restrict(outcome, idx)) if idx.size >= 2 else float("nan")
    )
    return {name: values[name] for name in METRIC_NAMES}
