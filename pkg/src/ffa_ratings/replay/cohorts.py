"""Player cohorts and rank bins evaluated on a finished replay.

Cohort curves follow individual players through their first ``horizon``
games. Accuracy, MAE and MRR at game g average the members' own hit flag,
error and relevance in that game. Kendall tau, AP and NDCG have no
per-player form, so each member is credited with the whole-match value of
the match that was their g-th game.
"""

from __future__ import annotations

from collections.abc import Mapping, Sequence
from dataclasses import dataclass
from enum import Enum

import numpy as np
import pandas as pd

from ffa_ratings.config import CohortConfig
from ffa_ratings.logging import get_logger
from ffa_ratings.metrics import (
    DEFAULT_WEIGHTING,
    METRIC_NAMES,
    MetricName,
    NdcgWeighting,
    evaluate_subset,
)
from ffa_ratings.models.match import PlayerId, RankOutcome
from ffa_ratings.replay.engine import MetricSeries, RatingStore

log = get_logger("replay")

COHORT_COLUMNS = ("game_index", "metric", "mean", "stderr", "n")
BIN_COLUMNS = ("bin", "metric", "mean", "n")

_PER_PLAYER = {MetricName.ACCURACY.value, MetricName.MAE.value, MetricName.MRR.value}


class CohortKind(str, Enum):
    ALL = "all"
    BEST = "best"
    FREQUENT = "frequent"
    BINNED = "binned"


@dataclass(frozen=True)
class CohortSpec:
    kind: CohortKind
    cohort_size: int = 1000
    min_games: int = 10
    horizon: int = 10
    bins: int = 5
    seed: int = 0

    def __post_init__(self) -> None:
        for name in ("cohort_size", "horizon", "bins"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")
        if self.min_games < 0:
            raise ValueError("min_games must be non-negative")

    @classmethod
    def from_config(cls, kind: CohortKind | str, cfg: CohortConfig, seed: int = 0) -> CohortSpec:
        kind = CohortKind(kind)
        if kind is CohortKind.FREQUENT:
            min_games, horizon = cfg.frequent_min_games, cfg.frequent_horizon
        else:
            min_games, horizon = cfg.best_min_games, cfg.best_horizon
        return cls(kind, cfg.cohort_size, min_games, horizon, cfg.bins, seed)


@dataclass
class CohortCurves:
    members: list[PlayerId]
    frame: pd.DataFrame
    undersized: bool = False


def _curves(
    members: Sequence[PlayerId],
    histories: Mapping[PlayerId, list[tuple[int, int]]],
    series: MetricSeries,
    horizon: int,
) -> pd.DataFrame:
    match_values = {name: series.metric(name) for name in METRIC_NAMES}
    rows = []
    for g in range(1, horizon + 1):
        appearances = [histories[pid][g - 1] for pid in members if len(histories[pid]) >= g]
        if not appearances:
            continue
        idx = np.array([a[0] for a in appearances], dtype=np.int64)
        err = np.array([a[1] for a in appearances], dtype=np.float64)
        per_player = {
            MetricName.ACCURACY.value: (err == 0).astype(np.float64),
            MetricName.MAE.value: err,
            MetricName.MRR.value: 1.0 / (1.0 + err),
        }
        for name in METRIC_NAMES:
            values = per_player[name] if name in _PER_PLAYER else match_values[name][idx]
            n = values.size
            stderr = float(values.std(ddof=1) / np.sqrt(n)) if n > 1 else float("nan")
            rows.append((g, name, float(values.mean()), stderr, n))
    return pd.DataFrame.from_records(rows, columns=list(COHORT_COLUMNS))


def cohort_best(
    store: RatingStore,
    histories: Mapping[PlayerId, list[tuple[int, int]]],
    series: MetricSeries,
    spec: CohortSpec,
    *,
    higher_is_better: bool = True,
) -> CohortCurves:
    """Top-rated players with more than ``min_games`` games, by final rating."""
    eligible = [
        (pid, state.rating.mu)
        for pid, state in store.items()
        if state.games_played > spec.min_games
    ]
    sign = -1.0 if higher_is_better else 1.0
    eligible.sort(key=lambda item: (sign * item[1], item[0]))
    undersized = len(eligible) < spec.cohort_size
    if undersized:
        log.warning(
            "cohort_undersized",
            kind=CohortKind.BEST.value,
            eligible=len(eligible),
            requested=spec.cohort_size,
        )
    members = [pid for pid, _ in eligible[: spec.cohort_size]]
    return CohortCurves(members, _curves(members, histories, series, spec.horizon), undersized)


def cohort_frequent(
    histories: Mapping[PlayerId, list[tuple[int, int]]],
    series: MetricSeries,
    spec: CohortSpec,
) -> CohortCurves:
    """Seeded uniform sample of players with more than ``min_games`` games."""
    eligible = sorted(pid for pid, hist in histories.items() if len(hist) > spec.min_games)
    undersized = len(eligible) < spec.cohort_size
    if undersized:
        log.warning(
            "cohort_undersized",
            kind=CohortKind.FREQUENT.value,
            eligible=len(eligible),
            requested=spec.cohort_size,
        )
        members = eligible
    else:
        rng = np.random.default_rng(spec.seed)
        picked = rng.choice(len(eligible), size=spec.cohort_size, replace=False)
        members = [eligible[i] for i in np.sort(picked)]
    return CohortCurves(members, _curves(members, histories, series, spec.horizon), undersized)


def bin_sizes(n: int, bins: int) -> list[int]:
    """Contiguous bin sizes; the remainder goes to the earliest bins."""
    base, extra = divmod(n, bins)
    return [base + 1 if b < extra else base for b in range(bins)]


@dataclass
class BinTable:
    frame: pd.DataFrame
    matches_used: int = 0
    matches_skipped: int = 0


def binned_ranks(
    outcomes: Sequence[RankOutcome],
    bins: int = 5,
    *,
    weighting: NdcgWeighting = DEFAULT_WEIGHTING,
    hit_threshold: int = 0,
) -> BinTable:
    """Per-bin mean of every metric, bins cut by observed rank.

    Bin 1 holds the best finishers. Matches with fewer players than bins
    are skipped. Kendall tau is undefined on a one-player bin, so its ``n``
    can be smaller than the other metrics'.
    """
    if bins < 1:
        raise ValueError("bins must be positive")
    totals = np.zeros((bins, len(METRIC_NAMES)))
    counts = np.zeros((bins, len(METRIC_NAMES)), dtype=np.int64)
    used = skipped = 0

    for outcome in outcomes:
        n = outcome.n_players
        if n < bins:
            skipped += 1
            continue
        used += 1
        upper = np.cumsum(bin_sizes(n, bins))
        lower = upper - np.array(bin_sizes(n, bins)) + 1
        for b in range(bins):
            positions = np.flatnonzero(
                (outcome.observed >= lower[b]) & (outcome.observed <= upper[b])
            )
            values = evaluate_subset(
                outcome, positions, weighting=weighting, hit_threshold=hit_threshold
            )
            for j, name in enumerate(METRIC_NAMES):
                v = values[name]
                if not np.isnan(v):
                    totals[b, j] += v
                    counts[b, j] += 1

    if skipped:
        log.warning("binned_match_skipped", skipped=skipped, bins=bins, used=used)

    rows = []
    if used:
        for b in range(bins):
            for j, name in enumerate(METRIC_NAMES):
                c = int(counts[b, j])
                mean = totals[b, j] / c if c else float("nan")
                rows.append((b + 1, name, float(mean), c))
    frame = pd.DataFrame.from_records(rows, columns=list(BIN_COLUMNS))
    return BinTable(frame, used, skipped)
