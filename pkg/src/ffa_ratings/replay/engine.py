"""Chronological replay of a match stream through one rating system.

For every match, in order: predict ranks from the pre-match store, score the
prediction against the observed ranks, then apply the system's update.
"""

from __future__ import annotations

import time
from collections.abc import Iterator, Mapping, Sequence
from dataclasses import dataclass, field
from types import MappingProxyType

import numpy as np
import pandas as pd

from ffa_ratings.logging import get_logger
from ffa_ratings.metrics import (
    DEFAULT_WEIGHTING,
    METRIC_NAMES,
    NdcgWeighting,
    evaluate_all,
    relevance,
)
from ffa_ratings.models.errors import RatingsError, ReplayError
from ffa_ratings.models.match import (
    MatchRecord,
    PlayerId,
    RankOutcome,
    Rating,
    RngPurpose,
    match_rng,
)
from ffa_ratings.ratings.base import RatingSystem

log = get_logger("replay")

SERIES_COLUMNS = (
    "match_index",
    "match_id",
    "n_players",
    "fraction_known_players",
    *METRIC_NAMES,
)


@dataclass(frozen=True)
class PlayerState:
    rating: Rating
    games_played: int
    last_observed_rank: int | None = None


class RatingStore:
    """Ratings of every player seen so far; an absent player is a new one."""

    def __init__(self, players: Mapping[PlayerId, PlayerState] | None = None) -> None:
        self._players: dict[PlayerId, PlayerState] = dict(players or {})

    def __len__(self) -> int:
        return len(self._players)

    def __contains__(self, player_id: object) -> bool:
        return player_id in self._players

    def __iter__(self) -> Iterator[PlayerId]:
        return iter(self._players)

    def get(self, player_id: PlayerId) -> PlayerState | None:
        return self._players.get(player_id)

    def items(self) -> Iterator[tuple[PlayerId, PlayerState]]:
        return iter(self._players.items())

    def rating_for(
        self, player_id: PlayerId, system: RatingSystem, n_players: int
    ) -> tuple[Rating, bool]:
        """(rating, is_new) for a player about to play an N-player match."""
        state = self._players.get(player_id)
        if state is None:
            return system.initial_rating(n_players), True
        return state.rating, False

    def record(self, player_id: PlayerId, rating: Rating, observed_rank: int) -> None:
        state = self._players.get(player_id)
        played = 1 if state is None else state.games_played + 1
        self._players[player_id] = PlayerState(rating, played, observed_rank)

    def snapshot(self) -> Mapping[PlayerId, PlayerState]:
        """Read-only copy; later updates do not show through."""
        return MappingProxyType(dict(self._players))


@dataclass(frozen=True)
class Prediction:
    """Predicted ranks for one match, aligned with ``MatchRecord.entries``."""

    match_id: str
    player_ids: tuple[PlayerId, ...]
    ratings: tuple[Rating, ...]
    predicted: np.ndarray
    is_new: np.ndarray
    tie_broken: bool


def _tied_runs(sorted_keys: np.ndarray) -> list[np.ndarray]:
    if sorted_keys.size < 2:
        return []
    boundaries = np.flatnonzero(sorted_keys[1:] != sorted_keys[:-1]) + 1
    return [g for g in np.split(np.arange(sorted_keys.size), boundaries) if g.size > 1]


def predict_match(
    store: RatingStore, match: MatchRecord, system: RatingSystem, seed: int
) -> Prediction:
    """Sort the field by rating; ties are shuffled with the match's own stream."""
    n = match.n_players
    looked_up = [store.rating_for(pid, system, n) for pid in match.player_ids]
    ratings = tuple(r for r, _ in looked_up)
    is_new = np.fromiter((new for _, new in looked_up), dtype=bool, count=n)

    scores = np.array([system.score_for_sorting(r) for r in ratings], dtype=np.float64)
    keys = -scores if system.higher_is_better else scores
    order = np.argsort(keys, kind="stable")
    runs = _tied_runs(keys[order])
    if runs:
        rng = match_rng(seed, match.match_id, RngPurpose.PREDICTION)
        for run in runs:
            order[run] = order[run][rng.permutation(run.size)]

    predicted = np.empty(n, dtype=np.int64)
    predicted[order] = np.arange(1, n + 1)
    return Prediction(match.match_id, match.player_ids, ratings, predicted, is_new, bool(runs))


@dataclass(frozen=True)
class PlayerContribution:
    error: int
    relevance: float
    hit: bool


def per_player_metric_contribution(
    outcome: RankOutcome, player_id: PlayerId
) -> PlayerContribution:
    err = int(outcome.errors[outcome.position_of(player_id)])
    return PlayerContribution(err, float(relevance(err)), err == 0)


class MetricSeries:
    """Per-match metric rows in replay order, backed by a DataFrame."""

    def __init__(self, frame: pd.DataFrame) -> None:
        self.frame = frame

    @classmethod
    def from_records(cls, records: Sequence[tuple]) -> MetricSeries:
        frame = pd.DataFrame.from_records(list(records), columns=list(SERIES_COLUMNS))
        return cls(frame.astype({"match_index": "int64", "n_players": "int64"}))

    def __len__(self) -> int:
        return len(self.frame)

    def metric(self, name: str) -> np.ndarray:
        return self.frame[name].to_numpy(dtype=np.float64)

    def means(self) -> dict[str, float]:
        if self.frame.empty:
            return {name: float("nan") for name in METRIC_NAMES}
        return {name: float(self.frame[name].mean()) for name in METRIC_NAMES}


def window_means(
    series: MetricSeries, fraction: float = 0.1
) -> tuple[dict[str, float], dict[str, float]]:
    """Metric means over the first and the last ``fraction`` of matches."""
    if not 0.0 < fraction <= 1.0:
        raise ValueError(f"fraction must be in (0, 1], got {fraction}")
    n = len(series)
    if n == 0:
        raise ValueError("window_means needs a non-empty series")
    size = max(1, int(n * fraction))
    head = series.frame.iloc[:size]
    tail = series.frame.iloc[n - size :]
    return (
        {name: float(head[name].mean()) for name in METRIC_NAMES},
        {name: float(tail[name].mean()) for name in METRIC_NAMES},
    )


@dataclass
class ReplayResult:
    system: str
    seed: int
    series: MetricSeries
    store: RatingStore
    higher_is_better: bool = True
    # player -> [(match_index, prediction error), ...] in the order played
    histories: dict[PlayerId, list[tuple[int, int]]] = field(default_factory=dict)
    outcomes: list[RankOutcome] = field(default_factory=list)
    ties_broken: int = 0
    elapsed: float = 0.0


def replay(
    matches: Sequence[MatchRecord],
    system: RatingSystem,
    seed: int = 0,
    *,
    weighting: NdcgWeighting = DEFAULT_WEIGHTING,
    hit_threshold: int = 0,
    keep_outcomes: bool = True,
    keep_histories: bool = True,
) -> ReplayResult:
    """Replay ``matches`` in the given order; match_index is 0-based."""
    start = time.monotonic()
    store = RatingStore()
    histories: dict[PlayerId, list[tuple[int, int]]] = {}
    outcomes: list[RankOutcome] = []
    records: list[tuple] = []
    ties_broken = 0

    log.info("replay_start", system=system.name, n_matches=len(matches), seed=seed)

    for index, match in enumerate(matches):
        try:
            prediction = predict_match(store, match, system, seed)
            observed = np.asarray(match.observed_ranks, dtype=np.int64)
            # both columns are permutations: predict_match builds one and
            # MatchRecord validates the other
            outcome = RankOutcome.build(
                match.match_id,
                match.player_ids,
                prediction.predicted,
                observed,
                prediction.is_new,
                validate=False,
            )
            values = evaluate_all(outcome, weighting=weighting, hit_threshold=hit_threshold)
            games = [
                0 if (state := store.get(pid)) is None else state.games_played
                for pid in match.player_ids
            ]
            updated = system.update(prediction.ratings, observed, games_played=games)
        except (RatingsError, ValueError, FloatingPointError) as exc:
            log.error(
                "replay_match_failed",
                system=system.name,
                match_index=index,
                match_id=match.match_id,
                error=str(exc),
            )
            raise ReplayError(str(exc), match_index=index, match_id=match.match_id) from exc

        ties_broken += prediction.tie_broken
        known = 1.0 - float(prediction.is_new.mean())
        records.append(
            (index, match.match_id, match.n_players, known, *(v.value for v in values))
        )
        errors = np.abs(prediction.predicted - observed).tolist()
        for pid, rating, obs, err in zip(match.player_ids, updated, observed.tolist(), errors):
            store.record(pid, rating, obs)
            if keep_histories:
                histories.setdefault(pid, []).append((index, err))
        if keep_outcomes:
            outcomes.append(outcome)

    elapsed = time.monotonic() - start
    log.info(
        "replay_complete",
        system=system.name,
        n_matches=len(matches),
        n_players=len(store),
        ties_broken=ties_broken,
        elapsed=round(elapsed, 3),
    )
    return ReplayResult(
        system=system.name,
        seed=seed,
        series=MetricSeries.from_records(records),
        store=store,
        higher_is_better=system.higher_is_better,
        histories=histories,
        outcomes=outcomes,
        ties_broken=ties_broken,
        elapsed=elapsed,
    )
