"""Delimited-text tables written by a replay run.

Column orders are fixed:

- series: match_index, match_id, n_players, fraction_known_players,
  accuracy, mae, kendall_tau, mrr, ap, ndcg
- cohort curves: game_index, metric, mean, stderr, n
- bins: bin, metric, mean, n
- rating store: player_id, mu, sigma, games_played, last_observed_rank
"""

from __future__ import annotations

from collections.abc import Sequence
from pathlib import Path

import pandas as pd

from ffa_ratings.metrics import METRIC_NAMES
from ffa_ratings.models.errors import MatchLogError
from ffa_ratings.models.match import Rating
from ffa_ratings.replay.cohorts import BIN_COLUMNS, COHORT_COLUMNS
from ffa_ratings.replay.engine import SERIES_COLUMNS, MetricSeries, PlayerState, RatingStore

STORE_COLUMNS = ("player_id", "mu", "sigma", "games_played", "last_observed_rank")


def smooth(
    frame: pd.DataFrame, window: int, columns: Sequence[str] = METRIC_NAMES
) -> pd.DataFrame:
    """Trailing moving average over ``columns``; window 0 or 1 is a copy."""
    if window < 0:
        raise ValueError(f"window must be non-negative, got {window}")
    out = frame.copy()
    if window > 1 and not out.empty:
        cols = list(columns)
        out[cols] = out[cols].rolling(window, min_periods=1).mean()
    return out


def _write(frame: pd.DataFrame, columns: Sequence[str], path: Path, delimiter: str) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    frame.loc[:, list(columns)].to_csv(path, sep=delimiter, index=False)
    return path


def write_series(
    series: MetricSeries, path: Path, *, window: int = 0, delimiter: str = ","
) -> Path:
    return _write(smooth(series.frame, window), SERIES_COLUMNS, path, delimiter)


def write_cohort_curves(frame: pd.DataFrame, path: Path, *, delimiter: str = ",") -> Path:
    return _write(frame, COHORT_COLUMNS, path, delimiter)


def write_bin_table(frame: pd.DataFrame, path: Path, *, delimiter: str = ",") -> Path:
    return _write(frame, BIN_COLUMNS, path, delimiter)


def store_frame(store: RatingStore) -> pd.DataFrame:
    records = [
        (pid, s.rating.mu, s.rating.sigma, s.games_played, s.last_observed_rank)
        for pid, s in sorted(store.items())
    ]
    frame = pd.DataFrame.from_records(records, columns=list(STORE_COLUMNS))
    return frame.astype({"sigma": "float64", "last_observed_rank": "Int64"})


def write_store_snapshot(store: RatingStore, path: Path, *, delimiter: str = ",") -> Path:
    return _write(store_frame(store), STORE_COLUMNS, path, delimiter)


def read_store_snapshot(path: Path, *, delimiter: str = ",") -> RatingStore:
    try:
        frame = pd.read_csv(
            path,
            sep=delimiter,
            dtype={"player_id": str},
            keep_default_na=False,
            na_values={"sigma": [""], "last_observed_rank": [""]},
            float_precision="round_trip",
        )
    except (OSError, pd.errors.EmptyDataError) as exc:
        raise MatchLogError(f"cannot read rating snapshot {path}: {exc}") from exc
    missing = [c for c in STORE_COLUMNS if c not in frame.columns]
    if missing:
        raise MatchLogError(f"{path}: snapshot is missing columns: {', '.join(missing)}")

    players = {}
    for row in frame.itertuples(index=False):
        sigma = None if pd.isna(row.sigma) else float(row.sigma)
        last = None if pd.isna(row.last_observed_rank) else int(row.last_observed_rank)
        players[row.player_id] = PlayerState(
            Rating(float(row.mu), sigma), int(row.games_played), last
        )
    return RatingStore(players)
