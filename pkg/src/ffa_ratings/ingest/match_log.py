"""Read and write free-for-all match logs.

A match log is delimited text with a header row. Only the columns in
``REQUIRED_COLUMNS`` are used; anything else is ignored. Each row is one
player's result in one match.
"""

from __future__ import annotations

import math
from collections.abc import Iterable, Mapping
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np
import pandas as pd

from ffa_ratings.logging import get_logger
from ffa_ratings.models.errors import InvalidMatchError, MatchLogError
from ffa_ratings.models.match import MatchEntry, MatchRecord, RngPurpose, match_rng

log = get_logger("ingest")

REQUIRED_COLUMNS = ("match_id", "date", "player_id", "placement", "party_size")


@dataclass
class IngestReport:
    """Counters for everything ingest skipped, dropped or repaired."""

    rows_read: int = 0
    rows_skipped_unparseable: int = 0
    rows_skipped_non_solo: int = 0
    matches_rejected_duplicate: int = 0
    matches_dropped_small: int = 0
    matches_densified: int = 0
    ties_repaired: int = 0
    n_matches: int = 0
    n_players: int = 0

    def as_dict(self) -> dict[str, int]:
        return asdict(self)


def parse_timestamps(values: pd.Series) -> pd.Series:
    """Epoch seconds as floats; NaN where a value cannot be parsed.

    Numeric values are taken as epoch seconds, anything else as ISO-8601.
    Timezone-naive datetimes are read as UTC.
    """
    numeric = pd.to_numeric(values, errors="coerce")
    result = numeric.astype("float64")
    textual = numeric.isna() & values.str.strip().ne("")
    if textual.any():
        parsed = pd.to_datetime(values[textual], utc=True, errors="coerce", format="ISO8601")
        epoch = pd.Timestamp(0, tz="UTC")
        result.loc[textual] = (parsed - epoch) / pd.Timedelta(seconds=1)
    return result


def _integral(values: pd.Series) -> pd.Series:
    numeric = pd.to_numeric(values, errors="coerce")
    return numeric.where(np.isfinite(numeric) & (numeric == np.floor(numeric)))


def _clean_rows(frame: pd.DataFrame, report: IngestReport) -> pd.DataFrame:
    rows = frame.loc[:, list(REQUIRED_COLUMNS)].fillna("").astype(str)
    report.rows_read = len(rows)

    match_id = rows["match_id"].str.strip()
    player_id = rows["player_id"].str.strip()
    timestamp = parse_timestamps(rows["date"])
    placement = _integral(rows["placement"])
    party_size = _integral(rows["party_size"])

    parseable = (
        match_id.ne("")
        & player_id.ne("")
        & timestamp.notna()
        & placement.notna()
        & (placement >= 1)
        & party_size.notna()
    )
    skipped = int((~parseable).sum())
    if skipped:
        report.rows_skipped_unparseable = skipped
        log.warning("ingest_row_skipped", reason="unparseable", count=skipped)

    solo = parseable & (party_size == 1)
    non_solo = int((parseable & ~solo).sum())
    if non_solo:
        report.rows_skipped_non_solo = non_solo
        log.info("ingest_row_skipped", reason="non_solo", count=non_solo)

    return pd.DataFrame(
        {
            "match_id": match_id[solo].astype(str),
            "timestamp": timestamp[solo],
            "player_id": player_id[solo].astype(str),
            "placement": placement[solo].astype(np.int64),
        }
    )


def _repair_placements(
    match_id: str, placements: np.ndarray, seed: int, report: IngestReport
) -> np.ndarray:
    """Dense 1..N ranks from raw placements; ties ordered by a seeded shuffle."""
    n = placements.size
    order = np.argsort(placements, kind="stable")
    sorted_places = placements[order]
    boundaries = np.flatnonzero(np.diff(sorted_places)) + 1
    groups = np.split(np.arange(n), boundaries)

    rng = None
    for group in groups:
        if group.size < 2:
            continue
        if rng is None:
            rng = match_rng(seed, match_id, RngPurpose.TIE_REPAIR)
        order[group] = order[group][rng.permutation(group.size)]
        report.ties_repaired += 1
        log.warning(
            "ingest_tie_repaired",
            match_id=match_id,
            placement=int(sorted_places[group[0]]),
            tied=int(group.size),
        )

    if rng is None and not np.array_equal(sorted_places, np.arange(1, n + 1)):
        report.matches_densified += 1
        log.info("ingest_placements_densified", match_id=match_id)

    ranks = np.empty(n, dtype=np.int64)
    ranks[order] = np.arange(1, n + 1)
    return ranks


def parse_match_log(
    rows: pd.DataFrame | Iterable[Mapping[str, object]],
    *,
    seed: int = 0,
) -> tuple[list[MatchRecord], IngestReport]:
    """Group rows into chronologically ordered matches.

    Matches are sorted by timestamp, then match id. A match whose rows
    disagree on the date takes the earliest one.
    """
    frame = rows if isinstance(rows, pd.DataFrame) else pd.DataFrame.from_records(list(rows))
    report = IngestReport()
    if frame.empty:
        return [], report
    missing = [c for c in REQUIRED_COLUMNS if c not in frame.columns]
    if missing:
        raise MatchLogError(f"match log is missing columns: {', '.join(missing)}")

    clean = _clean_rows(frame, report)
    matches: list[MatchRecord] = []
    players: set[str] = set()

    for match_id, group in clean.groupby("match_id", sort=False):
        ids = group["player_id"].tolist()
        if len(set(ids)) != len(ids):
            report.matches_rejected_duplicate += 1
            dupes = sorted({pid for pid in ids if ids.count(pid) > 1})
            log.warning("ingest_match_rejected", match_id=match_id, duplicate_players=dupes)
            continue
        if len(ids) < 2:
            report.matches_dropped_small += 1
            log.info("ingest_match_dropped", match_id=match_id, n_players=len(ids))
            continue
        ranks = _repair_placements(
            str(match_id), group["placement"].to_numpy(), seed, report
        )
        try:
            record = MatchRecord(
                str(match_id),
                float(group["timestamp"].min()),
                tuple(MatchEntry(pid, int(r)) for pid, r in zip(ids, ranks)),
            )
        except InvalidMatchError as exc:
            raise MatchLogError(str(exc)) from exc
        matches.append(record)
        players.update(ids)

    matches.sort(key=lambda m: (m.timestamp, m.match_id))
    report.n_matches = len(matches)
    report.n_players = len(players)
    log.info("ingest_complete", **report.as_dict())
    return matches, report


def read_match_log(
    path: Path, *, delimiter: str = ",", seed: int = 0
) -> tuple[list[MatchRecord], IngestReport]:
    """Read a match log from disk; see :func:`parse_match_log`."""
    try:
        frame = pd.read_csv(
            path,
            sep=delimiter,
            dtype=str,
            keep_default_na=False,
            encoding="utf-8",
        )
    except FileNotFoundError as exc:
        raise MatchLogError(f"match log not found: {path}") from exc
    except pd.errors.EmptyDataError as exc:
        raise MatchLogError(f"match log has no header: {path}") from exc
    except (OSError, UnicodeDecodeError, pd.errors.ParserError) as exc:
        raise MatchLogError(f"cannot read match log {path}: {exc}") from exc
    missing = [c for c in REQUIRED_COLUMNS if c not in frame.columns]
    if missing:
        raise MatchLogError(f"{path}: header is missing columns: {', '.join(missing)}")
    log.info("ingest_read", path=str(path), rows=len(frame))
    return parse_match_log(frame, seed=seed)


def _format_timestamp(ts: float) -> str:
    if math.isfinite(ts) and ts == int(ts):
        return str(int(ts))
    return repr(ts)


def match_log_frame(matches: Iterable[MatchRecord]) -> pd.DataFrame:
    records = [
        (m.match_id, _format_timestamp(m.timestamp), e.player_id, e.observed_rank, 1)
        for m in matches
        for e in m.entries
    ]
    return pd.DataFrame.from_records(records, columns=list(REQUIRED_COLUMNS))


def write_match_log(
    matches: Iterable[MatchRecord], path: Path, *, delimiter: str = ","
) -> Path:
    """Write matches in the format :func:`read_match_log` accepts."""
    path.parent.mkdir(parents=True, exist_ok=True)
    match_log_frame(matches).to_csv(path, sep=delimiter, index=False)
    return path


def write_latent_skills(
    latent: Mapping[str, float], path: Path, *, delimiter: str = ","
) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    frame = pd.DataFrame(
        {"player_id": list(latent.keys()), "latent_skill": list(latent.values())}
    )
    frame.to_csv(path, sep=delimiter, index=False)
    return path


def read_latent_skills(path: Path, *, delimiter: str = ",") -> dict[str, float]:
    frame = pd.read_csv(
        path,
        sep=delimiter,
        dtype={"player_id": str},
        keep_default_na=False,
        float_precision="round_trip",
    )
    return dict(zip(frame["player_id"], frame["latent_skill"].astype(float)))
