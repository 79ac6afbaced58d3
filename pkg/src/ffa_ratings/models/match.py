"""Match, rating and outcome value types shared by every module.

Ranks are 1-based everywhere: rank 1 is the winner of a match.
"""

from __future__ import annotations

import hashlib
import math
from collections.abc import Iterable, Sequence
from dataclasses import dataclass
from enum import Enum
from functools import cached_property

import numpy as np

from ffa_ratings.models.errors import InvalidMatchError

# Opaque player token exactly as found in the match log.
PlayerId = str


class RngPurpose(str, Enum):
    """Independent per-match random streams; one per consumer."""

    TIE_REPAIR = "tie_repair"
    PREDICTION = "prediction"


def match_rng(seed: int, match_id: str, purpose: RngPurpose) -> np.random.Generator:
    """Random stream keyed by (global seed, purpose, match id).

    Keying by match id keeps every match's tie-breaks independent of which
    other matches were processed before it. Each purpose gets its own stream.
    """
    key = f"{RngPurpose(purpose).value}\x00{match_id}".encode("utf-8")
    digest = hashlib.blake2b(key, digest_size=8).digest()
    return np.random.default_rng([seed & 0xFFFFFFFFFFFFFFFF, int.from_bytes(digest, "little")])


def check_permutation(ranks: Sequence[int] | np.ndarray, what: str = "ranks") -> None:
    """Raise unless ``ranks`` is a permutation of 1..N."""
    arr = np.asarray(ranks)
    n = arr.size
    if n == 0 or not np.array_equal(np.sort(arr), np.arange(1, n + 1)):
        raise InvalidMatchError(f"{what} must be a permutation of 1..{n}, got {list(arr)}")


@dataclass(frozen=True)
class Rating:
    """Skill point estimate plus optional deviation (Glicko, TrueSkill)."""

    mu: float
    sigma: float | None = None

    def __post_init__(self) -> None:
        if not math.isfinite(self.mu):
            raise InvalidMatchError(f"rating mu must be finite, got {self.mu}")
        if self.sigma is not None and not (math.isfinite(self.sigma) and self.sigma > 0):
            raise InvalidMatchError(f"rating sigma must be positive, got {self.sigma}")


@dataclass(frozen=True)
class MatchEntry:
    player_id: PlayerId
    observed_rank: int


@dataclass(frozen=True)
class MatchRecord:
    """One free-for-all match with a strict observed placement order."""

    match_id: str
    timestamp: float
    entries: tuple[MatchEntry, ...]

    def __post_init__(self) -> None:
        entries = tuple(self.entries)
        object.__setattr__(self, "entries", entries)
        if len(entries) < 2:
            raise InvalidMatchError(f"match {self.match_id} has {len(entries)} players, need >= 2")
        ids = [e.player_id for e in entries]
        if any(not pid for pid in ids):
            raise InvalidMatchError(f"match {self.match_id} has an empty player id")
        if len(set(ids)) != len(ids):
            raise InvalidMatchError(f"match {self.match_id} lists a player twice")
        check_permutation([e.observed_rank for e in entries], f"observed ranks of {self.match_id}")

    @classmethod
    def from_pairs(
        cls, match_id: str, timestamp: float, pairs: Iterable[tuple[PlayerId, int]]
    ) -> MatchRecord:
        return cls(match_id, timestamp, tuple(MatchEntry(pid, int(rank)) for pid, rank in pairs))

    @property
    def n_players(self) -> int:
        return len(self.entries)

    @cached_property
    def player_ids(self) -> tuple[PlayerId, ...]:
        return tuple(e.player_id for e in self.entries)

    @cached_property
    def observed_ranks(self) -> tuple[int, ...]:
        return tuple(e.observed_rank for e in self.entries)


@dataclass(frozen=True)
class OutcomeRow:
    player_id: PlayerId
    predicted_rank: int
    observed_rank: int
    is_new_player: bool


@dataclass(frozen=True, eq=False)
class RankOutcome:
    """Predicted vs observed ranks for one match.

    Columns are stored as arrays sorted by predicted rank, so position ``i``
    (0-based here, 1-based in the metric formulas) is the player predicted to
    finish ``i + 1``-th.
    """

    match_id: str
    player_ids: tuple[PlayerId, ...]
    predicted: np.ndarray
    observed: np.ndarray
    is_new: np.ndarray

    @classmethod
    def build(
        cls,
        match_id: str,
        player_ids: Sequence[PlayerId],
        predicted: Sequence[int] | np.ndarray,
        observed: Sequence[int] | np.ndarray,
        is_new: Sequence[bool] | np.ndarray | None = None,
        *,
        validate: bool = True,
    ) -> RankOutcome:
        """Sort the columns by predicted rank.

        ``validate=False`` skips the permutation checks for columns the
        caller has already produced as permutations.
        """
        pred = np.asarray(predicted, dtype=np.int64)
        obs = np.asarray(observed, dtype=np.int64)
        new = (
            np.zeros(pred.size, dtype=bool)
            if is_new is None
            else np.asarray(is_new, dtype=bool)
        )
        if not (len(player_ids) == pred.size == obs.size == new.size):
            raise InvalidMatchError(f"outcome {match_id}: misaligned columns")
        if validate:
            check_permutation(pred, f"predicted ranks of {match_id}")
            check_permutation(obs, f"observed ranks of {match_id}")
        # predicted is a permutation of 1..N, so its inverse is the sort order
        order = np.empty(pred.size, dtype=np.int64)
        order[pred - 1] = np.arange(pred.size)
        ids = tuple(player_ids[i] for i in order.tolist())
        return cls(match_id, ids, pred[order], obs[order], new[order])

    @classmethod
    def from_rows(cls, match_id: str, rows: Iterable[OutcomeRow]) -> RankOutcome:
        rows = list(rows)
        return cls.build(
            match_id,
            [r.player_id for r in rows],
            [r.predicted_rank for r in rows],
            [r.observed_rank for r in rows],
            [r.is_new_player for r in rows],
        )

    @property
    def n_players(self) -> int:
        return int(self.predicted.size)

    @property
    def rows(self) -> tuple[OutcomeRow, ...]:
        return tuple(
            OutcomeRow(pid, int(p), int(o), bool(n))
            for pid, p, o, n in zip(self.player_ids, self.predicted, self.observed, self.is_new)
        )

    @cached_property
    def errors(self) -> np.ndarray:
        return np.abs(self.predicted - self.observed)

    @cached_property
    def _positions(self) -> dict[PlayerId, int]:
        return {pid: i for i, pid in enumerate(self.player_ids)}

    def position_of(self, player_id: PlayerId) -> int:
        """0-based row index of ``player_id``; raises if absent."""
        try:
            return self._positions[player_id]
        except KeyError:
            raise InvalidMatchError(
                f"player {player_id!r} did not play in {self.match_id}"
            ) from None


def errors_of(outcome: RankOutcome) -> list[int]:
    """Absolute prediction error per player, in predicted-rank order."""
    return [int(e) for e in outcome.errors]
