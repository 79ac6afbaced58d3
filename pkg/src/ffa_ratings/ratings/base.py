"""Uniform interface over the four rating systems, plus shared helpers."""

from __future__ import annotations

from collections.abc import Sequence
from math import comb
from typing import TYPE_CHECKING, Protocol, runtime_checkable

import numpy as np

from ffa_ratings.models.errors import InvalidMatchError
from ffa_ratings.models.match import Rating, check_permutation

if TYPE_CHECKING:
    from ffa_ratings.config import Settings

SYSTEM_NAMES = ("elo", "glicko", "trueskill", "previous_rank")


@runtime_checkable
class RatingSystem(Protocol):
    """Behaviour every rating system offers to the replay engine.

    ``update`` is pure: it returns new ratings aligned with its input and
    computes every player's change from the pre-match ratings.
    """

    name: str
    # PreviousRank predicts a rank value, so lower is better there
    higher_is_better: bool

    # newcomer rating outside any particular match
    def default_rating(self) -> Rating: ...

    def initial_rating(self, n_players: int) -> Rating: ...

    def score_for_sorting(self, rating: Rating) -> float: ...

    def update(
        self,
        ratings: Sequence[Rating],
        observed_ranks: Sequence[int],
        *,
        games_played: Sequence[int] | None = None,
    ) -> list[Rating]: ...


def validate_field(ratings: Sequence[object], observed_ranks: Sequence[int]) -> np.ndarray:
    """Check a match field and return its ranks as an int array."""
    if len(ratings) != len(observed_ranks):
        raise InvalidMatchError(
            f"misaligned lists: {len(ratings)} ratings vs {len(observed_ranks)} ranks"
        )
    if len(ratings) < 2:
        raise InvalidMatchError(f"a match needs at least 2 players, got {len(ratings)}")
    ranks = np.asarray(observed_ranks, dtype=np.int64)
    check_permutation(ranks, "observed ranks")
    return ranks


def pair_count(n: int) -> int:
    if n < 2:
        raise InvalidMatchError(f"a match needs at least 2 players, got {n}")
    return comb(n, 2)


def normalized_observed_result(observed_rank: int, n: int) -> float:
    """Share of the match's single point of 'result' earned by one finish.

    (N - rank) / C(N, 2): the winner gets the largest share, last place none,
    and a full permutation sums to exactly one.
    """
    pairs = pair_count(n)
    if not 1 <= observed_rank <= n:
        raise InvalidMatchError(f"rank {observed_rank} outside 1..{n}")
    return (n - observed_rank) / pairs


def normalized_observed_results(observed_ranks: np.ndarray) -> np.ndarray:
    n = observed_ranks.size
    return (n - observed_ranks) / float(pair_count(n))


def build_system(name: str, settings: Settings) -> RatingSystem:
    """Instantiate a rating system by registry name."""
    from ffa_ratings.ratings.elo import EloSystem
    from ffa_ratings.ratings.glicko import GlickoSystem
    from ffa_ratings.ratings.previous_rank import PreviousRankSystem
    from ffa_ratings.ratings.trueskill import TrueSkillSystem

    if name == "elo":
        return EloSystem(settings.elo)
    if name == "glicko":
        return GlickoSystem(settings.glicko)
    if name == "trueskill":
        return TrueSkillSystem(settings.trueskill)
    if name == "previous_rank":
        return PreviousRankSystem()
    raise KeyError(f"Unknown rating system '{name}'. Known systems: {list(SYSTEM_NAMES)}")
