"""Baseline that predicts each player's finish from their previous match."""

from __future__ import annotations

from collections.abc import Sequence

from ffa_ratings.models.errors import InvalidMatchError
from ffa_ratings.models.match import Rating
from ffa_ratings.ratings.base import validate_field


def previous_rank_predict(history_rank: int | None, n: int) -> float:
    """Last observed rank, or N/2 for a player with no history."""
    if n < 2:
        raise InvalidMatchError(f"a match needs at least 2 players, got {n}")
    if history_rank is None:
        return n / 2
    return float(history_rank)


class PreviousRankSystem:
    """The "rating" is the rank value itself, so lower sorts first."""

    name = "previous_rank"
    higher_is_better = False

    def __init__(self, default_field_size: int = 2) -> None:
        if default_field_size < 2:
            raise InvalidMatchError(
                f"a match needs at least 2 players, got {default_field_size}"
            )
        self.default_field_size = default_field_size

    def default_rating(self) -> Rating:
        """Newcomer rating when no field size is given: N/2 for ``default_field_size``."""
        return self.initial_rating(self.default_field_size)

    def initial_rating(self, n_players: int) -> Rating:
        return Rating(previous_rank_predict(None, n_players))

    def score_for_sorting(self, rating: Rating) -> float:
        return rating.mu

    def update(
        self,
        ratings: Sequence[Rating],
        observed_ranks: Sequence[int],
        *,
        games_played: Sequence[int] | None = None,
    ) -> list[Rating]:
        ranks = validate_field(ratings, observed_ranks)
        return [Rating(float(r)) for r in ranks]
