"""Exception types raised across ingest, rating updates and replay."""

from __future__ import annotations


class RatingsError(Exception):
    """Base class for every error this package raises on purpose."""


class InvalidMatchError(RatingsError, ValueError):
    """A match, rating or rank list violates a model invariant."""


class DegenerateProbabilityError(RatingsError, ValueError):
    """A win probability of exactly 0 or 1 reached a Glicko variance term."""


class MatchLogError(RatingsError):
    """The match log cannot be read or lacks required header columns."""


class InfeasibleConfigError(RatingsError, ValueError):
    """A synthetic-data specification that cannot be generated."""


class ReplayError(RatingsError):
    """Failure while replaying one match, tagged with its position."""

    def __init__(self, message: str, *, match_index: int, match_id: str) -> None:
        super().__init__(f"match #{match_index} ({match_id}): {message}")
        self.match_index = match_index
        self.match_id = match_id
