"""Elo extended to free-for-all matches.

A field of N players is treated as C(N, 2) head-to-head games. Each
player's summed pairwise win probability and their normalized finish are
both scaled by C(N, 2), so both vectors sum to one and the rating changes
of a match are zero-sum.
"""

from __future__ import annotations

import math
from collections.abc import Sequence

import numpy as np
from scipy.special import expit

from ffa_ratings.config import EloConfig
from ffa_ratings.models.errors import InvalidMatchError
from ffa_ratings.models.match import Rating
from ffa_ratings.ratings.base import (
    normalized_observed_results,
    pair_count,
    validate_field,
)


def _check_finite(*values: float) -> None:
    for v in values:
        if not math.isfinite(v):
            raise InvalidMatchError(f"non-finite rating input: {v}")


def elo_win_prob(mu_i: float, mu_j: float, d: float) -> float:
    """Probability that a player rated ``mu_i`` beats one rated ``mu_j``."""
    _check_finite(mu_i, mu_j, d)
    if d <= 0:
        raise InvalidMatchError(f"D must be positive, got {d}")
    return float(expit((np.float64(mu_i) - np.float64(mu_j)) / d))


def elo_pairwise_matrix(mus: np.ndarray, d: float) -> np.ndarray:
    """P[i, j] = Pr(i beats j), with a zero diagonal."""
    probs = expit((mus[:, None] - mus[None, :]) / d)
    np.fill_diagonal(probs, 0.0)
    return probs


def elo_ffa_win_probs(mus: Sequence[float] | np.ndarray, d: float) -> np.ndarray:
    """Every player's normalized free-for-all win probability."""
    arr = np.asarray(mus, dtype=np.float64)
    pairs = pair_count(arr.size)
    if not np.all(np.isfinite(arr)):
        raise InvalidMatchError("non-finite rating input")
    return elo_pairwise_matrix(arr, d).sum(axis=1) / float(pairs)


def elo_ffa_win_prob(mus: Sequence[float] | np.ndarray, i: int, d: float) -> float:
    return float(elo_ffa_win_probs(mus, d)[i])


def elo_k_factor(mu: float, games_played: int, cfg: EloConfig) -> float:
    """K for one player under the configured schedule."""
    if cfg.k_schedule == "fixed":
        return cfg.k
    if games_played < 30:
        return 40.0
    if mu < 2400:
        return 20.0
    return 10.0


def elo_ffa_update(
    mus: Sequence[float] | np.ndarray,
    observed_ranks: Sequence[int],
    cfg: EloConfig,
    *,
    k: np.ndarray | None = None,
) -> np.ndarray:
    """New ratings after one match.

    ``k`` overrides the per-player K (tiered schedules); with a uniform K
    the deltas sum to zero.
    """
    arr = np.asarray(mus, dtype=np.float64)
    ranks = validate_field(arr, observed_ranks)
    k_arr = np.full(arr.size, cfg.k) if k is None else np.asarray(k, dtype=np.float64)
    expected = elo_ffa_win_probs(arr, cfg.d)
    actual = normalized_observed_results(ranks)
    return arr + k_arr * (actual - expected)


def elo_head_to_head_update(
    winner_mu: float, loser_mu: float, cfg: EloConfig
) -> tuple[float, float]:
    """Classic two-player Elo update for a decisive result."""
    w = np.float64(winner_mu)
    lo = np.float64(loser_mu)
    p_w = expit((w - lo) / cfg.d)
    p_l = expit((lo - w) / cfg.d)
    return float(w + cfg.k * (1.0 - p_w)), float(lo + cfg.k * (0.0 - p_l))


class EloSystem:
    name = "elo"
    higher_is_better = True

    def __init__(self, config: EloConfig | None = None) -> None:
        self.config = config or EloConfig()

    def default_rating(self) -> Rating:
        return Rating(self.config.initial_mu)

    def initial_rating(self, n_players: int) -> Rating:
        return self.default_rating()

    def score_for_sorting(self, rating: Rating) -> float:
        return rating.mu

    def update(
        self,
        ratings: Sequence[Rating],
        observed_ranks: Sequence[int],
        *,
        games_played: Sequence[int] | None = None,
    ) -> list[Rating]:
        mus = np.array([r.mu for r in ratings], dtype=np.float64)
        k = None
        if self.config.k_schedule != "fixed":
            played = games_played if games_played is not None else [0] * len(ratings)
            k = np.array(
                [elo_k_factor(mu, g, self.config) for mu, g in zip(mus, played)]
            )
        new_mus = elo_ffa_update(mus, observed_ranks, self.config, k=k)
        return [Rating(float(mu)) for mu in new_mus]
