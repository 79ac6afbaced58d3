"""Glicko extended to free-for-all matches.

Pairwise win probabilities use the combined deviation of both players and
are normalized over the C(N, 2) pairings exactly like the Elo extension.
The update keeps a single opponent term g(sigma_F), where sigma_F**2 is the
mean of the opponents' variances.
"""

from __future__ import annotations

import math
from collections.abc import Sequence

import numpy as np
from scipy.special import expit

from ffa_ratings.config import GlickoConfig
from ffa_ratings.models.errors import DegenerateProbabilityError, InvalidMatchError
from ffa_ratings.models.match import Rating
from ffa_ratings.ratings.base import (
    normalized_observed_results,
    pair_count,
    validate_field,
)

_LN10 = math.log(10.0)


def _g_of_variance(variance: np.ndarray | float, q: float) -> np.ndarray | float:
    return 1.0 / np.sqrt(1.0 + 3.0 * q * q * variance / (math.pi * math.pi))


def glicko_g(sigma: float, q: float) -> float:
    """Attenuation factor g(sigma) = 1 / sqrt(1 + 3 q^2 sigma^2 / pi^2)."""
    if sigma < 0:
        raise InvalidMatchError(f"sigma must be non-negative, got {sigma}")
    s = np.float64(sigma)
    return float(_g_of_variance(s * s, q))


def _pairwise_prob(
    mu_i: np.ndarray | float,
    mu_j: np.ndarray | float,
    combined_variance: np.ndarray | float,
    q: float,
) -> np.ndarray | float:
    # (1 + 10^(-g * (mu_i - mu_j) / 400))^-1 written as a logistic
    return expit(_LN10 * _g_of_variance(combined_variance, q) * (mu_i - mu_j) / 400.0)


def _require_sigma(rating: Rating) -> float:
    if rating.sigma is None:
        raise InvalidMatchError("Glicko needs ratings with a deviation")
    return rating.sigma


def glicko_win_prob(r_i: Rating, r_j: Rating, q: float) -> float:
    s_i = np.float64(_require_sigma(r_i))
    s_j = np.float64(_require_sigma(r_j))
    return float(
        _pairwise_prob(np.float64(r_i.mu), np.float64(r_j.mu), s_i * s_i + s_j * s_j, q)
    )


def _ffa_probs(mus: np.ndarray, variances: np.ndarray, q: float) -> np.ndarray:
    pairs = pair_count(mus.size)
    probs = _pairwise_prob(
        mus[:, None], mus[None, :], variances[:, None] + variances[None, :], q
    )
    np.fill_diagonal(probs, 0.0)
    return probs.sum(axis=1) / float(pairs)


def _unpack(ratings: Sequence[Rating]) -> tuple[np.ndarray, np.ndarray]:
    mus = np.array([r.mu for r in ratings], dtype=np.float64)
    sigmas = np.array([_require_sigma(r) for r in ratings], dtype=np.float64)
    return mus, sigmas * sigmas


def glicko_ffa_win_probs(ratings: Sequence[Rating], q: float) -> np.ndarray:
    mus, variances = _unpack(ratings)
    return _ffa_probs(mus, variances, q)


def glicko_ffa_win_prob(ratings: Sequence[Rating], i: int, q: float) -> float:
    return float(glicko_ffa_win_probs(ratings, q)[i])


def glicko_d_squared(p_win: float, g_opp: float, q: float) -> float:
    """d^2 = [q^2 g^2 p (1 - p)]^-1."""
    if not 0.0 < p_win < 1.0:
        raise DegenerateProbabilityError(f"win probability {p_win} leaves d^2 undefined")
    if g_opp <= 0:
        raise InvalidMatchError(f"g must be positive, got {g_opp}")
    return float(_d_squared(np.float64(p_win), np.float64(g_opp), q))


def _d_squared(p: np.ndarray | float, g: np.ndarray | float, q: float) -> np.ndarray | float:
    return 1.0 / (q * q * g * g * p * (1.0 - p))


def _step(
    mu: np.ndarray | float,
    variance: np.ndarray | float,
    g_opp: np.ndarray | float,
    expected: np.ndarray | float,
    actual: np.ndarray | float,
    q: float,
) -> tuple[np.ndarray | float, np.ndarray | float]:
    """One Glicko step: returns (mu', sigma')."""
    precision = 1.0 / variance + 1.0 / _d_squared(expected, g_opp, q)
    new_mu = mu + q / precision * (g_opp * (actual - expected))
    return new_mu, np.sqrt(1.0 / precision)


def _check_probabilities(expected: np.ndarray) -> None:
    bad = (expected <= 0.0) | (expected >= 1.0)
    if np.any(bad):
        raise DegenerateProbabilityError(
            f"win probability {float(expected[np.argmax(bad)])} leaves d^2 undefined"
        )


def glicko_ffa_update(
    ratings: Sequence[Rating], observed_ranks: Sequence[int], cfg: GlickoConfig
) -> list[Rating]:
    ranks = validate_field(ratings, observed_ranks)
    mus, variances = _unpack(ratings)
    n = mus.size
    expected = _ffa_probs(mus, variances, cfg.q)
    _check_probabilities(expected)
    actual = normalized_observed_results(ranks)

    # mean opponent variance, excluding the player's own term
    others = np.broadcast_to(variances, (n, n)).copy()
    np.fill_diagonal(others, 0.0)
    opponent_variance = others.sum(axis=1) / float(n - 1)
    g_opp = _g_of_variance(opponent_variance, cfg.q)

    new_mus, new_sigmas = _step(mus, variances, g_opp, expected, actual, cfg.q)
    return [Rating(float(m), float(s)) for m, s in zip(new_mus, new_sigmas)]


def glicko_head_to_head_update(
    winner: Rating, loser: Rating, cfg: GlickoConfig
) -> tuple[Rating, Rating]:
    """Two-player Glicko update for a decisive result, one game per period."""
    mu_w, mu_l = np.float64(winner.mu), np.float64(loser.mu)
    s_w, s_l = np.float64(_require_sigma(winner)), np.float64(_require_sigma(loser))
    var_w, var_l = s_w * s_w, s_l * s_l
    p_w = _pairwise_prob(mu_w, mu_l, var_w + var_l, cfg.q)
    p_l = _pairwise_prob(mu_l, mu_w, var_l + var_w, cfg.q)
    _check_probabilities(np.array([p_w, p_l]))
    mu_w2, s_w2 = _step(mu_w, var_w, _g_of_variance(var_l, cfg.q), p_w, 1.0, cfg.q)
    mu_l2, s_l2 = _step(mu_l, var_l, _g_of_variance(var_w, cfg.q), p_l, 0.0, cfg.q)
    return Rating(float(mu_w2), float(s_w2)), Rating(float(mu_l2), float(s_l2))


class GlickoSystem:
    name = "glicko"
    higher_is_better = True

    def __init__(self, config: GlickoConfig | None = None) -> None:
        self.config = config or GlickoConfig()

    def default_rating(self) -> Rating:
        return Rating(self.config.initial_mu, self.config.initial_sigma)

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
        return glicko_ffa_update(ratings, observed_ranks, self.config)
