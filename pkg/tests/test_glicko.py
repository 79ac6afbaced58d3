"""Tests for the free-for-all Glicko extension."""

from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ffa_ratings.config import GlickoConfig
from ffa_ratings.models.errors import DegenerateProbabilityError, InvalidMatchError
from ffa_ratings.models.match import Rating
from ffa_ratings.ratings.glicko import (
    GlickoSystem,
    glicko_d_squared,
    glicko_ffa_update,
    glicko_ffa_win_prob,
    glicko_ffa_win_probs,
    glicko_g,
    glicko_head_to_head_update,
    glicko_win_prob,
)

CFG = GlickoConfig()
Q = CFG.q

RATINGS = st.builds(
    Rating,
    st.floats(min_value=800.0, max_value=2500.0),
    st.floats(min_value=30.0, max_value=350.0),
)
FIELDS = st.integers(min_value=2, max_value=60).flatmap(
    lambda n: st.tuples(
        st.lists(RATINGS, min_size=n, max_size=n),
        st.permutations(list(range(1, n + 1))),
    )
)


def _g(sigma: float) -> float:
    return 1.0 / math.sqrt(1.0 + 3.0 * Q * Q * sigma * sigma / math.pi**2)


def _pairwise(mu_i: float, mu_j: float, sigma_i: float, sigma_j: float) -> float:
    g = _g(math.sqrt(sigma_i**2 + sigma_j**2))
    return 1.0 / (1.0 + 10.0 ** (-g * (mu_i - mu_j) / 400.0))


# ---------------------------------------------------------------------------
# g and win probabilities
# ---------------------------------------------------------------------------


class TestG:
    def test_zero_deviation(self):
        assert glicko_g(0.0, Q) == 1.0

    def test_default_deviation(self):
        assert glicko_g(350.0, Q) == pytest.approx(_g(350.0), abs=1e-12)
        assert glicko_g(350.0, Q) == pytest.approx(0.66906, abs=1e-4)

    def test_decreasing(self):
        assert glicko_g(100.0, Q) > glicko_g(350.0, Q)

    def test_negative_rejected(self):
        with pytest.raises(InvalidMatchError):
            glicko_g(-1.0, Q)


class TestWinProb:
    def test_equal_means(self):
        assert glicko_win_prob(Rating(1500, 200), Rating(1500, 50), Q) == 0.5

    def test_matches_ten_power_form(self):
        p = glicko_win_prob(Rating(1700, 30), Rating(1500, 30), Q)
        assert p == pytest.approx(_pairwise(1700, 1500, 30, 30), abs=1e-12)
        assert p == pytest.approx(0.7579, abs=1e-3)

    def test_antisymmetric(self):
        a, b = Rating(1700, 80), Rating(1550, 200)
        assert glicko_win_prob(a, b, Q) + glicko_win_prob(b, a, Q) == pytest.approx(1.0)

    def test_missing_sigma_rejected(self):
        with pytest.raises(InvalidMatchError):
            glicko_win_prob(Rating(1500), Rating(1500, 350), Q)

    def test_identical_field_of_five(self):
        probs = glicko_ffa_win_probs([Rating(1500, 350)] * 5, Q)
        assert probs == pytest.approx([0.2] * 5, abs=1e-15)

    def test_two_players_reduce_to_head_to_head(self):
        a, b = Rating(1700, 30), Rating(1500, 120)
        assert glicko_ffa_win_prob([a, b], 0, Q) == glicko_win_prob(a, b, Q)

    @settings(max_examples=200, deadline=None)
    @given(FIELDS)
    def test_probabilities_sum_to_one(self, field):
        ratings, _ = field
        assert float(np.sum(glicko_ffa_win_probs(ratings, Q))) == pytest.approx(1.0, abs=1e-12)

    def test_probabilities_sum_to_one_over_ten_thousand_fields(self):
        rng = np.random.default_rng(20243)
        for _ in range(10_000):
            n = int(rng.integers(2, 101))
            ratings = [
                Rating(mu, sd)
                for mu, sd in zip(
                    rng.uniform(800.0, 2500.0, n).tolist(), rng.uniform(30.0, 350.0, n).tolist()
                )
            ]
            assert abs(float(np.sum(glicko_ffa_win_probs(ratings, Q))) - 1.0) <= 1e-12


class TestDSquared:
    def test_even_match_full_weight(self):
        assert glicko_d_squared(0.5, 1.0, Q) == pytest.approx(4.0 / Q**2, rel=1e-12)

    def test_halving_g_quadruples(self):
        assert glicko_d_squared(0.3, 0.5, Q) == pytest.approx(
            4.0 * glicko_d_squared(0.3, 1.0, Q), rel=1e-12
        )

    def test_minimised_at_even_odds(self):
        assert glicko_d_squared(0.5, 0.8, Q) < glicko_d_squared(0.6, 0.8, Q)

    @pytest.mark.parametrize("p", [0.0, 1.0])
    def test_degenerate_probability(self, p):
        with pytest.raises(DegenerateProbabilityError):
            glicko_d_squared(p, 1.0, Q)


# ---------------------------------------------------------------------------
# Update
# ---------------------------------------------------------------------------


class TestFfaUpdate:
    def test_new_pair_symmetric(self):
        w, lo = glicko_ffa_update([Rating(1500, 350), Rating(1500, 350)], [1, 2], CFG)
        assert w.mu - 1500 == pytest.approx(1500 - lo.mu, abs=1e-9)
        assert w.mu > 1500 > lo.mu
        assert w.sigma == pytest.approx(lo.sigma)

    def test_new_pair_scalar_chain(self):
        # g -> Pr -> d^2 -> mu' evaluated one scalar at a time
        sigma = 350.0
        p = _pairwise(1500, 1500, sigma, sigma)
        g_opp = _g(sigma)
        d2 = 1.0 / (Q * Q * g_opp * g_opp * p * (1 - p))
        precision = 1 / sigma**2 + 1 / d2
        expected_mu = 1500 + Q / precision * g_opp * (1.0 - p)

        w, _ = glicko_ffa_update([Rating(1500, sigma), Rating(1500, sigma)], [1, 2], CFG)
        assert w.mu == pytest.approx(expected_mu, abs=1e-9)
        assert w.mu == pytest.approx(1662.2, abs=0.5)
        assert w.sigma == pytest.approx(math.sqrt(1 / precision), abs=1e-9)

    def test_three_player_uses_mean_opponent_variance(self):
        ratings = [Rating(1600, 100), Rating(1500, 200), Rating(1400, 300)]
        new = glicko_ffa_update(ratings, [2, 1, 3], CFG)
        probs = glicko_ffa_win_probs(ratings, Q)
        g_opp = _g(math.sqrt((200**2 + 300**2) / 2))
        d2 = 1 / (Q * Q * g_opp**2 * probs[0] * (1 - probs[0]))
        precision = 1 / 100**2 + 1 / d2
        expected = 1600 + Q / precision * g_opp * (1 / 3 - probs[0])
        assert new[0].mu == pytest.approx(expected, abs=1e-9)

    def test_missing_sigma_rejected(self):
        with pytest.raises(InvalidMatchError):
            glicko_ffa_update([Rating(1500), Rating(1500, 350)], [1, 2], CFG)

    @settings(max_examples=200, deadline=None)
    @given(FIELDS)
    def test_sigma_always_shrinks(self, field):
        ratings, ranks = field
        new = glicko_ffa_update(ratings, ranks, CFG)
        assert all(n.sigma < r.sigma for n, r in zip(new, ratings))

    @settings(max_examples=200, deadline=None)
    @given(FIELDS)
    def test_mu_moves_toward_result(self, field):
        ratings, ranks = field
        n = len(ratings)
        new = glicko_ffa_update(ratings, ranks, CFG)
        probs = glicko_ffa_win_probs(ratings, Q)
        for r, after, rank, p in zip(ratings, new, ranks, probs):
            actual = (n - rank) / (n * (n - 1) / 2)
            if actual > p + 1e-9:
                assert after.mu > r.mu
            elif actual < p - 1e-9:
                assert after.mu < r.mu

    @settings(max_examples=200, deadline=None)
    @given(RATINGS, RATINGS)
    def test_two_player_reduction_is_exact(self, a, b):
        ffa = glicko_ffa_update([a, b], [1, 2], CFG)
        h2h = glicko_head_to_head_update(a, b, CFG)
        assert tuple(ffa) == h2h

    def test_two_player_reduction_over_a_thousand_pairs(self):
        rng = np.random.default_rng(20242)
        mus = rng.uniform(800.0, 2500.0, (1000, 2))
        sigmas = rng.uniform(30.0, 350.0, (1000, 2))
        for (mu_a, mu_b), (sd_a, sd_b) in zip(mus.tolist(), sigmas.tolist()):
            a, b = Rating(mu_a, sd_a), Rating(mu_b, sd_b)
            assert tuple(glicko_ffa_update([a, b], [1, 2], CFG)) == (
                glicko_head_to_head_update(a, b, CFG)
            )

    @settings(max_examples=50, deadline=None)
    @given(FIELDS, st.randoms(use_true_random=False))
    def test_order_equivariant(self, field, rnd):
        ratings, ranks = field
        perm = list(range(len(ratings)))
        rnd.shuffle(perm)
        base = glicko_ffa_update(ratings, ranks, CFG)
        shuffled = glicko_ffa_update([ratings[i] for i in perm], [ranks[i] for i in perm], CFG)
        for got, i in zip(shuffled, perm):
            assert got.mu == pytest.approx(base[i].mu, abs=1e-9)
            assert got.sigma == pytest.approx(base[i].sigma, abs=1e-9)


class TestGlickoSystem:
    def test_defaults(self):
        system = GlickoSystem()
        assert system.default_rating() == Rating(1500.0, 350.0)
        assert system.name == "glicko"

    def test_update_delegates(self):
        ratings = [Rating(1500, 350), Rating(1500, 350)]
        assert GlickoSystem().update(ratings, [1, 2]) == glicko_ffa_update(ratings, [1, 2], CFG)
