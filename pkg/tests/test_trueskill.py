"""Tests for the free-for-all TrueSkill extension."""

from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.stats import norm

from ffa_ratings.config import TrueSkillConfig
from ffa_ratings.models.errors import InvalidMatchError
from ffa_ratings.models.match import Rating
from ffa_ratings.ratings.gaussian import cdf, pdf, ppf, trueskill_v, trueskill_w
from ffa_ratings.ratings.trueskill import (
    TrueSkillSystem,
    trueskill_draw_margin,
    trueskill_ffa_update,
    trueskill_pairwise_update,
    trueskill_sequential_update,
)

CFG = TrueSkillConfig()
STILL = TrueSkillConfig(tau=0.0)
TIGHT = TrueSkillConfig(ep_tolerance=1e-13, ep_max_sweeps=1000)

RATINGS = st.builds(
    Rating,
    st.floats(min_value=0.0, max_value=50.0),
    st.floats(min_value=1.0, max_value=10.0),
)
FIELDS = st.integers(min_value=2, max_value=12).flatmap(
    lambda n: st.tuples(
        st.lists(RATINGS, min_size=n, max_size=n),
        st.permutations(list(range(1, n + 1))),
    )
)


def _reference_ep(
    ratings: list[Rating], ranks: list[int], cfg: TrueSkillConfig, sweeps: int = 300
) -> list[tuple[float, float]]:
    """Full-covariance EP over the performance vector, players in input order."""
    n = len(ratings)
    order = np.argsort(ranks)
    var = np.array([r.sigma**2 + cfg.tau**2 for r in ratings])
    mu = np.array([r.mu for r in ratings])
    prior_prec = np.diag(1.0 / (var + cfg.beta**2))
    prior_shift = prior_prec @ mu
    margin = trueskill_draw_margin(cfg.draw_probability, cfg.beta)

    rows = np.zeros((n - 1, n))
    for k in range(n - 1):
        rows[k, order[k]] = 1.0
        rows[k, order[k + 1]] = -1.0
    site_pi = np.zeros(n - 1)
    site_tau = np.zeros(n - 1)

    def posterior() -> tuple[np.ndarray, np.ndarray]:
        cov = np.linalg.inv(prior_prec + rows.T @ np.diag(site_pi) @ rows)
        return cov @ (prior_shift + rows.T @ site_tau), cov

    for _ in range(sweeps):
        for k in range(n - 1):
            mean, cov = posterior()
            a = rows[k]
            m, s2 = a @ mean, a @ cov @ a
            cav_pi = 1.0 / s2 - site_pi[k]
            cav_tau = m / s2 - site_tau[k]
            cav_v, cav_m = 1.0 / cav_pi, cav_tau / cav_pi
            c = math.sqrt(cav_v)
            x = (cav_m - margin) / c
            v = norm.pdf(x) / norm.cdf(x)
            w = v * (v + x)
            new_m, new_v = cav_m + c * v, cav_v * (1.0 - w)
            site_pi[k] = 1.0 / new_v - cav_pi
            site_tau[k] = new_m / new_v - cav_tau

    mean, cov = posterior()
    out = []
    for i in range(n):
        shrink = var[i] / (var[i] + cfg.beta**2)
        skill_mu = mu[i] + shrink * (mean[i] - mu[i])
        skill_var = var[i] - shrink * var[i] + shrink**2 * cov[i, i]
        out.append((float(skill_mu), float(skill_var)))
    return out


# ---------------------------------------------------------------------------
# Gaussian helpers and truncation corrections
# ---------------------------------------------------------------------------


class TestGaussian:
    def test_pdf_cdf_ppf(self):
        assert pdf(0.0) == pytest.approx(1 / math.sqrt(2 * math.pi), abs=1e-15)
        assert cdf(0.0) == 0.5
        assert ppf(0.975) == pytest.approx(1.959964, abs=1e-6)

    def test_v_w_at_zero(self):
        assert trueskill_v(0.0) == pytest.approx(0.79788, abs=1e-5)
        assert trueskill_w(0.0) == pytest.approx(0.63662, abs=1e-5)

    @settings(max_examples=300, deadline=None)
    @given(st.floats(min_value=-8.0, max_value=8.0))
    def test_v_matches_log_cdf(self, x):
        expected = math.exp(norm.logpdf(x) - norm.logcdf(x))
        assert trueskill_v(x) == pytest.approx(expected, rel=1e-10)

    @pytest.mark.parametrize("x", [-30.0001, -35.0, -45.0, -60.0])
    def test_v_asymptotic_branch(self, x):
        expected = math.exp(norm.logpdf(x) - norm.logcdf(x))
        assert trueskill_v(x) == pytest.approx(expected, rel=1e-10)

    def test_v_continuous_at_branch_point(self):
        assert trueskill_v(-30.0 - 1e-9) == pytest.approx(trueskill_v(-30.0 + 1e-9), rel=1e-9)

    @settings(max_examples=300, deadline=None)
    @given(st.floats(min_value=-50.0, max_value=35.0))
    def test_w_in_unit_interval(self, x):
        assert 0.0 < trueskill_w(x) < 1.0

    def test_v_rejects_non_finite(self):
        with pytest.raises(ValueError):
            trueskill_v(float("nan"))


class TestDrawMargin:
    def test_zero_probability(self):
        assert trueskill_draw_margin(0.0, 4.16) == 0.0

    def test_ten_percent(self):
        expected = norm.ppf(0.55) * math.sqrt(2) * 4.16
        assert trueskill_draw_margin(0.1, 4.16) == pytest.approx(expected, abs=1e-12)
        assert trueskill_draw_margin(0.1, 4.16) == pytest.approx(0.739, abs=1e-3)

    def test_margin_enlarges_win_update(self):
        a, b = Rating(25, 8.333), Rating(25, 8.333)
        plain, _ = trueskill_pairwise_update(a, b, CFG)
        wide, _ = trueskill_pairwise_update(a, b, TrueSkillConfig(draw_probability=0.1))
        assert wide.mu > plain.mu


# ---------------------------------------------------------------------------
# Pairwise update
# ---------------------------------------------------------------------------


class TestPairwise:
    def test_default_pair_scalar_chain(self):
        var = 8.333**2 + 0.833**2
        c = math.sqrt(2 * 4.16**2 + 2 * var)
        v = norm.pdf(0.0) / 0.5
        w = v * v
        winner, loser = trueskill_pairwise_update(Rating(25, 8.333), Rating(25, 8.333), CFG)
        assert winner.mu == pytest.approx(25 + var / c * v, abs=1e-12)
        assert loser.mu == pytest.approx(25 - var / c * v, abs=1e-12)
        assert winner.sigma == pytest.approx(math.sqrt(var * (1 - var / c**2 * w)), abs=1e-12)
        assert winner.mu == pytest.approx(29.23, abs=0.01)

    def test_upset_moves_further(self):
        strong, weak = Rating(35, 3), Rating(15, 3)
        expected_w, _ = trueskill_pairwise_update(strong, weak, CFG)
        upset_w, _ = trueskill_pairwise_update(weak, strong, CFG)
        assert upset_w.mu - weak.mu > expected_w.mu - strong.mu

    def test_missing_sigma_rejected(self):
        with pytest.raises(InvalidMatchError):
            trueskill_pairwise_update(Rating(25), Rating(25, 8.333), CFG)


# ---------------------------------------------------------------------------
# Chain EP
# ---------------------------------------------------------------------------


class TestChainEp:
    @settings(max_examples=200, deadline=None)
    @given(RATINGS, RATINGS, st.sampled_from([0.0, 0.1]))
    def test_two_players_match_closed_form(self, a, b, draw):
        cfg = TrueSkillConfig(draw_probability=draw)
        ep = trueskill_ffa_update([a, b], [1, 2], cfg)
        closed = trueskill_pairwise_update(a, b, cfg)
        for got, want in zip(ep, closed):
            assert got.mu == pytest.approx(want.mu, abs=1e-9)
            assert got.sigma == pytest.approx(want.sigma, abs=1e-9)

    def test_two_players_match_closed_form_over_a_thousand_pairs(self):
        rng = np.random.default_rng(20244)
        mus = rng.uniform(0.0, 50.0, (1000, 2))
        sigmas = rng.uniform(1.0, 10.0, (1000, 2))
        for (mu_a, mu_b), (sd_a, sd_b) in zip(mus.tolist(), sigmas.tolist()):
            a, b = Rating(mu_a, sd_a), Rating(mu_b, sd_b)
            ep = trueskill_ffa_update([a, b], [1, 2], CFG)
            closed = trueskill_pairwise_update(a, b, CFG)
            for got, want in zip(ep, closed):
                assert abs(got.mu - want.mu) <= 1e-9
                assert abs(got.sigma - want.sigma) <= 1e-9

    def test_identical_field_of_five(self):
        new = trueskill_ffa_update([Rating(25, 8.333)] * 5, [1, 2, 3, 4, 5], CFG)
        mus = [r.mu for r in new]
        assert all(a > b for a, b in zip(mus, mus[1:]))
        assert mus[0] > 25 > mus[-1]
        assert mus[2] == pytest.approx(25.0, abs=1e-5)
        assert mus[0] - 25 == pytest.approx(25 - mus[-1], abs=1e-5)

    @pytest.mark.parametrize(
        ("ratings", "ranks"),
        [
            ([Rating(25, 8.333)] * 3, [1, 2, 3]),
            ([Rating(30, 4), Rating(22, 6), Rating(25, 2)], [3, 1, 2]),
            ([Rating(20, 7), Rating(28, 3), Rating(24, 5), Rating(26, 1.5)], [2, 4, 1, 3]),
        ],
    )
    def test_matches_full_covariance_reference(self, ratings, ranks):
        new = trueskill_ffa_update(ratings, ranks, TIGHT)
        for got, (mu, var) in zip(new, _reference_ep(ratings, ranks, TIGHT)):
            assert got.mu == pytest.approx(mu, abs=1e-7)
            assert got.sigma == pytest.approx(math.sqrt(var), abs=1e-7)

    def test_draw_margin_reference(self):
        cfg = TrueSkillConfig(draw_probability=0.2, ep_tolerance=1e-13, ep_max_sweeps=1000)
        ratings = [Rating(25, 8.333), Rating(27, 5), Rating(21, 6)]
        new = trueskill_ffa_update(ratings, [2, 3, 1], cfg)
        for got, (mu, var) in zip(new, _reference_ep(ratings, [2, 3, 1], cfg)):
            assert got.mu == pytest.approx(mu, abs=1e-7)
            assert got.sigma == pytest.approx(math.sqrt(var), abs=1e-7)

    @settings(max_examples=100, deadline=None)
    @given(FIELDS)
    def test_sigma_shrinks_after_dynamics(self, field):
        ratings, ranks = field
        new = trueskill_ffa_update(ratings, ranks, CFG)
        for before, after in zip(ratings, new):
            # a lopsided neighbour can leave the change below float resolution
            assert after.sigma <= math.sqrt(before.sigma**2 + CFG.tau**2)

    @settings(max_examples=50, deadline=None)
    @given(FIELDS, st.randoms(use_true_random=False))
    def test_order_equivariant(self, field, rnd):
        ratings, ranks = field
        perm = list(range(len(ratings)))
        rnd.shuffle(perm)
        base = trueskill_ffa_update(ratings, ranks, CFG)
        shuffled = trueskill_ffa_update([ratings[i] for i in perm], [ranks[i] for i in perm], CFG)
        for got, i in zip(shuffled, perm):
            assert got.mu == pytest.approx(base[i].mu, abs=1e-9)
            assert got.sigma == pytest.approx(base[i].sigma, abs=1e-9)

    def test_ties_rejected(self):
        with pytest.raises(InvalidMatchError):
            trueskill_ffa_update([Rating(25, 8.333)] * 2, [1, 1], CFG)


class TestSequential:
    def test_two_players_match_closed_form(self):
        a, b = Rating(27, 4), Rating(23, 6)
        assert trueskill_sequential_update([a, b], [1, 2], CFG) == list(
            trueskill_pairwise_update(a, b, CFG)
        )

    def test_three_players_chain_pairwise(self):
        a, b, c = Rating(25, 8.333), Rating(26, 5), Rating(24, 3)
        b1, a1 = trueskill_pairwise_update(b, a, STILL)
        a2, c1 = trueskill_pairwise_update(a1, c, STILL)
        new = trueskill_sequential_update([a, b, c], [2, 1, 3], STILL)
        expected = [a2, b1, c1]
        for got, want in zip(new, expected):
            assert got.mu == pytest.approx(want.mu, abs=1e-10)
            assert got.sigma == pytest.approx(want.sigma, abs=1e-10)


class TestTrueSkillSystem:
    def test_defaults(self):
        system = TrueSkillSystem()
        assert system.name == "trueskill"
        assert system.default_rating() == Rating(25.0, 8.333)
        assert system.initial_rating(7) == Rating(25.0, 8.333)
        assert system.higher_is_better

    def test_schedule_dispatch(self):
        ratings = [Rating(25, 8.333), Rating(26, 5), Rating(24, 3)]
        ranks = [2, 1, 3]
        chain = TrueSkillSystem().update(ratings, ranks)
        seq = TrueSkillSystem(TrueSkillConfig(schedule="sequential")).update(ratings, ranks)
        assert chain == trueskill_ffa_update(ratings, ranks, CFG)
        assert seq == trueskill_sequential_update(ratings, ranks, CFG)

    def test_sorts_by_mean(self):
        assert TrueSkillSystem().score_for_sorting(Rating(30, 1)) == 30
