"""TrueSkill for free-for-all matches.

Players are single-member teams. The N-player update runs expectation
propagation over the chain of performance differences between consecutive
finishers (winner vs 2nd, 2nd vs 3rd, ...), sweeping forward and backward
until the performance marginals move less than the configured tolerance.
Dynamics noise tau**2 is added to every participant's variance before the
match is processed.
"""

from __future__ import annotations

import math
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np

from ffa_ratings.config import TrueSkillConfig
from ffa_ratings.models.errors import InvalidMatchError
from ffa_ratings.models.match import Rating
from ffa_ratings.ratings.base import validate_field
from ffa_ratings.ratings.gaussian import ppf, trueskill_v, trueskill_w


@dataclass(frozen=True)
class Skill:
    """Working (mean, variance) pair; the variance already includes dynamics."""

    mu: float
    var: float


def trueskill_draw_margin(draw_probability: float, beta: float, n: int = 2) -> float:
    if draw_probability <= 0.0:
        return 0.0
    return ppf((draw_probability + 1.0) / 2.0) * math.sqrt(n) * beta


def _require_sigma(rating: Rating) -> float:
    if rating.sigma is None:
        raise InvalidMatchError("TrueSkill needs ratings with a deviation")
    return rating.sigma


def _with_dynamics(rating: Rating, tau: float) -> Skill:
    sigma = _require_sigma(rating)
    return Skill(rating.mu, sigma * sigma + tau * tau)


def _to_rating(skill: Skill) -> Rating:
    return Rating(skill.mu, math.sqrt(skill.var))


def _pairwise(winner: Skill, loser: Skill, beta: float, margin: float) -> tuple[Skill, Skill]:
    c_sq = 2.0 * beta * beta + winner.var + loser.var
    c = math.sqrt(c_sq)
    x = (winner.mu - loser.mu - margin) / c
    v = trueskill_v(x)
    w = trueskill_w(x)
    new_winner = Skill(
        winner.mu + winner.var / c * v,
        winner.var * (1.0 - winner.var / c_sq * w),
    )
    new_loser = Skill(
        loser.mu - loser.var / c * v,
        loser.var * (1.0 - loser.var / c_sq * w),
    )
    return new_winner, new_loser


def trueskill_pairwise_update(
    winner: Rating, loser: Rating, cfg: TrueSkillConfig
) -> tuple[Rating, Rating]:
    """Closed-form two-player update for a decisive result."""
    margin = trueskill_draw_margin(cfg.draw_probability, cfg.beta)
    w, lo = _pairwise(
        _with_dynamics(winner, cfg.tau), _with_dynamics(loser, cfg.tau), cfg.beta, margin
    )
    return _to_rating(w), _to_rating(lo)


class _ChainEP:
    """Message passing over the finish-order chain.

    Messages live in natural parameters (precision, precision * mean).
    ``up[k]`` goes from difference factor k to the better finisher k,
    ``down[k]`` from factor k to the worse finisher k + 1. A zero precision
    is an uninformative message.
    """

    def __init__(self, skills: list[Skill], beta: float, margin: float) -> None:
        n = len(skills)
        self.n = n
        self.margin = margin
        beta_sq = beta * beta
        self.prior_pi = [1.0 / (s.var + beta_sq) for s in skills]
        self.prior_tau = [s.mu * pi for s, pi in zip(skills, self.prior_pi)]
        self._prior_pi = np.array(self.prior_pi)
        self._prior_tau = np.array(self.prior_tau)
        self.up_pi = [0.0] * (n - 1)
        self.up_tau = [0.0] * (n - 1)
        self.down_pi = [0.0] * (n - 1)
        self.down_tau = [0.0] * (n - 1)

    def update_factor(self, k: int) -> None:
        # finisher k without factor k: prior and the message from factor k - 1
        pi_a = self.prior_pi[k]
        tau_a = self.prior_tau[k]
        if k > 0:
            pi_a += self.down_pi[k - 1]
            tau_a += self.down_tau[k - 1]
        # finisher k + 1 without factor k: prior and the message from factor k + 1
        pi_b = self.prior_pi[k + 1]
        tau_b = self.prior_tau[k + 1]
        if k + 2 < self.n:
            pi_b += self.up_pi[k + 1]
            tau_b += self.up_tau[k + 1]
        v_a = 1.0 / pi_a
        v_b = 1.0 / pi_b
        m_a = tau_a * v_a
        m_b = tau_b * v_b

        mean_d = m_a - m_b
        var_d = v_a + v_b
        c = math.sqrt(var_d)
        x = (mean_d - self.margin) / c
        v = trueskill_v(x)
        w = v * (v + x)
        if w <= 0.0:
            # constraint already satisfied beyond float resolution
            self.up_pi[k] = self.up_tau[k] = 0.0
            self.down_pi[k] = self.down_tau[k] = 0.0
            return
        # truncation message on the difference: marginal divided by cavity
        msg_mean = mean_d + c / (v + x)
        msg_var = var_d * (1.0 - w) / w
        up_var = msg_var + v_b
        down_var = msg_var + v_a
        self.up_pi[k] = 1.0 / up_var
        self.up_tau[k] = (msg_mean + m_b) / up_var
        self.down_pi[k] = 1.0 / down_var
        self.down_tau[k] = (m_a - msg_mean) / down_var

    def incoming(self, i: int) -> tuple[float, float]:
        pi = tau = 0.0
        if i < self.n - 1:
            pi += self.up_pi[i]
            tau += self.up_tau[i]
        if i > 0:
            pi += self.down_pi[i - 1]
            tau += self.down_tau[i - 1]
        return pi, tau

    def marginal_means(self) -> np.ndarray:
        pi = self._prior_pi.copy()
        tau = self._prior_tau.copy()
        pi[:-1] += self.up_pi
        tau[:-1] += self.up_tau
        pi[1:] += self.down_pi
        tau[1:] += self.down_tau
        return tau / pi

    def run(self, tolerance: float, max_sweeps: int) -> int:
        """Sweep until converged; returns the number of sweeps made."""
        schedule = list(range(self.n - 1)) + list(range(self.n - 3, -1, -1))
        update = self.update_factor
        previous = self.marginal_means()
        sweeps = 0
        while sweeps < max_sweeps:
            sweeps += 1
            for k in schedule:
                update(k)
            current = self.marginal_means()
            delta = float(np.max(np.abs(current - previous)))
            previous = current
            if delta < tolerance:
                break
        return sweeps


def _finish_order(ranks: np.ndarray) -> np.ndarray:
    return np.argsort(ranks, kind="stable")


def trueskill_ffa_update(
    ratings: Sequence[Rating], observed_ranks: Sequence[int], cfg: TrueSkillConfig
) -> list[Rating]:
    """N-player update by chain expectation propagation."""
    ranks = validate_field(ratings, observed_ranks)
    order = _finish_order(ranks)
    skills = [_with_dynamics(ratings[i], cfg.tau) for i in order]
    margin = trueskill_draw_margin(cfg.draw_probability, cfg.beta)

    chain = _ChainEP(skills, cfg.beta, margin)
    chain.run(cfg.ep_tolerance, cfg.ep_max_sweeps)

    beta_sq = cfg.beta * cfg.beta
    updated: list[Rating | None] = [None] * len(skills)
    for pos, idx in enumerate(order):
        skill = skills[pos]
        pi, tau = chain.incoming(pos)
        if pi <= 0.0:
            updated[idx] = _to_rating(skill)
            continue
        # pass the performance likelihood back through the beta noise
        lik_var = 1.0 / pi + beta_sq
        lik_mean = tau / pi
        post_pi = 1.0 / skill.var + 1.0 / lik_var
        post_tau = skill.mu / skill.var + lik_mean / lik_var
        updated[idx] = Rating(post_tau / post_pi, math.sqrt(1.0 / post_pi))
    return updated  # type: ignore[return-value]


def trueskill_sequential_update(
    ratings: Sequence[Rating], observed_ranks: Sequence[int], cfg: TrueSkillConfig
) -> list[Rating]:
    """One pass of pairwise updates down the finish order.

    Each adjacent pair is updated from the state the previous pair left, a
    cheap approximation kept for comparison with the chain schedule.
    """
    ranks = validate_field(ratings, observed_ranks)
    order = _finish_order(ranks)
    margin = trueskill_draw_margin(cfg.draw_probability, cfg.beta)
    skills = {int(i): _with_dynamics(ratings[i], cfg.tau) for i in order}
    for upper, lower in zip(order[:-1], order[1:]):
        skills[int(upper)], skills[int(lower)] = _pairwise(
            skills[int(upper)], skills[int(lower)], cfg.beta, margin
        )
    return [_to_rating(skills[i]) for i in range(len(ratings))]


class TrueSkillSystem:
    name = "trueskill"
    higher_is_better = True

    def __init__(self, config: TrueSkillConfig | None = None) -> None:
        self.config = config or TrueSkillConfig()

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
        if self.config.schedule == "sequential":
            return trueskill_sequential_update(ratings, observed_ranks, self.config)
        return trueskill_ffa_update(ratings, observed_ranks, self.config)
