"""Synthetic match streams with known latent skills.

Each player has a hidden skill drawn from N(0, latent_skill_sd^2). In a match
every participant's performance is that skill plus N(0, noise^2) noise and
the observed ranks are the descending order of performance.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ffa_ratings.config import SynthConfig
from ffa_ratings.logging import get_logger
from ffa_ratings.models.errors import InfeasibleConfigError
from ffa_ratings.models.match import MatchEntry, MatchRecord, PlayerId

log = get_logger("ingest")


@dataclass
class SyntheticLog:
    matches: list[MatchRecord] = field(default_factory=list)
    latent: dict[PlayerId, float] = field(default_factory=dict)


def check_feasible(cfg: SynthConfig) -> None:
    if cfg.players_per_match > cfg.n_players:
        raise InfeasibleConfigError(
            f"players_per_match ({cfg.players_per_match}) exceeds n_players ({cfg.n_players})"
        )


def ranks_from_performance(performance: np.ndarray) -> np.ndarray:
    """Rank 1 for the highest performance."""
    order = np.argsort(-performance, kind="stable")
    ranks = np.empty(performance.size, dtype=np.int64)
    ranks[order] = np.arange(1, performance.size + 1)
    return ranks


def generate_synthetic(cfg: SynthConfig) -> SyntheticLog:
    """Deterministic match stream for ``cfg.seed``.

    From match ``new_player_start`` on, each slot independently goes to a
    never-seen player with probability ``new_player_rate``; the remaining
    slots are filled uniformly without replacement from the base pool.
    """
    check_feasible(cfg)
    rng = np.random.default_rng(cfg.seed)
    width = len(str(cfg.n_players - 1))
    base_ids = [f"p{i:0{width}d}" for i in range(cfg.n_players)]
    base_skill = rng.normal(0.0, cfg.latent_skill_sd, cfg.n_players)
    out = SyntheticLog(latent=dict(zip(base_ids, base_skill.tolist())))

    k = cfg.players_per_match
    minted = 0
    for m in range(cfg.n_matches):
        n_new = 0
        if cfg.new_player_rate > 0 and m >= cfg.new_player_start:
            n_new = int(rng.binomial(k, cfg.new_player_rate))
        picked = rng.choice(cfg.n_players, size=k - n_new, replace=False)
        ids = [base_ids[i] for i in picked]
        skills = base_skill[picked].tolist()
        if n_new:
            fresh = rng.normal(0.0, cfg.latent_skill_sd, n_new)
            for s in fresh.tolist():
                pid = f"n{minted:07d}"
                minted += 1
                out.latent[pid] = s
                ids.append(pid)
                skills.append(s)
        performance = np.asarray(skills) + rng.normal(0.0, cfg.performance_noise_sd, k)
        ranks = ranks_from_performance(performance)
        out.matches.append(
            MatchRecord(
                f"m{m:07d}",
                float(m),
                tuple(MatchEntry(pid, int(r)) for pid, r in zip(ids, ranks)),
            )
        )

    log.info(
        "synth_generated",
        n_matches=len(out.matches),
        base_players=cfg.n_players,
        new_players=minted,
        seed=cfg.seed,
    )
    return out
