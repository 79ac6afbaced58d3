from __future__ import annotations

import sys

if sys.version_info >= (3, 11):
    import tomllib
else:
    try:
        import tomllib
    except ModuleNotFoundError:
        import tomli as tomllib  # type: ignore[no-redef]
from pathlib import Path
from typing import Literal

from pydantic import BaseModel, Field


class EloConfig(BaseModel):
    initial_mu: float = 1500.0
    k: float = Field(10.0, gt=0)
    d: float = Field(400.0, gt=0)
    # "fide" uses 40 for the first 30 games, 20 below 2400, then 10
    k_schedule: Literal["fixed", "fide"] = "fixed"


class GlickoConfig(BaseModel):
    initial_mu: float = 1500.0
    initial_sigma: float = Field(350.0, gt=0)
    q: float = Field(0.0057565, gt=0)


class TrueSkillConfig(BaseModel):
    initial_mu: float = 25.0
    initial_sigma: float = Field(8.333, gt=0)
    beta: float = Field(4.16, gt=0)
    tau: float = Field(0.833, ge=0)
    draw_probability: float = Field(0.0, ge=0, lt=1)
    schedule: Literal["chain_ep", "sequential"] = "chain_ep"
    ep_tolerance: float = Field(1e-6, gt=0)
    ep_max_sweeps: int = Field(100, ge=1)


class ReplayConfig(BaseModel):
    seed: int = 0
    window: int = Field(0, ge=0)  # trailing moving average on written series; 0 = raw
    workers: int = Field(1, ge=1)
    executor: Literal["thread", "process"] = "thread"
    ndcg_discount: Literal["log2", "reciprocal"] = "log2"
    hit_threshold: int = Field(0, ge=0)


class CohortConfig(BaseModel):
    cohort_size: int = Field(1000, ge=1)
    best_min_games: int = Field(10, ge=0)
    best_horizon: int = Field(10, ge=1)
    frequent_min_games: int = Field(100, ge=0)
    frequent_horizon: int = Field(100, ge=1)
    bins: int = Field(5, ge=1)


class IngestConfig(BaseModel):
    delimiter: str = ","


class SynthConfig(BaseModel):
    n_players: int = Field(500, ge=2)
    n_matches: int = Field(5000, ge=0)
    players_per_match: int = Field(10, ge=2)
    latent_skill_sd: float = Field(1.0, gt=0)
    performance_noise_sd: float = Field(0.5, ge=0)
    # chance that a match slot is filled by a never-seen player
    new_player_rate: float = Field(0.0, ge=0, le=1)
    # first match index at which new_player_rate applies
    new_player_start: int = Field(0, ge=0)
    seed: int = 0


class LoggingConfig(BaseModel):
    level: str = "INFO"
    log_file: Path | None = None
    json_format: bool = False


class Settings(BaseModel):
    elo: EloConfig = EloConfig()
    glicko: GlickoConfig = GlickoConfig()
    trueskill: TrueSkillConfig = TrueSkillConfig()
    replay: ReplayConfig = ReplayConfig()
    cohort: CohortConfig = CohortConfig()
    ingest: IngestConfig = IngestConfig()
    synth: SynthConfig = SynthConfig()
    logging: LoggingConfig = LoggingConfig()


DEFAULT_CONFIG_PATH = Path(__file__).parents[2] / "config" / "default.toml"


def load_settings(path: Path | None = None) -> Settings:
    config_path = path or DEFAULT_CONFIG_PATH
    if not config_path.is_file():
        return Settings()
    with open(config_path, "rb") as f:
        data = tomllib.load(f)
    return Settings(**data)


def load_synth_config(path: Path) -> SynthConfig:
    """Read the ``[synth]`` table of a TOML file (the whole file if absent)."""
    with open(path, "rb") as f:
        data = tomllib.load(f)
    return SynthConfig(**data.get("synth", data))
