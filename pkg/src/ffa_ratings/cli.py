"""CLI entry point for ffa-ratings."""

from __future__ import annotations

import os
import shutil
import tempfile
from collections.abc import Callable
from functools import partial
from pathlib import Path
from typing import Any, NoReturn

import click
from pydantic import ValidationError
from rich.console import Console
from rich.table import Table

from ffa_ratings.config import Settings, SynthConfig, load_settings, load_synth_config
from ffa_ratings.metrics import METRIC_NAMES, NdcgWeighting
from ffa_ratings.models.errors import RatingsError
from ffa_ratings.models.match import MatchRecord
from ffa_ratings.ratings.base import SYSTEM_NAMES

console = Console()
err_console = Console(stderr=True)

SETUPS = ("all_players", "best", "frequent", "binned")


@click.group()
@click.option(
    "--config",
    "config_path",
    type=click.Path(exists=True, dir_okay=False, path_type=Path),
    default=None,
    help="Path to config TOML file (default: config/default.toml)",
)
@click.option(
    "--log-level",
    default=None,
    type=click.Choice(["DEBUG", "INFO", "WARNING", "ERROR"], case_sensitive=False),
    help="Log level (default: from config, else INFO)",
)
@click.option(
    "--log-file",
    type=click.Path(dir_okay=False, path_type=Path),
    default=None,
    help="Also write JSON-lines logs to this file",
)
@click.pass_context
def main(
    ctx: click.Context,
    config_path: Path | None,
    log_level: str | None,
    log_file: Path | None,
) -> None:
    """Free-for-all skill ratings: replay match logs and score rank predictions."""
    from ffa_ratings.logging import configure_logging

    ctx.ensure_object(dict)
    try:
        settings = load_settings(config_path)
    except ValidationError as e:
        raise click.ClickException(f"Invalid config: {e}") from e
    ctx.obj["settings"] = settings

    configure_logging(
        level=log_level or settings.logging.level,
        log_file=log_file or settings.logging.log_file,
        json_format=settings.logging.json_format,
    )


def _fail(message: str) -> NoReturn:
    err_console.print(f"[red]Error:[/red] {message}")
    raise SystemExit(1)


def _with_overrides(settings: Settings, overrides: dict[str, dict[str, Any]]) -> Settings:
    """Re-validated copy of ``settings`` with non-None flag values applied."""
    data = settings.model_dump()
    for section, values in overrides.items():
        data[section].update({k: v for k, v in values.items() if v is not None})
    try:
        return Settings.model_validate(data)
    except ValidationError as e:
        raise click.BadParameter(str(e)) from e


def _load_matches(
    settings: Settings, input_path: Path | None, synth_path: Path | None, seed: int | None
) -> list[MatchRecord]:
    from ffa_ratings.ingest.match_log import read_match_log
    from ffa_ratings.ingest.synthetic import generate_synthetic

    if input_path is not None:
        matches, report = read_match_log(
            input_path, delimiter=settings.ingest.delimiter, seed=settings.replay.seed
        )
        console.print(
            f"Read {report.n_matches:,} matches, {report.n_players:,} players "
            f"({report.ties_repaired} ties repaired, "
            f"{report.rows_skipped_unparseable + report.rows_skipped_non_solo} rows skipped)"
        )
        return matches

    assert synth_path is not None
    try:
        synth = load_synth_config(synth_path)
    except ValidationError as e:
        raise click.BadParameter(str(e), param_hint="--synth") from e
    if seed is not None:
        synth = synth.model_copy(update={"seed": seed})
    log_ = generate_synthetic(synth)
    console.print(
        f"Generated {len(log_.matches):,} synthetic matches, "
        f"{len(log_.latent):,} players (seed {synth.seed})"
    )
    return log_.matches


def _summary_table(summary: dict[str, dict[str, float]], n_matches: int) -> Table:
    table = Table(title=f"Mean metrics over {n_matches:,} matches")
    table.add_column("System", style="bold")
    for name in METRIC_NAMES:
        table.add_column(name, justify="right")
    for system, means in summary.items():
        table.add_row(system, *(f"{means[name]:.4f}" for name in METRIC_NAMES))
    return table


def _write_outputs(writes: list[tuple[Path, Callable[[Path], Path]]], out_dir: Path) -> None:
    """Write every file into a staging directory, then move them into ``out_dir``.

    On failure nothing new is left behind in ``out_dir``.
    """
    created = not out_dir.exists()
    out_dir.mkdir(parents=True, exist_ok=True)
    staging = Path(tempfile.mkdtemp(prefix=".ffa-ratings-", dir=out_dir))
    moved: list[Path] = []
    try:
        staged = [(write(staging / path.name), path) for path, write in writes]
        for src, dest in staged:
            os.replace(src, dest)
            moved.append(dest)
    except OSError:
        for dest in moved:
            dest.unlink(missing_ok=True)
        raise
    finally:
        shutil.rmtree(staging, ignore_errors=True)
        if created and not any(out_dir.iterdir()):
            out_dir.rmdir()


@main.command()
@click.option(
    "--input",
    "input_path",
    type=click.Path(dir_okay=False, path_type=Path),
    default=None,
    help="Match log (delimited text with header)",
)
@click.option(
    "--synth",
    "synth_path",
    type=click.Path(exists=True, dir_okay=False, path_type=Path),
    default=None,
    help="TOML file with a [synth] table; generates the match stream",
)
@click.option(
    "--system",
    type=click.Choice([*SYSTEM_NAMES, "all"]),
    default="all",
    show_default=True,
)
@click.option("--setup", type=click.Choice(SETUPS), default="all_players", show_default=True)
@click.option("--seed", type=int, default=None, help="Seed for tie-breaks and sampling")
@click.option(
    "--out",
    "out_dir",
    type=click.Path(file_okay=False, path_type=Path),
    required=True,
    help="Output directory",
)
@click.option("--window", type=click.IntRange(min=0), default=None, help="Moving-average window for the series")
@click.option("--k", "elo_k", type=float, default=None, help="Elo K factor")
@click.option("--d", "elo_d", type=float, default=None, help="Elo scale D")
@click.option("--k-schedule", type=click.Choice(["fixed", "fide"]), default=None)
@click.option("--beta", type=float, default=None, help="TrueSkill performance deviation")
@click.option("--tau-dynamics", type=float, default=None, help="TrueSkill dynamics deviation")
@click.option("--schedule", type=click.Choice(["chain_ep", "sequential"]), default=None)
@click.option("--cohort-size", type=click.IntRange(min=1), default=None)
@click.option("--min-games", type=click.IntRange(min=0), default=None)
@click.option("--horizon", type=click.IntRange(min=1), default=None)
@click.option("--bins", type=click.IntRange(min=1), default=None)
@click.option("--ndcg-discount", type=click.Choice(["log2", "reciprocal"]), default=None)
@click.option("--delimiter", default=None, help="Field delimiter for input and output")
@click.option("--workers", type=click.IntRange(min=1), default=None)
@click.option("--snapshot", is_flag=True, help="Also write each system's final ratings")
@click.pass_context
def replay(
    ctx: click.Context,
    input_path: Path | None,
    synth_path: Path | None,
    system: str,
    setup: str,
    seed: int | None,
    out_dir: Path,
    window: int | None,
    elo_k: float | None,
    elo_d: float | None,
    k_schedule: str | None,
    beta: float | None,
    tau_dynamics: float | None,
    schedule: str | None,
    cohort_size: int | None,
    min_games: int | None,
    horizon: int | None,
    bins: int | None,
    ndcg_discount: str | None,
    delimiter: str | None,
    workers: int | None,
    snapshot: bool,
) -> None:
    """Replay matches chronologically and score every prediction."""
    from ffa_ratings.replay.batch import run_systems, summarize
    from ffa_ratings.replay.cohorts import (
        CohortKind,
        CohortSpec,
        binned_ranks,
        cohort_best,
        cohort_frequent,
    )
    from ffa_ratings.replay.output import (
        write_bin_table,
        write_cohort_curves,
        write_series,
        write_store_snapshot,
    )

    if (input_path is None) == (synth_path is None):
        raise click.UsageError("Give exactly one of --input or --synth")

    # --min-games and --horizon apply to whichever cohort --setup selects
    cohort_prefix = "frequent" if setup == "frequent" else "best"
    settings = _with_overrides(
        ctx.obj["settings"],
        {
            "elo": {"k": elo_k, "d": elo_d, "k_schedule": k_schedule},
            "trueskill": {"beta": beta, "tau": tau_dynamics, "schedule": schedule},
            "replay": {
                "seed": seed,
                "window": window,
                "workers": workers,
                "ndcg_discount": ndcg_discount,
            },
            "cohort": {
                "cohort_size": cohort_size,
                f"{cohort_prefix}_min_games": min_games,
                f"{cohort_prefix}_horizon": horizon,
                "bins": bins,
            },
            "ingest": {"delimiter": delimiter},
        },
    )
    names = list(SYSTEM_NAMES) if system == "all" else [system]
    delim = settings.ingest.delimiter

    try:
        matches = _load_matches(settings, input_path, synth_path, seed)
        results = run_systems(
            matches,
            names,
            settings,
            keep_outcomes=setup == "binned",
            keep_histories=setup in ("best", "frequent"),
        )
    except RatingsError as e:
        _fail(str(e))

    # Every analysis is computed before anything is written
    writes: list[tuple[Path, Callable[[Path], Path]]] = []
    for name, result in results.items():
        writes.append(
            (
                out_dir / f"{name}_series.csv",
                partial(
                    write_series,
                    result.series,
                    window=settings.replay.window,
                    delimiter=delim,
                ),
            )
        )
        if setup in ("best", "frequent"):
            spec = CohortSpec.from_config(setup, settings.cohort, settings.replay.seed)
            if spec.kind is CohortKind.BEST:
                curves = cohort_best(
                    result.store,
                    result.histories,
                    result.series,
                    spec,
                    higher_is_better=result.higher_is_better,
                )
            else:
                curves = cohort_frequent(result.histories, result.series, spec)
            if curves.undersized:
                console.print(
                    f"[yellow]{name}: only {len(curves.members)} players qualify for the "
                    f"{setup} cohort (requested {spec.cohort_size})[/yellow]"
                )
            writes.append(
                (
                    out_dir / f"{name}_{setup}_cohort.csv",
                    partial(write_cohort_curves, curves.frame, delimiter=delim),
                )
            )
        elif setup == "binned":
            table = binned_ranks(
                result.outcomes,
                settings.cohort.bins,
                weighting=NdcgWeighting.named(settings.replay.ndcg_discount),
                hit_threshold=settings.replay.hit_threshold,
            )
            if table.matches_used == 0:
                console.print(
                    f"[yellow]{name}: no match has at least {settings.cohort.bins} players; "
                    "bin table is empty[/yellow]"
                )
            elif table.matches_skipped:
                console.print(
                    f"[yellow]{name}: {table.matches_skipped} matches with fewer than "
                    f"{settings.cohort.bins} players left out of the bin table[/yellow]"
                )
            writes.append(
                (
                    out_dir / f"{name}_bins.csv",
                    partial(write_bin_table, table.frame, delimiter=delim),
                )
            )
        if snapshot:
            writes.append(
                (
                    out_dir / f"{name}_ratings.csv",
                    partial(write_store_snapshot, result.store, delimiter=delim),
                )
            )

    try:
        _write_outputs(writes, out_dir)
    except OSError as e:
        _fail(f"cannot write outputs to {out_dir}: {e}")

    console.print(_summary_table(summarize(results), len(matches)))
    console.print(f"Wrote {len(writes)} file(s) to {out_dir}")


@main.command()
@click.argument("input_path", type=click.Path(dir_okay=False, path_type=Path))
@click.option("--delimiter", default=None, help="Field delimiter")
@click.option("--seed", type=int, default=None, help="Seed for tie repair")
@click.pass_context
def validate(
    ctx: click.Context, input_path: Path, delimiter: str | None, seed: int | None
) -> None:
    """Run ingest only and report what was skipped or repaired."""
    from ffa_ratings.ingest.match_log import read_match_log

    settings = _with_overrides(
        ctx.obj["settings"], {"ingest": {"delimiter": delimiter}, "replay": {"seed": seed}}
    )
    try:
        _, report = read_match_log(
            input_path, delimiter=settings.ingest.delimiter, seed=settings.replay.seed
        )
    except RatingsError as e:
        _fail(str(e))

    table = Table(title=str(input_path))
    table.add_column("Counter")
    table.add_column("Value", justify="right")
    for key, value in report.as_dict().items():
        style = "yellow" if value and key not in ("rows_read", "n_matches", "n_players") else ""
        table.add_row(key, f"[{style}]{value:,}[/{style}]" if style else f"{value:,}")
    console.print(table)


@main.command()
@click.option(
    "--config-file",
    "synth_path",
    type=click.Path(exists=True, dir_okay=False, path_type=Path),
    default=None,
    help="TOML file with a [synth] table (default: [synth] of the main config)",
)
@click.option(
    "--out",
    "out_path",
    type=click.Path(dir_okay=False, path_type=Path),
    required=True,
    help="Match log to write",
)
@click.option(
    "--latent",
    "latent_path",
    type=click.Path(dir_okay=False, path_type=Path),
    default=None,
    help="Latent-skill sidecar (default: <out stem>_latent.csv)",
)
@click.option("--players", type=int, default=None)
@click.option("--matches", type=int, default=None)
@click.option("--per-match", type=int, default=None)
@click.option("--noise", type=float, default=None, help="Performance noise deviation")
@click.option("--new-player-rate", type=float, default=None)
@click.option("--seed", type=int, default=None)
@click.option("--delimiter", default=None)
@click.pass_context
def synth(
    ctx: click.Context,
    synth_path: Path | None,
    out_path: Path,
    latent_path: Path | None,
    players: int | None,
    matches: int | None,
    per_match: int | None,
    noise: float | None,
    new_player_rate: float | None,
    seed: int | None,
    delimiter: str | None,
) -> None:
    """Write a synthetic match log and its latent-skill sidecar."""
    from ffa_ratings.ingest.match_log import write_latent_skills, write_match_log
    from ffa_ratings.ingest.synthetic import generate_synthetic

    settings: Settings = ctx.obj["settings"]
    base = load_synth_config(synth_path) if synth_path else settings.synth
    overrides = {
        "n_players": players,
        "n_matches": matches,
        "players_per_match": per_match,
        "performance_noise_sd": noise,
        "new_player_rate": new_player_rate,
        "seed": seed,
    }
    try:
        cfg = SynthConfig.model_validate(
            {**base.model_dump(), **{k: v for k, v in overrides.items() if v is not None}}
        )
    except ValidationError as e:
        raise click.BadParameter(str(e)) from e
    delim = delimiter or settings.ingest.delimiter
    latent_path = latent_path or out_path.with_name(f"{out_path.stem}_latent.csv")

    try:
        generated = generate_synthetic(cfg)
        write_match_log(generated.matches, out_path, delimiter=delim)
        write_latent_skills(generated.latent, latent_path, delimiter=delim)
    except RatingsError as e:
        _fail(str(e))
    except OSError as e:
        _fail(f"cannot write {out_path}: {e}")

    console.print(
        f"Wrote {len(generated.matches):,} matches to {out_path} "
        f"and {len(generated.latent):,} latent skills to {latent_path}"
    )
