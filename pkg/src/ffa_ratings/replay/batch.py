"""Run several rating systems over the same match stream in parallel."""

from __future__ import annotations

import time
from collections.abc import Sequence
from concurrent.futures import (
    Executor,
    ProcessPoolExecutor,
    ThreadPoolExecutor,
    as_completed,
)

from ffa_ratings.config import Settings
from ffa_ratings.logging import get_logger
from ffa_ratings.metrics import NdcgWeighting
from ffa_ratings.models.match import MatchRecord
from ffa_ratings.ratings.base import SYSTEM_NAMES, build_system
from ffa_ratings.replay.engine import ReplayResult, replay

log = get_logger("replay")


def _run_one(
    name: str,
    matches: Sequence[MatchRecord],
    settings: Settings,
    keep_outcomes: bool,
    keep_histories: bool,
) -> ReplayResult:
    """Replay one system; module-level so process pools can pickle it."""
    system = build_system(name, settings)
    return replay(
        matches,
        system,
        settings.replay.seed,
        weighting=NdcgWeighting.named(settings.replay.ndcg_discount),
        hit_threshold=settings.replay.hit_threshold,
        keep_outcomes=keep_outcomes,
        keep_histories=keep_histories,
    )


def _executor(kind: str, workers: int) -> Executor:
    if kind == "process":
        return ProcessPoolExecutor(max_workers=workers)
    return ThreadPoolExecutor(max_workers=workers)


def run_systems(
    matches: Sequence[MatchRecord],
    names: Sequence[str],
    settings: Settings,
    *,
    workers: int | None = None,
    keep_outcomes: bool = False,
    keep_histories: bool = True,
) -> dict[str, ReplayResult]:
    """Replay every named system; results come back in ``names`` order.

    Each system has its own store, so the replays are independent. The
    first failure cancels the replays that have not started and is
    re-raised.
    """
    unknown = [n for n in names if n not in SYSTEM_NAMES]
    if unknown:
        raise KeyError(f"Unknown rating systems {unknown}. Known systems: {list(SYSTEM_NAMES)}")

    workers = workers or settings.replay.workers
    start = time.monotonic()
    log.info(
        "batch_start",
        systems=list(names),
        n_matches=len(matches),
        workers=workers,
        executor=settings.replay.executor,
    )

    results: dict[str, ReplayResult] = {}
    if workers <= 1 or len(names) <= 1:
        for name in names:
            results[name] = _run_one(name, matches, settings, keep_outcomes, keep_histories)
    else:
        with _executor(settings.replay.executor, min(workers, len(names))) as pool:
            futures = {
                pool.submit(
                    _run_one, name, matches, settings, keep_outcomes, keep_histories
                ): name
                for name in names
            }
            try:
                for future in as_completed(futures):
                    name = futures[future]
                    results[name] = future.result()
                    log.info("batch_system_done", system=name)
            except BaseException:
                for f in futures:
                    f.cancel()
                raise

    log.info("batch_complete", systems=list(names), elapsed=round(time.monotonic() - start, 3))
    return {name: results[name] for name in names}


def summarize(results: dict[str, ReplayResult]) -> dict[str, dict[str, float]]:
    """Per-system mean of each metric over all replayed matches."""
    return {name: result.series.means() for name, result in results.items()}

