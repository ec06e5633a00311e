from __future__ import annotations

import asyncio
import logging
from collections.abc import Sequence

from pydantic import BaseModel, ConfigDict

from app.pipeline.campaign import CampaignConfig, CampaignReport
from app.pipeline.reproduce import reproduce_paper

logger = logging.getLogger("casimir-twin.batch")


class CoverageRow(BaseModel):
    """Fraction of seeds whose |pull vs truth| stayed below one."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    key: str
    seeds: int
    within_one_sigma: float


class CoverageBatch:
    """Many independent campaigns, one per seed, run in worker threads."""

    def __init__(
        self,
        seeds: Sequence[int],
        *,
        config: CampaignConfig | None = None,
        max_concurrency: int = 4,
    ) -> None:
        self._stop_event = asyncio.Event()
        self._seeds = [int(seed) for seed in seeds]
        self._config = config or CampaignConfig()
        self._max_concurrency = max(1, max_concurrency)
        self._semaphore = asyncio.Semaphore(self._max_concurrency)

    async def run(self) -> list[CampaignReport]:
        logger.info(
            "Coverage batch starting | seeds=%s max_concurrency=%s",
            len(self._seeds),
            self._max_concurrency,
        )
        results = await asyncio.gather(
            *[self._reproduce(seed) for seed in self._seeds],
            return_exceptions=True,
        )
        reports: list[CampaignReport] = []
        for seed, result in zip(self._seeds, results):
            if isinstance(result, BaseException):
                logger.error(
                    "Campaign crashed | seed=%s error=%s",
                    seed,
                    result,
                    exc_info=(type(result), result, result.__traceback__),
                )
                continue
            if result is not None:
                reports.append(result)
        reports.sort(key=lambda report: report.seed)
        logger.info("Coverage batch finished | completed=%s", len(reports))
        return reports

    async def stop(self) -> None:
        self._stop_event.set()

    async def _reproduce(self, seed: int) -> CampaignReport | None:
        async with self._semaphore:
            if self._stop_event.is_set():
                logger.warning("Coverage batch stopped, seed skipped | seed=%s", seed)
                return None
            return await asyncio.to_thread(reproduce_paper, seed, self._config)


def run_coverage(
    seeds: Sequence[int],
    config: CampaignConfig | None = None,
    *,
    max_concurrency: int = 4,
) -> list[CampaignReport]:
    return asyncio.run(
        CoverageBatch(seeds, config=config, max_concurrency=max_concurrency).run()
    )


def coverage_summary(reports: Sequence[CampaignReport]) -> tuple[CoverageRow, ...]:
    counts: dict[str, list[int]] = {}
    for report in reports:
        for row in report.comparisons:
            if row.pull_vs_truth is None:
                continue
            hits = counts.setdefault(row.key, [0, 0])
            hits[0] += abs(row.pull_vs_truth) < 1.0
            hits[1] += 1
    return tuple(
        CoverageRow(key=key, seeds=total, within_one_sigma=inside / total)
        for key, (inside, total) in counts.items()
    )
