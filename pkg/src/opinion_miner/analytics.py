"""Involver statistics, topic-by-year heatmap classing, and monthly
sentiment series. Pure aggregation, no RNG anywhere.

Ranking ties always break by handle ascending after count descending, and
every ranked list is a strict prefix of the full sorted list, so top-k
output is checkable against a brute-force sort.
"""

from __future__ import annotations

from collections import Counter, defaultdict
from dataclasses import dataclass
from datetime import datetime
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import InputError
from .ingest import TweetRecord

__all__ = [
    "InvolverEntry",
    "InvolverReport",
    "active_users",
    "mentioned_accounts",
    "hashtag_stats",
    "HeatmapGrid",
    "topic_year_heatmap",
    "SentimentSeries",
    "sentiment_series",
    "yearly_volume",
    "involvers_to_csv",
    "overall_involvers_to_csv",
    "volumes_to_csv",
    "DROP_THRESHOLD",
]

# A month whose positive ratio falls under this is annotated as a drop event.
DROP_THRESHOLD = 0.4


@dataclass(frozen=True)
class InvolverEntry:
    handle: str
    count: int
    share: float


@dataclass
class InvolverReport:
    kind: str
    per_year: dict[int, list[InvolverEntry]]
    overall: list[tuple[str, float]]


def _ranked_top(counts: Counter, total: int, k: int) -> list[InvolverEntry]:
    ordered = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))
    return [InvolverEntry(handle=h, count=c, share=c / total) for h, c in ordered[:k]]


def _involver_report(
    kind: str,
    yearly: dict[int, Counter],
    k: int,
    overall_mode: str,
) -> InvolverReport:
    if overall_mode not in ("summed-shares", "global-share"):
        raise InputError(f"unknown overall mode {overall_mode!r}")
    per_year: dict[int, list[InvolverEntry]] = {}
    for year in sorted(yearly):
        counts = yearly[year]
        total = sum(counts.values())
        if total == 0:
            per_year[year] = []
            continue
        per_year[year] = _ranked_top(counts, total, k)
    top_handles = {e.handle for entries in per_year.values() for e in entries}
    overall: list[tuple[str, float]] = []
    if overall_mode == "summed-shares":
        for handle in top_handles:
            share_sum = 0.0
            for year, counts in yearly.items():
                total = sum(counts.values())
                if total and handle in counts:
                    share_sum += counts[handle] / total
            overall.append((handle, share_sum))
    else:
        grand_total = sum(sum(c.values()) for c in yearly.values())
        for handle in top_handles:
            count = sum(c.get(handle, 0) for c in yearly.values())
            overall.append((handle, count / grand_total if grand_total else 0.0))
    overall.sort(key=lambda hs: (-hs[1], hs[0]))
    return InvolverReport(kind=kind, per_year=per_year, overall=overall)


def active_users(
    records: Sequence[TweetRecord], k: int = 10, overall_mode: str = "summed-shares"
) -> InvolverReport:
    """Top-k posting users per year; share = user's tweets / tweets that year."""
    yearly: dict[int, Counter] = defaultdict(Counter)
    for rec in records:
        yearly[rec.created_at.year][rec.user] += 1
    return _involver_report("active_user", dict(yearly), k, overall_mode)


def mentioned_accounts(
    records: Sequence[TweetRecord], k: int = 10, overall_mode: str = "summed-shares"
) -> InvolverReport:
    """Top-k mentioned handles per year, counting occurrences; share is
    against all mention occurrences that year."""
    yearly: dict[int, Counter] = defaultdict(Counter)
    for rec in records:
        for handle in rec.mentions:
            yearly[rec.created_at.year][handle] += 1
    return _involver_report("mentioned_account", dict(yearly), k, overall_mode)


def hashtag_stats(
    records: Sequence[TweetRecord], k: int = 10, overall_mode: str = "summed-shares"
) -> InvolverReport:
    """As mentioned_accounts over hashtags, counting case-insensitively and
    displaying each tag's most frequent original casing."""
    yearly_folded: dict[int, Counter] = defaultdict(Counter)
    casings: dict[str, Counter] = defaultdict(Counter)
    for rec in records:
        for tag in rec.hashtags:
            folded = tag.casefold()
            yearly_folded[rec.created_at.year][folded] += 1
            casings[folded][tag] += 1
    display = {
        folded: min(forms.items(), key=lambda fc: (-fc[1], fc[0]))[0]
        for folded, forms in casings.items()
    }
    yearly = {
        year: Counter({display[f]: c for f, c in counts.items()})
        for year, counts in yearly_folded.items()
    }
    return _involver_report("hashtag", yearly, k, overall_mode)


@dataclass
class HeatmapGrid:
    topics: list[int]
    years: list[int]
    counts: np.ndarray   # (K, Y) ints
    classes: np.ndarray  # (K, Y) ints in [0, n_classes)
    n_classes: int

    def to_csv(self) -> str:
        lines = ["topic,year,count,class"]
        for ti, topic in enumerate(self.topics):
            for yi, year in enumerate(self.years):
                lines.append(f"{topic},{year},{self.counts[ti, yi]},{self.classes[ti, yi]}")
        return "\n".join(lines) + "\n"

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_csv(), encoding="utf-8")


def topic_year_heatmap(
    assignments: Sequence[tuple[int, datetime]],
    n_topics: int,
    n_classes: int = 5,
) -> HeatmapGrid:
    """Counts of documents per (topic, year), classed by empirical quantiles.

    Class boundaries sit at the j/n_classes quantiles (linear interpolation)
    of all K*Y cell counts; a cell's class is the number of boundaries at or
    below its count, so equal counts always land in the same class.
    """
    if n_classes < 1:
        raise InputError(f"n_classes must be >= 1, got {n_classes}")
    for topic, _ in assignments:
        if not 0 <= topic < n_topics:
            raise InputError(f"topic {topic} out of range [0, {n_topics})")
    topics = list(range(n_topics))
    if not assignments:
        return HeatmapGrid(
            topics=topics,
            years=[],
            counts=np.zeros((n_topics, 0), dtype=np.int64),
            classes=np.zeros((n_topics, 0), dtype=np.int64),
            n_classes=n_classes,
        )
    years_seen = [ts.year for _, ts in assignments]
    years = list(range(min(years_seen), max(years_seen) + 1))
    year_index = {y: i for i, y in enumerate(years)}
    counts = np.zeros((n_topics, len(years)), dtype=np.int64)
    for topic, ts in assignments:
        counts[topic, year_index[ts.year]] += 1
    boundaries = np.quantile(
        counts.ravel(), [j / n_classes for j in range(1, n_classes)]
    )
    classes = (counts[:, :, None] >= boundaries[None, None, :]).sum(axis=2)
    return HeatmapGrid(
        topics=topics, years=years, counts=counts,
        classes=classes.astype(np.int64), n_classes=n_classes,
    )


@dataclass
class SentimentSeries:
    months: list[tuple[int, int]]
    positive: list[int]
    negative: list[int]
    ratio: list[float | None]
    drops: list[tuple[int, int]]

    def to_csv(self) -> str:
        lines = ["year,month,positive,negative,ratio"]
        for (y, m), pos, neg, r in zip(self.months, self.positive, self.negative, self.ratio):
            ratio_txt = "" if r is None else repr(r)
            lines.append(f"{y},{m},{pos},{neg},{ratio_txt}")
        return "\n".join(lines) + "\n"

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_csv(), encoding="utf-8")


def _month_range(first: tuple[int, int], last: tuple[int, int]) -> list[tuple[int, int]]:
    months = []
    y, m = first
    while (y, m) <= last:
        months.append((y, m))
        y, m = (y + 1, 1) if m == 12 else (y, m + 1)
    return months


def sentiment_series(polarities: Sequence[tuple[int, datetime]]) -> SentimentSeries:
    """Monthly positive/negative counts over the full observed month range,
    empty months included with an absent ratio. Months whose ratio is below
    DROP_THRESHOLD are listed as drop events."""
    if not polarities:
        return SentimentSeries(months=[], positive=[], negative=[], ratio=[], drops=[])
    pos_counts: Counter = Counter()
    neg_counts: Counter = Counter()
    for polarity, ts in polarities:
        if polarity not in (0, 1):
            raise InputError(f"polarity must be 0 or 1, got {polarity}")
        key = (ts.year, ts.month)
        if polarity == 1:
            pos_counts[key] += 1
        else:
            neg_counts[key] += 1
    keys = set(pos_counts) | set(neg_counts)
    months = _month_range(min(keys), max(keys))
    positive = [pos_counts.get(m, 0) for m in months]
    negative = [neg_counts.get(m, 0) for m in months]
    ratio: list[float | None] = []
    drops: list[tuple[int, int]] = []
    for m, p, n in zip(months, positive, negative):
        if p + n == 0:
            ratio.append(None)
        else:
            r = p / (p + n)
            ratio.append(r)
            if r < DROP_THRESHOLD:
                drops.append(m)
    return SentimentSeries(months=months, positive=positive, negative=negative,
                           ratio=ratio, drops=drops)


def yearly_volume(records: Sequence[TweetRecord]) -> list[tuple[int, int]]:
    """Tweets per calendar year, zero-filled across the observed range."""
    if not records:
        return []
    counts: Counter = Counter(rec.created_at.year for rec in records)
    years = range(min(counts), max(counts) + 1)
    return [(y, counts.get(y, 0)) for y in years]


def involvers_to_csv(reports: Iterable[InvolverReport]) -> str:
    lines = ["kind,year,rank,handle,count,share"]
    for report in reports:
        for year in sorted(report.per_year):
            for rank, entry in enumerate(report.per_year[year], start=1):
                lines.append(
                    f"{report.kind},{year},{rank},{entry.handle},{entry.count},{entry.share!r}"
                )
    return "\n".join(lines) + "\n"


def overall_involvers_to_csv(reports: Iterable[InvolverReport]) -> str:
    lines = ["kind,rank,handle,summed_share"]
    for report in reports:
        for rank, (handle, share) in enumerate(report.overall, start=1):
            lines.append(f"{report.kind},{rank},{handle},{share!r}")
    return "\n".join(lines) + "\n"


def volumes_to_csv(volumes: Sequence[tuple[int, int]]) -> str:
    lines = ["year,count"]
    for year, count in volumes:
        lines.append(f"{year},{count}")
    return "\n".join(lines) + "\n"
