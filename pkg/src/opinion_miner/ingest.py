"""Corpus parsing and the two-stage keyword/locality filter.

Records travel as one JSON object per line with required string fields
id, created_at (ISO-8601), user, text. Mentions and hashtags are always
recomputed from the text at parse time, which keeps them consistent with
the entity-extraction rules no matter what the file claims.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from datetime import datetime, timezone
from decimal import ROUND_HALF_UP, Decimal
from pathlib import Path
from typing import Iterable, Sequence

from .errors import CorpusParseError, InputError
from .textproc import extract_entities, split_words

__all__ = [
    "TweetRecord",
    "ParseResult",
    "parse_corpus",
    "load_corpus",
    "record_to_json",
    "save_corpus",
    "read_term_list",
    "keyword_filter",
    "locality_filter",
    "include_pass",
    "exclude_pass",
    "FilterReport",
    "filter_summary",
    "summarize_stages",
]


@dataclass(frozen=True)
class TweetRecord:
    id: str
    created_at: datetime
    user: str
    text: str
    mentions: tuple[str, ...]
    hashtags: tuple[str, ...]


def parse_timestamp(value: str) -> datetime:
    """ISO-8601 to an aware UTC datetime, truncated to whole seconds.

    Accepts 'Z', explicit offsets, and naive stamps (taken as UTC).
    """
    text = value.strip()
    if text.endswith(("Z", "z")):
        text = text[:-1] + "+00:00"
    dt = datetime.fromisoformat(text)
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    return dt.astimezone(timezone.utc).replace(microsecond=0)


def _record_from_obj(obj: dict) -> TweetRecord:
    for key in ("id", "created_at", "user", "text"):
        if key not in obj:
            raise ValueError(f"missing field {key!r}")
        if not isinstance(obj[key], str):
            raise ValueError(f"field {key!r} must be a string")
    mentions, hashtags = extract_entities(obj["text"])
    return TweetRecord(
        id=obj["id"],
        created_at=parse_timestamp(obj["created_at"]),
        user=obj["user"],
        text=obj["text"],
        mentions=tuple(mentions),
        hashtags=tuple(hashtags),
    )


@dataclass
class ParseResult:
    records: list[TweetRecord]
    skipped: list[tuple[int, str]] = field(default_factory=list)


def parse_corpus(lines: Iterable[str], strict: bool = False) -> ParseResult:
    """Parse line-delimited records.

    Malformed lines are skipped and counted by default; strict=True aborts
    at the first bad line. Duplicate ids are malformed (the id uniqueness
    invariant), reported against the later line.
    """
    records: list[TweetRecord] = []
    skipped: list[tuple[int, str]] = []
    seen_ids: set[str] = set()
    for line_no, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
            if not isinstance(obj, dict):
                raise ValueError("line is not an object")
            rec = _record_from_obj(obj)
            if rec.id in seen_ids:
                raise ValueError(f"duplicate id {rec.id!r}")
        except (ValueError, KeyError) as exc:
            if strict:
                raise CorpusParseError(line_no, str(exc)) from exc
            skipped.append((line_no, str(exc)))
            continue
        seen_ids.add(rec.id)
        records.append(rec)
    return ParseResult(records=records, skipped=skipped)


def load_corpus(path: str | Path, strict: bool = False) -> ParseResult:
    path = Path(path)
    if not path.exists():
        raise InputError(f"corpus file not found: {path}")
    with path.open(encoding="utf-8") as fh:
        return parse_corpus(fh, strict=strict)


def record_to_json(rec: TweetRecord) -> str:
    obj = {
        "id": rec.id,
        "created_at": rec.created_at.strftime("%Y-%m-%dT%H:%M:%SZ"),
        "user": rec.user,
        "text": rec.text,
    }
    return json.dumps(obj, ensure_ascii=True, separators=(",", ":"))


def save_corpus(records: Iterable[TweetRecord], path: str | Path) -> None:
    with Path(path).open("w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(record_to_json(rec))
            fh.write("\n")


def read_term_list(path: str | Path) -> list[str]:
    """One term or phrase per line; blank lines and '#' comments ignored."""
    path = Path(path)
    if not path.exists():
        raise InputError(f"term list not found: {path}")
    terms = []
    for line in path.read_text(encoding="utf-8").splitlines():
        term = line.strip()
        if term and not term.startswith("#"):
            terms.append(term)
    return terms


def keyword_filter(records: Sequence[TweetRecord], keywords: Sequence[str]) -> list[TweetRecord]:
    """Keep records whose case-folded text contains any keyword phrase."""
    if not keywords:
        raise ValueError("keywords must be nonempty")
    folded = [kw.casefold() for kw in keywords]
    return [r for r in records if any(kw in r.text.casefold() for kw in folded)]


def _contains_term(tokens: list[str], term_tokens: tuple[str, ...]) -> bool:
    n = len(term_tokens)
    if n == 0:
        return False
    if n == 1:
        return term_tokens[0] in tokens
    for i in range(len(tokens) - n + 1):
        if tuple(tokens[i : i + n]) == term_tokens:
            return True
    return False


def _term_match(text: str, terms: Sequence[tuple[str, ...]]) -> bool:
    # Whole-token matching so "NYC" does not fire on "NYCC"; digits are kept
    # so a term like "I495" stays matchable.
    tokens = split_words(text)
    return any(_contains_term(tokens, t) for t in terms)


def _prep_terms(terms: Sequence[str]) -> list[tuple[str, ...]]:
    return [tuple(split_words(t)) for t in terms]


def include_pass(records: Sequence[TweetRecord], include_terms: Sequence[str]) -> list[TweetRecord]:
    """Keep records containing at least one include term as whole tokens."""
    prepped = _prep_terms(include_terms)
    return [r for r in records if _term_match(r.text, prepped)]


def exclude_pass(
    records: Sequence[TweetRecord],
    include_terms: Sequence[str],
    exclude_terms: Sequence[str],
) -> list[TweetRecord]:
    """Drop records that mention an exclude term and no include term."""
    inc = _prep_terms(include_terms)
    exc = _prep_terms(exclude_terms)
    kept = []
    for r in records:
        tokens = split_words(r.text)
        if any(_contains_term(tokens, t) for t in exc) and not any(
            _contains_term(tokens, t) for t in inc
        ):
            continue
        kept.append(r)
    return kept


def locality_filter(
    records: Sequence[TweetRecord],
    include_terms: Sequence[str],
    exclude_terms: Sequence[str] = (),
) -> list[TweetRecord]:
    """Two-stage locality filter: include pass, then exclude pass.

    An empty include list disables the include stage (the exclude pass then
    runs against the raw set).
    """
    staged = include_pass(records, include_terms) if include_terms else list(records)
    if exclude_terms:
        staged = exclude_pass(staged, include_terms, exclude_terms)
    return staged


def round_ratio(count: int, total: int) -> float:
    """count/total rounded half-up to 4 decimal places."""
    q = (Decimal(count) / Decimal(total)).quantize(Decimal("0.0001"), rounding=ROUND_HALF_UP)
    return float(q)


def format_ratio_pct(ratio: float) -> str:
    """A 4-dp ratio as a 2-dp percent string, e.g. 0.2113 -> '21.13%'."""
    pct = (Decimal(str(ratio)) * 100).quantize(Decimal("0.01"), rounding=ROUND_HALF_UP)
    return f"{pct}%"


@dataclass(frozen=True)
class FilterStage:
    name: str
    tweets: int
    tweet_ratio: float
    users: int
    user_ratio: float

    @property
    def tweet_pct(self) -> str:
        return format_ratio_pct(self.tweet_ratio)

    @property
    def user_pct(self) -> str:
        return format_ratio_pct(self.user_ratio)


@dataclass
class FilterReport:
    stages: list[FilterStage]
    malformed_lines: int = 0

    def to_csv(self) -> str:
        lines = ["stage,tweets,tweet_pct,users,user_pct"]
        for s in self.stages:
            lines.append(f"{s.name},{s.tweets},{s.tweet_pct},{s.users},{s.user_pct}")
        return "\n".join(lines) + "\n"

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_csv(), encoding="utf-8")


def summarize_stages(
    stages: Sequence[tuple[str, Sequence[TweetRecord]]],
    malformed_lines: int = 0,
) -> FilterReport:
    """FilterReport over named corpus stages; ratios are against the first."""
    if not stages:
        raise InputError("no stages to summarize")
    raw_records = stages[0][1]
    if not raw_records:
        raise InputError("raw corpus is empty; filter ratios are undefined")
    raw_tweets = len(raw_records)
    raw_users = len({r.user for r in raw_records})
    rows = []
    for name, records in stages:
        users = len({r.user for r in records})
        rows.append(
            FilterStage(
                name=name,
                tweets=len(records),
                tweet_ratio=round_ratio(len(records), raw_tweets),
                users=users,
                user_ratio=round_ratio(users, raw_users),
            )
        )
    return FilterReport(stages=rows, malformed_lines=malformed_lines)


def filter_summary(
    raw: Sequence[TweetRecord],
    after_keyword: Sequence[TweetRecord],
    after_locality: Sequence[TweetRecord],
    malformed_lines: int = 0,
) -> FilterReport:
    """The standard three-stage report: raw, keyword search, locality filter."""
    return summarize_stages(
        [("raw", raw), ("keyword", after_keyword), ("locality", after_locality)],
        malformed_lines=malformed_lines,
    )
