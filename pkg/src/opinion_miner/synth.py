"""Seeded synthetic-data generators used as ground-truth oracles.

Three generators: an LDA corpus with anchor-word topics (so recovery is
checkable by top-word overlap), a separable sentiment corpus with optional
label noise, and a tweet stream with planted keyword/locality/entity
structure for end-to-end filter tests. All are pure functions of their
spec and seed. Word pools are built disjoint from the planted keyword and
locality phrases, so filter ground truth is exact by construction.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from datetime import datetime, timedelta, timezone
from typing import Sequence

import numpy as np

from .errors import InputError
from .ingest import TweetRecord
from .lstm import LabeledExample
from .seeding import make_rng
from .textproc import Document, Vocabulary, build_vocabulary, extract_entities, tokenize

__all__ = [
    "SynthLdaSpec",
    "SynthLdaCorpus",
    "generate_lda_corpus",
    "SynthSentimentCorpus",
    "generate_sentiment_corpus",
    "StreamSpec",
    "PlantedTweet",
    "StreamSample",
    "generate_tweet_stream",
    "align_topics",
    "recovery_score",
]


@dataclass(frozen=True)
class SynthLdaSpec:
    n_topics: int = 3
    vocab_size: int = 30
    n_docs: int = 500
    doc_len: int = 50
    doc_topic_alpha: float = 0.2
    anchors_per_topic: int = 10
    anchor_mass: float = 0.08
    seed: int = 0


@dataclass
class SynthLdaCorpus:
    docs: list[Document]
    phi: np.ndarray           # (K, V) true topic-word distributions
    theta: np.ndarray         # (D, K) true doc-topic distributions
    anchor_ids: list[list[int]]
    spec: SynthLdaSpec


def _anchored_phi(spec: SynthLdaSpec) -> tuple[np.ndarray, list[list[int]]]:
    k, v, a = spec.n_topics, spec.vocab_size, spec.anchors_per_topic
    anchor_ids = [list(range(t * a, (t + 1) * a)) for t in range(k)]
    anchor_total = spec.anchor_mass * a
    remainder = 1.0 - anchor_total
    phi = np.zeros((k, v))
    for t in range(k):
        others = v - a
        if others == 0:
            if abs(remainder) > 1e-12:
                raise InputError("anchor mass must sum to 1 when anchors cover the vocabulary")
            phi[t, anchor_ids[t]] = spec.anchor_mass
            continue
        phi[t, :] = remainder / others
        phi[t, anchor_ids[t]] = spec.anchor_mass
    return phi, anchor_ids


def generate_lda_corpus(spec: SynthLdaSpec = SynthLdaSpec()) -> SynthLdaCorpus:
    """Standard LDA generative process over anchor-structured topics."""
    if spec.n_topics < 1 or spec.n_docs < 1 or spec.doc_len < 1:
        raise InputError("n_topics, n_docs, and doc_len must all be >= 1")
    if spec.n_topics * spec.anchors_per_topic > spec.vocab_size:
        raise InputError(
            f"{spec.n_topics} topics x {spec.anchors_per_topic} anchors "
            f"exceed vocab_size {spec.vocab_size}"
        )
    if not 0 < spec.anchor_mass * spec.anchors_per_topic <= 1:
        raise InputError("per-topic anchor mass must land in (0, 1]")
    if spec.doc_topic_alpha <= 0:
        raise InputError("doc_topic_alpha must be positive")
    phi, anchor_ids = _anchored_phi(spec)
    rng = make_rng(spec.seed)
    theta = rng.dirichlet([spec.doc_topic_alpha] * spec.n_topics, size=spec.n_docs)
    cum_phi = np.cumsum(phi, axis=1)
    cum_theta = np.cumsum(theta, axis=1)
    base = datetime(2017, 1, 1, tzinfo=timezone.utc)
    docs = []
    for d in range(spec.n_docs):
        z = np.searchsorted(cum_theta[d], rng.random(spec.doc_len), side="right")
        z = np.minimum(z, spec.n_topics - 1)
        words = np.empty(spec.doc_len, dtype=np.int64)
        u = rng.random(spec.doc_len)
        for pos in range(spec.doc_len):
            w = np.searchsorted(cum_phi[z[pos]], u[pos], side="right")
            words[pos] = min(w, spec.vocab_size - 1)
        docs.append(
            Document(
                tokens=tuple(int(w) for w in words),
                source_id=f"synth-{d:05d}",
                timestamp=base + timedelta(hours=d),
            )
        )
    return SynthLdaCorpus(docs=docs, phi=phi, theta=theta, anchor_ids=anchor_ids, spec=spec)


POSITIVE_WORDS = (
    "good", "great", "love", "benefit", "support", "win",
    "happy", "improve", "clean", "fast",
)
NEGATIVE_WORDS = (
    "bad", "terrible", "hate", "cost", "oppose", "lose",
    "angry", "worsen", "dirty", "slow",
)
NEUTRAL_WORDS = (
    "city", "plan", "street", "toll", "traffic", "subway",
    "zone", "bridge", "car", "transit", "fee", "driver",
)


@dataclass
class SynthSentimentCorpus:
    examples: list[LabeledExample]
    vocab: Vocabulary
    texts: list[list[str]]
    true_labels: list[int]
    flipped: list[int]


def generate_sentiment_corpus(
    n: int,
    pos_words: Sequence[str] = POSITIVE_WORDS,
    neg_words: Sequence[str] = NEGATIVE_WORDS,
    neutral_words: Sequence[str] = NEUTRAL_WORDS,
    noise_rate: float = 0.0,
    seed: int = 0,
    min_len: int = 3,
    max_len: int = 10,
    class_word_rate: int | float = 0.5,
) -> SynthSentimentCorpus:
    """Class-balanced word-presence sentiment task.

    Every example opens with a word from its true class, so noise 0 is
    linearly separable; noise_rate flips that fraction of labels (words
    untouched), putting the Bayes accuracy at 1 - noise_rate.
    """
    if n < 2:
        raise InputError("need at least 2 examples")
    if not 0 <= noise_rate < 0.5:
        raise InputError(f"noise_rate must be in [0, 0.5), got {noise_rate}")
    if set(pos_words) & set(neg_words):
        raise InputError("positive and negative word pools overlap")
    rng = make_rng(seed)
    labels = np.array([1] * (n - n // 2) + [0] * (n // 2), dtype=np.int64)
    labels = labels[rng.permutation(n)]
    pools = {1: list(pos_words), 0: list(neg_words)}
    neutral = list(neutral_words)
    texts: list[list[str]] = []
    for label in labels:
        pool = pools[int(label)]
        length = int(rng.integers(min_len, max_len + 1))
        words = [pool[int(rng.integers(0, len(pool)))]]
        for _ in range(length - 1):
            if rng.random() < class_word_rate:
                words.append(pool[int(rng.integers(0, len(pool)))])
            else:
                words.append(neutral[int(rng.integers(0, len(neutral)))])
        texts.append(words)
    true_labels = [int(x) for x in labels]
    observed = list(true_labels)
    n_flip = round(noise_rate * n)
    flipped = sorted(int(i) for i in rng.choice(n, size=n_flip, replace=False)) if n_flip else []
    for i in flipped:
        observed[i] = 1 - observed[i]
    vocab = build_vocabulary(texts, min_df=1)
    examples = [
        LabeledExample(tokens=tuple(vocab.encode(t)), label=lab)
        for t, lab in zip(texts, observed)
    ]
    return SynthSentimentCorpus(
        examples=examples, vocab=vocab, texts=texts,
        true_labels=true_labels, flipped=flipped,
    )


# Stream word pools, deliberately disjoint from the planted keyword and
# locality phrases below so filter ground truth is exact.
STREAM_TOPIC_POOLS = (
    ("subway", "transit", "bus", "rider", "signal", "delay"),
    ("toll", "driver", "bridge", "tunnel", "commute", "parking"),
    ("council", "mayor", "vote", "budget", "bill", "hearing"),
)
STREAM_KEYWORDS = ("congestion pricing", "road charging")
STREAM_INCLUDE_TERMS = ("nyc", "manhattan", "brooklyn")
STREAM_EXCLUDE_TERMS = ("tfl", "london")
STREAM_HASHTAGS = ("FixTheSubway", "Gridlock", "TransitFunding")


@dataclass(frozen=True)
class StreamSpec:
    n_tweets: int = 300
    n_users: int = 40
    start: datetime = datetime(2017, 1, 1, tzinfo=timezone.utc)
    end: datetime = datetime(2020, 12, 31, tzinfo=timezone.utc)
    keyword_rate: float = 0.3
    include_rate: float = 0.6
    exclude_rate: float = 0.2
    mention_rate: float = 0.5
    hashtag_rate: float = 0.4
    positive_rate: float = 0.6
    n_topics: int = 3
    seed: int = 0


@dataclass(frozen=True)
class PlantedTweet:
    id: str
    has_keyword: bool
    has_include: bool
    has_exclude: bool
    topic: int
    sentiment: int


@dataclass
class StreamSample:
    records: list[TweetRecord]
    truth: list[PlantedTweet]
    spec: StreamSpec


def generate_tweet_stream(spec: StreamSpec = StreamSpec()) -> StreamSample:
    """Tweet records with planted keyword phrases, locality terms, entities,
    topical vocabulary, and sentiment words. Records come out sorted by
    timestamp with ids assigned after the sort."""
    if spec.n_users < 0 or spec.n_tweets < 0:
        raise InputError("n_tweets and n_users must be >= 0")
    if spec.end <= spec.start:
        raise InputError("end must be after start")
    if spec.n_users == 0 or spec.n_tweets == 0:
        return StreamSample(records=[], truth=[], spec=spec)
    if spec.n_topics > len(STREAM_TOPIC_POOLS):
        raise InputError(f"at most {len(STREAM_TOPIC_POOLS)} stream topics supported")
    rng = make_rng(spec.seed)
    span = int((spec.end - spec.start).total_seconds())
    drafts = []
    for _ in range(spec.n_tweets):
        user_no = int(rng.integers(0, spec.n_users))
        ts = spec.start + timedelta(seconds=int(rng.integers(0, span)))
        has_keyword = rng.random() < spec.keyword_rate
        has_include = rng.random() < spec.include_rate
        has_exclude = rng.random() < spec.exclude_rate
        topic = int(rng.integers(0, spec.n_topics))
        sentiment = 1 if rng.random() < spec.positive_rate else 0
        pool = STREAM_TOPIC_POOLS[topic]
        words = [pool[int(rng.integers(0, len(pool)))] for _ in range(3)]
        sent_pool = POSITIVE_WORDS if sentiment == 1 else NEGATIVE_WORDS
        words += [sent_pool[int(rng.integers(0, len(sent_pool)))] for _ in range(2)]
        words += [NEUTRAL_WORDS[int(rng.integers(0, len(NEUTRAL_WORDS)))]]
        if has_keyword:
            words.append(STREAM_KEYWORDS[int(rng.integers(0, len(STREAM_KEYWORDS)))])
        if has_include:
            words.append(STREAM_INCLUDE_TERMS[int(rng.integers(0, len(STREAM_INCLUDE_TERMS)))])
        if has_exclude:
            words.append(STREAM_EXCLUDE_TERMS[int(rng.integers(0, len(STREAM_EXCLUDE_TERMS)))])
        if rng.random() < spec.mention_rate:
            words.append(f"@user{int(rng.integers(0, spec.n_users)):03d}")
        if rng.random() < spec.hashtag_rate:
            words.append(f"#{STREAM_HASHTAGS[int(rng.integers(0, len(STREAM_HASHTAGS)))]}")
        drafts.append((ts, user_no, " ".join(words), has_keyword, has_include, has_exclude,
                       topic, sentiment))
    drafts.sort(key=lambda d: d[0])
    records = []
    truth = []
    for i, (ts, user_no, text, kw, inc, exc, topic, sentiment) in enumerate(drafts):
        rec_id = f"t{i:06d}"
        mentions, hashtags = extract_entities(text)
        records.append(
            TweetRecord(
                id=rec_id, created_at=ts, user=f"user{user_no:03d}", text=text,
                mentions=tuple(mentions), hashtags=tuple(hashtags),
            )
        )
        truth.append(PlantedTweet(id=rec_id, has_keyword=kw, has_include=inc,
                                  has_exclude=exc, topic=topic, sentiment=sentiment))
    return StreamSample(records=records, truth=truth, spec=spec)


def align_topics(
    true_sets: Sequence[set],
    learned_sets: Sequence[set],
) -> list[tuple[int, int]]:
    """Greedy matching: each true topic, in index order, takes the unclaimed
    learned topic with the largest word overlap (ties to the lowest index)."""
    taken: set[int] = set()
    pairs = []
    for ti, true_set in enumerate(true_sets):
        best_li = -1
        best_overlap = -1
        for li, learned in enumerate(learned_sets):
            if li in taken:
                continue
            overlap = len(true_set & learned)
            if overlap > best_overlap:
                best_overlap = overlap
                best_li = li
        if best_li >= 0:
            taken.add(best_li)
            pairs.append((ti, best_li))
    return pairs


def recovery_score(true_sets: Sequence[set], learned_sets: Sequence[set]) -> float:
    """Mean fraction of each true topic's words recovered by its greedy match."""
    if not true_sets:
        raise InputError("no true topics to score")
    pairs = align_topics(true_sets, learned_sets)
    matched = {ti: li for ti, li in pairs}
    total = 0.0
    for ti, true_set in enumerate(true_sets):
        if ti in matched and true_set:
            total += len(true_set & learned_sets[matched[ti]]) / len(true_set)
    return total / len(true_sets)
