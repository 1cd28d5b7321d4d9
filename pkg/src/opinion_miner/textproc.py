"""Tokenization, entity extraction, and vocabulary construction.

The tokenizer is deliberately small: NFC-normalize, casefold, drop URLs,
replace punctuation and symbol characters with spaces, split, and discard
pure-digit tokens. '@' and '#' are punctuation, so mention/hashtag prefixes
vanish and the bare token survives. Entity extraction runs separately on the
raw text because it needs the original casing.
"""

from __future__ import annotations

import hashlib
import json
import re
import unicodedata
from dataclasses import dataclass
from datetime import datetime
from importlib import resources
from pathlib import Path
from typing import Iterable, Sequence

from .errors import InputError

__all__ = [
    "tokenize",
    "split_words",
    "extract_entities",
    "strip_urls",
    "Vocabulary",
    "build_vocabulary",
    "Document",
    "to_documents",
    "default_stopwords",
    "load_stopwords",
]

_URL_RE = re.compile(r"(?:https?://|www\.)\S+", re.IGNORECASE)
# Entity prefix must not be glued to a preceding word character ("a@b.com" has
# no mention in it), matching the common social-media convention.
_MENTION_RE = re.compile(r"(?<![A-Za-z0-9_])@([A-Za-z0-9_]+)")
_HASHTAG_RE = re.compile(r"(?<![A-Za-z0-9_])#([A-Za-z0-9_]+)")

_SEPARATOR_CACHE: dict[str, bool] = {}


def _is_separator(ch: str) -> bool:
    flag = _SEPARATOR_CACHE.get(ch)
    if flag is None:
        flag = unicodedata.category(ch)[0] in ("P", "S")
        _SEPARATOR_CACHE[ch] = flag
    return flag


def strip_urls(text: str) -> str:
    """Remove http(s):// and www. URLs up to the next whitespace."""
    return _URL_RE.sub(" ", text)


def split_words(text: str) -> list[str]:
    """Casefold, drop URLs, and split on whitespace/punctuation/symbols.

    Keeps digit tokens; tokenize() adds the pure-digit drop on top.
    """
    text = unicodedata.normalize("NFC", text).casefold()
    text = strip_urls(text)
    return "".join(" " if _is_separator(c) else c for c in text).split()


def tokenize(text: str) -> list[str]:
    """Case-folded word tokens with URLs, punctuation, and digit runs removed.

    Single-character tokens survive only when alphabetic ("s" from a split
    contraction stays; a stray digit or mark does not).
    """
    return [
        t
        for t in split_words(text)
        if not t.isdigit() and (len(t) > 1 or t.isalpha())
    ]


def extract_entities(text: str) -> tuple[list[str], list[str]]:
    """(@mentions, #hashtags) with casing preserved, one entry per occurrence."""
    text = strip_urls(unicodedata.normalize("NFC", text))
    return _MENTION_RE.findall(text), _HASHTAG_RE.findall(text)


def load_stopwords(path: str | Path) -> frozenset[str]:
    """One word per line; blank lines and '#' comments ignored."""
    words = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        word = line.strip()
        if word and not word.startswith("#"):
            words.append(word.casefold())
    return frozenset(words)


def default_stopwords() -> frozenset[str]:
    """The English stopword list shipped with the package."""
    text = resources.files("opinion_miner.data").joinpath("stopwords_en.txt").read_text("utf-8")
    return frozenset(
        w.strip().casefold()
        for w in text.splitlines()
        if w.strip() and not w.startswith("#")
    )


@dataclass
class Vocabulary:
    """Dense token-id mapping with document frequencies."""

    token_to_id: dict[str, int]
    id_to_token: list[str]
    doc_freq: list[int]
    total_docs: int

    def __len__(self) -> int:
        return len(self.id_to_token)

    def __contains__(self, token: str) -> bool:
        return token in self.token_to_id

    def encode(self, tokens: Iterable[str]) -> list[int]:
        """Token ids in order, silently dropping out-of-vocabulary tokens."""
        t2i = self.token_to_id
        return [t2i[t] for t in tokens if t in t2i]

    def to_json(self) -> str:
        payload = {
            "version": 1,
            "tokens": self.id_to_token,
            "doc_freq": self.doc_freq,
            "total_docs": self.total_docs,
        }
        return json.dumps(payload, ensure_ascii=True, separators=(",", ":"))

    @classmethod
    def from_json(cls, text: str) -> "Vocabulary":
        payload = json.loads(text)
        if payload.get("version") != 1:
            raise InputError(f"unsupported vocabulary version: {payload.get('version')!r}")
        tokens = payload["tokens"]
        return cls(
            token_to_id={t: i for i, t in enumerate(tokens)},
            id_to_token=list(tokens),
            doc_freq=list(payload["doc_freq"]),
            total_docs=int(payload["total_docs"]),
        )

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_json(), encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "Vocabulary":
        return cls.from_json(Path(path).read_text(encoding="utf-8"))

    def sha256(self) -> str:
        """Content hash used to tie serialized models to the vocab they index."""
        return hashlib.sha256(self.to_json().encode("utf-8")).hexdigest()


def build_vocabulary(
    docs: Sequence[Sequence[str]],
    min_df: int = 1,
    stopwords: frozenset[str] = frozenset(),
    max_features: int | None = None,
) -> Vocabulary:
    """Vocabulary over token lists: stopword and min_df pruning, then an
    optional cap keeping the most frequent tokens.

    Ranking key everywhere is (total frequency desc, token asc); ids follow
    the same order so id 0 is always the most frequent surviving token.
    """
    if min_df < 1:
        raise ValueError(f"min_df must be >= 1, got {min_df}")
    if max_features is not None and max_features < 1:
        raise ValueError(f"max_features must be >= 1, got {max_features}")
    doc_freq: dict[str, int] = {}
    total_freq: dict[str, int] = {}
    for doc in docs:
        seen = set()
        for tok in doc:
            if tok in stopwords:
                continue
            total_freq[tok] = total_freq.get(tok, 0) + 1
            if tok not in seen:
                seen.add(tok)
                doc_freq[tok] = doc_freq.get(tok, 0) + 1
    kept = [t for t, df in doc_freq.items() if df >= min_df]
    kept.sort(key=lambda t: (-total_freq[t], t))
    if max_features is not None:
        kept = kept[:max_features]
    if not kept:
        raise InputError("vocabulary is empty after pruning")
    return Vocabulary(
        token_to_id={t: i for i, t in enumerate(kept)},
        id_to_token=kept,
        doc_freq=[doc_freq[t] for t in kept],
        total_docs=len(docs),
    )


@dataclass(frozen=True)
class Document:
    """Token-id view of one record, order preserved."""

    tokens: tuple[int, ...]
    source_id: str
    timestamp: datetime | None = None

    def __len__(self) -> int:
        return len(self.tokens)

    @property
    def empty(self) -> bool:
        return not self.tokens


def to_documents(records, vocab: Vocabulary) -> list[Document]:
    """Encode records against a vocabulary. Empty results are kept (and easy
    to filter via Document.empty); model training excludes them explicitly."""
    out = []
    for rec in records:
        ids = vocab.encode(tokenize(rec.text))
        out.append(Document(tokens=tuple(ids), source_id=rec.id, timestamp=rec.created_at))
    return out
