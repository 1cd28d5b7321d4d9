"""Latent Dirichlet Allocation trained by collapsed Gibbs sampling.

The sampler resamples every token position in document order, position
order, from the collapsed conditional

    p(z = k | rest) ∝ (n_dk + alpha_k) * (n_kw + eta) / (n_k + V * eta)

with the current token excluded from all counts. The inner loop is a numba
kernel fed pre-drawn uniforms, so the draw sequence is owned entirely by
the model's PCG64 generator and results are bit-reproducible. Estimates
come from the final sample; the log-likelihood trace is for convergence
inspection, not auto-stopping.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
from numba import njit
from scipy.special import gammaln

from .errors import InputError
from .seeding import derive_seed, make_rng
from .textproc import Document, Vocabulary

__all__ = [
    "LdaModel",
    "TopicSummary",
    "SweepDiagnostics",
    "resolve_alpha",
    "init_model",
    "gibbs_sweep",
    "train",
    "log_likelihood",
    "estimate_phi",
    "doc_topic_matrix",
    "infer_doc_topics",
    "dominant_topic",
    "topic_top_words",
    "check_counts",
    "save_model",
    "load_model",
    "topics_to_csv",
]

DEFAULT_SWEEPS = 500
FOLD_IN_SWEEPS = 20


def resolve_alpha(alpha_spec: float | str, n_topics: int) -> np.ndarray:
    """Materialize the document-topic prior.

    A number gives a symmetric vector. The string "asymmetric" gives
    alpha_k = 1 / (k + sqrt(K)), unnormalized, k = 0..K-1.
    """
    if isinstance(alpha_spec, str):
        if alpha_spec != "asymmetric":
            try:
                value = float(alpha_spec)
            except ValueError:
                raise ValueError(f"alpha_spec must be a positive number or 'asymmetric', got {alpha_spec!r}") from None
            return resolve_alpha(value, n_topics)
        root = math.sqrt(n_topics)
        return np.array([1.0 / (k + root) for k in range(n_topics)], dtype=np.float64)
    value = float(alpha_spec)
    if value <= 0:
        raise ValueError(f"alpha must be positive, got {value}")
    return np.full(n_topics, value, dtype=np.float64)


@dataclass
class SweepDiagnostics:
    sweep_index: int
    log_likelihood: float
    conditionals: np.ndarray | None = None


@dataclass
class LdaModel:
    n_topics: int
    alpha: np.ndarray          # (K,) document-topic prior
    eta: float                 # symmetric topic-word prior
    vocab_size: int
    seed: int
    doc_topic: np.ndarray      # (D, K) int32
    topic_word: np.ndarray     # (K, V) int32
    topic_total: np.ndarray    # (K,) int64
    assignments: np.ndarray    # flat int32, one topic id per token position
    tokens: np.ndarray         # flat int32, token ids aligned with assignments
    doc_offsets: np.ndarray    # (D+1,) int64 slice bounds into the flat arrays
    source_ids: list[str]      # training Document source ids, row order
    alpha_spec: float | str = 0.01
    sweeps_done: int = 0
    ll_trace: list[float] = field(default_factory=list)
    _rng: np.random.Generator | None = field(default=None, repr=False)
    _doc_index: dict[str, int] | None = field(default=None, repr=False)

    @property
    def n_docs(self) -> int:
        return len(self.doc_offsets) - 1

    @property
    def total_tokens(self) -> int:
        return int(self.doc_offsets[-1])

    def doc_row(self, source_id: str) -> int | None:
        """Training-corpus row for a source id, or None if held out."""
        if self._doc_index is None:
            self._doc_index = {s: i for i, s in enumerate(self.source_ids)}
        return self._doc_index.get(source_id)


@njit(cache=True, nogil=True)
def _sweep_kernel(tokens, doc_ids, assignments, doc_topic, topic_word, topic_total,
                  alpha, eta, uniforms, conditionals):
    n_topics, vocab_size = topic_word.shape
    v_eta = vocab_size * eta
    record = conditionals.shape[0] == tokens.shape[0]
    weights = np.empty(n_topics, dtype=np.float64)
    for i in range(tokens.shape[0]):
        w = tokens[i]
        d = doc_ids[i]
        k_old = assignments[i]
        doc_topic[d, k_old] -= 1
        topic_word[k_old, w] -= 1
        topic_total[k_old] -= 1
        total = 0.0
        for k in range(n_topics):
            wt = (doc_topic[d, k] + alpha[k]) * (topic_word[k, w] + eta) / (topic_total[k] + v_eta)
            weights[k] = wt
            total += wt
        if record:
            for k in range(n_topics):
                conditionals[i, k] = weights[k] / total
        u = uniforms[i] * total
        acc = 0.0
        k_new = n_topics - 1
        for k in range(n_topics):
            acc += weights[k]
            if u < acc:
                k_new = k
                break
        assignments[i] = k_new
        doc_topic[d, k_new] += 1
        topic_word[k_new, w] += 1
        topic_total[k_new] += 1


@njit(cache=True, nogil=True)
def _fold_in_kernel(tokens, assignments, local_counts, topic_word, topic_total,
                    alpha, eta, uniforms):
    # Same conditional as training, but corpus-wide counts stay frozen and
    # only the held-out document's local topic counts move.
    n_topics, vocab_size = topic_word.shape
    v_eta = vocab_size * eta
    weights = np.empty(n_topics, dtype=np.float64)
    pos = 0
    n_sweeps = uniforms.shape[0] // max(tokens.shape[0], 1)
    for s in range(n_sweeps):
        for i in range(tokens.shape[0]):
            w = tokens[i]
            k_old = assignments[i]
            local_counts[k_old] -= 1
            total = 0.0
            for k in range(n_topics):
                wt = (local_counts[k] + alpha[k]) * (topic_word[k, w] + eta) / (topic_total[k] + v_eta)
                weights[k] = wt
                total += wt
            u = uniforms[pos] * total
            pos += 1
            acc = 0.0
            k_new = n_topics - 1
            for k in range(n_topics):
                acc += weights[k]
                if u < acc:
                    k_new = k
                    break
            assignments[i] = k_new
            local_counts[k_new] += 1


def _flatten(corpus: Sequence[Document]) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    lengths = np.array([len(d) for d in corpus], dtype=np.int64)
    offsets = np.zeros(len(corpus) + 1, dtype=np.int64)
    np.cumsum(lengths, out=offsets[1:])
    tokens = np.empty(int(offsets[-1]), dtype=np.int32)
    doc_ids = np.empty(int(offsets[-1]), dtype=np.int32)
    for i, doc in enumerate(corpus):
        tokens[offsets[i]:offsets[i + 1]] = doc.tokens
        doc_ids[offsets[i]:offsets[i + 1]] = i
    return tokens, doc_ids, offsets


def init_model(
    corpus: Sequence[Document],
    n_topics: int,
    alpha_spec: float | str,
    eta: float,
    seed: int,
    vocab_size: int,
) -> LdaModel:
    """Uniform random topic assignments with consistent count tables."""
    if n_topics < 1:
        raise InputError(f"n_topics must be >= 1, got {n_topics}")
    if eta <= 0:
        raise InputError(f"eta must be positive, got {eta}")
    if not corpus:
        raise InputError("corpus is empty")
    for doc in corpus:
        if len(doc) == 0:
            raise InputError(f"empty document in training corpus: {doc.source_id!r}")
        if max(doc.tokens) >= vocab_size:
            raise InputError(f"document {doc.source_id!r} has token id >= vocab_size")
    alpha = resolve_alpha(alpha_spec, n_topics)
    tokens, doc_ids, offsets = _flatten(corpus)
    rng = make_rng(seed)
    assignments = rng.integers(0, n_topics, size=tokens.shape[0], dtype=np.int32)
    doc_topic = np.zeros((len(corpus), n_topics), dtype=np.int32)
    topic_word = np.zeros((n_topics, vocab_size), dtype=np.int32)
    topic_total = np.zeros(n_topics, dtype=np.int64)
    np.add.at(doc_topic, (doc_ids, assignments), 1)
    np.add.at(topic_word, (assignments, tokens), 1)
    np.add.at(topic_total, assignments, 1)
    return LdaModel(
        n_topics=n_topics,
        alpha=alpha,
        eta=float(eta),
        vocab_size=vocab_size,
        seed=seed,
        doc_topic=doc_topic,
        topic_word=topic_word,
        topic_total=topic_total,
        assignments=assignments,
        tokens=tokens,
        doc_offsets=offsets,
        source_ids=[d.source_id for d in corpus],
        alpha_spec=alpha_spec,
        _rng=rng,
    )


def _doc_ids_flat(model: LdaModel) -> np.ndarray:
    doc_ids = np.empty(model.total_tokens, dtype=np.int32)
    for i in range(model.n_docs):
        doc_ids[model.doc_offsets[i]:model.doc_offsets[i + 1]] = i
    return doc_ids


def _validate_corpus(model: LdaModel, corpus: Sequence[Document] | None) -> None:
    # Passing a different corpus than the one the model was initialized on
    # is an error, not a silent retrain.
    if corpus is None:
        return
    if len(corpus) != model.n_docs or any(
        len(d) != model.doc_offsets[i + 1] - model.doc_offsets[i] for i, d in enumerate(corpus)
    ):
        raise InputError("corpus does not match the model's training corpus")


def gibbs_sweep(
    model: LdaModel,
    corpus: Sequence[Document] | None = None,
    record_conditionals: bool = False,
) -> SweepDiagnostics:
    """One full pass over every token position, mutating the model in place."""
    if model._rng is None:
        raise InputError("model was loaded without training state; retrain instead")
    _validate_corpus(model, corpus)
    doc_ids = _doc_ids_flat(model)
    uniforms = model._rng.random(model.total_tokens)
    if record_conditionals:
        conditionals = np.empty((model.total_tokens, model.n_topics), dtype=np.float64)
    else:
        conditionals = np.empty((0, model.n_topics), dtype=np.float64)
    _sweep_kernel(
        model.tokens, doc_ids, model.assignments,
        model.doc_topic, model.topic_word, model.topic_total,
        model.alpha, model.eta, uniforms, conditionals,
    )
    model.sweeps_done += 1
    ll = log_likelihood(model)
    model.ll_trace.append(ll)
    return SweepDiagnostics(
        sweep_index=model.sweeps_done,
        log_likelihood=ll,
        conditionals=conditionals if record_conditionals else None,
    )


def train(
    model: LdaModel,
    corpus: Sequence[Document] | None = None,
    sweeps: int = DEFAULT_SWEEPS,
    burn_in: int = 0,
) -> LdaModel:
    """Run `sweeps` full Gibbs passes. Estimates use the final sample;
    burn_in is accepted for interface stability but adds nothing yet."""
    if sweeps < 1:
        raise InputError(f"sweeps must be >= 1, got {sweeps}")
    if model._rng is None:
        raise InputError("model was loaded without training state; retrain instead")
    _validate_corpus(model, corpus)
    doc_ids = _doc_ids_flat(model)
    empty_cond = np.empty((0, model.n_topics), dtype=np.float64)
    for _ in range(sweeps):
        uniforms = model._rng.random(model.total_tokens)
        _sweep_kernel(
            model.tokens, doc_ids, model.assignments,
            model.doc_topic, model.topic_word, model.topic_total,
            model.alpha, model.eta, uniforms, empty_cond,
        )
        model.sweeps_done += 1
        model.ll_trace.append(log_likelihood(model))
    return model


def log_likelihood(model: LdaModel) -> float:
    """Collapsed joint log p(w, z | alpha, eta) of the current sample."""
    alpha = model.alpha
    eta = model.eta
    vocab_size = model.vocab_size
    lengths = np.diff(model.doc_offsets)
    alpha_sum = float(alpha.sum())
    doc_part = (
        model.n_docs * gammaln(alpha_sum)
        - gammaln(lengths + alpha_sum).sum()
        + gammaln(model.doc_topic + alpha[None, :]).sum()
        - model.n_docs * gammaln(alpha).sum()
    )
    word_part = (
        model.n_topics * gammaln(vocab_size * eta)
        - gammaln(model.topic_total + vocab_size * eta).sum()
        + gammaln(model.topic_word + eta).sum()
        - model.n_topics * vocab_size * gammaln(eta)
    )
    return float(doc_part + word_part)


def estimate_phi(model: LdaModel) -> np.ndarray:
    """Smoothed topic-word distributions, rows summing to 1."""
    num = model.topic_word + model.eta
    den = model.topic_total[:, None] + model.vocab_size * model.eta
    return num / den


def _theta_from_counts(counts: np.ndarray, length: int, alpha: np.ndarray) -> np.ndarray:
    return (counts + alpha) / (length + alpha.sum())


def doc_topic_matrix(model: LdaModel) -> np.ndarray:
    """Smoothed topic distributions for every training document."""
    lengths = np.diff(model.doc_offsets).astype(np.float64)
    return (model.doc_topic + model.alpha[None, :]) / (lengths[:, None] + model.alpha.sum())


def infer_doc_topics(
    model: LdaModel,
    doc: Document,
    sweeps: int = FOLD_IN_SWEEPS,
    seed: int | None = None,
) -> np.ndarray:
    """Smoothed topic distribution for one document.

    Training documents read their counts straight off the model. Held-out
    documents get fold-in Gibbs: local assignments resampled `sweeps` times
    against frozen corpus-wide counts, seeded per document so distinct
    documents can be inferred in parallel.
    """
    row = model.doc_row(doc.source_id)
    if row is not None and model.doc_offsets[row + 1] - model.doc_offsets[row] == len(doc):
        return _theta_from_counts(model.doc_topic[row].astype(np.float64), len(doc), model.alpha)
    if len(doc) == 0:
        return model.alpha / model.alpha.sum()
    if any(t >= model.vocab_size for t in doc.tokens):
        raise InputError(f"document {doc.source_id!r} has token id >= vocab_size")
    if seed is None:
        seed = derive_seed(model.seed, "fold-in", doc.source_id)
    rng = make_rng(seed)
    tokens = np.asarray(doc.tokens, dtype=np.int32)
    assignments = rng.integers(0, model.n_topics, size=len(doc), dtype=np.int32)
    local_counts = np.bincount(assignments, minlength=model.n_topics).astype(np.int64)
    uniforms = rng.random(sweeps * len(doc))
    _fold_in_kernel(
        tokens, assignments, local_counts,
        model.topic_word, model.topic_total,
        model.alpha, model.eta, uniforms,
    )
    return _theta_from_counts(local_counts.astype(np.float64), len(doc), model.alpha)


def dominant_topic(model: LdaModel, doc: Document, seed: int | None = None) -> int:
    """argmax of the inferred topic distribution; ties go to the lowest id."""
    theta = infer_doc_topics(model, doc, seed=seed)
    return int(np.argmax(theta))


@dataclass(frozen=True)
class TopicSummary:
    topic_id: int
    top_words: tuple[tuple[str, float], ...]
    label: str | None = None


def topic_top_word_ids(model: LdaModel, k: int, n: int = 10) -> list[tuple[int, float]]:
    """Top-n (token id, probability) for topic k; ties favor the lower id."""
    if not 0 <= k < model.n_topics:
        raise InputError(f"topic {k} out of range [0, {model.n_topics})")
    phi_k = estimate_phi(model)[k]
    order = np.lexsort((np.arange(model.vocab_size), -phi_k))
    top = order[: min(n, model.vocab_size)]
    return [(int(w), float(phi_k[w])) for w in top]


def topic_top_words(
    model: LdaModel,
    k: int,
    vocab: Vocabulary,
    n: int = 10,
    label: str | None = None,
) -> TopicSummary:
    pairs = topic_top_word_ids(model, k, n)
    return TopicSummary(
        topic_id=k,
        top_words=tuple((vocab.id_to_token[w], p) for w, p in pairs),
        label=label,
    )


def check_counts(model: LdaModel) -> None:
    """Assert the three count-table invariants; raises on any violation."""
    lengths = np.diff(model.doc_offsets)
    if not np.array_equal(model.doc_topic.sum(axis=1), lengths):
        raise InputError("doc_topic rows do not sum to document lengths")
    if not np.array_equal(model.topic_word.sum(axis=1), model.topic_total):
        raise InputError("topic_word rows do not sum to topic totals")
    if int(model.topic_total.sum()) != model.total_tokens:
        raise InputError("topic totals do not sum to total token count")
    if model.assignments.size and not (
        (model.assignments >= 0).all() and (model.assignments < model.n_topics).all()
    ):
        raise InputError("assignment out of range")
    rebuilt_tw = np.zeros_like(model.topic_word)
    np.add.at(rebuilt_tw, (model.assignments, model.tokens), 1)
    if not np.array_equal(rebuilt_tw, model.topic_word):
        raise InputError("topic_word inconsistent with assignments")


def save_model(
    model: LdaModel,
    path: str | Path,
    vocab_sha256: str | None = None,
    include_state: bool = True,
) -> None:
    """Versioned JSON serialization.

    Count tables are integers so the round-trip is exact. Training state
    (assignments, doc_topic, token stream) is optional; without it a loaded
    model supports inference but not further training.
    """
    payload: dict = {
        "version": 1,
        "n_topics": model.n_topics,
        "alpha_spec": model.alpha_spec,
        "alpha": [float(a) for a in model.alpha],
        "eta": model.eta,
        "vocab_size": model.vocab_size,
        "vocab_sha256": vocab_sha256,
        "seed": model.seed,
        "sweeps_done": model.sweeps_done,
        "topic_word": model.topic_word.tolist(),
        "topic_total": model.topic_total.tolist(),
    }
    if include_state:
        payload["doc_topic"] = model.doc_topic.tolist()
        payload["doc_offsets"] = model.doc_offsets.tolist()
        payload["tokens"] = model.tokens.tolist()
        payload["assignments"] = model.assignments.tolist()
        payload["source_ids"] = model.source_ids
    Path(path).write_text(json.dumps(payload, separators=(",", ":")), encoding="utf-8")


def load_model(path: str | Path, expect_vocab_sha256: str | None = None) -> LdaModel:
    payload = json.loads(Path(path).read_text(encoding="utf-8"))
    if payload.get("version") != 1:
        raise InputError(f"unsupported model version: {payload.get('version')!r}")
    if expect_vocab_sha256 is not None and payload.get("vocab_sha256") not in (None, expect_vocab_sha256):
        raise InputError("model was trained against a different vocabulary")
    has_state = "assignments" in payload
    n_topics = payload["n_topics"]
    topic_word = np.array(payload["topic_word"], dtype=np.int32)
    if has_state:
        doc_topic = np.array(payload["doc_topic"], dtype=np.int32)
        doc_offsets = np.array(payload["doc_offsets"], dtype=np.int64)
        tokens = np.array(payload["tokens"], dtype=np.int32)
        assignments = np.array(payload["assignments"], dtype=np.int32)
        source_ids = list(payload["source_ids"])
    else:
        doc_topic = np.zeros((0, n_topics), dtype=np.int32)
        doc_offsets = np.zeros(1, dtype=np.int64)
        tokens = np.zeros(0, dtype=np.int32)
        assignments = np.zeros(0, dtype=np.int32)
        source_ids = []
    return LdaModel(
        n_topics=n_topics,
        alpha=np.array(payload["alpha"], dtype=np.float64),
        eta=float(payload["eta"]),
        vocab_size=int(payload["vocab_size"]),
        seed=int(payload["seed"]),
        doc_topic=doc_topic,
        topic_word=topic_word,
        topic_total=np.array(payload["topic_total"], dtype=np.int64),
        assignments=assignments,
        tokens=tokens,
        doc_offsets=doc_offsets,
        source_ids=source_ids,
        alpha_spec=payload.get("alpha_spec", "unknown"),
        sweeps_done=int(payload["sweeps_done"]),
        _rng=None,
    )


def topics_to_csv(summaries: Iterable[TopicSummary]) -> str:
    lines = ["topic,rank,token,probability"]
    for summary in summaries:
        for rank, (token, prob) in enumerate(summary.top_words, start=1):
            lines.append(f"{summary.topic_id},{rank},{token},{prob!r}")
    return "\n".join(lines) + "\n"
