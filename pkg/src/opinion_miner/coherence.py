"""UMass topic coherence over document co-occurrence, plus the staged
hyperparameter grid search that uses it as the objective.

Pair scoring follows the literal reading of the coherence formula: for a
ranked word list, every pair (earlier, later) scores
log((D(earlier, later) + eps) / D(later)). The more common UMass convention
divides by the earlier-ranked word instead; `convention="umass"` selects it.
Words that never appear in the validation corpus are dropped from pair
enumeration and counted, since their denominator is undefined.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from itertools import combinations
from pathlib import Path
from typing import Iterable, Sequence

from .errors import InputError
from .lda import LdaModel, init_model, topic_top_word_ids, train
from .seeding import derive_seed, make_rng
from .textproc import Document

__all__ = [
    "PAPER_CONVENTION",
    "UMASS_CONVENTION",
    "CooccurrenceCounts",
    "count_cooccurrence",
    "score_pair",
    "topic_coherence",
    "CoherenceReport",
    "model_coherence",
    "split_validation",
    "GridCell",
    "GridSearchResult",
    "grid_search",
    "DEFAULT_BASELINE",
]

PAPER_CONVENTION = "paper"
UMASS_CONVENTION = "umass"
DEFAULT_EPSILON = 1e-12
DEFAULT_TOP_N = 10
# Reference configuration the improvement figure is measured against.
DEFAULT_BASELINE = (10, 0.01, 0.1)


@dataclass
class CooccurrenceCounts:
    """Document-frequency counts D(x) and D(x,y) over a fixed token set."""

    single_counts: dict
    pair_counts: dict
    total_docs: int

    def single(self, x) -> int:
        return self.single_counts.get(x, 0)

    def pair(self, x, y) -> int:
        if x == y:
            return self.single(x)
        key = (x, y) if x < y else (y, x)
        return self.pair_counts.get(key, 0)


def _doc_tokens(doc) -> Iterable:
    return doc.tokens if isinstance(doc, Document) else doc


def count_cooccurrence(validation_docs: Sequence, tokens_of_interest: set) -> CooccurrenceCounts:
    """Presence counts (once per document) restricted to tokens_of_interest."""
    if not validation_docs:
        raise InputError("validation corpus is empty")
    singles: dict = {}
    pairs: dict = {}
    for doc in validation_docs:
        present = sorted(tokens_of_interest.intersection(_doc_tokens(doc)))
        for tok in present:
            singles[tok] = singles.get(tok, 0) + 1
        for a, b in combinations(present, 2):
            pairs[(a, b)] = pairs.get((a, b), 0) + 1
    return CooccurrenceCounts(
        single_counts=singles, pair_counts=pairs, total_docs=len(validation_docs)
    )


def score_pair(v_i, v_j, epsilon: float, counts: CooccurrenceCounts) -> float:
    """log((D(v_i, v_j) + eps) / D(v_j)). Caller guarantees D(v_j) > 0."""
    denom = counts.single(v_j)
    if denom <= 0:
        raise InputError(f"score_pair called with D({v_j!r}) = 0")
    return math.log((counts.pair(v_i, v_j) + epsilon) / denom)


def _coherence_with_skips(
    words: Sequence,
    counts: CooccurrenceCounts,
    epsilon: float,
    convention: str,
) -> tuple[float, int]:
    if convention not in (PAPER_CONVENTION, UMASS_CONVENTION):
        raise ValueError(f"unknown convention {convention!r}")
    present = [w for w in words if counts.single(w) > 0]
    n_all = len(words)
    skipped = n_all * (n_all - 1) // 2 - len(present) * (len(present) - 1) // 2
    total = 0.0
    for i in range(len(present)):
        for j in range(i + 1, len(present)):
            earlier, later = present[i], present[j]
            if convention == PAPER_CONVENTION:
                total += score_pair(earlier, later, epsilon, counts)
            else:
                total += score_pair(later, earlier, epsilon, counts)
    return total, skipped


def topic_coherence(
    words: Sequence,
    counts: CooccurrenceCounts,
    epsilon: float = DEFAULT_EPSILON,
    convention: str = PAPER_CONVENTION,
) -> float:
    """Sum of pair scores over the ranked word list (rank i < rank j)."""
    if not words:
        raise InputError("word list is empty")
    value, _ = _coherence_with_skips(words, counts, epsilon, convention)
    return value


@dataclass
class CoherenceReport:
    per_topic: list[tuple[int, float]]
    mean_coherence: float
    n_top: int
    epsilon: float
    n_validation_docs: int
    skipped_pairs: int = 0
    convention: str = PAPER_CONVENTION

    def to_csv(self) -> str:
        lines = ["topic,coherence"]
        for topic_id, value in self.per_topic:
            lines.append(f"{topic_id},{value!r}")
        return "\n".join(lines) + "\n"

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_csv(), encoding="utf-8")


def model_coherence(
    model: LdaModel,
    validation_docs: Sequence[Document],
    n_top: int = DEFAULT_TOP_N,
    epsilon: float = DEFAULT_EPSILON,
    convention: str = PAPER_CONVENTION,
) -> CoherenceReport:
    """Per-topic coherence of the model's top-N words on a validation corpus."""
    top_ids = [
        [w for w, _ in topic_top_word_ids(model, k, n_top)] for k in range(model.n_topics)
    ]
    interest = set()
    for ids in top_ids:
        interest.update(ids)
    counts = count_cooccurrence(validation_docs, interest)
    per_topic = []
    skipped = 0
    for k, ids in enumerate(top_ids):
        value, k_skipped = _coherence_with_skips(ids, counts, epsilon, convention)
        per_topic.append((k, value))
        skipped += k_skipped
    mean = sum(v for _, v in per_topic) / len(per_topic)
    return CoherenceReport(
        per_topic=per_topic,
        mean_coherence=mean,
        n_top=n_top,
        epsilon=epsilon,
        n_validation_docs=len(validation_docs),
        skipped_pairs=skipped,
        convention=convention,
    )


def split_validation(
    corpus: Sequence[Document],
    fraction: float,
    seed: int,
) -> tuple[list[Document], list[Document]]:
    """Seeded shuffle split; both sides keep original corpus order."""
    if not 0 < fraction < 1:
        raise InputError(f"validation fraction must be in (0,1), got {fraction}")
    n = len(corpus)
    n_val = int(n * fraction)
    if n_val == 0 or n_val == n:
        raise InputError(f"degenerate validation split: {n_val} of {n} docs")
    rng = make_rng(derive_seed(seed, "validation-split"))
    perm = rng.permutation(n)
    val_idx = sorted(int(i) for i in perm[:n_val])
    train_idx = sorted(int(i) for i in perm[n_val:])
    return [corpus[i] for i in train_idx], [corpus[i] for i in val_idx]


@dataclass(frozen=True)
class GridCell:
    n_topics: int
    alpha_spec: float | str
    eta: float
    mean_coherence: float

    @property
    def alpha_label(self) -> str:
        return self.alpha_spec if isinstance(self.alpha_spec, str) else repr(self.alpha_spec)


@dataclass
class GridSearchResult:
    table: list[GridCell]
    best: GridCell
    baseline: GridCell
    improvement_vs_baseline: float
    strategy: str
    n_train_docs: int
    n_validation_docs: int
    dropped_empty_docs: int = 0

    def to_csv(self) -> str:
        lines = ["K,alpha,eta,mean_coherence"]
        for cell in self.table:
            lines.append(
                f"{cell.n_topics},{cell.alpha_label},{cell.eta!r},{cell.mean_coherence!r}"
            )
        return "\n".join(lines) + "\n"

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_csv(), encoding="utf-8")


def _improvement(best: float, baseline: float) -> float:
    if baseline == 0.0:
        return 0.0 if best == 0.0 else math.copysign(math.inf, best)
    return (best - baseline) / abs(baseline)


def _first_argmax(cells: Sequence[GridCell]) -> GridCell:
    best = cells[0]
    for cell in cells[1:]:
        if cell.mean_coherence > best.mean_coherence:
            best = cell
    return best


def grid_search(
    corpus: Sequence[Document],
    k_range: Sequence[int],
    alpha_grid: Sequence[float | str],
    eta_grid: Sequence[float],
    validation_fraction: float = 0.2,
    sweeps: int = 200,
    seed: int = 0,
    vocab_size: int | None = None,
    strategy: str = "staged",
    n_top: int = DEFAULT_TOP_N,
    epsilon: float = DEFAULT_EPSILON,
    convention: str = PAPER_CONVENTION,
    baseline: tuple[int, float | str, float] = DEFAULT_BASELINE,
    n_workers: int | None = None,
) -> GridSearchResult:
    """Coherence-driven hyperparameter search.

    `staged` follows the one-parameter-at-a-time protocol: sweep K with the
    baseline alpha/eta, fix the best K, then sweep alpha x eta. `full` scans
    the cartesian product. Each cell trains with a seed derived from (seed,
    cell index), so a thread pool changes nothing but wall time. Ties go to
    the first cell in scan order (K ascending, then grid order).
    """
    if not k_range or not alpha_grid or not eta_grid:
        raise InputError("k_range, alpha_grid, and eta_grid must be nonempty")
    if strategy not in ("staged", "full"):
        raise InputError(f"unknown strategy {strategy!r}")
    docs = [d for d in corpus if len(d) > 0]
    dropped = len(corpus) - len(docs)
    if vocab_size is None:
        if not docs:
            raise InputError("corpus has no nonempty documents")
        vocab_size = max(max(d.tokens) for d in docs) + 1
    train_docs, val_docs = split_validation(docs, validation_fraction, seed)
    if not train_docs:
        raise InputError("empty training side after validation split")
    if n_workers is None:
        n_workers = int(os.environ.get("OPINION_MINER_THREADS", "1"))
    n_workers = max(1, n_workers)

    def eval_cell(args: tuple[int, int, float | str, float]) -> GridCell:
        index, n_topics, alpha_spec, eta = args
        cell_seed = derive_seed(seed, "cell", index)
        model = init_model(train_docs, n_topics, alpha_spec, eta, cell_seed, vocab_size)
        train(model, sweeps=sweeps)
        report = model_coherence(model, val_docs, n_top=n_top, epsilon=epsilon, convention=convention)
        return GridCell(n_topics, alpha_spec, eta, report.mean_coherence)

    def eval_many(specs: list[tuple[int, int, float | str, float]]) -> list[GridCell]:
        if n_workers == 1 or len(specs) <= 1:
            return [eval_cell(s) for s in specs]
        with ThreadPoolExecutor(max_workers=n_workers) as pool:
            return list(pool.map(eval_cell, specs))

    base_k, base_alpha, base_eta = baseline
    base_seed = derive_seed(seed, "baseline")
    base_model = init_model(train_docs, base_k, base_alpha, base_eta, base_seed, vocab_size)
    train(base_model, sweeps=sweeps)
    base_report = model_coherence(
        base_model, val_docs, n_top=n_top, epsilon=epsilon, convention=convention
    )
    baseline_cell = GridCell(base_k, base_alpha, base_eta, base_report.mean_coherence)

    ks = sorted(k_range)
    next_index = 0
    table: list[GridCell] = []
    if strategy == "full":
        specs = []
        for n_topics in ks:
            for alpha_spec in alpha_grid:
                for eta in eta_grid:
                    specs.append((next_index, n_topics, alpha_spec, eta))
                    next_index += 1
        table = eval_many(specs)
    else:
        stage1 = []
        for n_topics in ks:
            stage1.append((next_index, n_topics, base_alpha, base_eta))
            next_index += 1
        stage1_cells = eval_many(stage1)
        best_k = _first_argmax(stage1_cells).n_topics
        stage2 = []
        for alpha_spec in alpha_grid:
            for eta in eta_grid:
                stage2.append((next_index, best_k, alpha_spec, eta))
                next_index += 1
        table = stage1_cells + eval_many(stage2)

    best = _first_argmax(table)
    return GridSearchResult(
        table=table,
        best=best,
        baseline=baseline_cell,
        improvement_vs_baseline=_improvement(best.mean_coherence, baseline_cell.mean_coherence),
        strategy=strategy,
        n_train_docs=len(train_docs),
        n_validation_docs=len(val_docs),
        dropped_empty_docs=dropped,
    )
