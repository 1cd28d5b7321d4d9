"""End-to-end pipeline: filter, vocabulary, LDA (with optional tuning),
coherence, sentiment, analytics, and a manifest tying it together.

Every stage derives its seed from the run seed by name, so the `pipeline`
command and a hand-composed chain of subcommands with those seeds produce
identical bytes. Nothing here reads the clock; manifests record content
hashes, not timestamps, which is what makes rerun byte equality checkable.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

from . import analytics, coherence, ingest, lda, lstm, textproc
from .config import PipelineConfig, config_hash
from .errors import InputError
from .seeding import derive_seed

__all__ = [
    "STAGE_SEED_NAMES",
    "stage_seed",
    "PipelineResult",
    "run_pipeline",
    "build_corpus_documents",
    "train_lda_on_documents",
    "split_labeled",
    "prepare_labeled_dataset",
]

STAGE_SEED_NAMES = ("lda-final", "lda-tune", "lstm", "lstm-split")


def stage_seed(run_seed: int, stage: str) -> int:
    if stage not in STAGE_SEED_NAMES:
        raise ValueError(f"unknown stage {stage!r}")
    return derive_seed(run_seed, stage)


def build_corpus_documents(
    records: Sequence[ingest.TweetRecord],
    min_df: int,
    max_features: int | None,
    stopwords: frozenset[str],
) -> tuple[textproc.Vocabulary, list[textproc.Document], list[textproc.Document]]:
    """Vocabulary + encoded documents; returns (vocab, nonempty, all_docs)."""
    token_lists = [textproc.tokenize(r.text) for r in records]
    vocab = textproc.build_vocabulary(
        token_lists, min_df=min_df, stopwords=stopwords, max_features=max_features
    )
    docs = textproc.to_documents(records, vocab)
    nonempty = [d for d in docs if not d.empty]
    return vocab, nonempty, docs


def train_lda_on_documents(
    docs: Sequence[textproc.Document],
    vocab_size: int,
    n_topics: int,
    alpha_spec: float | str,
    eta: float,
    sweeps: int,
    seed: int,
) -> lda.LdaModel:
    if not docs:
        raise InputError("no nonempty documents to train on")
    model = lda.init_model(docs, n_topics, alpha_spec, eta, seed, vocab_size)
    lda.train(model, sweeps=sweeps)
    return model


def split_labeled(
    n: int, holdout_fraction: float, seed: int
) -> tuple[list[int], list[int]]:
    """Seeded index split; both sides sorted back to input order."""
    from .seeding import make_rng

    if not 0 <= holdout_fraction < 1:
        raise InputError(f"holdout fraction must be in [0,1), got {holdout_fraction}")
    n_holdout = int(n * holdout_fraction)
    perm = make_rng(seed).permutation(n)
    holdout = sorted(int(i) for i in perm[:n_holdout])
    train_idx = sorted(int(i) for i in perm[n_holdout:])
    return train_idx, holdout


def prepare_labeled_dataset(
    rows: Sequence[tuple[str, int]],
    max_features: int,
) -> tuple[textproc.Vocabulary, list[lstm.LabeledExample], int]:
    """Tokenize labeled texts and encode them against their own vocabulary.

    The sentiment vocabulary is intentionally separate from the topic-model
    vocabulary: no stopword removal and min_df=1, since function words carry
    signal for sentiment. Returns (vocab, examples, n_dropped_empty).
    """
    token_lists = [textproc.tokenize(text) for text, _ in rows]
    vocab = textproc.build_vocabulary(token_lists, min_df=1, max_features=max_features)
    examples = []
    dropped = 0
    for tokens, (_, label) in zip(token_lists, rows):
        ids = tuple(vocab.encode(tokens))
        if not ids:
            dropped += 1
            continue
        examples.append(lstm.LabeledExample(tokens=ids, label=label))
    return vocab, examples, dropped


@dataclass
class PipelineResult:
    out_dir: Path
    manifest: dict
    warnings: list[str] = field(default_factory=list)


def _sha256_file(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")


def run_pipeline(config: PipelineConfig, strict: bool = False) -> PipelineResult:
    """Run the full chain and write the documented output tree:

    filtered/corpus.jsonl, models/{vocabulary,lda,lstm}.json,
    reports/*.csv (+ lstm_metrics.json), manifest.json.

    Optional inputs switch stages off: no keyword list means no keyword
    stage, no labeled sentiment data means no sentiment stages.
    """
    out_dir = Path(config.output_dir)
    for sub in ("filtered", "models", "reports"):
        (out_dir / sub).mkdir(parents=True, exist_ok=True)
    warnings: list[str] = []
    manifest: dict = {
        "version": 1,
        "config_hash": config_hash(config),
        "seed": config.seed,
        "stage_seeds": {name: stage_seed(config.seed, name) for name in STAGE_SEED_NAMES},
        "stages": {},
    }

    # Filtering.
    parse_result = ingest.load_corpus(config.input.corpus, strict=strict)
    raw = parse_result.records
    if not raw:
        raise InputError("input corpus has no parseable records")
    stages: list[tuple[str, Sequence[ingest.TweetRecord]]] = [("raw", raw)]
    current: Sequence[ingest.TweetRecord] = raw
    if config.input.keywords:
        keywords = ingest.read_term_list(config.input.keywords)
        current = ingest.keyword_filter(current, keywords)
        stages.append(("keyword", current))
    include_terms = (
        ingest.read_term_list(config.input.include_terms) if config.input.include_terms else []
    )
    exclude_terms = (
        ingest.read_term_list(config.input.exclude_terms) if config.input.exclude_terms else []
    )
    if include_terms or exclude_terms:
        current = ingest.locality_filter(current, include_terms, exclude_terms)
        stages.append(("locality", current))
    filtered = list(current)
    if not filtered:
        raise InputError("no records survive filtering; nothing to model")
    report = ingest.summarize_stages(stages, malformed_lines=len(parse_result.skipped))
    ingest.save_corpus(filtered, out_dir / "filtered" / "corpus.jsonl")
    _write(out_dir / "reports" / "filter_report.csv", report.to_csv())
    manifest["stages"]["filter"] = {
        "malformed_lines": len(parse_result.skipped),
        "counts": {name: len(records) for name, records in stages},
    }

    # Vocabulary and documents.
    stopwords = (
        textproc.load_stopwords(config.tokenizer.stopwords)
        if config.tokenizer.stopwords
        else textproc.default_stopwords()
    )
    vocab, nonempty_docs, all_docs = build_corpus_documents(
        filtered, config.tokenizer.min_df, config.tokenizer.max_features, stopwords
    )
    vocab.save(out_dir / "models" / "vocabulary.json")
    n_empty = len(all_docs) - len(nonempty_docs)
    if n_empty:
        warnings.append(f"{n_empty} documents empty after preprocessing; excluded from LDA")
    manifest["stages"]["vocabulary"] = {
        "size": len(vocab),
        "documents": len(all_docs),
        "empty_documents": n_empty,
        "sha256": vocab.sha256(),
    }

    # Hyperparameter choice, optionally by staged grid search.
    lda_cfg = config.lda
    chosen = {"n_topics": lda_cfg.n_topics, "alpha": lda_cfg.alpha, "eta": lda_cfg.eta}
    if lda_cfg.k_grid or lda_cfg.alpha_grid or lda_cfg.eta_grid:
        result = coherence.grid_search(
            nonempty_docs,
            k_range=lda_cfg.k_grid or [lda_cfg.n_topics],
            alpha_grid=lda_cfg.alpha_grid or [lda_cfg.alpha],
            eta_grid=lda_cfg.eta_grid or [lda_cfg.eta],
            validation_fraction=config.coherence.validation_fraction,
            sweeps=lda_cfg.sweeps,
            seed=stage_seed(config.seed, "lda-tune"),
            vocab_size=len(vocab),
            strategy=lda_cfg.strategy,
            n_top=config.coherence.top_n,
            epsilon=config.coherence.epsilon,
            convention=config.coherence.convention,
        )
        _write(out_dir / "reports" / "grid_search.csv", result.to_csv())
        chosen = {
            "n_topics": result.best.n_topics,
            "alpha": result.best.alpha_spec,
            "eta": result.best.eta,
        }
        manifest["stages"]["lda_tune"] = {
            "strategy": result.strategy,
            "cells": len(result.table),
            "baseline": {
                "n_topics": result.baseline.n_topics,
                "alpha": str(result.baseline.alpha_spec),
                "eta": result.baseline.eta,
                "mean_coherence": result.baseline.mean_coherence,
            },
            "best": {
                "n_topics": result.best.n_topics,
                "alpha": str(result.best.alpha_spec),
                "eta": result.best.eta,
                "mean_coherence": result.best.mean_coherence,
            },
            "improvement_vs_baseline": result.improvement_vs_baseline,
        }

    # Final LDA model on the full nonempty corpus.
    model = train_lda_on_documents(
        nonempty_docs,
        vocab_size=len(vocab),
        n_topics=chosen["n_topics"],
        alpha_spec=chosen["alpha"],
        eta=chosen["eta"],
        sweeps=lda_cfg.sweeps,
        seed=stage_seed(config.seed, "lda-final"),
    )
    lda.save_model(model, out_dir / "models" / "lda.json", vocab_sha256=vocab.sha256())
    summaries = [
        lda.topic_top_words(model, k, vocab, n=config.coherence.top_n)
        for k in range(model.n_topics)
    ]
    _write(out_dir / "reports" / "topics.csv", lda.topics_to_csv(summaries))
    manifest["stages"]["lda"] = {
        "n_topics": model.n_topics,
        "alpha": str(chosen["alpha"]),
        "eta": chosen["eta"],
        "sweeps": lda_cfg.sweeps,
        "final_log_likelihood": model.ll_trace[-1] if model.ll_trace else None,
    }

    # Coherence of the final model on a held-out validation slice.
    _, val_docs = coherence.split_validation(
        nonempty_docs, config.coherence.validation_fraction, stage_seed(config.seed, "lda-tune")
    )
    coh_report = coherence.model_coherence(
        model, val_docs,
        n_top=config.coherence.top_n,
        epsilon=config.coherence.epsilon,
        convention=config.coherence.convention,
    )
    _write(out_dir / "reports" / "coherence.csv", coh_report.to_csv())
    manifest["stages"]["coherence"] = {
        "mean_coherence": coh_report.mean_coherence,
        "validation_docs": coh_report.n_validation_docs,
        "skipped_pairs": coh_report.skipped_pairs,
        "convention": coh_report.convention,
    }

    # Dominant topics and the topic-by-year heatmap (classified docs only).
    assignments = [
        (lda.dominant_topic(model, doc), doc.timestamp)
        for doc in nonempty_docs
    ]
    grid = analytics.topic_year_heatmap(
        assignments, model.n_topics, n_classes=config.analytics.n_classes
    )
    _write(out_dir / "reports" / "heatmap.csv", grid.to_csv())
    manifest["stages"]["heatmap"] = {
        "classified_documents": len(assignments),
        "years": grid.years,
    }

    # Sentiment: train on labeled data, predict over the filtered corpus.
    if config.input.labeled_sentiment:
        rows = lstm.load_labeled_csv(config.input.labeled_sentiment)
        sent_vocab, examples, dropped = prepare_labeled_dataset(rows, config.lstm.max_features)
        if dropped:
            warnings.append(f"{dropped} labeled examples empty after preprocessing; dropped")
        train_idx, holdout_idx = split_labeled(
            len(examples), config.lstm.holdout_fraction, stage_seed(config.seed, "lstm-split")
        )
        lstm_config = lstm.LstmConfig(
            d_embed=config.lstm.d_embed,
            d_hidden=config.lstm.d_hidden,
            learning_rate=config.lstm.learning_rate,
            batch_size=config.lstm.batch_size,
            epochs=config.lstm.epochs,
            max_features=config.lstm.max_features,
            clip_norm=config.lstm.clip_norm,
            seed=stage_seed(config.seed, "lstm"),
        )
        classifier = lstm.train([examples[i] for i in train_idx], lstm_config, vocab=sent_vocab)
        lstm.save_classifier(classifier, out_dir / "models" / "lstm.json")
        metrics_payload: dict = {"holdout_examples": len(holdout_idx)}
        if holdout_idx:
            holdout = [examples[i] for i in holdout_idx]
            preds = lstm.predict([ex.tokens for ex in holdout], classifier)
            metrics = lstm.evaluate(preds, [ex.label for ex in holdout])
            metrics_payload["metrics"] = metrics.to_dict()
        _write(
            out_dir / "reports" / "lstm_metrics.json",
            json.dumps(metrics_payload, indent=2, sort_keys=True) + "\n",
        )
        predictions = lstm.predict([r.text for r in filtered], classifier)
        _write(
            out_dir / "reports" / "predictions.csv",
            lstm.predictions_to_csv([r.id for r in filtered], predictions),
        )
        series = analytics.sentiment_series(
            [(p.polarity, r.created_at) for p, r in zip(predictions, filtered)]
        )
        _write(out_dir / "reports" / "sentiment_series.csv", series.to_csv())
        manifest["stages"]["sentiment"] = {
            "labeled_rows": len(rows),
            "train_examples": len(train_idx),
            "holdout_examples": len(holdout_idx),
            "dropped_empty": dropped,
            "prior_fallback_predictions": sum(1 for p in predictions if p.from_prior),
            "drop_months": [list(m) for m in series.drops],
        }
    else:
        manifest["stages"]["sentiment"] = {"skipped": "no labeled_sentiment input"}

    # Involver reports and volumes.
    reports = [
        analytics.active_users(filtered, k=config.analytics.top_k),
        analytics.mentioned_accounts(filtered, k=config.analytics.top_k),
        analytics.hashtag_stats(filtered, k=config.analytics.top_k),
    ]
    _write(out_dir / "reports" / "involvers.csv", analytics.involvers_to_csv(reports))
    _write(
        out_dir / "reports" / "involvers_overall.csv",
        analytics.overall_involvers_to_csv(reports),
    )
    _write(
        out_dir / "reports" / "volumes_raw.csv",
        analytics.volumes_to_csv(analytics.yearly_volume(raw)),
    )
    _write(
        out_dir / "reports" / "volumes_filtered.csv",
        analytics.volumes_to_csv(analytics.yearly_volume(filtered)),
    )

    manifest["warnings"] = warnings
    outputs = {}
    for file in sorted(out_dir.rglob("*")):
        if file.is_file() and file.name != "manifest.json":
            outputs[file.relative_to(out_dir).as_posix()] = _sha256_file(file)
    manifest["outputs"] = outputs
    _write(out_dir / "manifest.json", json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return PipelineResult(out_dir=out_dir, manifest=manifest, warnings=warnings)
