"""Command-line front end.

Exit codes: 0 success, 2 usage error, 3 input error, 4 runtime failure.
Failures print a one-line JSON error record to stderr so callers can parse
outcomes without scraping prose. Every randomized subcommand takes --seed
(default 0; required under --strict). OPINION_MINER_THREADS caps internal
parallelism where a stage supports it (grid search).
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from . import __version__
from . import analytics
from . import ingest
from . import lda as lda_mod
from . import lstm as lstm_mod
from . import synth as synth_mod
from . import textproc
from .coherence import (
    PAPER_CONVENTION,
    UMASS_CONVENTION,
    grid_search,
    model_coherence,
)
from .config import load_config, validate_config
from .errors import InputError, OpinionMinerError
from .pipeline import (
    build_corpus_documents,
    prepare_labeled_dataset,
    run_pipeline,
    split_labeled,
    stage_seed,
    train_lda_on_documents,
)

__all__ = ["main", "entry", "cli"]


def _error_record(kind: str, message: str) -> None:
    sys.stderr.write(json.dumps({"error": {"type": kind, "message": message}}) + "\n")


def main(argv: list[str] | None = None) -> int:
    """Run the CLI programmatically; returns the exit code."""
    try:
        cli.main(args=argv, prog_name="opinion-miner", standalone_mode=False)
        return 0
    except click.exceptions.Exit as exc:
        return int(exc.exit_code)
    except click.exceptions.Abort:
        return 2
    except click.UsageError as exc:
        _error_record("usage", exc.format_message())
        return 2
    except click.ClickException as exc:
        _error_record("usage", exc.format_message())
        return 2
    except (InputError, FileNotFoundError) as exc:
        _error_record("input", str(exc))
        return 3
    except OpinionMinerError as exc:
        _error_record("runtime", str(exc))
        return 4
    except Exception as exc:  # pragma: no cover - last-resort mapping
        _error_record("runtime", f"{type(exc).__name__}: {exc}")
        return 4


def entry() -> None:
    sys.exit(main())


@click.group(name="opinion-miner")
@click.version_option(__version__)
@click.option("--strict", is_flag=True, help="Abort on malformed input lines; require explicit --seed.")
@click.pass_context
def cli(ctx: click.Context, strict: bool) -> None:
    """Social-media opinion mining: filtering, topics, sentiment, reports."""
    ctx.ensure_object(dict)
    ctx.obj["strict"] = strict


def _strict(ctx: click.Context) -> bool:
    return bool(ctx.obj and ctx.obj.get("strict"))


def _resolve_seed(ctx: click.Context, seed: int | None) -> int:
    if seed is None:
        if _strict(ctx):
            raise click.UsageError("--seed is required in --strict mode")
        return 0
    return seed


def _parse_alpha(value: str) -> float | str:
    if value == "asymmetric":
        return "asymmetric"
    try:
        return float(value)
    except ValueError:
        raise click.UsageError(f"--alpha must be a number or 'asymmetric', got {value!r}") from None


def _parse_grid(value: str, kind: str):
    items = [v.strip() for v in value.split(",") if v.strip()]
    if not items:
        raise click.UsageError(f"empty {kind} grid")
    if kind == "k":
        try:
            return [int(v) for v in items]
        except ValueError:
            raise click.UsageError(f"--k-grid entries must be integers, got {value!r}") from None
    if kind == "alpha":
        return [_parse_alpha(v) for v in items]
    try:
        return [float(v) for v in items]
    except ValueError:
        raise click.UsageError(f"--eta-grid entries must be numbers, got {value!r}") from None


def _load_records(path: str, strict: bool) -> ingest.ParseResult:
    result = ingest.load_corpus(path, strict=strict)
    if result.skipped:
        sys.stderr.write(f"skipped {len(result.skipped)} malformed line(s)\n")
    return result


def _load_stopwords(path: str | None) -> frozenset[str]:
    return textproc.load_stopwords(path) if path else textproc.default_stopwords()


def _docs_from_corpus(
    input_path: str,
    strict: bool,
    min_df: int,
    max_features: int | None,
    stopwords_path: str | None,
):
    records = _load_records(input_path, strict).records
    if not records:
        raise InputError(f"no parseable records in {input_path}")
    vocab, nonempty, all_docs = build_corpus_documents(
        records, min_df, max_features, _load_stopwords(stopwords_path)
    )
    return records, vocab, nonempty, all_docs


# ---------------------------------------------------------------- filtering

@cli.command("filter")
@click.option("--input", "input_path", required=True, type=click.Path())
@click.option("--keywords", "keywords_path", required=True, type=click.Path())
@click.option("--include", "include_path", type=click.Path(), default=None)
@click.option("--exclude", "exclude_path", type=click.Path(), default=None)
@click.option("--out", "out_path", required=True, type=click.Path())
@click.option("--report", "report_path", type=click.Path(), default=None)
@click.pass_context
def filter_cmd(ctx, input_path, keywords_path, include_path, exclude_path, out_path, report_path):
    """Keyword and locality filtering with a stage-count report."""
    parse_result = _load_records(input_path, _strict(ctx))
    raw = parse_result.records
    if not raw:
        raise InputError(f"no parseable records in {input_path}")
    keywords = ingest.read_term_list(keywords_path)
    stages = [("raw", raw)]
    current = ingest.keyword_filter(raw, keywords)
    stages.append(("keyword", current))
    include_terms = ingest.read_term_list(include_path) if include_path else []
    exclude_terms = ingest.read_term_list(exclude_path) if exclude_path else []
    if include_terms or exclude_terms:
        current = ingest.locality_filter(current, include_terms, exclude_terms)
        stages.append(("locality", current))
    Path(out_path).parent.mkdir(parents=True, exist_ok=True)
    ingest.save_corpus(current, out_path)
    if report_path:
        report = ingest.summarize_stages(stages, malformed_lines=len(parse_result.skipped))
        Path(report_path).parent.mkdir(parents=True, exist_ok=True)
        report.save(report_path)
    click.echo(f"kept {len(current)} of {len(raw)} records -> {out_path}")


@cli.command("stats")
@click.option("--input", "input_path", required=True, type=click.Path())
@click.option("--out", "out_path", type=click.Path(), default=None)
@click.pass_context
def stats_cmd(ctx, input_path, out_path):
    """Corpus summary: counts, users, date range, entities."""
    result = _load_records(input_path, _strict(ctx))
    records = result.records
    payload = {
        "records": len(records),
        "users": len({r.user for r in records}),
        "malformed_lines": len(result.skipped),
        "mentions": sum(len(r.mentions) for r in records),
        "hashtags": sum(len(r.hashtags) for r in records),
        "first": min((r.created_at for r in records), default=None),
        "last": max((r.created_at for r in records), default=None),
    }
    for key in ("first", "last"):
        if payload[key] is not None:
            payload[key] = payload[key].strftime("%Y-%m-%dT%H:%M:%SZ")
    text = json.dumps(payload, indent=2, sort_keys=True) + "\n"
    if out_path:
        Path(out_path).write_text(text, encoding="utf-8")
    else:
        click.echo(text, nl=False)


# ---------------------------------------------------------------- topics

_TOKENIZER_OPTIONS = [
    click.option("--min-df", default=5, show_default=True, type=int),
    click.option("--max-features", default=None, type=int),
    click.option("--stopwords", "stopwords_path", default=None, type=click.Path()),
]


def _with_options(options):
    def wrap(fn):
        for opt in reversed(options):
            fn = opt(fn)
        return fn
    return wrap


@cli.command("lda-train")
@click.option("--input", "input_path", required=True, type=click.Path())
@click.option("--out-model", required=True, type=click.Path())
@click.option("--out-vocab", default=None, type=click.Path())
@click.option("--topics-out", default=None, type=click.Path())
@click.option("--k", "n_topics", default=10, show_default=True, type=int)
@click.option("--alpha", default="0.01", show_default=True)
@click.option("--eta", default=0.1, show_default=True, type=float)
@click.option("--sweeps", default=lda_mod.DEFAULT_SWEEPS, show_default=True, type=int)
@click.option("--top-n", default=10, show_default=True, type=int)
@click.option("--seed", default=None, type=int)
@_with_options(_TOKENIZER_OPTIONS)
@click.pass_context
def lda_train_cmd(ctx, input_path, out_model, out_vocab, topics_out, n_topics, alpha,
                  eta, sweeps, top_n, seed, min_df, max_features, stopwords_path):
    """Train an LDA topic model on a filtered corpus."""
    seed = _resolve_seed(ctx, seed)
    _, vocab, nonempty, all_docs = _docs_from_corpus(
        input_path, _strict(ctx), min_df, max_features, stopwords_path
    )
    n_empty = len(all_docs) - len(nonempty)
    if n_empty:
        sys.stderr.write(f"{n_empty} documents empty after preprocessing; excluded\n")
    model = train_lda_on_documents(
        nonempty, vocab_size=len(vocab), n_topics=n_topics,
        alpha_spec=_parse_alpha(alpha), eta=eta, sweeps=sweeps, seed=seed,
    )
    Path(out_model).parent.mkdir(parents=True, exist_ok=True)
    lda_mod.save_model(model, out_model, vocab_sha256=vocab.sha256())
    if out_vocab:
        Path(out_vocab).parent.mkdir(parents=True, exist_ok=True)
        vocab.save(out_vocab)
    if topics_out:
        summaries = [
            lda_mod.topic_top_words(model, k, vocab, n=top_n) for k in range(model.n_topics)
        ]
        Path(topics_out).parent.mkdir(parents=True, exist_ok=True)
        Path(topics_out).write_text(lda_mod.topics_to_csv(summaries), encoding="utf-8")
    click.echo(
        f"trained K={model.n_topics} on {len(nonempty)} docs, "
        f"final log-likelihood {model.ll_trace[-1]:.2f} -> {out_model}"
    )


@cli.command("lda-tune")
@click.option("--input", "input_path", required=True, type=click.Path())
@click.option("--out", "out_path", required=True, type=click.Path())
@click.option("--k-grid", required=True)
@click.option("--alpha-grid", default=None)
@click.option("--eta-grid", default=None)
@click.option("--validation-fraction", default=0.2, show_default=True, type=float)
@click.option("--sweeps", default=200, show_default=True, type=int)
@click.option("--strategy", default="staged", show_default=True,
              type=click.Choice(["staged", "full"]))
@click.option("--baseline", default="10,0.01,0.1", show_default=True,
              help="Baseline cell as K,alpha,eta.")
@click.option("--top-n", default=10, show_default=True, type=int)
@click.option("--epsilon", default=1e-12, show_default=True, type=float)
@click.option("--umass-convention", is_flag=True,
              help="Divide by the earlier-ranked word's count instead of the later one's.")
@click.option("--seed", default=None, type=int)
@_with_options(_TOKENIZER_OPTIONS)
@click.pass_context
def lda_tune_cmd(ctx, input_path, out_path, k_grid, alpha_grid, eta_grid,
                 validation_fraction, sweeps, strategy, baseline, top_n, epsilon,
                 umass_convention, seed, min_df, max_features, stopwords_path):
    """Coherence-driven grid search over LDA hyperparameters."""
    seed = _resolve_seed(ctx, seed)
    _, vocab, nonempty, _ = _docs_from_corpus(
        input_path, _strict(ctx), min_df, max_features, stopwords_path
    )
    ks = _parse_grid(k_grid, "k")
    alphas = _parse_grid(alpha_grid, "alpha") if alpha_grid else [0.01]
    etas = _parse_grid(eta_grid, "eta") if eta_grid else [0.1]
    base_parts = [p.strip() for p in baseline.split(",")]
    if len(base_parts) != 3:
        raise click.UsageError(f"--baseline must be K,alpha,eta, got {baseline!r}")
    base = (int(base_parts[0]), _parse_alpha(base_parts[1]), float(base_parts[2]))
    result = grid_search(
        nonempty, k_range=ks, alpha_grid=alphas, eta_grid=etas,
        validation_fraction=validation_fraction, sweeps=sweeps, seed=seed,
        vocab_size=len(vocab), strategy=strategy, n_top=top_n, epsilon=epsilon,
        convention=UMASS_CONVENTION if umass_convention else PAPER_CONVENTION,
        baseline=base,
    )
    Path(out_path).parent.mkdir(parents=True, exist_ok=True)
    result.save(out_path)
    click.echo(
        f"best K={result.best.n_topics} alpha={result.best.alpha_label} "
        f"eta={result.best.eta!r} coherence={result.best.mean_coherence:.4f} "
        f"({result.improvement_vs_baseline:+.1%} vs baseline) -> {out_path}"
    )


@cli.command("coherence")
@click.option("--model", "model_path", required=True, type=click.Path())
@click.option("--vocab", "vocab_path", required=True, type=click.Path())
@click.option("--input", "input_path", required=True, type=click.Path())
@click.option("--out", "out_path", default=None, type=click.Path())
@click.option("--top-n", default=10, show_default=True, type=int)
@click.option("--epsilon", default=1e-12, show_default=True, type=float)
@click.option("--umass-convention", is_flag=True)
@click.pass_context
def coherence_cmd(ctx, model_path, vocab_path, input_path, out_path, top_n,
                  epsilon, umass_convention):
    """Per-topic coherence of a trained model on a validation corpus."""
    vocab = textproc.Vocabulary.load(vocab_path)
    model = lda_mod.load_model(model_path, expect_vocab_sha256=vocab.sha256())
    records = _load_records(input_path, _strict(ctx)).records
    docs = [d for d in textproc.to_documents(records, vocab) if not d.empty]
    if not docs:
        raise InputError("no nonempty validation documents")
    report = model_coherence(
        model, docs, n_top=top_n, epsilon=epsilon,
        convention=UMASS_CONVENTION if umass_convention else PAPER_CONVENTION,
    )
    if out_path:
        Path(out_path).parent.mkdir(parents=True, exist_ok=True)
        report.save(out_path)
    else:
        click.echo(report.to_csv(), nl=False)
    sys.stderr.write(
        f"mean coherence {report.mean_coherence:.4f} over {model.n_topics} topics "
        f"({report.skipped_pairs} pairs skipped)\n"
    )


# ---------------------------------------------------------------- sentiment

@cli.command("sentiment-train")
@click.option("--labeled", "labeled_path", required=True, type=click.Path())
@click.option("--out", "out_path", required=True, type=click.Path())
@click.option("--metrics-out", default=None, type=click.Path())
@click.option("--d-embed", default=128, show_default=True, type=int)
@click.option("--d-hidden", default=196, show_default=True, type=int)
@click.option("--learning-rate", default=0.05, show_default=True, type=float)
@click.option("--batch-size", default=32, show_default=True, type=int)
@click.option("--epochs", default=7, show_default=True, type=int)
@click.option("--max-features", default=2000, show_default=True, type=int)
@click.option("--holdout", default=0.0, show_default=True, type=float,
              help="Fraction held out for evaluation; 0 trains on everything.")
@click.option("--seed", default=None, type=int)
@click.pass_context
def sentiment_train_cmd(ctx, labeled_path, out_path, metrics_out, d_embed, d_hidden,
                        learning_rate, batch_size, epochs, max_features, holdout, seed):
    """Train the LSTM sentiment classifier on a text,label CSV."""
    seed = _resolve_seed(ctx, seed)
    rows = lstm_mod.load_labeled_csv(labeled_path)
    vocab, examples, dropped = prepare_labeled_dataset(rows, max_features)
    if dropped:
        sys.stderr.write(f"{dropped} labeled examples empty after preprocessing; dropped\n")
    config = lstm_mod.LstmConfig(
        d_embed=d_embed, d_hidden=d_hidden, learning_rate=learning_rate,
        batch_size=batch_size, epochs=epochs, max_features=max_features, seed=seed,
    )
    train_idx, holdout_idx = split_labeled(len(examples), holdout, seed)
    classifier = lstm_mod.train([examples[i] for i in train_idx], config, vocab=vocab)
    Path(out_path).parent.mkdir(parents=True, exist_ok=True)
    lstm_mod.save_classifier(classifier, out_path)
    last = classifier.epoch_log[-1]
    click.echo(
        f"trained on {len(train_idx)} examples, final epoch loss {last.mean_loss:.4f} "
        f"accuracy {last.accuracy:.3f} -> {out_path}"
    )
    if holdout_idx:
        held = [examples[i] for i in holdout_idx]
        preds = lstm_mod.predict([ex.tokens for ex in held], classifier)
        metrics = lstm_mod.evaluate(preds, [ex.label for ex in held])
        text = json.dumps(metrics.to_dict(), indent=2, sort_keys=True) + "\n"
        if metrics_out:
            Path(metrics_out).parent.mkdir(parents=True, exist_ok=True)
            Path(metrics_out).write_text(text, encoding="utf-8")
        else:
            click.echo(text, nl=False)


@cli.command("sentiment-eval")
@click.option("--model", "model_path", required=True, type=click.Path())
@click.option("--labeled", "labeled_path", required=True, type=click.Path())
@click.option("--out", "out_path", default=None, type=click.Path())
def sentiment_eval_cmd(model_path, labeled_path, out_path):
    """Evaluate a trained classifier against labeled data."""
    classifier = lstm_mod.load_classifier(model_path)
    rows = lstm_mod.load_labeled_csv(labeled_path)
    preds = lstm_mod.predict([text for text, _ in rows], classifier)
    metrics = lstm_mod.evaluate(preds, [label for _, label in rows])
    text = json.dumps(metrics.to_dict(), indent=2, sort_keys=True) + "\n"
    if out_path:
        Path(out_path).parent.mkdir(parents=True, exist_ok=True)
        Path(out_path).write_text(text, encoding="utf-8")
    else:
        click.echo(text, nl=False)


@cli.command("sentiment-predict")
@click.option("--model", "model_path", required=True, type=click.Path())
@click.option("--input", "input_path", required=True, type=click.Path())
@click.option("--out", "out_path", required=True, type=click.Path())
@click.pass_context
def sentiment_predict_cmd(ctx, model_path, input_path, out_path):
    """Predict polarity for every record in a corpus."""
    classifier = lstm_mod.load_classifier(model_path)
    records = _load_records(input_path, _strict(ctx)).records
    preds = lstm_mod.predict([r.text for r in records], classifier)
    Path(out_path).parent.mkdir(parents=True, exist_ok=True)
    Path(out_path).write_text(
        lstm_mod.predictions_to_csv([r.id for r in records], preds), encoding="utf-8"
    )
    n_prior = sum(1 for p in preds if p.from_prior)
    click.echo(f"predicted {len(preds)} records ({n_prior} prior fallbacks) -> {out_path}")


# ---------------------------------------------------------------- reports

@cli.group("report")
def report_group() -> None:
    """Figure-data exports: heatmap, series, involvers, volumes."""


@report_group.command("heatmap")
@click.option("--model", "model_path", required=True, type=click.Path())
@click.option("--vocab", "vocab_path", required=True, type=click.Path())
@click.option("--input", "input_path", required=True, type=click.Path())
@click.option("--out", "out_path", required=True, type=click.Path())
@click.option("--n-classes", default=5, show_default=True, type=int)
@click.pass_context
def report_heatmap_cmd(ctx, model_path, vocab_path, input_path, out_path, n_classes):
    """Dominant-topic counts per year with quantile classes."""
    vocab = textproc.Vocabulary.load(vocab_path)
    model = lda_mod.load_model(model_path, expect_vocab_sha256=vocab.sha256())
    records = _load_records(input_path, _strict(ctx)).records
    docs = [d for d in textproc.to_documents(records, vocab) if not d.empty]
    assignments = [(lda_mod.dominant_topic(model, d), d.timestamp) for d in docs]
    grid = analytics.topic_year_heatmap(assignments, model.n_topics, n_classes=n_classes)
    Path(out_path).parent.mkdir(parents=True, exist_ok=True)
    grid.save(out_path)
    click.echo(f"classified {len(assignments)} docs over {len(grid.years)} years -> {out_path}")


@report_group.command("series")
@click.option("--predictions", "predictions_path", required=True, type=click.Path())
@click.option("--input", "input_path", required=True, type=click.Path())
@click.option("--out", "out_path", required=True, type=click.Path())
@click.pass_context
def report_series_cmd(ctx, predictions_path, input_path, out_path):
    """Monthly polarity series from a predictions CSV joined on record ids."""
    import csv as csv_module

    records = {r.id: r for r in _load_records(input_path, _strict(ctx)).records}
    pairs = []
    path = Path(predictions_path)
    if not path.exists():
        raise InputError(f"predictions file not found: {path}")
    with path.open(encoding="utf-8", newline="") as fh:
        reader = csv_module.DictReader(fh)
        required = {"id", "polarity"}
        if reader.fieldnames is None or not required.issubset(reader.fieldnames):
            raise InputError(f"predictions CSV must have columns {sorted(required)}")
        for row in reader:
            rec = records.get(row["id"])
            if rec is None:
                raise InputError(f"prediction id {row['id']!r} not in corpus")
            pairs.append((int(row["polarity"]), rec.created_at))
    series = analytics.sentiment_series(pairs)
    Path(out_path).parent.mkdir(parents=True, exist_ok=True)
    series.save(out_path)
    drop_txt = ", ".join(f"{y}-{m:02d}" for y, m in series.drops) or "none"
    click.echo(f"{len(series.months)} months, drop months: {drop_txt} -> {out_path}")


@report_group.command("involvers")
@click.option("--input", "input_path", required=True, type=click.Path())
@click.option("--out", "out_path", required=True, type=click.Path())
@click.option("--overall-out", default=None, type=click.Path())
@click.option("--k", default=10, show_default=True, type=int)
@click.option("--overall-mode", default="summed-shares", show_default=True,
              type=click.Choice(["summed-shares", "global-share"]))
@click.pass_context
def report_involvers_cmd(ctx, input_path, out_path, overall_out, k, overall_mode):
    """Active users, mentioned accounts, and hashtags per year."""
    records = _load_records(input_path, _strict(ctx)).records
    reports = [
        analytics.active_users(records, k=k, overall_mode=overall_mode),
        analytics.mentioned_accounts(records, k=k, overall_mode=overall_mode),
        analytics.hashtag_stats(records, k=k, overall_mode=overall_mode),
    ]
    Path(out_path).parent.mkdir(parents=True, exist_ok=True)
    Path(out_path).write_text(analytics.involvers_to_csv(reports), encoding="utf-8")
    if overall_out:
        Path(overall_out).parent.mkdir(parents=True, exist_ok=True)
        Path(overall_out).write_text(
            analytics.overall_involvers_to_csv(reports), encoding="utf-8"
        )
    click.echo(f"involver reports -> {out_path}")


@report_group.command("volumes")
@click.option("--input", "input_path", required=True, type=click.Path())
@click.option("--out", "out_path", required=True, type=click.Path())
@click.pass_context
def report_volumes_cmd(ctx, input_path, out_path):
    """Tweet counts per calendar year."""
    records = _load_records(input_path, _strict(ctx)).records
    volumes = analytics.yearly_volume(records)
    Path(out_path).parent.mkdir(parents=True, exist_ok=True)
    Path(out_path).write_text(analytics.volumes_to_csv(volumes), encoding="utf-8")
    click.echo(f"{len(volumes)} years -> {out_path}")


# ---------------------------------------------------------------- synthetic

@cli.group("synth")
def synth_group() -> None:
    """Seeded synthetic-data generators."""


@synth_group.command("lda")
@click.option("--out", "out_path", required=True, type=click.Path())
@click.option("--truth", "truth_path", default=None, type=click.Path())
@click.option("--k", "n_topics", default=3, show_default=True, type=int)
@click.option("--vocab-size", default=30, show_default=True, type=int)
@click.option("--n-docs", default=500, show_default=True, type=int)
@click.option("--doc-len", default=50, show_default=True, type=int)
@click.option("--alpha", default=0.2, show_default=True, type=float)
@click.option("--anchors", default=10, show_default=True, type=int)
@click.option("--anchor-mass", default=0.08, show_default=True, type=float)
@click.option("--seed", default=None, type=int)
@click.pass_context
def synth_lda_cmd(ctx, out_path, truth_path, n_topics, vocab_size, n_docs, doc_len,
                  alpha, anchors, anchor_mass, seed):
    """Anchor-topic LDA corpus, emitted as pipeline-compatible records."""
    seed = _resolve_seed(ctx, seed)
    spec = synth_mod.SynthLdaSpec(
        n_topics=n_topics, vocab_size=vocab_size, n_docs=n_docs, doc_len=doc_len,
        doc_topic_alpha=alpha, anchors_per_topic=anchors, anchor_mass=anchor_mass,
        seed=seed,
    )
    corpus = synth_mod.generate_lda_corpus(spec)
    records = [
        ingest.TweetRecord(
            id=doc.source_id, created_at=doc.timestamp, user="synth",
            text=" ".join(f"w{t}" for t in doc.tokens), mentions=(), hashtags=(),
        )
        for doc in corpus.docs
    ]
    Path(out_path).parent.mkdir(parents=True, exist_ok=True)
    ingest.save_corpus(records, out_path)
    if truth_path:
        truth = {
            "spec": {
                "n_topics": n_topics, "vocab_size": vocab_size, "n_docs": n_docs,
                "doc_len": doc_len, "doc_topic_alpha": alpha,
                "anchors_per_topic": anchors, "anchor_mass": anchor_mass, "seed": seed,
            },
            "anchor_ids": corpus.anchor_ids,
            "anchor_words": [[f"w{i}" for i in ids] for ids in corpus.anchor_ids],
            "phi": corpus.phi.tolist(),
            "theta": corpus.theta.tolist(),
        }
        Path(truth_path).parent.mkdir(parents=True, exist_ok=True)
        Path(truth_path).write_text(json.dumps(truth, sort_keys=True), encoding="utf-8")
    click.echo(f"{n_docs} synthetic docs -> {out_path}")


@synth_group.command("sentiment")
@click.option("--out", "out_path", required=True, type=click.Path())
@click.option("--truth", "truth_path", default=None, type=click.Path())
@click.option("--n", default=1000, show_default=True, type=int)
@click.option("--noise", default=0.0, show_default=True, type=float)
@click.option("--seed", default=None, type=int)
@click.pass_context
def synth_sentiment_cmd(ctx, out_path, truth_path, n, noise, seed):
    """Separable sentiment corpus as a text,label CSV."""
    import csv as csv_module

    seed = _resolve_seed(ctx, seed)
    corpus = synth_mod.generate_sentiment_corpus(n, noise_rate=noise, seed=seed)
    Path(out_path).parent.mkdir(parents=True, exist_ok=True)
    with Path(out_path).open("w", encoding="utf-8", newline="") as fh:
        writer = csv_module.writer(fh, lineterminator="\n")
        writer.writerow(["text", "label"])
        for words, example in zip(corpus.texts, corpus.examples):
            writer.writerow([" ".join(words), example.label])
    if truth_path:
        truth = {
            "n": n, "noise_rate": noise, "seed": seed,
            "true_labels": corpus.true_labels, "flipped": corpus.flipped,
        }
        Path(truth_path).parent.mkdir(parents=True, exist_ok=True)
        Path(truth_path).write_text(json.dumps(truth, sort_keys=True), encoding="utf-8")
    click.echo(f"{n} labeled examples ({len(corpus.flipped)} flipped) -> {out_path}")


@synth_group.command("stream")
@click.option("--out", "out_path", required=True, type=click.Path())
@click.option("--truth", "truth_path", default=None, type=click.Path())
@click.option("--n-tweets", default=300, show_default=True, type=int)
@click.option("--n-users", default=40, show_default=True, type=int)
@click.option("--start", default="2017-01-01T00:00:00Z", show_default=True)
@click.option("--end", default="2020-12-31T00:00:00Z", show_default=True)
@click.option("--keyword-rate", default=0.3, show_default=True, type=float)
@click.option("--include-rate", default=0.6, show_default=True, type=float)
@click.option("--exclude-rate", default=0.2, show_default=True, type=float)
@click.option("--seed", default=None, type=int)
@click.pass_context
def synth_stream_cmd(ctx, out_path, truth_path, n_tweets, n_users, start, end,
                     keyword_rate, include_rate, exclude_rate, seed):
    """Tweet stream with planted keyword/locality/entity structure."""
    seed = _resolve_seed(ctx, seed)
    spec = synth_mod.StreamSpec(
        n_tweets=n_tweets, n_users=n_users,
        start=ingest.parse_timestamp(start), end=ingest.parse_timestamp(end),
        keyword_rate=keyword_rate, include_rate=include_rate,
        exclude_rate=exclude_rate, seed=seed,
    )
    sample = synth_mod.generate_tweet_stream(spec)
    Path(out_path).parent.mkdir(parents=True, exist_ok=True)
    ingest.save_corpus(sample.records, out_path)
    if truth_path:
        truth = {
            "n_tweets": n_tweets, "n_users": n_users, "seed": seed,
            "planted": [
                {
                    "id": t.id, "has_keyword": t.has_keyword, "has_include": t.has_include,
                    "has_exclude": t.has_exclude, "topic": t.topic, "sentiment": t.sentiment,
                }
                for t in sample.truth
            ],
        }
        Path(truth_path).parent.mkdir(parents=True, exist_ok=True)
        Path(truth_path).write_text(json.dumps(truth, sort_keys=True), encoding="utf-8")
    click.echo(f"{len(sample.records)} records -> {out_path}")


# ---------------------------------------------------------------- pipeline

@cli.command("pipeline")
@click.option("--config", "config_path", required=True, type=click.Path())
@click.option("--seed", default=None, type=int, help="Overrides the config seed.")
@click.option("--out-dir", default=None, type=click.Path(), help="Overrides the config output_dir.")
@click.pass_context
def pipeline_cmd(ctx, config_path, seed, out_dir):
    """Run the full chain: filter, vocabulary, LDA, coherence, sentiment, reports."""
    config = load_config(config_path)
    if seed is not None:
        config.seed = seed
    elif _strict(ctx):
        raise click.UsageError("--seed is required in --strict mode")
    if out_dir is not None:
        config.output_dir = out_dir
        validate_config(config)
    result = run_pipeline(config, strict=_strict(ctx))
    for warning in result.warnings:
        sys.stderr.write(warning + "\n")
    click.echo(f"pipeline complete -> {result.out_dir}")
