"""Pipeline wiring: stage seeds, dataset prep, and end-to-end runs."""

import csv
import hashlib
import json
from datetime import datetime, timezone

import pytest

from opinion_miner import ingest
from opinion_miner.config import PipelineConfig, config_hash, load_config
from opinion_miner.errors import InputError
from opinion_miner.pipeline import (
    STAGE_SEED_NAMES,
    build_corpus_documents,
    prepare_labeled_dataset,
    run_pipeline,
    split_labeled,
    stage_seed,
)
from opinion_miner.seeding import derive_seed, make_rng
from opinion_miner.synth import (
    StreamSpec,
    generate_sentiment_corpus,
    generate_tweet_stream,
)
from opinion_miner.textproc import default_stopwords


def _fast_sections():
    return (
        "[tokenizer]\n"
        "min_df = 2\n"
        "\n"
        "[lda]\n"
        "n_topics = 2\n"
        "sweeps = 10\n"
        "\n"
        "[lstm]\n"
        "d_embed = 4\n"
        "d_hidden = 5\n"
        "epochs = 1\n"
        "batch_size = 8\n"
    )


def _stage_dir(tmp_path, with_sentiment=False, extra="", out_dir="out"):
    sample = generate_tweet_stream(StreamSpec(n_tweets=120, seed=11))
    ingest.save_corpus(sample.records, tmp_path / "stream.jsonl")
    body = (
        f'output_dir = "{out_dir}"\n'
        "seed = 3\n"
        "\n"
        "[input]\n"
        'corpus = "stream.jsonl"\n'
    )
    if with_sentiment:
        corpus = generate_sentiment_corpus(24, seed=2)
        lines = ["text,label"]
        for words, ex in zip(corpus.texts, corpus.examples):
            lines.append(f"{' '.join(words)},{ex.label}")
        (tmp_path / "labeled.csv").write_text("\n".join(lines) + "\n", encoding="utf-8")
        body += 'labeled_sentiment = "labeled.csv"\n'
    body += "\n" + _fast_sections() + extra
    config_path = tmp_path / "run.toml"
    config_path.write_text(body, encoding="utf-8")
    return config_path


class TestStageSeeds:
    def test_names_and_derivation(self):
        assert STAGE_SEED_NAMES == ("lda-final", "lda-tune", "lstm", "lstm-split")
        for name in STAGE_SEED_NAMES:
            assert stage_seed(5, name) == derive_seed(5, name)

    def test_distinct_per_stage(self):
        seeds = {stage_seed(0, name) for name in STAGE_SEED_NAMES}
        assert len(seeds) == len(STAGE_SEED_NAMES)

    def test_unknown_stage_rejected(self):
        with pytest.raises(ValueError):
            stage_seed(0, "lda")


class TestSplitLabeled:
    def test_matches_seeded_permutation(self):
        train_idx, holdout = split_labeled(10, 0.3, 4)
        perm = make_rng(4).permutation(10)
        assert holdout == sorted(int(i) for i in perm[:3])
        assert train_idx == sorted(int(i) for i in perm[3:])

    def test_partition(self):
        train_idx, holdout = split_labeled(25, 0.2, 0)
        assert sorted(train_idx + holdout) == list(range(25))
        assert len(holdout) == 5

    def test_zero_holdout(self):
        train_idx, holdout = split_labeled(8, 0.0, 0)
        assert holdout == []
        assert train_idx == list(range(8))

    def test_deterministic(self):
        assert split_labeled(30, 1 / 3, 42) == split_labeled(30, 1 / 3, 42)

    def test_fraction_bounds(self):
        with pytest.raises(InputError):
            split_labeled(10, 1.0, 0)
        with pytest.raises(InputError):
            split_labeled(10, -0.1, 0)


class TestPrepareLabeledDataset:
    def test_function_words_kept_and_min_df_one(self):
        rows = [("the service is great", 1), ("the service is bad", 0)]
        vocab, examples, dropped = prepare_labeled_dataset(rows, max_features=100)
        assert "the" in vocab.token_to_id
        assert "is" in vocab.token_to_id
        assert dropped == 0
        assert [ex.label for ex in examples] == [1, 0]
        assert all(len(ex.tokens) == 4 for ex in examples)

    def test_empty_after_tokenize_dropped_and_counted(self):
        rows = [("great", 1), ("!!!", 0), ("bad", 0)]
        vocab, examples, dropped = prepare_labeled_dataset(rows, max_features=100)
        assert dropped == 1
        assert len(examples) == 2

    def test_max_features_caps_vocab(self):
        rows = [(f"word{i} filler", i % 2) for i in range(10)]
        vocab, examples, _ = prepare_labeled_dataset(rows, max_features=3)
        assert len(vocab) == 3


class TestBuildCorpusDocuments:
    def test_returns_empty_and_nonempty_views(self):
        records = [
            ingest.TweetRecord(
                id=str(i), created_at=datetime(2019, 1, 1, tzinfo=timezone.utc),
                user="u", text=text, mentions=(), hashtags=(),
            )
            for i, text in enumerate(["toll plan toll", "toll zone", "@only_mention"])
        ]
        vocab, nonempty, all_docs = build_corpus_documents(
            records, min_df=2, max_features=None, stopwords=default_stopwords()
        )
        assert len(all_docs) == 3
        assert len(nonempty) == 2
        assert "toll" in vocab.token_to_id


class TestRunPipeline:
    def test_writes_documented_tree(self, tmp_path):
        config = load_config(_stage_dir(tmp_path))
        result = run_pipeline(config)
        out = result.out_dir
        for rel in (
            "filtered/corpus.jsonl",
            "models/vocabulary.json",
            "models/lda.json",
            "reports/filter_report.csv",
            "reports/topics.csv",
            "reports/coherence.csv",
            "reports/heatmap.csv",
            "reports/involvers.csv",
            "reports/involvers_overall.csv",
            "reports/volumes_raw.csv",
            "reports/volumes_filtered.csv",
            "manifest.json",
        ):
            assert (out / rel).is_file(), rel

    def test_manifest_structure(self, tmp_path):
        config = load_config(_stage_dir(tmp_path))
        result = run_pipeline(config)
        manifest = json.loads((result.out_dir / "manifest.json").read_text(encoding="utf-8"))
        assert manifest["version"] == 1
        assert manifest["config_hash"] == config_hash(config)
        assert manifest["seed"] == 3
        assert manifest["stage_seeds"] == {
            name: stage_seed(3, name) for name in STAGE_SEED_NAMES
        }
        assert manifest["stages"]["filter"]["counts"]["raw"] == 120
        assert manifest["stages"]["sentiment"] == {"skipped": "no labeled_sentiment input"}

    def test_manifest_output_hashes_verify(self, tmp_path):
        config = load_config(_stage_dir(tmp_path))
        result = run_pipeline(config)
        manifest = json.loads((result.out_dir / "manifest.json").read_text(encoding="utf-8"))
        assert manifest["outputs"]
        for rel, digest in manifest["outputs"].items():
            data = (result.out_dir / rel).read_bytes()
            assert hashlib.sha256(data).hexdigest() == digest

    def test_rerun_is_byte_identical_across_out_dirs(self, tmp_path):
        config_path = _stage_dir(tmp_path, with_sentiment=True)
        config_a = load_config(config_path)
        config_a.output_dir = str(tmp_path / "out_a")
        run_pipeline(config_a)
        config_b = load_config(config_path)
        config_b.output_dir = str(tmp_path / "out_b")
        run_pipeline(config_b)
        files_a = sorted(
            p.relative_to(tmp_path / "out_a").as_posix()
            for p in (tmp_path / "out_a").rglob("*") if p.is_file()
        )
        files_b = sorted(
            p.relative_to(tmp_path / "out_b").as_posix()
            for p in (tmp_path / "out_b").rglob("*") if p.is_file()
        )
        assert files_a == files_b
        for rel in files_a:
            a = (tmp_path / "out_a" / rel).read_bytes()
            b = (tmp_path / "out_b" / rel).read_bytes()
            assert a == b, f"{rel} differs between reruns"

    def test_sentiment_stage_outputs(self, tmp_path):
        config = load_config(_stage_dir(tmp_path, with_sentiment=True))
        result = run_pipeline(config)
        out = result.out_dir
        assert (out / "models" / "lstm.json").is_file()
        assert (out / "reports" / "lstm_metrics.json").is_file()
        with (out / "reports" / "predictions.csv").open(encoding="utf-8") as fh:
            rows = list(csv.DictReader(fh))
        with (out / "filtered" / "corpus.jsonl").open(encoding="utf-8") as fh:
            n_filtered = sum(1 for line in fh if line.strip())
        assert len(rows) == n_filtered
        assert all(row["polarity"] in ("0", "1") for row in rows)
        series_lines = (out / "reports" / "sentiment_series.csv").read_text(
            encoding="utf-8"
        ).splitlines()
        assert series_lines[0] == "year,month,positive,negative,ratio"
        manifest = json.loads((out / "manifest.json").read_text(encoding="utf-8"))
        sent = manifest["stages"]["sentiment"]
        assert sent["labeled_rows"] == 24
        assert sent["train_examples"] + sent["holdout_examples"] == 24

    def test_grid_search_best_matches_written_table(self, tmp_path):
        extra = "k_grid = [2, 3]\nalpha_grid = [0.01]\neta_grid = [0.1]\n"
        config_path = _stage_dir(tmp_path)
        body = config_path.read_text(encoding="utf-8")
        config_path.write_text(
            body.replace("[lda]\nn_topics = 2\nsweeps = 10\n",
                         "[lda]\nn_topics = 2\nsweeps = 10\n" + extra),
            encoding="utf-8",
        )
        config = load_config(config_path)
        assert config.lda.k_grid == [2, 3]
        result = run_pipeline(config)
        grid_path = result.out_dir / "reports" / "grid_search.csv"
        assert grid_path.is_file()
        with grid_path.open(encoding="utf-8") as fh:
            rows = list(csv.DictReader(fh))
        best_row = max(rows, key=lambda r: float(r["mean_coherence"]))
        tune = result.manifest["stages"]["lda_tune"]
        assert tune["best"]["mean_coherence"] == float(best_row["mean_coherence"])
        assert tune["best"]["n_topics"] == int(best_row["K"])
        assert result.manifest["stages"]["lda"]["n_topics"] == int(best_row["K"])

    def test_filters_wired_through(self, tmp_path):
        config_path = _stage_dir(tmp_path)
        (tmp_path / "kw.txt").write_text("congestion pricing\nroad charging\n", encoding="utf-8")
        (tmp_path / "inc.txt").write_text("nyc\nmanhattan\nbrooklyn\n", encoding="utf-8")
        body = config_path.read_text(encoding="utf-8")
        body = body.replace(
            'corpus = "stream.jsonl"\n',
            'corpus = "stream.jsonl"\nkeywords = "kw.txt"\ninclude_terms = "inc.txt"\n',
        )
        config_path.write_text(body, encoding="utf-8")
        config = load_config(config_path)
        result = run_pipeline(config)
        counts = result.manifest["stages"]["filter"]["counts"]
        assert set(counts) == {"raw", "keyword", "locality"}
        assert counts["raw"] >= counts["keyword"] >= counts["locality"] > 0
        report = (result.out_dir / "reports" / "filter_report.csv").read_text(encoding="utf-8")
        lines = report.splitlines()
        assert lines[0] == "stage,tweets,tweet_pct,users,user_pct"
        assert [line.split(",")[0] for line in lines[1:]] == ["raw", "keyword", "locality"]

    def test_unfilterable_corpus_raises(self, tmp_path):
        config_path = _stage_dir(tmp_path)
        (tmp_path / "kw.txt").write_text("zzzunmatchable\n", encoding="utf-8")
        body = config_path.read_text(encoding="utf-8")
        body = body.replace(
            'corpus = "stream.jsonl"\n',
            'corpus = "stream.jsonl"\nkeywords = "kw.txt"\n',
        )
        config_path.write_text(body, encoding="utf-8")
        with pytest.raises(InputError, match="survive"):
            run_pipeline(load_config(config_path))

    def test_malformed_lines_counted_in_manifest(self, tmp_path):
        config_path = _stage_dir(tmp_path)
        stream = tmp_path / "stream.jsonl"
        stream.write_text(
            stream.read_text(encoding="utf-8") + "this is not json\n", encoding="utf-8"
        )
        result = run_pipeline(load_config(config_path))
        assert result.manifest["stages"]["filter"]["malformed_lines"] == 1

    def test_strict_mode_aborts_on_malformed(self, tmp_path):
        config_path = _stage_dir(tmp_path)
        stream = tmp_path / "stream.jsonl"
        stream.write_text(
            stream.read_text(encoding="utf-8") + "this is not json\n", encoding="utf-8"
        )
        with pytest.raises(ingest.CorpusParseError):
            run_pipeline(load_config(config_path), strict=True)
