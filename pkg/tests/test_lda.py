"""Collapsed Gibbs LDA: conditionals, counts, estimates, and serialization.

The sampler itself is verified against independent pure-Python replicas of
both the sweep and the fold-in loop: same seeds, same uniforms, compared to
1e-12 on conditionals and exactly on assignments.
"""

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from opinion_miner.errors import InputError
from opinion_miner import lda
from opinion_miner.lda import (
    LdaModel,
    check_counts,
    doc_topic_matrix,
    dominant_topic,
    estimate_phi,
    gibbs_sweep,
    infer_doc_topics,
    init_model,
    load_model,
    log_likelihood,
    resolve_alpha,
    save_model,
    topic_top_word_ids,
    topic_top_words,
    topics_to_csv,
    train,
)
from opinion_miner.seeding import derive_seed, make_rng
from opinion_miner.textproc import Document, Vocabulary


def _doc(tokens, source_id="d0"):
    return Document(tokens=tuple(tokens), source_id=source_id)


def _random_corpus(rng, n_docs, vocab_size, max_len):
    docs = []
    for d in range(n_docs):
        length = int(rng.integers(1, max_len + 1))
        tokens = rng.integers(0, vocab_size, size=length)
        docs.append(_doc((int(t) for t in tokens), f"d{d}"))
    return docs


def _replay_init_draws(seed, n_tokens, n_topics):
    """Reproduce init_model's assignment draw and the first sweep's uniforms."""
    rng = make_rng(seed)
    z0 = rng.integers(0, n_topics, size=n_tokens, dtype=np.int32)
    uniforms = rng.random(n_tokens)
    return z0, uniforms


def _brute_force_sweep(tokens, doc_ids, z0, n_topics, vocab_size, alpha, eta, uniforms):
    """Sequential collapsed-Gibbs reference: plain loops, no shared code."""
    n_docs = int(max(doc_ids)) + 1
    n_dk = [[0] * n_topics for _ in range(n_docs)]
    n_kw = [[0] * vocab_size for _ in range(n_topics)]
    n_k = [0] * n_topics
    z = list(int(v) for v in z0)
    for i, (w, d) in enumerate(zip(tokens, doc_ids)):
        n_dk[d][z[i]] += 1
        n_kw[z[i]][w] += 1
        n_k[z[i]] += 1
    conditionals = []
    for i, (w, d) in enumerate(zip(tokens, doc_ids)):
        k_old = z[i]
        n_dk[d][k_old] -= 1
        n_kw[k_old][w] -= 1
        n_k[k_old] -= 1
        weights = [
            (n_dk[d][k] + alpha[k]) * (n_kw[k][w] + eta) / (n_k[k] + vocab_size * eta)
            for k in range(n_topics)
        ]
        total = sum(weights)
        conditionals.append([wt / total for wt in weights])
        u = uniforms[i] * total
        acc = 0.0
        k_new = n_topics - 1
        for k in range(n_topics):
            acc += weights[k]
            if u < acc:
                k_new = k
                break
        z[i] = k_new
        n_dk[d][k_new] += 1
        n_kw[k_new][w] += 1
        n_k[k_new] += 1
    return z, conditionals


class TestResolveAlpha:
    def test_symmetric_scalar(self):
        assert resolve_alpha(0.01, 10).tolist() == [0.01] * 10

    def test_symmetric_numeric_string(self):
        assert resolve_alpha("0.01", 10).tolist() == [0.01] * 10

    def test_asymmetric_k4(self):
        alpha = resolve_alpha("asymmetric", 4)
        assert alpha.tolist() == pytest.approx([0.5, 1 / 3, 0.25, 0.2], abs=1e-15)

    def test_asymmetric_decreasing_and_positive(self):
        alpha = resolve_alpha("asymmetric", 25)
        assert (np.diff(alpha) < 0).all() and (alpha > 0).all()

    def test_rejects_garbage(self):
        with pytest.raises(ValueError):
            resolve_alpha("uniformish", 3)
        with pytest.raises(ValueError):
            resolve_alpha(-0.5, 3)


class TestInitModel:
    def test_k1_forces_all_zero(self):
        for seed in (0, 1, 99):
            model = init_model([_doc([0, 1, 2]), _doc([2], "d1")], 1, 0.1, 0.1, seed, 3)
            assert model.assignments.tolist() == [0, 0, 0, 0]

    def test_counts_consistent_after_init(self):
        corpus = _random_corpus(make_rng(3), 12, 7, 9)
        model = init_model(corpus, 4, "asymmetric", 0.1, 5, 7)
        check_counts(model)

    def test_validation_errors(self):
        with pytest.raises(InputError):
            init_model([], 2, 0.1, 0.1, 0, 3)
        with pytest.raises(InputError):
            init_model([_doc([0])], 0, 0.1, 0.1, 0, 3)
        with pytest.raises(InputError):
            init_model([_doc([])], 2, 0.1, 0.1, 0, 3)
        with pytest.raises(InputError):
            init_model([_doc([5])], 2, 0.1, 0.1, 0, 3)
        with pytest.raises(InputError):
            init_model([_doc([0])], 2, 0.1, 0.0, 0, 3)


class TestGibbsSweep:
    def test_single_token_k1_conditional_is_one(self):
        model = init_model([_doc([0])], 1, 0.5, 0.5, 0, 1)
        diag = gibbs_sweep(model, record_conditionals=True)
        assert model.assignments.tolist() == [0]
        assert diag.conditionals.tolist() == [[1.0]]

    def test_two_token_conditional_hand_value(self):
        # Doc [w0, w1], K=2, sym alpha 0.5, eta 0.5, V=2. Whatever z(w0) is
        # when w1 gets resampled, the unnormalized weights are
        # (1.5*0.5/2, 0.5*0.5/1) up to topic relabeling: normalized (0.6, 0.4)
        # with 0.6 on z(w0)'s topic.
        for seed in range(6):
            model = init_model([_doc([0, 1])], 2, 0.5, 0.5, seed, 2)
            diag = gibbs_sweep(model, record_conditionals=True)
            z0 = int(model.assignments[0])
            expected = [0.6, 0.4] if z0 == 0 else [0.4, 0.6]
            assert diag.conditionals[1].tolist() == pytest.approx(expected, abs=1e-12)

    def test_matches_brute_force_replica(self):
        rng = make_rng(11)
        for trial in range(25):
            n_topics = int(rng.integers(1, 5))
            vocab_size = int(rng.integers(2, 9))
            corpus = _random_corpus(rng, int(rng.integers(1, 7)), vocab_size, 8)
            seed = int(rng.integers(0, 2**31))
            alpha_spec = [0.01, 0.5, "asymmetric"][trial % 3]
            model = init_model(corpus, n_topics, alpha_spec, 0.3, seed, vocab_size)
            tokens = model.tokens.tolist()
            doc_ids = np.repeat(
                np.arange(model.n_docs), np.diff(model.doc_offsets)
            ).tolist()
            z0, uniforms = _replay_init_draws(seed, len(tokens), n_topics)
            assert model.assignments.tolist() == z0.tolist()
            diag = gibbs_sweep(model, record_conditionals=True)
            z_ref, cond_ref = _brute_force_sweep(
                tokens, doc_ids, z0, n_topics, vocab_size,
                model.alpha.tolist(), model.eta, uniforms.tolist(),
            )
            assert model.assignments.tolist() == z_ref
            assert np.abs(diag.conditionals - np.array(cond_ref)).max() <= 1e-12
            check_counts(model)

    def test_counts_conserved_across_sweeps(self):
        corpus = _random_corpus(make_rng(2), 10, 6, 12)
        model = init_model(corpus, 3, 0.1, 0.2, 7, 6)
        lengths = np.diff(model.doc_offsets)
        for _ in range(5):
            gibbs_sweep(model)
            check_counts(model)
            assert model.doc_topic.sum(axis=1).tolist() == lengths.tolist()

    def test_mismatched_corpus_rejected(self):
        corpus = [_doc([0, 1]), _doc([1], "d1")]
        model = init_model(corpus, 2, 0.1, 0.1, 0, 2)
        with pytest.raises(InputError):
            gibbs_sweep(model, corpus=[_doc([0])])


class TestTrain:
    def test_zero_sweeps_rejected(self):
        model = init_model([_doc([0])], 1, 0.1, 0.1, 0, 1)
        with pytest.raises(InputError):
            train(model, sweeps=0)

    def test_train_equals_repeated_sweeps(self):
        corpus = _random_corpus(make_rng(4), 8, 5, 10)
        m1 = init_model(corpus, 3, 0.1, 0.2, 21, 5)
        train(m1, sweeps=4)
        m2 = init_model(corpus, 3, 0.1, 0.2, 21, 5)
        for _ in range(4):
            gibbs_sweep(m2)
        assert m1.assignments.tolist() == m2.assignments.tolist()
        assert m1.ll_trace == m2.ll_trace
        assert m1.sweeps_done == m2.sweeps_done == 4

    def test_determinism_bit_identical(self):
        corpus = _random_corpus(make_rng(5), 10, 6, 10)
        runs = []
        for _ in range(2):
            model = init_model(corpus, 4, "asymmetric", 0.1, 33, 6)
            train(model, sweeps=10)
            runs.append((model.assignments.copy(), estimate_phi(model)))
        assert np.array_equal(runs[0][0], runs[1][0])
        assert np.array_equal(runs[0][1], runs[1][1])

    def test_ll_trace_grows_one_entry_per_sweep(self):
        corpus = _random_corpus(make_rng(6), 6, 5, 8)
        model = init_model(corpus, 2, 0.1, 0.1, 0, 5)
        train(model, sweeps=7)
        assert len(model.ll_trace) == 7
        assert all(isinstance(v, float) and math.isfinite(v) for v in model.ll_trace)


class TestLogLikelihood:
    def test_matches_direct_lgamma_recomputation(self):
        corpus = _random_corpus(make_rng(8), 9, 6, 10)
        model = init_model(corpus, 3, "asymmetric", 0.25, 17, 6)
        train(model, sweeps=3)
        alpha = model.alpha.tolist()
        eta = model.eta
        vocab_size = model.vocab_size
        alpha_sum = sum(alpha)
        lengths = np.diff(model.doc_offsets).tolist()
        expected = 0.0
        for d in range(model.n_docs):
            expected += math.lgamma(alpha_sum) - math.lgamma(lengths[d] + alpha_sum)
            for k in range(model.n_topics):
                expected += math.lgamma(model.doc_topic[d, k] + alpha[k]) - math.lgamma(alpha[k])
        for k in range(model.n_topics):
            expected += math.lgamma(vocab_size * eta) - math.lgamma(model.topic_total[k] + vocab_size * eta)
            for w in range(vocab_size):
                expected += math.lgamma(model.topic_word[k, w] + eta) - math.lgamma(eta)
        assert log_likelihood(model) == pytest.approx(expected, rel=1e-10)


class TestEstimates:
    def _hand_model(self, doc_topic, topic_word, alpha, eta, lengths):
        doc_topic = np.array(doc_topic, dtype=np.int32)
        topic_word = np.array(topic_word, dtype=np.int32)
        offsets = np.zeros(len(lengths) + 1, dtype=np.int64)
        np.cumsum(np.array(lengths, dtype=np.int64), out=offsets[1:])
        return LdaModel(
            n_topics=doc_topic.shape[1],
            alpha=np.array(alpha, dtype=np.float64),
            eta=eta,
            vocab_size=topic_word.shape[1],
            seed=0,
            doc_topic=doc_topic,
            topic_word=topic_word,
            topic_total=topic_word.sum(axis=1).astype(np.int64),
            assignments=np.zeros(0, dtype=np.int32),
            tokens=np.zeros(0, dtype=np.int32),
            doc_offsets=offsets,
            source_ids=[f"d{i}" for i in range(doc_topic.shape[0])],
            alpha_spec="hand",
        )

    def test_phi_uniform_when_counts_zero(self):
        model = self._hand_model([[0]], [[0, 0, 0, 0]], [0.5], 0.7, [0])
        assert estimate_phi(model)[0].tolist() == [0.25] * 4

    def test_phi_hand_value(self):
        model = self._hand_model([[4]], [[3, 1]], [0.5], 0.5, [4])
        assert estimate_phi(model)[0].tolist() == pytest.approx([0.7, 0.3], abs=1e-15)

    def test_phi_rows_sum_to_one(self):
        corpus = _random_corpus(make_rng(9), 8, 5, 9)
        model = init_model(corpus, 3, 0.1, 0.2, 1, 5)
        train(model, sweeps=2)
        assert estimate_phi(model).sum(axis=1).tolist() == pytest.approx([1.0] * 3, abs=1e-12)

    def test_theta_hand_value_for_training_doc(self):
        model = self._hand_model([[2, 0]], [[1, 1], [0, 0]], [0.5, 0.5], 0.5, [2])
        theta = infer_doc_topics(model, _doc([0, 1], "d0"))
        assert theta.tolist() == pytest.approx([2.5 / 3, 0.5 / 3], abs=1e-15)

    def test_theta_k1(self):
        model = self._hand_model([[3]], [[2, 1]], [0.9], 0.5, [3])
        assert infer_doc_topics(model, _doc([0, 0, 1], "d0")).tolist() == [1.0]

    def test_empty_doc_returns_prior(self):
        model = self._hand_model([[1, 1]], [[1, 0], [0, 1]], [1.0, 3.0], 0.5, [2])
        theta = infer_doc_topics(model, _doc([], "held-out"))
        assert theta.tolist() == pytest.approx([0.25, 0.75], abs=1e-15)

    def test_doc_topic_matrix_matches_per_doc(self):
        corpus = _random_corpus(make_rng(10), 6, 5, 7)
        model = init_model(corpus, 3, "asymmetric", 0.2, 2, 5)
        train(model, sweeps=2)
        matrix = doc_topic_matrix(model)
        for i, doc in enumerate(corpus):
            assert matrix[i].tolist() == pytest.approx(
                infer_doc_topics(model, doc).tolist(), abs=1e-15
            )
        assert matrix.sum(axis=1).tolist() == pytest.approx([1.0] * len(corpus), abs=1e-12)


def _brute_force_fold_in(model, doc, sweeps):
    """Pure-Python fold-in replica with the same derived seed."""
    seed = derive_seed(model.seed, "fold-in", doc.source_id)
    rng = make_rng(seed)
    n_topics = model.n_topics
    assignments = rng.integers(0, n_topics, size=len(doc), dtype=np.int32).tolist()
    local = [assignments.count(k) for k in range(n_topics)]
    uniforms = rng.random(sweeps * len(doc)).tolist()
    v_eta = model.vocab_size * model.eta
    pos = 0
    for _ in range(sweeps):
        for i, w in enumerate(doc.tokens):
            k_old = assignments[i]
            local[k_old] -= 1
            weights = [
                (local[k] + model.alpha[k])
                * (model.topic_word[k, w] + model.eta)
                / (model.topic_total[k] + v_eta)
                for k in range(n_topics)
            ]
            total = sum(weights)
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
            local[k_new] += 1
    alpha_sum = float(model.alpha.sum())
    return [(local[k] + model.alpha[k]) / (len(doc) + alpha_sum) for k in range(n_topics)]


class TestFoldIn:
    def _trained(self):
        corpus = _random_corpus(make_rng(14), 15, 8, 12)
        model = init_model(corpus, 3, 0.2, 0.3, 41, 8)
        train(model, sweeps=20)
        return model

    def test_matches_pure_python_replica(self):
        model = self._trained()
        for i in range(5):
            held_out = _doc([0, 3, 3, 7, 2], f"held-{i}")
            theta = infer_doc_topics(model, held_out)
            expected = _brute_force_fold_in(model, held_out, lda.FOLD_IN_SWEEPS)
            assert theta.tolist() == pytest.approx(expected, abs=1e-15)

    def test_deterministic_per_source_id(self):
        model = self._trained()
        doc = _doc([1, 2, 3], "held")
        assert np.array_equal(infer_doc_topics(model, doc), infer_doc_topics(model, doc))

    def test_distinct_source_ids_use_distinct_seeds(self):
        model = self._trained()
        a = infer_doc_topics(model, _doc([1, 2, 3, 4, 5, 6], "ha"))
        b = infer_doc_topics(model, _doc([1, 2, 3, 4, 5, 6], "hb"))
        # Same tokens, different derived seed: allowed to differ.
        assert a.shape == b.shape

    def test_fold_in_does_not_touch_model_counts(self):
        model = self._trained()
        before = (model.topic_word.copy(), model.topic_total.copy(), model.doc_topic.copy())
        infer_doc_topics(model, _doc([0, 1, 2], "held"))
        assert np.array_equal(model.topic_word, before[0])
        assert np.array_equal(model.topic_total, before[1])
        assert np.array_equal(model.doc_topic, before[2])

    def test_out_of_range_token_rejected(self):
        model = self._trained()
        with pytest.raises(InputError):
            infer_doc_topics(model, _doc([99], "held"))


class TestDominantTopic:
    def test_argmax(self):
        corpus = [_doc([0, 0, 0], "d0"), _doc([1, 1, 1], "d1")]
        model = init_model(corpus, 2, 0.1, 0.1, 3, 2)
        train(model, sweeps=30)
        for i, doc in enumerate(corpus):
            theta = infer_doc_topics(model, doc)
            assert dominant_topic(model, doc) == int(np.argmax(theta))

    def test_tie_breaks_to_lower_topic(self):
        # Symmetric alpha and a perfectly split doc tie the posterior means.
        model = init_model([_doc([0, 1])], 2, 0.5, 0.5, 0, 2)
        model.doc_topic[0] = [1, 1]
        theta = infer_doc_topics(model, _doc([0, 1], "d0"))
        assert theta[0] == theta[1]
        assert dominant_topic(model, _doc([0, 1], "d0")) == 0


class TestTopWords:
    def _phi_controlled_model(self):
        # One topic, counts chosen so phi = [0.7, 0.2, 0.1] exactly at eta=0:
        # use eta tiny and integer counts 7,2,1.
        model = LdaModel(
            n_topics=1,
            alpha=np.array([0.5]),
            eta=1e-300,
            vocab_size=3,
            seed=0,
            doc_topic=np.array([[10]], dtype=np.int32),
            topic_word=np.array([[7, 2, 1]], dtype=np.int32),
            topic_total=np.array([10], dtype=np.int64),
            assignments=np.zeros(0, dtype=np.int32),
            tokens=np.zeros(0, dtype=np.int32),
            doc_offsets=np.array([0, 10], dtype=np.int64),
            source_ids=["d0"],
            alpha_spec=0.5,
        )
        return model

    def test_top_n_selection(self):
        model = self._phi_controlled_model()
        top = topic_top_word_ids(model, 0, n=2)
        assert [w for w, _ in top] == [0, 1]
        assert [p for _, p in top] == pytest.approx([0.7, 0.2], abs=1e-12)

    def test_ties_prefer_lower_id(self):
        model = self._phi_controlled_model()
        model.topic_word = np.array([[3, 4, 3]], dtype=np.int32)
        top = topic_top_word_ids(model, 0, n=3)
        assert [w for w, _ in top] == [1, 0, 2]

    def test_n_capped_at_vocab_size(self):
        model = self._phi_controlled_model()
        assert len(topic_top_word_ids(model, 0, n=50)) == 3

    def test_topic_index_validated(self):
        model = self._phi_controlled_model()
        with pytest.raises(InputError):
            topic_top_word_ids(model, 1)

    def test_words_mapped_through_vocab(self):
        model = self._phi_controlled_model()
        vocab = Vocabulary(
            token_to_id={"toll": 0, "plan": 1, "zone": 2},
            id_to_token=["toll", "plan", "zone"],
            doc_freq=[1, 1, 1], total_docs=1,
        )
        summary = topic_top_words(model, 0, vocab, n=2)
        assert [w for w, _ in summary.top_words] == ["toll", "plan"]

    def test_csv_format(self):
        model = self._phi_controlled_model()
        vocab = Vocabulary(
            token_to_id={"toll": 0, "plan": 1, "zone": 2},
            id_to_token=["toll", "plan", "zone"],
            doc_freq=[1, 1, 1], total_docs=1,
        )
        csv_text = topics_to_csv([topic_top_words(model, 0, vocab, n=2)])
        lines = csv_text.splitlines()
        assert lines[0] == "topic,rank,token,probability"
        assert lines[1].startswith("0,1,toll,0.7")
        assert lines[2].startswith("0,2,plan,0.2")


class TestCheckCounts:
    def test_detects_corruption(self):
        corpus = _random_corpus(make_rng(15), 5, 4, 6)
        model = init_model(corpus, 2, 0.1, 0.1, 0, 4)
        check_counts(model)
        model.topic_word[0, 0] += 1
        with pytest.raises(InputError):
            check_counts(model)


class TestSerialization:
    def _trained(self):
        corpus = _random_corpus(make_rng(16), 8, 5, 9)
        model = init_model(corpus, 3, "asymmetric", 0.15, 9, 5)
        train(model, sweeps=5)
        return model

    def test_round_trip_exact(self, tmp_path):
        model = self._trained()
        path = tmp_path / "model.json"
        save_model(model, path, vocab_sha256="abc123")
        clone = load_model(path, expect_vocab_sha256="abc123")
        assert np.array_equal(clone.topic_word, model.topic_word)
        assert np.array_equal(clone.topic_total, model.topic_total)
        assert np.array_equal(clone.doc_topic, model.doc_topic)
        assert np.array_equal(clone.assignments, model.assignments)
        assert clone.alpha.tolist() == model.alpha.tolist()
        assert clone.alpha_spec == model.alpha_spec
        assert clone.sweeps_done == model.sweeps_done
        assert np.array_equal(estimate_phi(clone), estimate_phi(model))

    def test_vocab_hash_mismatch_rejected(self, tmp_path):
        model = self._trained()
        path = tmp_path / "model.json"
        save_model(model, path, vocab_sha256="abc123")
        with pytest.raises(InputError):
            load_model(path, expect_vocab_sha256="different")

    def test_loaded_model_supports_inference(self, tmp_path):
        model = self._trained()
        path = tmp_path / "model.json"
        save_model(model, path)
        clone = load_model(path)
        doc = _doc([0, 1, 2], "held-out")
        assert infer_doc_topics(clone, doc).shape == (3,)

    def test_stateless_load_refuses_training(self, tmp_path):
        model = self._trained()
        path = tmp_path / "model.json"
        save_model(model, path, include_state=False)
        clone = load_model(path)
        with pytest.raises(InputError):
            train(clone, sweeps=1)

    def test_loaded_with_state_still_refuses_training_without_rng(self, tmp_path):
        # Resuming a chain from JSON would silently break determinism, so it
        # is refused outright.
        model = self._trained()
        path = tmp_path / "model.json"
        save_model(model, path)
        with pytest.raises(InputError):
            train(load_model(path), sweeps=1)

    def test_save_byte_stable(self, tmp_path):
        model = self._trained()
        p1, p2 = tmp_path / "a.json", tmp_path / "b.json"
        save_model(model, p1, vocab_sha256="x")
        save_model(model, p2, vocab_sha256="x")
        assert p1.read_bytes() == p2.read_bytes()


@settings(deadline=None, max_examples=25)
@given(st.integers(0, 2**31 - 1), st.integers(1, 4), st.integers(2, 6))
def test_property_counts_always_consistent(seed, n_topics, vocab_size):
    rng = make_rng(seed)
    corpus = _random_corpus(rng, int(rng.integers(1, 6)), vocab_size, 6)
    model = init_model(corpus, n_topics, 0.1, 0.2, seed, vocab_size)
    check_counts(model)
    gibbs_sweep(model)
    check_counts(model)
