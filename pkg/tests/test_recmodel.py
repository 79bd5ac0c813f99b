"""Model assembly, training behavior, prediction, and checkpoints."""

import numpy as np
import pytest

from venuerank.corpus import Document, VenueProfile, split_corpus, synth_corpus
from venuerank.neuralcore import SoftmaxXent
from venuerank.recmodel import (
    EmbedSpec,
    HeadConfig,
    TrainSpec,
    build_model,
    default_config,
    initial_loss,
    load_model,
    save_model,
    train,
)
from venuerank.recmodel.gradsuite import grad_check_model, tiny_fixture
from venuerank.recmodel.pipeline import pipeline_for
from venuerank.textprep import build_vocab


def _tiny_setup(kind="multikernel", combo="TAKS", n_venues=3, docs_per_venue=8,
                seed=0, **overrides):
    docs, venues = synth_corpus(n_venues, docs_per_venue, signal_strength=0.9, seed=seed)
    split = split_corpus(docs, (0.6, 0.2, 0.2), seed=seed)
    defaults = dict(embed_dim=8, units=5, filters=4,
                    head=HeadConfig(widths=(12, 10), dropout=0.2, concat_width=8,
                                    simflow_widths=(9, 8, 7)),
                    train=TrainSpec(epochs=2, seed=seed, batch_size=8))
    defaults.update(overrides)
    cfg = default_config(kind, combo, n_venues, **defaults)
    pipe = pipeline_for(cfg)
    vocab = build_vocab(pipe.doc_text(d) for d in split.train)
    model = build_model(cfg, vocab, venues, seed=seed)
    return model, split, venues


class TestBuildWidths:
    def test_multikernel_scope_concat_width_at_paper_scale(self):
        venues = [VenueProfile(f"v{i:03d}", f"V{i}", "scope text words") for i in range(351)]
        cfg = default_config("multikernel", "TAKS", 351, embed_dim=768)
        vocab = build_vocab(["scope text words"])
        model = build_model(cfg, vocab, venues, seed=0)
        assert model.blocks[0][0].in_dim == 600 + 351  # 3*200 pools + cosine vector

    def test_recurrent_bigru_scope_off_head_input(self):
        model, _, _ = _tiny_setup("bigru", "TAK", units=100, embed_dim=8)
        assert model.blocks[0][0].in_dim == 200

    def test_same_config_same_seed_identical_bytes(self):
        a, _, _ = _tiny_setup(seed=3)
        b, _, _ = _tiny_setup(seed=3)
        for pa, pb in zip(a.parameters(), b.parameters()):
            assert pa.name == pb.name
            assert pa.value.tobytes() == pb.value.tobytes()

    def test_scope_toggle_keeps_main_flow_shapes(self):
        for kind in ("baseline", "gru", "multikernel"):
            with_s, _, _ = _tiny_setup(kind, "TAKS", seed=1)
            without_s, _, _ = _tiny_setup(kind, "TAK", seed=1)
            main_with = {p.name: p.value.shape for p in
                         with_s.embedding.parameters() + with_s.encoder.parameters()}
            main_without = {p.name: p.value.shape for p in
                            without_s.embedding.parameters() + without_s.encoder.parameters()}
            assert main_with == main_without

    def test_no_simflow_params_when_scope_off(self):
        model, _, _ = _tiny_setup("gru", "TAK")
        assert model.simflow is None
        assert not any("simflow" in p.name for p in model.parameters())

    def test_manifest_names_unique_and_embedding_once(self):
        model, _, _ = _tiny_setup("multikernel", "TAKS")
        names = [p.name for p in model.parameters()]
        assert len(names) == len(set(names))
        assert names.count("embedding.table") == 1

    def test_kernel_wider_than_max_len_rejected(self):
        with pytest.raises(ValueError, match="kernel size"):
            _tiny_setup("multikernel", "TAKS", max_len=3)


class TestTraining:
    def test_zero_learning_rate_leaves_parameters(self):
        model, split, _ = _tiny_setup(
            train=TrainSpec(epochs=1, learning_rate=0.0, seed=0, batch_size=4))
        before = {p.name: p.value.copy() for p in model.parameters()}
        train(model, split)
        for p in model.parameters():
            np.testing.assert_array_equal(p.value, before[p.name])

    def test_initial_loss_near_log_n(self):
        for kind in ("baseline", "gru", "multikernel"):
            model, split, _ = _tiny_setup(kind, "TAKS", n_venues=10, docs_per_venue=5, seed=2)
            loss = initial_loss(model, list(split.train))
            assert abs(loss - np.log(10)) / np.log(10) < 0.20

    def test_history_and_determinism(self):
        h1 = train(*_tiny_setup(seed=5)[:2])
        h2 = train(*_tiny_setup(seed=5)[:2])
        assert h1 == h2
        assert all("val_accuracy_at_1" in rec for rec in h1)
        assert any(rec["best"] for rec in h1)

    def test_deterministic_final_parameters(self):
        m1, split1, _ = _tiny_setup(seed=6)
        m2, split2, _ = _tiny_setup(seed=6)
        train(m1, split1)
        train(m2, split2)
        for pa, pb in zip(m1.parameters(), m2.parameters()):
            assert pa.value.tobytes() == pb.value.tobytes()

    def test_overfits_tiny_planted_corpus(self):
        model, split, _ = _tiny_setup(
            "gru", "T", n_venues=3, docs_per_venue=10, seed=7,
            embed_dim=16, units=16,
            train=TrainSpec(epochs=30, seed=7, batch_size=6,
                            learning_rate=5e-3, patience=30))
        train(model, split)
        from venuerank.recmodel.training import encode_dataset
        samples = encode_dataset(model, split.train)
        hits = sum(model.rank_all(s)[0] == model.venue_ids[s.label] for s in samples)
        assert hits / len(samples) >= 0.9

    def test_unlabeled_training_doc_rejected(self):
        model, split, _ = _tiny_setup()
        bad = split.train[0]
        from dataclasses import replace
        from venuerank.corpus import CorpusSplit
        unlabeled = replace(bad, venue_id=None)
        broken = CorpusSplit((unlabeled,) + split.train[1:], split.validation,
                             split.test, split.seed)
        with pytest.raises(ValueError, match="no venue label"):
            train(model, broken)

    def test_unknown_label_rejected(self):
        model, _, _ = _tiny_setup()
        doc = Document(id="x", title="qaaaa qaaab", venue_id="nope")
        with pytest.raises(ValueError, match="unknown venue"):
            model.encode(doc)


class TestPrediction:
    def test_full_ranking_probabilities_sum_to_one(self):
        model, split, _ = _tiny_setup(n_venues=4, docs_per_venue=6)
        pred = model.predict_topk(split.test[0], k=4)
        assert len(pred.ranked) == 4
        assert abs(sum(p for _, p in pred.ranked) - 1.0) < 1e-9
        probs = [p for _, p in pred.ranked]
        assert probs == sorted(probs, reverse=True)

    def test_tied_logits_order_by_ascending_venue_id(self):
        docs, _ = synth_corpus(3, 8, signal_strength=0.9, seed=0)
        venues = [VenueProfile("vb", "B", "qaaaa qaaab qaaac"),
                  VenueProfile("va", "A", "qaaba qaabb qaabc"),
                  VenueProfile("vc", "C", "qaaca qaacb qaacc")]
        docs = [Document(d.id, d.title, d.abstract, d.keywords,
                         {"v000": "vb", "v001": "va", "v002": "vc"}[d.venue_id])
                for d in docs]
        split = split_corpus(docs, (0.6, 0.2, 0.2), seed=0)
        cfg = default_config("multikernel", "TAK", 3, embed_dim=8, filters=4,
                             head=HeadConfig(widths=(6, 5), dropout=0.2))
        pipe = pipeline_for(cfg)
        vocab = build_vocab(pipe.doc_text(d) for d in split.train)
        model = build_model(cfg, vocab, venues, seed=0)
        model.final.W.value[:] = 0.0
        model.final.b.value[:] = 0.0  # exact logit ties for every venue
        pred = model.predict_topk(docs[0], k=3)
        assert [v for v, _ in pred.ranked] == ["va", "vb", "vc"]

    def test_k_out_of_range(self):
        model, split, _ = _tiny_setup()
        with pytest.raises(ValueError, match="out of range"):
            model.predict_topk(split.test[0], k=0)
        with pytest.raises(ValueError, match="out of range"):
            model.predict_topk(split.test[0], k=99)

    @pytest.mark.parametrize("kind,combo", [
        ("multikernel", "TAKS"), ("gru", "TAKS"), ("baseline", "TAKS"),
        ("multikernel", "TAK"),
    ])
    def test_prediction_invariant_to_trailing_pad_length(self, kind, combo):
        model, split, _ = _tiny_setup(kind, combo, seed=4)
        encoded = model.encode(split.test[0])
        n_real = int(encoded.mask.sum())
        model._ensure_scope_for_inference()
        base_logits, _ = model.forward(encoded)
        from venuerank.recmodel import EncodedDoc
        for extra in (1, 17):
            ids = np.concatenate([encoded.ids[:n_real], np.zeros(extra, dtype=np.intp)])
            mask = np.concatenate([encoded.mask[:n_real], np.zeros(extra)])
            longer = EncodedDoc(ids=ids, mask=mask, label=encoded.label)
            logits, _ = model.forward(longer)
            np.testing.assert_array_equal(logits, base_logits)


class TestSiameseContract:
    def test_embedding_mutation_moves_both_sides(self):
        model, split, _ = _tiny_setup("multikernel", "TAKS", seed=8)
        model.begin_batch()
        before = model._scope_reprs.copy()
        encoded = model.encode(split.test[0])
        logits_before, _ = model.forward(encoded)
        model.embedding.table.value[4:] += 0.25
        model.begin_batch()
        after = model._scope_reprs
        logits_after, _ = model.forward(encoded)
        assert not np.allclose(before, after)
        assert not np.allclose(logits_before, logits_after)

    def test_gradient_flows_through_scope_path_alone(self):
        """An embedding row used only by scope texts still gets a verified gradient."""
        docs, venues = synth_corpus(3, 8, signal_strength=1.0, seed=9)
        split = split_corpus(docs, (0.6, 0.2, 0.2), seed=9)
        cfg = default_config("multikernel", "TAKS", 3, embed_dim=8, filters=4,
                             head=HeadConfig(widths=(6, 5), dropout=0.2),
                             train=TrainSpec(seed=9))
        pipe = pipeline_for(cfg)
        vocab = build_vocab(pipe.doc_text(d) for d in split.train)
        model = build_model(cfg, vocab, venues, seed=9)
        sample = model.encode(split.train[0])
        doc_ids = set(sample.ids[sample.mask > 0].tolist())
        scope_only = [
            idx for idx in range(4, len(vocab))
            if idx not in doc_ids and any(model._scope_avg[:, idx] > 0)
        ]
        assert scope_only, "fixture needs a token exclusive to scope texts"
        target = scope_only[0]

        def loss_at():
            model.begin_batch()
            logits, _ = model.forward(sample, train=False)
            return SoftmaxXent.forward(logits, sample.label)[0]

        model.zero_grads()
        model.begin_batch()
        model.loss_and_grad(sample, train=False)
        model.end_batch()
        analytic = model.embedding.table.grad[target].copy()
        assert np.any(analytic != 0.0)

        eps = 1e-6
        for j in range(3):
            orig = model.embedding.table.value[target, j]
            model.embedding.table.value[target, j] = orig + eps
            f_plus = loss_at()
            model.embedding.table.value[target, j] = orig - eps
            f_minus = loss_at()
            model.embedding.table.value[target, j] = orig
            numeric = (f_plus - f_minus) / (2 * eps)
            assert analytic[j] == pytest.approx(numeric, abs=1e-7)


class TestGradCheckFullArchitectures:
    @pytest.mark.parametrize("kind", ["baseline", "gru", "multikernel"])
    def test_scope_on(self, kind):
        for seed in range(3):
            model, sample = tiny_fixture(kind, use_scope=True, seed=seed)
            report = grad_check_model(model, sample, rng=np.random.default_rng(seed))
            assert report.passes(1e-4), report.to_dict()

    @pytest.mark.parametrize("kind", ["baseline", "lstm", "bilstm", "bigru"])
    def test_scope_off_with_trainable_embedding(self, kind):
        model, sample = tiny_fixture(kind, use_scope=False, seed=1)
        report = grad_check_model(model, sample, rng=np.random.default_rng(1))
        assert report.passes(1e-4), report.to_dict()


class TestCheckpointRoundtrip:
    @pytest.mark.parametrize("kind,combo", [
        ("multikernel", "TAKS"), ("gru", "TAKS"), ("baseline", "TS"),
    ])
    def test_bit_identical_probabilities(self, tmp_path, kind, combo):
        model, split, _ = _tiny_setup(kind, combo, seed=11)
        train(model, split)
        path = tmp_path / "m.ckpt"
        save_model(model, path)
        loaded = load_model(path)
        assert loaded.config == model.config
        assert loaded.venue_ids == model.venue_ids
        for doc in split.test:
            a, sa = model.predict_proba(model.encode(doc))
            b, sb = loaded.predict_proba(loaded.encode(doc))
            assert a.tobytes() == b.tobytes()
            if sa is not None:
                assert sa.tobytes() == sb.tobytes()

    def test_history_persisted(self, tmp_path):
        model, split, _ = _tiny_setup(seed=12)
        history = train(model, split)
        path = tmp_path / "m.ckpt"
        save_model(model, path)
        assert load_model(path).history == history

    def test_embed_dim_mismatch_rejected(self):
        from venuerank.encoders import EncoderSpec
        from venuerank.recmodel import ModelConfig
        from venuerank.textprep import FeatureCombo

        with pytest.raises(ValueError, match="embed_dim"):
            ModelConfig(
                variant="recurrent",
                combo=FeatureCombo.parse("TAK"),
                n_venues=3,
                encoder=EncoderSpec("gru", embed_dim=8, units=5),
                head=HeadConfig(widths=(6,), dropout=0.2),
                embed=EmbedSpec(dim=16),
            )


class TestPretrainedEmbedding:
    def test_vectors_copied_and_frozen(self, tmp_path):
        from venuerank.embed import EmbeddingTable, write_vectors

        docs, venues = synth_corpus(3, 8, signal_strength=0.9, seed=13)
        split = split_corpus(docs, (0.6, 0.2, 0.2), seed=13)
        cfg0 = default_config("baseline", "TAK", 3, embed_dim=6, filters=4,
                              head=HeadConfig(widths=(6, 5), dropout=0.2))
        pipe = pipeline_for(cfg0)
        vocab = build_vocab(pipe.doc_text(d) for d in split.train)
        tokens = vocab.id_to_token[4:7]
        rng = np.random.default_rng(13)
        table = EmbeddingTable(tokens, rng.normal(size=(3, 6)))
        path = tmp_path / "pre.vec"
        write_vectors(table, path)

        cfg = default_config("baseline", "TAK", 3, filters=4,
                             head=HeadConfig(widths=(6, 5), dropout=0.2),
                             embed=EmbedSpec(dim=6, pretrained_path=str(path),
                                             trainable=False))
        model = build_model(cfg, vocab, venues, seed=13)
        for i, tok in enumerate(tokens):
            np.testing.assert_array_equal(
                model.embedding.table.value[vocab.id_for(tok)], table.vectors[i])
        assert not model.embedding.table.trainable
        before = model.embedding.table.value.copy()
        train(model, split)
        np.testing.assert_array_equal(model.embedding.table.value, before)
