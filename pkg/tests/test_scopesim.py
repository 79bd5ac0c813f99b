"""Cosine similarity, scope-score vectors, and the similarity flow."""

import numpy as np
import pytest

from venuerank.scopesim import ScopeMatrix, SimilarityFlow, cosine, scope_scores


def rng_for(seed):
    return np.random.default_rng(seed)


class TestCosine:
    def test_self_similarity(self):
        assert cosine(np.array([1.0, 0.0]), np.array([1.0, 0.0])) == 1.0

    def test_orthogonality(self):
        assert cosine(np.array([1.0, 0.0]), np.array([0.0, 1.0])) == 0.0

    def test_direct_formula_evaluation(self):
        a = np.array([1.0, 2.0, 3.0])
        b = np.array([4.0, 5.0, 6.0])
        expected = 32.0 / np.sqrt(14.0 * 77.0)  # worked by hand from the formula
        assert cosine(a, b) == pytest.approx(expected, abs=1e-12)
        assert cosine(a, b) == pytest.approx(0.974632, abs=1e-6)

    def test_properties_on_1000_random_pairs(self):
        rng = rng_for(0)
        for _ in range(1000):
            n = int(rng.integers(1, 12))
            a = rng.normal(size=n)
            b = rng.normal(size=n)
            if np.linalg.norm(a) == 0 or np.linalg.norm(b) == 0:
                continue
            s = cosine(a, b)
            assert -1.0 <= s <= 1.0
            assert cosine(b, a) == pytest.approx(s, abs=1e-12)
            alpha = float(rng.uniform(0.1, 10.0))
            assert cosine(alpha * a, b) == pytest.approx(s, abs=1e-12)
            assert cosine(a, a) == pytest.approx(1.0, abs=1e-12)

    def test_zero_norm_rejected(self):
        with pytest.raises(ValueError, match="zero-norm"):
            cosine(np.zeros(3), np.ones(3))

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            cosine(np.ones(3), np.ones(4))


class TestScopeScores:
    def _matrix(self, rng, n=5, d=4):
        return ScopeMatrix(tuple(f"v{i}" for i in range(n)), rng.normal(size=(n, d)))

    def test_matching_row_scores_one(self):
        rng = rng_for(1)
        scope = self._matrix(rng)
        doc = scope.reprs[2].copy()
        scores = scope_scores(doc, scope)
        assert scores[2] == pytest.approx(1.0, abs=1e-12)

    def test_row_permutation_equivariance(self):
        rng = rng_for(2)
        scope = self._matrix(rng)
        doc = rng.normal(size=4)
        base = scope_scores(doc, scope)
        perm = [3, 0, 4, 1, 2]
        permuted = ScopeMatrix(tuple(scope.venue_ids[i] for i in perm), scope.reprs[perm])
        np.testing.assert_allclose(scope_scores(doc, permuted), base[perm], atol=1e-15)

    def test_equals_scalar_cosine_loop(self):
        rng = rng_for(3)
        scope = self._matrix(rng, n=3)
        doc = rng.normal(size=4)
        got = scope_scores(doc, scope)
        expected = [cosine(doc, scope.reprs[j]) for j in range(3)]  # oracle loop
        np.testing.assert_allclose(got, expected, atol=1e-15)

    def test_zero_row_error_default(self):
        reprs = rng_for(4).normal(size=(3, 4))
        reprs[1] = 0.0
        scope = ScopeMatrix(("a", "b", "c"), reprs)
        with pytest.raises(ValueError, match="'b'"):
            scope_scores(np.ones(4), scope)

    def test_zero_row_neg_one_mode(self, caplog):
        reprs = rng_for(5).normal(size=(3, 4))
        reprs[1] = 0.0
        scope = ScopeMatrix(("a", "b", "c"), reprs)
        with caplog.at_level("WARNING"):
            scores = scope_scores(np.ones(4), scope, on_zero_row="neg_one")
        assert scores[1] == -1.0

    def test_zero_doc_rejected(self):
        scope = self._matrix(rng_for(6))
        with pytest.raises(ValueError, match="zero-norm document"):
            scope_scores(np.zeros(4), scope)

    def test_save_load_roundtrip(self, tmp_path):
        scope = self._matrix(rng_for(7), n=4, d=6)
        path = tmp_path / "scope.bin"
        scope.save(path)
        loaded = ScopeMatrix.load(path)
        assert loaded.venue_ids == scope.venue_ids
        assert loaded.reprs.tobytes() == scope.reprs.tobytes()


class TestSimilarityFlow:
    def test_output_width_500_for_any_n(self):
        for n in (5, 37, 351):
            flow = SimilarityFlow(n, rng_for(8))
            out, _ = flow.forward(np.linspace(-1, 1, n))
            assert out.shape == (500,)

    def test_zero_input_zero_output_with_zero_biases(self):
        flow = SimilarityFlow(6, rng_for(9), widths=(5, 4, 3))
        out, _ = flow.forward(np.zeros(6))
        np.testing.assert_array_equal(out, np.zeros(3))

    def test_inference_deterministic(self):
        flow = SimilarityFlow(6, rng_for(10), widths=(5, 4, 3))
        x = rng_for(11).normal(size=6)
        a, _ = flow.forward(x, train=False)
        b, _ = flow.forward(x, train=False)
        np.testing.assert_array_equal(a, b)

    def test_default_widths_match_contract(self):
        flow = SimilarityFlow(10, rng_for(12))
        dims = [(layer.in_dim, layer.out_dim) for layer, _ in flow.layers]
        assert dims == [(10, 1500), (1500, 1000), (1000, 500)]

    def test_dropout_active_in_training(self):
        flow = SimilarityFlow(8, rng_for(13), widths=(64, 64, 64), dropout_rate=0.5)
        x = rng_for(14).normal(size=8)
        out, _ = flow.forward(x, train=True, rng=rng_for(15))
        assert (out == 0).sum() > 8  # some units dropped beyond relu zeros

    def test_backward_matches_finite_differences(self):
        from venuerank.neuralcore import grad_check

        flow = SimilarityFlow(5, rng_for(16), widths=(6, 5, 4))
        x = rng_for(17).normal(size=5)
        w = rng_for(18).normal(size=4)

        def loss_fn():
            out, _ = flow.forward(x)
            return float(out @ w)

        def grad_fn():
            for p in flow.parameters():
                p.zero_grad()
            out, caches = flow.forward(x)
            flow.backward(w, caches)
            return float(out @ w)

        assert grad_check(loss_fn, grad_fn, flow.parameters(), epsilon=1e-6).worst < 1e-5
