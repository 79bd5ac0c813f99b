"""Encoder blocks: widths, mask awareness, and pooled representations."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from venuerank.encoders import (
    EncoderSpec,
    build_encoder,
    feature_width,
    pooled_repr,
    pooled_repr_backward,
)


def rng_for(seed):
    return np.random.default_rng(seed)


def _mask(n_real, m):
    return np.array([1.0] * n_real + [0.0] * (m - n_real))


def _emb(rng, n_real, m, d):
    emb = np.zeros((m, d))
    emb[:n_real] = rng.normal(size=(n_real, d))
    return emb


class TestFeatureWidth:
    def test_multikernel_600(self):
        spec = EncoderSpec("multikernel_conv", embed_dim=768, filters=200,
                           kernel_sizes=(2, 3, 4))
        assert feature_width(spec) == 600

    def test_bigru_200(self):
        assert feature_width(EncoderSpec("bigru", embed_dim=300, units=100)) == 200

    def test_gru_100(self):
        assert feature_width(EncoderSpec("gru", embed_dim=300, units=100)) == 100

    @settings(max_examples=60, deadline=None)
    @given(
        kind=st.sampled_from(["conv1d_single", "lstm", "bilstm", "gru", "bigru",
                              "multikernel_conv"]),
        units=st.integers(min_value=1, max_value=16),
        filters=st.integers(min_value=1, max_value=16),
        n_kernels=st.integers(min_value=1, max_value=4),
        seed=st.integers(min_value=0, max_value=50),
    )
    def test_width_is_pure_function_of_spec(self, kind, units, filters, n_kernels, seed):
        spec = EncoderSpec(kind, embed_dim=5, units=units, filters=filters,
                           kernel_sizes=tuple(range(1, n_kernels + 1)))
        encoder = build_encoder(spec, rng_for(seed))
        rng = rng_for(seed + 1)
        m = 9
        emb = _emb(rng, 6, m, 5)
        out, _ = encoder.forward(emb, _mask(6, m))
        assert out.shape == (feature_width(spec),)

    def test_spec_validation(self):
        with pytest.raises(ValueError):
            EncoderSpec("transformer", embed_dim=8)
        with pytest.raises(ValueError):
            EncoderSpec("gru", embed_dim=8, units=0)
        with pytest.raises(ValueError):
            EncoderSpec("multikernel_conv", embed_dim=8, kernel_sizes=())


class TestMaskAwareness:
    @pytest.mark.parametrize("kind", ["lstm", "bilstm", "gru", "bigru"])
    def test_recurrent_invariant_to_trailing_pad(self, kind):
        spec = EncoderSpec(kind, embed_dim=4, units=3)
        encoder = build_encoder(spec, rng_for(7))
        rng = rng_for(8)
        real = rng.normal(size=(5, 4))
        for extra in (0, 1, 6):
            m = 5 + extra
            emb = np.zeros((m, 4))
            emb[:5] = real
            out, _ = encoder.forward(emb, _mask(5, m))
            if extra == 0:
                base = out
            np.testing.assert_array_equal(out, base)

    @pytest.mark.parametrize("kind", ["conv1d_single", "multikernel_conv"])
    def test_conv_invariant_to_trailing_pad(self, kind):
        spec = EncoderSpec(kind, embed_dim=4, filters=3, kernel_sizes=(2, 3))
        encoder = build_encoder(spec, rng_for(9))
        rng = rng_for(10)
        real = rng.normal(size=(6, 4))
        outs = []
        for extra in (0, 2, 9):
            m = 6 + extra
            emb = np.zeros((m, 4))
            emb[:6] = real
            out, _ = encoder.forward(emb, _mask(6, m))
            outs.append(out)
        np.testing.assert_array_equal(outs[0], outs[1])
        np.testing.assert_array_equal(outs[0], outs[2])

    def test_real_prefix_shorter_than_kernel(self):
        spec = EncoderSpec("multikernel_conv", embed_dim=3, filters=2, kernel_sizes=(4,))
        encoder = build_encoder(spec, rng_for(11))
        emb = np.zeros((8, 3))
        emb[0] = [1.0, 2.0, 3.0]
        out, _ = encoder.forward(emb, _mask(1, 8))
        assert out.shape == (2,)
        assert np.all(np.isfinite(out))

    def test_all_padding_rejected(self):
        spec = EncoderSpec("gru", embed_dim=3, units=2)
        encoder = build_encoder(spec, rng_for(12))
        with pytest.raises(ValueError, match="all-padding"):
            encoder.forward(np.zeros((4, 3)), np.zeros(4))


class TestMultikernelEquivariance:
    def test_branch_permutation_permutes_segments(self):
        rng = rng_for(13)
        spec_a = EncoderSpec("multikernel_conv", embed_dim=4, filters=3, kernel_sizes=(2, 3, 4))
        spec_b = EncoderSpec("multikernel_conv", embed_dim=4, filters=3, kernel_sizes=(4, 2, 3))
        enc_a = build_encoder(spec_a, rng_for(0))
        enc_b = build_encoder(spec_b, rng_for(0))
        # rebind branch parameters so branch k is identical across encoders
        by_k_a = {conv.kernel_size: conv for conv in enc_a.convs}
        for conv in enc_b.convs:
            conv.kernels.value = by_k_a[conv.kernel_size].kernels.value.copy()
            conv.bias.value = by_k_a[conv.kernel_size].bias.value.copy()
        emb = _emb(rng, 7, 10, 4)
        mask = _mask(7, 10)
        out_a, _ = enc_a.forward(emb, mask)
        out_b, _ = enc_b.forward(emb, mask)
        f = 3
        segs_a = {k: out_a[i * f:(i + 1) * f] for i, k in enumerate((2, 3, 4))}
        segs_b = {k: out_b[i * f:(i + 1) * f] for i, k in enumerate((4, 2, 3))}
        for k in (2, 3, 4):
            np.testing.assert_array_equal(segs_a[k], segs_b[k])


class TestPooledRepr:
    def test_single_token(self):
        emb = np.zeros((4, 3))
        emb[0] = [1.0, 2.0, 3.0]
        np.testing.assert_array_equal(pooled_repr(emb, _mask(1, 4)), [1.0, 2.0, 3.0])

    def test_two_tokens(self):
        emb = np.zeros((4, 2))
        emb[0] = [1.0, 0.0]
        emb[1] = [0.0, 1.0]
        np.testing.assert_array_equal(pooled_repr(emb, _mask(2, 4)), [0.5, 0.5])

    def test_masked_mean_oracle(self):
        rng = rng_for(14)
        emb = _emb(rng, 5, 9, 6)
        mask = _mask(5, 9)
        expected = np.zeros(6)
        count = 0
        for i in range(9):
            if mask[i]:
                expected += emb[i]
                count += 1
        np.testing.assert_allclose(pooled_repr(emb, mask), expected / count, atol=1e-14)

    def test_backward_distributes_evenly(self):
        grad = np.array([3.0, 6.0])
        demb = pooled_repr_backward(grad, _mask(3, 5), (5, 2))
        np.testing.assert_array_equal(demb[:3], np.tile(grad / 3, (3, 1)))
        np.testing.assert_array_equal(demb[3:], np.zeros((2, 2)))

    def test_all_padding_rejected(self):
        with pytest.raises(ValueError, match="all-padding"):
            pooled_repr(np.zeros((3, 2)), np.zeros(3))
