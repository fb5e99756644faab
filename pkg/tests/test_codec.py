"""Reference codec: carriers, embed/decode round trip, analytic gradient."""

import numpy as np
import pytest

from framemark import (
    CodecKey,
    DimensionError,
    SpreadSpectrumCodec,
    Video,
    Watermark,
    bitwise_accuracy,
    carriers,
    decode_frame,
    decode_video,
    decoder_gradient,
    embed,
    round_logits,
    synth_video,
)

KEY = CodecKey(seed=9, n=32, height=64, width=64)


def gray_video(f=3, h=64, w=64, c=3):
    return Video(np.full((f, h, w, c), 0.5, dtype=np.float32))


def test_carriers_are_sign_patterns_and_deterministic():
    pats = carriers(KEY)
    assert pats.shape == (32, 64, 64, 3)
    assert np.all(np.abs(pats) == 1.0)
    again = carriers(CodecKey(seed=9, n=32, height=64, width=64))
    assert np.array_equal(pats, again)
    other = carriers(CodecKey(seed=10, n=32, height=64, width=64))
    assert not np.array_equal(pats, other)


def test_carriers_near_orthogonal():
    key = CodecKey(seed=4, n=64, height=64, width=64)
    flat = carriers(key).reshape(64, -1)
    gram = flat @ flat.T / flat.shape[1]
    off = gram - np.diag(np.diag(gram))
    assert np.abs(off).max() <= 0.05


def test_embed_zero_strength_wont_build():
    with pytest.raises(ValueError):
        CodecKey(seed=1, n=8, height=16, width=16, alpha=0.0)


def test_embed_is_deterministic_and_preserves_range():
    video = synth_video(4, 64, 64, seed=2)
    wm = Watermark.random(32, seed=5)
    a = embed(video, KEY, wm)
    b = embed(video, KEY, wm)
    assert np.array_equal(a.frames, b.frames)
    assert a.frames.min() >= 0.0 and a.frames.max() <= 1.0
    assert a.shape == video.shape


def test_embed_shape_mismatch_rejected():
    video = synth_video(2, 32, 32, seed=0)
    wm = Watermark.random(32, seed=5)
    with pytest.raises(DimensionError):
        embed(video, KEY, wm)


def test_embed_then_decode_recovers_bits_on_gray():
    wm = Watermark.random(32, seed=13)
    key = CodecKey(seed=9, n=32, height=64, width=64, alpha=0.02)
    marked = embed(gray_video(), key, wm)
    logits = decode_video(marked, key)
    for row in logits:
        assert np.array_equal(round_logits(row), wm.bits)


def test_decode_gray_frame_gives_half():
    logits = decode_frame(np.full((64, 64, 3), 0.5), KEY)
    assert np.all(logits == 0.5)


def test_decode_single_carrier_pushes_logit_up():
    pats = carriers(KEY)
    frame = np.clip(0.5 + 0.02 * pats[7], 0.0, 1.0)
    logits = decode_frame(frame, KEY)
    assert logits[7] > 0.5


def test_decode_deterministic_and_video_matches_frames():
    video = synth_video(5, 64, 64, seed=3)
    a = decode_video(video, KEY)
    b = decode_video(video, KEY)
    assert np.array_equal(a, b)
    for i in range(video.frame_count):
        assert decode_frame(video.frame(i), KEY) == pytest.approx(a[i], abs=1e-12)


def test_decode_dimension_mismatch():
    with pytest.raises(DimensionError):
        decode_frame(np.full((32, 32, 3), 0.5), KEY)


def test_linear_activation_is_unbounded():
    key = CodecKey(seed=9, n=32, height=64, width=64, activation="linear")
    wm = Watermark.random(32, seed=13)
    marked = embed(gray_video(), key, wm)
    logits = decode_video(marked, key)
    assert logits.max() > 1.0 and logits.min() < 0.0
    for row in logits:
        assert np.array_equal(round_logits(row), wm.bits)


def test_decoder_gradient_zero_weights():
    grad = decoder_gradient(np.full((64, 64, 3), 0.5), KEY, np.zeros(32))
    assert np.all(grad == 0.0)


@pytest.mark.parametrize("activation", ["sigmoid", "linear"])
def test_decoder_gradient_matches_finite_differences(activation):
    key = CodecKey(seed=2, n=8, height=12, width=10, channels=3, activation=activation)
    rng = np.random.default_rng(21)
    step = 1e-4
    for _ in range(20):
        frame = rng.uniform(0.2, 0.8, size=(12, 10, 3))
        weights = rng.normal(size=8)
        grad = decoder_gradient(frame, key, weights)

        probes = rng.integers(0, 12 * 10 * 3, size=6)
        for flat_idx in probes:
            idx = np.unravel_index(flat_idx, (12, 10, 3))
            hi, lo = frame.copy(), frame.copy()
            hi[idx] += step
            lo[idx] -= step
            fd = (
                weights @ decode_frame(hi, key) - weights @ decode_frame(lo, key)
            ) / (2 * step)
            scale = max(abs(fd), abs(grad[idx]), 1e-12)
            assert abs(fd - grad[idx]) / scale <= 1e-4


def test_decoder_gradient_points_along_carrier_at_gray():
    weights = np.zeros(32)
    weights[11] = 1.0
    grad = decoder_gradient(np.full((64, 64, 3), 0.5), KEY, weights)
    carrier = carriers(KEY)[11]
    cos = np.vdot(grad, carrier) / (np.linalg.norm(grad) * np.linalg.norm(carrier))
    assert cos > 0.999


def test_round_logits_boundary_and_idempotence():
    assert np.array_equal(round_logits(np.array([0.5])), np.array([1]))
    assert np.array_equal(round_logits(np.full(6, 0.49)), np.zeros(6, dtype=np.uint8))
    y = np.array([0.1, 0.5, 0.9, 0.49])
    bits = round_logits(y)
    assert np.array_equal(round_logits(bits.astype(float)), bits)
    with pytest.raises(ValueError):
        round_logits(np.array([np.nan]))


def test_bitwise_accuracy_examples():
    wg = Watermark.random(8, seed=1)
    assert bitwise_accuracy(wg, wg) == 1.0
    assert bitwise_accuracy(1 - wg.bits, wg) == 0.0
    assert bitwise_accuracy([1, 0, 1, 1], [1, 0, 1, 0]) == 0.75
    with pytest.raises(DimensionError):
        bitwise_accuracy([1, 0], [1, 0, 1])


def test_watermark_hex_round_trip():
    wm = Watermark.random(20, seed=8)
    again = Watermark.from_hex(wm.to_hex(), 20)
    assert np.array_equal(wm.bits, again.bits)
    with pytest.raises(ValueError):
        Watermark.from_hex("ab", 20)


def test_embed_decode_consistency_over_many_seeds():
    # alpha in [0.01, 0.05], n <= 64: rounding the decode of every embedded
    # frame recovers the watermark exactly.
    rng = np.random.default_rng(99)
    for trial in range(100):
        alpha = float(rng.uniform(0.01, 0.05))
        n = int(rng.integers(1, 65))
        key = CodecKey(seed=int(rng.integers(2**32)), n=n,
                       height=64, width=64, alpha=alpha)
        wm = Watermark.random(n, seed=int(rng.integers(2**32)))
        video = synth_video(2, 64, 64, seed=int(rng.integers(2**32)),
                            motion="fast" if trial % 2 else "slow")
        logits = decode_video(embed(video, key, wm), key)
        for row in logits:
            assert np.array_equal(round_logits(row), wm.bits)


def test_codec_class_mirrors_functions():
    codec = SpreadSpectrumCodec(KEY)
    video = synth_video(3, 64, 64, seed=4)
    wm = Watermark.random(32, seed=6)
    assert codec.n == 32
    assert np.array_equal(codec.embed(video, wm).frames, embed(video, KEY, wm).frames)
    assert np.array_equal(codec.decode_video(video), decode_video(video, KEY))
