"""Video type invariants, container I/O, PNG import, synthetic generator."""

import numpy as np
import pytest
from PIL import Image

from framemark import (
    ContainerError,
    DimensionError,
    Video,
    load_video,
    read_container,
    read_png_dir,
    scale_contrast,
    synth_video,
    write_container,
)


def random_video(seed=0, shape=(3, 20, 24, 3)):
    rng = np.random.default_rng(seed)
    return Video(rng.uniform(0, 1, size=shape).astype(np.float32))


def test_video_validation():
    with pytest.raises(DimensionError):
        Video(np.zeros((0, 4, 4, 3), dtype=np.float32))
    with pytest.raises(DimensionError):
        Video(np.zeros((2, 4, 4, 2), dtype=np.float32))
    with pytest.raises(ValueError):
        Video(np.full((1, 4, 4, 3), 1.5, dtype=np.float32))
    with pytest.raises(ValueError):
        Video(np.full((1, 4, 4, 3), np.nan, dtype=np.float32))


def test_video_is_immutable():
    video = random_video()
    with pytest.raises(ValueError):
        video.frames[0, 0, 0, 0] = 0.0


def test_container_round_trip_is_bit_exact(tmp_path):
    for seed in range(5):
        video = random_video(seed)
        path = tmp_path / f"clip{seed}.vmb"
        write_container(video, path)
        again = read_container(path)
        assert np.array_equal(video.frames, again.frames)


def test_container_header_layout(tmp_path):
    video = random_video(1, shape=(2, 3, 4, 1))
    path = tmp_path / "clip.vmb"
    write_container(video, path)
    raw = path.read_bytes()
    assert raw[:4] == b"VMB1"
    assert np.frombuffer(raw[4:20], dtype="<u4").tolist() == [2, 3, 4, 1]
    assert len(raw) == 20 + 2 * 3 * 4 * 1 * 4


def test_container_bad_magic(tmp_path):
    path = tmp_path / "clip.vmb"
    write_container(random_video(), path)
    raw = bytearray(path.read_bytes())
    raw[:4] = b"NOPE"
    path.write_bytes(bytes(raw))
    with pytest.raises(ContainerError):
        read_container(path)


def test_container_truncated_and_empty(tmp_path):
    path = tmp_path / "clip.vmb"
    write_container(random_video(), path)
    raw = path.read_bytes()
    path.write_bytes(raw[: len(raw) // 2])
    with pytest.raises(ContainerError):
        read_container(path)
    empty = tmp_path / "empty.vmb"
    empty.write_bytes(b"")
    with pytest.raises(ContainerError):
        read_container(empty)


def test_png_dir_import(tmp_path):
    rng = np.random.default_rng(3)
    frames = rng.integers(0, 256, size=(4, 10, 12, 3), dtype=np.uint8)
    for i, frame in enumerate(frames):
        Image.fromarray(frame, mode="RGB").save(tmp_path / f"{i}.png")
    video = read_png_dir(tmp_path)
    assert video.shape == (4, 10, 12, 3)
    assert np.allclose(video.frames, frames.astype(np.float32) / 255.0)
    assert np.array_equal(load_video(tmp_path).frames, video.frames)


def test_png_dir_numeric_ordering(tmp_path):
    for i, value in [(10, 30), (2, 99), (0, 7)]:
        arr = np.full((4, 4), value, dtype=np.uint8)
        Image.fromarray(arr, mode="L").save(tmp_path / f"{i}.png")
    video = read_png_dir(tmp_path)
    got = [int(round(video.frames[t, 0, 0, 0] * 255)) for t in range(3)]
    assert got == [7, 99, 30]


def test_png_dir_without_frames(tmp_path):
    with pytest.raises(ContainerError):
        read_png_dir(tmp_path)


def test_synth_video_determinism_and_seed_variation():
    a = synth_video(5, 32, 40, seed=4, motion="slow")
    b = synth_video(5, 32, 40, seed=4, motion="slow")
    c = synth_video(5, 32, 40, seed=5, motion="slow")
    assert np.array_equal(a.frames, b.frames)
    assert float(a.frames.sum()) != float(c.frames.sum())
    assert a.shape == (5, 32, 40, 3)


def test_synth_video_single_frame_and_motion():
    single = synth_video(1, 16, 16, seed=0)
    assert single.frame_count == 1
    slow = synth_video(6, 32, 32, seed=1, motion="slow")
    fast = synth_video(6, 32, 32, seed=1, motion="fast")
    d_slow = np.abs(np.diff(slow.frames.astype(np.float64), axis=0)).mean()
    d_fast = np.abs(np.diff(fast.frames.astype(np.float64), axis=0)).mean()
    assert d_fast > d_slow


def test_synth_video_rejects_zero_dims():
    with pytest.raises(DimensionError):
        synth_video(0, 8, 8)
    with pytest.raises(DimensionError):
        synth_video(2, 0, 8)


def test_scale_contrast():
    video = random_video(2)
    flat = scale_contrast(video, 0.0)
    assert np.allclose(flat.frames, 0.5)
    same = scale_contrast(video, 1.0)
    assert np.allclose(same.frames, video.frames, atol=1e-7)
    half = scale_contrast(video, 0.5)
    assert half.frames.std() < video.frames.std()
