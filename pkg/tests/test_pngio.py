import numpy as np
import pytest

from rgbdaug.errors import DatasetError
from rgbdaug.pngio import load_depth_png, load_rgb_png, save_depth_png, save_rgb_png


def test_rgb_round_trip(tmp_path):
    rng = np.random.default_rng(0)
    img = rng.integers(0, 256, (20, 30, 3), dtype=np.uint8)
    path = tmp_path / "a.png"
    save_rgb_png(path, img)
    assert np.array_equal(load_rgb_png(path), img)


def test_rgb_write_deterministic(tmp_path):
    rng = np.random.default_rng(1)
    img = rng.integers(0, 256, (20, 30, 3), dtype=np.uint8)
    save_rgb_png(tmp_path / "a.png", img)
    save_rgb_png(tmp_path / "b.png", img)
    assert (tmp_path / "a.png").read_bytes() == (tmp_path / "b.png").read_bytes()


def test_depth_round_trip_16bit(tmp_path):
    rng = np.random.default_rng(2)
    depth = rng.integers(0, 65536, (20, 30)).astype(np.uint16)
    path = tmp_path / "d.png"
    save_depth_png(path, depth)
    back = load_depth_png(path)
    assert back.dtype == np.uint16
    assert np.array_equal(back, depth)


def test_load_missing_raises(tmp_path):
    with pytest.raises(DatasetError):
        load_rgb_png(tmp_path / "nope.png")
    with pytest.raises(DatasetError):
        load_depth_png(tmp_path / "nope.png")


def test_load_wrong_kind_raises(tmp_path):
    # An 8-bit image is not a valid 16-bit depth map.
    img = np.zeros((4, 4, 3), dtype=np.uint8)
    save_rgb_png(tmp_path / "rgb.png", img)
    with pytest.raises(DatasetError):
        load_depth_png(tmp_path / "rgb.png")


def test_save_rejects_bad_arrays(tmp_path):
    with pytest.raises(DatasetError):
        save_rgb_png(tmp_path / "x.png", np.zeros((4, 4), dtype=np.uint8))
    with pytest.raises(DatasetError):
        save_depth_png(tmp_path / "x.png", np.zeros((4, 4), dtype=np.float32))
