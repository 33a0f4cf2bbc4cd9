import numpy as np
import pytest
from PIL import Image

from qhardy.image_io import ImageFormatError, load_image, save_image, to_uint8
from qhardy.scale_space import ScalarField


def test_tiny_pgm(tmp_path):
    p = tmp_path / "t.pgm"
    p.write_bytes(b"P5\n2 2\n255\n" + bytes([0, 85, 170, 255]))
    assert load_image(p).data.tolist() == [[0, 85], [170, 255]]


def test_pgm_with_comments_and_low_maxval(tmp_path):
    p = tmp_path / "c.pgm"
    p.write_bytes(b"P5\n# made by hand\n3 1\n# depth\n15\n" + bytes([0, 5, 15]))
    assert load_image(p).data.tolist() == [[0, 85, 255]]


@pytest.mark.parametrize(
    "payload,reason",
    [
        (b"P5\n4 4\n255\n" + bytes(10), "truncated"),
        (b"P5\n2 2\n65535\n" + bytes(8), "8-bit"),
        (b"P5 garbage", "header"),
        (b"GIF89a....", "unsupported format"),
    ],
)
def test_bad_files_name_path_and_reason(tmp_path, payload, reason):
    p = tmp_path / "bad.img"
    p.write_bytes(payload)
    with pytest.raises(ImageFormatError) as info:
        load_image(p)
    assert str(p) in str(info.value)
    assert reason in str(info.value)


def test_missing_file(tmp_path):
    with pytest.raises(ImageFormatError) as info:
        load_image(tmp_path / "nope.png")
    assert "nope.png" in str(info.value)


def test_corrupt_png(tmp_path):
    p = tmp_path / "x.png"
    p.write_bytes(b"\x89PNG\r\n\x1a\n" + b"junk")
    with pytest.raises(ImageFormatError):
        load_image(p)


@pytest.mark.parametrize("suffix", [".pgm", ".png"])
def test_round_trip(tmp_path, rng, suffix):
    data = rng.integers(0, 256, (7, 9)).astype(float)
    p = tmp_path / f"r{suffix}"
    save_image(ScalarField(data), p)
    assert np.array_equal(load_image(p).data, data)


def test_rgb_png_uses_bt601_luma(tmp_path):
    p = tmp_path / "rgb.png"
    Image.fromarray(np.array([[[128, 64, 32]]], dtype=np.uint8)).save(p)
    assert load_image(p).data[0, 0] == pytest.approx(0.299 * 128 + 0.587 * 64 + 0.114 * 32)


def test_save_clamps_and_rounds_half_to_even():
    assert to_uint8(np.array([[-3.0, 2.5, 3.5, 300.0]])).tolist() == [[0, 2, 4, 255]]


def test_unsupported_suffix(tmp_path):
    with pytest.raises(ImageFormatError):
        save_image(np.zeros((2, 2)), tmp_path / "x.bmp")
