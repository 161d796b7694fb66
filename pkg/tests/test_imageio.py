import numpy as np
import pytest

from nightsim.grids import PixelGrid
from nightsim.imageio import (ImageIOError, read_pfm, read_png, read_png16,
                              write_pfm, write_png, write_png16)


def test_pfm_gray_round_trip(tmp_path):
    rng = np.random.default_rng(0)
    d = PixelGrid(rng.uniform(0.1, 100.0, (7, 5)).astype(np.float32))
    p = tmp_path / "d.pfm"
    write_pfm(d, p)
    back = read_pfm(p)
    assert (back.height, back.width, back.channels) == (7, 5, 1)
    assert np.array_equal(back.plane(), d.plane())  # float32 exact


def test_pfm_color_round_trip(tmp_path):
    rng = np.random.default_rng(1)
    d = PixelGrid(rng.uniform(-1.0, 1.0, (4, 6, 3)).astype(np.float32))
    p = tmp_path / "n.pfm"
    write_pfm(d, p)
    assert np.array_equal(read_pfm(p).data, d.data)


def test_pfm_header_layout(tmp_path):
    p = tmp_path / "d.pfm"
    write_pfm(PixelGrid(np.ones((2, 3), dtype=np.float32)), p)
    raw = p.read_bytes()
    assert raw.startswith(b"Pf\n3 2\n-1.0\n")
    assert len(raw) == len(b"Pf\n3 2\n-1.0\n") + 2 * 3 * 4


def test_pfm_rows_stored_bottom_up(tmp_path):
    d = np.zeros((2, 2), dtype=np.float32)
    d[0, 0] = 7.0  # top-left in memory
    p = tmp_path / "d.pfm"
    write_pfm(PixelGrid(d), p)
    payload = np.frombuffer(p.read_bytes()[len(b"Pf\n2 2\n-1.0\n"):], dtype="<f4")
    # bottom row first: 7 appears in the second stored row
    assert payload[2] == 7.0


def test_pfm_rejects_big_endian(tmp_path):
    p = tmp_path / "be.pfm"
    p.write_bytes(b"Pf\n1 1\n1.0\n" + np.float32(1.0).tobytes())
    with pytest.raises(ImageIOError, match="endianness"):
        read_pfm(p)


def test_pfm_rejects_png_with_format_error(tmp_path):
    p = tmp_path / "actually.png"
    write_png(PixelGrid(np.zeros((2, 2), dtype=np.uint8)), p)
    with pytest.raises(ImageIOError, match="not a PFM"):
        read_pfm(p)


def test_pfm_rejects_truncated(tmp_path):
    p = tmp_path / "t.pfm"
    p.write_bytes(b"Pf\n4 4\n-1.0\n" + b"\x00" * 10)
    with pytest.raises(ImageIOError, match="truncated"):
        read_pfm(p)


def test_png_rgb_round_trip(tmp_path):
    rng = np.random.default_rng(2)
    img = PixelGrid(rng.integers(0, 256, (5, 4, 3)).astype(np.uint8))
    p = tmp_path / "c.png"
    write_png(img, p)
    assert np.array_equal(read_png(p).data, img.data)


def test_png_gray_round_trip(tmp_path):
    img = PixelGrid(np.arange(12, dtype=np.uint8).reshape(3, 4))
    p = tmp_path / "g.png"
    write_png(img, p)
    assert np.array_equal(read_png(p).plane(), img.plane())


def test_png_float_quantization(tmp_path):
    img = PixelGrid(np.array([[0.0, 0.5, 1.0]]))
    p = tmp_path / "f.png"
    write_png(img, p)
    assert list(read_png(p).plane()[0]) == [0, 128, 255]


def test_png16_round_trip(tmp_path):
    ids = np.array([[0, 1], [40000, 65535]], dtype=np.int64)
    p = tmp_path / "i.png"
    write_png16(ids, p)
    assert np.array_equal(read_png16(p).plane(), ids.astype(np.float64))


def test_png16_range_checked(tmp_path):
    with pytest.raises(ImageIOError):
        write_png16(np.array([[70000]]), tmp_path / "x.png")


def test_reading_16bit_with_8bit_reader_points_elsewhere(tmp_path):
    p = tmp_path / "i.png"
    write_png16(np.array([[1, 2]]), p)
    with pytest.raises(ImageIOError, match="read_png16"):
        read_png(p)
