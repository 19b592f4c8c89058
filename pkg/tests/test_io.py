import csv
import json
import struct

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from lrtc.errors import FormatError, ParameterError
from lrtc.io import (
    ImageTensor,
    PixelwiseRandomRule,
    RandomRule,
    RunSummary,
    SentinelColorRule,
    decode_mask,
    decode_ppm,
    decode_tensor,
    encode_mask,
    encode_ppm,
    encode_tensor,
    image_to_tensor,
    mask_from_image,
    parse_rule,
    read_image,
    read_mask,
    read_tensor,
    tensor_to_pixels,
    write_image,
    write_mask,
    write_summary_json,
    write_tensor,
    write_trace_csv,
)
from lrtc.solver import IterTrace, SamplingMask
from lrtc.tensor import DenseTensor


def test_tensor_roundtrip(tmp_path, rng):
    t = DenseTensor(rng.standard_normal((3, 4, 5)))
    path = tmp_path / "t.mrt"
    write_tensor(path, t)
    assert read_tensor(path) == t


def test_tensor_layout_on_disk():
    t = DenseTensor.from_flat(np.array([1.0, 2.0, 3.0, 4.0, 5.0, 6.0]), (2, 3))
    buf = encode_tensor(t)
    assert buf[:4] == b"MRT1"
    assert struct.unpack("<I", buf[4:8]) == (2,)
    assert struct.unpack("<2Q", buf[8:24]) == (2, 3)
    assert struct.unpack("<6d", buf[24:]) == (1.0, 2.0, 3.0, 4.0, 5.0, 6.0)


@given(arrays(np.float64, st.lists(st.integers(1, 4), min_size=1, max_size=4).map(tuple)))
def test_tensor_roundtrip_property(a):
    t = DenseTensor(a)
    back = decode_tensor(encode_tensor(t))
    assert back.shape == t.shape
    assert back.flat.tobytes() == t.flat.tobytes()


def test_tensor_format_errors(rng):
    with pytest.raises(FormatError, match="offset 0"):
        decode_tensor(b"")
    with pytest.raises(FormatError, match="magic"):
        decode_tensor(b"XXXX" + bytes(20))
    buf = encode_tensor(DenseTensor(rng.standard_normal((2, 2))))
    with pytest.raises(FormatError, match="missing 8 bytes"):
        decode_tensor(buf[:-8])
    with pytest.raises(FormatError, match="trailing"):
        decode_tensor(buf + b"\0")


def test_mask_roundtrip(tmp_path, rng):
    t = DenseTensor(rng.standard_normal((4, 5)))
    mask = SamplingMask.from_tensor(t, [0, 3, 7, 19])
    path = tmp_path / "m.mrm"
    write_mask(path, mask)
    assert read_mask(path, (4, 5)) == mask
    with pytest.raises(FormatError):
        decode_mask(encode_mask(mask), (2, 2))
    with pytest.raises(FormatError):
        decode_mask(encode_mask(mask)[:-3], (4, 5))


def test_trace_csv(tmp_path):
    path = tmp_path / "t.csv"
    write_trace_csv([], path, n_modes=3)
    assert path.read_text() == "iter,objective,rel_change,beta,elapsed_ms,res_1,res_2,res_3\n"
    rec = IterTrace(iter=1, objective=0.1, rel_change=1 / 3, residuals=(1.0, 2.0, 3.0), beta=0.1, elapsed_ms=2.5)
    write_trace_csv([rec], path)
    rows = list(csv.reader(path.open()))
    assert len(rows) == 2
    assert rows[1][2] == "0.33333333333333331"
    assert float(rows[1][2]) == 1 / 3


def test_summary_json(tmp_path):
    s = RunSummary((5, 5), 0.5, {"beta0": 0.1}, 10, "converged", 12.0)
    path = tmp_path / "s.json"
    write_summary_json(s, path)
    d = json.loads(path.read_text())
    assert "rel_err" not in d and "nrmse" not in d
    assert d["ranks"] is None
    assert list(d) == [
        "shape", "ranks", "sampling_ratio", "noise_sigma", "seed", "config", "iterations", "status", "wall_ms"
    ]
    s.rel_err = 1e-3
    assert list(s.to_dict())[-2] == "rel_err"


def test_image_to_tensor_values():
    black = image_to_tensor(np.zeros((2, 3, 3), dtype=np.uint8))
    assert black.tensor == DenseTensor.zeros((2, 3, 3))
    white = image_to_tensor(np.full((2, 3, 3), 255, dtype=np.uint8))
    assert white.tensor == DenseTensor(np.ones((2, 3, 3)))
    px = np.full((1, 1, 3), 128, dtype=np.uint8)
    assert image_to_tensor(px).tensor.array[0, 0, 0] == 128 / 255
    with pytest.raises(FormatError):
        image_to_tensor(px, depth=12)


@pytest.mark.parametrize("depth", [8, 16])
def test_pixels_roundtrip(rng, depth):
    top = (1 << depth) - 1
    px = rng.integers(0, top + 1, size=(7, 5, 3)).astype(np.uint8 if depth == 8 else np.uint16)
    img = image_to_tensor(px, depth)
    np.testing.assert_array_equal(tensor_to_pixels(img, depth), px)
    raw = encode_ppm(px, depth)
    back, d = decode_ppm(raw)
    assert d == depth
    np.testing.assert_array_equal(back, px)
    assert encode_ppm(back, depth) == raw


def test_ppm_file_roundtrip(tmp_path, rng):
    px = rng.integers(0, 256, size=(6, 9, 3)).astype(np.uint8)
    src = tmp_path / "a.ppm"
    src.write_bytes(encode_ppm(px))
    img = read_image(src)
    assert (img.height, img.width, img.depth) == (6, 9, 8)
    out = tmp_path / "b.ppm"
    write_image(out, img)
    assert out.read_bytes() == src.read_bytes()


def test_ppm_header_comments_and_errors():
    body = bytes(range(12))
    buf = b"P6\n# made by hand\n2 2\n# max\n255\n" + body
    px, depth = decode_ppm(buf)
    assert depth == 8 and px.shape == (2, 2, 3)
    assert px.reshape(-1).tolist() == list(body)
    with pytest.raises(FormatError):
        decode_ppm(b"P3\n2 2\n255\n")
    with pytest.raises(FormatError, match="missing"):
        decode_ppm(b"P6\n2 2\n255\n" + body[:-1])
    with pytest.raises(FormatError, match="maxval"):
        decode_ppm(b"P6\n2 2\n1023\n" + body * 2)


def test_png_via_pillow(tmp_path, rng):
    pytest.importorskip("PIL")
    px = rng.integers(0, 256, size=(4, 6, 3)).astype(np.uint8)
    path = tmp_path / "x.png"
    write_image(path, image_to_tensor(px))
    np.testing.assert_array_equal(tensor_to_pixels(read_image(path)), px)


def test_write_image_clamps(tmp_path):
    t = DenseTensor(np.array([[[-0.5, 0.5, 1.7]]]))
    path = tmp_path / "c.ppm"
    write_image(path, t)
    px, _ = decode_ppm(path.read_bytes())
    assert px.reshape(-1).tolist() == [0, 128, 255]


def _image(rng, h=10, w=8):
    return image_to_tensor(rng.integers(0, 256, size=(h, w, 3)).astype(np.uint8))


def test_random_rule(rng):
    img = _image(rng)
    assert mask_from_image(img, RandomRule(1.0)).size == 240
    m = mask_from_image(img, RandomRule(0.3, seed=4))
    assert m.size == 72
    np.testing.assert_array_equal(m.values, img.tensor.flat[m.indices])
    assert mask_from_image(img, RandomRule(0.3, seed=4)) == m
    with pytest.raises(ParameterError):
        mask_from_image(img, RandomRule(0.0))


def test_pixelwise_rule_removes_channel_triples(rng):
    img = _image(rng)
    m = mask_from_image(img, PixelwiseRandomRule(0.3, seed=2))
    assert m.size % 3 == 0 and m.size == 3 * 24
    kept = np.zeros(img.tensor.size, dtype=bool)
    kept[m.indices] = True
    per_pixel = kept.reshape((10, 8, 3), order="F").sum(axis=2)
    assert set(np.unique(per_pixel)) <= {0, 3}


def test_sentinel_rule_counts(rng):
    px = rng.integers(0, 200, size=(10, 8, 3)).astype(np.uint8)
    flat = px.reshape(-1, 3)
    chosen = rng.choice(80, size=10, replace=False)
    flat[chosen] = (255, 0, 255)
    img = image_to_tensor(px)
    m = mask_from_image(img, SentinelColorRule((255, 0, 255)))
    assert img.tensor.size - m.size == 30


def test_parse_rule():
    assert parse_rule("random:0.3:7") == RandomRule(0.3, 7)
    assert parse_rule("pixel:0.5") == PixelwiseRandomRule(0.5, 0)
    assert parse_rule("sentinel:255,0,255") == SentinelColorRule((255, 0, 255))
    for bad in ("random", "blob:1", "sentinel:1,2"):
        with pytest.raises(ParameterError):
            parse_rule(bad)


def test_image_tensor_needs_three_channels():
    from lrtc.errors import DimensionError

    with pytest.raises(DimensionError):
        ImageTensor(DenseTensor.zeros((2, 2, 4)))
