"""File formats: tensors, masks, traces, run summaries and images.

Binary layouts (all little-endian):

* tensor ``MRT1``: magic, u32 N, N x u64 extents, prod(extents) x f64 entries
  first-index-fastest.
* mask ``MRM1``: magic, u64 count, count x u64 offsets, count x f64 values.
  The shape is not stored; it travels with the truth tensor or the CLI flags.

Images are H x W x 3 tensors with entries ``value / (2**depth - 1)``. Binary
PPM (P6, 8- or 16-bit) is read and written natively; other formats go through
Pillow when it is installed.
"""

from __future__ import annotations

import csv
import json
import math
import os
import struct
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Dict, Iterable, Optional, Sequence, Tuple, Union

import numpy as np

from .errors import DimensionError, FormatError, ParameterError
from .problems import mask_count, sample_offsets, substreams
from .solver import IterTrace, SamplingMask
from .tensor import DenseTensor, Shape, as_shape

PathLike = Union[str, os.PathLike]

TENSOR_MAGIC = b"MRT1"
MASK_MAGIC = b"MRM1"


def _need(buf: bytes, offset: int, n: int, what: str) -> None:
    if len(buf) < offset + n:
        missing = offset + n - len(buf)
        raise FormatError(f"truncated {what}: missing {missing} bytes", offset=len(buf))


def encode_tensor(t: DenseTensor) -> bytes:
    head = TENSOR_MAGIC + struct.pack("<I", t.ndim) + struct.pack(f"<{t.ndim}Q", *t.shape)
    return head + np.ascontiguousarray(t.flat, dtype="<f8").tobytes()


def decode_tensor(buf: bytes) -> DenseTensor:
    _need(buf, 0, 4, "tensor header")
    if buf[:4] != TENSOR_MAGIC:
        raise FormatError(f"bad magic {buf[:4]!r}, expected {TENSOR_MAGIC!r}", offset=0)
    _need(buf, 4, 4, "tensor header")
    (ndim,) = struct.unpack_from("<I", buf, 4)
    if ndim < 1:
        raise FormatError("tensor must have at least one mode", offset=4)
    _need(buf, 8, 8 * ndim, "extent list")
    dims = struct.unpack_from(f"<{ndim}Q", buf, 8)
    try:
        shape = as_shape(dims)
    except DimensionError as exc:
        raise FormatError(f"invalid extents {dims}: {exc}", offset=8) from exc
    start = 8 + 8 * ndim
    count = math.prod(shape)
    _need(buf, start, 8 * count, "tensor payload")
    if len(buf) != start + 8 * count:
        raise FormatError(f"{len(buf) - start - 8 * count} trailing bytes", offset=start + 8 * count)
    data = np.frombuffer(buf, dtype="<f8", count=count, offset=start)
    return DenseTensor.from_flat(data.astype(np.float64), shape)


def write_tensor(path: PathLike, t: DenseTensor) -> None:
    Path(path).write_bytes(encode_tensor(t))


def read_tensor(path: PathLike) -> DenseTensor:
    return decode_tensor(Path(path).read_bytes())


def encode_mask(mask: SamplingMask) -> bytes:
    return (
        MASK_MAGIC
        + struct.pack("<Q", mask.size)
        + np.ascontiguousarray(mask.indices, dtype="<u8").tobytes()
        + np.ascontiguousarray(mask.values, dtype="<f8").tobytes()
    )


def decode_mask(buf: bytes, shape: Sequence[int]) -> SamplingMask:
    _need(buf, 0, 4, "mask header")
    if buf[:4] != MASK_MAGIC:
        raise FormatError(f"bad magic {buf[:4]!r}, expected {MASK_MAGIC!r}", offset=0)
    _need(buf, 4, 8, "mask header")
    (count,) = struct.unpack_from("<Q", buf, 4)
    _need(buf, 12, 16 * count, "mask payload")
    if len(buf) != 12 + 16 * count:
        raise FormatError(f"{len(buf) - 12 - 16 * count} trailing bytes", offset=12 + 16 * count)
    offsets = np.frombuffer(buf, dtype="<u8", count=count, offset=12)
    if count and int(offsets.max()) > np.iinfo(np.int64).max:
        raise FormatError("offset exceeds the index range", offset=12)
    values = np.frombuffer(buf, dtype="<f8", count=count, offset=12 + 8 * count)
    try:
        return SamplingMask(as_shape(shape), offsets.astype(np.int64), values.astype(np.float64))
    except DimensionError as exc:
        raise FormatError(f"mask does not fit shape {tuple(shape)}: {exc}") from exc


def write_mask(path: PathLike, mask: SamplingMask) -> None:
    Path(path).write_bytes(encode_mask(mask))


def read_mask(path: PathLike, shape: Sequence[int]) -> SamplingMask:
    return decode_mask(Path(path).read_bytes(), shape)


# ---------------------------------------------------------------- traces, summaries


def _g17(v: float) -> str:
    return format(float(v), ".17g")


def trace_header(n_modes: int):
    return ["iter", "objective", "rel_change", "beta", "elapsed_ms"] + [
        f"res_{i}" for i in range(1, n_modes + 1)
    ]


def write_trace_csv(trace: Sequence[IterTrace], path: PathLike, n_modes: Optional[int] = None) -> None:
    """One row per iteration; floats carry 17 significant digits."""
    if n_modes is None:
        n_modes = len(trace[0].residuals) if trace else 0
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(trace_header(n_modes))
        for rec in trace:
            w.writerow(
                [str(rec.iter), _g17(rec.objective), _g17(rec.rel_change), _g17(rec.beta), _g17(rec.elapsed_ms)]
                + [_g17(r) for r in rec.residuals]
            )


@dataclass
class RunSummary:
    """One solve, in the shape of a results-table row.

    Serialized keys, in order: shape, ranks, sampling_ratio, noise_sigma,
    seed, config, iterations, status, rel_err, nrmse, wall_ms. ``rel_err``
    and ``nrmse`` are omitted when no ground truth was given; unknown spec
    fields are written as null.
    """

    shape: Tuple[int, ...]
    sampling_ratio: float
    config: Dict[str, Any]
    iterations: int
    status: str
    wall_ms: float
    ranks: Optional[Tuple[int, ...]] = None
    noise_sigma: Optional[float] = None
    seed: Optional[int] = None
    rel_err: Optional[float] = None
    nrmse: Optional[float] = None

    def to_dict(self) -> Dict[str, Any]:
        d: Dict[str, Any] = {
            "shape": list(self.shape),
            "ranks": list(self.ranks) if self.ranks is not None else None,
            "sampling_ratio": self.sampling_ratio,
            "noise_sigma": self.noise_sigma,
            "seed": self.seed,
            "config": dict(self.config),
            "iterations": self.iterations,
            "status": self.status,
        }
        if self.rel_err is not None:
            d["rel_err"] = self.rel_err
        if self.nrmse is not None:
            d["nrmse"] = self.nrmse
        d["wall_ms"] = self.wall_ms
        return d


def write_summary_json(summary: RunSummary, path: PathLike) -> None:
    with open(path, "w") as fh:
        json.dump(summary.to_dict(), fh, indent=2)
        fh.write("\n")


# ---------------------------------------------------------------- images


@dataclass(frozen=True)
class ImageTensor:
    tensor: DenseTensor
    source: Optional[str] = None
    depth: int = 8

    def __post_init__(self):
        shape = self.tensor.shape
        if len(shape) != 3 or shape[2] != 3:
            raise DimensionError(f"an image tensor must be H x W x 3, got {shape}")
        _check_depth(self.depth)

    @property
    def height(self) -> int:
        return self.tensor.shape[0]

    @property
    def width(self) -> int:
        return self.tensor.shape[1]


def _check_depth(depth: int) -> int:
    if depth not in (8, 16):
        raise FormatError(f"unsupported pixel depth {depth}; use 8 or 16 bits")
    return depth


def image_to_tensor(pixels, depth: int = 8, source: Optional[str] = None) -> ImageTensor:
    """Scale integer channel values into [0, 1]."""
    _check_depth(depth)
    px = np.asarray(pixels)
    if px.ndim != 3 or px.shape[2] != 3 or px.shape[0] < 1 or px.shape[1] < 1:
        raise DimensionError(f"expected an H x W x 3 image, got shape {px.shape}")
    top = (1 << depth) - 1
    if px.min() < 0 or px.max() > top:
        raise FormatError(f"channel values outside 0..{top} for {depth}-bit depth")
    return ImageTensor(DenseTensor(px.astype(np.float64) / top), source, depth)


def tensor_to_pixels(t: Union[DenseTensor, ImageTensor], depth: int = 8) -> np.ndarray:
    """Clamp to [0, 1] and quantize to the nearest channel value."""
    if isinstance(t, ImageTensor):
        t = t.tensor
    top = (1 << _check_depth(depth)) - 1
    a = np.clip(t.array, 0.0, 1.0)
    return np.rint(a * top).astype(np.uint8 if depth == 8 else np.uint16)


def _ppm_tokens(buf: bytes, count: int):
    """Read ``count`` whitespace-separated header tokens, skipping comments."""
    tokens = []
    pos = 0
    n = len(buf)
    while len(tokens) < count:
        while pos < n and (buf[pos:pos + 1].isspace() or buf[pos:pos + 1] == b"#"):
            if buf[pos:pos + 1] == b"#":
                while pos < n and buf[pos:pos + 1] not in (b"\n", b"\r"):
                    pos += 1
            else:
                pos += 1
        start = pos
        while pos < n and not buf[pos:pos + 1].isspace() and buf[pos:pos + 1] != b"#":
            pos += 1
        if start == pos:
            raise FormatError("truncated PPM header", offset=pos)
        tokens.append((buf[start:pos], start))
    # exactly one whitespace byte separates the header from the raster
    if pos >= n or not buf[pos:pos + 1].isspace():
        raise FormatError("missing whitespace after PPM header", offset=pos)
    return tokens, pos + 1


def decode_ppm(buf: bytes) -> Tuple[np.ndarray, int]:
    """Parse a binary P6 pixmap into (H x W x 3 integer array, depth)."""
    if len(buf) < 2 or buf[:2] != b"P6":
        raise FormatError("not a binary PPM (P6) file", offset=0)
    tokens, pos = _ppm_tokens(buf[2:], 3)
    pos += 2
    values = []
    for tok, off in tokens:
        try:
            values.append(int(tok))
        except ValueError:
            raise FormatError(f"bad PPM header field {tok!r}", offset=off + 2) from None
    width, height, maxval = values
    if width < 1 or height < 1:
        raise FormatError(f"bad PPM size {width}x{height}", offset=2)
    if maxval == 255:
        depth, dtype = 8, np.dtype("u1")
    elif maxval == 65535:
        depth, dtype = 16, np.dtype(">u2")
    else:
        raise FormatError(f"unsupported PPM maxval {maxval}; use 255 or 65535")
    nbytes = width * height * 3 * dtype.itemsize
    _need(buf, pos, nbytes, "PPM raster")
    px = np.frombuffer(buf, dtype=dtype, count=width * height * 3, offset=pos)
    px = px.reshape(height, width, 3).astype(np.uint8 if depth == 8 else np.uint16)
    return px, depth


def encode_ppm(pixels, depth: int = 8) -> bytes:
    _check_depth(depth)
    px = np.asarray(pixels)
    if px.ndim != 3 or px.shape[2] != 3:
        raise DimensionError(f"expected an H x W x 3 image, got shape {px.shape}")
    top = (1 << depth) - 1
    if px.min() < 0 or px.max() > top:
        raise FormatError(f"channel values outside 0..{top}")
    h, w, _ = px.shape
    dtype = "u1" if depth == 8 else ">u2"
    return f"P6\n{w} {h}\n{top}\n".encode("ascii") + np.ascontiguousarray(px, dtype=dtype).tobytes()


def read_image(path: PathLike) -> ImageTensor:
    """Load an image as an :class:`ImageTensor` (PPM natively, else via Pillow)."""
    path = Path(path)
    buf = path.read_bytes()
    if buf[:2] == b"P6":
        px, depth = decode_ppm(buf)
    else:
        try:
            from PIL import Image
        except ImportError:  # pragma: no cover - Pillow is optional
            raise FormatError(f"{path}: only binary PPM is supported without Pillow") from None
        with Image.open(path) as im:
            if im.mode in ("I;16", "I;16B", "I;16L"):
                raise FormatError(f"{path}: 16-bit grayscale is not a colour image")
            px = np.asarray(im.convert("RGB"))
        depth = 8
    return image_to_tensor(px, depth, source=str(path))


def write_image(path: PathLike, image: Union[ImageTensor, DenseTensor], depth: Optional[int] = None) -> None:
    """Clamp, quantize and save. ``.ppm``/``.pnm`` is native; other suffixes need Pillow."""
    path = Path(path)
    if depth is None:
        depth = image.depth if isinstance(image, ImageTensor) else 8
    px = tensor_to_pixels(image, depth)
    if path.suffix.lower() in (".ppm", ".pnm"):
        path.write_bytes(encode_ppm(px, depth))
        return
    if depth != 8:
        raise FormatError("only PPM output supports 16-bit depth")
    from PIL import Image

    Image.fromarray(px, mode="RGB").save(path)


# ---------------------------------------------------------------- missing-entry rules


@dataclass(frozen=True)
class RandomRule:
    """Keep a uniform sample of ``sr`` of all H*W*3 entries."""

    sr: float
    seed: int = 0


@dataclass(frozen=True)
class PixelwiseRandomRule:
    """Keep a uniform sample of ``sr`` of the H*W pixels, all three channels together."""

    sr: float
    seed: int = 0


@dataclass(frozen=True)
class SentinelColorRule:
    """Pixels whose channels all equal ``color`` (integer values at the image depth) are missing."""

    color: Tuple[int, int, int]


MissingRule = Union[RandomRule, PixelwiseRandomRule, SentinelColorRule]


def parse_rule(text: str) -> MissingRule:
    """Parse ``random:SR[:SEED]``, ``pixel:SR[:SEED]`` or ``sentinel:R,G,B``."""
    kind, _, rest = text.partition(":")
    kind = kind.strip().lower()
    try:
        if kind in ("random", "pixel", "pixelwise", "pixelwise-random"):
            parts = rest.split(":")
            sr = float(parts[0])
            seed = int(parts[1]) if len(parts) > 1 and parts[1] else 0
            cls = RandomRule if kind == "random" else PixelwiseRandomRule
            return cls(sr, seed)
        if kind in ("sentinel", "sentinel-color"):
            color = tuple(int(c) for c in rest.split(","))
            if len(color) != 3:
                raise ValueError
            return SentinelColorRule(color)
    except ValueError:
        pass
    raise ParameterError(f"cannot parse missing-entry rule {text!r}")


def _check_sr(sr: float) -> float:
    if not 0 < sr <= 1:
        raise ParameterError(f"sampling ratio must lie in (0, 1], got {sr}")
    return float(sr)


def mask_from_image(image: ImageTensor, rule: MissingRule) -> SamplingMask:
    """Sampling mask of the retained entries of ``image`` under ``rule``."""
    t = image.tensor
    h, w, _ = t.shape
    sites = h * w
    if isinstance(rule, RandomRule):
        sr = _check_sr(rule.sr)
        rng = substreams(rule.seed)[3]
        idx = sample_offsets(rng, t.size, mask_count(sr, t.size))
    elif isinstance(rule, PixelwiseRandomRule):
        sr = _check_sr(rule.sr)
        rng = substreams(rule.seed)[3]
        pix = sample_offsets(rng, sites, mask_count(sr, sites))
        idx = np.concatenate([pix + c * sites for c in range(3)])
    elif isinstance(rule, SentinelColorRule):
        top = (1 << image.depth) - 1
        color = np.asarray(rule.color, dtype=np.float64) / top
        hit = np.all(t.array == color.reshape(1, 1, 3), axis=2)
        keep = np.flatnonzero(~hit.reshape(-1, order="F"))
        if keep.size == 0:
            raise ParameterError("every pixel matches the sentinel colour")
        idx = np.concatenate([keep + c * sites for c in range(3)])
    else:
        raise ParameterError(f"unknown missing-entry rule {rule!r}")
    return SamplingMask.from_tensor(t, idx)
