"""Raster I/O, native classical upscalers, and luma extraction.

Images are 8-bit RGB throughout. The two classical upscalers the harness
implements natively are nearest-neighbor and separable Lanczos; neural
upscalers are always remote backends.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass

import numpy as np
from PIL import Image, UnidentifiedImageError

from .errors import DecodeError, SizeOverflow

MAX_SIDE = 16384


@dataclass(frozen=True)
class ImageBuffer:
    """Row-major RGB8 raster."""

    pixels: np.ndarray  # (height, width, 3) uint8

    def __post_init__(self):
        px = self.pixels
        if px.ndim != 3 or px.shape[2] != 3 or px.dtype != np.uint8:
            raise ValueError(f"expected (H, W, 3) uint8, got {px.shape} {px.dtype}")

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    def __eq__(self, other):
        return isinstance(other, ImageBuffer) and np.array_equal(self.pixels, other.pixels)


def decode_png(data: bytes) -> ImageBuffer:
    """Decode PNG bytes to RGB8, compositing any alpha over white."""
    try:
        img = Image.open(io.BytesIO(data))
        img.load()
    except (UnidentifiedImageError, OSError, ValueError) as exc:
        raise DecodeError(str(exc)) from exc
    if img.mode in ("RGBA", "LA", "PA") or (img.mode == "P" and "transparency" in img.info):
        img = img.convert("RGBA")
        bg = Image.new("RGBA", img.size, (255, 255, 255, 255))
        img = Image.alpha_composite(bg, img)
    img = img.convert("RGB")
    return ImageBuffer(np.asarray(img, dtype=np.uint8).copy())


def encode_png(img: ImageBuffer) -> bytes:
    buf = io.BytesIO()
    Image.fromarray(img.pixels, mode="RGB").save(buf, format="PNG")
    return buf.getvalue()


def _check_size(w, h, max_side):
    if w > max_side or h > max_side:
        raise SizeOverflow(f"output {w}x{h} exceeds max side {max_side}")


def upscale_nearest(img: ImageBuffer, factor: int, max_side: int = MAX_SIDE) -> ImageBuffer:
    """Integer nearest-neighbor upscale: output (i, j) = source (i//f, j//f)."""
    if not isinstance(factor, int) or factor < 1:
        raise ValueError(f"factor must be an integer >= 1, got {factor!r}")
    _check_size(img.width * factor, img.height * factor, max_side)
    out = np.repeat(np.repeat(img.pixels, factor, axis=0), factor, axis=1)
    return ImageBuffer(out)


def lanczos_kernel(x: np.ndarray, a: int) -> np.ndarray:
    """Windowed sinc L(x) = sinc(x) sinc(x/a) for |x| < a, else 0."""
    x = np.asarray(x, dtype=np.float64)
    out = np.sinc(x) * np.sinc(x / a)
    return np.where(np.abs(x) < a, out, 0.0)


def _axis_weights(n_src: int, n_out: int, factor: float, a: int):
    """Per-output tap indices (edge-clamped) and renormalized weights."""
    i = np.arange(n_out, dtype=np.float64)
    xs = (i + 0.5) / factor - 0.5
    start = np.ceil(xs - a).astype(np.int64)
    taps = start[:, None] + np.arange(2 * a + 1)[None, :]  # (n_out, 2a+1)
    weights = lanczos_kernel(xs[:, None] - taps, a)
    weights /= weights.sum(axis=1, keepdims=True)
    idx = np.clip(taps, 0, n_src - 1)
    return idx, weights


def upscale_lanczos(img: ImageBuffer, factor: float, a: int = 3,
                    max_side: int = MAX_SIDE) -> ImageBuffer:
    """Separable Lanczos resample with edge clamp and per-sample renormalization.

    Horizontal pass then vertical pass, double-precision intermediates; the
    final values are clamped to [0, 255] and rounded half away from zero.
    """
    if factor <= 0:
        raise ValueError(f"factor must be > 0, got {factor!r}")
    if a not in (2, 3):
        raise ValueError(f"taps must be 2 or 3, got {a!r}")
    out_w = math.ceil(img.width * factor)
    out_h = math.ceil(img.height * factor)
    _check_size(out_w, out_h, max_side)

    src = img.pixels.astype(np.float64)
    return _finish(img, src, factor, a, out_w, out_h)


def _resample_axis(arr: np.ndarray, idx: np.ndarray, weights: np.ndarray) -> np.ndarray:
    """Apply 1D taps along axis 0 of ``arr`` (shape (n_src, ...))."""
    n_out, n_taps = idx.shape
    out = np.zeros((n_out,) + arr.shape[1:], dtype=np.float64)
    for t in range(n_taps):
        out += weights[:, t].reshape((n_out,) + (1,) * (arr.ndim - 1)) * arr[idx[:, t]]
    return out


def _finish(img, src, factor, a, out_w, out_h):
    idx_w, w_w = _axis_weights(img.width, out_w, factor, a)
    idx_h, w_h = _axis_weights(img.height, out_h, factor, a)
    # horizontal pass: move width to axis 0, resample, move back
    mid = _resample_axis(src.transpose(1, 0, 2), idx_w, w_w).transpose(1, 0, 2)
    out = _resample_axis(mid, idx_h, w_h)
    out = np.clip(out, 0.0, 255.0)
    out = np.floor(out + 0.5)  # half away from zero; values are nonnegative
    return ImageBuffer(out.astype(np.uint8))


def luma(img: ImageBuffer) -> np.ndarray:
    """BT.601 luma, unquantized float64 per pixel."""
    px = img.pixels.astype(np.float64)
    return 0.299 * px[:, :, 0] + 0.587 * px[:, :, 1] + 0.114 * px[:, :, 2]
