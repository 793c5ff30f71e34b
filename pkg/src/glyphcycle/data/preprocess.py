"""Resizing, binarization and denoising for glyph images.

Pixels follow the GNT convention (0 = ink, 255 = background). Network
tensors follow ink = -1, background = +1.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np
from scipy.ndimage import median_filter

from ..autodiff.tensor import Tensor
from ..errors import ConfigError
from .pgm import to_unit

SIZES = (32, 64, 128)
BACKGROUND = 255


def _axis_weights(n_in, n_out):
    # half-pixel centres; source coordinates clamped to the edge
    src = (np.arange(n_out) + 0.5) * (n_in / n_out) - 0.5
    src = np.clip(src, 0.0, n_in - 1)
    lo = np.floor(src).astype(np.int64)
    hi = np.minimum(lo + 1, n_in - 1)
    frac = src - lo
    return lo, hi, frac


def resize_bilinear(image, out_h, out_w=None):
    """Bilinear resample of a 2-D array; same-size input is returned unchanged."""
    out_w = out_h if out_w is None else out_w
    img = np.asarray(image, dtype=np.float64)
    if img.ndim != 2 or img.size == 0:
        raise ConfigError(f"resize needs a non-empty 2-D image, got shape {img.shape}")
    h, w = img.shape
    if (h, w) == (out_h, out_w):
        return img.copy()
    r0, r1, fr = _axis_weights(h, out_h)
    c0, c1, fc = _axis_weights(w, out_w)
    rows = img[r0] * (1 - fr)[:, None] + img[r1] * fr[:, None]
    return rows[:, c0] * (1 - fc)[None, :] + rows[:, c1] * fc[None, :]


def _to_tensor(plane):
    return Tensor(to_unit(plane)[None, None])


def _check_size(out_size):
    if out_size not in SIZES:
        raise ConfigError(f"out_size must be one of {SIZES}, got {out_size}")


def preprocess_standard(image, out_size):
    """Resize straight to out_size x out_size and map to [-1, 1]."""
    _check_size(out_size)
    img = image.array() if hasattr(image, "array") else np.asarray(image)
    if img.ndim != 2 or 0 in img.shape:
        raise ConfigError(f"degenerate image of shape {img.shape}")
    return _to_tensor(resize_bilinear(img, out_size))


def binarize(image, threshold=128):
    img = np.asarray(image)
    return np.where(img < threshold, 0, BACKGROUND).astype(np.uint8)


def median_denoise(image, radius=1):
    """Median over a (2r+1)^2 window with edge replication."""
    if radius < 0:
        raise ConfigError("median radius must be >= 0")
    if radius == 0:
        return np.asarray(image).copy()
    return median_filter(np.asarray(image), size=2 * radius + 1, mode="nearest")


def pad_square(image, fill=BACKGROUND):
    """Pad the shorter side with background so the image sits centred."""
    img = np.asarray(image)
    h, w = img.shape
    side = max(h, w)
    top = (side - h) // 2
    left = (side - w) // 2
    out = np.full((side, side), fill, dtype=img.dtype)
    out[top : top + h, left : left + w] = img
    return out


class CalligraphyResult(NamedTuple):
    tensor: Tensor
    blank: bool  # nothing survived binarization + denoising; exclude from training


def preprocess_calligraphy(image, out_size, threshold=128, median_radius=1):
    _check_size(out_size)
    img = image.array() if hasattr(image, "array") else np.asarray(image)
    if img.ndim != 2 or 0 in img.shape:
        raise ConfigError(f"degenerate image of shape {img.shape}")
    clean = median_denoise(binarize(img, threshold), median_radius)
    blank = not (clean == 0).any()
    square = pad_square(clean)
    return CalligraphyResult(_to_tensor(resize_bilinear(square, out_size)), blank)
