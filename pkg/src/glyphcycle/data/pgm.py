"""Binary PGM (P5) with the [-1, 1] <-> [0, 255] intensity mapping."""

from __future__ import annotations

import re

import numpy as np

from ..errors import DimensionError, ParseError

_TOKEN = re.compile(rb"\s*(?:#[^\n]*\n\s*)*(\S+)")


def to_bytes(values):
    """Quantize [-1, 1] intensities to bytes, +1 -> 255, -1 -> 0."""
    v = np.clip(np.asarray(values, dtype=np.float64), -1.0, 1.0)
    return np.rint((v + 1.0) * 127.5).astype(np.uint8)


def to_unit(pixels):
    return (np.asarray(pixels, dtype=np.float32) / np.float32(127.5)) - np.float32(1.0)


def _as_plane(values):
    arr = np.asarray(values)
    if arr.ndim == 4:
        if arr.shape[0] != 1 or arr.shape[1] != 1:
            raise DimensionError("PGM export needs a single-sample, single-channel tensor", arr.shape)
        arr = arr[0, 0]
    elif arr.ndim == 3:
        if arr.shape[0] != 1:
            raise DimensionError("PGM export needs a single-channel tensor", arr.shape)
        arr = arr[0]
    elif arr.ndim != 2:
        raise DimensionError("PGM export needs a 2-D plane", arr.shape)
    return arr


def encode_pgm(values):
    """Encode a [-1, 1] plane (or 1x1xHxW tensor data) as P5."""
    if hasattr(values, "data") and not isinstance(values, np.ndarray):
        values = values.data
    plane = to_bytes(_as_plane(values))
    h, w = plane.shape
    return f"P5\n{w} {h}\n255\n".encode("ascii") + plane.tobytes()


def encode_pgm_bytes(pixels):
    """Encode an already-quantized uint8 plane."""
    plane = np.asarray(pixels, dtype=np.uint8)
    h, w = plane.shape
    return f"P5\n{w} {h}\n255\n".encode("ascii") + plane.tobytes()


def decode_pgm(data):
    """Return the uint8 plane (H, W) of a P5 file."""
    pos = 0
    fields = []
    for _ in range(4):
        m = _TOKEN.match(data, pos)
        if m is None:
            raise ParseError("PGM header truncated", offset=pos)
        fields.append(m.group(1))
        pos = m.end()
    if fields[0] != b"P5":
        raise ParseError(f"not a binary PGM (magic {fields[0][:8]!r})", offset=0)
    try:
        w, h, maxval = (int(f) for f in fields[1:])
    except ValueError as exc:
        raise ParseError(f"non-numeric PGM header field: {exc}", offset=pos) from None
    if w < 1 or h < 1 or not 0 < maxval < 256:
        raise ParseError(f"unsupported PGM geometry {w}x{h} maxval {maxval}", offset=pos)
    if pos >= len(data) or data[pos : pos + 1] not in (b" ", b"\n", b"\r", b"\t"):
        raise ParseError("PGM header must end with one whitespace byte", offset=pos)
    pos += 1
    body = data[pos : pos + w * h]
    if len(body) < w * h:
        raise ParseError(f"PGM raster truncated: need {w * h} bytes, have {len(body)}", offset=pos)
    plane = np.frombuffer(body, dtype=np.uint8).reshape(h, w)
    if maxval != 255:
        plane = np.rint(plane.astype(np.float64) * (255.0 / maxval)).astype(np.uint8)
    return plane.copy()


def read_pgm(path):
    with open(path, "rb") as fh:
        return decode_pgm(fh.read())


def write_pgm(path, values):
    with open(path, "wb") as fh:
        fh.write(encode_pgm(values))


def quantize(values):
    """Round-trip through the byte representation a user would see."""
    return to_unit(to_bytes(values))
