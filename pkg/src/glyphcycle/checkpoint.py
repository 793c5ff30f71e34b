"""Versioned binary snapshots of training state.

Layout (little-endian)::

    b"GCYC" | u16 version | u32 epoch | u64 rng_state | u32 tensor_count
    per tensor: u16 name_len | name (UTF-8) | u8 ndim | ndim x u32 dims | float32 values
    u32 CRC32 of every preceding byte

Adam moments are stored as ``<param>.m`` / ``<param>.v``. Integer counters
that the header has no slot for (iteration within the epoch, optimizer step
counts, and the image size and channel count the networks were built for)
travel as one-element tensors under the ``trainer.`` prefix.
"""

from __future__ import annotations

import struct
import zlib
from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, ParseError

MAGIC = b"GCYC"
VERSION = 1
_HEAD = struct.Struct("<4sHIQI")
_EXACT_INT = 1 << 24
META_PREFIX = "trainer."


@dataclass
class Checkpoint:
    epoch: int
    rng_state: int
    tensors: dict  # name -> np.ndarray (float32), insertion order preserved


def encode(ckpt):
    out = bytearray(_HEAD.pack(MAGIC, VERSION, ckpt.epoch, ckpt.rng_state, len(ckpt.tensors)))
    for name, arr in ckpt.tensors.items():
        raw = name.encode("utf-8")
        a = np.ascontiguousarray(arr, dtype="<f4")
        out += struct.pack("<H", len(raw)) + raw
        out += struct.pack("<B", a.ndim) + struct.pack(f"<{a.ndim}I", *a.shape)
        out += a.tobytes()
    out += struct.pack("<I", zlib.crc32(out) & 0xFFFFFFFF)
    return bytes(out)


class _Reader:
    def __init__(self, data):
        self.data = data
        self.pos = 0

    def take(self, n, what):
        if self.pos + n > len(self.data) - 4:
            raise ParseError(f"checkpoint truncated reading {what}", offset=self.pos)
        chunk = self.data[self.pos : self.pos + n]
        self.pos += n
        return chunk

    def unpack(self, fmt, what):
        s = struct.Struct(fmt)
        return s.unpack(self.take(s.size, what))


def decode(data):
    data = bytes(data)
    if len(data) < 4 or data[:4] != MAGIC:
        raise ParseError("bad checkpoint magic", offset=0)
    if len(data) < _HEAD.size + 4:
        raise ParseError("checkpoint truncated in header", offset=min(len(data), 4))
    r = _Reader(data)
    _, version, epoch, rng_state, count = r.unpack("<4sHIQI", "header")
    if version != VERSION:
        raise ParseError(f"unsupported checkpoint version {version}", offset=4)
    tensors = {}
    for _ in range(count):
        (n,) = r.unpack("<H", "name length")
        name = r.take(n, "name").decode("utf-8")
        (ndim,) = r.unpack("<B", "ndim")
        dims = r.unpack(f"<{ndim}I", "dims")
        size = int(np.prod(dims, dtype=np.int64))
        tensors[name] = np.frombuffer(r.take(4 * size, f"values of {name}"), dtype="<f4").reshape(dims).copy()
    if r.pos != len(data) - 4:
        raise ParseError("unexpected bytes after last tensor", offset=r.pos)
    (crc,) = struct.unpack("<I", data[-4:])
    if crc != zlib.crc32(data[:-4]) & 0xFFFFFFFF:
        raise ParseError("checkpoint CRC mismatch", offset=len(data) - 4)
    return Checkpoint(epoch, rng_state, tensors)


def _int_tensor(value):
    if not 0 <= value < _EXACT_INT:
        raise OverflowError(f"counter {value} cannot be stored exactly as float32")
    return np.array([value], dtype=np.float32)


def _moments(state, ckpt_tensors):
    for name in state.names:
        ckpt_tensors[f"{name}.m"] = state.m[name]
        ckpt_tensors[f"{name}.v"] = state.v[name]


def save_checkpoint(state):
    tensors = {name: p.data for name, p in state.all_params().items()}
    _moments(state.opt_gen, tensors)
    _moments(state.opt_disc, tensors)
    tensors[META_PREFIX + "iteration"] = _int_tensor(state.iteration)
    tensors[META_PREFIX + "adam_gen_t"] = _int_tensor(state.opt_gen.t)
    tensors[META_PREFIX + "adam_disc_t"] = _int_tensor(state.opt_disc.t)
    tensors[META_PREFIX + "image_size"] = _int_tensor(state.cfg.image_size)
    tensors[META_PREFIX + "in_channels"] = _int_tensor(state.cfg.in_channels)
    return encode(Checkpoint(state.epoch, state.rng_state, tensors))


def _fetch(tensors, name, like):
    if name not in tensors:
        raise ParseError(f"checkpoint lacks tensor {name}")
    arr = tensors[name]
    if arr.shape != like.shape:
        raise DimensionError(f"checkpoint tensor {name} does not match the configured network", arr.shape, like.shape)
    return arr.astype(np.float32)


def _meta(tensors, key):
    name = META_PREFIX + key
    if name not in tensors:
        raise ParseError(f"checkpoint lacks tensor {name}")
    return int(tensors[name][0])


def restore_params(params, tensors):
    for name, p in params.items():
        p.data = _fetch(tensors, name, p.data)
        p.grad = None


def load_checkpoint(data, cfg):
    """Rebuild a :class:`CycleGAN` for ``cfg`` and fill it from ``data``."""
    from .trainer import CycleGAN

    ckpt = decode(data)
    t = ckpt.tensors
    stored = tuple(int(_meta(t, k)) for k in ("image_size", "in_channels"))
    if stored != (cfg.image_size, cfg.in_channels):
        raise DimensionError(
            f"checkpoint was written for image_size={stored[0]}, in_channels={stored[1]} but the configuration has "
            f"image_size={cfg.image_size}, in_channels={cfg.in_channels}"
        )
    state = CycleGAN.create(cfg)
    restore_params(state.all_params(), t)
    for opt in (state.opt_gen, state.opt_disc):
        for name in opt.names:
            opt.m[name] = _fetch(t, f"{name}.m", opt.m[name])
            opt.v[name] = _fetch(t, f"{name}.v", opt.v[name])
    state.opt_gen.t = _meta(t, "adam_gen_t")
    state.opt_disc.t = _meta(t, "adam_disc_t")
    state.iteration = _meta(t, "iteration")
    state.epoch = ckpt.epoch
    state.rng_state = ckpt.rng_state
    return state


def save_params(params, epoch=0):
    """Snapshot a bare parameter dict (used for the evaluation classifier)."""
    return encode(Checkpoint(epoch, 0, {n: p.data for n, p in params.items()}))


def load_params(params, data):
    restore_params(params, decode(data).tensors)


__all__ = ["Checkpoint", "decode", "encode", "load_checkpoint", "save_checkpoint"]
