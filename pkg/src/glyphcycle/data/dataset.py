"""Style directories: PGM files plus a ``labels.tsv`` manifest.

Manifest lines are ``filename<TAB>codepoint-hex``. A directory may also hold
``.gnt`` containers, which are read record by record.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

from ..errors import ConfigError, GlyphCycleError, ParseError
from .gnt import GlyphSample, encode_codepoint, read_gnt
from .pgm import encode_pgm_bytes, read_pgm

MANIFEST = "labels.tsv"


@dataclass
class Item:
    name: str
    pixels: np.ndarray  # uint8 (H, W), 0 = ink
    codepoint: int | None

    def sample(self, style_tag=""):
        tag = encode_codepoint(self.codepoint) if self.codepoint is not None else b"\xff\xff"
        h, w = self.pixels.shape
        return GlyphSample(tag, w, h, np.ascontiguousarray(self.pixels, dtype=np.uint8).tobytes(), style_tag)


def sample_name(index, codepoint):
    cp = f"u{codepoint:04x}" if codepoint is not None else "unknown"
    return f"{cp}_{index:05d}.pgm"


def read_manifest(directory):
    path = os.path.join(directory, MANIFEST)
    labels = {}
    if not os.path.exists(path):
        return labels
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split("\t")
            if len(parts) != 2:
                raise ParseError(f"{path}:{lineno}: expected 'filename<TAB>codepoint-hex'")
            try:
                labels[parts[0]] = int(parts[1], 16)
            except ValueError:
                raise ParseError(f"{path}:{lineno}: bad codepoint {parts[1]!r}") from None
    return labels


def write_manifest(directory, items):
    with open(os.path.join(directory, MANIFEST), "w", encoding="utf-8") as fh:
        for it in items:
            if it.codepoint is not None:
                fh.write(f"{it.name}\t{it.codepoint:04x}\n")


def write_style_dir(directory, items):
    os.makedirs(directory, exist_ok=True)
    for it in items:
        with open(os.path.join(directory, it.name), "wb") as fh:
            fh.write(encode_pgm_bytes(it.pixels))
    write_manifest(directory, items)


def scan_style_dir(directory):
    """Load every .pgm and .gnt in ``directory``.

    Returns (items, errors) where errors is a list of (filename, message) for
    files that could not be read. GNT records are named after their container.
    """
    if not os.path.isdir(directory):
        raise ConfigError(f"not a directory: {directory}")
    labels = read_manifest(directory)
    items, errors = [], []
    for fname in sorted(os.listdir(directory)):
        path = os.path.join(directory, fname)
        ext = os.path.splitext(fname)[1].lower()
        try:
            if ext == ".pgm":
                items.append(Item(fname, read_pgm(path), labels.get(fname)))
            elif ext == ".gnt":
                stem = os.path.splitext(fname)[0]
                for i, s in enumerate(read_gnt(path)):
                    items.append(Item(f"{stem}#{i}", s.array().copy(), s.codepoint))
        except (OSError, GlyphCycleError) as exc:
            errors.append((fname, str(exc)))
    return items, errors


def load_style_dir(directory):
    """Load an ingested directory, failing on any unreadable file."""
    items, errors = scan_style_dir(directory)
    if errors:
        raise ParseError("; ".join(f"{f}: {m}" for f, m in errors))
    return items
