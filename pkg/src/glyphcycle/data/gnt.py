"""GNT isolated-character containers.

Each record is little-endian::

    u32 sample_size   (== 10 + width * height)
    2 bytes tag code  (GB2312 bytes, kept verbatim)
    u16 width
    u16 height
    width * height grayscale bytes, row-major

Records repeat until EOF.
"""

from __future__ import annotations

import io
import struct
from dataclasses import dataclass

from ..errors import ConfigError, ParseError

HEADER = struct.Struct("<I2sHH")


def decode_tag(tag):
    """Best-effort GB2312 -> codepoint; None when the bytes do not map."""
    try:
        text = tag.decode("gb2312")
    except UnicodeDecodeError:
        return None
    return ord(text) if len(text) == 1 else None


def encode_codepoint(codepoint):
    """Inverse of :func:`decode_tag`; unmappable codepoints fall back to big-endian u16."""
    try:
        tag = chr(codepoint).encode("gb2312")
        if len(tag) == 2:
            return tag
    except UnicodeEncodeError:
        pass
    return struct.pack(">H", codepoint & 0xFFFF)


@dataclass(frozen=True)
class GlyphSample:
    tag: bytes
    width: int
    height: int
    pixels: bytes
    style_tag: str = ""

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise ConfigError(f"glyph extents must be >= 1, got {self.width}x{self.height}")
        if len(self.pixels) != self.width * self.height:
            raise ConfigError(f"pixel count {len(self.pixels)} != {self.width}*{self.height}")
        if len(self.tag) != 2:
            raise ConfigError("GNT tags are exactly 2 bytes")

    @property
    def codepoint(self):
        return decode_tag(self.tag)

    def array(self):
        import numpy as np

        return np.frombuffer(self.pixels, dtype=np.uint8).reshape(self.height, self.width)


def iter_gnt(stream, style_tag=""):
    """Yield samples from a binary stream, reading one record at a time."""
    offset = 0
    index = 0
    while True:
        head = stream.read(HEADER.size)
        if not head:
            return
        if len(head) < HEADER.size:
            raise ParseError("trailing bytes shorter than a record header", offset=offset, record=index)
        size, tag, width, height = HEADER.unpack(head)
        n = width * height
        if size != HEADER.size + n or width == 0 or height == 0:
            raise ParseError(
                f"sample_size {size} inconsistent with {width}x{height} bitmap", offset=offset, record=index
            )
        body = stream.read(n)
        if len(body) < n:
            raise ParseError(
                f"bitmap truncated: need {n} bytes, {len(body)} remain", offset=offset + HEADER.size, record=index
            )
        yield GlyphSample(tag, width, height, body, style_tag)
        offset += size
        index += 1


def parse_gnt(data, style_tag=""):
    return list(iter_gnt(io.BytesIO(data), style_tag))


def read_gnt(path, style_tag=""):
    with open(path, "rb") as fh:
        return list(iter_gnt(fh, style_tag))


def write_gnt(samples):
    out = bytearray()
    for s in samples:
        if s.width > 0xFFFF or s.height > 0xFFFF or HEADER.size + s.width * s.height > 0xFFFFFFFF:
            raise ConfigError(f"glyph {s.width}x{s.height} does not fit GNT size fields")
        out += HEADER.pack(HEADER.size + s.width * s.height, s.tag, s.width, s.height)
        out += s.pixels
    return bytes(out)
