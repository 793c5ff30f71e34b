"""Procedural two-style glyph sets for desk-scale runs.

Every label is a fixed set of strokes on a 4x4 lattice. Style X draws them
thin and exact (a stand-in for a printed font); style Y draws them thick with
per-sample endpoint jitter and a slant (a stand-in for a handwriting).
"""

from __future__ import annotations

import numpy as np

from ..errors import ConfigError
from .gnt import GlyphSample, encode_codepoint

LATTICE = np.linspace(0.2, 0.8, 4)
STYLES = {
    "toyX": {"width": 0.04, "jitter": 0.0, "slant": 0.0},
    "toyY": {"width": 0.085, "jitter": 0.035, "slant": 0.12},
}


def toy_codepoint(i):
    """The i-th GB2312 level-1 hanzi, so tags decode to real characters."""
    row, col = divmod(i, 94)
    return ord(bytes([0xB0 + row, 0xA1 + col]).decode("gb2312"))


def toy_alphabet(n_glyphs, seed):
    """Pairwise distinct stroke sets, one per label."""
    rng = np.random.default_rng([seed, 0x5EED])
    seen = []
    while len(seen) < n_glyphs:
        strokes = _draw_strokes(rng)
        if strokes not in seen:
            seen.append(strokes)
    return seen


def _draw_strokes(rng):
    """3-5 distinct lattice segments spanning at most two lattice steps."""
    points = [(x, y) for x in range(4) for y in range(4)]
    n = int(rng.integers(3, 6))
    strokes = set()
    while len(strokes) < n:
        a, b = rng.choice(len(points), size=2, replace=False)
        (x0, y0), (x1, y1) = points[a], points[b]
        if max(abs(x0 - x1), abs(y0 - y1)) > 2:
            continue
        strokes.add(tuple(sorted(((x0, y0), (x1, y1)))))
    return sorted(strokes)


def _segment_distance(px, py, x0, y0, x1, y1):
    dx, dy = x1 - x0, y1 - y0
    denom = dx * dx + dy * dy
    t = np.clip(((px - x0) * dx + (py - y0) * dy) / denom, 0.0, 1.0)
    return np.hypot(px - (x0 + t * dx), py - (y0 + t * dy))


def render_glyph(strokes, size, style, rng=None):
    params = STYLES[style]
    centres = (np.arange(size) + 0.5) / size
    px, py = np.meshgrid(centres, centres)
    dist = np.full((size, size), np.inf)
    for (a, b) in strokes:
        ends = np.array([LATTICE[list(a)], LATTICE[list(b)]], dtype=np.float64)
        if params["jitter"] and rng is not None:
            ends = ends + rng.uniform(-params["jitter"], params["jitter"], size=ends.shape)
        ends[:, 0] += params["slant"] * (0.5 - ends[:, 1])
        dist = np.minimum(dist, _segment_distance(px, py, *ends[0], *ends[1]))
    # one-pixel antialiasing ramp at the stroke edge
    ink = np.clip((params["width"] - dist) * size + 0.5, 0.0, 1.0)
    return np.rint(255.0 * (1.0 - ink)).astype(np.uint8)


def make_toy_fonts(n_glyphs, size, seed, variants=1):
    """Return (setX, setY): ``variants`` renderings of each of ``n_glyphs`` labels per style.

    Both sets carry the same labels and are shuffled independently.
    """
    if n_glyphs < 2:
        raise ConfigError(f"need at least 2 glyphs, got {n_glyphs}")
    if variants < 1:
        raise ConfigError("variants must be >= 1")
    alphabet = toy_alphabet(n_glyphs, seed)
    sets = []
    for s_idx, style in enumerate(STYLES):
        rng = np.random.default_rng([seed, s_idx])
        samples = []
        for i in range(n_glyphs):
            strokes = alphabet[i]
            tag = encode_codepoint(toy_codepoint(i))
            for _ in range(variants):
                img = render_glyph(strokes, size, style, rng)
                samples.append(GlyphSample(tag, size, size, img.tobytes(), style))
        order = rng.permutation(len(samples))
        sets.append([samples[j] for j in order])
    return sets[0], sets[1]
