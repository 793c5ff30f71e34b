from .gnt import GlyphSample, decode_tag, encode_codepoint, iter_gnt, parse_gnt, read_gnt, write_gnt
from .pgm import decode_pgm, encode_pgm, quantize, read_pgm, write_pgm
from .preprocess import (
    binarize,
    median_denoise,
    pad_square,
    preprocess_calligraphy,
    preprocess_standard,
    resize_bilinear,
)
from .split import SplitSpec, split_dataset, split_domains, train_count
from .toy import make_toy_fonts

__all__ = [
    "GlyphSample",
    "SplitSpec",
    "binarize",
    "decode_pgm",
    "decode_tag",
    "encode_codepoint",
    "encode_pgm",
    "iter_gnt",
    "make_toy_fonts",
    "median_denoise",
    "pad_square",
    "parse_gnt",
    "preprocess_calligraphy",
    "preprocess_standard",
    "quantize",
    "read_gnt",
    "read_pgm",
    "resize_bilinear",
    "split_dataset",
    "split_domains",
    "train_count",
    "write_gnt",
    "write_pgm",
]
