"""
sparsemask - lossless compression of sparse inpainting masks.

This package provides mask generators, sparse representations, context
modelling codecs, a benchmark harness and the command-line front-end.
"""

__version__ = "0.1.0"

from sparsemask.core.bench import BenchPlan, BenchRecord, aggregate, run_benchmark
from sparsemask.core.codec_registry import decode_mask, encode_mask, get_codec, list_codecs, register_codec
from sparsemask.core.image_io import BinaryMask, EncodedMask, GrayImage
from sparsemask.core.mask_gen import generate_mask, inpaint_homogeneous, inpaint_shepard

__all__ = [
    "BinaryMask",
    "GrayImage",
    "EncodedMask",
    "encode_mask",
    "decode_mask",
    "get_codec",
    "list_codecs",
    "register_codec",
    "generate_mask",
    "inpaint_homogeneous",
    "inpaint_shepard",
    "BenchPlan",
    "BenchRecord",
    "run_benchmark",
    "aggregate",
]
