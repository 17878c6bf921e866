"""
Core functionality for sparsemask.

This package contains raster and container I/O, the mask generators,
sparse representations, the entropy coders and mask codecs, and the
benchmark harness.
"""

from sparsemask.core.codec_registry import (
    MaskCodec,
    decode_mask,
    encode_mask,
    get_codec,
    get_codec_by_id,
    list_codecs,
    register_codec,
    require_codec,
)
from sparsemask.core.error_handling import ErrorHandler, SparseMaskError
from sparsemask.core.image_io import (
    BinaryMask,
    EncodedMask,
    GrayImage,
    read_container,
    read_pbm,
    read_pgm,
    write_container,
    write_pbm,
    write_pgm,
)

__all__ = [
    "MaskCodec",
    "register_codec",
    "get_codec",
    "get_codec_by_id",
    "require_codec",
    "list_codecs",
    "encode_mask",
    "decode_mask",
    "SparseMaskError",
    "ErrorHandler",
    "GrayImage",
    "BinaryMask",
    "EncodedMask",
    "read_pgm",
    "write_pgm",
    "read_pbm",
    "write_pbm",
    "read_container",
    "write_container",
]
