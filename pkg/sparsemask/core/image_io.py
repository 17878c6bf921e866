"""
Raster and container I/O for sparsemask.

This module defines the two raster types everything else works on
(grayscale images and binary masks), readers and writers for the
Netpbm formats they are exchanged in, and the SBM1 container that
wraps an encoded mask payload.

SBM1 layout (little-endian throughout)::

    magic "SBM1" | codec_id u8 | width u32 | height u32 | ones_count u32 | payload_length u32 | payload
"""

import logging
import struct
from dataclasses import dataclass, field
from typing import Iterable, List, Sequence, Tuple

import numpy as np

from sparsemask.core.error_handling import (
    BadMagicError,
    DimensionMismatchError,
    InvalidPixelError,
    LengthMismatchError,
    MalformedHeaderError,
    TruncatedDataError,
    UnknownCodecError,
    UnsupportedMaxvalError,
)

logger = logging.getLogger("sparsemask.image_io")

CONTAINER_MAGIC = b"SBM1"
CONTAINER_HEADER = struct.Struct("<4sBIIII")
CONTAINER_HEADER_SIZE = CONTAINER_HEADER.size  # 21 bytes

_WHITESPACE = b" \t\r\n\x0b\x0c"


@dataclass(frozen=True, eq=False)
class GrayImage:
    """Row-major grayscale raster with values in [0, 255]."""

    width: int
    height: int
    values: np.ndarray

    def __post_init__(self):
        if self.width <= 0 or self.height <= 0:
            raise DimensionMismatchError(f"image dimensions must be positive, got {self.width}x{self.height}")
        values = np.array(self.values, dtype=np.float64).reshape(self.height, self.width)
        if not np.all(np.isfinite(values)) or values.min() < 0 or values.max() > 255:
            raise InvalidPixelError("image values must be finite and within [0, 255]")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @classmethod
    def from_rows(cls, rows: Sequence[Sequence[float]]) -> "GrayImage":
        """Build an image from a list of rows."""
        array = np.asarray(rows, dtype=np.float64)
        return cls(width=array.shape[1], height=array.shape[0], values=array)

    @classmethod
    def constant(cls, width: int, height: int, value: float) -> "GrayImage":
        return cls(width=width, height=height, values=np.full((height, width), float(value)))

    @property
    def shape(self) -> Tuple[int, int]:
        return (self.height, self.width)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, GrayImage):
            return NotImplemented
        return self.shape == other.shape and np.array_equal(self.values, other.values)


@dataclass(frozen=True, eq=False)
class BinaryMask:
    """
    Row-major bit grid; set bits are the inpainting mask points.

    The bit array is stored read-only so the cached ones count can never go stale.
    """

    width: int
    height: int
    bits: np.ndarray
    count: int = field(init=False)

    def __post_init__(self):
        if self.width <= 0 or self.height <= 0:
            raise DimensionMismatchError(f"mask dimensions must be positive, got {self.width}x{self.height}")
        bits = np.array(self.bits, dtype=bool)
        if bits.size != self.width * self.height:
            raise DimensionMismatchError(
                f"mask of {self.width}x{self.height} needs {self.width * self.height} bits, got {bits.size}"
            )
        bits = bits.reshape(self.height, self.width)
        bits.setflags(write=False)
        object.__setattr__(self, "bits", bits)
        object.__setattr__(self, "count", int(np.count_nonzero(bits)))

    @classmethod
    def empty(cls, width: int, height: int) -> "BinaryMask":
        return cls(width=width, height=height, bits=np.zeros((height, width), dtype=bool))

    @classmethod
    def full(cls, width: int, height: int) -> "BinaryMask":
        return cls(width=width, height=height, bits=np.ones((height, width), dtype=bool))

    @classmethod
    def from_rows(cls, rows: Sequence[str]) -> "BinaryMask":
        """Build a mask from strings of '0'/'1', one per row."""
        if not rows or any(len(row) != len(rows[0]) for row in rows):
            raise DimensionMismatchError("rows must be nonempty and of equal length")
        bits = np.array([[char == "1" for char in row] for row in rows], dtype=bool)
        return cls(width=len(rows[0]), height=len(rows), bits=bits)

    @classmethod
    def from_indices(cls, width: int, height: int, indices: Iterable[int]) -> "BinaryMask":
        """Build a mask whose set bits are the given row-major pixel indices."""
        flat = np.zeros(width * height, dtype=bool)
        flat[np.fromiter(indices, dtype=np.int64)] = True
        return cls(width=width, height=height, bits=flat)

    @property
    def size(self) -> int:
        return self.width * self.height

    @property
    def density(self) -> float:
        return self.count / self.size

    def to_rows(self) -> List[str]:
        return ["".join("1" if bit else "0" for bit in row) for row in self.bits]

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, BinaryMask):
            return NotImplemented
        return (self.width, self.height) == (other.width, other.height) and np.array_equal(self.bits, other.bits)

    def __repr__(self) -> str:
        return f"BinaryMask({self.width}x{self.height}, count={self.count})"


@dataclass(frozen=True)
class EncodedMask:
    """A codec payload plus the header fields every decoder needs up front."""

    codec_id: int
    width: int
    height: int
    ones_count: int
    payload: bytes

    def __post_init__(self):
        if not 0 <= self.codec_id <= 0xFF:
            raise UnknownCodecError(f"codec_id {self.codec_id} does not fit in one byte")
        for name in ("width", "height", "ones_count"):
            value = getattr(self, name)
            if not 0 <= value <= 0xFFFFFFFF:
                raise LengthMismatchError(f"{name} {value} does not fit in 32 bits")
        if self.width <= 0 or self.height <= 0:
            raise DimensionMismatchError(f"encoded mask dimensions must be positive, got {self.width}x{self.height}")
        if self.ones_count > self.width * self.height:
            raise LengthMismatchError(
                f"ones_count {self.ones_count} exceeds {self.width}x{self.height} pixels",
                {"ones_count": self.ones_count, "pixels": self.width * self.height},
            )

    @property
    def total_size(self) -> int:
        return CONTAINER_HEADER_SIZE + len(self.payload)


class _HeaderReader:
    """Tokenizer for Netpbm headers, skipping whitespace and '#' comments."""

    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def token(self) -> bytes:
        data = self.data
        while self.pos < len(data):
            char = data[self.pos : self.pos + 1]
            if char == b"#":
                while self.pos < len(data) and data[self.pos : self.pos + 1] not in (b"\n", b"\r"):
                    self.pos += 1
            elif char in _WHITESPACE:
                self.pos += 1
            else:
                break
        start = self.pos
        while self.pos < len(data) and data[self.pos : self.pos + 1] not in _WHITESPACE + b"#":
            self.pos += 1
        if start == self.pos:
            raise MalformedHeaderError("malformed header: unexpected end of header")
        return data[start : self.pos]

    def integer(self, name: str) -> int:
        raw = self.token()
        if not raw.isdigit():
            raise MalformedHeaderError(f"malformed header: {name} is not a decimal integer ({raw!r})")
        return int(raw)

    def dimension(self, name: str) -> int:
        value = self.integer(name)
        if value <= 0:
            raise MalformedHeaderError(f"malformed header: {name} must be positive, got {value}")
        return value

    def raster_start(self) -> int:
        """Skip the single whitespace byte that separates a binary header from its raster."""
        if self.pos >= len(self.data) or self.data[self.pos : self.pos + 1] not in _WHITESPACE:
            raise MalformedHeaderError("malformed header: missing whitespace before raster data")
        return self.pos + 1


def _read_magic(data: bytes, allowed: Tuple[bytes, ...]) -> Tuple[bytes, _HeaderReader]:
    reader = _HeaderReader(data)
    if len(data) < 2 or data[:2] not in allowed:
        raise MalformedHeaderError(f"malformed header: expected one of {[m.decode() for m in allowed]}")
    reader.pos = 2
    return data[:2], reader


def read_pgm(data: bytes) -> GrayImage:
    """
    Parse a binary (P5) or ASCII (P2) PGM file.

    Args:
        data: Raw file contents

    Returns:
        The image with its exact sample values (no rescaling by maxval)

    Raises:
        MalformedHeaderError: If the header is malformed
        UnsupportedMaxvalError: If maxval exceeds 255
        TruncatedDataError: If fewer than width x height samples follow the header
        InvalidPixelError: If a sample exceeds maxval
    """
    magic, reader = _read_magic(data, (b"P2", b"P5"))
    width = reader.dimension("width")
    height = reader.dimension("height")
    maxval = reader.integer("maxval")
    if maxval <= 0:
        raise MalformedHeaderError(f"malformed header: maxval must be positive, got {maxval}")
    if maxval > 255:
        raise UnsupportedMaxvalError(f"maxval {maxval} > 255 is not supported", {"maxval": maxval})

    count = width * height
    if magic == b"P5":
        start = reader.raster_start()
        raster = data[start : start + count]
        if len(raster) < count:
            raise TruncatedDataError(
                f"truncated pixel data: expected {count} samples, found {len(raster)}",
                {"expected": count, "found": len(raster)},
            )
        values = np.frombuffer(raster, dtype=np.uint8).astype(np.float64)
    else:
        samples = []
        for _ in range(count):
            try:
                samples.append(reader.integer("sample"))
            except MalformedHeaderError as e:
                if reader.pos >= len(data):
                    raise TruncatedDataError(
                        f"truncated pixel data: expected {count} samples, found {len(samples)}",
                        {"expected": count, "found": len(samples)},
                    ) from e
                raise
        values = np.asarray(samples, dtype=np.float64)

    if values.max(initial=0) > maxval:
        raise InvalidPixelError(f"sample value {int(values.max())} exceeds maxval {maxval}")

    logger.debug(f"Read {magic.decode()} image {width}x{height}")
    return GrayImage(width=width, height=height, values=values.reshape(height, width))


def write_pgm(image: GrayImage) -> bytes:
    """Serialize an image as binary PGM (P5), rounding values to the nearest integer."""
    header = f"P5\n{image.width} {image.height}\n255\n".encode("ascii")
    return header + np.rint(image.values).astype(np.uint8).tobytes()


def read_pbm(data: bytes) -> BinaryMask:
    """
    Parse a plain (P1) or raw (P4) PBM file; 1 (black) marks a mask point.

    Raises:
        MalformedHeaderError: If the header is malformed
        TruncatedDataError: If the raster has fewer rows than declared
    """
    magic, reader = _read_magic(data, (b"P1", b"P4"))
    width = reader.dimension("width")
    height = reader.dimension("height")

    if magic == b"P4":
        start = reader.raster_start()
        row_bytes = (width + 7) // 8
        raster = data[start : start + row_bytes * height]
        if len(raster) < row_bytes * height:
            raise TruncatedDataError(
                f"truncated rows: expected {row_bytes * height} bytes, found {len(raster)}",
                {"expected": row_bytes * height, "found": len(raster)},
            )
        packed = np.frombuffer(raster, dtype=np.uint8).reshape(height, row_bytes)
        bits = np.unpackbits(packed, axis=1)[:, :width].astype(bool)
    else:
        body = data[reader.pos :]
        chars = bytearray()
        pos = 0
        while pos < len(body) and len(chars) < width * height:
            char = body[pos : pos + 1]
            if char == b"#":
                while pos < len(body) and body[pos : pos + 1] not in (b"\n", b"\r"):
                    pos += 1
                continue
            if char in (b"0", b"1"):
                chars += char
            elif char not in _WHITESPACE:
                raise MalformedHeaderError(f"malformed raster: unexpected byte {char!r} in P1 data")
            pos += 1
        if len(chars) < width * height:
            raise TruncatedDataError(
                f"truncated rows: expected {width * height} bits, found {len(chars)}",
                {"expected": width * height, "found": len(chars)},
            )
        bits = (np.frombuffer(bytes(chars), dtype=np.uint8) == ord("1")).reshape(height, width)

    return BinaryMask(width=width, height=height, bits=bits)


def write_pbm(mask: BinaryMask, plain: bool = False) -> bytes:
    """
    Serialize a mask as PBM.

    Args:
        mask: The mask to write
        plain: Write ASCII P1 instead of packed P4

    Returns:
        The file contents; P4 rows are padded with zero bits to whole bytes
    """
    if plain:
        lines = [f"P1\n{mask.width} {mask.height}"]
        lines.extend(" ".join("1" if bit else "0" for bit in row) for row in mask.bits)
        return ("\n".join(lines) + "\n").encode("ascii")
    header = f"P4\n{mask.width} {mask.height}\n".encode("ascii")
    return header + np.packbits(mask.bits.astype(np.uint8), axis=1).tobytes()


def write_container(encoded: EncodedMask) -> bytes:
    """
    Serialize an encoded mask into the SBM1 container.

    Raises:
        UnknownCodecError: If codec_id is not registered
    """
    from sparsemask.core.codec_registry import require_codec_id

    require_codec_id(encoded.codec_id)
    header = CONTAINER_HEADER.pack(
        CONTAINER_MAGIC,
        encoded.codec_id,
        encoded.width,
        encoded.height,
        encoded.ones_count,
        len(encoded.payload),
    )
    return header + bytes(encoded.payload)


def read_container(data: bytes) -> EncodedMask:
    """
    Parse an SBM1 container.

    Raises:
        BadMagicError: If the data does not start with "SBM1"
        LengthMismatchError: If the header is cut short or payload_length disagrees with the data
        UnknownCodecError: If codec_id is not registered
    """
    from sparsemask.core.codec_registry import require_codec_id

    if data[:4] != CONTAINER_MAGIC:
        raise BadMagicError("bad magic", {"magic": bytes(data[:4]).hex()})
    if len(data) < CONTAINER_HEADER_SIZE:
        raise LengthMismatchError(
            f"container header needs {CONTAINER_HEADER_SIZE} bytes, found {len(data)}",
            {"expected": CONTAINER_HEADER_SIZE, "found": len(data)},
        )
    _, codec_id, width, height, ones_count, payload_length = CONTAINER_HEADER.unpack_from(data)
    payload = bytes(data[CONTAINER_HEADER_SIZE:])
    if len(payload) != payload_length:
        raise LengthMismatchError(
            f"payload_length {payload_length} disagrees with {len(payload)} payload bytes",
            {"declared": payload_length, "found": len(payload)},
        )
    require_codec_id(codec_id)
    return EncodedMask(codec_id=codec_id, width=width, height=height, ones_count=ones_count, payload=payload)
