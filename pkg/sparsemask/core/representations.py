"""
Sparse representations of binary masks.

A mask can be stored as its raw bit vector, as run-lengths of zeros,
as a coordinate list, or in a modified compressed-sparse-row form.
Every encoder here has an exact inverse, and the varint helpers turn
the integer forms into byte streams for the byte-oriented coders.
"""

import math
from collections import Counter
from dataclasses import dataclass
from typing import Hashable, Iterable, List, Mapping, Sequence, Tuple, Union

import numpy as np

from sparsemask.core.error_handling import (
    CorruptStreamError,
    EmptyHistogramError,
    RepresentationError,
    TruncatedDataError,
)
from sparsemask.core.image_io import BinaryMask

ROW_MAJOR = "row-major"
COLUMN_MAJOR = "column-major"


@dataclass(frozen=True)
class BitSequence:
    """Mask bits in scan order."""

    bits: Tuple[int, ...]
    order: str
    width: int
    height: int


@dataclass(frozen=True)
class RunLengthSeq:
    """Zero-gap before each set bit, scanning column by column."""

    runs: Tuple[int, ...]


@dataclass(frozen=True)
class CooList:
    """Sorted, 1-indexed (row, column) pairs of the set bits."""

    entries: Tuple[Tuple[int, int], ...]


@dataclass(frozen=True)
class CsrForm:
    """Column indices scanned row by row plus the number of set bits in each row."""

    column_indices: Tuple[int, ...]
    row_counts: Tuple[int, ...]


def vectorise_row_major(mask: BinaryMask) -> BitSequence:
    """Bit i is mask(row i // width, column i % width)."""
    return BitSequence(tuple(int(b) for b in mask.bits.ravel()), ROW_MAJOR, mask.width, mask.height)


def vectorise_column_major(mask: BinaryMask) -> BitSequence:
    return BitSequence(tuple(int(b) for b in mask.bits.T.ravel()), COLUMN_MAJOR, mask.width, mask.height)


def devectorise(sequence: BitSequence) -> BinaryMask:
    """Inverse of either vectorisation."""
    if len(sequence.bits) != sequence.width * sequence.height:
        raise RepresentationError(
            f"{len(sequence.bits)} bits cannot fill a {sequence.width}x{sequence.height} mask"
        )
    flat = np.asarray(sequence.bits, dtype=bool)
    if sequence.order == ROW_MAJOR:
        bits = flat.reshape(sequence.height, sequence.width)
    elif sequence.order == COLUMN_MAJOR:
        bits = flat.reshape(sequence.width, sequence.height).T
    else:
        raise RepresentationError(f"unknown scan order '{sequence.order}'")
    return BinaryMask(width=sequence.width, height=sequence.height, bits=bits)


def rle_encode(mask: BinaryMask) -> RunLengthSeq:
    """
    Run-length encode a mask in column-major order.

    For each set bit, emit the number of zeros since the previous set bit;
    zeros after the last set bit are implied by the dimensions.
    """
    positions = np.flatnonzero(mask.bits.T.ravel())
    runs = np.diff(positions, prepend=-1) - 1
    return RunLengthSeq(tuple(int(r) for r in runs))


def rle_decode(runs: Union[RunLengthSeq, Sequence[int]], width: int, height: int) -> BinaryMask:
    """
    Rebuild a mask from column-major zero runs.

    Raises:
        RepresentationError: If a run is negative or the runs overflow the image area
    """
    values = runs.runs if isinstance(runs, RunLengthSeq) else tuple(runs)
    column_major = np.zeros(width * height, dtype=bool)
    if values:
        gaps = np.asarray(values, dtype=np.int64)
        if gaps.min() < 0:
            raise RepresentationError("run-lengths must be non-negative")
        positions = np.cumsum(gaps + 1) - 1
        if positions[-1] >= width * height:
            raise RepresentationError(
                f"runs overflow the image area: last one at {int(positions[-1])}, area {width * height}",
                {"area": width * height},
            )
        column_major[positions] = True
    return BinaryMask(width=width, height=height, bits=column_major.reshape(width, height).T)


def coo_encode(mask: BinaryMask) -> CooList:
    rows, cols = np.nonzero(mask.bits)
    return CooList(tuple((int(r) + 1, int(c) + 1) for r, c in zip(rows, cols)))


def coo_decode(coo: CooList, width: int, height: int) -> BinaryMask:
    """
    Rebuild a mask from a coordinate list.

    Raises:
        RepresentationError: If an entry is out of bounds or entries are not strictly increasing
    """
    bits = np.zeros((height, width), dtype=bool)
    previous = -1
    for row, col in coo.entries:
        if not (1 <= row <= height and 1 <= col <= width):
            raise RepresentationError(f"entry ({row}, {col}) is outside a {width}x{height} mask")
        index = (row - 1) * width + (col - 1)
        if index <= previous:
            raise RepresentationError(f"entry ({row}, {col}) breaks row-major ordering")
        previous = index
        bits[row - 1, col - 1] = True
    return BinaryMask(width=width, height=height, bits=bits)


def csr_encode(mask: BinaryMask) -> CsrForm:
    _, cols = np.nonzero(mask.bits)
    counts = np.count_nonzero(mask.bits, axis=1)
    return CsrForm(tuple(int(c) + 1 for c in cols), tuple(int(n) for n in counts))


def csr_decode(csr: CsrForm, width: int, height: int) -> BinaryMask:
    """
    Rebuild a mask from the modified CSR form.

    Raises:
        RepresentationError: If the row counts are inconsistent with the columns or the height
    """
    if len(csr.row_counts) != height or sum(csr.row_counts) != len(csr.column_indices):
        raise RepresentationError(
            "inconsistent counts: row_counts must have one entry per row and sum to the number of columns",
            {"rows": len(csr.row_counts), "height": height, "columns": len(csr.column_indices)},
        )
    bits = np.zeros((height, width), dtype=bool)
    cursor = 0
    for row, count in enumerate(csr.row_counts):
        if count < 0:
            raise RepresentationError(f"negative count in row {row + 1}")
        previous = 0
        for col in csr.column_indices[cursor : cursor + count]:
            if not previous < col <= width:
                raise RepresentationError(f"column {col} in row {row + 1} is out of range or out of order")
            bits[row, col - 1] = True
            previous = col
        cursor += count
    return BinaryMask(width=width, height=height, bits=bits)


def symbol_histogram(symbols: Iterable[Hashable]) -> Counter:
    return Counter(symbols)


def shannon_entropy(counts: Union[Mapping[Hashable, int], Sequence[int]]) -> float:
    """
    Shannon entropy in bits per symbol.

    Args:
        counts: Symbol histogram, either a mapping of counts or a plain sequence of counts

    Returns:
        H = -sum(p_i * log2(p_i)); zero counts contribute nothing

    Raises:
        EmptyHistogramError: If the counts sum to zero
    """
    values = list(counts.values()) if isinstance(counts, Mapping) else list(counts)
    total = sum(values)
    if total <= 0:
        raise EmptyHistogramError()
    entropy = 0.0
    for count in values:
        if count > 0:
            p = count / total
            entropy -= p * math.log2(p)
    return max(entropy, 0.0)


def varint_encode(values: Iterable[int]) -> bytes:
    """Encode non-negative integers as little-endian base-128 groups, high bit = continuation."""
    out = bytearray()
    for value in values:
        if value < 0:
            raise RepresentationError(f"varint values must be non-negative, got {value}")
        while value >= 0x80:
            out.append((value & 0x7F) | 0x80)
            value >>= 7
        out.append(value)
    return bytes(out)


def varint_decode(data: bytes) -> List[int]:
    """
    Inverse of varint_encode().

    Raises:
        TruncatedDataError: If the data ends inside a varint
    """
    values = []
    value = 0
    shift = 0
    pending = False
    for byte in data:
        value |= (byte & 0x7F) << shift
        if byte & 0x80:
            shift += 7
            pending = True
        else:
            values.append(value)
            value = 0
            shift = 0
            pending = False
    if pending:
        raise TruncatedDataError("truncated varint at end of stream")
    return values


def runs_to_bytes(runs: Union[RunLengthSeq, Sequence[int]]) -> bytes:
    values = runs.runs if isinstance(runs, RunLengthSeq) else runs
    return varint_encode(values)


def bytes_to_runs(data: bytes) -> RunLengthSeq:
    return RunLengthSeq(tuple(varint_decode(data)))


def coo_to_bytes(coo: CooList) -> bytes:
    """Varint stream of row, column, row, column, ..."""
    return varint_encode(value for entry in coo.entries for value in entry)


def bytes_to_coo(data: bytes) -> CooList:
    values = varint_decode(data)
    if len(values) % 2:
        raise CorruptStreamError("coordinate stream has an odd number of values")
    return CooList(tuple(zip(values[0::2], values[1::2])))


def csr_to_bytes(csr: CsrForm) -> bytes:
    """Varint stream of the row counts followed by the column indices."""
    return varint_encode(csr.row_counts) + varint_encode(csr.column_indices)


def bytes_to_csr(data: bytes, height: int) -> CsrForm:
    values = varint_decode(data)
    if len(values) < height:
        raise CorruptStreamError(f"CSR stream holds {len(values)} values, needs at least {height} row counts")
    return CsrForm(tuple(values[height:]), tuple(values[:height]))


def representation_tokens(mask: BinaryMask, form: str) -> List[List[int]]:
    """
    Integer lines of a representation, as printed by the CLI.

    Args:
        mask: The mask to convert
        form: One of "vector", "rle", "coo", "csr"

    Returns:
        A list of lines, each a list of integers
    """
    if form == "vector":
        return [list(vectorise_row_major(mask).bits)]
    if form == "rle":
        return [list(rle_encode(mask).runs)]
    if form == "coo":
        return [[row, col] for row, col in coo_encode(mask).entries]
    if form == "csr":
        csr = csr_encode(mask)
        return [list(csr.column_indices), list(csr.row_counts)]
    raise RepresentationError(f"unknown representation '{form}'; expected vector, rle, coo or csr")


REPRESENTATIONS = ("vector", "rle", "coo", "csr")
