"""
Entropy coding backends shared by all mask codecs.

- A bit-level binary arithmetic coder with 32-bit low/high registers,
  16-bit probabilities and pending-bit (carry) renormalization.
- An adaptive bit model with shift-based updates.
- Canonical Huffman coding with a compact code-length serialization.

Probabilities passed to the coder are p1, the probability that the next
bit is 1, scaled to 16 bits and clamped to [1, 65535].
"""

import heapq
import math
from dataclasses import dataclass
from itertools import count
from typing import Dict, Hashable, Iterable, List, Mapping, Sequence, Tuple

from sparsemask.core.error_handling import (
    CorruptStreamError,
    DecodePastEndError,
    EmptyHistogramError,
    SparseMaskError,
)

PROB_BITS = 16
PROB_ONE = 1 << PROB_BITS
PROB_MIN = 1
PROB_MAX = PROB_ONE - 1

_TOP = 0xFFFFFFFF
_HALF = 0x80000000
_QUARTER = 0x40000000
_THREE_QUARTERS = 0xC0000000

# The decoder preloads 32 bits, so it may legitimately read up to 32 bits past the payload.
_MAX_PHANTOM_BITS = 32


def clamp_probability(p1: int) -> int:
    return PROB_MIN if p1 < PROB_MIN else PROB_MAX if p1 > PROB_MAX else p1


def quantize_probability(p: float) -> int:
    """Scale a probability of a 1 to 16 bits, clamped so neither symbol is impossible."""
    return clamp_probability(int(p * PROB_ONE + 0.5))


def ideal_cost_bits(p1_trace: Sequence[int], bits: Sequence[int]) -> float:
    """Information content -sum(log2 p(bit)) of a bit sequence under a 16-bit probability trace."""
    total = 0.0
    for p1, bit in zip(p1_trace, bits):
        total -= math.log2((p1 if bit else PROB_ONE - p1) / PROB_ONE)
    return total


def log2_binomial(n: int, k: int) -> float:
    """log2 C(n, k) via lgamma, for Marwood cost oracles."""
    return (math.lgamma(n + 1) - math.lgamma(k + 1) - math.lgamma(n - k + 1)) / math.log(2)


class BitWriter:
    """Accumulates bits MSB-first into bytes."""

    def __init__(self):
        self._out = bytearray()
        self._current = 0
        self._filled = 0

    def write_bit(self, bit: int) -> None:
        self._current = (self._current << 1) | bit
        self._filled += 1
        if self._filled == 8:
            self._out.append(self._current)
            self._current = 0
            self._filled = 0

    def write_bits(self, value: int, width: int) -> None:
        for shift in range(width - 1, -1, -1):
            self.write_bit((value >> shift) & 1)

    @property
    def bit_length(self) -> int:
        return len(self._out) * 8 + self._filled

    def getvalue(self) -> bytes:
        """Return the bytes written so far, zero-padding the last partial byte."""
        if self._filled:
            return bytes(self._out) + bytes([self._current << (8 - self._filled)])
        return bytes(self._out)


class BitReader:
    """Reads bits MSB-first; past the end it yields zeros and counts them."""

    def __init__(self, data: bytes, start: int = 0):
        self._data = data
        self._pos = start * 8
        self._limit = len(data) * 8
        self.phantom_bits = 0

    def read_bit(self) -> int:
        pos = self._pos
        self._pos = pos + 1
        if pos >= self._limit:
            self.phantom_bits += 1
            return 0
        return (self._data[pos >> 3] >> (7 - (pos & 7))) & 1

    def read_bits(self, width: int) -> int:
        value = 0
        for _ in range(width):
            value = (value << 1) | self.read_bit()
        return value

    def require_in_bounds(self) -> None:
        if self.phantom_bits:
            raise DecodePastEndError(details={"missing_bits": self.phantom_bits})

    @property
    def bit_position(self) -> int:
        return self._pos

    @property
    def byte_position(self) -> int:
        return (self._pos + 7) // 8


class ArithmeticEncoder:
    """
    Binary arithmetic encoder over 32-bit integer ranges.

    The interval [low, high] is split in proportion p1 / 65536, the 1-branch
    taking the lower part. Underflow is handled by counting pending bits that
    are emitted, inverted, once the next decided bit is known.
    """

    def __init__(self):
        self.low = 0
        self.high = _TOP
        self.pending_bits = 0
        self.bits_coded = 0
        self._writer = BitWriter()
        self._finished = False

    def _emit(self, bit: int) -> None:
        writer = self._writer
        writer.write_bit(bit)
        inverse = bit ^ 1
        for _ in range(self.pending_bits):
            writer.write_bit(inverse)
        self.pending_bits = 0

    def encode_bit(self, bit: int, p1: int) -> None:
        """
        Encode one bit.

        Args:
            bit: 0 or 1
            p1: Probability of a 1, scaled to 16 bits, in [1, 65535]
        """
        self.bits_coded += 1
        low = self.low
        high = self.high
        split = ((high - low + 1) * p1) >> PROB_BITS
        if bit:
            high = low + split - 1
        else:
            low = low + split

        while True:
            if high < _HALF:
                self._emit(0)
            elif low >= _HALF:
                self._emit(1)
                low -= _HALF
                high -= _HALF
            elif low >= _QUARTER and high < _THREE_QUARTERS:
                self.pending_bits += 1
                low -= _QUARTER
                high -= _QUARTER
            else:
                break
            low <<= 1
            high = (high << 1) | 1

        self.low = low
        self.high = high

    def finish(self) -> bytes:
        """Flush the final interval and return the payload; an encoder that coded no bits yields b""."""
        if self.bits_coded and not self._finished:
            self._finished = True
            self.pending_bits += 1
            self._emit(0 if self.low < _QUARTER else 1)
        return self._writer.getvalue()


class ArithmeticDecoder:
    """Mirror of ArithmeticEncoder; must be fed the same p1 sequence."""

    def __init__(self, payload: bytes, start: int = 0):
        self._reader = BitReader(payload, start)
        self.low = 0
        self.high = _TOP
        self.value = self._reader.read_bits(32)

    def decode_bit(self, p1: int) -> int:
        """
        Decode one bit.

        Raises:
            DecodePastEndError: If decoding needs more bits than the payload can supply
        """
        low = self.low
        high = self.high
        value = self.value
        split = ((high - low + 1) * p1) >> PROB_BITS
        if value < low + split:
            bit = 1
            high = low + split - 1
        else:
            bit = 0
            low = low + split

        reader = self._reader
        while True:
            if high < _HALF:
                pass
            elif low >= _HALF:
                low -= _HALF
                high -= _HALF
                value -= _HALF
            elif low >= _QUARTER and high < _THREE_QUARTERS:
                low -= _QUARTER
                high -= _QUARTER
                value -= _QUARTER
            else:
                break
            low <<= 1
            high = (high << 1) | 1
            value = (value << 1) | reader.read_bit()

        if reader.phantom_bits > _MAX_PHANTOM_BITS:
            raise DecodePastEndError(details={"phantom_bits": reader.phantom_bits})

        self.low = low
        self.high = high
        self.value = value
        return bit


@dataclass
class AdaptiveBitModel:
    """Zeroth-order adaptive estimate of the probability of a 1."""

    p1: int = PROB_ONE // 2
    update_rate: int = 5

    def update(self, bit: int) -> None:
        self.p1 = clamp_probability(self.p1 + (((bit << PROB_BITS) - self.p1) >> self.update_rate))


def adaptive_update(model: AdaptiveBitModel, bit: int) -> AdaptiveBitModel:
    """p1 <- p1 + ((bit * 65536 - p1) >> update_rate), clamped to [1, 65535]."""
    model.update(bit)
    return model


@dataclass(frozen=True)
class HuffmanTable:
    """Canonical prefix code: symbol -> (code length, code)."""

    codes: Dict[Hashable, Tuple[int, int]]

    @property
    def lengths(self) -> Dict[Hashable, int]:
        return {symbol: length for symbol, (length, _) in self.codes.items()}

    def kraft_sum(self) -> float:
        return sum(2.0 ** -length for length, _ in self.codes.values())

    def write_symbol(self, writer: BitWriter, symbol: Hashable) -> None:
        try:
            length, code = self.codes[symbol]
        except KeyError:
            raise SparseMaskError(f"symbol {symbol!r} is not in the Huffman table", "unknown_symbol") from None
        writer.write_bits(code, length)

    def decoder(self) -> "HuffmanDecoder":
        return HuffmanDecoder(self)


class HuffmanDecoder:
    def __init__(self, table: HuffmanTable):
        self._lookup = {(length, code): symbol for symbol, (length, code) in table.codes.items()}
        self._max_length = max((length for length, _ in table.codes.values()), default=0)

    def read_symbol(self, reader: BitReader) -> Hashable:
        code = 0
        for length in range(1, self._max_length + 1):
            code = (code << 1) | reader.read_bit()
            symbol = self._lookup.get((length, code))
            if symbol is not None:
                reader.require_in_bounds()
                return symbol
        raise CorruptStreamError("invalid Huffman code in stream")


def canonical_table(lengths: Mapping[Hashable, int]) -> HuffmanTable:
    """Assign canonical codes, ordered by (length, symbol)."""
    codes: Dict[Hashable, Tuple[int, int]] = {}
    code = 0
    previous = 0
    for symbol, length in sorted(lengths.items(), key=lambda item: (item[1], item[0])):
        code <<= length - previous
        codes[symbol] = (length, code)
        code += 1
        previous = length
    return HuffmanTable(codes)


def huffman_build(histogram: Mapping[Hashable, int]) -> HuffmanTable:
    """
    Build an optimal canonical prefix code with the classic heap construction.

    A single-symbol alphabet gets a 1-bit code.

    Raises:
        EmptyHistogramError: If no symbol has a positive count
    """
    symbols = sorted(symbol for symbol, freq in histogram.items() if freq > 0)
    if not symbols:
        raise EmptyHistogramError()
    if len(symbols) == 1:
        return canonical_table({symbols[0]: 1})

    tiebreak = count()
    heap = [(histogram[symbol], next(tiebreak), [symbol]) for symbol in symbols]
    heapq.heapify(heap)
    lengths = {symbol: 0 for symbol in symbols}
    while len(heap) > 1:
        freq_a, _, group_a = heapq.heappop(heap)
        freq_b, _, group_b = heapq.heappop(heap)
        for symbol in group_a + group_b:
            lengths[symbol] += 1
        heapq.heappush(heap, (freq_a + freq_b, next(tiebreak), group_a + group_b))
    return canonical_table(lengths)


def huffman_encode(symbols: Iterable[Hashable], table: HuffmanTable) -> List[int]:
    """Encode symbols into a list of bits."""
    bits: List[int] = []
    for symbol in symbols:
        try:
            length, code = table.codes[symbol]
        except KeyError:
            raise SparseMaskError(f"symbol {symbol!r} is not in the Huffman table", "unknown_symbol") from None
        bits.extend((code >> shift) & 1 for shift in range(length - 1, -1, -1))
    return bits


def huffman_decode(bits: Sequence[int], table: HuffmanTable, symbol_count: int) -> List[Hashable]:
    """Decode exactly symbol_count symbols from a list of bits."""
    writer = BitWriter()
    for bit in bits:
        writer.write_bit(bit)
    reader = BitReader(writer.getvalue())
    decoder = table.decoder()
    symbols = [decoder.read_symbol(reader) for _ in range(symbol_count)]
    if reader.bit_position != len(bits):
        raise CorruptStreamError("trailing bits after the last Huffman symbol")
    return symbols


LENGTHS_TERMINATOR = 0xFF
SPARSE_LENGTHS_MARKER = 0xFE


def serialize_code_lengths(table: HuffmanTable) -> bytes:
    """
    Serialize code lengths in the shorter of two forms.

    Dense: one length byte per symbol 0..max_symbol (0 = unused), then 0xFF.
    Sparse: 0xFE, then a (length, symbol) byte pair per used symbol in
    ascending symbol order, then 0xFF in place of a length. A table whose
    alphabet is a few scattered symbols (for example runs plus the 255
    escape) stays small in the sparse form.

    Only integer alphabets in 0..255 are serializable.
    """
    lengths = table.lengths
    if any(length >= SPARSE_LENGTHS_MARKER for length in lengths.values()):
        raise SparseMaskError("code length too long to serialize", "code_too_long")
    top = max(lengths)
    dense = bytearray(lengths.get(symbol, 0) for symbol in range(top + 1))
    dense.append(LENGTHS_TERMINATOR)
    if 2 * len(lengths) + 2 >= len(dense):
        return bytes(dense)
    sparse = bytearray([SPARSE_LENGTHS_MARKER])
    for symbol in sorted(lengths):
        sparse.extend((lengths[symbol], symbol))
    sparse.append(LENGTHS_TERMINATOR)
    return bytes(sparse)


def _parse_sparse_lengths(data: bytes, offset: int) -> Tuple[Dict[int, int], int]:
    lengths: Dict[int, int] = {}
    while True:
        if offset >= len(data):
            raise CorruptStreamError("unterminated Huffman code-length list")
        length = data[offset]
        if length == LENGTHS_TERMINATOR:
            return lengths, offset + 1
        if offset + 1 >= len(data):
            raise CorruptStreamError("truncated Huffman code-length pair")
        symbol = data[offset + 1]
        if length == 0 or length == SPARSE_LENGTHS_MARKER or symbol in lengths:
            raise CorruptStreamError(f"invalid Huffman code-length pair ({length}, {symbol})")
        lengths[symbol] = length
        offset += 2


def parse_code_lengths(data: bytes, start: int = 0) -> Tuple[HuffmanTable, int]:
    """
    Inverse of serialize_code_lengths().

    Returns:
        The table and the offset just past the terminator
    """
    if start < len(data) and data[start] == SPARSE_LENGTHS_MARKER:
        lengths, offset = _parse_sparse_lengths(data, start + 1)
    else:
        end = data.find(bytes([LENGTHS_TERMINATOR]), start)
        if end < 0:
            raise CorruptStreamError("unterminated Huffman code-length list")
        lengths = {symbol: length for symbol, length in enumerate(data[start:end]) if length}
        offset = end + 1
    if not lengths:
        raise CorruptStreamError("Huffman code-length list is empty")
    table = canonical_table(lengths)
    if table.kraft_sum() > 1.0:
        raise CorruptStreamError("Huffman code lengths violate the Kraft inequality")
    return table, offset
