"""
Built-in mask codecs.

Importing this module registers every codec with the codec registry:

    id  name
    1   marwood
    2   demaret
    3   bpaq-s
    4   bpaq-m
    5   bpaq-l
    6   bpaq-xl
    7   ulpaq        run-lengths as varints, ULPAQ-coded
    8   rle-huffman  run-lengths, canonical Huffman with an escape for long runs
    9   rle-arith    run-lengths as varints, adaptive order-0 arithmetic coding
"""

import struct

from sparsemask.core.codec_registry import MaskCodec, register_codec
from sparsemask.core.context_codecs import (
    bpaq_decode,
    bpaq_encode,
    demaret_decode,
    demaret_encode,
    marwood_decode,
    marwood_encode,
)
from sparsemask.core.entropy_coding import (
    BitReader,
    BitWriter,
    huffman_build,
    parse_code_lengths,
    serialize_code_lengths,
)
from sparsemask.core.error_handling import CorruptStreamError, LengthMismatchError, RepresentationError
from sparsemask.core.image_io import BinaryMask
from sparsemask.core.representations import (
    RunLengthSeq,
    bytes_to_runs,
    rle_decode,
    rle_encode,
    runs_to_bytes,
    symbol_histogram,
)
from sparsemask.core.ulpaq import order0_decode_varints, order0_encode, ulpaq_decode, ulpaq_encode

RUN_ESCAPE = 255
_BYTE_COUNT = struct.Struct("<I")


def _runs_to_mask(runs: RunLengthSeq, width: int, height: int, ones_count: int) -> BinaryMask:
    if len(runs.runs) != ones_count:
        raise CorruptStreamError(f"payload holds {len(runs.runs)} runs, header says {ones_count} ones")
    try:
        return rle_decode(runs, width, height)
    except RepresentationError as error:
        raise CorruptStreamError(error.message, error.details) from error


@register_codec("marwood", 1)
class MarwoodCodec(MaskCodec):
    def encode(self, mask: BinaryMask) -> bytes:
        return marwood_encode(mask)

    def decode(self, payload: bytes, width: int, height: int, ones_count: int) -> BinaryMask:
        return marwood_decode(payload, width, height, ones_count)


@register_codec("demaret", 2)
class DemaretCodec(MaskCodec):
    def encode(self, mask: BinaryMask) -> bytes:
        return demaret_encode(mask)

    def decode(self, payload: bytes, width: int, height: int, ones_count: int) -> BinaryMask:
        return demaret_decode(payload, width, height, ones_count)


class BpaqCodec(MaskCodec):
    variant = ""

    def encode(self, mask: BinaryMask) -> bytes:
        return bpaq_encode(mask, self.variant)

    def decode(self, payload: bytes, width: int, height: int, ones_count: int) -> BinaryMask:
        return bpaq_decode(payload, width, height, ones_count, self.variant)


@register_codec("bpaq-s", 3)
class BpaqSCodec(BpaqCodec):
    variant = "S"


@register_codec("bpaq-m", 4)
class BpaqMCodec(BpaqCodec):
    variant = "M"


@register_codec("bpaq-l", 5)
class BpaqLCodec(BpaqCodec):
    variant = "L"


@register_codec("bpaq-xl", 6)
class BpaqXLCodec(BpaqCodec):
    variant = "XL"


@register_codec("ulpaq", 7)
class UlpaqCodec(MaskCodec):
    """Payload: length of the varint run stream (u32 little-endian), then the ULPAQ stream."""

    def encode(self, mask: BinaryMask) -> bytes:
        data = runs_to_bytes(rle_encode(mask))
        return _BYTE_COUNT.pack(len(data)) + ulpaq_encode(data)

    def decode(self, payload: bytes, width: int, height: int, ones_count: int) -> BinaryMask:
        if len(payload) < _BYTE_COUNT.size:
            raise LengthMismatchError(f"ulpaq payload of {len(payload)} bytes has no byte count")
        (byte_count,) = _BYTE_COUNT.unpack_from(payload)
        if byte_count > 5 * ones_count:
            raise CorruptStreamError(f"byte count {byte_count} is too large for {ones_count} runs")
        data = ulpaq_decode(payload[_BYTE_COUNT.size :], byte_count)
        return _runs_to_mask(bytes_to_runs(data), width, height, ones_count)


@register_codec("rle-huffman", 8)
class RleHuffmanCodec(MaskCodec):
    """
    Payload: code lengths of the run alphabet, then one code per run.

    Runs of 255 or more are coded as the escape symbol followed by the run as
    a raw 32-bit value.
    """

    def encode(self, mask: BinaryMask) -> bytes:
        runs = rle_encode(mask).runs
        if not runs:
            return b""
        symbols = [min(run, RUN_ESCAPE) for run in runs]
        table = huffman_build(symbol_histogram(symbols))
        writer = BitWriter()
        for run, symbol in zip(runs, symbols):
            table.write_symbol(writer, symbol)
            if symbol == RUN_ESCAPE:
                writer.write_bits(run, 32)
        return serialize_code_lengths(table) + writer.getvalue()

    def decode(self, payload: bytes, width: int, height: int, ones_count: int) -> BinaryMask:
        if ones_count == 0:
            if payload:
                raise LengthMismatchError("empty mask with a nonempty payload")
            return BinaryMask.empty(width, height)
        table, offset = parse_code_lengths(payload)
        reader = BitReader(payload, offset)
        decoder = table.decoder()
        runs = []
        for _ in range(ones_count):
            symbol = decoder.read_symbol(reader)
            runs.append(reader.read_bits(32) if symbol == RUN_ESCAPE else symbol)
        reader.require_in_bounds()
        return _runs_to_mask(RunLengthSeq(tuple(runs)), width, height, ones_count)


@register_codec("rle-arith", 9)
class RleArithCodec(MaskCodec):
    """Payload: the varint run stream under an adaptive order-0 byte model; its end follows from ones_count."""

    def encode(self, mask: BinaryMask) -> bytes:
        return order0_encode(runs_to_bytes(rle_encode(mask)))

    def decode(self, payload: bytes, width: int, height: int, ones_count: int) -> BinaryMask:
        data = order0_decode_varints(payload, ones_count)
        return _runs_to_mask(bytes_to_runs(data), width, height, ones_count)
