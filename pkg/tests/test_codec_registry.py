"""
Tests for the codec registry and the built-in codecs.
"""

import logging
import struct
import unittest

import numpy as np

from sparsemask.core import codec_registry
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
from sparsemask.core.error_handling import (
    ConfigError,
    CorruptStreamError,
    LengthMismatchError,
    SparseMaskError,
    UnknownCodecError,
)
from sparsemask.core.image_io import BinaryMask, EncodedMask, read_container, write_container

# Set up logging
logging.basicConfig(level=logging.INFO)
logger = logging.getLogger("test_codec_registry")

BUILTIN_CODECS = [
    "marwood",
    "demaret",
    "bpaq-s",
    "bpaq-m",
    "bpaq-l",
    "bpaq-xl",
    "ulpaq",
    "rle-huffman",
    "rle-arith",
]

FIXTURE = BinaryMask.from_rows(["1010", "0001", "0100", "0010"])


def sample_masks():
    rng = np.random.default_rng(17)
    yield FIXTURE
    yield BinaryMask.empty(6, 4)
    yield BinaryMask.full(4, 6)
    yield BinaryMask.from_rows(["1"])
    yield BinaryMask.from_rows(["0"])
    # Runs longer than the Huffman escape threshold
    yield BinaryMask.from_indices(50, 50, [0, 1000, 2499])
    for width, height, density in [(1, 30, 0.2), (30, 1, 0.2), (25, 19, 0.04), (16, 16, 0.5)]:
        yield BinaryMask(width=width, height=height, bits=rng.random((height, width)) < density)


class TestRegistry(unittest.TestCase):
    """Test cases for codec lookup and registration."""

    def test_list_order(self):
        self.assertEqual(list_codecs(), BUILTIN_CODECS)

    def test_ids(self):
        for codec_id, name in enumerate(BUILTIN_CODECS, start=1):
            self.assertEqual(get_codec(name).codec_id, codec_id)
            self.assertEqual(get_codec_by_id(codec_id).name, name)

    def test_unknown_codec(self):
        self.assertIsNone(get_codec("zip"))
        self.assertIsNone(get_codec_by_id(99))
        with self.assertRaises(UnknownCodecError) as context:
            require_codec("zip")
        self.assertEqual(context.exception.code, "unknown_codec")
        with self.assertRaises(UnknownCodecError):
            encode_mask(FIXTURE, "zip")

    def test_duplicate_registration(self):
        list_codecs()

        class Duplicate(MaskCodec):
            pass

        with self.assertRaises(ConfigError):
            register_codec("marwood", 200)(Duplicate)
        with self.assertRaises(ConfigError):
            register_codec("another", 1)(Duplicate)
        with self.assertRaises(ConfigError):
            register_codec("another", 0)(Duplicate)

    def test_register_new_codec(self):
        """A registered codec is reachable by name and id."""

        @register_codec("raw-test", 250)
        class RawCodec(MaskCodec):
            def encode(self, mask):
                return np.packbits(mask.bits.ravel()).tobytes()

            def decode(self, payload, width, height, ones_count):
                bits = np.unpackbits(np.frombuffer(payload, dtype=np.uint8))[: width * height]
                return BinaryMask(width=width, height=height, bits=bits.astype(bool))

        self.addCleanup(codec_registry._codecs_by_name.pop, "raw-test")
        self.addCleanup(codec_registry._codecs_by_id.pop, 250)

        self.assertEqual(list_codecs()[-1], "raw-test")
        encoded = encode_mask(FIXTURE, "raw-test")
        self.assertEqual(encoded.codec_id, 250)
        self.assertEqual(decode_mask(encoded), FIXTURE)


class TestBuiltinCodecs(unittest.TestCase):
    """Every built-in codec reproduces every mask exactly."""

    def test_round_trip_through_container(self):
        for name in BUILTIN_CODECS:
            for mask in sample_masks():
                encoded = encode_mask(mask, name)
                self.assertEqual(encoded.ones_count, mask.count)
                restored = decode_mask(read_container(write_container(encoded)))
                self.assertEqual(restored, mask, f"{name} failed on {mask!r}")

    def test_decoded_count_must_match_header(self):
        encoded = encode_mask(FIXTURE, "demaret")
        tampered = EncodedMask(codec_id=encoded.codec_id, width=4, height=4, ones_count=4, payload=encoded.payload)
        with self.assertRaises(CorruptStreamError):
            decode_mask(tampered)

    def test_ulpaq_checks_run_count(self):
        """The stored stream length fixes the number of runs, which must match the header."""
        encoded = encode_mask(FIXTURE, "ulpaq")
        tampered = EncodedMask(codec_id=encoded.codec_id, width=4, height=4, ones_count=4, payload=encoded.payload)
        with self.assertRaises(CorruptStreamError):
            decode_mask(tampered)

    def test_truncated_huffman_stream(self):
        payload = require_codec("rle-huffman").encode(FIXTURE)
        with self.assertRaises(SparseMaskError):
            require_codec("rle-huffman").decode(payload[:7], 4, 4, 5)

    def test_ulpaq_payload_without_length(self):
        with self.assertRaises(LengthMismatchError):
            require_codec("ulpaq").decode(b"\x01\x00", 4, 4, 5)

    def test_ulpaq_length_out_of_range(self):
        payload = struct.pack("<I", 1000)
        with self.assertRaises(CorruptStreamError):
            require_codec("ulpaq").decode(payload, 4, 4, 5)

    def test_rle_huffman_empty_mask(self):
        codec = require_codec("rle-huffman")
        self.assertEqual(codec.encode(BinaryMask.empty(3, 3)), b"")
        with self.assertRaises(LengthMismatchError):
            codec.decode(b"\x01", 3, 3, 0)

    def test_rle_huffman_layout(self):
        """Fixture runs 0 5 1 2 1: code lengths for 0..5, terminator, then the codes."""
        payload = require_codec("rle-huffman").encode(FIXTURE)
        self.assertEqual(payload[6], 0xFF)
        self.assertEqual(payload[3:5], b"\x00\x00")

    def test_rle_huffman_escape_keeps_table_small(self):
        """A run past 254 needs the escape symbol but not a 256-entry length table."""
        bits = np.zeros((64, 64), dtype=bool)
        bits[0, 0] = bits[63, 63] = True
        mask = BinaryMask(width=64, height=64, bits=bits)
        codec = require_codec("rle-huffman")
        payload = codec.encode(mask)
        self.assertEqual(payload[0], 0xFE)
        self.assertLessEqual(len(payload), 12)
        self.assertEqual(codec.decode(payload, 64, 64, 2), mask)


if __name__ == "__main__":
    unittest.main()
