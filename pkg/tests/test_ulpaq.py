"""
Tests for the ULPAQ byte coder and the order-0 byte coder.
"""

import logging
import unittest

import numpy as np

from sparsemask.core.bench import synthetic_corpus
from sparsemask.core.codec_registry import require_codec
from sparsemask.core.error_handling import ConfigError, CorruptStreamError
from sparsemask.core.image_io import BinaryMask
from sparsemask.core.mask_gen import generate_mask, generate_masks
from sparsemask.core.representations import rle_encode, runs_to_bytes, varint_encode
from sparsemask.core.ulpaq import (
    IntraByteModel,
    SseStage,
    UlpaqConfig,
    order0_decode_varints,
    order0_encode,
    ulpaq_decode,
    ulpaq_encode,
)

# Set up logging
logging.basicConfig(level=logging.INFO)
logger = logging.getLogger("test_ulpaq")


def run_stream(width, height, density, seed):
    rng = np.random.default_rng(seed)
    mask = BinaryMask(width=width, height=height, bits=rng.random((height, width)) < density)
    return runs_to_bytes(rle_encode(mask))


class TestUlpaq(unittest.TestCase):
    """Test cases for ULPAQ compression."""

    def test_round_trip(self):
        rng = np.random.default_rng(9)
        samples = [b"", b"\x00", b"\xff", bytes(range(256)), run_stream(64, 64, 0.05, seed=1)]
        samples.extend(rng.bytes(int(rng.integers(1, 300))) for _ in range(5))
        for data in samples:
            payload = ulpaq_encode(data)
            self.assertEqual(ulpaq_decode(payload, len(data)), data)

    def test_empty_input(self):
        self.assertEqual(ulpaq_encode(b""), b"")
        self.assertEqual(ulpaq_decode(b"", 0), b"")

    def test_zero_bytes_compress_well(self):
        self.assertLess(len(ulpaq_encode(bytes(1000))), 30)

    def test_run_stream_is_compressed(self):
        data = run_stream(128, 128, 0.05, seed=2)
        self.assertLess(len(ulpaq_encode(data)), len(data))

    def test_encoder_and_decoder_states_match(self):
        data = run_stream(16, 16, 0.15, seed=3)
        encoder_log, decoder_log = [], []

        def recorder(log):
            return lambda i, bit, p1, model: log.append((i, bit, p1, model.state_digest()))

        payload = ulpaq_encode(data, observer=recorder(encoder_log))
        ulpaq_decode(payload, len(data), observer=recorder(decoder_log))
        self.assertEqual(len(encoder_log), 8 * len(data))
        self.assertEqual(encoder_log, decoder_log)

    def test_configurations_round_trip(self):
        data = run_stream(48, 48, 0.08, seed=4)
        configs = (
            UlpaqConfig(),
            UlpaqConfig(sse_enabled=False),
            UlpaqConfig(sse_shift=None),
            UlpaqConfig(model_shift=4),
        )
        for config in configs:
            payload = ulpaq_encode(data, config)
            self.assertEqual(ulpaq_decode(payload, len(data), config), data)

    def test_frozen_sse_is_close_to_no_sse(self):
        """An untrained SSE stage is the identity, so freezing it costs almost nothing."""
        data = run_stream(96, 96, 0.05, seed=5)
        plain = len(ulpaq_encode(data, UlpaqConfig(sse_enabled=False)))
        frozen = len(ulpaq_encode(data, UlpaqConfig(sse_shift=None)))
        self.assertLessEqual(abs(plain - frozen), max(2, plain // 50))

    def test_invalid_config(self):
        with self.assertRaises(ConfigError):
            UlpaqConfig(model_shift=0)
        with self.assertRaises(ConfigError):
            UlpaqConfig(sse_shift=16)

    def test_invalid_byte_count(self):
        with self.assertRaises(CorruptStreamError):
            ulpaq_decode(b"\x00", -1)
        with self.assertRaises(CorruptStreamError):
            ulpaq_decode(b"", 3)


class TestUlpaqModels(unittest.TestCase):
    def test_plain_shift_update(self):
        model = IntraByteModel(shift=5)
        model.update(1, 1)
        self.assertEqual(model.p1(1), 32768 + (32768 >> 5))
        model.update(1, 0)
        self.assertEqual(model.p1(1), 33792 - (33792 >> 5))
        self.assertEqual(model.p1(2), 32768)

    def test_sse_starts_as_identity(self):
        stage = SseStage()
        self.assertEqual(stage.refine(0, 32768), 32768)
        for p1 in (1000, 20000, 50000):
            self.assertLessEqual(abs(stage.refine(5, p1) - p1), p1 // 25 + 1)

    def test_frozen_sse_never_moves(self):
        stage = SseStage(shift=None)
        before = [list(row) for row in stage.knots]
        for _ in range(100):
            stage.refine(3, 40000)
            stage.update(1)
        self.assertEqual(stage.knots, before)

    def test_sse_learns(self):
        stage = SseStage(shift=7)
        for _ in range(400):
            stage.refine(3, 32768)
            stage.update(1)
        self.assertGreater(stage.refine(3, 32768), 60000)

    def test_sse_update_follows_interpolation_weight(self):
        """A probability sitting exactly on a knot moves only that knot."""
        stage = SseStage(shift=7)
        before = list(stage.knots[3])
        stage.refine(3, 32768)
        stage.update(1)
        self.assertEqual(stage.knots[3][16], before[16] + (32768 >> 7))
        self.assertEqual(stage.knots[3][17], before[17])
        self.assertEqual(stage.knots[4], before)


class TestRunStreams(unittest.TestCase):
    """ULPAQ and its ablations on run streams of sparsification masks."""

    @classmethod
    def setUpClass(cls):
        cls.streams = []
        for _, image in synthetic_corpus(3, 96, seed=0):
            masks = generate_masks(image, "sparsify-homdiff", (0.03, 0.05, 0.1), seed=1)
            cls.streams.extend(runs_to_bytes(rle_encode(mask)) for mask in masks.values())

    def test_sse_pays_for_itself(self):
        with_sse = sum(len(ulpaq_encode(data)) for data in self.streams)
        intra_only = sum(len(ulpaq_encode(data, UlpaqConfig(sse_enabled=False))) for data in self.streams)
        logger.info(f"run streams: {with_sse} bytes with SSE, {intra_only} without")
        self.assertLessEqual(with_sse, intra_only)

    def test_intra_only_is_the_order0_coder(self):
        for data in self.streams:
            self.assertEqual(ulpaq_encode(data, UlpaqConfig(sse_enabled=False)), order0_encode(data))


class TestAgainstHuffman(unittest.TestCase):
    def test_beats_rle_huffman_on_sparsified_masks(self):
        ulpaq_bytes = huffman_bytes = 0
        for _, image in synthetic_corpus(3, 64, seed=0):
            mask = generate_mask(image, "sparsify-homdiff", 0.05, seed=2)
            ulpaq_bytes += len(require_codec("ulpaq").encode(mask))
            huffman_bytes += len(require_codec("rle-huffman").encode(mask))
        self.assertLess(ulpaq_bytes, huffman_bytes)


class TestOrder0(unittest.TestCase):
    """Test cases for the order-0 varint stream coder."""

    def test_round_trip(self):
        values = [0, 5, 1, 2, 1, 300, 127, 128, 70000]
        data = varint_encode(values)
        self.assertEqual(order0_decode_varints(order0_encode(data), len(values)), data)

    def test_no_values(self):
        self.assertEqual(order0_encode(b""), b"")
        self.assertEqual(order0_decode_varints(b"", 0), b"")


if __name__ == "__main__":
    unittest.main()
