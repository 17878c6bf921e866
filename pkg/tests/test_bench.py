"""
Tests for the benchmark harness.
"""

import logging
import os
import shutil
import tempfile
import unittest
from unittest import mock

import numpy as np
from scipy.stats import spearmanr

from sparsemask.core.bench import (
    CSV_COLUMNS,
    BenchPlan,
    BenchRecord,
    aggregate,
    bytes_per_mask_pixel,
    compare_representations,
    emit_csv,
    emit_records_csv,
    load_corpus,
    run_benchmark,
    synthetic_corpus,
    work_seed,
)
from sparsemask.core.codec_registry import list_codecs, require_codec
from sparsemask.core.error_handling import (
    ConfigError,
    EmptyMaskError,
    RoundTripError,
    SparseMaskError,
    UnknownCodecError,
)
from sparsemask.core.image_io import BinaryMask, write_pgm
from sparsemask.core.mask_gen import generate_mask, random_mask

# Set up logging
logging.basicConfig(level=logging.INFO)
logger = logging.getLogger("test_bench")

FIXTURE = BinaryMask.from_rows(["1010", "0001", "0100", "0010"])


def make_record(codec="marwood", image="img", distribution="random", density=0.05, bpmp=0.5, encode_ms=1.0):
    return BenchRecord(
        codec=codec,
        image=image,
        distribution=distribution,
        density=density,
        mask_pixels=10,
        payload_bytes=int(bpmp * 10),
        total_bytes=int(bpmp * 10) + 21,
        encode_ms=encode_ms,
        decode_ms=2.0,
        bytes_per_mask_pixel=bpmp,
    )


def small_plan(**overrides):
    fields = dict(
        corpus="unused",
        codecs=("marwood", "rle-huffman"),
        densities=(0.05, 0.1),
        distributions=("random",),
        repetitions=3,
        workers=1,
    )
    fields.update(overrides)
    return BenchPlan(**fields)


class TestBytesPerMaskPixel(unittest.TestCase):
    def test_examples(self):
        self.assertEqual(bytes_per_mask_pixel(2, FIXTURE), 0.4)
        self.assertEqual(bytes_per_mask_pixel(0, FIXTURE), 0.0)

    def test_empty_mask(self):
        with self.assertRaises(EmptyMaskError):
            bytes_per_mask_pixel(3, BinaryMask.empty(4, 4))


class TestBenchPlan(unittest.TestCase):
    """Test cases for plan validation."""

    def test_defaults(self):
        plan = BenchPlan(corpus="images", codecs=["marwood"])
        self.assertEqual(plan.codecs, ("marwood",))
        self.assertEqual(len(plan.densities), 10)
        self.assertEqual(plan.densities[0], 0.01)
        self.assertEqual(plan.densities[-1], 0.1)
        self.assertEqual(len(plan.distributions), 3)

    def test_invalid_plans(self):
        with self.assertRaises(ConfigError):
            small_plan(repetitions=2)
        with self.assertRaises(ConfigError):
            small_plan(densities=(0.05, 1.0))
        with self.assertRaises(ConfigError):
            small_plan(codecs=())
        with self.assertRaises(ConfigError):
            small_plan(distributions=("blue-noise",))
        with self.assertRaises(ConfigError):
            small_plan(workers=0)
        with self.assertRaises(UnknownCodecError):
            small_plan(codecs=("zip",))


class TestRunBenchmark(unittest.TestCase):
    """Test cases for running a sweep."""

    def setUp(self):
        self.corpus = synthetic_corpus(count=1, size=16, seed=0)

    def test_record_cardinality(self):
        records = run_benchmark(small_plan(), self.corpus)
        self.assertEqual(len(records), 1 * 1 * 2 * 2)
        self.assertEqual([(r.density, r.codec) for r in records[:2]], [(0.05, "marwood"), (0.05, "rle-huffman")])
        for record in records:
            self.assertGreater(record.mask_pixels, 0)
            self.assertEqual(record.total_bytes, record.payload_bytes + 21)
            self.assertAlmostEqual(record.bytes_per_mask_pixel, record.payload_bytes / record.mask_pixels)
            self.assertGreaterEqual(record.encode_ms, 0.0)

    def test_deterministic(self):
        """Sizes and masks depend only on the plan; timings are not compared."""
        self.assertEqual(run_benchmark(small_plan(), self.corpus), run_benchmark(small_plan(), self.corpus))

    def test_include_header(self):
        records = run_benchmark(small_plan(include_header=True, codecs=("marwood",)), self.corpus)
        for record in records:
            self.assertAlmostEqual(record.bytes_per_mask_pixel, record.total_bytes / record.mask_pixels)

    def test_all_distributions(self):
        plan = small_plan(
            codecs=("bpaq-s",),
            densities=(0.1,),
            distributions=("random", "sparsify-homdiff", "densify-shepard"),
            candidate_fraction=0.1,
        )
        records = run_benchmark(plan, self.corpus)
        self.assertEqual([r.distribution for r in records], ["random", "sparsify-homdiff", "densify-shepard"])
        self.assertTrue(all(r.mask_pixels == 26 for r in records))

    def test_worker_processes_match_serial_run(self):
        corpus = synthetic_corpus(count=2, size=16, seed=1)
        serial = run_benchmark(small_plan(), corpus)
        parallel = run_benchmark(small_plan(workers=2), corpus)
        self.assertEqual(parallel, serial)

    def test_round_trip_failure(self):
        with mock.patch("sparsemask.core.bench.decode_mask", return_value=BinaryMask.empty(16, 16)):
            with self.assertRaises(RoundTripError) as context:
                run_benchmark(small_plan(codecs=("marwood",)), self.corpus)
        self.assertEqual(context.exception.code, "round_trip_failure")

    def test_work_seed(self):
        self.assertEqual(work_seed(0, "a", "random"), work_seed(0, "a", "random"))
        self.assertNotEqual(work_seed(0, "a", "random"), work_seed(0, "a", "densify-shepard"))
        self.assertNotEqual(work_seed(0, "a", "random"), work_seed(1, "a", "random"))


class TestCorpus(unittest.TestCase):
    """Test cases for corpus loading."""

    def setUp(self):
        self.test_dir = tempfile.mkdtemp()

    def tearDown(self):
        shutil.rmtree(self.test_dir)

    def test_load_sorted(self):
        for image_id, image in synthetic_corpus(count=3, size=8, seed=2):
            with open(os.path.join(self.test_dir, f"{image_id}.pgm"), "wb") as f:
                f.write(write_pgm(image))
        with open(os.path.join(self.test_dir, "notes.txt"), "w", encoding="utf-8") as f:
            f.write("not an image")
        corpus = load_corpus(self.test_dir)
        self.assertEqual([image_id for image_id, _ in corpus], ["synthetic-00", "synthetic-01", "synthetic-02"])
        self.assertEqual(corpus[0][1], synthetic_corpus(count=1, size=8, seed=2)[0][1])

    def test_empty_directory(self):
        with self.assertRaises(ConfigError):
            load_corpus(self.test_dir)

    def test_synthetic_corpus_is_deterministic(self):
        first = synthetic_corpus(count=2, size=12, seed=5)
        second = synthetic_corpus(count=2, size=12, seed=5)
        self.assertEqual(first, second)
        self.assertTrue(all(0 <= image.values.min() and image.values.max() <= 255 for _, image in first))


class TestAggregate(unittest.TestCase):
    """Test cases for aggregation and CSV output."""

    def test_mean_per_group(self):
        records = [
            make_record(bpmp=0.4, encode_ms=1.0),
            make_record(bpmp=0.6, encode_ms=3.0, image="other"),
            make_record(codec="demaret", bpmp=1.0),
        ]
        rows = aggregate(records, ["codec"])
        self.assertEqual([row["codec"] for row in rows], ["demaret", "marwood"])
        self.assertAlmostEqual(rows[1]["bytes_per_mask_pixel"], 0.5)
        self.assertAlmostEqual(rows[1]["encode_ms"], 2.0)
        self.assertEqual(rows[1]["records"], 2)

    def test_several_keys(self):
        records = [make_record(density=0.1), make_record(density=0.05), make_record(distribution="densify-shepard")]
        rows = aggregate(records, ["distribution", "density"])
        self.assertEqual(
            [(row["distribution"], row["density"]) for row in rows],
            [("densify-shepard", 0.05), ("random", 0.05), ("random", 0.1)],
        )

    def test_invalid_input(self):
        with self.assertRaises(SparseMaskError):
            aggregate([], ["codec"])
        with self.assertRaises(ConfigError):
            aggregate([make_record()], ["payload_bytes"])

    def test_records_csv(self):
        data = emit_records_csv([make_record(bpmp=0.4), make_record(bpmp=0.6)]).decode("utf-8")
        lines = data.splitlines()
        self.assertEqual(lines[0], ",".join(CSV_COLUMNS))
        self.assertEqual(len(lines), 3)
        self.assertTrue(lines[1].startswith("marwood,img,random,0.05,10,4,25,"))
        self.assertTrue(lines[1].endswith(",0.4"))

    def test_summary_csv(self):
        rows = aggregate([make_record(bpmp=0.4), make_record(bpmp=0.6)], ["codec", "distribution"])
        data = emit_csv(rows).decode("utf-8")
        self.assertEqual(
            data.splitlines()[0], "codec,distribution,bytes_per_mask_pixel,encode_ms,decode_ms,records"
        )
        self.assertEqual(data.splitlines()[1], "marwood,random,0.5,1.0,2.0,2")

    def test_empty_csv(self):
        with self.assertRaises(SparseMaskError):
            emit_csv([])


class TestCompareRepresentations(unittest.TestCase):
    def test_all_forms(self):
        mask = random_mask(32, 32, 0.05, seed=1)
        result = compare_representations(mask)
        self.assertEqual(sorted(result), ["coo", "csr", "rle", "vector"])
        self.assertTrue(all(value > 0 for value in result.values()))

    def test_empty_mask(self):
        with self.assertRaises(EmptyMaskError):
            compare_representations(BinaryMask.empty(4, 4))


class TestDeskCorpusRankings(unittest.TestCase):
    """Qualitative orderings on 128x128 synthetic images."""

    @classmethod
    def setUpClass(cls):
        cls.sparsified, cls.uniform = [], []
        for image_id, image in synthetic_corpus(count=3, size=128, seed=0):
            for distribution, masks in (("sparsify-homdiff", cls.sparsified), ("random", cls.uniform)):
                masks.append(generate_mask(image, distribution, 0.05, work_seed(0, image_id, distribution)))

    def test_vector_and_rle_beat_coordinate_forms(self):
        masks = self.sparsified + self.uniform + [random_mask(128, 128, 0.1, seed=seed) for seed in range(3)]
        for mask in masks:
            result = compare_representations(mask)
            for good in ("vector", "rle"):
                for poor in ("coo", "csr"):
                    self.assertLess(result[good], result[poor], f"{good} vs {poor} on {mask!r}: {result}")

    def test_sparsified_masks_are_cheaper_than_random(self):
        for codec_name in ("demaret", "bpaq-s", "bpaq-m", "bpaq-l", "bpaq-xl", "ulpaq", "rle-arith"):
            codec = require_codec(codec_name)
            sparsified = np.mean([len(codec.encode(mask)) / mask.count for mask in self.sparsified])
            uniform = np.mean([len(codec.encode(mask)) / mask.count for mask in self.uniform])
            logger.info(f"{codec_name}: {sparsified:.3f} sparsified vs {uniform:.3f} random")
            self.assertLess(sparsified, uniform, codec_name)

    def test_global_ratio_ignores_the_distribution(self):
        codec = require_codec("marwood")
        for sparsified, uniform in zip(self.sparsified, self.uniform):
            self.assertEqual(sparsified.count, uniform.count)
            self.assertLessEqual(abs(len(codec.encode(sparsified)) - len(codec.encode(uniform))), 1)


class TestDensityTrend(unittest.TestCase):
    """Denser masks cost fewer bytes per mask pixel."""

    @classmethod
    def setUpClass(cls):
        plan = BenchPlan(
            corpus="unused",
            codecs=tuple(list_codecs()),
            densities=(0.01, 0.05, 0.1),
            distributions=("random",),
            workers=1,
        )
        cls.records = run_benchmark(plan, synthetic_corpus(count=2, size=64, seed=2))

    def test_ten_percent_beats_one_percent_on_every_image(self):
        cost = {(r.codec, r.image, r.density): r.bytes_per_mask_pixel for r in self.records}
        for codec, image, density in cost:
            if density == 0.1:
                self.assertLess(cost[codec, image, 0.1], cost[codec, image, 0.01], f"{codec} on {image}")

    def test_rank_correlation_with_density_is_negative(self):
        for codec in list_codecs():
            rows = [(r.density, r.bytes_per_mask_pixel) for r in self.records if r.codec == codec]
            rho, _ = spearmanr([d for d, _ in rows], [b for _, b in rows])
            self.assertLess(rho, 0.0, codec)


if __name__ == "__main__":
    unittest.main()
