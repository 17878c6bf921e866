"""
Tests for the sparsemask command-line interface.
"""

import io
import logging
import os
import shutil
import tempfile
import unittest
from contextlib import redirect_stderr, redirect_stdout

from sparsemask.cli import main
from sparsemask.core.codec_registry import list_codecs
from sparsemask.core.image_io import BinaryMask, read_container, read_pbm, write_pbm

# Set up logging
logging.basicConfig(level=logging.INFO)
logger = logging.getLogger("test_cli")

FIXTURE = BinaryMask.from_rows(["1010", "0001", "0100", "0010"])


class TestCli(unittest.TestCase):
    """Test cases for the CLI commands."""

    def setUp(self):
        self.test_dir = tempfile.mkdtemp()
        self.mask_path = self.path("fixture.pbm")
        with open(self.mask_path, "wb") as f:
            f.write(write_pbm(FIXTURE))

    def tearDown(self):
        shutil.rmtree(self.test_dir)

    def path(self, name):
        return os.path.join(self.test_dir, name)

    def run_cli(self, *args):
        stdout, stderr = io.StringIO(), io.StringIO()
        with redirect_stdout(stdout), redirect_stderr(stderr):
            code = main(list(args))
        return code, stdout.getvalue(), stderr.getvalue()

    def read(self, name):
        with open(self.path(name), "rb") as f:
            return f.read()

    def test_encode_decode_every_codec(self):
        """Decoding an encoded PBM gives back the same bytes."""
        original = self.read("fixture.pbm")
        for codec in list_codecs():
            code, _, stderr = self.run_cli(
                "encode", "--codec", codec, "--in", self.mask_path, "--out", self.path("m.sbm")
            )
            self.assertEqual(code, 0, stderr)
            self.assertEqual(read_container(self.read("m.sbm")).ones_count, 5)
            code, _, stderr = self.run_cli("decode", "--in", self.path("m.sbm"), "--out", self.path("back.pbm"))
            self.assertEqual(code, 0, stderr)
            self.assertEqual(self.read("back.pbm"), original, codec)

    def test_repr(self):
        code, stdout, _ = self.run_cli("repr", "--in", self.mask_path, "--form", "rle")
        self.assertEqual(code, 0)
        self.assertEqual(stdout, "0 5 1 2 1\n")
        _, stdout, _ = self.run_cli("repr", "--in", self.mask_path, "--form", "csr")
        self.assertEqual(stdout.splitlines(), ["1 3 4 2 3", "2 1 1 1"])
        _, stdout, _ = self.run_cli("repr", "--in", self.mask_path, "--form", "coo")
        self.assertEqual(stdout.splitlines()[0], "1 1")

    def test_entropy(self):
        code, stdout, _ = self.run_cli("entropy", "--in", self.mask_path, "--form", "vector")
        self.assertEqual(code, 0)
        self.assertEqual(stdout.strip(), "0.896038")

    def test_unknown_codec_is_a_usage_error(self):
        code, _, stderr = self.run_cli("encode", "--codec", "zip", "--in", self.mask_path, "--out", self.path("m.sbm"))
        self.assertEqual(code, 2)
        self.assertTrue(stderr.startswith("sparsemask: unknown_codec:"))
        self.assertEqual(len(stderr.strip().splitlines()), 1)

    def test_bad_container(self):
        with open(self.path("bad.sbm"), "wb") as f:
            f.write(b"XXXX" + bytes(17))
        code, _, stderr = self.run_cli("decode", "--in", self.path("bad.sbm"), "--out", self.path("out.pbm"))
        self.assertEqual(code, 1)
        self.assertIn("sparsemask: bad_magic: bad magic", stderr)
        self.assertFalse(os.path.exists(self.path("out.pbm")))

    def test_missing_input(self):
        code, _, stderr = self.run_cli("decode", "--in", self.path("missing.sbm"), "--out", self.path("out.pbm"))
        self.assertEqual(code, 1)
        self.assertIn("io_error", stderr)

    def test_no_command(self):
        code, _, stderr = self.run_cli()
        self.assertEqual(code, 2)
        self.assertIn("usage_error", stderr)

    def test_corpus_gen_and_bench(self):
        corpus_dir = self.path("corpus")
        code, _, stderr = self.run_cli("corpus", "--out", corpus_dir, "--count", "2", "--size", "16")
        self.assertEqual(code, 0, stderr)
        self.assertEqual(sorted(os.listdir(corpus_dir)), ["synthetic-00.pgm", "synthetic-01.pgm"])

        image = os.path.join(corpus_dir, "synthetic-00.pgm")
        code, _, stderr = self.run_cli(
            "gen", "--image", image, "--dist", "densify", "--density", "0.1", "--out", self.path("gen.pbm")
        )
        self.assertEqual(code, 0, stderr)
        self.assertEqual(read_pbm(self.read("gen.pbm")).count, 26)

        code, _, stderr = self.run_cli(
            "bench",
            "--corpus",
            corpus_dir,
            "--codecs",
            "marwood,rle-arith",
            "--densities",
            "0.05,0.1",
            "--dists",
            "random",
            "--csv",
            self.path("records.csv"),
            "--summary",
            self.path("summary.csv"),
        )
        self.assertEqual(code, 0, stderr)
        records = self.read("records.csv").decode("utf-8").splitlines()
        self.assertTrue(records[0].startswith("codec,image,distribution,density,mask_pixels"))
        self.assertEqual(len(records), 1 + 2 * 2 * 2)
        summary = self.read("summary.csv").decode("utf-8").splitlines()
        self.assertEqual(summary[0], "codec,distribution,bytes_per_mask_pixel,encode_ms,decode_ms,records")
        self.assertEqual(len(summary), 3)

    def test_bench_rejects_percent_densities(self):
        code, _, stderr = self.run_cli(
            "bench", "--corpus", self.test_dir, "--densities", "5", "--csv", self.path("records.csv")
        )
        self.assertEqual(code, 2)
        self.assertIn("config_error", stderr)

    def test_bench_plan_file(self):
        corpus_dir = self.path("corpus")
        self.run_cli("corpus", "--out", corpus_dir, "--count", "1", "--size", "12")
        with open(self.path("plan.yaml"), "w", encoding="utf-8") as f:
            f.write(f"corpus: {corpus_dir}\ncodecs: [demaret]\ndensities: [0.1]\ndistributions: [random]\n")
        code, _, stderr = self.run_cli("bench", "--plan", self.path("plan.yaml"), "--csv", self.path("records.csv"))
        self.assertEqual(code, 0, stderr)
        self.assertEqual(len(self.read("records.csv").decode("utf-8").splitlines()), 2)


if __name__ == "__main__":
    unittest.main()
