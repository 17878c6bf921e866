"""
Benchmark harness.

Sweeps codec x distribution x density over a corpus of grayscale images,
verifies every round trip, and records payload sizes and best-of-N wall
times. Records and their aggregates are written as CSV.
"""

import csv
import io
import logging
import math
import zlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from time import perf_counter
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from sparsemask.core.codec_registry import decode_mask, encode_mask, require_codec
from sparsemask.core.config import worker_count
from sparsemask.core.context_codecs import bpaq_encode
from sparsemask.core.error_handling import ConfigError, EmptyMaskError, RoundTripError, SparseMaskError
from sparsemask.core.image_io import BinaryMask, GrayImage, read_pgm
from sparsemask.core.mask_gen import DISTRIBUTIONS, generate_masks
from sparsemask.core.representations import (
    coo_encode,
    coo_to_bytes,
    csr_encode,
    csr_to_bytes,
    rle_encode,
    runs_to_bytes,
)
from sparsemask.core.ulpaq import ulpaq_encode

logger = logging.getLogger("sparsemask.bench")

DEFAULT_DENSITIES: Tuple[float, ...] = tuple(round(0.01 * k, 2) for k in range(1, 11))

CSV_COLUMNS = (
    "codec",
    "image",
    "distribution",
    "density",
    "mask_pixels",
    "payload_bytes",
    "total_bytes",
    "encode_ms",
    "decode_ms",
    "bytes_per_mask_pixel",
)
GROUP_KEYS = ("codec", "image", "distribution", "density")

Corpus = List[Tuple[str, GrayImage]]


@dataclass(frozen=True)
class BenchPlan:
    """
    What to measure.

    Attributes:
        corpus: Directory of *.pgm images
        codecs: Registered codec names
        densities: Mask densities, each in (0, 1)
        distributions: Mask families
        seed: Master seed; every (image, distribution) pair derives its own from it
        repetitions: Timing repetitions; the best one is reported
        include_header: Divide total_bytes instead of payload_bytes by the mask pixels
        workers: Worker processes; None reads SPARSEMASK_THREADS
    """

    corpus: str
    codecs: Tuple[str, ...]
    densities: Tuple[float, ...] = DEFAULT_DENSITIES
    distributions: Tuple[str, ...] = DISTRIBUTIONS
    seed: int = 0
    repetitions: int = 3
    include_header: bool = False
    workers: Optional[int] = None
    candidate_fraction: float = 0.02
    removal_fraction: float = 0.5
    batch_size: Optional[int] = None

    def __post_init__(self):
        for name in ("codecs", "densities", "distributions"):
            values = tuple(getattr(self, name))
            if not values:
                raise ConfigError(f"bench plan needs at least one entry in '{name}'")
            object.__setattr__(self, name, values)
        for codec in self.codecs:
            require_codec(codec)
        for density in self.densities:
            if not 0 < density < 1:
                raise ConfigError(f"bench densities must be in (0, 1), got {density}")
        for distribution in self.distributions:
            if distribution not in DISTRIBUTIONS:
                raise ConfigError(
                    f"unknown distribution '{distribution}'; expected one of {', '.join(DISTRIBUTIONS)}"
                )
        if self.repetitions < 3:
            raise ConfigError(f"timing needs at least 3 repetitions, got {self.repetitions}")
        if self.workers is not None and self.workers < 1:
            raise ConfigError(f"workers must be positive, got {self.workers}")
        if not 0 <= self.seed < 2**64:
            raise ConfigError(f"seed must be a 64-bit unsigned integer, got {self.seed}")


@dataclass(frozen=True)
class BenchRecord:
    codec: str
    image: str
    distribution: str
    density: float
    mask_pixels: int
    payload_bytes: int
    total_bytes: int
    encode_ms: float = field(compare=False)
    decode_ms: float = field(compare=False)
    bytes_per_mask_pixel: float

    def as_row(self) -> Dict[str, object]:
        return asdict(self)


def bytes_per_mask_pixel(payload_bytes: int, mask: BinaryMask) -> float:
    """
    Compressed size divided by the number of mask points.

    Raises:
        EmptyMaskError: If the mask has no points
    """
    if mask.count == 0:
        raise EmptyMaskError("bytes per mask pixel is undefined for an empty mask")
    return payload_bytes / mask.count


def load_corpus(directory: str) -> Corpus:
    """
    Read every *.pgm file in a directory, sorted by name.

    Returns:
        (image id, image) pairs; the id is the file stem

    Raises:
        ConfigError: If the directory holds no PGM files
    """
    paths = sorted(Path(directory).glob("*.pgm"))
    if not paths:
        raise ConfigError(f"no .pgm images in corpus directory {directory}")
    logger.info(f"Loading {len(paths)} images from {directory}")
    return [(path.stem, read_pgm(path.read_bytes())) for path in paths]


def synthetic_corpus(count: int = 10, size: int = 128, seed: int = 0) -> Corpus:
    """
    Deterministic piecewise-smooth test images.

    Each image is a smooth gradient with a few flat rectangles and discs
    pasted over it, quantized to integers.
    """
    if count < 1 or size < 4:
        raise ConfigError("synthetic corpus needs count >= 1 and size >= 4")
    rng = np.random.default_rng(seed)
    rows, cols = np.mgrid[0:size, 0:size] / (size - 1)
    corpus = []
    for k in range(count):
        angle = rng.uniform(0, 2 * np.pi)
        values = 128 + 60 * (np.cos(angle) * cols + np.sin(angle) * rows - 0.5)
        values += 15 * np.sin(2 * np.pi * rng.uniform(0.5, 2.0) * (rows + cols))
        for _ in range(rng.integers(2, 5)):
            top, left = rng.uniform(0, 0.8, size=2)
            height, width = rng.uniform(0.1, 0.4, size=2)
            inside = (rows >= top) & (rows < top + height) & (cols >= left) & (cols < left + width)
            values[inside] = rng.uniform(0, 255)
        for _ in range(rng.integers(1, 4)):
            cy, cx = rng.uniform(0.1, 0.9, size=2)
            radius = rng.uniform(0.05, 0.2)
            values[(rows - cy) ** 2 + (cols - cx) ** 2 < radius**2] = rng.uniform(0, 255)
        values = np.clip(np.rint(values), 0, 255)
        corpus.append((f"synthetic-{k:02d}", GrayImage(width=size, height=size, values=values)))
    return corpus


def work_seed(seed: int, image_id: str, distribution: str) -> int:
    """Seed of one (image, distribution) work item, derived from the plan seed."""
    sequence = np.random.SeedSequence([seed, zlib.crc32(image_id.encode("utf-8")), DISTRIBUTIONS.index(distribution)])
    return int(sequence.generate_state(1, dtype=np.uint64)[0])


def _best_of(repetitions: int, action):
    best = math.inf
    result = None
    for _ in range(repetitions):
        start = perf_counter()
        result = action()
        best = min(best, perf_counter() - start)
    return result, best * 1000.0


def measure(
    codec: str, image_id: str, distribution: str, density: float, mask: BinaryMask, plan: BenchPlan
) -> BenchRecord:
    """
    Encode and decode one mask, verifying the round trip.

    Raises:
        RoundTripError: If the decoded mask differs from the source
    """
    encoded, encode_ms = _best_of(plan.repetitions, lambda: encode_mask(mask, codec))
    try:
        decoded, decode_ms = _best_of(plan.repetitions, lambda: decode_mask(encoded))
    except SparseMaskError as error:
        raise RoundTripError(
            f"{codec} failed to decode its own payload for {image_id}/{distribution}/{density}: {error.message}",
            {"codec": codec, "image": image_id, "distribution": distribution, "density": density},
        ) from error
    if decoded != mask:
        raise RoundTripError(
            f"{codec} round trip differs for {image_id}/{distribution}/{density}",
            {"codec": codec, "image": image_id, "distribution": distribution, "density": density},
        )
    payload_bytes = len(encoded.payload)
    measured = encoded.total_size if plan.include_header else payload_bytes
    return BenchRecord(
        codec=codec,
        image=image_id,
        distribution=distribution,
        density=density,
        mask_pixels=mask.count,
        payload_bytes=payload_bytes,
        total_bytes=encoded.total_size,
        encode_ms=encode_ms,
        decode_ms=decode_ms,
        bytes_per_mask_pixel=bytes_per_mask_pixel(measured, mask),
    )


def _bench_work_item(plan: BenchPlan, image_id: str, image: GrayImage, distribution: str) -> List[BenchRecord]:
    masks = generate_masks(
        image,
        distribution,
        plan.densities,
        work_seed(plan.seed, image_id, distribution),
        candidate_fraction=plan.candidate_fraction,
        removal_fraction=plan.removal_fraction,
        batch_size=plan.batch_size,
    )
    records = []
    for density in plan.densities:
        mask = masks[float(density)]
        if mask.count == 0:
            logger.warning(f"Skipping {image_id}/{distribution}/{density}: the mask is empty")
            continue
        for codec in plan.codecs:
            records.append(measure(codec, image_id, distribution, density, mask, plan))
    logger.info(f"Benchmarked {image_id}/{distribution}: {len(records)} records")
    return records


def run_benchmark(plan: BenchPlan, corpus: Optional[Corpus] = None) -> List[BenchRecord]:
    """
    Run a benchmark plan.

    Args:
        plan: The sweep to run
        corpus: Images to use instead of reading plan.corpus

    Returns:
        One record per (image, distribution, density, codec), in that nesting order

    Raises:
        RoundTripError: If any codec fails to reproduce a mask
    """
    images = corpus if corpus is not None else load_corpus(plan.corpus)
    work = [(image_id, image, distribution) for image_id, image in images for distribution in plan.distributions]
    workers = min(plan.workers or worker_count(), len(work))
    logger.info(f"Running {len(work)} work items on {workers} worker(s)")

    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(_bench_work_item, plan, *item) for item in work]
            batches = [future.result() for future in futures]
    else:
        batches = [_bench_work_item(plan, *item) for item in work]
    return [record for batch in batches for record in batch]


def aggregate(records: Sequence[BenchRecord], group_by: Sequence[str]) -> List[Dict[str, object]]:
    """
    Average the metrics of records sharing the same group keys.

    Args:
        records: Bench records
        group_by: Record fields among codec, image, distribution, density

    Returns:
        One row per group, sorted by the group keys: the keys, then
        bytes_per_mask_pixel, encode_ms, decode_ms means and the record count
    """
    if not records:
        raise SparseMaskError("no records to aggregate", "empty_input")
    unknown = [key for key in group_by if key not in GROUP_KEYS]
    if unknown:
        raise ConfigError(f"cannot group by {', '.join(unknown)}; expected a subset of {', '.join(GROUP_KEYS)}")

    groups: Dict[Tuple, List[BenchRecord]] = {}
    for record in records:
        groups.setdefault(tuple(getattr(record, key) for key in group_by), []).append(record)

    rows = []
    for key in sorted(groups):
        members = groups[key]
        row: Dict[str, object] = dict(zip(group_by, key))
        row["bytes_per_mask_pixel"] = float(np.mean([r.bytes_per_mask_pixel for r in members]))
        row["encode_ms"] = float(np.mean([r.encode_ms for r in members]))
        row["decode_ms"] = float(np.mean([r.decode_ms for r in members]))
        row["records"] = len(members)
        rows.append(row)
    return rows


def _format(value: object) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def emit_csv(rows: Iterable[Mapping[str, object]]) -> bytes:
    """
    Write rows as UTF-8 CSV with a header; columns follow the first row's key order.

    Raises:
        SparseMaskError: If there are no rows
    """
    rows = list(rows)
    if not rows:
        raise SparseMaskError("no rows to write", "empty_input")
    buffer = io.StringIO()
    writer = csv.DictWriter(buffer, fieldnames=list(rows[0]), lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({key: _format(value) for key, value in row.items()})
    return buffer.getvalue().encode("utf-8")


def emit_records_csv(records: Sequence[BenchRecord]) -> bytes:
    """Per-record CSV with the fixed bench column order."""
    return emit_csv({column: record.as_row()[column] for column in CSV_COLUMNS} for record in records)


def compare_representations(mask: BinaryMask) -> Dict[str, float]:
    """
    Bytes per mask pixel of each representation pipeline.

    The vectorised form goes through bpaq-l; the run-length, coordinate and
    CSR forms are serialized as varints and coded with ULPAQ.
    """
    if mask.count == 0:
        raise EmptyMaskError("representation comparison needs a nonempty mask")
    sizes = {
        "vector": len(bpaq_encode(mask, "L")),
        "rle": len(ulpaq_encode(runs_to_bytes(rle_encode(mask)))),
        "coo": len(ulpaq_encode(coo_to_bytes(coo_encode(mask)))),
        "csr": len(ulpaq_encode(csr_to_bytes(csr_encode(mask)))),
    }
    return {form: size / mask.count for form, size in sizes.items()}
