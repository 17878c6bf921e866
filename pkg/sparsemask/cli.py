"""
Command-line interface for sparsemask.

This module provides the commands for generating, encoding, decoding,
inspecting and benchmarking inpainting masks.
"""

import argparse
import logging
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional

from dotenv import load_dotenv

from sparsemask.core.bench import (
    DEFAULT_DENSITIES,
    BenchPlan,
    aggregate,
    emit_csv,
    emit_records_csv,
    run_benchmark,
    synthetic_corpus,
)
from sparsemask.core.codec_registry import decode_mask, encode_mask, list_codecs
from sparsemask.core.config import (
    load_plan_file,
    log_level,
    parse_densities,
    parse_distributions,
    parse_name_list,
)
from sparsemask.core.error_handling import ConfigError, ErrorHandler, format_diagnostic
from sparsemask.core.image_io import read_container, read_pbm, read_pgm, write_container, write_pbm, write_pgm
from sparsemask.core.mask_gen import DISTRIBUTIONS, generate_mask
from sparsemask.core.representations import REPRESENTATIONS, representation_tokens, shannon_entropy, symbol_histogram

logger = logging.getLogger("sparsemask.cli")

USAGE_ERROR_CODES = ("config_error", "unknown_codec")


def parse_args(args: Optional[List[str]] = None) -> argparse.Namespace:
    """Parse command line arguments."""
    parser = argparse.ArgumentParser(
        prog="sparsemask", description="sparsemask - compression of sparse inpainting masks"
    )
    parser.add_argument("--verbose", "-v", action="store_true", help="Log progress at INFO level")
    parser.add_argument("--debug", action="store_true", help="Log at DEBUG level")

    subparsers = parser.add_subparsers(dest="command", help="Command to run")

    gen_parser = subparsers.add_parser("gen", help="Generate a mask for an image")
    gen_parser.add_argument("--image", required=True, help="Input PGM image")
    gen_parser.add_argument("--dist", required=True, help="random, sparsify or densify")
    gen_parser.add_argument("--density", required=True, type=float, help="Mask density as a fraction, e.g. 0.05")
    gen_parser.add_argument("--seed", type=int, default=0, help="Generator seed")
    gen_parser.add_argument("--p", type=float, default=0.02, help="Sparsification candidate fraction")
    gen_parser.add_argument("--q", type=float, default=0.5, help="Sparsification removal fraction")
    gen_parser.add_argument("--batch", type=int, default=None, help="Densification batch size")
    gen_parser.add_argument("--plain", action="store_true", help="Write ASCII (P1) instead of binary (P4) PBM")
    gen_parser.add_argument("--out", required=True, help="Output PBM mask")

    encode_parser = subparsers.add_parser("encode", help="Encode a PBM mask into an SBM1 container")
    encode_parser.add_argument("--codec", required=True, help=f"One of: {', '.join(list_codecs())}")
    encode_parser.add_argument("--in", dest="input", required=True, help="Input PBM mask")
    encode_parser.add_argument("--out", required=True, help="Output SBM1 file")

    decode_parser = subparsers.add_parser("decode", help="Decode an SBM1 container into a PBM mask")
    decode_parser.add_argument("--in", dest="input", required=True, help="Input SBM1 file")
    decode_parser.add_argument("--out", required=True, help="Output PBM mask")

    for name, help_text in (("repr", "Print a sparse representation"), ("entropy", "Print the symbol entropy")):
        form_parser = subparsers.add_parser(name, help=help_text)
        form_parser.add_argument("--in", dest="input", required=True, help="Input PBM mask")
        form_parser.add_argument("--form", required=True, choices=REPRESENTATIONS, help="Representation")

    bench_parser = subparsers.add_parser("bench", help="Run a codec benchmark sweep")
    bench_parser.add_argument("--plan", help="YAML bench plan; flags override its fields")
    bench_parser.add_argument("--corpus", help="Directory of PGM images")
    bench_parser.add_argument("--codecs", help="Comma-separated codec names (default: all)")
    bench_parser.add_argument("--densities", help="Fractions: '0.01..0.10' or '0.01,0.05'")
    bench_parser.add_argument("--dists", help="Comma-separated distributions (default: all)")
    bench_parser.add_argument("--seed", type=int, help="Master seed")
    bench_parser.add_argument("--repetitions", type=int, help="Timing repetitions (at least 3)")
    bench_parser.add_argument("--p", type=float, help="Sparsification candidate fraction")
    bench_parser.add_argument("--q", type=float, help="Sparsification removal fraction")
    bench_parser.add_argument("--batch", type=int, help="Densification batch size")
    bench_parser.add_argument("--include-header", action="store_true", default=None, help="Count the container header")
    bench_parser.add_argument("--csv", required=True, help="Output CSV, one row per record")
    bench_parser.add_argument("--summary", help="Output CSV with aggregated rows")
    bench_parser.add_argument("--group-by", default="codec,distribution", help="Summary group keys")

    corpus_parser = subparsers.add_parser("corpus", help="Write a synthetic PGM test corpus")
    corpus_parser.add_argument("--out", required=True, help="Output directory")
    corpus_parser.add_argument("--count", type=int, default=10, help="Number of images")
    corpus_parser.add_argument("--size", type=int, default=128, help="Image width and height")
    corpus_parser.add_argument("--seed", type=int, default=0, help="Generator seed")

    return parser.parse_args(args)


def configure_logging(parsed_args: argparse.Namespace) -> None:
    level = log_level()
    if parsed_args.verbose:
        level = "INFO"
    if parsed_args.debug:
        level = "DEBUG"
    logging.basicConfig(level=getattr(logging, level), format="%(name)s %(levelname)s: %(message)s", stream=sys.stderr)
    logging.getLogger("sparsemask").setLevel(getattr(logging, level))


def _distribution(name: str) -> str:
    (distribution,) = parse_distributions(name)
    return distribution


def cmd_gen(parsed_args: argparse.Namespace) -> int:
    image = read_pgm(Path(parsed_args.image).read_bytes())
    mask = generate_mask(
        image,
        _distribution(parsed_args.dist),
        parsed_args.density,
        parsed_args.seed,
        candidate_fraction=parsed_args.p,
        removal_fraction=parsed_args.q,
        batch_size=parsed_args.batch,
    )
    Path(parsed_args.out).write_bytes(write_pbm(mask, plain=parsed_args.plain))
    logger.info(f"Wrote {mask!r} to {parsed_args.out}")
    return 0


def cmd_encode(parsed_args: argparse.Namespace) -> int:
    mask = read_pbm(Path(parsed_args.input).read_bytes())
    encoded = encode_mask(mask, parsed_args.codec)
    Path(parsed_args.out).write_bytes(write_container(encoded))
    logger.info(f"{parsed_args.codec}: {mask!r} -> {encoded.total_size} bytes")
    return 0


def cmd_decode(parsed_args: argparse.Namespace) -> int:
    encoded = read_container(Path(parsed_args.input).read_bytes())
    mask = decode_mask(encoded)
    Path(parsed_args.out).write_bytes(write_pbm(mask))
    return 0


def cmd_repr(parsed_args: argparse.Namespace) -> int:
    mask = read_pbm(Path(parsed_args.input).read_bytes())
    for line in representation_tokens(mask, parsed_args.form):
        print(" ".join(str(value) for value in line))
    return 0


def cmd_entropy(parsed_args: argparse.Namespace) -> int:
    mask = read_pbm(Path(parsed_args.input).read_bytes())
    tokens = [value for line in representation_tokens(mask, parsed_args.form) for value in line]
    print(f"{shannon_entropy(symbol_histogram(tokens)):.6f}")
    return 0


def build_plan(parsed_args: argparse.Namespace) -> BenchPlan:
    """Merge the optional YAML plan with command-line overrides."""
    fields: Dict[str, Any] = load_plan_file(parsed_args.plan) if parsed_args.plan else {}
    overrides = {
        "corpus": parsed_args.corpus,
        "codecs": parse_name_list(parsed_args.codecs) if parsed_args.codecs else None,
        "densities": parse_densities(parsed_args.densities) if parsed_args.densities else None,
        "distributions": parse_distributions(parsed_args.dists) if parsed_args.dists else None,
        "seed": parsed_args.seed,
        "repetitions": parsed_args.repetitions,
        "candidate_fraction": parsed_args.p,
        "removal_fraction": parsed_args.q,
        "batch_size": parsed_args.batch,
        "include_header": parsed_args.include_header,
    }
    fields.update({key: value for key, value in overrides.items() if value is not None})
    if "corpus" not in fields:
        raise ConfigError("bench needs --corpus or a plan with a corpus field")
    fields.setdefault("codecs", list_codecs())
    fields.setdefault("densities", list(DEFAULT_DENSITIES))
    fields.setdefault("distributions", list(DISTRIBUTIONS))
    return BenchPlan(**fields)


def cmd_bench(parsed_args: argparse.Namespace) -> int:
    plan = build_plan(parsed_args)
    records = run_benchmark(plan)
    Path(parsed_args.csv).write_bytes(emit_records_csv(records))
    logger.info(f"Wrote {len(records)} records to {parsed_args.csv}")
    if parsed_args.summary:
        rows = aggregate(records, parse_name_list(parsed_args.group_by))
        Path(parsed_args.summary).write_bytes(emit_csv(rows))
        logger.info(f"Wrote {len(rows)} summary rows to {parsed_args.summary}")
    return 0


def cmd_corpus(parsed_args: argparse.Namespace) -> int:
    out = Path(parsed_args.out)
    out.mkdir(parents=True, exist_ok=True)
    for image_id, image in synthetic_corpus(parsed_args.count, parsed_args.size, parsed_args.seed):
        (out / f"{image_id}.pgm").write_bytes(write_pgm(image))
    logger.info(f"Wrote {parsed_args.count} images to {out}")
    return 0


COMMANDS = {
    "gen": cmd_gen,
    "encode": cmd_encode,
    "decode": cmd_decode,
    "repr": cmd_repr,
    "entropy": cmd_entropy,
    "bench": cmd_bench,
    "corpus": cmd_corpus,
}


def main(args: Optional[List[str]] = None) -> int:
    """Main entry point for the CLI."""
    load_dotenv()
    parsed_args = parse_args(args)
    configure_logging(parsed_args)

    if not parsed_args.command:
        print("sparsemask: usage_error: please specify a command; use --help for more information", file=sys.stderr)
        return 2

    try:
        return COMMANDS[parsed_args.command](parsed_args)
    except Exception as error:
        error_dict = ErrorHandler(log_level="DEBUG" if parsed_args.debug else "WARNING").handle(error)
        print(format_diagnostic(error_dict), file=sys.stderr)
        return 2 if error_dict["error"]["code"] in USAGE_ERROR_CODES else 1


if __name__ == "__main__":
    sys.exit(main())
