"""Command-line entry points: ``theory``, ``simulate``, ``extract``, ``analyze``.

Exit codes: 0 success / all tests pass, 1 statistical failure, 2 usage or data error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from arrivalqrng import __version__, io, stats, theory
from arrivalqrng.config import DataError, DomainError, ExperimentConfig
from arrivalqrng.extractor import extract_symbols, select_single_pulse, symbols_to_bits
from arrivalqrng.simulator import GENERATOR_ID, generate_arrivals, records_from_ticks

log = logging.getLogger("arrivalqrng")

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _kv(key, value):
    if isinstance(value, float):
        value = f"{value:.10g}"
    print(f"{key}={value}")


def cmd_theory(args) -> int:
    cfg = ExperimentConfig.from_lambda_t0(args.lambda_t0, args.n0, args.nd, t0_seconds=args.t0_s)
    dist = theory.normalized_bin_distribution(cfg)
    truncated = theory.truncate_distribution(dist, cfg.nd)
    kept = theory.retained_fraction(dist, cfg.nd)
    rate = theory.predicted_bitrate(cfg)

    io.write_distribution_csv(args.out, cfg.n0, theory=dist.values)
    if args.truncate:
        padded = np.full(cfg.n0, np.nan)
        padded[cfg.nd:cfg.n0 - cfg.nd] = truncated.values
        out = Path(args.out)
        io.write_distribution_csv(out.with_name(f"{out.stem}_truncated{out.suffix}"), cfg.n0, theory=padded)

    for key, value in [("lambda_t0", cfg.lambda_t0), ("n0", cfg.n0), ("nd", cfg.nd), ("t0_s", cfg.t0_seconds),
                       ("mu", cfg.mu), ("dead_time_ratio", cfg.dead_time_ratio),
                       ("p_single_pulse", rate.p_single_pulse),
                       ("p_max", dist.max), ("h_inf", theory.min_entropy_per_bit(dist.max, cfg.n0)),
                       ("symbols_truncated", cfg.symbol_count), ("p_max_truncated", truncated.max),
                       ("h_inf_truncated", theory.min_entropy_per_bit(truncated.max, cfg.symbol_count)),
                       ("retained_fraction", kept.exact), ("retained_fraction_approx", kept.approximate),
                       ("bitrate_bps", rate.exact_bps), ("bitrate_bps_approx", rate.approximate_bps)]:
        _kv(key, value)
    return EXIT_OK


def cmd_simulate(args) -> int:
    if args.periods < 1:
        raise UsageError(f"--periods must be >= 1, got {args.periods}")
    cfg = ExperimentConfig(args.t0_s, args.n0, args.nd, args.lambda_per_s, args.dark_rate_per_s, args.seed)
    stream = generate_arrivals(cfg, args.periods, args.seed, workers=args.workers)
    io.write_timestamp_file(args.out, stream)
    io.write_metadata(args.out, {
        "toolkit_version": __version__, "generator": GENERATOR_ID, "seed": args.seed,
        "t0_femtoseconds": cfg.t0_femtoseconds, "t0_s": cfg.t0_seconds, "n0": cfg.n0, "nd": cfg.nd,
        "lambda_per_s": cfg.lambda_per_second, "dark_rate_per_s": cfg.dark_rate_per_second,
        "periods": args.periods, "mu": cfg.mu, "lambda_t0": cfg.lambda_t0, "records": len(stream)})
    _kv("records", len(stream))
    _kv("periods", args.periods)
    return EXIT_OK


def _load_stream(args):
    path = Path(args.input)
    if not path.exists():
        raise UsageError(f"no such file: {path}")
    meta = io.read_metadata(path) or {}
    if args.in_format == "u64-ticks":
        t0_fs = args.t0_fs or meta.get("t0_femtoseconds")
        if not t0_fs:
            raise UsageError("--t0-fs is required for u64-ticks input without a sidecar")
        stream = io.read_u64_ticks(path, int(t0_fs))
    else:
        stream = io.read_timestamp_file(path)
    return stream, meta


def cmd_extract(args) -> int:
    stream, meta = _load_stream(args)
    n0 = args.n0 if args.n0 is not None else meta.get("n0")
    nd = args.nd if args.nd is not None else meta.get("nd")
    if n0 is None or nd is None:
        raise UsageError("--n0 and --nd are required when the input has no sidecar metadata")
    if n0 <= 2 * nd:
        raise UsageError(f"n0={n0} must exceed 2*nd={2 * nd}")
    periods = args.periods if args.periods is not None else meta.get("periods")
    if periods is None:
        periods = int(stream.ticks[-1]) // n0 + 1 if len(stream) else 0

    records = records_from_ticks(stream.ticks, n0, nd, periods, workers=args.workers)
    selection = select_single_pulse(records)
    symbols = extract_symbols(records, n0, nd)
    bits = symbols_to_bits(symbols)

    if args.format == "raw":
        data = symbols.symbols.tobytes() if symbols.bit_width == 8 else io.bits_to_bytes(bits)
    elif args.format == "ascii-bits":
        data = io.bits_to_ascii(bits)
    else:
        data = io.symbols_to_text(symbols.symbols)
    io.atomic_write(args.out, data)
    if args.emit_sts:
        io.atomic_write(args.emit_sts, io.bits_to_ascii(bits))
    if args.emit_dieharder:
        io.atomic_write(args.emit_dieharder, io.bits_to_bytes(bits))

    bin_counts = np.bincount(selection.bins - 1, minlength=n0) if selection.bins.size else np.zeros(n0, int)
    if args.csv:
        io.write_distribution_csv(args.csv, n0, counts=bin_counts)
    if args.report:
        sym_hist = np.bincount(symbols.symbols, minlength=1 << symbols.bit_width)
        io.atomic_write(args.report, json.dumps({
            "toolkit_version": __version__, "input": str(args.input),
            "parameters": {"n0": n0, "nd": nd, "periods": periods, "t0_femtoseconds": stream.t0_femtoseconds,
                           "seed": meta.get("seed"), "generator": meta.get("generator")},
            "detections": len(stream), "accepted_periods": int(selection.bins.size),
            "acceptance_ratio": selection.acceptance_ratio, "retained_fraction": symbols.retained_fraction,
            "discarded_fraction": symbols.discarded_fraction, "n_symbols": symbols.n_symbols,
            "bit_width": symbols.bit_width, "symbol_histogram": sym_hist.tolist(),
            "single_pulse_bin_histogram": bin_counts.tolist()}, indent=2) + "\n")
    _kv("periods", periods)
    _kv("acceptance_ratio", selection.acceptance_ratio)
    _kv("retained_fraction", symbols.retained_fraction)
    _kv("n_symbols", symbols.n_symbols)
    return EXIT_OK


def cmd_analyze(args) -> int:
    path = Path(args.bits or args.symbols)
    if not path.exists():
        raise UsageError(f"no such file: {path}")
    if args.bits:
        data = path.read_bytes()
        if args.bits_format == "ascii":
            data = io.bits_to_bytes(io.ascii_to_bits(data))
        symbols, width = np.frombuffer(data, dtype=np.uint8), 8
    else:
        symbols, width = io.read_symbols_text(path), args.bit_width
        if symbols.size and (symbols.min() < 0 or symbols.max() >= 1 << width):
            raise DataError(f"symbols outside 0..{(1 << width) - 1} in {path}")
    if symbols.size == 0:
        raise UsageError(f"input {path} is empty")
    report = stats.run_battery(symbols, width, alpha=args.alpha, block_len=args.block_len,
                               chunks=args.chunks, metadata={"input": str(path)})
    io.atomic_write(args.report, report.to_json() + "\n")
    if args.emit_sts or args.emit_dieharder:
        bits = symbols_to_bits(symbols, width)
        if args.emit_sts:
            io.atomic_write(args.emit_sts, io.bits_to_ascii(bits))
        if args.emit_dieharder:
            io.atomic_write(args.emit_dieharder, io.bits_to_bytes(bits))
    for entry in report.entries:
        print(f"{entry.name}: statistic={entry.statistic:.6g} p_value={entry.p_value:.6g} "
              f"{'PASS' if entry.passed else 'FAIL'} (alpha={report.alpha})")
    for skipped in report.skipped:
        print(f"skipped {skipped['name']}: {skipped['reason']}", file=sys.stderr)
    return EXIT_OK if report.all_passed else EXIT_FAIL


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="arrivalqrng", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("theory", help="closed-form bin distribution and figures of merit")
    p.add_argument("--lambda-t0", type=float, required=True)
    p.add_argument("--n0", type=int, required=True)
    p.add_argument("--nd", type=int, required=True)
    p.add_argument("--t0-s", type=float, default=0.162e-9, help="bin width in seconds (for the bitrate)")
    p.add_argument("--truncate", action="store_true", help="also write <out>_truncated.csv")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_theory)

    p = sub.add_parser("simulate", help="Monte Carlo detections to a timestamp file")
    p.add_argument("--lambda-per-s", type=float, required=True)
    p.add_argument("--t0-s", type=float, required=True)
    p.add_argument("--n0", type=int, required=True)
    p.add_argument("--nd", type=int, required=True)
    p.add_argument("--periods", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--dark-rate-per-s", type=float, default=0.0)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("extract", help="timestamps to raw random output")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--in-format", choices=["qrngts", "u64-ticks"], default="qrngts")
    p.add_argument("--t0-fs", type=int, help="tick size for u64-ticks input")
    p.add_argument("--format", choices=["raw", "ascii-bits", "symbols"], default="raw")
    p.add_argument("--n0", type=int)
    p.add_argument("--nd", type=int)
    p.add_argument("--periods", type=int)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", required=True)
    p.add_argument("--report")
    p.add_argument("--csv", help="write the single-pulse bin histogram as a distribution CSV")
    p.add_argument("--emit-sts")
    p.add_argument("--emit-dieharder")
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("analyze", help="run the statistical battery")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--bits", help="raw byte file (or ASCII bits with --bits-format ascii)")
    src.add_argument("--symbols", help="text file, one integer symbol per line")
    p.add_argument("--bits-format", choices=["raw", "ascii"], default="raw")
    p.add_argument("--bit-width", type=int, default=8)
    p.add_argument("--report", required=True)
    p.add_argument("--alpha", type=float, default=stats.DEFAULT_ALPHA)
    p.add_argument("--block-len", type=int, default=128)
    p.add_argument("--chunks", type=int, default=100)
    p.add_argument("--emit-sts")
    p.add_argument("--emit-dieharder")
    p.set_defaults(func=cmd_analyze)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (UsageError, DomainError, DataError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
