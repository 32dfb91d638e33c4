"""Predicted bitrate versus mean occupancy, plus a faster-hardware projection.

Usage: python scripts/bitrate_sweep.py [--out sweep.csv]
"""

import argparse
import csv
import sys

import numpy as np

from arrivalqrng import theory
from arrivalqrng.config import ExperimentConfig


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--n0", type=int, default=320)
    parser.add_argument("--nd", type=int, default=32)
    parser.add_argument("--t0-s", type=float, default=0.162e-9)
    parser.add_argument("--mu-max", type=float, default=3.0)
    parser.add_argument("--stop-at-p1", type=float, default=0.4, help="stop once P(one pulse) exceeds this")
    parser.add_argument("--out", help="CSV destination (stdout if omitted)")
    args = parser.parse_args(argv)

    base = ExperimentConfig(args.t0_s, args.n0, args.nd, 0.2176 / (args.n0 * args.t0_s))
    rows = []
    for mu in np.arange(0.05, args.mu_max + 1e-9, 0.05):
        est = theory.bitrate_sweep(base, [mu])[0]
        rows.append([f"{mu:.2f}", f"{est.p_single_pulse:.6f}", f"{est.retained_fraction:.6f}",
                     f"{est.exact_bps / 1e6:.4f}", f"{est.approximate_bps / 1e6:.4f}"])
        if est.p_single_pulse > args.stop_at_p1:
            break

    fh = open(args.out, "w", newline="") if args.out else sys.stdout
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(["mu", "p_single_pulse", "retained_fraction", "bitrate_mbps", "bitrate_mbps_approx"])
    writer.writerows(rows)
    if args.out:
        fh.close()

    # 10 ps bins, 1 ns dead time, 10 ns period, one photon per period on average
    fast = ExperimentConfig(t0_seconds=10e-12, n0=1000, nd=100, lambda_per_second=1.0 / 10e-9)
    est = theory.predicted_bitrate(fast)
    print(f"projection t0=10ps nd=100 n0=1000 mu=1: {est.exact_bps / 1e6:.1f} Mbps "
          f"(P1={est.p_single_pulse:.4f}, retained={est.retained_fraction:.4f})", file=sys.stderr)


if __name__ == "__main__":
    main()
