"""Sweep the Sternfeld statistic of the uniform balayage over a grid of N.

Prints one CSV row per (N, M, c) with the largest deviation from 1/M^2 over
a in [N+1, N+span], next to the 2/N bound.

    python3 scripts/sternfeld_sweep.py --nmax 128 --mmax 6
"""
import argparse
import csv
import sys
from fractions import Fraction

from vmc.families import catalog_balayage
from vmc.simplex import sternfeld_statistic


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--nmax", type=int, default=64)
    ap.add_argument("--mmax", type=int, default=8)
    ap.add_argument("--span", type=int, default=16, help="number of a values above N")
    args = ap.parse_args(argv)

    pi = catalog_balayage("uniform")
    ns = sorted({n for n in range(1, 25)} | {n for n in (32, 48, 64, 96, 128, 192, 256, 384, 512)})
    ns = [n for n in ns if n <= args.nmax]
    w = csv.writer(sys.stdout, lineterminator="\n")
    w.writerow(["N", "M", "c", "sup_dev", "bound", "within"])
    bad = 0
    for N in ns:
        for M in range(1, min(args.mmax, N) + 1):
            for c in range(1, M + 1):
                res = sternfeld_statistic(pi, M, c, N, range(N + 1, N + args.span + 1), amax=N + args.span)
                dev = res.sup_deviation
                ok = dev <= Fraction(2, N)
                bad += not ok
                w.writerow([N, M, c, f"{float(dev):.6g}", f"{2 / N:.6g}", int(ok)])
    return 1 if bad else 0


if __name__ == "__main__":
    sys.exit(main())
