"""Zero-one law verdicts for the catalog models under a few initial distributions.

    python3 scripts/catalog_verdicts.py --amax 32
"""
import argparse
from fractions import Fraction

from vmc.families import down_from_infinity, infinite_clique, two_ladders
from vmc.kernels import Balayage
from vmc.simplex import materialize
from vmc.tags import DeltaPoint, LimitPoint, Mixture, Zero
from vmc.zolaw import ZeroOneOptions, evaluate

HALF = Fraction(1, 2)


def cases():
    yield "infinite_clique", infinite_clique(), [
        Zero(),
        DeltaPoint(1),
        DeltaPoint(3),
        LimitPoint("U"),
        Mixture(((HALF, DeltaPoint(1)), (HALF, DeltaPoint(2)))),
    ]
    yield "two_ladders", two_ladders(), [
        DeltaPoint(1),
        DeltaPoint(2),
        LimitPoint("even", 2, 0),
        LimitPoint("odd", 2, 1),
    ]
    yield "down_from_infinity(q=1/2)", down_from_infinity(["1/2"]), [
        DeltaPoint(1),
        DeltaPoint(4),
        LimitPoint("lim"),
    ]


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--amax", type=int, default=32)
    args = ap.parse_args(argv)
    opts = ZeroOneOptions(amax=args.amax)
    print(f"{'model':28s} {'vid':32s} {'outcome':12s} structural")
    for name, K, tags in cases():
        pi = Balayage.of_vtm(K)
        for tag in tags:
            nu = materialize(tag, pi, args.amax + 8)
            v = evaluate(nu, K, opts)
            print(f"{name:28s} {str(tag):32s} {v.outcome.name:12s} {v.condition_i.structural}")


if __name__ == "__main__":
    main()
