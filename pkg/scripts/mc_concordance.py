"""Compare simulated staircase marginals with their exact laws.

Samples paths of the infinite clique started from the uniform limit point,
decomposes them and reports the total variation distance per level between
the empirical law of S^0 (resp. S^{a,k} given more than k visits) and the
exact marginal (resp. the VTM row of a).

    python3 scripts/mc_concordance.py --replicates 100000 --seed 1
"""
import argparse

import numpy as np

from vmc.families import infinite_clique
from vmc.kernels import Balayage
from vmc.simplex import materialize, row_of_vtm
from vmc.tags import LimitPoint
from vmc.vmcsim import SimulationConfig, batch_decomposition, sample_top_paths


def tv(values, weights):
    values = values[values >= 0]
    if len(values) == 0:
        return float("nan")
    freq = np.bincount(values, minlength=len(weights))[: len(weights)] / len(values)
    return 0.5 * float(np.abs(freq - np.array([float(w) for w in weights])).sum())


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--level", type=int, default=8)
    ap.add_argument("--steps", type=int, default=200)
    ap.add_argument("--replicates", type=int, default=20_000)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)

    K = infinite_clique()
    L = args.level
    nu = materialize(LimitPoint("U"), Balayage.of_vtm(K), L)
    paths = sample_top_paths(nu, K, SimulationConfig(L, args.steps, args.replicates, seed=args.seed))
    pairs = [(a, k) for a in (1, 2, 3) for k in (0, 1)]
    dec = batch_decomposition(paths, L, pairs)

    print("level  tv(S^0)")
    for n in range(L + 1):
        print(f"{n:5d}  {tv(dec.s0[:, n], nu[n].weights):.4f}")
    print("\n a  k  max_N tv(S^{a,k})")
    for a, k in pairs:
        row = row_of_vtm(K, a, L)
        keep = dec.visit_count[a] > k
        worst = max(tv(dec.sak[(a, k)][keep, n], row[n].weights) for n in range(a, L + 1))
        print(f"{a:2d} {k:2d}  {worst:.4f}")


if __name__ == "__main__":
    main()
