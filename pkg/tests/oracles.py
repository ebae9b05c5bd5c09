"""Independent reference computations used to check the library.

These are written from the definitions in the most direct way possible and
share no code with the package beyond plain data.
"""
from fractions import Fraction
import random


def backward_particle(pi_rows, a, n):
    """Law at level ``n`` of a particle started at ``a`` at level ``max(a, n)``.

    Walking down one level at a time, a particle sitting at ``m + 1`` when
    level ``m`` is reached is redistributed by ``pi_rows[m]``; otherwise it
    stays.
    """
    law = {a: Fraction(1)}
    for m in range(a - 1, n - 1, -1):
        nxt = {}
        for s, p in law.items():
            if s == m + 1:
                for b, w in enumerate(pi_rows[m]):
                    if w:
                        nxt[b] = nxt.get(b, 0) + p * w
            else:
                nxt[s] = nxt.get(s, 0) + p
        law = nxt
    out = [Fraction(0)] * (n + 1)
    for s, p in law.items():
        out[s] += p
    return out


def project_matrix_naive(K):
    """Projection by summing over excursion lengths in closed form."""
    n = len(K) - 1
    p = K[n][n]
    out = [[Fraction(0)] * n for _ in range(n)]
    for a in range(n):
        for b in range(n):
            if p == 1:
                exit_law = Fraction(1) if b == 0 else Fraction(0)
            else:
                exit_law = K[n][b] / (1 - p)
            out[a][b] = K[a][b] + K[a][n] * exit_law
    return out


def project_path_naive(states, level):
    return [s for s in states if s <= level]


def random_rational_dist(rng: random.Random, n, lo=0, max_weight=5):
    w = [0] * (n + 1)
    for i in range(lo, n + 1):
        w[i] = rng.randint(0, max_weight)
    if not any(w):
        w[rng.randint(lo, n)] = 1
    tot = sum(w)
    return [Fraction(x, tot) for x in w]


def hitting_probability_iterative(K, target, start, sweeps=4000):
    """Floating value iteration for P_start(hit target); a loose oracle."""
    n = len(K)
    h = [0.0] * n
    h[target] = 1.0
    for _ in range(sweeps):
        new = [1.0 if x == target else sum(float(K[x][y]) * h[y] for y in range(n)) for x in range(n)]
        h = new
    return h[start]
