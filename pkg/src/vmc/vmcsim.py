"""Simulation of virtual Markov chains, staircase decomposition and visit classification.

Simulation runs only the top-level chain ``X_L`` and derives every lower
level by path projection, so the coupling between levels is exact by
construction.  Classification of states is never inferred from simulation;
it comes from exact hitting-probability solves at level ``a``.
"""
from __future__ import annotations

import enum
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import breadth_first_order, connected_components

from ._exact import QONE, QZERO, to_fraction, to_q
from .kernels import (
    ONE,
    ZERO,
    MarginalSequence,
    ModelError,
    StochasticLevelMatrix,
    VTMPrefix,
    validate_compatibility,
)
from .levels import HitKind, LevelPath, VirtualPathPrefix, hitting_index
from .rng import replicate_stream, uniform_block
from .simplex import row_of_vtm, zero_point
from .kernels import mix_sequences
from .tags import Mixture, Row, Zero

UNDETERMINED = -1
UNDEFINED = -2


class IncompatiblePair(ModelError):
    """The VID is not compatible with the VTM."""


# ---------------------------------------------------------------------------
# Sampling


def _cdf_table(rows) -> np.ndarray:
    """Cumulative rows with every entry from the last positive one set to +inf.

    ``(cdf[s] <= u).sum()`` is then the inverse-CDF draw and can never land on
    a zero-probability state through rounding.
    """
    probs = np.array([[float(x) for x in r] for r in rows])
    cdf = np.cumsum(probs, axis=1)
    for i, r in enumerate(rows):
        last = max(b for b, x in enumerate(r) if x)
        cdf[i, last:] = np.inf
    return cdf


def _check_pair(nu: MarginalSequence, K: VTMPrefix, top: int) -> None:
    if nu.top < top:
        raise ModelError(f"VID only reaches level {nu.top}, need {top}")
    if not K.has_level(top):
        raise ModelError(f"VTM only reaches level {K.top}, need {top}")
    bad = validate_compatibility(nu.truncate(top), K.truncate(top) if K.top is None or K.top > top else K)
    if bad:
        raise IncompatiblePair(f"VID and VTM are incompatible: {bad[0].detail}")


def _simulate(init_cdf: np.ndarray, cdf: np.ndarray, u: np.ndarray) -> np.ndarray:
    R, width = u.shape
    out = np.empty((R, width), dtype=np.int64)
    s = (init_cdf[None, :] <= u[:, :1]).sum(axis=1)
    out[:, 0] = s
    for t in range(1, width):
        s = (cdf[s] <= u[:, t : t + 1]).sum(axis=1)
        out[:, t] = s
    return out


def _chunk_worker(args):
    init_cdf, cdf, seed, lo, hi, width = args
    return _simulate(init_cdf, cdf, uniform_block(seed, range(lo, hi), width))


@dataclass(frozen=True)
class SimulationConfig:
    """Top level, horizon and replication settings for batch simulation."""

    level: int
    steps: int
    replicates: int = 1
    seed: int = 0
    first: int = 0
    chunk: int = 20_000
    workers: int | None = None

    def __post_init__(self):
        if self.steps <= 0:
            raise ValueError("steps must be positive")
        if self.level < 0 or self.replicates < 0 or self.first < 0:
            raise ValueError("level, replicates and first must be nonnegative")


def sample_top_paths(nu: MarginalSequence, K: VTMPrefix, cfg: SimulationConfig) -> np.ndarray:
    """Top-level paths ``X_L(0..T)`` for replicates ``first, ..., first+R-1``.

    Row ``i`` depends only on ``(seed, first + i)``: each replicate consumes
    exactly ``T + 1`` uniforms from its own stream, so results do not depend
    on chunking or on the number of workers.
    """
    L = cfg.level
    _check_pair(nu, K, L)
    init_cdf = _cdf_table([nu[L].weights])[0]
    cdf = _cdf_table(K.level(L).rows)
    width = cfg.steps + 1
    bounds = [
        (lo, min(lo + cfg.chunk, cfg.first + cfg.replicates))
        for lo in range(cfg.first, cfg.first + cfg.replicates, cfg.chunk)
    ]
    jobs = [(init_cdf, cdf, cfg.seed, lo, hi, width) for lo, hi in bounds]
    if cfg.workers and cfg.workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(cfg.workers) as ex:
            parts = list(ex.map(_chunk_worker, jobs))
    else:
        parts = [_chunk_worker(j) for j in jobs]
    if not parts:
        return np.empty((0, width), dtype=np.int64)
    return np.concatenate(parts, axis=0)


def sample_vmc(nu: MarginalSequence, K: VTMPrefix, level: int, steps: int, seed: int, replicate: int = 0) -> VirtualPathPrefix:
    """One coupled realization of levels ``0..level`` over ``steps`` top-level steps."""
    paths = sample_top_paths(nu, K, SimulationConfig(level, steps, 1, seed, replicate))
    return VirtualPathPrefix.from_top(LevelPath(level, tuple(paths[0])))


# ---------------------------------------------------------------------------
# Decomposition of a single prefix


@dataclass(frozen=True)
class PartialStaircase:
    """Staircase values at levels ``start, start+1, ...``; None is undetermined."""

    start: int
    entries: tuple[int | None, ...]

    def at(self, level: int) -> int | None:
        return self.entries[level - self.start]

    def determined_prefix(self) -> tuple[int, ...]:
        out = []
        for x in self.entries:
            if x is None:
                break
            out.append(x)
        return tuple(out)

    def satisfies_staircase(self) -> bool:
        """Staircase constraint between consecutive determined entries."""
        for i in range(1, len(self.entries)):
            x, y = self.entries[i - 1], self.entries[i]
            if x is None or y is None:
                continue
            n = self.start + i
            if not 0 <= y <= n or y not in (x, n):
                return False
        return True

    def to_json(self) -> dict:
        return {"start": self.start, "entries": list(self.entries)}


@dataclass(frozen=True)
class VisitCount:
    """Visits to ``a`` within the horizon; ``final`` means the count cannot grow."""

    count: int
    final: bool


@dataclass(frozen=True)
class Decomposition:
    top: int
    s0: PartialStaircase
    sak: dict[tuple[int, int], PartialStaircase]
    visits: dict[int, VisitCount]
    level_visits: dict[int, tuple[VisitCount, ...]] = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "levels": self.top,
            "s0": self.s0.to_json(),
            "sak": {f"{a},{k}": s.to_json() for (a, k), s in sorted(self.sak.items())},
            "visits": {str(a): {"count": v.count, "final": v.final} for a, v in sorted(self.visits.items())},
            "level_visits": {
                str(a): [{"count": v.count, "final": v.final} for v in vs] for a, vs in sorted(self.level_visits.items())
            },
        }


def _count_visits(path: LevelPath, a: int) -> VisitCount:
    return VisitCount(sum(1 for x in path.states if x == a), path.absorbed)


def staircase_decomposition(vp: VirtualPathPrefix, amax: int = 32, kmax: int = 8) -> Decomposition:
    """``S^0`` and ``S^{a,k}`` for ``1 <= a <= amax`` and ``0 <= k <= kmax``.

    ``S^{a,k}_N`` is the state right after the ``(k+1)``-th visit of ``X_N`` to
    ``a`` (``k`` counts from 0), or 0 once that visit provably never happens.
    Undetermined entries are None.  States above the top level are skipped.
    """
    L = vp.top
    s0 = PartialStaircase(0, tuple(vp[n].entry(0) for n in range(L + 1)))
    sak = {}
    visits = {}
    level_visits = {}
    for a in range(1, min(amax, L) + 1):
        visits[a] = _count_visits(vp[L], a)
        level_visits[a] = tuple(_count_visits(vp[n], a) for n in range(a, L + 1))
        for k in range(kmax + 1):
            vals = []
            for n in range(a, L + 1):
                hit = hitting_index(vp[n], {a}, k)
                if hit.kind is HitKind.FOUND:
                    vals.append(vp[n].entry(hit.index + 1))
                elif hit.kind is HitKind.NEVER:
                    vals.append(0)
                else:
                    vals.append(None)
            sak[(a, k)] = PartialStaircase(a, tuple(vals))
    return Decomposition(L, s0, sak, visits, level_visits)


# ---------------------------------------------------------------------------
# Vectorized decomposition of many top-level paths


@dataclass(frozen=True)
class BatchDecomposition:
    """Arrays over replicates; ``UNDETERMINED`` and ``UNDEFINED`` mark missing entries."""

    top: int
    s0: np.ndarray  # (R, L+1)
    sak: dict[tuple[int, int], np.ndarray]  # (R, L+1)
    visit_count: dict[int, np.ndarray]  # (R,)
    absorbed: np.ndarray  # (R,)


def _next_at_most(paths: np.ndarray, n: int) -> np.ndarray:
    """``nxt[r, t]``: first index ``>= t`` with value ``<= n``; ``T`` when none (shape R x (T+1))."""
    R, T = paths.shape
    idx = np.where(paths <= n, np.arange(T)[None, :], T)
    nxt = np.minimum.accumulate(idx[:, ::-1], axis=1)[:, ::-1]
    return np.concatenate([nxt, np.full((R, 1), T)], axis=1)


def batch_decomposition(paths: np.ndarray, top: int, pairs) -> BatchDecomposition:
    """Decompose top-level paths of shape ``(R, T+1)`` for the given ``(a, k)`` pairs."""
    R, T = paths.shape
    rows = np.arange(R)
    absorbed = (paths == 0).any(axis=1)
    pairs = sorted(set(pairs))
    states = sorted({a for a, _ in pairs})
    visit_idx = {}
    visit_count = {}
    for a in states:
        hits = paths == a
        visit_count[a] = hits.sum(axis=1)
        visit_idx[a] = np.cumsum(hits, axis=1)
    s0 = np.empty((R, top + 1), dtype=np.int64)
    sak = {p: np.full((R, top + 1), UNDEFINED, dtype=np.int64) for p in pairs}
    padded = np.concatenate([paths, np.zeros((R, 1), dtype=paths.dtype)], axis=1)
    for n in range(top + 1):
        nxt = _next_at_most(paths, n)
        first = nxt[:, 0]
        if n == 0:
            s0[:, 0] = 0  # level 0 is identically 0
        else:
            s0[:, n] = np.where(first < T, padded[rows, np.minimum(first, T)], UNDETERMINED)
        for a, k in pairs:
            if a > n:
                continue
            has = visit_count[a] > k
            # position of the (k+1)-th visit to a, valid where `has`
            pos = np.argmax(visit_idx[a] >= k + 1, axis=1)
            after = nxt[rows, np.minimum(pos + 1, T)]
            val = np.where(after < T, padded[rows, np.minimum(after, T)], UNDETERMINED)
            val = np.where(has, val, np.where(absorbed, 0, UNDETERMINED))
            sak[(a, k)][:, n] = val
    return BatchDecomposition(top, s0, sak, visit_count, absorbed)


# ---------------------------------------------------------------------------
# Laws of the decomposition


def extend_sak_law(K: VTMPrefix, a: int, top: int) -> MarginalSequence:
    """Law of ``S^{a,k}`` given ``V^a > k``: the row ``K(a, .)`` extended to all levels."""
    if a < 1:
        raise ValueError("a must be at least 1")
    return row_of_vtm(K, a, top)


def sak_law(nu: MarginalSequence, K: VTMPrefix, a: int, k: int, top: int) -> MarginalSequence:
    """Unconditional law ``P(V^a > k) K(a, .) + P(V^a <= k) 0``."""
    cls = classify_state(nu, K, a)
    w = cls.survival(k)
    row = extend_sak_law(K, a, top)
    if w == 1:
        return row
    if w == 0:
        return zero_point(top)
    return mix_sequences([w, 1 - w], [row, zero_point(top)], Mixture(((w, Row(a)), (1 - w, Zero()))))


# ---------------------------------------------------------------------------
# Exact classification


class Verdict(enum.Enum):
    INFINITELY = "InfinitelyVisited"
    ONCE = "OnceVisited"
    NEVER = "NeverVisited"
    RANDOMLY = "RandomlyVisited"


def verdict_for(q: Fraction, p: Fraction) -> Verdict:
    if q == 0:
        return Verdict.NEVER
    if q == 1 and p == 1:
        return Verdict.INFINITELY
    if q == 1 and p == 0:
        return Verdict.ONCE
    return Verdict.RANDOMLY


@dataclass(frozen=True)
class StateClassification:
    a: int
    qa: Fraction
    pa: Fraction
    verdict: Verdict

    def survival(self, k: int) -> Fraction:
        """``P(V^a > k) = q_a p_a^k``."""
        return self.qa * self.pa**k

    def to_row(self) -> dict:
        return {"a": self.a, "q_a": str(self.qa), "p_a": str(self.pa), "verdict": self.verdict.value}


class SingularSystem(ArithmeticError):
    """Defensive: the hitting system had no unique solution."""


def _adjacency(K: StochasticLevelMatrix) -> csr_matrix:
    n = K.level + 1
    r, c = [], []
    for a, row in enumerate(K.rows):
        for b, x in enumerate(row):
            if x:
                r.append(a)
                c.append(b)
    return csr_matrix((np.ones(len(r), dtype=np.int8), (r, c)), shape=(n, n))


def _solve_exact(A: list[dict[int, object]], rhs: list) -> list:
    """Gaussian elimination on sparse rows ``A[i] = {j: coeff}`` over exact rationals."""
    n = len(A)
    A = [dict(r) for r in A]
    rhs = list(rhs)
    for col in range(n):
        piv = next((i for i in range(col, n) if A[i].get(col)), None)
        if piv is None:
            raise SingularSystem(f"no pivot in column {col}")
        A[col], A[piv] = A[piv], A[col]
        rhs[col], rhs[piv] = rhs[piv], rhs[col]
        prow = A[col]
        inv = 1 / prow[col]
        for j in prow:
            prow[j] *= inv
        rhs[col] *= inv
        for i in range(n):
            if i == col:
                continue
            f = A[i].get(col)
            if not f:
                continue
            row = A[i]
            for j, x in prow.items():
                v = row.get(j, QZERO) - f * x
                if v:
                    row[j] = v
                else:
                    row.pop(j, None)
            rhs[i] -= f * rhs[col]
    return rhs


def hitting_probabilities(K: StochasticLevelMatrix, a: int) -> list[Fraction]:
    """``h(x) = P_x(X hits a at some time >= 0)``, the minimal nonnegative solution."""
    adj = _adjacency(K)
    reach = set(breadth_first_order(adj.T.tocsr(), a, directed=True, return_predecessors=False).tolist())
    unknown = sorted(reach - {a})
    pos = {x: i for i, x in enumerate(unknown)}
    A = []
    rhs = []
    for x in unknown:
        row = {pos[x]: QONE}
        for y, w in enumerate(K.rows[x]):
            if w and y in pos:
                row[pos[y]] = row.get(pos[y], QZERO) - to_q(w)
        A.append({j: v for j, v in row.items() if v})
        rhs.append(to_q(K.rows[x][a]))
    sol = _solve_exact(A, rhs) if unknown else []
    h = [ZERO] * (K.level + 1)
    h[a] = ONE
    for x, i in pos.items():
        h[x] = to_fraction(sol[i])
    return h


def classify_state(nu: MarginalSequence, K: VTMPrefix, a: int) -> StateClassification:
    """Exact ``(q_a, p_a)`` and verdict, computed on the level-``a`` chain.

    State 0 is classified as infinitely visited: at level 0 the chain sits at
    0 forever, and its row is the zero point.
    """
    if a < 0:
        raise ValueError("negative state")
    if a == 0:
        return StateClassification(0, ONE, ONE, Verdict.INFINITELY)
    if nu.top < a or not K.has_level(a):
        raise ModelError(f"need level {a} of both the VID and the VTM")
    Ka = K.level(a)
    h = hitting_probabilities(Ka, a)
    q = sum((w * h[x] for x, w in enumerate(nu[a].weights) if w), ZERO)
    p = sum((w * h[b] for b, w in enumerate(Ka.rows[a]) if w), ZERO)
    return StateClassification(a, q, p, verdict_for(q, p))


@dataclass(frozen=True)
class IrreducibilityReport:
    per_level: tuple[bool, ...]

    @property
    def overall(self) -> bool:
        return all(self.per_level)

    def __bool__(self):
        return self.overall


def irreducible_level(K: StochasticLevelMatrix) -> bool:
    """Whether ``[1, N]`` is a single communicating class of ``K_N``."""
    n = K.level
    if n <= 1:
        return True
    sub = _adjacency(K)[1:, 1:]
    ncomp, _ = connected_components(sub, directed=True, connection="strong")
    return ncomp == 1


def closed_level(K: StochasticLevelMatrix) -> bool:
    """Whether ``[1, N]`` sends no mass to 0."""
    return all(K.rows[a][0] == 0 for a in range(1, K.level + 1))


def irreducible(K: VTMPrefix, top: int | None = None) -> IrreducibilityReport:
    """Per-level irreducibility of ``[1, N]`` for ``N <= top``."""
    top = K.top if top is None else top
    if top is None:
        raise ValueError("give a top level for a generator-backed VTM")
    return IrreducibilityReport(tuple(irreducible_level(K.level(n)) for n in range(top + 1)))
