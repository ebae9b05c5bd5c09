"""Extended balayage probabilities, delta points and simplex diagnostics.

For a balayage ``pi`` the extended balayage ``pi_{a,N}`` is the law of the
first state in ``[0, N]`` reached by a particle that starts at ``a`` and moves
backwards with the exit laws ``pi_{a-1}, pi_{a-2}, ...``.  It is ``delta_a`` when
``a <= N`` and otherwise obeys the forward recursion

    pi_{a,N} = sum_b pi_{a-1}(b) * pi_{b,N}.

Column ``N`` of this table, read as a function of ``a``, is also the level-N
marginal of the delta point ``delta_a^pi``.  Internally distributions are
sparse ``{state: rational}`` dicts (gmpy2 ``mpq`` when available); public functions return
:class:`~vmc.kernels.LevelDistribution` values.
"""
from __future__ import annotations

import threading
import weakref
from collections import OrderedDict
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

from .families import balayage_facts
from .kernels import (
    ONE,
    ZERO,
    Balayage,
    LevelDistribution,
    MarginalSequence,
    ModelError,
    VTMPrefix,
    Violation,
    mix_sequences,
    recursion_violation,
)
from .tags import DeltaPoint, LimitPoint, Mixture, Row, Zero

from ._exact import QONE as _QONE
from ._exact import QZERO as _QZERO
from ._exact import to_fraction as _frac
from ._exact import to_q

DEFAULT_AMAX = 256


class ResourceGuardError(ValueError):
    """Requested state index exceeds the configured truncation bound."""


Sparse = dict  # state -> exact rational


def _sparse(d: LevelDistribution) -> Sparse:
    return {b: x for b, x in enumerate(d.weights) if x}


def _dense(level: int, s: Sparse) -> LevelDistribution:
    w = [ZERO] * (level + 1)
    for b, x in s.items():
        w[b] = _frac(x)
    return LevelDistribution.trusted(level, w)


class _Column:
    """``pi_{a,N}`` for fixed ``N`` and ``a = 0, 1, ..., len-1``, grown on demand."""

    __slots__ = ("level", "entries", "lock")

    def __init__(self, level: int):
        self.level = level
        self.entries: list[Sparse] = [{a: _QONE} for a in range(level + 1)]
        self.lock = threading.Lock()

    def extend_to(self, rows, a_hi: int) -> None:
        with self.lock:
            ent = self.entries
            n = self.level
            while len(ent) <= a_hi:
                a = len(ent)
                acc: Sparse = {}
                for b, w in rows(a - 1):
                    if b <= n:
                        acc[b] = acc.get(b, _QZERO) + w
                    else:
                        for c, x in ent[b].items():
                            acc[c] = acc.get(c, _QZERO) + w * x
                ent.append(acc)


class ExtendedBalayageTable:
    """Memoized ``pi_{a,N}`` for ``N <= a <= amax``.

    Columns (fixed N) are computed by the forward recursion in ``a`` and kept
    in a small LRU cache since large-N columns are memory hungry.  Entries are
    deterministic, so enlarging ``amax`` never changes previously computed
    values.
    """

    def __init__(self, pi: Balayage, amax: int = DEFAULT_AMAX, max_columns: int = 64):
        self.pi = pi
        self.amax = amax
        self._cols: OrderedDict[int, _Column] = OrderedDict()
        self._max_columns = max_columns
        self._lock = threading.Lock()
        self._rows: dict[int, list] = {}

    def _row(self, n: int) -> list:
        r = self._rows.get(n)
        if r is None:
            r = self._rows[n] = [(b, to_q(x)) for b, x in enumerate(self.pi.row(n).weights) if x]
        return r

    def _guard(self, a: int) -> None:
        if a > self.amax:
            raise ResourceGuardError(f"state {a} exceeds amax = {self.amax}")

    def _column(self, n: int) -> _Column:
        with self._lock:
            col = self._cols.get(n)
            if col is None:
                col = self._cols[n] = _Column(n)
                while len(self._cols) > self._max_columns:
                    self._cols.popitem(last=False)
            else:
                self._cols.move_to_end(n)
            return col

    def sparse_column(self, n: int, a_hi: int) -> list[Sparse]:
        """``[pi_{a,n} for a in 0..a_hi]`` as sparse dicts (shared, do not mutate)."""
        self._guard(a_hi)
        col = self._column(n)
        col.extend_to(self._row, a_hi)
        return col.entries

    def sparse(self, a: int, n: int) -> Sparse:
        if a <= n:
            return {a: _QONE}
        return self.sparse_column(n, a)[a]

    def get(self, a: int, n: int) -> LevelDistribution:
        if a < 0 or n < 0:
            raise ValueError("negative index")
        return _dense(n, self.sparse(a, n))

    def value(self, a: int, n: int, c: int) -> Fraction:
        return _frac(self.sparse(a, n).get(c, _QZERO))


_TABLES: "weakref.WeakKeyDictionary[Balayage, ExtendedBalayageTable]" = weakref.WeakKeyDictionary()
_TABLES_LOCK = threading.Lock()


def table_for(pi: Balayage, amax: int = DEFAULT_AMAX) -> ExtendedBalayageTable:
    """Shared table for ``pi``; its ``amax`` only ever grows."""
    with _TABLES_LOCK:
        t = _TABLES.get(pi)
        if t is None:
            t = _TABLES[pi] = ExtendedBalayageTable(pi, amax)
        elif amax > t.amax:
            t.amax = amax
        return t


def extended_balayage(pi: Balayage, a: int, n: int, amax: int = DEFAULT_AMAX) -> LevelDistribution:
    """``pi_{a,N}``: where the backward particle from ``a`` first lands in ``[0, N]``."""
    t = table_for(pi, amax)
    t._guard(a)
    return t.get(a, n)


# ---------------------------------------------------------------------------
# Points of the simplex


def backward_extend(top_dist: LevelDistribution, pi: Balayage) -> list[LevelDistribution]:
    """Marginals below ``top_dist`` forced by ``nu_N = nu_{N+1} + nu_{N+1}(N+1) pi_N``."""
    out = [top_dist]
    cur = list(top_dist.weights)
    for n in range(top_dist.level - 1, -1, -1):
        jump = cur[n + 1]
        cur = cur[: n + 1]
        if jump:
            for b, x in enumerate(pi.row(n).weights):
                if x:
                    cur[b] += jump * x
        out.append(LevelDistribution.trusted(n, cur))
    out.reverse()
    return out


def delta_point(pi: Balayage, a: int, top: int) -> MarginalSequence:
    """Prefix through level ``top`` of ``delta_a^pi``.

    Levels ``N >= a`` are ``delta_a``; lower levels follow the balayage
    recursion downward, which makes level N equal to ``pi_{a,N}``.
    """
    if a < 0 or top < 0:
        raise ValueError("negative index")
    below = backward_extend(LevelDistribution.point(a, a), pi)
    levels = below[: top + 1] + [LevelDistribution.point(n, a) for n in range(a + 1, top + 1)]
    return MarginalSequence(tuple(levels), Zero() if a == 0 else DeltaPoint(a))


def zero_point(top: int) -> MarginalSequence:
    return MarginalSequence(tuple(LevelDistribution.point(n, 0) for n in range(top + 1)), Zero())


def row_of_vtm(K: VTMPrefix, a: int, top: int) -> MarginalSequence:
    """Prefix of ``K(a, .)``: ``K_N(a, .)`` for ``N >= a``, the balayage recursion below."""
    if a == 0:
        raise ValueError("row 0 is the zero point; use zero_point")
    if a < 0:
        raise ValueError("negative state")
    pi = Balayage.of_vtm(K)
    below = backward_extend(K.level(a).row(a), pi)
    levels = below[: top + 1] + [K.level(n).row(a) for n in range(a + 1, top + 1)]
    return MarginalSequence(tuple(levels), Row(a))


def limit_point(pi: Balayage, tag: LimitPoint, top: int) -> MarginalSequence:
    """Prefix of a catalog limit of delta points.

    For catalog balayages the truncation of ``delta_a`` to levels ``<= top``
    is constant on each residue class once ``a > top``, so the first such
    ``a`` in the class gives the limit exactly.
    """
    facts = balayage_facts(pi)
    if facts is None or tag not in facts.limits:
        raise ModelError(f"{tag} is not a catalog limit point of {pi!r}")
    a = top + 1
    while a % tag.modulus != tag.residue % tag.modulus:
        a += 1
    seq = delta_point(pi, a, top)
    return seq.with_tag(tag)


def materialize(tag, pi: Balayage, top: int, K: VTMPrefix | None = None) -> MarginalSequence:
    """Prefix through ``top`` of the point named by ``tag``."""
    if isinstance(tag, Zero):
        return zero_point(top)
    if isinstance(tag, DeltaPoint):
        return delta_point(pi, tag.a, top)
    if isinstance(tag, LimitPoint):
        return limit_point(pi, tag, top)
    if isinstance(tag, Row):
        if K is None:
            raise ValueError("a VTM is needed to materialize a row")
        return row_of_vtm(K, tag.a, top)
    if isinstance(tag, Mixture):
        comps = tag.nontrivial()
        seqs = [materialize(t, pi, top, K) for _, t in comps]
        return mix_sequences([w for w, _ in comps], seqs, tag)
    raise TypeError(f"cannot materialize {tag!r}")


# ---------------------------------------------------------------------------
# Membership


@dataclass(frozen=True)
class MembershipResult:
    member: bool
    violation: Violation | None = None

    def __bool__(self):
        return self.member


def membership(nu: MarginalSequence, pi: Balayage) -> MembershipResult:
    """Exact check of ``nu_N = nu_{N+1} + nu_{N+1}(N+1) pi_N`` at every level."""
    top = nu.top if pi.top is None else min(nu.top, pi.top + 1)
    v = recursion_violation(nu, pi, top)
    return MembershipResult(v is None, v)


# ---------------------------------------------------------------------------
# Sternfeld diagnostics


@dataclass(frozen=True)
class SternfeldRow:
    a: int
    total: Fraction
    target: Fraction

    @property
    def deviation(self) -> Fraction:
        return abs(self.total - self.target)


@dataclass(frozen=True)
class SternfeldResult:
    M: int
    c: int
    N: int
    rows: tuple[SternfeldRow, ...]

    @property
    def sup_deviation(self) -> Fraction:
        return max((r.deviation for r in self.rows), default=ZERO)


def sternfeld_statistic(
    pi: Balayage,
    M: int,
    c: int,
    N: int,
    a_range: Iterable[int] | None = None,
    amax: int = DEFAULT_AMAX,
) -> SternfeldResult:
    """``sum_{b<=N} pi_{b,M}(c)^2 pi_{a,N}(b)`` against ``pi_{a,M}(c)^2`` for each ``a``.

    ``a_range`` defaults to ``N..amax``; values below ``N`` are rejected since
    both sides agree there trivially.
    """
    if not 0 <= c <= M <= N:
        raise ValueError("need 0 <= c <= M <= N")
    a_list = list(range(N, amax + 1) if a_range is None else a_range)
    if not a_list:
        return SternfeldResult(M, c, N, ())
    if min(a_list) < N:
        raise ValueError("a_range must lie in [N, amax]")
    a_hi = max(a_list)
    t = table_for(pi, max(amax, a_hi))
    t._guard(a_hi)
    colM = t.sparse_column(M, a_hi)
    g2 = [colM[b].get(c, _QZERO) ** 2 for b in range(N + 1)]
    colN = t.sparse_column(N, a_hi)
    rows = []
    for a in a_list:
        total = sum((x * g2[b] for b, x in colN[a].items()), _QZERO)
        rows.append(SternfeldRow(a, _frac(total), _frac(colM[a].get(c, _QZERO) ** 2)))
    return SternfeldResult(M, c, N, tuple(rows))


def k0_sequence(pi: Balayage, N: int, a_range: Iterable[int], amax: int = DEFAULT_AMAX) -> list[tuple[int, Fraction]]:
    """``[(a, pi_{a,N}(N))]``; convergence in ``a`` for every N singles out one point at infinity."""
    a_list = list(a_range)
    if not a_list:
        return []
    a_hi = max(a_list)
    t = table_for(pi, max(amax, a_hi))
    t._guard(a_hi)
    col = t.sparse_column(N, max(a_hi, N))
    return [(a, _frac(col[a].get(N, _QZERO))) for a in a_list]


@dataclass(frozen=True)
class LimitCandidate:
    prefix: tuple[LevelDistribution, ...]
    members: tuple[int, ...]
    period: int | None

    def as_sequence(self, tag=None) -> MarginalSequence:
        return MarginalSequence(self.prefix, tag)


@dataclass(frozen=True)
class LimitScan:
    top: int
    a_values: tuple[int, ...]
    groups: tuple[tuple[tuple[int, ...], tuple[LevelDistribution, ...]], ...]
    candidates: tuple[LimitCandidate, ...]


def limit_scan(pi: Balayage, top: int, a_range: Iterable[int], tail_fraction: float = 0.5) -> LimitScan:
    """Group ``a`` by the truncation of ``delta_a`` to levels ``<= top``.

    Candidate limit prefixes are the groups that recur at least twice among
    the last ``tail_fraction`` of the range.  This is a finite heuristic: a
    candidate is only known to be stable within the scanned range.
    """
    a_values = tuple(sorted(set(a_range)))
    groups: dict[tuple, list[int]] = {}
    order: list[tuple] = []
    for a in a_values:
        key = delta_point(pi, a, top).levels
        if key not in groups:
            groups[key] = []
            order.append(key)
        groups[key].append(a)
    cut = len(a_values) - max(2, int(round(len(a_values) * tail_fraction)))
    tail = set(a_values[max(cut, 0):])
    cands = []
    for key in order:
        members = groups[key]
        in_tail = [a for a in members if a in tail]
        if len(in_tail) >= 2:
            gaps = {y - x for x, y in zip(in_tail, in_tail[1:])}
            cands.append(LimitCandidate(key, tuple(members), gaps.pop() if len(gaps) == 1 else None))
    return LimitScan(
        top,
        a_values,
        tuple((tuple(groups[k]), k) for k in order),
        tuple(cands),
    )


def is_point_mass_balayage(pi: Balayage, top: int) -> bool:
    """True when ``pi_N`` is a point mass for every ``N <= top``."""
    facts = balayage_facts(pi)
    if facts is not None:
        return facts.point_mass
    return all(pi.row(n).is_point_mass() for n in range(top + 1))


# ---------------------------------------------------------------------------
# Second moments


def second_moment_sequence(
    nu: MarginalSequence, pi: Balayage, M: int, c: int, n_values: Iterable[int] | None = None
) -> list[tuple[int, Fraction]]:
    """``[(N, sum_b nu_N(b) pi_{b,M}(c)^2 - nu_M(c)^2)]`` for ``M <= N <= top``.

    For ``nu`` in the simplex this is a conditional variance that can only
    shrink as ``N`` grows.
    """
    n_list = list(range(M, nu.top + 1) if n_values is None else n_values)
    if not n_list:
        return []
    if min(n_list) < M or max(n_list) > nu.top:
        raise ValueError("levels must lie in [M, top]")
    n_hi = max(n_list)
    t = table_for(pi, max(DEFAULT_AMAX, n_hi))
    col = t.sparse_column(M, n_hi)
    g2 = [_frac(col[b].get(c, _QZERO) ** 2) for b in range(n_hi + 1)]
    base = nu[M][c] ** 2
    out = []
    for n in n_list:
        s = sum((x * g2[b] for b, x in enumerate(nu[n].weights) if x), ZERO)
        out.append((n, s - base))
    return out
