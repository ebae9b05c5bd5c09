"""Exact-rational level distributions, stochastic matrices, VTMs and balayages.

Everything in this module is computed with :class:`fractions.Fraction`; no
floating point is involved.  Distributions and matrices are immutable and can
be shared freely between threads.
"""
from __future__ import annotations

import threading
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Sequence

ZERO = Fraction(0)
ONE = Fraction(1)


class ModelError(ValueError):
    """Raised for malformed distributions, matrices or model specifications."""


def as_fraction(x) -> Fraction:
    """Parse ``x`` as an exact rational.

    Accepts ints, Fractions and strings such as ``"3/7"`` or ``"0.25"``.
    Floats are rejected because their binary expansion is rarely what the
    caller meant.
    """
    if isinstance(x, bool):
        raise ModelError(f"boolean {x!r} is not a rational")
    if isinstance(x, (int, Fraction)):
        return Fraction(x)
    if isinstance(x, str):
        try:
            return Fraction(x.strip())
        except (ValueError, ZeroDivisionError) as exc:
            raise ModelError(f"cannot parse rational {x!r}") from exc
    raise ModelError(f"expected int, Fraction or 'p/q' string, got {type(x).__name__}")


def fraction_str(x: Fraction) -> str:
    return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"


# ---------------------------------------------------------------------------
# Distributions


@dataclass(frozen=True)
class LevelDistribution:
    """Probability vector on ``[0, level]`` with exact rational weights."""

    level: int
    weights: tuple[Fraction, ...]

    def __post_init__(self):
        w = tuple(as_fraction(x) for x in self.weights)
        object.__setattr__(self, "weights", w)
        if len(w) != self.level + 1:
            raise ModelError(f"level-{self.level} distribution needs {self.level + 1} weights, got {len(w)}")
        for b, x in enumerate(w):
            if x < 0:
                raise ModelError(f"negative weight {x} at state {b}")
        if sum(w) != 1:
            raise ModelError(f"weights sum to {sum(w)}, not 1")

    @classmethod
    def trusted(cls, level: int, weights: Sequence[Fraction]) -> LevelDistribution:
        """Build without validation; for internal use on values known to be valid."""
        obj = object.__new__(cls)
        object.__setattr__(obj, "level", level)
        object.__setattr__(obj, "weights", tuple(weights))
        return obj

    @classmethod
    def point(cls, level: int, a: int) -> LevelDistribution:
        if not 0 <= a <= level:
            raise ModelError(f"point mass at {a} outside [0, {level}]")
        w = [ZERO] * (level + 1)
        w[a] = ONE
        return cls.trusted(level, w)

    @classmethod
    def uniform(cls, level: int, lo: int, hi: int) -> LevelDistribution:
        """Uniform distribution on ``[lo, hi]``."""
        if not 0 <= lo <= hi <= level:
            raise ModelError(f"bad uniform range [{lo}, {hi}] at level {level}")
        p = Fraction(1, hi - lo + 1)
        return cls.trusted(level, [p if lo <= b <= hi else ZERO for b in range(level + 1)])

    def __getitem__(self, b: int) -> Fraction:
        return self.weights[b]

    def __len__(self) -> int:
        return len(self.weights)

    def support(self) -> list[int]:
        return [b for b, x in enumerate(self.weights) if x]

    def is_point_mass(self) -> bool:
        return max(self.weights) == 1

    def argmax(self) -> int:
        return max(range(len(self.weights)), key=self.weights.__getitem__)

    def tv(self, other: LevelDistribution) -> Fraction:
        if self.level != other.level:
            raise ModelError("total variation between different levels")
        return sum((abs(x - y) for x, y in zip(self.weights, other.weights)), ZERO) / 2

    def to_json(self) -> list[str]:
        return [fraction_str(x) for x in self.weights]

    @classmethod
    def from_json(cls, data: Sequence) -> LevelDistribution:
        return cls(len(data) - 1, tuple(as_fraction(x) for x in data))


def mix(weights: Sequence[Fraction], dists: Sequence[LevelDistribution]) -> LevelDistribution:
    """Convex combination of distributions at a common level."""
    level = dists[0].level
    out = [ZERO] * (level + 1)
    for w, d in zip(weights, dists):
        if d.level != level:
            raise ModelError("mixing distributions at different levels")
        if w:
            for b, x in enumerate(d.weights):
                if x:
                    out[b] += w * x
    return LevelDistribution(level, out)


# ---------------------------------------------------------------------------
# Matrices


@dataclass(frozen=True)
class StochasticLevelMatrix:
    """Row-stochastic ``(N+1) x (N+1)`` matrix with 0 absorbing."""

    level: int
    rows: tuple[tuple[Fraction, ...], ...]

    def __post_init__(self):
        rows = tuple(tuple(as_fraction(x) for x in r) for r in self.rows)
        object.__setattr__(self, "rows", rows)
        n = self.level + 1
        if len(rows) != n or any(len(r) != n for r in rows):
            raise ModelError(f"level-{self.level} matrix must be {n}x{n}")
        for a, r in enumerate(rows):
            if any(x < 0 for x in r):
                raise ModelError(f"negative entry in row {a} at level {self.level}")
            if sum(r) != 1:
                raise ModelError(f"row {a} at level {self.level} sums to {sum(r)}")
        if rows[0][0] != 1:
            raise ModelError(f"state 0 is not absorbing at level {self.level}")

    @classmethod
    def trusted(cls, level: int, rows: Sequence[Sequence[Fraction]]) -> StochasticLevelMatrix:
        obj = object.__new__(cls)
        object.__setattr__(obj, "level", level)
        object.__setattr__(obj, "rows", tuple(tuple(r) for r in rows))
        return obj

    def __getitem__(self, ab: tuple[int, int]) -> Fraction:
        a, b = ab
        return self.rows[a][b]

    def row(self, a: int) -> LevelDistribution:
        return LevelDistribution.trusted(self.level, self.rows[a])

    def to_json(self) -> list[list[str]]:
        return [[fraction_str(x) for x in r] for r in self.rows]

    @classmethod
    def from_json(cls, data: Sequence[Sequence]) -> StochasticLevelMatrix:
        return cls(len(data) - 1, tuple(tuple(as_fraction(x) for x in r) for r in data))

    def to_float(self):
        import numpy as np

        return np.array([[float(x) for x in r] for r in self.rows])


def balayage_row(K: StochasticLevelMatrix) -> LevelDistribution:
    """Exit law on ``[0, N]`` of a particle started at ``N+1`` under ``K`` at level N+1.

    A particle that is trapped at ``N+1`` forever is sent to 0.
    """
    top = K.level
    if top == 0:
        raise ModelError("level-0 matrix has no balayage row")
    p = K.rows[top][top]
    if p == 1:
        return LevelDistribution.point(top - 1, 0)
    scale = 1 - p
    return LevelDistribution.trusted(top - 1, [x / scale for x in K.rows[top][:top]])


def project_matrix(K: StochasticLevelMatrix) -> StochasticLevelMatrix:
    """Trace of ``K`` at level N+1 on ``[0, N]``.

    Mass sent to ``N+1`` is redistributed according to the exit law from
    ``N+1``; if ``N+1`` is absorbing that mass goes to 0.
    """
    top = K.level
    pi = balayage_row(K).weights
    rows = []
    for a in range(top):
        r = K.rows[a]
        u = r[top]
        if u:
            rows.append(tuple(r[b] + u * pi[b] for b in range(top)))
        else:
            rows.append(r[:top])
    return StochasticLevelMatrix.trusted(top - 1, rows)


# ---------------------------------------------------------------------------
# Lazily generated level sequences


class _LevelCache:
    """Thread-safe memo of ``level -> value`` filled by a generator function."""

    def __init__(self, make: Callable[[int], object]):
        self._make = make
        self._cache: dict[int, object] = {}
        self._lock = threading.RLock()

    def get(self, n: int):
        try:
            return self._cache[n]
        except KeyError:
            pass
        with self._lock:
            if n not in self._cache:
                self._cache[n] = self._make(n)
            return self._cache[n]


class VTMPrefix:
    """Virtual transition matrix, either a finite list of levels or a generator.

    ``top`` is None for generator-backed (unbounded) VTMs.
    """

    def __init__(
        self,
        levels: Sequence[StochasticLevelMatrix] | None = None,
        *,
        generator: Callable[[int], StochasticLevelMatrix] | None = None,
        family: dict | None = None,
        facts=None,
    ):
        if (levels is None) == (generator is None):
            raise ValueError("give exactly one of levels or generator")
        self.family = family
        self.facts = facts
        if levels is not None:
            levels = tuple(levels)
            if not levels:
                raise ModelError("empty VTM prefix")
            for n, k in enumerate(levels):
                if k.level != n:
                    raise ModelError(f"matrix at position {n} has level {k.level}")
            self._levels = levels
            self.top = len(levels) - 1
            self._cache = None
        else:
            self._levels = None
            self.top = None
            self._cache = _LevelCache(self._checked(generator))

    @staticmethod
    def _checked(gen):
        def make(n):
            k = gen(n)
            if k.level != n:
                raise ModelError(f"generator returned level {k.level} for level {n}")
            return k

        return make

    def level(self, n: int) -> StochasticLevelMatrix:
        if n < 0:
            raise IndexError(n)
        if self._levels is not None:
            if n > self.top:
                raise IndexError(f"VTM prefix stops at level {self.top}")
            return self._levels[n]
        return self._cache.get(n)

    __getitem__ = level

    def has_level(self, n: int) -> bool:
        return self.top is None or n <= self.top

    def truncate(self, top: int) -> VTMPrefix:
        return VTMPrefix([self.level(n) for n in range(top + 1)], family=self.family, facts=self.facts)

    def balayage(self) -> Balayage:
        return Balayage.of_vtm(self)

    def __repr__(self):
        name = (self.family or {}).get("family", "explicit")
        return f"VTMPrefix({name}, top={self.top})"


class Balayage:
    """A sequence of exit laws ``pi_N`` on ``[0, N]``.

    Either explicit rows (finite) or a generator.  ``name`` identifies catalog
    balayages, which carry analytic facts used elsewhere.
    """

    def __init__(
        self,
        rows: Sequence[LevelDistribution] | None = None,
        *,
        generator: Callable[[int], LevelDistribution] | None = None,
        name: str | None = None,
    ):
        if (rows is None) == (generator is None):
            raise ValueError("give exactly one of rows or generator")
        self.name = name
        if rows is not None:
            rows = tuple(rows)
            for n, r in enumerate(rows):
                if r.level != n:
                    raise ModelError(f"balayage row at position {n} has level {r.level}")
            self._rows = rows
            self.top = len(rows) - 1
            self._cache = None
        else:
            self._rows = None
            self.top = None
            self._cache = _LevelCache(generator)

    def row(self, n: int) -> LevelDistribution:
        if self._rows is not None:
            if n > self.top:
                raise IndexError(f"balayage defined only through level {self.top}")
            return self._rows[n]
        return self._cache.get(n)

    __getitem__ = row

    def has_row(self, n: int) -> bool:
        return self.top is None or n <= self.top

    @classmethod
    def of_vtm(cls, K: VTMPrefix) -> Balayage:
        if K.top is None:
            name = getattr(K.facts, "balayage", None)
            return cls(generator=lambda n: balayage_row(K.level(n + 1)), name=name)
        return cls([balayage_row(K.level(n + 1)) for n in range(K.top)])

    def rows_through(self, top: int) -> list[LevelDistribution]:
        return [self.row(n) for n in range(top + 1)]

    def same_rows(self, other: Balayage, top: int) -> bool:
        return all(self.row(n) == other.row(n) for n in range(top + 1))

    def __repr__(self):
        return f"Balayage({self.name or 'explicit'}, top={self.top})"


def balayage_of_vtm(K: VTMPrefix) -> Balayage:
    """Exit laws ``pi_N`` for every N with ``K_{N+1}`` available."""
    return Balayage.of_vtm(K)


# ---------------------------------------------------------------------------
# Marginal sequences


@dataclass(frozen=True)
class MarginalSequence:
    """Finite prefix ``nu_0, ..., nu_L`` of a point of the marginal set.

    ``tag`` optionally records a symbolic identity (see :mod:`vmc.simplex`).
    """

    levels: tuple[LevelDistribution, ...]
    tag: object = field(default=None, compare=False)

    def __post_init__(self):
        levels = tuple(self.levels)
        object.__setattr__(self, "levels", levels)
        if not levels:
            raise ModelError("empty marginal sequence")
        for n, d in enumerate(levels):
            if d.level != n:
                raise ModelError(f"marginal at position {n} has level {d.level}")

    @property
    def top(self) -> int:
        return len(self.levels) - 1

    def __getitem__(self, n: int) -> LevelDistribution:
        return self.levels[n]

    def __len__(self) -> int:
        return len(self.levels)

    def truncate(self, top: int) -> MarginalSequence:
        return MarginalSequence(self.levels[: top + 1], self.tag)

    def with_tag(self, tag) -> MarginalSequence:
        return MarginalSequence(self.levels, tag)

    def to_json(self) -> list[list[str]]:
        return [d.to_json() for d in self.levels]

    @classmethod
    def from_json(cls, data) -> MarginalSequence:
        return cls(tuple(LevelDistribution.from_json(r) for r in data))


VIDPrefix = MarginalSequence


def mix_sequences(weights: Sequence[Fraction], seqs: Sequence[MarginalSequence], tag=None) -> MarginalSequence:
    top = min(s.top for s in seqs)
    return MarginalSequence(
        tuple(mix(weights, [s[n] for s in seqs]) for n in range(top + 1)),
        tag,
    )


# ---------------------------------------------------------------------------
# Validation


@dataclass(frozen=True)
class Violation:
    """First failure of one constraint class."""

    kind: str
    level: int
    state: int | None
    detail: str = ""

    def to_json(self) -> dict:
        return {"kind": self.kind, "level": self.level, "state": self.state, "detail": self.detail}


def validate_vtm(K: VTMPrefix, top: int | None = None) -> list[Violation]:
    """Check ``P_N(K_{N+1}) = K_N`` exactly for all ``N < top``."""
    top = K.top if top is None else top
    if top is None:
        raise ValueError("give a top level for a generator-backed VTM")
    for n in range(top):
        proj = project_matrix(K.level(n + 1))
        got = K.level(n)
        if proj.rows != got.rows:
            for a in range(n + 1):
                if proj.rows[a] != got.rows[a]:
                    b = next(b for b in range(n + 1) if proj.rows[a][b] != got.rows[a][b])
                    return [
                        Violation(
                            "projectivity",
                            n,
                            a,
                            f"projected K_{n + 1}({a},{b}) = {proj.rows[a][b]} but K_{n}({a},{b}) = {got.rows[a][b]}",
                        )
                    ]
    return []


def validate_vid(nu: MarginalSequence) -> list[Violation]:
    """Check ``nu_N(a) >= nu_{N+1}(a)`` for every ``a <= N``."""
    for n in range(nu.top):
        lo, hi = nu[n], nu[n + 1]
        for a in range(n + 1):
            if lo[a] < hi[a]:
                return [Violation("monotonicity", n, a, f"nu_{n}({a}) = {lo[a]} < nu_{n + 1}({a}) = {hi[a]}")]
    return []


def recursion_violation(nu: MarginalSequence, pi: Balayage, top: int | None = None) -> Violation | None:
    """First ``(N, a)`` where ``nu_N = nu_{N+1} + nu_{N+1}(N+1) pi_N`` fails."""
    top = nu.top if top is None else min(top, nu.top)
    for n in range(top):
        lo, hi, row = nu[n], nu[n + 1], pi.row(n)
        jump = hi[n + 1]
        for a in range(n + 1):
            rhs = hi[a] + jump * row[a]
            if lo[a] != rhs:
                return Violation(
                    "compatibility", n, a, f"nu_{n}({a}) = {lo[a]} but recursion gives {rhs}"
                )
    return None


def validate_compatibility(nu: MarginalSequence, K: VTMPrefix) -> list[Violation]:
    """Check ``nu_N(a) = nu_{N+1}(a) + nu_{N+1}(N+1) pi_N^K(a)`` for all ``N < L``."""
    top = nu.top if K.top is None else min(nu.top, K.top)
    v = recursion_violation(nu, Balayage.of_vtm(K), top)
    return [] if v is None else [v]


def iter_levels(seq, top: int) -> Iterable:
    for n in range(top + 1):
        yield seq[n]
