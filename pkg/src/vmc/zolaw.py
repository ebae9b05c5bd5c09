"""Zero-one law evaluator for the tail sigma-algebra of a VMC.

The tail of a VMC represented by ``(nu, K)`` is trivial exactly when

* ``nu`` is extreme in the simplex of ``K``,
* every row ``K(a, .)`` with ``a`` infinitely- or once-visited is extreme, and
* no state is randomly visited.

Extremality has no general finite decision procedure, so evidence is
gathered by a fixed sequence of strategies and may end Inconclusive.  Each
piece of evidence records whether it rests on an exact structural identity
(symbolic tags and catalog facts) or only on agreement at the stated
truncation level.
"""
from __future__ import annotations

import enum
import weakref
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

from .families import BALAYAGE_FACTS, balayage_facts
from .kernels import (
    Balayage,
    MarginalSequence,
    ModelError,
    VTMPrefix,
    mix_sequences,
    validate_compatibility,
)
from .simplex import (
    delta_point,
    is_point_mass_balayage,
    limit_scan,
    materialize,
    membership,
    row_of_vtm,
    second_moment_sequence,
)
from .tags import DeltaPoint, LimitPoint, Mixture, Row, Zero, tag_to_json
from .vmcsim import (
    IncompatiblePair,
    StateClassification,
    Verdict,
    classify_state,
    closed_level,
    irreducible,
)


class MembershipViolation(ModelError):
    """The marginal sequence is not in the simplex of the balayage."""


class Status(enum.Enum):
    EXTREME = "Extreme"
    NOT_EXTREME = "NotExtreme"
    INCONCLUSIVE = "Inconclusive"


class Outcome(enum.Enum):
    TRIVIAL = "Trivial"
    NON_TRIVIAL = "NonTrivial"
    INCONCLUSIVE = "Inconclusive"

    @property
    def exit_code(self) -> int:
        return {"Trivial": 0, "NonTrivial": 1, "Inconclusive": 2}[self.value]


# ---------------------------------------------------------------------------
# Evidence


@dataclass(frozen=True)
class DeltaMatch:
    a: int


@dataclass(frozen=True)
class LimitMatch:
    label: str
    members: tuple[int, ...] = ()


@dataclass(frozen=True)
class ConvexSplit:
    first: MarginalSequence
    second: MarginalSequence
    weight: Fraction


@dataclass(frozen=True)
class CatalogFact:
    fact: str


@dataclass(frozen=True)
class SecondMomentTrend:
    rows: tuple[tuple[int, int, int, Fraction], ...]  # (M, c, N, value)


@dataclass(frozen=True)
class ExtremalityEvidence:
    subject: MarginalSequence
    status: Status
    method: object
    truncation: int
    structural: bool = False

    def describe(self) -> dict:
        m = self.method
        out = {
            "status": self.status.value,
            "truncation": self.truncation,
            "scope": "structural" if self.structural else "truncation",
            "subject_tag": tag_to_json(self.subject.tag),
        }
        if isinstance(m, DeltaMatch):
            out["method"] = {"kind": "DeltaMatch", "a": m.a}
        elif isinstance(m, LimitMatch):
            out["method"] = {"kind": "LimitMatch", "label": m.label, "members": list(m.members)}
        elif isinstance(m, ConvexSplit):
            out["method"] = {
                "kind": "ConvexSplit",
                "weight": str(m.weight),
                "first": tag_to_json(m.first.tag),
                "second": tag_to_json(m.second.tag),
            }
        elif isinstance(m, CatalogFact):
            out["method"] = {"kind": "CatalogFact", "fact": m.fact}
        elif isinstance(m, SecondMomentTrend):
            out["method"] = {
                "kind": "SecondMomentTrend",
                "rows": [[M, c, n, str(v)] for M, c, n, v in m.rows],
            }
        return out


@dataclass(frozen=True)
class ExtremalityOptions:
    """Strategy knobs.  ``amax`` bounds the delta points that are searched."""

    amax: int = 64
    scan_factor: int = 4
    pair_search: bool = True
    trend_mmax: int = 3


_CANDIDATES: "weakref.WeakKeyDictionary[Balayage, dict]" = weakref.WeakKeyDictionary()


def _cached(pi: Balayage, key, make):
    store = _CANDIDATES.setdefault(pi, {})
    if key not in store:
        store[key] = make()
    return store[key]


def _limit_candidates(pi: Balayage, top: int, opts: ExtremalityOptions) -> list[MarginalSequence]:
    facts = balayage_facts(pi)
    if facts is not None:
        return _cached(pi, ("limits", top), lambda: [materialize(t, pi, top) for t in facts.limits])

    def scan():
        hi = opts.scan_factor * (top + 1)
        if pi.top is not None:
            hi = min(hi, pi.top + 1)  # delta_a needs pi_{a-1}
        res = limit_scan(pi, top, range(0, hi + 1))
        out = []
        for i, c in enumerate(res.candidates):
            period = c.period or 1
            out.append(c.as_sequence(LimitPoint(f"scan{i}", period, c.members[-1] % period)))
        return out

    return _cached(pi, ("scan", top, opts.scan_factor), scan)


def _delta_candidates(pi: Balayage, top: int, amax: int) -> list[MarginalSequence]:
    return _cached(pi, ("deltas", top, amax), lambda: [delta_point(pi, a, top) for a in range(0, min(amax, top - 1) + 1)])


def _split_from_mixture(nu: MarginalSequence, pi: Balayage, tag: Mixture) -> ConvexSplit | None:
    comps = tag.nontrivial()
    if len(comps) < 2:
        return None
    top = nu.top
    w1, t1 = comps[0]
    rest = comps[1:]
    first = materialize(t1, pi, top)
    total = sum(w for w, _ in rest)
    rest_tag = rest[0][1] if len(rest) == 1 else Mixture(tuple((w / total, t) for w, t in rest))
    second = materialize(rest_tag, pi, top)
    if first.levels == second.levels:
        return None
    return ConvexSplit(first, second, w1)


def _pair_search(nu: MarginalSequence, cands: Sequence[MarginalSequence]) -> ConvexSplit | None:
    """Exact search for ``nu = w * mu1 + (1 - w) * mu2`` with ``0 < w < 1``."""
    top = nu.top
    target = nu[top].weights
    supp = {b for b, x in enumerate(target) if x}
    cands = [c for c in cands if c.levels != nu.levels]
    for i, m1 in enumerate(cands):
        s1 = {b for b, x in enumerate(m1[top].weights) if x}
        for m2 in cands[i + 1 :]:
            s2 = {b for b, x in enumerate(m2[top].weights) if x}
            if not supp <= (s1 | s2):
                continue
            w = _solve_weight(nu, m1, m2)
            if w is None:
                continue
            if all(
                nu[n][b] == w * m1[n][b] + (1 - w) * m2[n][b]
                for n in range(top + 1)
                for b in range(n + 1)
            ):
                return ConvexSplit(m1, m2, w)
    return None


def _solve_weight(nu, m1, m2) -> Fraction | None:
    for n in range(nu.top, -1, -1):
        a, b, v = m1[n].weights, m2[n].weights, nu[n].weights
        for j in range(n + 1):
            if a[j] != b[j]:
                w = (v[j] - b[j]) / (a[j] - b[j])
                return w if 0 < w < 1 else None
    return None


def _trend(nu: MarginalSequence, pi: Balayage, mmax: int) -> SecondMomentTrend:
    rows = []
    for M in range(1, min(mmax, nu.top) + 1):
        for c in range(0, M + 1):
            seq = second_moment_sequence(nu, pi, M, c)
            n, v = seq[-1]
            rows.append((M, c, n, v))
    return SecondMomentTrend(tuple(rows))


def extremality(nu: MarginalSequence, pi: Balayage, opts: ExtremalityOptions | None = None) -> ExtremalityEvidence:
    """Gather evidence on whether ``nu`` is an extreme point of the simplex of ``pi``.

    Strategies, in order: match a delta point; match a limit of delta points
    when the balayage is point-mass (its extreme boundary is then compact,
    so such limits are extreme); exhibit an exact convex split; apply a
    catalog fact; otherwise report Inconclusive with second-moment data.
    """
    opts = opts or ExtremalityOptions()
    mem = membership(nu, pi)
    if not mem:
        raise MembershipViolation(f"not in the simplex: {mem.violation.detail}")
    top = nu.top
    tag = nu.tag
    facts = balayage_facts(pi)

    # 0. a tagged catalog limit is identified exactly, even when its prefix
    # happens to coincide with that of a late delta point
    if (
        isinstance(tag, LimitPoint)
        and facts is not None
        and facts.point_mass
        and tag in facts.limits
        and materialize(tag, pi, top).levels == nu.levels
    ):
        return ExtremalityEvidence(nu, Status.EXTREME, LimitMatch(tag.label), top, structural=True)

    # 1. delta points: the top level pins down the only possible index
    d_top = nu[top]
    if d_top.is_point_mass():
        a = d_top.argmax()
        if a < top and a <= opts.amax and delta_point(pi, a, top).levels == nu.levels:
            structural = isinstance(tag, (DeltaPoint, Zero))
            return ExtremalityEvidence(nu, Status.EXTREME, DeltaMatch(a), top, structural)

    # 2. limits of delta points under a point-mass balayage
    if is_point_mass_balayage(pi, top):
        for cand in _limit_candidates(pi, top, opts):
            if cand.levels == nu.levels:
                lab = cand.tag.label if isinstance(cand.tag, LimitPoint) else "scan"
                structural = facts is not None and isinstance(tag, LimitPoint) and tag == cand.tag
                return ExtremalityEvidence(nu, Status.EXTREME, LimitMatch(lab), top, structural)

    # 3. convex split, from the tag or by exact pair search
    if isinstance(tag, Mixture):
        split = _split_from_mixture(nu, pi, tag)
        if split is not None and _split_valid(nu, pi, split):
            return ExtremalityEvidence(nu, Status.NOT_EXTREME, split, top, structural=True)
    if opts.pair_search:
        cands = _delta_candidates(pi, top, opts.amax) + _limit_candidates(pi, top, opts)
        split = _pair_search(nu, cands)
        if split is not None:
            return ExtremalityEvidence(nu, Status.NOT_EXTREME, split, top)

    # 4. catalog facts
    if facts is not None:
        for lim in facts.limits:
            if lim.label in facts.extreme_limits and materialize(lim, pi, top).levels == nu.levels:
                structural = isinstance(tag, LimitPoint) and tag == lim
                return ExtremalityEvidence(
                    nu, Status.EXTREME, CatalogFact(f"{facts.name}: {lim.label} is extreme"), top, structural
                )

    return ExtremalityEvidence(nu, Status.INCONCLUSIVE, _trend(nu, pi, opts.trend_mmax), top)


def _split_valid(nu: MarginalSequence, pi: Balayage, s: ConvexSplit) -> bool:
    if not 0 < s.weight < 1:
        return False
    if s.first.levels == s.second.levels:
        return False
    if not (membership(s.first, pi) and membership(s.second, pi)):
        return False
    mixed = mix_sequences([s.weight, 1 - s.weight], [s.first, s.second])
    return mixed.levels == nu.truncate(mixed.top).levels and mixed.top == nu.top


def verify_evidence(ev: ExtremalityEvidence, pi: Balayage) -> bool:
    """Re-derive a certificate from scratch; Inconclusive evidence verifies trivially."""
    nu, m, top = ev.subject, ev.method, ev.truncation
    if not membership(nu, pi):
        return False
    if ev.status is Status.INCONCLUSIVE:
        return True
    if isinstance(m, DeltaMatch):
        return m.a < top and delta_point(pi, m.a, top).levels == nu.levels
    if isinstance(m, LimitMatch):
        if not is_point_mass_balayage(pi, top):
            return False
        return any(c.levels == nu.levels for c in _limit_candidates(pi, top, ExtremalityOptions()))
    if isinstance(m, ConvexSplit):
        return _split_valid(nu, pi, m)
    if isinstance(m, CatalogFact):
        facts = balayage_facts(pi)
        if facts is None:
            return False
        return any(
            lim.label in facts.extreme_limits and materialize(lim, pi, top).levels == nu.levels
            for lim in facts.limits
        )
    return False


# ---------------------------------------------------------------------------
# Verdict


@dataclass(frozen=True)
class ZeroOneOptions:
    amax: int = 64
    use_shortcut: bool = True
    extremality: ExtremalityOptions = field(default_factory=ExtremalityOptions)


@dataclass(frozen=True)
class TailCoverage:
    """How states beyond ``amax`` are accounted for."""

    covered: bool
    violated: bool
    reason: str


@dataclass(frozen=True)
class ZeroOneVerdict:
    outcome: Outcome
    condition_i: ExtremalityEvidence
    condition_ii: dict[int, ExtremalityEvidence]
    condition_iii: tuple[StateClassification, ...]  # randomly-visited witnesses
    classifications: dict[int, StateClassification]
    tail: TailCoverage
    shortcut: bool
    truncation: int
    amax: int

    def to_json(self) -> dict:
        return {
            "verdict": self.outcome.value,
            "truncation": self.truncation,
            "amax": self.amax,
            "irreducible_shortcut": self.shortcut,
            "condition_i": self.condition_i.describe(),
            "condition_ii": {str(a): ev.describe() for a, ev in sorted(self.condition_ii.items())},
            "condition_iii": {
                "randomly_visited": [c.to_row() for c in self.condition_iii],
                "holds": not self.condition_iii,
            },
            "classifications": [c.to_row() for _, c in sorted(self.classifications.items())],
            "tail": {"covered": self.tail.covered, "violated": self.tail.violated, "reason": self.tail.reason},
        }


def _row_sequence(K: VTMPrefix, a: int, top: int, pi: Balayage) -> MarginalSequence:
    """``K(a, .)`` with its catalog tag attached when the closed form checks out exactly."""
    row = row_of_vtm(K, a, top)
    facts = K.facts
    form = facts.row_form(a) if facts is not None else None
    if form is not None and balayage_facts(pi) is not None:
        try:
            ref = materialize(form, pi, top)
        except ModelError:
            return row
        if ref.levels == row.levels:
            return row.with_tag(form)
    return row


def _tag_extreme(tag, pi: Balayage) -> bool | None:
    """Extremality of a catalog tag, or None if unknown."""
    facts = balayage_facts(pi)
    if isinstance(tag, (DeltaPoint, Zero)):
        return True
    if isinstance(tag, LimitPoint) and facts is not None and tag in facts.limits:
        return facts.compact
    if isinstance(tag, Mixture):
        comps = tag.nontrivial()
        if len(comps) == 1:
            return _tag_extreme(comps[0][1], pi)
        if len({c for _, c in comps}) > 1:
            return False
    return None


def _tail_coverage(nu: MarginalSequence, K: VTMPrefix, pi: Balayage, amax: int) -> TailCoverage:
    facts = K.facts
    if isinstance(nu.tag, Zero):
        return TailCoverage(True, False, "zero VID: every state is never visited")
    if facts is None:
        return TailCoverage(False, False, f"no analytic facts cover states above {amax}")
    if facts.never_visited_from is not None and facts.never_visited_from <= amax + 1:
        return TailCoverage(True, False, f"states >= {facts.never_visited_from} are never entered")
    starts_inside = nu.top >= 1 and nu[1][0] == 0
    if facts.irreducible and facts.closed and starts_inside:
        # every state is infinitely visited; rows decide
        kinds = {_tag_extreme(facts.row_form(a), pi) for a in range(amax + 1, amax + 3)}
        if kinds == {True}:
            return TailCoverage(True, False, f"{facts.name}: rows above {amax} are extreme")
        if False in kinds:
            return TailCoverage(False, True, f"{facts.name}: rows above {amax} are convex splits")
    return TailCoverage(False, False, f"no analytic facts cover states above {amax}")


def evaluate(nu: MarginalSequence, K: VTMPrefix, opts: ZeroOneOptions | None = None) -> ZeroOneVerdict:
    """Assemble the three conditions and aggregate them into a verdict."""
    opts = opts or ZeroOneOptions()
    top = nu.top
    if not K.has_level(top):
        raise ModelError(f"VTM only reaches level {K.top}, VID reaches {top}")
    KL = K if K.top == top else K.truncate(top) if K.top is None or K.top > top else K
    bad = validate_compatibility(nu, KL)
    if bad:
        raise IncompatiblePair(f"VID and VTM are incompatible: {bad[0].detail}")
    pi = Balayage.of_vtm(K)
    amax = min(opts.amax, top - 1) if top >= 1 else 0
    ex_opts = ExtremalityOptions(
        amax=opts.extremality.amax,
        scan_factor=opts.extremality.scan_factor,
        pair_search=opts.extremality.pair_search,
        trend_mmax=opts.extremality.trend_mmax,
    )

    shortcut = False
    if opts.use_shortcut and top >= 1 and nu[1][0] == 0:
        shortcut = bool(irreducible(K, top)) and all(closed_level(K.level(n)) for n in range(top + 1))

    classes: dict[int, StateClassification] = {}
    for a in range(1, amax + 1):
        if shortcut:
            classes[a] = StateClassification(a, Fraction(1), Fraction(1), Verdict.INFINITELY)
        else:
            classes[a] = classify_state(nu, K, a)

    cond_i = extremality(nu, pi, ex_opts)
    cond_ii = {}
    for a, c in classes.items():
        if c.verdict in (Verdict.INFINITELY, Verdict.ONCE):
            cond_ii[a] = extremality(_row_sequence(K, a, top, pi), pi, ex_opts)
    randoms = tuple(c for c in classes.values() if c.verdict is Verdict.RANDOMLY)
    tail = _tail_coverage(nu, K, pi, amax)

    statuses = [cond_i.status] + [e.status for e in cond_ii.values()]
    if Status.NOT_EXTREME in statuses or randoms or tail.violated:
        outcome = Outcome.NON_TRIVIAL
    elif all(s is Status.EXTREME for s in statuses) and tail.covered:
        outcome = Outcome.TRIVIAL
    else:
        outcome = Outcome.INCONCLUSIVE
    return ZeroOneVerdict(outcome, cond_i, cond_ii, randoms, classes, tail, shortcut, top, amax)


# ---------------------------------------------------------------------------
# Second-moment report


@dataclass(frozen=True)
class TrendRow:
    M: int
    c: int
    N: int
    value: Fraction


def tail_second_moment_report(
    nu: MarginalSequence,
    pi: Balayage,
    grid: Iterable[tuple[int, int]],
    n_values: Iterable[int] | None = None,
) -> list[TrendRow]:
    """``sum_b nu_N(b) pi_{b,M}(c)^2 - nu_M(c)^2`` over ``N``, for each ``(M, c)``.

    The values are nonincreasing in ``N``.  A zero limit for every ``(M, c)``
    is necessary for extremality; finite ``N`` never certifies the converse.
    """
    mem = membership(nu, pi)
    if not mem:
        raise MembershipViolation(f"not in the simplex: {mem.violation.detail}")
    n_list = None if n_values is None else list(n_values)
    out = []
    for M, c in grid:
        if not 0 <= c <= M <= nu.top:
            raise ValueError(f"bad grid point (M={M}, c={c})")
        ns = None if n_list is None else [n for n in n_list if n >= M]
        for n, v in second_moment_sequence(nu, pi, M, c, ns):
            out.append(TrendRow(M, c, n, v))
    return out


def is_nonincreasing(rows: Sequence[TrendRow]) -> bool:
    by_key: dict[tuple[int, int], list[TrendRow]] = {}
    for r in rows:
        by_key.setdefault((r.M, r.c), []).append(r)
    for seq in by_key.values():
        seq.sort(key=lambda r: r.N)
        if any(x.value < y.value for x, y in zip(seq, seq[1:])):
            return False
    return True
