"""Catalog of VTM families and balayages with their analytic facts.

Each builtin VTM is generated level by level in exact arithmetic.  Alongside
the matrices, a family carries :class:`FamilyFacts`: closed forms for its rows
``K(a, .)`` as symbolic tags, structural properties (irreducibility, closed
nonzero block) and, for catalog balayages, the known limit points of the
delta points together with whether the extreme boundary is compact.  These
facts are what lets the zero-one evaluator cover states beyond a finite
truncation.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

from .kernels import (
    ONE,
    ZERO,
    Balayage,
    LevelDistribution,
    ModelError,
    StochasticLevelMatrix,
    VTMPrefix,
    as_fraction,
    project_matrix,
)
from .tags import DeltaPoint, LimitPoint, Mixture

# ---------------------------------------------------------------------------
# Balayage catalog


@dataclass(frozen=True)
class BalayageFacts:
    """Analytic facts about a catalog balayage.

    ``limits`` lists every non-delta extreme point as a parity-class limit of
    delta points; for these balayages the truncation of ``delta_a`` to levels
    ``<= L`` already equals that of the limit once ``a > L``.
    ``compact`` records that the extreme boundary is known to be compact.
    ``extreme_limits`` lists labels whose extremality is a catalog fact.
    """

    name: str
    point_mass: bool
    compact: bool
    limits: tuple[LimitPoint, ...]
    extreme_limits: frozenset[str] = frozenset()


BALAYAGE_FACTS: dict[str, BalayageFacts] = {
    "down": BalayageFacts("down", True, True, (LimitPoint("lim"),)),
    "two_down": BalayageFacts(
        "two_down", True, True, (LimitPoint("even", 2, 0), LimitPoint("odd", 2, 1))
    ),
    # the exit laws of the two-ladders VTM; equal to two_down except at level 1
    "two_ladders": BalayageFacts(
        "two_ladders", True, True, (LimitPoint("even", 2, 0), LimitPoint("odd", 2, 1))
    ),
    "uniform": BalayageFacts("uniform", False, True, (LimitPoint("U"),), frozenset({"U"})),
}


def _down_row(n: int) -> LevelDistribution:
    return LevelDistribution.point(n, n)


def _two_down_row(n: int) -> LevelDistribution:
    return LevelDistribution.point(n, max(n - 1, 0))


def _two_ladders_row(n: int) -> LevelDistribution:
    return LevelDistribution.point(n, n if n == 1 else max(n - 1, 0))


def _uniform_row(n: int) -> LevelDistribution:
    if n == 0:
        return LevelDistribution.point(0, 0)
    return LevelDistribution.uniform(n, 1, n)


_BALAYAGE_ROWS: dict[str, Callable[[int], LevelDistribution]] = {
    "down": _down_row,
    "two_down": _two_down_row,
    "two_ladders": _two_ladders_row,
    "uniform": _uniform_row,
}


def catalog_balayage(name: str) -> Balayage:
    """Catalog balayage by name: down, two_down, two_ladders or uniform."""
    try:
        gen = _BALAYAGE_ROWS[name]
    except KeyError:
        raise ModelError(f"unknown balayage {name!r}; choose from {sorted(_BALAYAGE_ROWS)}") from None
    return Balayage(generator=gen, name=name)


def balayage_facts(pi: Balayage) -> BalayageFacts | None:
    return BALAYAGE_FACTS.get(pi.name) if pi.name else None


# ---------------------------------------------------------------------------
# VTM families


@dataclass(frozen=True)
class FamilyFacts:
    """Analytic facts about a builtin VTM family.

    ``row_form(a)`` returns the tag of ``K(a, .)`` or None when no closed form
    is known.  ``irreducible`` and ``closed`` describe ``[1, N]`` at every
    level.  ``never_visited_from`` is the first state that no path can enter.
    """

    name: str
    balayage: str | None
    irreducible: bool | None
    closed: bool | None
    row_form: Callable[[int], object] = field(default=lambda a: None, compare=False)
    never_visited_from: int | None = None


def _zero_row(n: int) -> list[Fraction]:
    r = [ZERO] * (n + 1)
    r[0] = ONE
    return r


def infinite_clique() -> VTMPrefix:
    """Random walk on the infinite clique: every body entry of ``K_N`` is ``1/N``."""

    def gen(n: int) -> StochasticLevelMatrix:
        rows = [_zero_row(n)]
        if n:
            p = Fraction(1, n)
            rows += [[ZERO] + [p] * n for _ in range(n)]
        return StochasticLevelMatrix.trusted(n, rows)

    facts = FamilyFacts(
        "infinite_clique", "uniform", True, True, row_form=lambda a: LimitPoint("U") if a >= 1 else None
    )
    return VTMPrefix(generator=gen, family={"family": "infinite_clique"}, facts=facts)


def _q_lookup(q: Sequence[Fraction]) -> Callable[[int], Fraction]:
    """``q_j`` for ``j >= 1``; the last listed value repeats."""

    def get(j: int) -> Fraction:
        return q[min(j, len(q)) - 1]

    return get


def down_from_infinity(q: Sequence) -> VTMPrefix:
    """The VTM that repeatedly tries to come down from infinity.

    ``q = [q_1, q_2, ...]``.  Row 1 jumps to the top state ``N``; row ``a >= 2``
    steps down to ``a - 1`` with probability ``q_{a-1}`` and otherwise jumps to
    ``N``.  Values past the end of ``q`` repeat the last one.  Every ``q_j``
    must lie in ``(0, 1]``: with ``q_j = 0`` the exit law from ``j + 1`` is
    trapped and projection no longer preserves the pattern.
    """
    qs = tuple(as_fraction(x) for x in q)
    if not qs:
        raise ModelError("down_from_infinity needs at least one q value")
    for j, x in enumerate(qs, start=1):
        if not 0 < x <= 1:
            raise ModelError(f"q_{j} = {x} outside (0, 1]")
    qa = _q_lookup(qs)

    def gen(n: int) -> StochasticLevelMatrix:
        rows = [_zero_row(n)]
        for a in range(1, n + 1):
            r = [ZERO] * (n + 1)
            if a == 1:
                r[n] = ONE
            else:
                r[a - 1] += qa(a - 1)
                r[n] += 1 - qa(a - 1)
            rows.append(r)
        return StochasticLevelMatrix.trusted(n, rows)

    def row_form(a: int):
        if a < 1:
            return None
        if a == 1:
            return LimitPoint("lim")
        w = qa(a - 1)
        if w == 1:
            return DeltaPoint(a - 1)
        return Mixture(((w, DeltaPoint(a - 1)), (1 - w, LimitPoint("lim"))))

    facts = FamilyFacts("down_from_infinity", "down", True, True, row_form=row_form)
    return VTMPrefix(
        generator=gen,
        family={"family": "down_from_infinity", "q": [str(x) for x in qs]},
        facts=facts,
    )


def two_ladders() -> VTMPrefix:
    """Two ways to come down from infinity, chosen by a fair coin.

    At level ``N >= 2`` rows 1 and 2 jump to ``N - 1`` or ``N`` with probability
    1/2 each and row ``a >= 3`` steps to ``a - 2``.  Level 1 is the projection
    of level 2, which is the identity.
    """
    half = Fraction(1, 2)

    def gen(n: int) -> StochasticLevelMatrix:
        rows = [_zero_row(n)]
        if n == 1:
            rows.append([ZERO, ONE])
        elif n >= 2:
            for a in range(1, n + 1):
                r = [ZERO] * (n + 1)
                if a <= 2:
                    r[n - 1] += half
                    r[n] += half
                else:
                    r[a - 2] = ONE
                rows.append(r)
        return StochasticLevelMatrix.trusted(n, rows)

    split = Mixture(((half, LimitPoint("even", 2, 0)), (half, LimitPoint("odd", 2, 1))))

    def row_form(a: int):
        if a < 1:
            return None
        return split if a <= 2 else DeltaPoint(a - 2)

    facts = FamilyFacts("two_ladders", "two_ladders", True, True, row_form=row_form)
    return VTMPrefix(generator=gen, family={"family": "two_ladders"}, facts=facts)


def classical_embed(matrix: Sequence[Sequence]) -> VTMPrefix:
    """VTM of a classical chain on ``[0, m-1]`` with 0 absorbing.

    Levels ``N >= m - 1`` pad the matrix with states that are never entered
    (their rows go straight to 0); lower levels are obtained by projection.
    """
    base = StochasticLevelMatrix.from_json(matrix)
    m = base.level + 1

    def gen(n: int) -> StochasticLevelMatrix:
        if n >= m - 1:
            rows = [list(r) + [ZERO] * (n + 1 - m) for r in base.rows]
            rows += [_zero_row(n) for _ in range(m, n + 1)]
            return StochasticLevelMatrix.trusted(n, rows)
        return project_matrix(vtm.level(n + 1))

    facts = FamilyFacts("classical", None, None, None, never_visited_from=m)
    vtm = VTMPrefix(
        generator=gen,
        family={"family": "classical", "matrix": base.to_json()},
        facts=facts,
    )
    return vtm


def explicit_vtm(levels: Sequence[Sequence[Sequence]]) -> VTMPrefix:
    mats = [StochasticLevelMatrix.from_json(k) for k in levels]
    return VTMPrefix(mats, family={"family": "explicit", "levels": [m.to_json() for m in mats]})


def builtin_family(name: str, **params) -> VTMPrefix:
    """Construct a catalog VTM by name."""
    if name == "infinite_clique":
        return infinite_clique()
    if name == "two_ladders":
        return two_ladders()
    if name == "down_from_infinity":
        return down_from_infinity(params.get("q", ["1/2"]))
    if name == "classical":
        if "matrix" not in params:
            raise ModelError("classical family needs a matrix")
        return classical_embed(params["matrix"])
    raise ModelError(f"unknown family {name!r}")


def vtm_from_spec(spec: dict) -> VTMPrefix:
    """Build a VTM from its JSON model specification."""
    if not isinstance(spec, dict) or "family" not in spec:
        raise ModelError("model spec must be an object with a 'family' key")
    fam = spec["family"]
    if fam == "explicit":
        K = explicit_vtm(spec["levels"])
    else:
        params = {k: v for k, v in spec.items() if k != "family"}
        K = builtin_family(fam, **params)
    return K


def vtm_to_spec(K: VTMPrefix) -> dict:
    if K.family is not None:
        return dict(K.family)
    return {"family": "explicit", "levels": [K.level(n).to_json() for n in range(K.top + 1)]}
