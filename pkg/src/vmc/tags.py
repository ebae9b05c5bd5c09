"""Symbolic identities for marginal sequences.

A tag names a point of the marginal simplex independently of any finite
truncation, e.g. "the delta point at 3" or "the even-parity limit of delta
points".  Tags let catalog facts be stated exactly and let evidence be
re-derived at any truncation.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction


@dataclass(frozen=True)
class Zero:
    def __str__(self):
        return "0"


@dataclass(frozen=True)
class DeltaPoint:
    a: int

    def __str__(self):
        return f"delta_{self.a}"


@dataclass(frozen=True)
class LimitPoint:
    """Limit of ``delta_a`` along ``a = residue (mod modulus)``."""

    label: str
    modulus: int = 1
    residue: int = 0

    def __str__(self):
        return f"lim[{self.label}]"


@dataclass(frozen=True)
class Row:
    a: int

    def __str__(self):
        return f"K({self.a},.)"


@dataclass(frozen=True)
class Mixture:
    components: tuple[tuple[Fraction, object], ...]

    def __post_init__(self):
        comps = tuple((Fraction(w), t) for w, t in self.components)
        object.__setattr__(self, "components", comps)
        if sum(w for w, _ in comps) != 1 or any(w < 0 for w, _ in comps):
            raise ValueError("mixture weights must be nonnegative and sum to 1")

    def __str__(self):
        return " + ".join(f"{w}*{t}" for w, t in self.components)

    def nontrivial(self) -> tuple[tuple[Fraction, object], ...]:
        return tuple((w, t) for w, t in self.components if w)


def tag_to_json(tag) -> dict | None:
    if tag is None:
        return None
    if isinstance(tag, Zero):
        return {"kind": "zero"}
    if isinstance(tag, DeltaPoint):
        return {"kind": "delta", "a": tag.a}
    if isinstance(tag, LimitPoint):
        return {"kind": "limit", "label": tag.label, "modulus": tag.modulus, "residue": tag.residue}
    if isinstance(tag, Row):
        return {"kind": "row", "a": tag.a}
    if isinstance(tag, Mixture):
        return {
            "kind": "mixture",
            "components": [{"weight": str(w), "tag": tag_to_json(t)} for w, t in tag.components],
        }
    raise TypeError(f"unknown tag {tag!r}")
