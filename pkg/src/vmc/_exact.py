"""Fast exact rationals for inner loops.

gmpy2's ``mpq`` is used when installed; values are converted back to
:class:`fractions.Fraction` before they leave a public function.
"""
from __future__ import annotations

from fractions import Fraction

try:
    from gmpy2 import mpq as Q
except ImportError:  # pragma: no cover
    Q = Fraction

QZERO = Q(0)
QONE = Q(1)


def to_q(x: Fraction):
    return Q(x.numerator, x.denominator)


def to_fraction(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    return Fraction(int(x.numerator), int(x.denominator))
