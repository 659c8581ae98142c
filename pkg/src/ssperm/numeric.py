"""Sign decisions for the classification branches.

The permanence criteria branch on exact zeros and orderings (``c4 = 0``,
``a2 = a1``, ...).  Exact inputs (``int`` / ``Fraction``) are decided exactly.
Floating-point inputs use a deadband: ``q`` counts as zero iff
``|q| <= ZERO_TOL * (1 + scale) ** degree`` where ``scale`` is the largest
absolute parameter coordinate and ``degree`` is the polynomial degree of
``q`` in the coordinates, so the band scales with the inputs.
"""

from __future__ import annotations

import math
from fractions import Fraction
from numbers import Rational
from typing import Iterable, Union

Number = Union[int, float, Fraction]

ZERO_TOL = 1e-9


def is_exact(x) -> bool:
    return isinstance(x, Rational)


def all_exact(values: Iterable) -> bool:
    return all(is_exact(v) for v in values)


def sign(q: Number, scale: float = 0.0, degree: int = 1) -> int:
    """Return -1, 0 or +1; exact for rationals, deadbanded for floats."""
    if is_exact(q):
        return (q > 0) - (q < 0)
    q = float(q)
    if math.isnan(q):
        raise ValueError("sign of NaN")
    tol = ZERO_TOL * (1.0 + abs(float(scale))) ** degree
    if q > tol:
        return 1
    if q < -tol:
        return -1
    return 0


def compare(x: Number, y: Number, scale: float = 0.0, degree: int = 1) -> int:
    """Three-way comparison of ``x`` and ``y`` with the same deadband as :func:`sign`."""
    return sign(x - y, scale, degree)


def to_exact(x) -> Fraction:
    """Convert to a Fraction.

    Floats go through their shortest repr, so ``34.99`` becomes ``3499/100``
    rather than the nearest binary fraction.  Strings such as ``"7/3"`` are
    accepted.
    """
    if isinstance(x, Fraction):
        return x
    if isinstance(x, bool):
        raise TypeError("bool is not a coordinate")
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, str):
        return Fraction(x.strip())
    x = float(x)
    if not math.isfinite(x):
        raise ValueError(f"non-finite value {x!r} has no exact form")
    return Fraction(repr(x))


def sign_symbol(s: int) -> str:
    return {1: "+", 0: "0", -1: "-"}[s]


def pattern_string(signs: Iterable[int]) -> str:
    return "(" + ",".join(sign_symbol(s) for s in signs) + ")"
