"""Exact permanence decision for the exponential normal form.

The decision tree:

1. ``det J <= 0``: not permanent (``det J = 0`` is reported as Degenerate).
2. ``J11 * J22 >= 0``: permanent iff one of the same-sign cases A, B1, B2
   holds; in that case the origin is also globally asymptotically stable.
3. ``J11 * J22 < 0`` with both interval orderings satisfied: a heteroclinic
   cycle at infinity, decided by the sign of ``L_inf``.
4. Otherwise one of the opposite-sign families C1..C4 with sub-cases a/b/c.

All sign decisions go through :mod:`ssperm.numeric`, so rational input is
decided exactly and float input with a scaled deadband.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import NamedTuple, Optional, Tuple

from .numeric import Number, compare, is_exact, sign
from .params import (
    CVector,
    EquilibriumKind,
    ExpParams,
    JacobianSummary,
    PositiveEquilibrium,
    SSystemSpec,
    c_vector,
    find_positive_equilibrium,
    jacobian,
    to_exponential,
)

# exponents above this switch the exact ratio test to floating point
EXACT_POWER_LIMIT = 4096


class Verdict(enum.Enum):
    PERMANENT = "Permanent"
    NOT_PERMANENT = "NotPermanent"
    UNDETERMINED = "Undetermined"
    DEGENERATE = "Degenerate"


class CaseLabel(enum.Enum):
    A = "A"
    B1 = "B1"
    B2 = "B2"
    B3 = "B3"
    B4 = "B4"
    HET_A = "HetA"
    HET_B = "HetB"
    C1A = "C1a"
    C1B = "C1b"
    C1C = "C1c"
    C2A = "C2a"
    C2B = "C2b"
    C2C = "C2c"
    C3A = "C3a"
    C3B = "C3b"
    C3C = "C3c"
    C4A = "C4a"
    C4B = "C4b"
    C4C = "C4c"

    @property
    def family(self) -> str:
        return self.value[:2] if self.value.startswith("C") else self.value


class Branch(enum.Enum):
    DETERMINANT = "determinant"
    SAME_SIGN = "same-sign"
    HETEROCLINIC = "heteroclinic"
    OPPOSITE_SIGN = "opposite-sign"
    NO_EQUILIBRIUM = "no-equilibrium"


@dataclass(frozen=True)
class Classification:
    """Verdict plus everything computed on the way.

    ``case`` names the case that proves permanence (or, for the
    heteroclinic branch, the case whose ``L_inf`` decided the verdict).
    ``family`` is the opposite-sign family (``"C1"``..``"C4"``) whose sign
    and ordering shape matched, even when none of its sub-cases holds.
    """

    verdict: Verdict
    case: Optional[CaseLabel]
    reason: str
    branch: Branch
    jacobian: Optional[JacobianSummary]
    c: Optional[CVector]
    l_infinity: Optional[Number] = None
    L: Optional[Number] = None
    gas: Optional[bool] = None
    family: Optional[str] = None
    exact: bool = False
    equilibrium: Optional[PositiveEquilibrium] = None

    @property
    def permanent(self) -> bool:
        return self.verdict is Verdict.PERMANENT


class RatioBound(NamedTuple):
    holds: bool
    L: Number
    ratio: Number


class RobustResult(NamedTuple):
    robust: bool
    case: Optional[CaseLabel]


# ---------------------------------------------------------------------------
# helpers


def _scale(params: ExpParams) -> float:
    return params.scale


def _signs_c(c: CVector, scale: float) -> Tuple[int, int, int, int]:
    return c.signs(scale)


def _le(x, y, scale) -> bool:
    return compare(x, y, scale) <= 0


def _lt(x, y, scale) -> bool:
    return compare(x, y, scale) < 0


def orderings_hold(params: ExpParams) -> Tuple[bool, bool]:
    """The a-interval and b-interval nesting conditions.

    ``[min(a1,a2), max(a1,a2)] in [min(a3,a4), max(a3,a4)]`` and
    ``[min(b3,b4), max(b3,b4)] in [min(b1,b2), max(b1,b2)]``.
    """
    a1, a2, a3, a4 = params.a
    b1, b2, b3, b4 = params.b
    s = _scale(params)
    a_ok = _le(min(a3, a4), min(a1, a2), s) and _le(max(a1, a2), max(a3, a4), s)
    b_ok = _le(min(b1, b2), min(b3, b4), s) and _le(max(b3, b4), max(b1, b2), s)
    return a_ok, b_ok


def _l_infinity_a(params: ExpParams) -> Number:
    a1, a2, a3, a4 = params.a
    b1, b2, b3, b4 = params.b
    return (a3 - a1) * (b2 - b3) * (a2 - a4) * (b4 - b1) - (b1 - b3) * (a2 - a3) * (b4 - b2) * (a4 - a1)


def _strict_sign(x) -> int:
    return (x > 0) - (x < 0)


def _heteroclinic_case(jac: JacobianSummary, scale: float) -> Optional[CaseLabel]:
    s12, s21 = jac.signs[1], jac.signs[2]
    # inside the deadband fall back to the raw sign; det > 0 with opposite
    # diagonal signs forces J12 * J21 < 0
    if s12 == 0:
        s12 = _strict_sign(jac.j12)
    if s21 == 0:
        s21 = _strict_sign(jac.j21)
    if (s12, s21) == (-1, 1):
        return CaseLabel.HET_A
    if (s12, s21) == (1, -1):
        return CaseLabel.HET_B
    return None


def l_infinity(params: ExpParams) -> Number:
    """Eigenvalue-product balance of the heteroclinic cycle at infinity.

    Only defined when the off-diagonal signs are ``(-, +)`` (case A) or
    ``(+, -)`` (case B) and both interval orderings hold; case B is the
    negation of case A.
    """
    jac = jacobian(params)
    case = _heteroclinic_case(jac, _scale(params))
    a_ok, b_ok = orderings_hold(params)
    if case is None or not (a_ok and b_ok):
        raise ValueError("L_inf is only defined in the heteroclinic-cycle configuration")
    value = _l_infinity_a(params)
    return value if case is CaseLabel.HET_A else -value


# ---------------------------------------------------------------------------
# ratio test of the b sub-cases

# family -> ((c-sign pattern, numerator index, denominator index), ...)
_B_PATTERNS = {
    "C1": (((1, -1, -1, 0), 1, 2), ((-1, 1, 0, -1), 0, 3)),
    "C2": (((-1, 1, -1, 0), 0, 2), ((1, -1, 0, -1), 1, 3)),
    "C3": (((0, 1, -1, 1), 3, 1), ((1, 0, 1, -1), 2, 0)),
    "C4": (((0, 1, 1, -1), 2, 1), ((1, 0, -1, 1), 3, 0)),
}

_C_PATTERNS = {
    "C1": ((1, 0, -1, 0), (0, 1, 0, -1)),
    "C2": ((0, 1, -1, 0), (1, 0, 0, -1)),
    "C3": ((0, 1, -1, 0), (1, 0, 0, -1)),
    "C4": ((0, 1, 0, -1), (1, 0, -1, 0)),
}


def _slope(params: ExpParams, family: str) -> Tuple[Number, Number]:
    """The slope ratio of a family as ``(num, den)`` with ``den > 0``."""
    a1, a2, a3, a4 = params.a
    b1, b2, b3, b4 = params.b
    if family == "C1":
        return a1 - a2, b2 - b1
    if family == "C2":
        return a1 - a2, b1 - b2
    if family == "C3":
        return b3 - b4, a3 - a4
    return b3 - b4, a4 - a3


def _below_bound(ratio: Number, L: Number) -> bool:
    """``ratio < (L+1)^(L+1) / L^L`` for ``L > 0``."""
    if ratio <= 0:
        return True
    if is_exact(ratio) and is_exact(L):
        r, ell = Fraction(ratio), Fraction(L)
        p, q = ell.numerator, ell.denominator
        if p + q <= EXACT_POWER_LIMIT:
            return r**q * ell**p < (ell + 1) ** (p + q)
    r, ell = float(ratio), float(L)
    lhs = math.log(r)
    rhs = (ell + 1.0) * math.log1p(ell) - ell * math.log(ell)
    return sign(lhs - rhs, max(abs(lhs), abs(rhs))) < 0


def bound_value(L: float) -> float:
    """``(L+1)^(L+1) / L^L`` evaluated through logarithms."""
    L = float(L)
    return math.exp((L + 1.0) * math.log1p(L) - L * math.log(L))


def ratio_bound_check(params: ExpParams, c: CVector, case: CaseLabel) -> RatioBound:
    """Strict slope bound of a b sub-case; returns the verdict and ``L``."""
    family = case.family
    if family not in _B_PATTERNS or not case.value.endswith("b"):
        raise ValueError(f"{case.value} is not a ratio-bound sub-case")
    sc = _signs_c(c, _scale(params))
    for pattern, i, j in _B_PATTERNS[family]:
        if sc == pattern:
            assert c[j] != 0
            num, den = c[i], c[j]
            L = Fraction(num) / Fraction(den) if is_exact(num) and is_exact(den) else num / den
            snum, sden = _slope(params, family)
            ratio = Fraction(snum) / Fraction(sden) if is_exact(snum) and is_exact(sden) else snum / sden
            return RatioBound(_below_bound(ratio, L), L, ratio)
    raise ValueError(f"sign pattern of c does not match sub-case {case.value}")


# ---------------------------------------------------------------------------
# classification


_FAMILY_SIGNS = {
    "C1": (1, -1, 1, -1),
    "C2": (1, 1, -1, -1),
    "C3": (-1, -1, 1, 1),
    "C4": (-1, 1, -1, 1),
}


def _family_ordering(params: ExpParams, family: str) -> bool:
    a1, a2, a3, a4 = params.a
    b1, b2, b3, b4 = params.b
    s = _scale(params)
    if family == "C1":
        return _le(a4, a2, s) and _le(a1, a3, s)
    if family == "C2":
        return _le(a3, a2, s) and _le(a1, a4, s)
    if family == "C3":
        return _le(b1, b4, s) and _le(b3, b2, s)
    return _le(b2, b4, s) and _le(b3, b1, s)


def classify(params: ExpParams) -> Classification:
    if not params.is_finite():
        raise ValueError("parameters must be finite")
    jac = jacobian(params)
    c = c_vector(params)
    s = _scale(params)
    base = dict(jacobian=jac, c=c, exact=params.exact)

    sdet = sign(jac.det, s, 2)
    if sdet == 0:
        reason = "all-c-zero" if all(x == 0 for x in c.signs(s)) else "det-zero"
        return Classification(Verdict.DEGENERATE, None, reason, Branch.DETERMINANT, **base)
    if sdet < 0:
        return Classification(Verdict.NOT_PERMANENT, None, "det-negative", Branch.DETERMINANT, **base)

    s11, s12, s21, s22 = jac.signs
    if s11 * s22 >= 0:
        return _same_sign(params, jac, base)

    a_ok, b_ok = orderings_hold(params)
    if a_ok and b_ok:
        case = _heteroclinic_case(jac, s)
        if case is not None:
            value = _l_infinity_a(params)
            if case is CaseLabel.HET_B:
                value = -value
            sl = sign(value, s, 4)
            verdict = {1: Verdict.PERMANENT, -1: Verdict.NOT_PERMANENT, 0: Verdict.UNDETERMINED}[sl]
            reason = {1: "l-infinity-positive", -1: "l-infinity-negative", 0: "l-infinity-zero"}[sl]
            return Classification(verdict, case, reason, Branch.HETEROCLINIC, l_infinity=value, **base)

    return _opposite_sign(params, jac, c, base)


def _same_sign(params: ExpParams, jac: JacobianSummary, base: dict) -> Classification:
    a1, a2, a3, a4 = params.a
    b1, b2, b3, b4 = params.b
    s = _scale(params)
    s11, _, _, s22 = jac.signs
    case = None
    reason = "diagonal-not-negative"
    if s11 < 0 and s22 < 0:
        case = CaseLabel.A
    elif s11 == 0 and s22 < 0:
        if _le(min(a3, a4), a2, s) and _le(a2, max(a3, a4), s):
            case = CaseLabel.B1
        else:
            reason = "a-interval-violated"
    elif s11 < 0 and s22 == 0:
        if _le(min(b1, b2), b4, s) and _le(b4, max(b1, b2), s):
            case = CaseLabel.B2
        else:
            reason = "b-interval-violated"
    if case is None:
        return Classification(Verdict.NOT_PERMANENT, None, reason, Branch.SAME_SIGN, gas=False, **base)
    return Classification(Verdict.PERMANENT, case, "same-sign-diagonal", Branch.SAME_SIGN, gas=True, **base)


def _opposite_sign(params: ExpParams, jac: JacobianSummary, c: CVector, base: dict) -> Classification:
    s = _scale(params)
    family = next((f for f, pat in _FAMILY_SIGNS.items() if pat == jac.signs), None)
    if family is None:
        return Classification(
            Verdict.NOT_PERMANENT, None, "jacobian-pattern-unmatched", Branch.OPPOSITE_SIGN, **base
        )
    if not _family_ordering(params, family):
        return Classification(
            Verdict.NOT_PERMANENT, None, "ordering-violated", Branch.OPPOSITE_SIGN, family=family, **base
        )
    sc = _signs_c(c, s)
    if family in ("C1", "C2"):
        a_case = sc[2] < 0 and sc[3] < 0
    else:
        a_case = sc[0] > 0 and sc[1] > 0
    if a_case:
        return Classification(
            Verdict.PERMANENT, CaseLabel(family + "a"), "c-signs", Branch.OPPOSITE_SIGN, family=family, **base
        )
    if any(sc == pattern for pattern, _, _ in _B_PATTERNS[family]):
        case = CaseLabel(family + "b")
        check = ratio_bound_check(params, c, case)
        if check.holds:
            return Classification(
                Verdict.PERMANENT, case, "ratio-below-bound", Branch.OPPOSITE_SIGN, L=check.L, family=family, **base
            )
        return Classification(
            Verdict.NOT_PERMANENT, None, "ratio-above-bound", Branch.OPPOSITE_SIGN, L=check.L, family=family, **base
        )
    if sc in _C_PATTERNS[family]:
        num, den = _slope(params, family)
        if _le(num, den, s) and sign(jac.trace, s) < 0:
            return Classification(
                Verdict.PERMANENT, CaseLabel(family + "c"), "slope-and-trace", Branch.OPPOSITE_SIGN,
                family=family, **base,
            )
        return Classification(
            Verdict.NOT_PERMANENT, None, "slope-or-trace-violated", Branch.OPPOSITE_SIGN, family=family, **base
        )
    return Classification(
        Verdict.NOT_PERMANENT, None, "c-signs-excluded", Branch.OPPOSITE_SIGN, family=family, **base
    )


# ---------------------------------------------------------------------------
# robust permanence


def robust_permanence(params: ExpParams) -> RobustResult:
    """Permanence that survives every small perturbation of the eight exponents."""
    jac = jacobian(params)
    s = _scale(params)
    if sign(jac.det, s, 2) <= 0:
        return RobustResult(False, None)
    a1, a2, a3, a4 = params.a
    b1, b2, b3, b4 = params.b
    sj = jac.signs
    sc = c_vector(params).signs(s)

    def chain(*xs) -> bool:
        return all(_lt(x, y, s) for x, y in zip(xs, xs[1:]))

    def l_inf_positive(case_b: bool) -> bool:
        value = _l_infinity_a(params)
        return sign(-value if case_b else value, s, 4) > 0

    if sj[0] < 0 and sj[3] < 0:
        return RobustResult(True, CaseLabel.A)
    if sj == (0, -1, 1, -1) and chain(a4, a2, a3):
        return RobustResult(True, CaseLabel.B1)
    if sj == (0, 1, -1, -1) and chain(a3, a2, a4):
        return RobustResult(True, CaseLabel.B2)
    if sj == (-1, 1, -1, 0) and chain(b2, b4, b1):
        return RobustResult(True, CaseLabel.B3)
    if sj == (-1, -1, 1, 0) and chain(b1, b4, b2):
        return RobustResult(True, CaseLabel.B4)
    if sj == (1, -1, 1, -1) and chain(a4, a2, a1, a3) and sc[2] < 0 and sc[3] < 0:
        if not chain(b1, b3, b4, b2) or l_inf_positive(False):
            return RobustResult(True, CaseLabel.C1A)
    if sj == (1, 1, -1, -1) and chain(a3, a2, a1, a4) and sc[2] < 0 and sc[3] < 0:
        if not chain(b2, b3, b4, b1) or l_inf_positive(True):
            return RobustResult(True, CaseLabel.C2A)
    if sj == (-1, -1, 1, 1) and chain(b1, b4, b3, b2) and sc[0] > 0 and sc[1] > 0:
        if not chain(a4, a1, a2, a3) or l_inf_positive(False):
            return RobustResult(True, CaseLabel.C3A)
    if sj == (-1, 1, -1, 1) and chain(b2, b4, b3, b1) and sc[0] > 0 and sc[1] > 0:
        if not chain(a3, a1, a2, a4) or l_inf_positive(True):
            return RobustResult(True, CaseLabel.C4A)
    return RobustResult(False, None)


# ---------------------------------------------------------------------------
# S-system entry point


def classify_s_system(spec: SSystemSpec) -> Classification:
    eqs = find_positive_equilibrium(spec)
    if eqs.kind is EquilibriumKind.NONE:
        return Classification(
            Verdict.DEGENERATE, None, "no-equilibrium", Branch.NO_EQUILIBRIUM, jacobian=None, c=None
        )
    params = to_exponential(spec, eqs.point)
    result = classify(params)
    return Classification(**{**result.__dict__, "equilibrium": eqs.point})
