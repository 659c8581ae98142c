"""Named parameter families and a gallery with one instance per case label."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Tuple

from .classifier import CaseLabel, Classification, RobustResult, Verdict
from .numeric import Number, sign
from .params import ExpParams, SSystemSpec
from .replicator import cycle_eigenvalue_balance, embed


@dataclass(frozen=True)
class Expected:
    """What the classifier must return.

    ``case`` is compared only when ``check_case`` is set; ``robust_case``
    is compared against the robust-permanence test when not ``None``.
    """

    verdict: Verdict
    case: Optional[CaseLabel] = None
    check_case: bool = True
    robust_case: Optional[CaseLabel] = None

    def matches(self, result: Classification, robust: Optional[RobustResult] = None) -> bool:
        if result.verdict is not self.verdict:
            return False
        if self.check_case and result.case is not self.case:
            return False
        if self.robust_case is not None:
            return robust is not None and robust.robust and robust.case is self.robust_case
        return True


@dataclass(frozen=True)
class Scenario:
    name: str
    params: ExpParams
    expected: Expected
    provenance: str
    arguments: Dict[str, Number] = field(default_factory=dict)

    def to_toml(self) -> str:
        """Input document for the command-line front end."""
        lines = [f"# {self.name}: {self.provenance}", "[exp_params]"]
        lines.append("a = [" + ", ".join(_toml_number(x) for x in self.params.a) + "]")
        lines.append("b = [" + ", ".join(_toml_number(x) for x in self.params.b) + "]")
        return "\n".join(lines) + "\n"


def _toml_number(x: Number) -> str:
    if isinstance(x, Fraction):
        return str(x.numerator) if x.denominator == 1 else f'"{x.numerator}/{x.denominator}"'
    if isinstance(x, int):
        return str(x)
    return repr(float(x))


def _positive_rate(k: Number) -> None:
    if not (isinstance(k, (int, float, Fraction)) and math.isfinite(k) and k > 0):
        raise ValueError(f"k must be a positive finite number, got {k!r}")


# ---------------------------------------------------------------------------
# Selkov glycolysis model:  x' = 1 - x y^g,  y' = k (x y^g - y)


def selkov_params(k: Number, gamma: Number) -> ExpParams:
    _positive_rate(k)
    return ExpParams((-1, 0, 1, 0), (0, k * gamma, k * (gamma - 1), 0))


def selkov_s_system(k: Number, gamma: Number) -> SSystemSpec:
    _positive_rate(k)
    return SSystemSpec(1.0, k, 1.0, k, 0.0, 0.0, 1.0, gamma, 1.0, gamma, 0.0, 1.0)


def selkov(k: Number, gamma: Number) -> Scenario:
    """Permanent exactly when ``gamma <= 1``: case A below 1, case B2 at 1."""
    params = selkov_params(k, gamma)
    if gamma < 1:
        expected = Expected(Verdict.PERMANENT, CaseLabel.A)
    elif gamma == 1:
        expected = Expected(Verdict.PERMANENT, CaseLabel.B2)
    else:
        expected = Expected(Verdict.NOT_PERMANENT, check_case=False)
    return Scenario(
        f"selkov(k={k}, gamma={gamma})",
        params,
        expected,
        "Selkov glycolytic oscillator, unit rates in the first equation",
        {"k": k, "gamma": gamma},
    )


# ---------------------------------------------------------------------------
# Lotka reactions with generalized mass action:  x' = x^a - x y^b,  y' = k (x y^b - y)


def lotka_params(k: Number, alpha: Number, beta: Number) -> ExpParams:
    _positive_rate(k)
    return ExpParams((alpha - 1, 0, 1, 0), (0, k * beta, k * (beta - 1), 0))


def lotka_s_system(k: Number, alpha: Number, beta: Number) -> SSystemSpec:
    _positive_rate(k)
    return SSystemSpec(1.0, k, 1.0, k, alpha, 0.0, 1.0, beta, 1.0, beta, 0.0, 1.0)


def lotka_threshold(beta: Number) -> float:
    """Smallest rate beyond which the diagonal ``beta = alpha - 1`` is permanent."""
    beta = float(beta)
    return beta * (1.0 - beta) ** ((1.0 - beta) / beta)


def lotka_permanent(k: Number, alpha: Number, beta: Number) -> bool:
    """Closed-form permanence region in the exponent plane for a given rate."""
    scale = max(abs(float(alpha)), abs(float(beta)), 1.0)
    if alpha <= 1 and beta <= 1 and (alpha, beta) != (1, 1) and sign(alpha * beta - (alpha - 1), scale, 2) > 0:
        return True
    if not 1 < alpha < 2:
        return False
    gap = sign(beta - (alpha - 1), scale)
    if gap > 0 and beta < 1:
        return True
    return gap == 0 and k > lotka_threshold(beta)


def lotka_permanent_unit_rate(alpha: Number, beta: Number) -> bool:
    """The region above at ``k = 1``, where the diagonal is always included."""
    scale = max(abs(float(alpha)), abs(float(beta)), 1.0)
    if alpha <= 1 and beta <= 1 and (alpha, beta) != (1, 1) and sign(alpha * beta - (alpha - 1), scale, 2) > 0:
        return True
    return 1 < alpha < 2 and sign(beta - (alpha - 1), scale) >= 0 and beta < 1


def lotka(k: Number, alpha: Number, beta: Number) -> Scenario:
    params = lotka_params(k, alpha, beta)
    scale = max(abs(float(alpha)), abs(float(beta)), 1.0)
    if lotka_permanent(k, alpha, beta):
        expected = Expected(Verdict.PERMANENT, check_case=False)
    elif sign(alpha * beta - alpha + 1, scale, 2) == 0:
        # zero Jacobian determinant: the equilibrium is not isolated
        expected = Expected(Verdict.DEGENERATE, check_case=False)
    else:
        expected = Expected(Verdict.NOT_PERMANENT, check_case=False)
    return Scenario(
        f"lotka(k={k}, alpha={alpha}, beta={beta})",
        params,
        expected,
        "Lotka reactions with generalized mass-action kinetics",
        {"k": k, "alpha": alpha, "beta": beta},
    )


# ---------------------------------------------------------------------------
# Bautin-point family with three nested limit cycles

BAUTIN_A = (0, -8, 10, -20)
BAUTIN_B = (0, 35, 20, 28)


def three_cycle(eps: Number = 0, mu: Number = 0) -> Scenario:
    """``b2 = 35 - eps`` and ``a2 = -8 - mu``; at ``eps = mu = 0`` both L1 and L_inf vanish."""
    if eps < 0 or mu < 0:
        raise ValueError("eps and mu must be non-negative")
    a = (BAUTIN_A[0], BAUTIN_A[1] - mu, BAUTIN_A[2], BAUTIN_A[3])
    b = (BAUTIN_B[0], BAUTIN_B[1] - eps, BAUTIN_B[2], BAUTIN_B[3])
    params = ExpParams(a, b)
    # the behaviour at infinity follows the corner cycle of the embedded game
    cycle = (1, 3, 2, 4)
    balance = sign(cycle_eigenvalue_balance(embed(params), cycle), params.scale, 4)
    verdict = {1: Verdict.PERMANENT, 0: Verdict.UNDETERMINED, -1: Verdict.NOT_PERMANENT}[balance]
    expected = Expected(verdict, CaseLabel.HET_A)
    return Scenario(
        f"three-cycle(eps={eps}, mu={mu})", params, expected, "Bautin point with trace and focal value zero",
        {"eps": eps, "mu": mu},
    )


# ---------------------------------------------------------------------------
# gallery

_P = Verdict.PERMANENT
_N = Verdict.NOT_PERMANENT
_L = CaseLabel

# (name, a, b, verdict, case, robust case, construction note)
_GALLERY: Tuple[Tuple, ...] = (
    ("A", (-1, 0, 1, 0), (0, 0, -1, 0), _P, _L.A, _L.A, "Selkov k=1 gamma=0; both diagonal entries negative"),
    ("B1", (0, 0, 2, 0), (0, 1, -1, 0), _P, _L.B1, None, "J11 = 0 with a4 <= a2 <= a3"),
    ("B2", (-1, 0, 1, 0), (0, 1, 0, 0), _P, _L.B2, None, "Selkov k=1 gamma=1"),
    ("B3", (-1, 0, -1, 0), (1, -1, 0, 0), _P, _L.B2, _L.B3, "J22 = 0 with b2 < b4 < b1"),
    ("B4", (-1, 0, 1, 0), (-1, 1, 0, 0), _P, _L.B2, _L.B4, "J22 = 0 with b1 < b4 < b2"),
    ("HetA", (0, -8, 10, -20), (0, Fraction(349, 10), 20, 28), _P, _L.HET_A, _L.C1A, "Bautin family, b2 = 34.9"),
    ("HetA-escape", (0, -8, 10, -20), (0, Fraction(351, 10), 20, 28), _N, _L.HET_A, None, "Bautin family, b2 = 35.1"),
    ("HetB", (0, -8, -20, 10), (0, Fraction(-349, 10), -28, -20), _P, _L.HET_B, _L.C2A, "HetA reflected, u -> -u"),
    ("C1a", (2, 0, 4, 0), (0, 3, -1, 0), _P, _L.C1A, None, "P1 inside triangle P2 P3 P4, sgn c = (+,-,-,-)"),
    ("C1a-quadrangle", (1, 0, 4, -4), (0, 3, -1, 3), _P, _L.C1A, None, "quadrangle, sgn c = (+,+,-,-)"),
    ("C1b", (1, 0, 2, 0), (0, 1, -1, 0), _P, _L.C1B, None, "c3 = 0, ratio bound below"),
    ("C1c", (1, 0, 1, -1), (0, 2, 0, 3), _P, _L.C1C, None, "P1 = P3"),
    ("C2a", (2, 0, 0, 4), (0, -3, 0, 1), _P, _L.C2A, None, "C1a reflected, u -> -u"),
    ("C2b", (1, 0, 0, 2), (0, -1, 0, 1), _P, _L.C2B, None, "C1b reflected, u -> -u"),
    ("C2c", (1, 0, -1, 1), (0, -2, -3, 0), _P, _L.C2C, None, "C1c reflected, u -> -u"),
    ("C3a", (0, 1, 0, -3), (0, 4, 2, 0), _P, _L.C3A, None, "C1a rotated a quarter turn"),
    ("C3b", (0, 1, 0, -1), (0, 2, 1, 0), _P, _L.C3B, None, "C1b rotated a quarter turn"),
    ("C3c", (-3, 0, 0, -2), (-1, 1, 1, 0), _P, _L.C3C, None, "C1c rotated a quarter turn"),
    ("C4a", (-1, 0, 0, 3), (4, 0, 2, 0), _P, _L.C4A, None, "C1a reflected in the diagonal"),
    ("C4b", (-1, 0, 0, 1), (2, 0, 1, 0), _P, _L.C4B, None, "C1b reflected in the diagonal"),
    ("C4c", (0, 3, 0, 2), (1, -1, 1, 0), _P, _L.C4C, None, "C1c reflected in the diagonal"),
)


def case_gallery() -> List[Scenario]:
    """Small-integer (or rational) instances covering every case label."""
    out = []
    for name, a, b, verdict, case, robust, note in _GALLERY:
        out.append(Scenario(name, ExpParams(a, b), Expected(verdict, case, True, robust), note))
    return out


def gallery_labels() -> set:
    """Labels the gallery exercises, through either test."""
    labels = set()
    for s in case_gallery():
        if s.expected.case is not None:
            labels.add(s.expected.case)
        if s.expected.robust_case is not None:
            labels.add(s.expected.robust_case)
    return labels


def by_name(name: str, **kwargs) -> Scenario:
    """Look up a named family (``selkov``, ``lotka``, ``three-cycle``) or gallery entry."""
    key = name.lower().replace("_", "-")
    if key == "selkov":
        return selkov(kwargs.get("k", 1), kwargs.get("gamma", 0.5))
    if key == "lotka":
        return lotka(kwargs.get("k", 1), kwargs.get("alpha", 1.5), kwargs.get("beta", 0.75))
    if key in ("three-cycle", "bautin"):
        return three_cycle(kwargs.get("eps", 0), kwargs.get("mu", 0))
    for s in case_gallery():
        if s.name.lower() == key:
            return s
    raise KeyError(f"unknown scenario {name!r}")


SCENARIO_NAMES = ("selkov", "lotka", "three-cycle") + tuple(g[0] for g in _GALLERY)


__all__ = [
    "BAUTIN_A",
    "BAUTIN_B",
    "Expected",
    "SCENARIO_NAMES",
    "Scenario",
    "by_name",
    "case_gallery",
    "gallery_labels",
    "lotka",
    "lotka_params",
    "lotka_permanent",
    "lotka_permanent_unit_rate",
    "lotka_s_system",
    "lotka_threshold",
    "selkov",
    "selkov_params",
    "selkov_s_system",
    "three_cycle",
]
