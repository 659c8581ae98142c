"""Parameter representations of planar S-systems.

An S-system

    x1' = alpha1 x1^g11 x2^g12 - beta1 x1^h11 x2^h12
    x2' = alpha2 x1^g21 x2^g22 - beta2 x1^h21 x2^h22

with a positive equilibrium is conjugate (via a logarithmic change of
coordinates) to the exponential normal form

    u' = exp(a1 u + b1 v) - exp(a2 u + b2 v)
    v' = exp(a3 u + b3 v) - exp(a4 u + b4 v)

which is described by four points ``P_i = (a_i, b_i)`` in the plane.
Everything downstream works on :class:`ExpParams`.

Coordinates may be floats or exact rationals (``int`` / ``Fraction``).  With
all-rational input every derived quantity (Jacobian, c-vector, ...) stays
rational and the sign logic of the classifier is exact.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence, Tuple

from .numeric import Number, all_exact, is_exact, sign, to_exact

Point = Tuple[Number, Number]

EQUILIBRIUM_RTOL = 1e-10


class DegenerateConfiguration(ValueError):
    """Raised when all four points are collinear (c = 0)."""


def _check_finite(name: str, value) -> None:
    if is_exact(value):
        return
    if not math.isfinite(float(value)):
        raise ValueError(f"{name} must be finite, got {value!r}")


# ---------------------------------------------------------------------------
# original S-system


@dataclass(frozen=True)
class SSystemSpec:
    """Rate constants and real exponents of a planar S-system."""

    alpha1: float
    alpha2: float
    beta1: float
    beta2: float
    g11: float
    g12: float
    g21: float
    g22: float
    h11: float
    h12: float
    h21: float
    h22: float

    def __post_init__(self):
        for name in ("alpha1", "alpha2", "beta1", "beta2"):
            value = getattr(self, name)
            _check_finite(name, value)
            if not value > 0:
                raise ValueError(f"{name} must be positive, got {value!r}")
        for name in ("g11", "g12", "g21", "g22", "h11", "h12", "h21", "h22"):
            _check_finite(name, getattr(self, name))

    def rhs(self, x1: float, x2: float) -> Tuple[float, float]:
        return (
            self.alpha1 * x1**self.g11 * x2**self.g12 - self.beta1 * x1**self.h11 * x2**self.h12,
            self.alpha2 * x1**self.g21 * x2**self.g22 - self.beta2 * x1**self.h21 * x2**self.h22,
        )

    def monomials(self, x1: float, x2: float) -> Tuple[Tuple[float, float], Tuple[float, float]]:
        """The gain and loss terms of both rows, evaluated in log space."""
        l1, l2 = math.log(x1), math.log(x2)
        return (
            (
                math.exp(math.log(self.alpha1) + self.g11 * l1 + self.g12 * l2),
                math.exp(math.log(self.beta1) + self.h11 * l1 + self.h12 * l2),
            ),
            (
                math.exp(math.log(self.alpha2) + self.g21 * l1 + self.g22 * l2),
                math.exp(math.log(self.beta2) + self.h21 * l1 + self.h22 * l2),
            ),
        )


@dataclass(frozen=True)
class PositiveEquilibrium:
    x1_star: float
    x2_star: float

    def __post_init__(self):
        for name in ("x1_star", "x2_star"):
            value = getattr(self, name)
            _check_finite(name, value)
            if not value > 0:
                raise ValueError(f"{name} must be positive, got {value!r}")


class EquilibriumKind(enum.Enum):
    NONE = "none"
    UNIQUE = "unique"
    LINE = "line"


@dataclass(frozen=True)
class EquilibriumSet:
    """Solution set of the equilibrium equations.

    For ``LINE`` (which also covers the case where every positive point is an
    equilibrium) ``point`` is a deterministic representative: the point with
    ``log x1 = 0`` when the solution set allows it, else ``log x2 = 0``.
    """

    kind: EquilibriumKind
    point: Optional[PositiveEquilibrium] = None


def find_positive_equilibrium(spec: SSystemSpec) -> EquilibriumSet:
    """Positive equilibria of an S-system.

    Equating both monomials of each row gives a linear system in
    ``(log x1, log x2)``; the set of positive equilibria is empty, a single
    point, or infinite.
    """
    m11, m12 = spec.g11 - spec.h11, spec.g12 - spec.h12
    m21, m22 = spec.g21 - spec.h21, spec.g22 - spec.h22
    r1 = math.log(spec.beta1) - math.log(spec.alpha1)
    r2 = math.log(spec.beta2) - math.log(spec.alpha2)
    scale = max(abs(float(m)) for m in (m11, m12, m21, m22))
    rscale = max(scale, abs(r1), abs(r2))

    det = m11 * m22 - m12 * m21
    if sign(det, scale, 2) != 0:
        y1 = (r1 * m22 - m12 * r2) / det
        y2 = (m11 * r2 - r1 * m21) / det
        return EquilibriumSet(EquilibriumKind.UNIQUE, _from_logs(y1, y2))

    rows = [(m11, m12, r1), (m21, m22, r2)]
    nonzero = [row for row in rows if sign(row[0], scale) or sign(row[1], scale)]
    if not nonzero:
        if sign(r1, rscale) == 0 and sign(r2, rscale) == 0:
            return EquilibriumSet(EquilibriumKind.LINE, PositiveEquilibrium(1.0, 1.0))
        return EquilibriumSet(EquilibriumKind.NONE)
    # rank one: consistent iff the augmented matrix has rank one too
    for m1, m2, r in rows:
        if sign(m1, scale) == 0 and sign(m2, scale) == 0 and sign(r, rscale) != 0:
            return EquilibriumSet(EquilibriumKind.NONE)
    minor_1 = m11 * r2 - r1 * m21
    minor_2 = m12 * r2 - r1 * m22
    if sign(minor_1, rscale, 2) or sign(minor_2, rscale, 2):
        return EquilibriumSet(EquilibriumKind.NONE)
    m1, m2, r = max(nonzero, key=lambda row: abs(row[0]) + abs(row[1]))
    if sign(m2, scale) != 0:
        point = _from_logs(0.0, r / m2)
    else:
        point = _from_logs(r / m1, 0.0)
    return EquilibriumSet(EquilibriumKind.LINE, point)


def _from_logs(y1: float, y2: float) -> PositiveEquilibrium:
    try:
        return PositiveEquilibrium(math.exp(y1), math.exp(y2))
    except OverflowError as exc:
        raise ValueError(f"equilibrium log-coordinates ({y1}, {y2}) overflow") from exc


def equilibrium_residuals(spec: SSystemSpec, eq: PositiveEquilibrium) -> Tuple[float, float]:
    """Relative residuals of both rows at ``eq``."""
    out = []
    for gain, loss in spec.monomials(eq.x1_star, eq.x2_star):
        out.append(abs(gain - loss) / max(gain, loss))
    return out[0], out[1]


# ---------------------------------------------------------------------------
# exponential normal form


@dataclass(frozen=True)
class ExpParams:
    """Exponents ``a = (a1..a4)`` and ``b = (b1..b4)``; ``P_i = (a_i, b_i)``."""

    a: Tuple[Number, Number, Number, Number]
    b: Tuple[Number, Number, Number, Number]

    def __post_init__(self):
        a, b = tuple(self.a), tuple(self.b)
        if len(a) != 4 or len(b) != 4:
            raise ValueError("ExpParams needs four a's and four b's")
        for i, (ai, bi) in enumerate(zip(a, b), start=1):
            _check_finite(f"a{i}", ai)
            _check_finite(f"b{i}", bi)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)

    @classmethod
    def from_points(cls, points: Sequence[Point]) -> "ExpParams":
        return cls(tuple(p[0] for p in points), tuple(p[1] for p in points))

    @property
    def points(self) -> Tuple[Point, Point, Point, Point]:
        return tuple(zip(self.a, self.b))  # type: ignore[return-value]

    @property
    def p1(self) -> Point:
        return (self.a[0], self.b[0])

    @property
    def p2(self) -> Point:
        return (self.a[1], self.b[1])

    @property
    def p3(self) -> Point:
        return (self.a[2], self.b[2])

    @property
    def p4(self) -> Point:
        return (self.a[3], self.b[3])

    @property
    def exact(self) -> bool:
        return all_exact(self.a + self.b)

    @property
    def scale(self) -> float:
        return max(abs(float(v)) for v in self.a + self.b)

    def to_exact(self) -> "ExpParams":
        return ExpParams(tuple(map(to_exact, self.a)), tuple(map(to_exact, self.b)))

    def to_float(self) -> "ExpParams":
        return ExpParams(tuple(map(float, self.a)), tuple(map(float, self.b)))

    def replace(self, **coords) -> "ExpParams":
        """Copy with individual coordinates replaced, e.g. ``replace(b2=34.9)``."""
        a, b = list(self.a), list(self.b)
        for key, value in coords.items():
            if len(key) != 2 or key[0] not in "ab" or key[1] not in "1234":
                raise KeyError(key)
            (a if key[0] == "a" else b)[int(key[1]) - 1] = value
        return ExpParams(tuple(a), tuple(b))

    def is_finite(self) -> bool:
        return all(is_exact(v) or math.isfinite(v) for v in self.a + self.b)


def to_exponential(spec: SSystemSpec, eq: PositiveEquilibrium) -> ExpParams:
    """Transform an S-system around a positive equilibrium into normal form."""
    r1, r2 = equilibrium_residuals(spec, eq)
    if r1 > EQUILIBRIUM_RTOL or r2 > EQUILIBRIUM_RTOL:
        raise ValueError(
            f"({eq.x1_star}, {eq.x2_star}) is not an equilibrium (relative residuals {r1:.3g}, {r2:.3g})"
        )
    l1, l2 = math.log(eq.x1_star), math.log(eq.x2_star)
    gamma1 = math.exp(math.log(spec.alpha1) + (spec.g11 - 1) * l1 + spec.g12 * l2)
    gamma2 = math.exp(math.log(spec.alpha2) + spec.g21 * l1 + (spec.g22 - 1) * l2)
    a = (
        gamma1 * (spec.g11 - 1),
        gamma1 * (spec.h11 - 1),
        gamma1 * spec.g21,
        gamma1 * spec.h21,
    )
    b = (
        gamma2 * spec.g12,
        gamma2 * spec.h12,
        gamma2 * (spec.g22 - 1),
        gamma2 * (spec.h22 - 1),
    )
    return ExpParams(a, b)


def log_coordinates(spec: SSystemSpec, eq: PositiveEquilibrium, x1: float, x2: float) -> Tuple[float, float]:
    """Map a positive state of the S-system to ``(u, v)``."""
    l1, l2 = math.log(eq.x1_star), math.log(eq.x2_star)
    gamma1 = math.exp(math.log(spec.alpha1) + (spec.g11 - 1) * l1 + spec.g12 * l2)
    gamma2 = math.exp(math.log(spec.alpha2) + spec.g21 * l1 + (spec.g22 - 1) * l2)
    return math.log(x1 / eq.x1_star) / gamma1, math.log(x2 / eq.x2_star) / gamma2


# ---------------------------------------------------------------------------
# Jacobian, signed areas, c-vector


@dataclass(frozen=True)
class JacobianSummary:
    j11: Number
    j12: Number
    j21: Number
    j22: Number
    det: Number
    trace: Number
    sign_pattern: Tuple[Tuple[int, int], Tuple[int, int]]

    @property
    def matrix(self) -> Tuple[Tuple[Number, Number], Tuple[Number, Number]]:
        return ((self.j11, self.j12), (self.j21, self.j22))

    @property
    def signs(self) -> Tuple[int, int, int, int]:
        (s11, s12), (s21, s22) = self.sign_pattern
        return s11, s12, s21, s22


def jacobian(params: ExpParams) -> JacobianSummary:
    """Jacobian of the normal form at the origin."""
    a1, a2, a3, a4 = params.a
    b1, b2, b3, b4 = params.b
    j11, j12, j21, j22 = a1 - a2, b1 - b2, a3 - a4, b3 - b4
    scale = params.scale
    pattern = ((sign(j11, scale), sign(j12, scale)), (sign(j21, scale), sign(j22, scale)))
    return JacobianSummary(j11, j12, j21, j22, j11 * j22 - j12 * j21, j11 + j22, pattern)


def signed_area(pi: Point, pj: Point, pk: Point) -> Number:
    """Twice the signed area of triangle ``pi pj pk``: ``det(pj - pi, pk - pi)``."""
    return (pj[0] - pi[0]) * (pk[1] - pi[1]) - (pj[1] - pi[1]) * (pk[0] - pi[0])


@dataclass(frozen=True)
class CVector:
    c1: Number
    c2: Number
    c3: Number
    c4: Number

    def as_tuple(self) -> Tuple[Number, Number, Number, Number]:
        return (self.c1, self.c2, self.c3, self.c4)

    def __iter__(self):
        return iter(self.as_tuple())

    def __getitem__(self, i: int) -> Number:
        return self.as_tuple()[i]

    def signs(self, scale: float = 0.0) -> Tuple[int, int, int, int]:
        return tuple(sign(c, scale, 2) for c in self.as_tuple())  # type: ignore[return-value]


def c_vector(params: ExpParams) -> CVector:
    """``c = (D(243), D(134), D(142), D(123))``, orthogonal to ``a``, ``b`` and ``1``."""
    p1, p2, p3, p4 = params.points
    c = CVector(
        signed_area(p2, p4, p3),
        signed_area(p1, p3, p4),
        signed_area(p1, p4, p2),
        signed_area(p1, p2, p3),
    )
    _check_c_identities(params, c)
    return c


def _check_c_identities(params: ExpParams, c: CVector) -> None:
    a1, a2, a3, a4 = params.a
    b1, b2, b3, b4 = params.b
    det = (a1 - a2) * (b3 - b4) - (b1 - b2) * (a3 - a4)
    scale = 1.0 + params.scale
    checks = (
        (c.c1 + c.c2 + c.c3 + c.c4, 2),
        (c.c1 + c.c2 - det, 2),
        (c.c3 + c.c4 + det, 2),
        (sum(ci * ai for ci, ai in zip(c, params.a)), 3),
        (sum(ci * bi for ci, bi in zip(c, params.b)), 3),
    )
    for value, degree in checks:
        if is_exact(value):
            ok = value == 0
        else:
            ok = abs(value) <= 1e-12 * scale**degree
        if not ok:
            raise ArithmeticError(f"c-vector identity violated by {value!r}")


# ---------------------------------------------------------------------------
# geometry of the sign pattern of c


class GeometryKind(enum.Enum):
    QUADRANGLE = "quadrangle"
    TRIANGLE_INTERIOR = "triangle-interior"
    TRIANGLE_EDGE = "triangle-edge"
    COINCIDENT_VERTEX = "coincident-vertex"


@dataclass(frozen=True)
class SignGeometry:
    """Relative position of ``P1..P4`` read off the signs of ``c``.

    ``roles`` uses 1-based point labels:

    * quadrangle: ``diagonals`` (two index pairs);
    * triangle interior: ``interior`` point and ``triangle``;
    * triangle edge: ``on_edge`` point, ``edge`` it lies in, ``triangle``;
    * coincident vertex: ``coincident`` pair and ``triangle``.
    """

    kind: GeometryKind
    pattern: Tuple[int, int, int, int]
    roles: dict


def sign_pattern_geometry(c: CVector, scale: float = 0.0) -> SignGeometry:
    s = c.signs(scale)
    idx = (1, 2, 3, 4)
    pos = [i for i in idx if s[i - 1] > 0]
    neg = [i for i in idx if s[i - 1] < 0]
    zero = [i for i in idx if s[i - 1] == 0]
    if not pos and not neg:
        raise DegenerateConfiguration("c = 0: the four points are collinear")
    if len(pos) == 2 and len(neg) == 2:
        return SignGeometry(GeometryKind.QUADRANGLE, s, {"diagonals": (tuple(pos), tuple(neg))})
    if len(zero) == 2:
        pair = tuple(i for i in idx if i not in zero)
        tri = tuple(sorted(set(idx) - {pair[1]}))
        return SignGeometry(GeometryKind.COINCIDENT_VERTEX, s, {"coincident": pair, "triangle": tri})
    lone = pos[0] if len(pos) == 1 else neg[0]
    if len(zero) == 1:
        edge = tuple(i for i in idx if i not in zero and i != lone)
        tri = tuple(i for i in idx if i != lone)
        return SignGeometry(
            GeometryKind.TRIANGLE_EDGE, s, {"on_edge": lone, "edge": edge, "triangle": tri}
        )
    tri = tuple(i for i in idx if i != lone)
    return SignGeometry(GeometryKind.TRIANGLE_INTERIOR, s, {"interior": lone, "triangle": tri})


# ---------------------------------------------------------------------------
# symmetries of the square acting on the normal form


class Dihedral(enum.Enum):
    """Elements of D4 acting on the ``(u, v)`` plane.

    ``r_k`` rotates by ``k * 90`` degrees counter-clockwise; ``s0``..``s3``
    reflect in the u-axis, the line ``u = v``, the v-axis and ``u = -v``.
    """

    R0 = "r0"
    R1 = "r1"
    R2 = "r2"
    R3 = "r3"
    S0 = "s0"
    S1 = "s1"
    S2 = "s2"
    S3 = "s3"

    @property
    def matrix(self) -> Tuple[Tuple[int, int], Tuple[int, int]]:
        return _D4_MATRICES[self]

    def __matmul__(self, other: "Dihedral") -> "Dihedral":
        return compose(self, other)


DihedralElement = Dihedral

_D4_MATRICES = {
    Dihedral.R0: ((1, 0), (0, 1)),
    Dihedral.R1: ((0, -1), (1, 0)),
    Dihedral.R2: ((-1, 0), (0, -1)),
    Dihedral.R3: ((0, 1), (-1, 0)),
    Dihedral.S0: ((1, 0), (0, -1)),
    Dihedral.S1: ((0, 1), (1, 0)),
    Dihedral.S2: ((-1, 0), (0, 1)),
    Dihedral.S3: ((0, -1), (-1, 0)),
}
_D4_BY_MATRIX = {m: g for g, m in _D4_MATRICES.items()}


def compose(g: Dihedral, h: Dihedral) -> Dihedral:
    """``g o h``: apply ``h`` first, then ``g``."""
    (p, q), (r, s) = g.matrix
    (w, x), (y, z) = h.matrix
    product = ((p * w + q * y, p * x + q * z), (r * w + s * y, r * x + s * z))
    return _D4_BY_MATRIX[product]


def inverse(g: Dihedral) -> Dihedral:
    (p, q), (r, s) = g.matrix
    return _D4_BY_MATRIX[((p, r), (q, s))]


def _signed_pick(row: Tuple[int, int]) -> Tuple[int, int]:
    """Column and sign of the single nonzero entry of a signed-permutation row."""
    return (0, row[0]) if row[0] else (1, row[1])


def apply_dihedral(g: Dihedral, params: ExpParams) -> ExpParams:
    """Parameters of the system rewritten in the coordinates ``w' = M w``.

    With ``M`` orthogonal, ``P . w = (M P) . w'``, so every point maps to
    ``M P``; and ``w'_i' = sign * w_j'`` turns equation ``j`` into equation
    ``i``, swapping its two monomials when ``sign = -1``.
    """
    m = g.matrix
    picks = [_signed_pick(m[0]), _signed_pick(m[1])]

    def move(point: Point) -> Point:
        return tuple(point[col] if sg > 0 else -point[col] for col, sg in picks)  # type: ignore[return-value]

    pts = params.points
    new = []
    for col, sg in picks:
        first, second = pts[2 * col], pts[2 * col + 1]
        if sg < 0:
            first, second = second, first
        new.extend((move(first), move(second)))
    return ExpParams.from_points(new)


# c maps as c' = sign * c[perm]
C_ACTION = {
    Dihedral.R0: ((1, 2, 3, 4), 1),
    Dihedral.R1: ((4, 3, 1, 2), -1),
    Dihedral.R2: ((2, 1, 4, 3), 1),
    Dihedral.R3: ((3, 4, 2, 1), -1),
    Dihedral.S0: ((1, 2, 4, 3), 1),
    Dihedral.S1: ((3, 4, 1, 2), -1),
    Dihedral.S2: ((2, 1, 3, 4), 1),
    Dihedral.S3: ((4, 3, 2, 1), -1),
}


def act_on_c(g: Dihedral, c: CVector) -> CVector:
    """Induced action of ``g`` on the c-vector."""
    perm, sg = C_ACTION[g]
    return CVector(*(sg * c[i - 1] for i in perm))


def as_params(a: Sequence, b: Sequence, exact: bool = False) -> ExpParams:
    p = ExpParams(tuple(a), tuple(b))
    return p.to_exact() if exact else p


__all__ = [
    "CVector",
    "C_ACTION",
    "DegenerateConfiguration",
    "Dihedral",
    "DihedralElement",
    "EquilibriumKind",
    "EquilibriumSet",
    "ExpParams",
    "GeometryKind",
    "JacobianSummary",
    "PositiveEquilibrium",
    "SSystemSpec",
    "SignGeometry",
    "act_on_c",
    "apply_dihedral",
    "c_vector",
    "compose",
    "equilibrium_residuals",
    "find_positive_equilibrium",
    "inverse",
    "jacobian",
    "log_coordinates",
    "sign_pattern_geometry",
    "signed_area",
    "to_exponential",
]
