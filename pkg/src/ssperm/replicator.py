"""Four-strategy replicator embedding of the exponential normal form.

With ``z_i = exp(a_i u + b_i v)`` and ``x = z / sum(z)`` the planar system
becomes the replicator equation ``x_i' = x_i [(A x)_i - x.A x]`` on the
simplex, restricted to the level set ``Q(x) = prod x_i^{c_i} = 1``.  This
module builds ``A``, evaluates ``Q`` and the field, and inventories the
boundary: corner and edge equilibria with their eigenvalues, the pieces of
the simplex boundary that belong to the closure of ``{Q = 1}``, and the
monotonicity of the flow on facets.

Indices are 1-based throughout to match the strategy labels ``E1..E4``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

from .numeric import Number, is_exact, sign
from .params import (
    CVector,
    DegenerateConfiguration,
    ExpParams,
    SignGeometry,
    c_vector,
    jacobian,
    sign_pattern_geometry,
)

SIMPLEX_TOL = 1e-12

Matrix = Tuple[Tuple[Number, ...], ...]


@dataclass(frozen=True)
class SimplexState:
    x1: float
    x2: float
    x3: float
    x4: float

    def __post_init__(self):
        xs = self.as_tuple()
        if any(not math.isfinite(float(v)) for v in xs):
            raise ValueError("simplex coordinates must be finite")
        if any(float(v) < -SIMPLEX_TOL for v in xs):
            raise ValueError(f"negative simplex coordinate in {xs}")
        if abs(float(sum(xs)) - 1.0) > SIMPLEX_TOL:
            raise ValueError(f"simplex coordinates sum to {float(sum(xs))!r}, not 1")

    @classmethod
    def normalized(cls, values: Sequence[float]) -> "SimplexState":
        """Clip tiny negatives to zero and rescale to sum one."""
        vals = [max(float(v), 0.0) for v in values]
        total = math.fsum(vals)
        if not total > 0:
            raise ValueError("cannot normalize the zero vector")
        return cls(*(v / total for v in vals))

    @classmethod
    def corner(cls, k: int) -> "SimplexState":
        return cls(*(1.0 if i == k else 0.0 for i in range(1, 5)))

    def as_tuple(self) -> Tuple[float, float, float, float]:
        return (self.x1, self.x2, self.x3, self.x4)

    def __iter__(self):
        return iter(self.as_tuple())

    def __getitem__(self, i: int) -> float:
        return self.as_tuple()[i]

    @property
    def support(self) -> Tuple[int, ...]:
        return tuple(i + 1 for i, v in enumerate(self.as_tuple()) if v > 0)


@dataclass(frozen=True)
class ReplicatorSystem:
    """Payoff matrix with zero diagonal, its c-vector and the source parameters."""

    matrix: Matrix
    c: CVector
    source: ExpParams

    def __post_init__(self):
        if any(self.matrix[i][i] != 0 for i in range(4)):
            raise ValueError("replicator matrix must have a zero diagonal")

    def entry(self, i: int, j: int) -> Number:
        """``a_ij`` with 1-based indices."""
        return self.matrix[i - 1][j - 1]

    def float_matrix(self) -> List[List[float]]:
        return [[float(v) for v in row] for row in self.matrix]

    @property
    def scale(self) -> float:
        return max(abs(float(v)) for row in self.matrix for v in row)


def embed(params: ExpParams) -> ReplicatorSystem:
    """The reduced replicator matrix of the normal form."""
    a1, a2, a3, a4 = params.a
    b1, b2, b3, b4 = params.b
    zero = a1 - a1
    matrix = (
        (zero, a2 - a1, b1 - b3, b4 - b1),
        (a2 - a1, zero, b2 - b3, b4 - b2),
        (a3 - a1, a2 - a3, zero, b4 - b3),
        (a4 - a1, a2 - a4, b4 - b3, zero),
    )
    return ReplicatorSystem(matrix, c_vector(params), params)


def payoffs(matrix: Sequence[Sequence[float]], x: Sequence[float]) -> List[float]:
    return [math.fsum(row[j] * x[j] for j in range(len(x))) for row in matrix]


def vector_field(sys: ReplicatorSystem, x: SimplexState) -> Tuple[float, float, float, float]:
    m = sys.float_matrix()
    xs = [float(v) for v in x]
    ax = payoffs(m, xs)
    mean = math.fsum(xi * axi for xi, axi in zip(xs, ax))
    return tuple(xi * (axi - mean) for xi, axi in zip(xs, ax))  # type: ignore[return-value]


def log_invariant_q(sys: ReplicatorSystem, x: SimplexState) -> float:
    """``sum c_i log x_i``; raises for boundary states."""
    if any(float(v) <= 0 for v in x):
        raise ValueError("Q is only defined in the interior of the simplex")
    return math.fsum(float(ci) * math.log(float(xi)) for ci, xi in zip(sys.c, x))


def invariant_q(sys: ReplicatorSystem, x: SimplexState) -> float:
    """The constant of motion ``prod x_i^{c_i}``, evaluated in log space."""
    return math.exp(log_invariant_q(sys, x))


def chart_weights(params: ExpParams, u: float, v: float) -> List[float]:
    """Softmax of ``a_i u + b_i v`` as a plain list."""
    logs = [float(ai) * u + float(bi) * v for ai, bi in zip(params.a, params.b)]
    top = max(logs)
    z = [math.exp(s - top) for s in logs]
    total = math.fsum(z)
    return [zi / total for zi in z]


def chart_to_simplex(params: ExpParams, u: float, v: float) -> SimplexState:
    return SimplexState.normalized(chart_weights(params, u, v))


# ---------------------------------------------------------------------------
# equilibria on the boundary


def _is_nonpositive(value: float, scale: float) -> bool:
    return sign(value, scale, 2) <= 0


def corner_eigenvalues(sys: ReplicatorSystem, k: int) -> Dict[int, Number]:
    """Eigenvalue at ``E_k`` toward each other corner ``E_l``: ``a_lk``."""
    if k not in (1, 2, 3, 4):
        raise ValueError(f"corner index must be 1..4, got {k}")
    return {l: sys.entry(l, k) for l in range(1, 5) if l != k}


def corner_saturated(sys: ReplicatorSystem, k: int) -> bool:
    return all(sign(v, sys.scale) <= 0 for v in corner_eigenvalues(sys, k).values())


@dataclass(frozen=True)
class EdgeEquilibrium:
    """Equilibrium in the relative interior of edge ``(i, j)``.

    ``continuum`` marks an edge of equilibria (``a_ij = a_ji = 0``); its
    ``coords`` are then the midpoint.
    """

    edge: Tuple[int, int]
    coords: SimplexState
    internal_eigenvalue: float
    external_eigenvalues: Dict[int, float]
    saturated: bool
    continuum: bool = False


def _external_at(m: List[List[float]], x: List[float], k: int) -> float:
    ax = payoffs(m, x)
    mean = math.fsum(xi * axi for xi, axi in zip(x, ax))
    return ax[k - 1] - mean


def external_eigenvalue(sys: ReplicatorSystem, i: int, j: int, k: int) -> float:
    """``Gamma_ij^k = (a_ki a_ij + a_kj a_ji - a_ij a_ji) / (a_ij + a_ji)``."""
    aij, aji = float(sys.entry(i, j)), float(sys.entry(j, i))
    aki, akj = float(sys.entry(k, i)), float(sys.entry(k, j))
    return (aki * aij + akj * aji - aij * aji) / (aij + aji)


def edge_equilibria(sys: ReplicatorSystem) -> List[EdgeEquilibrium]:
    """All equilibria in the relative interiors of the six edges.

    ``E_ij`` exists iff ``sgn a_ij = sgn a_ji != 0``; ``E12`` and ``E34``
    always do (``a_12 = a_21`` and ``a_34 = a_43``), as midpoints or as
    members of a continuum.
    """
    out = []
    scale = sys.scale
    m = sys.float_matrix()
    for i, j in itertools.combinations(range(1, 5), 2):
        aij, aji = sys.entry(i, j), sys.entry(j, i)
        si, sj = sign(aij, scale), sign(aji, scale)
        others = [k for k in range(1, 5) if k not in (i, j)]
        if si == 0 and sj == 0:
            x = [0.0] * 4
            x[i - 1] = x[j - 1] = 0.5
            ext = {k: _external_at(m, x, k) for k in others}
            out.append(
                EdgeEquilibrium(
                    (i, j),
                    SimplexState(*x),
                    0.0,
                    ext,
                    all(_is_nonpositive(v, scale) for v in ext.values()),
                    continuum=True,
                )
            )
            continue
        if si != sj or si == 0:
            continue
        fij, fji = float(aij), float(aji)
        x = [0.0] * 4
        x[i - 1] = fij / (fij + fji)
        x[j - 1] = fji / (fij + fji)
        ext = {k: external_eigenvalue(sys, i, j, k) for k in others}
        out.append(
            EdgeEquilibrium(
                (i, j),
                SimplexState.normalized(x),
                -fij * fji / (fij + fji),
                ext,
                all(_is_nonpositive(v, scale) for v in ext.values()),
            )
        )
    return out


def equilibrium_segment(sys: ReplicatorSystem, n: int = 11) -> List[SimplexState]:
    """Equally spaced points on the segment of equilibria from ``E12`` to ``E34``."""
    pts = []
    for s in range(n):
        t = s / (n - 1)
        pts.append(SimplexState((1 - t) / 2, (1 - t) / 2, t / 2, t / 2))
    return pts


# ---------------------------------------------------------------------------
# the boundary of the surface {Q = 1}


@dataclass(frozen=True)
class BoundaryPiece:
    """A maximal piece of the closure of ``{Q = 1}`` in the simplex boundary.

    ``kind`` is ``"face"`` when the whole relatively open face spanned by
    ``indices`` belongs to it, and ``"level-set"`` when only the set
    ``prod_{i in indices} x_i^{c_i} = 1`` inside that face does.
    """

    indices: Tuple[int, ...]
    kind: str

    @property
    def name(self) -> str:
        prefix = "F" if self.kind == "face" else "C"
        return prefix + "".join(map(str, self.indices))


@dataclass(frozen=True)
class EdgeFlow:
    edge: Tuple[int, int]
    source: Optional[int]
    target: Optional[int]
    has_equilibrium: bool


@dataclass(frozen=True)
class BoundaryReport:
    c_signs: Tuple[int, int, int, int]
    geometry: SignGeometry
    pieces: Tuple[BoundaryPiece, ...]
    edge_flows: Tuple[EdgeFlow, ...]
    heteroclinic_cycle: Optional[Tuple[int, ...]]
    corners_in_boundary: Tuple[int, ...]
    corner_saturation: Dict[int, bool]
    edge_equilibria: Tuple[EdgeEquilibrium, ...]
    boundary_equilibria: Tuple[Tuple[int, int], ...] = field(default=())

    @property
    def edges(self) -> Tuple[Tuple[int, int], ...]:
        return tuple(p.indices for p in self.pieces if p.kind == "face" and len(p.indices) == 2)

    @property
    def curves(self) -> Tuple[Tuple[int, ...], ...]:
        return tuple(p.indices for p in self.pieces if p.kind == "level-set")


def _face_kind(face: Tuple[int, ...], signs: Tuple[int, int, int, int]) -> Optional[str]:
    outside = [k for k in range(1, 5) if k not in face]
    out_signs = {signs[k - 1] for k in outside}
    if 1 in out_signs and -1 in out_signs:
        return "face"
    if out_signs <= {0}:
        return "level-set"
    return None


def boundary_pieces(signs: Tuple[int, int, int, int]) -> Tuple[BoundaryPiece, ...]:
    """Maximal boundary faces and level sets in the closure of ``{Q = 1}``.

    A point in the open face with support ``I`` is a limit of points with
    ``Q = 1`` iff the vanishing coordinates can be balanced: they must carry
    both a positive and a negative exponent, or all have exponent zero (then
    ``Q`` restricted to the face must equal one).
    """
    if not any(signs):
        raise DegenerateConfiguration("c = 0")
    found = []
    for size in (1, 2, 3):
        for face in itertools.combinations(range(1, 5), size):
            kind = _face_kind(face, signs)
            if kind is not None:
                found.append(BoundaryPiece(face, kind))
    maximal = [
        p for p in found if not any(set(p.indices) < set(q.indices) for q in found)
    ]
    return tuple(maximal)


def _edge_flow(sys: ReplicatorSystem, i: int, j: int) -> EdgeFlow:
    """Flow direction along edge ``(i, j)``: ``x_i' = x_i x_j (a_ij x_j - a_ji x_i)``."""
    scale = sys.scale
    si, sj = sign(sys.entry(i, j), scale), sign(sys.entry(j, i), scale)
    if si == sj:
        # an interior equilibrium or a continuum of them
        return EdgeFlow((i, j), None, None, True)
    # near E_j (x_i -> 0) the sign of x_i' is sgn a_ij, near E_i it is -sgn a_ji
    direction = si if si != 0 else -sj
    if direction > 0:
        return EdgeFlow((i, j), j, i, False)
    return EdgeFlow((i, j), i, j, False)


def _find_cycle(flows: Sequence[EdgeFlow]) -> Optional[Tuple[int, ...]]:
    succ = {}
    for f in flows:
        if f.has_equilibrium or f.source in succ:
            return None
        succ[f.source] = f.target
    if not succ:
        return None
    start = min(succ)
    order = [start]
    node = succ[start]
    while node != start:
        if node not in succ or node in order:
            return None
        order.append(node)
        node = succ[node]
    if len(order) != len(flows):
        return None
    return tuple(order + [start])


def boundary_report(sys: ReplicatorSystem) -> BoundaryReport:
    """Composition of the boundary of ``{Q = 1}`` with flow and saturation data.

    A heteroclinic cycle is reported when the boundary consists of edges
    only, each without an equilibrium, and their flows chain into a loop.
    """
    params = sys.source
    if sign(jacobian(params).det, params.scale, 2) == 0:
        raise DegenerateConfiguration("det J = 0: the interior equilibria form a continuum")
    signs = sys.c.signs(params.scale)
    geometry = sign_pattern_geometry(sys.c, params.scale)
    pieces = boundary_pieces(signs)
    edges = [p.indices for p in pieces if p.kind == "face" and len(p.indices) == 2]
    flows = tuple(_edge_flow(sys, i, j) for i, j in edges)
    cycle = None
    if edges and len(edges) == len(pieces):
        cycle = _find_cycle(flows)
    corners = tuple(k for k in range(1, 5) if _face_kind((k,), signs) == "face")
    eqs = tuple(edge_equilibria(sys))
    on_boundary = []
    for eq in eqs:
        kind = _face_kind(eq.edge, signs)
        if kind == "face":
            on_boundary.append(eq.edge)
        elif kind == "level-set":
            i, j = eq.edge
            logq = float(sys.c[i - 1]) * math.log(eq.coords[i - 1]) + float(sys.c[j - 1]) * math.log(
                eq.coords[j - 1]
            )
            if abs(logq) <= 1e-9 * (1.0 + params.scale) ** 2:
                on_boundary.append(eq.edge)
    return BoundaryReport(
        c_signs=signs,
        geometry=geometry,
        pieces=pieces,
        edge_flows=flows,
        heteroclinic_cycle=cycle,
        corners_in_boundary=corners,
        corner_saturation={k: corner_saturated(sys, k) for k in range(1, 5)},
        edge_equilibria=eqs,
        boundary_equilibria=tuple(on_boundary),
    )


def cycle_eigenvalue_balance(sys: ReplicatorSystem, cycle: Sequence[int]) -> Number:
    """Product of the expanding eigenvalues around a corner cycle minus that of the contracting ones.

    ``cycle`` lists the corners in flow order (a closing repeat is
    allowed).  A positive value means the cycle repels nearby orbits.
    """
    corners = list(cycle[:-1] if len(cycle) > 1 and cycle[0] == cycle[-1] else cycle)
    if len(corners) < 2:
        raise ValueError("a cycle needs at least two corners")
    expanding = 1
    contracting = 1
    for i, k in enumerate(corners):
        ev = corner_eigenvalues(sys, k)
        expanding *= ev[corners[(i + 1) % len(corners)]]
        contracting *= -ev[corners[i - 1]]
    return expanding - contracting


# ---------------------------------------------------------------------------
# monotone flow on facets

# facet -> (probed coordinate, corner pair it is measured near, c index)
_FACETS = {
    (2, 3, 4): (2, (3, 4), 1),
    (1, 3, 4): (1, (3, 4), 2),
    (1, 2, 4): (4, (1, 2), 3),
    (1, 2, 3): (3, (1, 2), 4),
}


@dataclass(frozen=True)
class FacetReport:
    """Sign of the probed coordinate's velocity near an edge equilibrium.

    ``weights`` define ``V = sum w_i log x_i`` on the facet with
    ``V' = rate * x_probe``; ``sign`` is ``None`` when the
    needed c-entry is zero.
    """

    facet: Tuple[int, int, int]
    probe: int
    near: Tuple[int, int]
    applicable: bool
    sign: Optional[int]
    weights: Optional[Tuple[Number, Number, Number]] = None
    rate: Optional[Number] = None


def restrict(sys: ReplicatorSystem, indices: Sequence[int]) -> List[List[Number]]:
    """Payoff sub-matrix of the face spanned by ``indices``."""
    return [[sys.entry(i, j) for j in indices] for i in indices]


def _cross(u, v):
    return (u[1] * v[2] - u[2] * v[1], u[2] * v[0] - u[0] * v[2], u[0] * v[1] - u[1] * v[0])


def facet_monotonicity(sys: ReplicatorSystem, facet: Sequence[int]) -> FacetReport:
    """Monotone direction of the flow on a facet near ``E12`` or ``E34``.

    On the 3-strategy facet system ``B`` we look for log-linear weights
    ``w`` with ``sum w = 0`` and ``w.B`` vanishing on the two non-probed
    columns.  Then ``V' = (w.B)_probe * x_probe`` has a fixed sign, so the
    facet interior holds no equilibrium.  Leaving the edge equilibrium along
    its zero-eigenvalue direction, ``x_probe`` moves with sign
    ``sgn(rate) * sgn(w_probe)``.
    """
    key = tuple(sorted(facet))
    if key not in _FACETS:
        raise ValueError(f"facet must be one of {sorted(_FACETS)}, got {facet}")
    probe, near, c_index = _FACETS[key]
    scale = sys.source.scale
    if sign(sys.c[c_index - 1], scale, 2) == 0:
        return FacetReport(key, probe, near, False, None)  # type: ignore[arg-type]
    b = restrict(sys, key)
    pos = key.index(probe)
    cols = [k for k in range(3) if k != pos]
    rows = [tuple(b[i][cols[0]] for i in range(3)), tuple(b[i][cols[1]] for i in range(3)), (1, 1, 1)]
    w = _cross(rows[0], rows[1])
    if all(sign(v, scale, 2) == 0 for v in w):
        w = _cross(rows[0], rows[2])
    if all(sign(v, scale, 2) == 0 for v in w):
        w = _cross(rows[1], rows[2])
    rate = sum(w[i] * b[i][pos] for i in range(3))
    direction = sign(rate, scale, 4) * sign(w[pos], scale, 2)
    return FacetReport(key, probe, near, True, direction, w, rate)  # type: ignore[arg-type]


def facet_sign_formula(params: ExpParams, facet: Sequence[int]) -> Optional[int]:
    """Closed-form sign of the probed velocity, for cross-checking."""
    c = c_vector(params)
    a1, a2, _, _ = params.a
    _, _, b3, b4 = params.b
    s = params.scale
    key = tuple(sorted(facet))
    probe, near, c_index = _FACETS[key]
    sc = sign(c[c_index - 1], s, 2)
    if sc == 0:
        return None
    if near == (3, 4):
        return -sc * sign(b4 - b3, s)
    return sc * sign(a2 - a1, s)
