import itertools
import math
import random
from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import BAUTIN_A, BAUTIN_B, float_params, random_float_params, rational_params
from ssperm.params import (
    C_ACTION,
    CVector,
    DegenerateConfiguration,
    Dihedral,
    EquilibriumKind,
    ExpParams,
    GeometryKind,
    PositiveEquilibrium,
    SSystemSpec,
    act_on_c,
    apply_dihedral,
    c_vector,
    compose,
    equilibrium_residuals,
    find_positive_equilibrium,
    inverse,
    jacobian,
    log_coordinates,
    sign_pattern_geometry,
    signed_area,
    to_exponential,
)
from ssperm.scenarios import lotka_s_system, selkov_s_system


def shoelace(p, q, r):
    # independent oracle: the shoelace sum for a triangle, doubled
    return p[0] * (q[1] - r[1]) + q[0] * (r[1] - p[1]) + r[0] * (p[1] - q[1])


# -- validation


def test_rate_constants_must_be_positive():
    with pytest.raises(ValueError):
        SSystemSpec(0.0, 1, 1, 1, 0, 0, 0, 0, 0, 0, 0, 0)
    with pytest.raises(ValueError):
        SSystemSpec(1, 1, 1, -2, 0, 0, 0, 0, 0, 0, 0, 0)


def test_exponents_must_be_finite():
    with pytest.raises(ValueError):
        SSystemSpec(1, 1, 1, 1, math.inf, 0, 0, 0, 0, 0, 0, 0)
    with pytest.raises(ValueError):
        ExpParams((0, 0, 0, math.nan), (0, 0, 0, 0))


def test_equilibrium_coordinates_positive():
    with pytest.raises(ValueError):
        PositiveEquilibrium(0.0, 1.0)


def test_exp_params_needs_four_points():
    with pytest.raises(ValueError):
        ExpParams((0, 0, 0), (0, 0, 0))


# -- equilibria and the transform


@pytest.mark.parametrize("k,gamma", [(1, 0.5), (2.5, 2), (0.3, -1)])
def test_selkov_equilibrium_is_one_one(k, gamma):
    eqs = find_positive_equilibrium(selkov_s_system(k, gamma))
    assert eqs.kind is EquilibriumKind.UNIQUE
    assert eqs.point.x1_star == pytest.approx(1.0, abs=1e-14)
    assert eqs.point.x2_star == pytest.approx(1.0, abs=1e-14)


@pytest.mark.parametrize("k,gamma", [(1, 0.5), (2, 1.5), (0.5, -1)])
def test_selkov_transform(k, gamma):
    p = to_exponential(selkov_s_system(k, gamma), PositiveEquilibrium(1.0, 1.0))
    assert p.a == pytest.approx((-1, 0, 1, 0))
    assert p.b == pytest.approx((0, k * gamma, k * (gamma - 1), 0))


@pytest.mark.parametrize("k,alpha,beta", [(1, 1.5, 0.5), (0.2, -1, 2), (3, 0.5, 0.75)])
def test_lotka_transform(k, alpha, beta):
    p = to_exponential(lotka_s_system(k, alpha, beta), PositiveEquilibrium(1.0, 1.0))
    assert p.a == pytest.approx((alpha - 1, 0, 1, 0))
    assert p.b == pytest.approx((0, k * beta, k * (beta - 1), 0))


def test_identical_monomials_give_zero_jacobian():
    spec = SSystemSpec(2, 3, 2, 3, 0.5, 1.5, -1, 2, 0.5, 1.5, -1, 2)
    eqs = find_positive_equilibrium(spec)
    assert eqs.kind is EquilibriumKind.LINE
    p = to_exponential(spec, eqs.point)
    assert p.p1 == p.p2 and p.p3 == p.p4
    jac = jacobian(p)
    assert jac.matrix == ((0, 0), (0, 0)) and jac.det == 0


def test_inconsistent_identical_monomials_have_no_equilibrium():
    spec = SSystemSpec(2, 3, 1, 3, 0.5, 1.5, -1, 2, 0.5, 1.5, -1, 2)
    assert find_positive_equilibrium(spec).kind is EquilibriumKind.NONE


def test_rank_one_line_representative():
    # both rows depend on x1 / x2 only: a line of equilibria x1 = x2 * const
    spec = SSystemSpec(1, 1, 2, 2, 1, -1, 1, -1, 0, 0, 0, 0)
    eqs = find_positive_equilibrium(spec)
    assert eqs.kind is EquilibriumKind.LINE
    assert max(equilibrium_residuals(spec, eqs.point)) < 1e-12
    assert math.isclose(math.log(eqs.point.x1_star), 0.0, abs_tol=1e-15) or math.isclose(
        math.log(eqs.point.x2_star), 0.0, abs_tol=1e-15
    )


def test_transform_rejects_non_equilibrium():
    with pytest.raises(ValueError):
        to_exponential(selkov_s_system(1, 0.5), PositiveEquilibrium(2.0, 1.0))


def _random_spec(rng):
    x1, x2 = math.exp(rng.uniform(-1, 1)), math.exp(rng.uniform(-1, 1))
    g = [rng.uniform(-2, 2) for _ in range(4)]
    h = [rng.uniform(-2, 2) for _ in range(4)]
    alpha1, alpha2 = rng.uniform(0.5, 2), rng.uniform(0.5, 2)
    beta1 = alpha1 * x1 ** (g[0] - h[0]) * x2 ** (g[1] - h[1])
    beta2 = alpha2 * x1 ** (g[2] - h[2]) * x2 ** (g[3] - h[3])
    spec = SSystemSpec(alpha1, alpha2, beta1, beta2, *g, *h)
    return spec, PositiveEquilibrium(x1, x2)


def test_transform_matches_finite_difference_jacobian(rng):
    for _ in range(50):
        spec, eq = _random_spec(rng)
        p = to_exponential(spec, eq)
        l1, l2 = math.log(eq.x1_star), math.log(eq.x2_star)
        g1 = math.exp(math.log(spec.alpha1) + (spec.g11 - 1) * l1 + spec.g12 * l2)
        g2 = math.exp(math.log(spec.alpha2) + spec.g21 * l1 + (spec.g22 - 1) * l2)

        def field(u, v):
            x1, x2 = eq.x1_star * math.exp(g1 * u), eq.x2_star * math.exp(g2 * v)
            f1, f2 = spec.rhs(x1, x2)
            return f1 / (x1 * g1), f2 / (x2 * g2)

        h = 1e-6
        fd = []
        for du, dv in ((h, 0), (0, h)):
            plus, minus = field(du, dv), field(-du, -dv)
            fd.append([(plus[i] - minus[i]) / (2 * h) for i in range(2)])
        jac = jacobian(p)
        expected = ((fd[0][0], fd[1][0]), (fd[0][1], fd[1][1]))
        for i, j in itertools.product(range(2), repeat=2):
            assert jac.matrix[i][j] == pytest.approx(expected[i][j], abs=1e-6, rel=1e-6)
        # the coordinate map sends the equilibrium to the origin
        assert log_coordinates(spec, eq, eq.x1_star, eq.x2_star) == (0.0, 0.0)


# -- Jacobian and signed areas


def test_bautin_jacobian():
    jac = jacobian(ExpParams(BAUTIN_A, BAUTIN_B))
    assert jac.matrix == ((8, -35), (30, -8))
    assert jac.trace == 0 and jac.det == 986


def test_selkov_jacobian_symbolic():
    k, g = Fraction(3, 2), Fraction(5, 4)
    jac = jacobian(ExpParams((-1, 0, 1, 0), (0, k * g, k * (g - 1), 0)))
    assert jac.matrix == ((-1, -k * g), (1, k * (g - 1)))


def test_signed_area_examples():
    assert signed_area((0, 0), (1, 0), (0, 1)) == 1
    assert signed_area((0, 0), (0, 1), (1, 0)) == -1
    assert signed_area((0, 0), (1, 1), (3, 3)) == 0


pt = st.tuples(st.fractions(-20, 20, max_denominator=9), st.fractions(-20, 20, max_denominator=9))


@given(pt, pt, pt)
def test_signed_area_symmetries(p, q, r):
    s = signed_area(p, q, r)
    assert s == shoelace(p, q, r)
    assert s == signed_area(q, r, p) == signed_area(r, p, q)
    assert s == -signed_area(q, p, r) == -signed_area(p, r, q) == -signed_area(r, q, p)


# -- c-vector


@given(float_params())
def test_c_identities_float(p):
    c = c_vector(p)
    jac = jacobian(p)
    tol = max(1e-9, 1e-12 * max(1.0, abs(jac.det)))
    assert abs(c.c1 + c.c2 - jac.det) <= tol
    assert abs(c.c3 + c.c4 + jac.det) <= tol
    assert abs(sum(c)) <= tol
    assert abs(sum(ci * ai for ci, ai in zip(c, p.a))) <= 1e-9 * (1 + p.scale) ** 3
    assert abs(sum(ci * bi for ci, bi in zip(c, p.b))) <= 1e-9 * (1 + p.scale) ** 3


@given(rational_params())
def test_c_identities_exact(p):
    c = c_vector(p)
    det = jacobian(p).det
    assert c.c1 + c.c2 == det and c.c3 + c.c4 == -det
    assert sum(ci * ai for ci, ai in zip(c, p.a)) == 0
    assert sum(ci * bi for ci, bi in zip(c, p.b)) == 0
    p1, p2, p3, p4 = p.points
    assert c.as_tuple() == (shoelace(p2, p4, p3), shoelace(p1, p3, p4), shoelace(p1, p4, p2), shoelace(p1, p2, p3))


def test_selkov_c():
    k, g = Fraction(2), Fraction(3, 4)
    c = c_vector(ExpParams((-1, 0, 1, 0), (0, k * g, k * (g - 1), 0)))
    assert c.as_tuple() == tuple(k * x for x in (g, 1 - g, g, -1 - g))


def test_lotka_c():
    k, al, be = Fraction(1, 3), Fraction(5, 2), Fraction(-2, 7)
    c = c_vector(ExpParams((al - 1, 0, 1, 0), (0, k * be, k * (be - 1), 0)))
    assert c.as_tuple() == tuple(k * x for x in (be, (al - 1) * (be - 1), -(al - 1) * be, al - 1 - be))


def test_collinear_points_give_zero_c():
    c = c_vector(ExpParams((0, 1, 2, 3), (0, 2, 4, 6)))
    assert c.as_tuple() == (0, 0, 0, 0)
    with pytest.raises(DegenerateConfiguration):
        sign_pattern_geometry(c)


# -- geometry of sign patterns


@pytest.mark.parametrize(
    "c,kind,key,value",
    [
        ((1, 1, -1, -1), GeometryKind.QUADRANGLE, "diagonals", ((1, 2), (3, 4))),
        ((1, -1, -1, -1), GeometryKind.TRIANGLE_INTERIOR, "interior", 1),
        ((1, 0, -1, 0), GeometryKind.COINCIDENT_VERTEX, "coincident", (1, 3)),
        ((1, 0, -1, -1), GeometryKind.TRIANGLE_EDGE, "on_edge", 1),
    ],
)
def test_sign_pattern_geometry(c, kind, key, value):
    g = sign_pattern_geometry(CVector(*c))
    assert g.kind is kind and g.roles[key] == value


def test_coincident_vertex_from_points():
    # P1 = P3 gives c2 = c4 = 0
    p = ExpParams((1, 0, 1, -1), (0, 2, 0, 3))
    g = sign_pattern_geometry(c_vector(p))
    assert g.kind is GeometryKind.COINCIDENT_VERTEX and g.roles["coincident"] == (1, 3)


# -- dihedral symmetry


# the c-map table written out independently of the implementation
C_TABLE = {
    "r0": lambda c: c,
    "r1": lambda c: (-c[3], -c[2], -c[0], -c[1]),
    "r2": lambda c: (c[1], c[0], c[3], c[2]),
    "r3": lambda c: (-c[2], -c[3], -c[1], -c[0]),
    "s0": lambda c: (c[0], c[1], c[3], c[2]),
    "s1": lambda c: (-c[2], -c[3], -c[0], -c[1]),
    "s2": lambda c: (c[1], c[0], c[2], c[3]),
    "s3": lambda c: (-c[3], -c[2], -c[1], -c[0]),
}


def test_group_table():
    r0, r1, r2, r3 = Dihedral.R0, Dihedral.R1, Dihedral.R2, Dihedral.R3
    assert r1 @ r1 is r2 and r1 @ r3 is r0 and r2 @ r2 is r0
    for s in (Dihedral.S0, Dihedral.S1, Dihedral.S2, Dihedral.S3):
        assert s @ s is r0
    for g in Dihedral:
        assert g @ inverse(g) is r0
    # associativity and closure
    for g, h, k in itertools.product(Dihedral, repeat=3):
        assert compose(g, compose(h, k)) is compose(compose(g, h), k)


def test_r2_rule():
    q = apply_dihedral(Dihedral.R2, ExpParams(BAUTIN_A, BAUTIN_B))
    assert q.a == (8, 0, 20, -10) and q.b == (-35, 0, -28, -20)


def test_r2_is_point_reflection_with_swaps(rng):
    for _ in range(20):
        p = random_float_params(rng)
        q = apply_dihedral(Dihedral.R2, p)
        p1, p2, p3, p4 = p.points
        neg = lambda pt: (-pt[0], -pt[1])  # noqa: E731
        assert q.points == (neg(p2), neg(p1), neg(p4), neg(p3))


@given(rational_params())
def test_identity_element(p):
    assert apply_dihedral(Dihedral.R0, p) == p


@given(rational_params(), st.sampled_from(list(Dihedral)), st.sampled_from(list(Dihedral)))
def test_action_respects_composition(p, g, h):
    assert apply_dihedral(compose(g, h), p) == apply_dihedral(g, apply_dihedral(h, p))


@given(rational_params(), st.sampled_from(list(Dihedral)))
def test_c_map_matches_table(p, g):
    c = c_vector(p).as_tuple()
    assert c_vector(apply_dihedral(g, p)).as_tuple() == C_TABLE[g.value](c)
    assert act_on_c(g, CVector(*c)).as_tuple() == C_TABLE[g.value](c)
    assert set(C_ACTION) == set(Dihedral)


def test_dihedral_is_a_change_of_coordinates(rng):
    # the transformed field at M w equals M times the original field at w
    for g in Dihedral:
        p = random_float_params(rng, -2, 2)
        q = apply_dihedral(g, p)
        m = g.matrix
        for _ in range(5):
            u, v = rng.uniform(-1, 1), rng.uniform(-1, 1)
            f = _field(p, u, v)
            w = (m[0][0] * u + m[0][1] * v, m[1][0] * u + m[1][1] * v)
            expected = (m[0][0] * f[0] + m[0][1] * f[1], m[1][0] * f[0] + m[1][1] * f[1])
            assert _field(q, *w) == pytest.approx(expected, rel=1e-12, abs=1e-12)


def _field(p, u, v):
    e = [math.exp(a * u + b * v) for a, b in zip(p.a, p.b)]
    return (e[0] - e[1], e[2] - e[3])
