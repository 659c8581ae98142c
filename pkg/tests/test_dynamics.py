import math
import random
from fractions import Fraction

import pytest
from scipy.integrate import solve_ivp

from conftest import BAUTIN_A, BAUTIN_B
from ssperm.classifier import CaseLabel, Verdict, classify
from ssperm.dynamics import (
    IntegratorConfig,
    ProbeVerdict,
    TimeScale,
    default_cycle_grid,
    focal_value_l1,
    integrate_simplex,
    integrate_uv,
    permanence_probe,
    poincare_return_map,
    scaled_divergence,
    section_crossing,
    three_cycle_scenario,
)
from ssperm.params import ExpParams, jacobian
from ssperm.replicator import SimplexState, embed, equilibrium_segment
from ssperm.scenarios import selkov_params


def uv_field(p):
    a, b = [float(x) for x in p.a], [float(x) for x in p.b]

    def f(t, y):
        e = [math.exp(a[i] * y[0] + b[i] * y[1]) for i in range(4)]
        return [e[0] - e[1], e[2] - e[3]]

    return f


def random_case_a(rng):
    # negative diagonal and positive determinant
    while True:
        a = tuple(rng.uniform(-3, 3) for _ in range(4))
        b = tuple(rng.uniform(-3, 3) for _ in range(4))
        p = ExpParams(a, b)
        r = classify(p)
        if r.verdict is Verdict.PERMANENT and r.case is CaseLabel.A:
            return p


# -- planar integration


def test_case_a_converges():
    traj = integrate_uv(selkov_params(1, 0.5), (1.0, 1.0), IntegratorConfig(horizon=1e3))
    assert traj.ok and math.hypot(*traj.final) < 1e-3


def test_origin_is_stationary():
    traj = integrate_uv(ExpParams(BAUTIN_A, BAUTIN_B), (0.0, 0.0), IntegratorConfig(horizon=10.0))
    assert all(s == (0.0, 0.0) for s in traj.states)


def test_selkov_escape_along_axis():
    traj = integrate_uv(selkov_params(1, 2), (10.0, -20.0), IntegratorConfig(horizon=1e4, escape_norm=1e3))
    assert "unbounded" in [label for _, label in traj.events]
    assert math.hypot(*traj.final) == pytest.approx(1e3, rel=1e-6)


def test_planar_against_reference_solver(rng):
    for _ in range(5):
        p = random_case_a(rng)
        ours = integrate_uv(p, (0.7, -0.4), IntegratorConfig(horizon=5.0))
        ref = solve_ivp(uv_field(p), (0, 5.0), [0.7, -0.4], method="DOP853", rtol=1e-12, atol=1e-14)
        assert ours.final == pytest.approx(tuple(ref.y[:, -1]), abs=1e-7)


def test_orbital_time_follows_same_orbit():
    # both clocks trace the same curve; compare where each crosses v = 0
    p = ExpParams(BAUTIN_A, (0, 34.9, 20, 28))
    hit = section_crossing(p, 0.0, 0.5, 1e-11, 1e-13, 1e4)
    phys = integrate_uv(p, (0.5, 0.0), IntegratorConfig(horizon=5.0, rel_tol=1e-11, abs_tol=1e-13))
    crossings = [
        s1[0]
        for s0, s1 in zip(phys.states, phys.states[1:])
        if s0[1] < 0 <= s1[1] and s1[0] > 0
    ]
    assert crossings and crossings[0] == pytest.approx(hit[1], abs=1e-3)


def test_dense_samples_uniform():
    cfg = IntegratorConfig(horizon=2.0, dense_output=True, samples=21)
    traj = integrate_uv(selkov_params(1, 0.5), (1.0, 1.0), cfg)
    assert traj.times == pytest.approx([0.1 * i for i in range(21)], abs=1e-12)


def test_times_strictly_increasing():
    traj = integrate_uv(selkov_params(1, 0.5), (1.0, 1.0), IntegratorConfig(horizon=50.0))
    assert all(t0 < t1 for t0, t1 in zip(traj.times, traj.times[1:]))


def test_rejects_non_finite_start():
    with pytest.raises(ValueError):
        integrate_uv(selkov_params(1, 0.5), (math.inf, 0.0))


def test_config_validation():
    with pytest.raises(ValueError):
        IntegratorConfig(rel_tol=0)
    with pytest.raises(ValueError):
        IntegratorConfig(horizon=-1)


def test_orbital_scale_in_config():
    cfg = IntegratorConfig(horizon=100.0, time_scale=TimeScale.ORBITAL)
    traj = integrate_uv(selkov_params(1, 0.5), (3.0, 3.0), cfg)
    assert traj.ok and math.hypot(*traj.final) < math.hypot(3.0, 3.0)


# -- simplex integration


def test_simplex_stays_on_simplex(rng):
    for _ in range(10):
        p = ExpParams(tuple(rng.uniform(-4, 4) for _ in range(4)), tuple(rng.uniform(-4, 4) for _ in range(4)))
        w = [rng.uniform(0.01, 1) for _ in range(4)]
        x0 = SimplexState(*(v / sum(w) for v in w))
        traj = integrate_simplex(embed(p), x0, IntegratorConfig(horizon=50.0))
        for s in traj.states:
            assert all(-1e-12 <= v <= 1 + 1e-12 for v in s)
            assert abs(sum(s) - 1) <= 1e-12


def test_simplex_against_reference_solver(rng):
    for _ in range(5):
        p = ExpParams(tuple(rng.uniform(-2, 2) for _ in range(4)), tuple(rng.uniform(-2, 2) for _ in range(4)))
        m = embed(p).float_matrix()

        def f(t, x):
            ax = [sum(m[i][j] * x[j] for j in range(4)) for i in range(4)]
            mean = sum(x[i] * ax[i] for i in range(4))
            return [x[i] * (ax[i] - mean) for i in range(4)]

        x0 = [0.1, 0.2, 0.3, 0.4]
        ours = integrate_simplex(embed(p), SimplexState(*x0), IntegratorConfig(horizon=3.0))
        ref = solve_ivp(f, (0, 3.0), x0, method="DOP853", rtol=1e-12, atol=1e-14)
        assert ours.final == pytest.approx(tuple(ref.y[:, -1]), abs=1e-8)


def test_segment_and_corners_stationary():
    sys = embed(ExpParams(BAUTIN_A, BAUTIN_B))
    starts = [equilibrium_segment(sys, 5)[2], SimplexState.corner(3)]
    for x0 in starts:
        traj = integrate_simplex(sys, x0, IntegratorConfig(horizon=10.0))
        assert traj.final == pytest.approx(x0.as_tuple(), abs=1e-12)


# -- divergence


def test_scaled_divergence_negative_in_case_a():
    rng = random.Random(8)
    for _ in range(5):
        p = random_case_a(rng)
        a, b = [float(x) for x in p.a], [float(x) for x in p.b]
        f = uv_field(p)

        def g(u, v):
            w = math.exp(-a[0] * u - b[3] * v)
            fu, fv = f(0, (u, v))
            return w * fu, w * fv

        for _ in range(200):
            u, v = rng.uniform(-2, 2), rng.uniform(-2, 2)
            d = scaled_divergence(p, u, v)
            def central(h):
                return (g(u + h, v)[0] - g(u - h, v)[0]) / (2 * h) + (g(u, v + h)[1] - g(u, v - h)[1]) / (2 * h)

            fd = (4 * central(5e-4) - central(1e-3)) / 3
            scale = max(abs(x) for x in g(u, v)) + abs(d)
            assert d == pytest.approx(fd, abs=1e-7 * scale)
            assert d < 0


# -- probe


def test_probe_center_inconclusive():
    # linear part is a rotation with closed orbits around the origin
    report = permanence_probe(ExpParams((0, 0, 1, 0), (0, 1, 0, 0)), windings=100)
    assert report.verdict is ProbeVerdict.INCONCLUSIVE
    assert not any(o.escaped and o.growing for o in report.orbits)


def test_probe_case_a_never_escapes():
    cfg = IntegratorConfig(rel_tol=1e-8, abs_tol=1e-10, horizon=5e3)
    report = permanence_probe(selkov_params(1, 0.5), cfg, windings=40)
    assert report.verdict is not ProbeVerdict.ESCAPING
    assert len(report.orbits) == 16
    inner = [o for o in report.orbits if math.hypot(*o.initial) < 1]
    assert len(inner) == 8 and all(o.tail_max < 1e-6 for o in inner)


def test_probe_argument_validation():
    with pytest.raises(ValueError):
        permanence_probe(selkov_params(1, 0.5), ring_radius=-1.0)
    with pytest.raises(ValueError):
        permanence_probe(selkov_params(1, 0.5), n_points=4)


def test_probe_never_contradicts_classifier():
    rng = random.Random(7)
    cfg = IntegratorConfig(rel_tol=1e-6, abs_tol=1e-9, horizon=5e3)
    checked = 0
    while checked < 200:
        p = ExpParams(tuple(rng.randint(-4, 4) for _ in range(4)), tuple(rng.randint(-4, 4) for _ in range(4)))
        verdict = classify(p).verdict
        if jacobian(p).det <= 0 or verdict not in (Verdict.PERMANENT, Verdict.NOT_PERMANENT):
            continue
        checked += 1
        probe = permanence_probe(p, cfg, n_points=8, workers=1, windings=20).verdict
        if verdict is Verdict.PERMANENT:
            assert probe is not ProbeVerdict.ESCAPING, p
        else:
            assert probe is not ProbeVerdict.BOUNDED_ATTRACTOR, p


# -- return maps


def test_section_crossing_is_on_axis():
    p = three_cycle_scenario(0.05, 1e-4)
    for r in (0.01, 0.3, 2.0):
        t, u, v = section_crossing(p, 0.0, r, 1e-10, 1e-12, 1e6)
        assert abs(v) < 1e-10 and u > 0 and t > 0


def test_section_crossing_at_angle():
    angle = 0.7
    t, u, v = section_crossing(three_cycle_scenario(0.05, 1e-4), angle, 0.5, 1e-10, 1e-12, 1e6)
    assert abs(-math.sin(angle) * u + math.cos(angle) * v) < 1e-10


def test_no_cycles_in_case_a():
    report = poincare_return_map(selkov_params(1, 0.5), [0.05 * 1.5**k for k in range(12)])
    assert report.count == 0
    assert all(R is None or R < r for r, R in report.samples)


def test_fixed_point_independent_of_grid():
    p = three_cycle_scenario(0.05, 1e-4)
    a = poincare_return_map(p, [2.0, 2.3, 2.7, 3.1])
    b = poincare_return_map(p, [1.9, 2.45, 2.95])
    assert a.count == b.count == 1
    assert a.fixed_points[0].r == pytest.approx(b.fixed_points[0].r, abs=1e-7)
    assert a.fixed_points[0].stability == "stable"


def test_return_map_needs_isolated_equilibrium():
    with pytest.raises(ValueError):
        poincare_return_map(ExpParams((1, 0, 2, 0), (0, 1, 0, 2)), [1.0])
    with pytest.raises(ValueError):
        poincare_return_map(selkov_params(1, 0.5), [0.0, 1.0])


def test_three_cycle_fixture():
    report = poincare_return_map(three_cycle_scenario(0.05, 1e-4), default_cycle_grid())
    assert report.stability_pattern == ("stable", "unstable", "stable")
    radii = [fp.r for fp in report.fixed_points]
    assert radii == sorted(radii)
    assert all(b - a >= report.resolution for a, b in zip(radii, radii[1:]))


# -- focal value


def test_bautin_focal_value():
    q = focal_value_l1(ExpParams(BAUTIN_A, BAUTIN_B))
    assert q.D == 480 and q.L1 == 0 and q.trace == 0 and q.det == 986 and q.L_infinity == 0


@pytest.mark.parametrize("eps", [Fraction(1, 1000), Fraction(1, 100), Fraction(1, 10)])
def test_perturbed_focal_value(eps):
    q = focal_value_l1(three_cycle_scenario(eps, 0))
    det = 986 - 30 * eps
    closed = -math.pi * 480 * float(eps) / (float(35 - eps) * math.sqrt(float(det)))
    assert q.L1 < 0 and q.L1 == pytest.approx(closed, rel=1e-12)
    assert q.L_infinity == 3840 * eps


def test_focal_value_zero_when_b3_equals_b4():
    q = focal_value_l1(ExpParams((0, 0, 2, 1), (0, 1, 3, 3)))
    assert q.L1 == 0


def test_focal_value_preconditions():
    with pytest.raises(ValueError, match="normalization"):
        focal_value_l1(ExpParams((1, -7, 10, -20), BAUTIN_B))
    with pytest.raises(ValueError):
        focal_value_l1(three_cycle_scenario(0, Fraction(1, 10)))


@pytest.mark.parametrize("mu", [Fraction(0), Fraction(1, 10000), Fraction(1, 100)])
def test_trace_equals_mu(mu):
    p = three_cycle_scenario(Fraction(1, 20), mu)
    assert jacobian(p).trace == mu
    assert p.a == (0, -8 - mu, 10, -20) and p.b == (0, 35 - Fraction(1, 20), 20, 28)


def test_three_cycle_scenario_rejects_negative():
    with pytest.raises(ValueError):
        three_cycle_scenario(-0.1, 0)
