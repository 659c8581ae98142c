import math

import pytest
from scipy.integrate import solve_ivp

from ssperm.ode import Event, Status, solve


def harmonic(t, y):
    return [y[1], -y[0]]


def test_harmonic_oscillator_accuracy():
    sol = solve(harmonic, 0.0, [1.0, 0.0], 10.0, rtol=1e-10, atol=1e-12)
    assert sol.success and sol.t[-1] == 10.0
    assert sol.y[-1] == pytest.approx([math.cos(10.0), -math.sin(10.0)], abs=1e-8)


def test_error_shrinks_with_tolerance():
    errs = []
    for rtol in (1e-6, 5e-7, 2.5e-7):
        sol = solve(harmonic, 0.0, [1.0, 0.0], 20.0, rtol=rtol, atol=rtol * 1e-2)
        errs.append(abs(sol.y[-1][0] - math.cos(20.0)))
    assert errs[0] / errs[1] >= 1.5 and errs[1] / errs[2] >= 1.5


def test_exponential_decay_against_closed_form():
    sol = solve(lambda t, y: [-3.0 * y[0]], 0.0, [2.0], 4.0, rtol=1e-10, atol=1e-14)
    assert sol.y[-1][0] == pytest.approx(2.0 * math.exp(-12.0), rel=1e-8)


def test_matches_reference_solver():
    def lorenz_like(t, y):
        return [y[1] - y[0] * y[2], -y[0] + 0.3 * y[1] ** 2 * 0.1, y[0] * y[1] - 0.5 * y[2]]

    ours = solve(lorenz_like, 0.0, [1.0, 0.5, 0.2], 5.0, rtol=1e-11, atol=1e-13)
    ref = solve_ivp(lorenz_like, (0.0, 5.0), [1.0, 0.5, 0.2], method="DOP853", rtol=1e-12, atol=1e-14)
    assert ours.y[-1] == pytest.approx(list(ref.y[:, -1]), abs=1e-8)


def test_terminal_event_location():
    # y = 1 - t crosses zero at t = 1
    ev = Event(lambda t, y: y[0], "zero", direction=-1, terminal=True)
    sol = solve(lambda t, y: [-1.0], 0.0, [1.0], 5.0, events=[ev])
    assert sol.status is Status.EVENT
    assert sol.events[0].t == pytest.approx(1.0, abs=1e-10)
    assert sol.t[-1] == pytest.approx(1.0, abs=1e-10)


def test_event_direction_filter():
    up = Event(lambda t, y: y[0], "up", direction=1)
    down = Event(lambda t, y: y[0], "down", direction=-1)
    sol = solve(harmonic, 0.0, [0.0, 1.0], 4 * math.pi - 0.1, rtol=1e-10, atol=1e-12, events=[up, down])
    ups = [e.t for e in sol.events if e.label == "up"]
    downs = [e.t for e in sol.events if e.label == "down"]
    assert ups == pytest.approx([2 * math.pi], abs=1e-8)
    assert downs == pytest.approx([math.pi, 3 * math.pi], abs=1e-8)


def test_event_accept_and_arm():
    ev = Event(lambda t, y: y[0], "late", arm_after=1.0, accept=lambda t, y: y[1] < 0)
    sol = solve(harmonic, 0.0, [0.0, 1.0], 10.0, rtol=1e-10, atol=1e-12, events=[ev])
    assert [round(e.t, 6) for e in sol.events] == [round(math.pi, 6), round(3 * math.pi, 6)]


def test_dense_samples_exact_times():
    times = [0.5 * i for i in range(1, 21)]
    sol = solve(harmonic, 0.0, [1.0, 0.0], 10.0, rtol=1e-10, atol=1e-12, t_eval=times)
    assert sol.t[1:] == times
    for t, y in zip(sol.t[1:], sol.y[1:]):
        assert y[0] == pytest.approx(math.cos(t), abs=1e-8)


def test_post_step_projection():
    seen = []

    def project(y):
        seen.append(1)
        return [abs(v) for v in y]

    solve(lambda t, y: [-y[0]], 0.0, [1.0], 1.0, post_step=project)
    assert seen


def test_blow_up_reports_failure():
    sol = solve(lambda t, y: [y[0] ** 2], 0.0, [1.0], 2.0)
    assert not sol.success
    assert sol.status in (Status.STEP_UNDERFLOW, Status.NONFINITE, Status.MAX_STEPS)


def test_argument_validation():
    with pytest.raises(ValueError):
        solve(harmonic, 1.0, [1.0, 0.0], 0.5)
    with pytest.raises(ValueError):
        solve(harmonic, 0.0, [1.0, 0.0], 1.0, rtol=0.0)


def test_record_every_keeps_final_state():
    full = solve(harmonic, 0.0, [1.0, 0.0], 10.0)
    sparse = solve(harmonic, 0.0, [1.0, 0.0], 10.0, record_every=5)
    assert len(sparse.t) < len(full.t)
    assert sparse.t[-1] == 10.0 and sparse.y[-1] == full.y[-1]
