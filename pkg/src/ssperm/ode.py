"""Dormand-Prince 5(4) integrator with dense output and event location.

Written for small systems (2 or 4 components) where per-step overhead of
array libraries dominates, so states are plain Python lists.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence, Tuple

Vector = List[float]
RHS = Callable[[float, Sequence[float]], Vector]

# Butcher tableau
_C = (0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0)
_A = (
    (),
    (1 / 5,),
    (3 / 40, 9 / 40),
    (44 / 45, -56 / 15, 32 / 9),
    (19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729),
    (9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656),
    (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84),
)
_B = _A[6]
# difference between the 5th and 4th order weights (7 stages, FSAL)
_E = (-71 / 57600, 0.0, 71 / 16695, -71 / 1920, 17253 / 339200, -22 / 525, 1 / 40)

# quartic dense-output coefficients, y(t + s h) = y + h sum_j K_j sum_k P[j][k] s^(k+1)
_P = (
    (1.0, -8048581381 / 2820520608, 8663915743 / 2820520608, -12715105075 / 11282082432),
    (0.0, 0.0, 0.0, 0.0),
    (0.0, 131558114200 / 32700410799, -68118460800 / 10900136933, 87487479700 / 32700410799),
    (0.0, -1754552775 / 470086768, 14199869525 / 1410260304, -10690763975 / 1880347072),
    (0.0, 127303824393 / 49829197408, -318862633887 / 49829197408, 701980252875 / 199316789632),
    (0.0, -282668133 / 205662961, 2019193451 / 616988883, -1453857185 / 822651844),
    (0.0, 40617522 / 29380423, -110615467 / 29380423, 69997945 / 29380423),
)

SAFETY = 0.9
MIN_FACTOR = 0.2
MAX_FACTOR = 10.0
EVENT_TIME_TOL = 1e-10


class Status(enum.Enum):
    COMPLETED = "completed"
    EVENT = "event"
    STEP_UNDERFLOW = "step-underflow"
    MAX_STEPS = "max-steps"
    NONFINITE = "nonfinite"


@dataclass
class Event:
    """Zero of ``fn(t, y)``; ``direction`` restricts to rising (+1) or falling (-1) crossings."""

    fn: Callable[[float, Sequence[float]], float]
    label: str
    direction: int = 0
    terminal: bool = False
    # crossings are ignored until t exceeds this value
    arm_after: float = -math.inf
    # located crossings failing this predicate are discarded
    accept: Optional[Callable[[float, Sequence[float]], bool]] = None


@dataclass
class EventHit:
    t: float
    y: Vector
    label: str


@dataclass
class Solution:
    t: List[float]
    y: List[Vector]
    events: List[EventHit] = field(default_factory=list)
    status: Status = Status.COMPLETED
    message: str = ""
    nfev: int = 0
    nsteps: int = 0

    @property
    def success(self) -> bool:
        return self.status in (Status.COMPLETED, Status.EVENT)


class _Stepper:
    def __init__(self, f: RHS, dim: int):
        self.f = f
        self.dim = dim
        self.nfev = 0

    def step(self, t: float, y: Vector, k1: Vector, h: float) -> Tuple[Vector, List[Vector], Vector]:
        """One DP5 step; returns the new state, the stages and the error estimate."""
        f = self.f
        (a21,), (a31, a32), (a41, a42, a43), (a51, a52, a53, a54), (a61, a62, a63, a64, a65) = _A[1:6]
        b1, _, b3, b4, b5, b6 = _B
        e1, _, e3, e4, e5, e6, e7 = _E
        k2 = f(t + 0.2 * h, [v + h * (a21 * p) for v, p in zip(y, k1)])
        k3 = f(t + 0.3 * h, [v + h * (a31 * p + a32 * q) for v, p, q in zip(y, k1, k2)])
        k4 = f(t + 0.8 * h, [v + h * (a41 * p + a42 * q + a43 * r) for v, p, q, r in zip(y, k1, k2, k3)])
        k5 = f(
            t + _C[4] * h,
            [v + h * (a51 * p + a52 * q + a53 * r + a54 * s) for v, p, q, r, s in zip(y, k1, k2, k3, k4)],
        )
        k6 = f(
            t + h,
            [
                v + h * (a61 * p + a62 * q + a63 * r + a64 * s + a65 * w)
                for v, p, q, r, s, w in zip(y, k1, k2, k3, k4, k5)
            ],
        )
        y_new = [
            v + h * (b1 * p + b3 * r + b4 * s + b5 * w + b6 * z)
            for v, p, r, s, w, z in zip(y, k1, k3, k4, k5, k6)
        ]
        k7 = f(t + h, y_new)
        self.nfev += 6
        err = [
            h * (e1 * p + e3 * r + e4 * s + e5 * w + e6 * z + e7 * g)
            for p, r, s, w, z, g in zip(k1, k3, k4, k5, k6, k7)
        ]
        return y_new, [k1, k2, k3, k4, k5, k6, k7], err


def dense(y_old: Sequence[float], ks: Sequence[Sequence[float]], h: float, s: float) -> Vector:
    """Evaluate the step interpolant at fraction ``s`` of the step."""
    powers = (s, s * s, s * s * s, s * s * s * s)
    weights = [sum(_P[j][k] * powers[k] for k in range(4)) for j in range(7)]
    return [y_old[i] + h * math.fsum(weights[j] * ks[j][i] for j in range(7)) for i in range(len(y_old))]


def _error_norm(err, y_old, y_new, rtol, atol) -> float:
    ratios = [abs(e) / (atol + rtol * max(abs(a), abs(b))) for e, a, b in zip(err, y_old, y_new)]
    top = max(ratios)
    if not math.isfinite(top):
        return math.inf
    if top == 0.0:
        return 0.0
    # scale by the largest ratio so squaring cannot overflow
    return top * math.sqrt(math.fsum((r / top) ** 2 for r in ratios) / len(ratios))


def _initial_step(stepper: _Stepper, t0, y0, f0, rtol, atol, direction, max_step) -> float:
    scale = [atol + rtol * abs(v) for v in y0]
    d0 = math.sqrt(sum((v / s) ** 2 for v, s in zip(y0, scale)) / len(y0))
    d1 = math.sqrt(sum((v / s) ** 2 for v, s in zip(f0, scale)) / len(y0))
    h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    h0 = min(h0, max_step)
    y1 = [a + direction * h0 * b for a, b in zip(y0, f0)]
    f1 = stepper.f(t0 + direction * h0, y1)
    stepper.nfev += 1
    d2 = math.sqrt(sum(((b - a) / s) ** 2 for a, b, s in zip(f0, f1, scale)) / len(y0)) / h0
    if d1 <= 1e-15 and d2 <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** (1 / 5)
    return min(100 * h0, h1, max_step)


def _locate(stepper, ev, t, y, k1, h, g_old, g_new) -> Tuple[float, Vector]:
    """Root of ``ev.fn`` inside the step ``[t, t+h]``.

    Illinois regula falsi on ``tau -> g(t+tau, RK-step(y, tau))``, which is
    smooth in ``tau`` and agrees with the accepted step at ``tau = h``.
    """
    lo, hi = 0.0, h
    g_lo, g_hi = g_old, g_new
    y_best = None
    tau = hi
    side = 0
    for _ in range(200):
        tau = (lo * g_hi - hi * g_lo) / (g_hi - g_lo)
        if not (min(lo, hi) < tau < max(lo, hi)):
            tau = 0.5 * (lo + hi)
        y_tau, _, _ = stepper.step(t, y, k1, tau)
        g = ev.fn(t + tau, y_tau)
        y_best = y_tau
        if g == 0.0:
            break
        if (g > 0) == (g_hi > 0):
            hi, g_hi = tau, g
            if side == 1:
                g_lo *= 0.5
            side = 1
        else:
            lo, g_lo = tau, g
            if side == -1:
                g_hi *= 0.5
            side = -1
        if abs(hi - lo) <= EVENT_TIME_TOL * 1e-3 * max(1.0, abs(t)) or abs(g) < 1e-14:
            break
    return t + tau, y_best


def solve(
    f: RHS,
    t0: float,
    y0: Sequence[float],
    t_end: float,
    rtol: float = 1e-10,
    atol: float = 1e-12,
    max_step: float = math.inf,
    events: Sequence[Event] = (),
    post_step: Optional[Callable[[Vector], Vector]] = None,
    record_every: int = 1,
    max_steps: int = 5_000_000,
    min_step: float = 1e-14,
    t_eval: Optional[Sequence[float]] = None,
) -> Solution:
    """Integrate ``y' = f(t, y)`` from ``t0`` to ``t_end`` (forward only).

    ``post_step`` may project each accepted state (e.g. back onto a
    simplex).  Every ``record_every``-th accepted step is stored; the
    final state and event states are always stored.  With ``t_eval`` the
    stored samples are instead interpolated at exactly those times.
    """
    if not t_end > t0:
        raise ValueError("t_end must exceed t0")
    if rtol <= 0 or atol <= 0:
        raise ValueError("tolerances must be positive")
    y = [float(v) for v in y0]
    stepper = _Stepper(f, len(y))
    k1 = f(t0, y)
    stepper.nfev += 1
    sol = Solution([t0], [list(y)])
    pending = sorted(tv for tv in t_eval if t0 < tv <= t_end) if t_eval is not None else None
    next_eval = 0
    if not all(math.isfinite(v) for v in k1):
        sol.status, sol.message = Status.NONFINITE, "non-finite derivative at the initial state"
        return sol
    t = t0
    h = _initial_step(stepper, t0, y, k1, rtol, atol, 1.0, max_step)
    g_vals = [ev.fn(t, y) for ev in events]
    steps = 0
    last_recorded = 0
    while t < t_end:
        if steps >= max_steps:
            sol.status, sol.message = Status.MAX_STEPS, f"stopped after {steps} steps"
            break
        h = min(h, max_step, t_end - t)
        if h < min_step * max(1.0, abs(t)):
            sol.status, sol.message = Status.STEP_UNDERFLOW, f"step size underflow at t={t!r}"
            break
        y_new, ks, err = stepper.step(t, y, k1, h)
        if not all(math.isfinite(v) for v in y_new) or not all(math.isfinite(v) for v in ks[6]):
            h *= 0.25
            continue
        en = _error_norm(err, y, y_new, rtol, atol)
        if en > 1.0:
            h *= max(MIN_FACTOR, SAFETY * en ** -0.2)
            continue
        t_new = t + h if t_end - (t + h) > 1e-15 * abs(t_end) else t_end
        k_new = ks[6]
        if post_step is not None:
            projected = post_step(y_new)
            if projected != y_new:
                y_new = projected
                k_new = f(t_new, y_new)
                stepper.nfev += 1
        steps += 1

        stop = None
        for idx, ev in enumerate(events):
            g_new = ev.fn(t_new, y_new)
            g_old = g_vals[idx]
            g_vals[idx] = g_new
            if t_new <= ev.arm_after:
                continue
            crossed = (g_old < 0 <= g_new and g_new != 0) or (g_old > 0 >= g_new and g_new != 0) or (
                g_old != 0 and g_new == 0
            )
            if not crossed:
                continue
            rising = g_new > g_old
            if ev.direction and (ev.direction > 0) != rising:
                continue
            te, ye = _locate(stepper, ev, t, y, k1, h, g_old, g_new)
            if ev.accept is not None and not ev.accept(te, ye):
                continue
            if stop is None or te < stop[0]:
                hit = (te, ye, ev)
                if ev.terminal:
                    stop = hit
                else:
                    sol.events.append(EventHit(te, list(ye), ev.label))
        if stop is not None:
            te, ye, ev = stop
            sol.events.append(EventHit(te, list(ye), ev.label))
            sol.t.append(te)
            sol.y.append(list(ye))
            sol.status, sol.message = Status.EVENT, ev.label
            break

        if pending is not None:
            while next_eval < len(pending) and pending[next_eval] <= t_new:
                te = pending[next_eval]
                sol.t.append(te)
                sol.y.append(y_new if te == t_new else dense(y, ks, h, (te - t) / h))
                next_eval += 1
        t, y, k1 = t_new, y_new, k_new
        if pending is None and (steps - last_recorded >= record_every or t >= t_end):
            sol.t.append(t)
            sol.y.append(list(y))
            last_recorded = steps
        factor = MAX_FACTOR if en == 0 else min(MAX_FACTOR, SAFETY * en ** -0.2)
        h *= max(MIN_FACTOR, factor)
    if sol.t[-1] != t and pending is None:
        if sol.status is not Status.EVENT:
            sol.t.append(t)
            sol.y.append(list(y))
    sol.events.sort(key=lambda e: e.t)
    sol.nfev = stepper.nfev
    sol.nsteps = steps
    return sol
