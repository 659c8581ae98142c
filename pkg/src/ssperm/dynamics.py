"""Numerical experiments on the normal form and its replicator embedding.

Two clocks are available for the planar system.  ``physical`` time
integrates ``u' = exp(a1 u + b1 v) - exp(a2 u + b2 v)`` (and likewise for
``v``) as written.  ``orbital`` time divides the field by the positive
factor ``sum_i exp(a_i u + b_i v)``, which gives

    u' = x1 - x2,   v' = x3 - x4,   x = softmax(a u + b v).

Orbits and their orientation are unchanged, the speed is bounded by one, and
nothing overflows, so long excursions (probes, return maps) use it.
"""

from __future__ import annotations

import enum
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, List, Optional, Sequence, Tuple

from scipy.optimize import brentq

from .classifier import l_infinity, orderings_hold
from .numeric import Number, sign
from .ode import Event, Solution, Status, solve
from .params import ExpParams, jacobian
from .replicator import ReplicatorSystem, SimplexState, log_invariant_q

EXP_CLAMP = 700.0
THREADS_ENV = "SSPERM_THREADS"


class TimeScale(enum.Enum):
    PHYSICAL = "physical"
    ORBITAL = "orbital"


@dataclass(frozen=True)
class IntegratorConfig:
    rel_tol: float = 1e-10
    abs_tol: float = 1e-12
    max_step: float = math.inf
    horizon: float = 1000.0
    dense_output: bool = False
    # number of uniformly spaced samples when dense_output is set
    samples: int = 1001
    # terminate once the (u, v) norm exceeds this value
    escape_norm: float = 1e8
    time_scale: TimeScale = TimeScale.PHYSICAL
    record_every: int = 1

    def __post_init__(self):
        if not (self.rel_tol > 0 and self.abs_tol > 0):
            raise ValueError("tolerances must be positive")
        if not self.horizon > 0:
            raise ValueError("horizon must be positive")
        if not self.max_step > 0:
            raise ValueError("max_step must be positive")
        if self.dense_output and self.samples < 2:
            raise ValueError("dense output needs at least two samples")


@dataclass
class Trajectory:
    times: List[float]
    states: List[Tuple[float, ...]]
    events: List[Tuple[float, str]] = field(default_factory=list)
    status: Status = Status.COMPLETED
    message: str = ""

    @property
    def dim(self) -> int:
        return len(self.states[0])

    @property
    def final(self) -> Tuple[float, ...]:
        return self.states[-1]

    @property
    def ok(self) -> bool:
        return self.status in (Status.COMPLETED, Status.EVENT)

    def norms(self) -> List[float]:
        return [math.hypot(*s) for s in self.states]


# ---------------------------------------------------------------------------
# right-hand sides


def _float_coords(params: ExpParams):
    return tuple(map(float, params.a)), tuple(map(float, params.b))


class _PhysicalField:
    """Picklable planar field with exponent clamping."""

    def __init__(self, params: ExpParams):
        (self.a1, self.a2, self.a3, self.a4), (self.b1, self.b2, self.b3, self.b4) = _float_coords(params)
        self.clamped_at: Optional[float] = None

    def _exp(self, t, s):
        if s > EXP_CLAMP or s < -EXP_CLAMP:
            if self.clamped_at is None:
                self.clamped_at = t
            s = EXP_CLAMP if s > 0 else -EXP_CLAMP
        return math.exp(s)

    def __call__(self, t, y):
        u, v = y
        e = self._exp
        return [
            e(t, self.a1 * u + self.b1 * v) - e(t, self.a2 * u + self.b2 * v),
            e(t, self.a3 * u + self.b3 * v) - e(t, self.a4 * u + self.b4 * v),
        ]


class _OrbitalField:
    def __init__(self, params: ExpParams):
        (self.a1, self.a2, self.a3, self.a4), (self.b1, self.b2, self.b3, self.b4) = _float_coords(params)
        self.clamped_at = None

    def __call__(self, t, y):
        u, v = y
        s1 = self.a1 * u + self.b1 * v
        s2 = self.a2 * u + self.b2 * v
        s3 = self.a3 * u + self.b3 * v
        s4 = self.a4 * u + self.b4 * v
        top = max(s1, s2, s3, s4)
        z1 = math.exp(s1 - top)
        z2 = math.exp(s2 - top)
        z3 = math.exp(s3 - top)
        z4 = math.exp(s4 - top)
        total = z1 + z2 + z3 + z4
        return [(z1 - z2) / total, (z3 - z4) / total]


def planar_field(params: ExpParams, time_scale: TimeScale = TimeScale.PHYSICAL):
    return _PhysicalField(params) if time_scale is TimeScale.PHYSICAL else _OrbitalField(params)


class _LogReplicatorField:
    """Replicator field in ``y_i = log x_i`` on the support of the initial state.

    Small coordinates keep their relative accuracy, and the linear
    invariant ``sum c_i y_i`` is preserved by the Runge-Kutta steps.
    """

    def __init__(self, sys: ReplicatorSystem, support: Sequence[int]):
        full = sys.float_matrix()
        self.m = [[full[i][j] for j in support] for i in support]

    def __call__(self, t, y):
        x = _softmax(y)
        m = self.m
        ax = [math.fsum(row[j] * x[j] for j in range(len(x))) for row in m]
        mean = math.fsum(xi * axi for xi, axi in zip(x, ax))
        return [axi - mean for axi in ax]


def _softmax(y):
    top = max(y)
    z = [math.exp(v - top) for v in y]
    total = math.fsum(z)
    return [v / total for v in z]


def _recenter(y):
    top = max(y)
    return [v - top for v in y]


def _to_trajectory(sol: Solution, clamped_at: Optional[float] = None) -> Trajectory:
    times, states = [], []
    for t, y in zip(sol.t, sol.y):
        if times and t <= times[-1]:
            continue
        times.append(t)
        states.append(tuple(y))
    events = [(e.t, e.label) for e in sol.events]
    if clamped_at is not None:
        events.append((clamped_at, "exponent-clamped"))
        events.sort()
    status, message = sol.status, sol.message
    return Trajectory(times, states, events, status, message)


def _eval_times(cfg: IntegratorConfig, t0: float = 0.0) -> Optional[List[float]]:
    if not cfg.dense_output:
        return None
    n = cfg.samples
    return [t0 + cfg.horizon * i / (n - 1) for i in range(1, n)]


# ---------------------------------------------------------------------------
# integration


def integrate_uv(params: ExpParams, initial: Sequence[float], cfg: IntegratorConfig = IntegratorConfig()) -> Trajectory:
    """Integrate the planar normal form from ``initial`` over ``[0, cfg.horizon]``.

    The run stops early with an ``unbounded`` event once the norm of
    ``(u, v)`` reaches ``cfg.escape_norm``.
    """
    u0, v0 = (float(initial[0]), float(initial[1]))
    if not (math.isfinite(u0) and math.isfinite(v0)):
        raise ValueError("initial state must be finite")
    f = planar_field(params, cfg.time_scale)
    escape = cfg.escape_norm
    events = [Event(lambda t, y: math.hypot(y[0], y[1]) - escape, "unbounded", direction=1, terminal=True)]
    sol = solve(
        f,
        0.0,
        [u0, v0],
        cfg.horizon,
        rtol=cfg.rel_tol,
        atol=cfg.abs_tol,
        max_step=cfg.max_step,
        events=events,
        record_every=cfg.record_every,
        t_eval=_eval_times(cfg),
    )
    return _to_trajectory(sol, f.clamped_at)


def integrate_simplex(
    sys: ReplicatorSystem, initial: SimplexState, cfg: IntegratorConfig = IntegratorConfig()
) -> Trajectory:
    """Integrate the replicator equation on the face spanned by the initial support.

    The stepper works in logarithmic coordinates; tolerances apply to
    ``log x_i``.  Coordinates that start at zero stay at zero.
    """
    support = [i for i, v in enumerate(initial) if float(v) > 0.0]
    if not support:
        raise ValueError("initial state has empty support")
    f = _LogReplicatorField(sys, support)
    sol = solve(
        f,
        0.0,
        _recenter([math.log(float(initial[i])) for i in support]),
        cfg.horizon,
        rtol=cfg.rel_tol,
        atol=cfg.abs_tol,
        max_step=cfg.max_step,
        post_step=_recenter,
        record_every=cfg.record_every,
        t_eval=_eval_times(cfg),
    )
    traj = _to_trajectory(sol)
    states = []
    for y in traj.states:
        x = [0.0] * 4
        for i, xi in zip(support, _softmax(y)):
            x[i] = xi
        states.append(tuple(x))
    traj.states = states
    return traj


def q_drift(sys: ReplicatorSystem, traj: Trajectory) -> float:
    """Largest ``|Q(x(t)) / Q(x(0)) - 1|`` along a simplex trajectory."""
    q0 = log_invariant_q(sys, SimplexState.normalized(traj.states[0]))
    worst = 0.0
    for s in traj.states:
        q = log_invariant_q(sys, SimplexState.normalized(s))
        worst = max(worst, abs(math.expm1(q - q0)))
    return worst


def scaled_divergence(params: ExpParams, u: float, v: float) -> float:
    """Divergence of the field multiplied by ``exp(-a1 u - b4 v)``."""
    (a1, a2, a3, _), (_, b2, b3, b4) = _float_coords(params)
    return (a1 - a2) * math.exp((a2 - a1) * u + (b2 - b4) * v) + (b3 - b4) * math.exp(
        (a3 - a1) * u + (b3 - b4) * v
    )


# ---------------------------------------------------------------------------
# batch execution


def worker_count() -> int:
    try:
        return max(1, int(os.environ.get(THREADS_ENV, "1")))
    except ValueError:
        return 1


def _ordered_map(fn, items: Sequence, workers: Optional[int] = None) -> list:
    workers = worker_count() if workers is None else workers
    if workers <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


# ---------------------------------------------------------------------------
# permanence probe


class ProbeVerdict(enum.Enum):
    BOUNDED_ATTRACTOR = "BoundedAttractor"
    ESCAPING = "Escaping"
    INCONCLUSIVE = "Inconclusive"


@dataclass(frozen=True)
class OrbitSummary:
    initial: Tuple[float, float]
    tail_max: float
    tail_min: float
    checkpoints: Tuple[float, ...]
    escaped: bool
    final_time: float

    @property
    def growing(self) -> bool:
        last = self.checkpoints[-3:]
        return len(last) == 3 and last[0] < last[1] < last[2]



@dataclass(frozen=True)
class ProbeReport:
    initial_set: str
    ring_radius: float
    escape_radius: float
    orbits: Tuple[OrbitSummary, ...]
    verdict: ProbeVerdict


PROBE_CHECKPOINTS = 10
PROBE_WINDINGS = 400
INNER_FRACTION = 0.01
# an orbit counts as captured when its tail stays below this fraction of the ring
CAPTURE_FRACTION = 0.9


class _WindingCounter:
    """Accepts the ``limit``-th crossing of the positive u-axis."""

    def __init__(self, limit: int):
        self.limit = limit
        self.count = 0

    def __call__(self, t, y) -> bool:
        if y[0] <= 0:
            return False
        self.count += 1
        return self.count >= self.limit


def _probe_orbit(job) -> OrbitSummary:
    params, start, cfg, escape_radius, windings = job
    f = _OrbitalField(params)
    events = [
        Event(lambda t, y: math.hypot(y[0], y[1]) - escape_radius, "escape", direction=1, terminal=True),
        Event(lambda t, y: y[1], "windings", terminal=True, accept=_WindingCounter(windings)),
    ]
    sol = solve(
        f, 0.0, list(start), cfg.horizon, rtol=cfg.rel_tol, atol=cfg.abs_tol, max_step=cfg.max_step, events=events
    )
    escaped = sol.status is Status.EVENT and sol.message == "escape"
    t_end = sol.t[-1]
    norms = [math.hypot(*y) for y in sol.y]
    # checkpoints are the maximal norms over successive windings; a closed
    # orbit repeats its maximum, so only a spiral can show a growing run
    loops = [norms[0]]
    for k in range(1, len(norms)):
        (u0, v0), (u1, v1) = sol.y[k - 1], sol.y[k]
        if u1 > 0 and u0 > 0 and (v0 < 0) != (v1 < 0):
            loops.append(norms[k])
        else:
            loops[-1] = max(loops[-1], norms[k])
    windows = loops[-PROBE_CHECKPOINTS:]
    tail = [n for t, n in zip(sol.t, norms) if t >= 0.8 * t_end] or norms[-1:]
    return OrbitSummary(tuple(start), max(tail), min(tail), tuple(windows), escaped, t_end)


def permanence_probe(
    params: ExpParams,
    cfg: IntegratorConfig = IntegratorConfig(rel_tol=1e-8, abs_tol=1e-10, horizon=2e5),
    ring_radius: float = 20.0,
    n_points: int = 8,
    workers: Optional[int] = None,
    windings: int = PROBE_WINDINGS,
) -> ProbeReport:
    """Numerical witness for (non-)permanence.

    Orbits start on the circle of radius ``ring_radius`` and on a small
    circle around the origin and run in orbital time, each until the
    horizon or until it has crossed the positive u-axis ``windings``
    times.  ``Escaping`` needs an orbit that reaches ten times the ring
    radius with growing maxima over its last three windings.
    ``BoundedAttractor`` needs every orbit to stay, over the last fifth of
    its run, well inside the ring.
    """
    if not ring_radius > 0:
        raise ValueError("ring_radius must be positive")
    if n_points < 8:
        raise ValueError("n_points must be at least 8")
    escape_radius = 10.0 * ring_radius
    starts = []
    for radius in (ring_radius, INNER_FRACTION * ring_radius):
        for k in range(n_points):
            angle = 2 * math.pi * (k + 0.5) / n_points
            starts.append((radius * math.cos(angle), radius * math.sin(angle)))
    jobs = [(params, s, cfg, escape_radius, windings) for s in starts]
    orbits = tuple(_ordered_map(_probe_orbit, jobs, workers))
    if any(o.escaped and o.growing for o in orbits):
        verdict = ProbeVerdict.ESCAPING
    elif all(not o.escaped and o.tail_max <= CAPTURE_FRACTION * ring_radius for o in orbits):
        verdict = ProbeVerdict.BOUNDED_ATTRACTOR
    else:
        verdict = ProbeVerdict.INCONCLUSIVE
    desc = f"{n_points} points on each of the circles r={ring_radius:g} and r={INNER_FRACTION * ring_radius:g}"
    return ProbeReport(desc, ring_radius, escape_radius, orbits, verdict)


# ---------------------------------------------------------------------------
# return maps and limit cycles


@dataclass(frozen=True)
class FixedPoint:
    r: float
    slope: float
    stability: str


@dataclass(frozen=True)
class CycleReport:
    section_angle: float
    samples: Tuple[Tuple[float, Optional[float]], ...]
    fixed_points: Tuple[FixedPoint, ...]
    resolution: float

    @property
    def section(self) -> str:
        return f"ray from the origin at angle {self.section_angle:g} rad"

    @property
    def count(self) -> int:
        return len(self.fixed_points)

    @property
    def stability_pattern(self) -> Tuple[str, ...]:
        return tuple(fp.stability for fp in self.fixed_points)


RETURN_HORIZON = 1e6
FIXED_POINT_RESOLUTION = 1e-8


def _return_job(job) -> Optional[float]:
    params, angle, r, rtol, atol, horizon = job
    return _first_return(params, angle, r, rtol, atol, horizon)


def section_crossing(
    params: ExpParams, angle: float, r: float, rtol: float, atol: float, horizon: float
) -> Optional[Tuple[float, float, float]]:
    """``(t, u, v)`` at the next same-direction hit of the section ray, in orbital time."""
    c, s = math.cos(angle), math.sin(angle)
    f = _OrbitalField(params)
    start = [r * c, r * s]
    g0 = f(0.0, start)
    # crossing direction across the line spanned by the ray
    rot = -s * g0[0] + c * g0[1]
    if rot == 0:
        return None
    direction = 1 if rot > 0 else -1
    ev = Event(
        lambda t, y: -s * y[0] + c * y[1],
        "section",
        direction=direction,
        terminal=True,
        accept=lambda t, y: c * y[0] + s * y[1] > 0,
    )
    sol = solve(f, 0.0, start, horizon, rtol=rtol, atol=atol, events=[ev])
    if sol.status is not Status.EVENT:
        return None
    u, v = sol.y[-1]
    return sol.t[-1], u, v


def _first_return(params: ExpParams, angle: float, r: float, rtol: float, atol: float, horizon: float) -> Optional[float]:
    """Distance from the origin of the next same-direction hit of the section ray."""
    hit = section_crossing(params, angle, r, rtol, atol, horizon)
    if hit is None:
        return None
    return math.cos(angle) * hit[1] + math.sin(angle) * hit[2]


def return_map(
    params: ExpParams,
    r_values: Sequence[float],
    angle: float = 0.0,
    cfg: IntegratorConfig = IntegratorConfig(),
    workers: Optional[int] = None,
) -> List[Optional[float]]:
    horizon = max(cfg.horizon, RETURN_HORIZON)
    jobs = [(params, angle, float(r), cfg.rel_tol, cfg.abs_tol, horizon) for r in r_values]
    return _ordered_map(_return_job, jobs, workers)


def poincare_return_map(
    params: ExpParams,
    r_grid: Sequence[float],
    angle: float = 0.0,
    cfg: IntegratorConfig = IntegratorConfig(),
    resolution: float = FIXED_POINT_RESOLUTION,
    workers: Optional[int] = None,
) -> CycleReport:
    """Sample ``R(r)`` on the section ray and locate its fixed points.

    Each sign change of ``R(r) - r`` between neighbouring returning samples
    is refined to ``resolution`` with Brent's method; the slope comes from a
    central difference and a cycle is stable iff ``|slope| < 1``.
    """
    if sign(jacobian(params).det, params.scale, 2) == 0:
        raise ValueError("the return map needs an isolated equilibrium at the origin")
    grid = sorted(float(r) for r in r_grid)
    if not grid or grid[0] <= 0:
        raise ValueError("r_grid must hold positive radii")
    horizon = max(cfg.horizon, RETURN_HORIZON)
    values = return_map(params, grid, angle, cfg, workers)

    def gap(r: float) -> float:
        value = _first_return(params, angle, r, cfg.rel_tol, cfg.abs_tol, horizon)
        if value is None:
            raise ArithmeticError(f"no return from r={r}")
        return value - r

    brackets = []
    for (r0, R0), (r1, R1) in zip(zip(grid, values), zip(grid[1:], values[1:])):
        if R0 is None or R1 is None:
            continue
        d0, d1 = R0 - r0, R1 - r1
        if d0 == 0:
            brackets.append((r0, r0))
        elif d0 * d1 < 0:
            brackets.append((r0, r1))
    roots = []
    for lo, hi in brackets:
        root = lo if lo == hi else brentq(gap, lo, hi, xtol=resolution, rtol=1e-15)
        if roots and abs(root - roots[-1]) < resolution:
            continue
        roots.append(root)
    fixed = []
    for root in roots:
        h = 1e-3 * root
        up = _first_return(params, angle, root + h, cfg.rel_tol, cfg.abs_tol, horizon)
        down = _first_return(params, angle, root - h, cfg.rel_tol, cfg.abs_tol, horizon)
        if up is None or down is None:
            continue
        slope = (up - down) / (2 * h)
        fixed.append(FixedPoint(root, slope, "stable" if abs(slope) < 1 else "unstable"))
    samples = tuple(zip(grid, values))
    return CycleReport(angle, samples, tuple(fixed), resolution)


# ---------------------------------------------------------------------------
# bifurcation quantities


@dataclass(frozen=True)
class BifurcationQuantities:
    trace: Number
    det: Number
    D: Number
    L1: float
    L_infinity: Optional[Number] = None


def focal_value_l1(params: ExpParams) -> BifurcationQuantities:
    """First focal value at a Hopf point in the frame ``P1 = (0, 0)``.

    ``L1 = -(pi/8) (b3-b4) [D b2 - (a3-a4) b3 b4] / (b2 sqrt(det J))`` with
    ``D = a3 a4 + a3 b4 - a4 b3``; requires ``a1 = b1 = 0``, ``tr J = 0``
    and ``det J > 0``.
    """
    a1, a2, a3, a4 = params.a
    b1, b2, b3, b4 = params.b
    s = params.scale
    if sign(a1, s) != 0 or sign(b1, s) != 0:
        raise ValueError("the focal-value formula needs the normalization a1 = b1 = 0")
    jac = jacobian(params)
    if sign(jac.trace, s) != 0:
        raise ValueError("the focal value is defined at tr J = 0")
    if sign(jac.det, s, 2) <= 0:
        raise ValueError("the focal value needs det J > 0")
    if sign(b2, s) == 0:
        raise ValueError("the focal-value formula divides by b2")
    D = a3 * a4 + a3 * b4 - a4 * b3
    bracket = D * b2 - (a3 - a4) * b3 * b4
    L1 = -(math.pi / 8) * float((b3 - b4) * bracket) / (float(b2) * math.sqrt(float(jac.det)))
    if L1 == 0:
        L1 = 0.0
    a_ok, b_ok = orderings_hold(params)
    l_inf = None
    if a_ok and b_ok:
        try:
            l_inf = l_infinity(params)
        except ValueError:
            l_inf = None
    return BifurcationQuantities(jac.trace, jac.det, D, L1, l_inf)


def three_cycle_scenario(epsilon: Number, mu: Number) -> ExpParams:
    """The Bautin-point family: ``b2 = 35 - epsilon`` and ``a2 = -8 - mu``."""
    if epsilon < 0 or mu < 0:
        raise ValueError("epsilon and mu must be non-negative")
    return ExpParams((0, -8 - mu, 10, -20), (0, 35 - epsilon, 20, 28))


# Log-spaced section radii covering the small cycles near the origin and the
# large one that bounds them.
def default_cycle_grid(r_min: float = 2e-3, r_max: float = 8.0, n: int = 48) -> List[float]:
    ratio = (r_max / r_min) ** (1 / (n - 1))
    return [r_min * ratio**k for k in range(n)]


THREE_CYCLE_PATTERN = ("stable", "unstable", "stable")


def has_three_cycles(report: CycleReport) -> bool:
    """Stable, unstable, stable among consecutive detected cycles (inside out)."""
    pattern = report.stability_pattern
    return any(pattern[k : k + 3] == THREE_CYCLE_PATTERN for k in range(len(pattern) - 2))


def search_three_cycles(
    eps_values: Iterable[float] = (0.05, 0.1, 0.2, 0.5),
    mu_values: Iterable[float] = (1e-4, 3e-4, 1e-3, 3e-3, 1e-2),
    r_grid: Optional[Sequence[float]] = None,
    cfg: IntegratorConfig = IntegratorConfig(),
    workers: Optional[int] = None,
) -> Optional[Tuple[float, float, CycleReport]]:
    """First ``(epsilon, mu)`` in scan order whose return map shows three nested cycles.

    ``epsilon`` is scanned in the outer loop: it fixes the negative focal
    value and the positive ``L_inf`` before ``mu`` pushes the trace above
    zero.
    """
    grid = list(r_grid) if r_grid is not None else default_cycle_grid()
    mu_values = list(mu_values)
    for eps in eps_values:
        for mu in mu_values:
            report = poincare_return_map(three_cycle_scenario(eps, mu), grid, 0.0, cfg, workers=workers)
            if has_three_cycles(report):
                return eps, mu, report
    return None


__all__ = [
    "BifurcationQuantities",
    "CycleReport",
    "FixedPoint",
    "IntegratorConfig",
    "OrbitSummary",
    "ProbeReport",
    "ProbeVerdict",
    "TimeScale",
    "Trajectory",
    "default_cycle_grid",
    "focal_value_l1",
    "has_three_cycles",
    "integrate_simplex",
    "integrate_uv",
    "permanence_probe",
    "planar_field",
    "poincare_return_map",
    "q_drift",
    "return_map",
    "scaled_divergence",
    "search_three_cycles",
    "section_crossing",
    "three_cycle_scenario",
    "worker_count",
]
