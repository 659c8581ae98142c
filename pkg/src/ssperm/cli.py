"""Command-line front end: classify, simulate, probe, cycles, sweep."""

from __future__ import annotations

import argparse
import contextlib
import itertools
import math
import sys
from dataclasses import dataclass, replace
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, TextIO, Tuple

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .classifier import Classification, Verdict, classify, classify_s_system, robust_permanence
from .dynamics import (
    IntegratorConfig,
    ProbeReport,
    ProbeVerdict,
    _ordered_map,
    default_cycle_grid,
    integrate_simplex,
    integrate_uv,
    permanence_probe,
    poincare_return_map,
)
from .numeric import pattern_string
from .params import (
    EQUILIBRIUM_RTOL,
    EquilibriumKind,
    ExpParams,
    PositiveEquilibrium,
    SSystemSpec,
    equilibrium_residuals,
    find_positive_equilibrium,
    to_exponential,
)
from .records import (
    classification_record,
    cycle_record,
    dumps,
    parse_number,
    probe_record,
    trajectory_summary,
    write_trajectory_csv,
)
from .replicator import SimplexState, embed
from .scenarios import by_name

EXIT_OK = 0
EXIT_PARSE = 2
EXIT_DEGENERATE = 3
EXIT_NUMERICAL = 4

MAX_GRID = 10**6

SCENARIO_ARGS = ("k", "gamma", "alpha", "beta", "eps", "mu")
SPEC_KEYS = ("alpha1", "alpha2", "beta1", "beta2", "g11", "g12", "g21", "g22", "h11", "h12", "h21", "h22")
EXP_KEYS = ("a1", "a2", "a3", "a4", "b1", "b2", "b3", "b4")
INTEGRATOR_KEYS = {"rel_tol": float, "abs_tol": float, "max_step": float, "horizon": float, "dense_output": bool, "samples": int}


class UsageError(Exception):
    """Malformed input; maps to exit code 2."""


class DegenerateInput(Exception):
    """The input has no isolated positive equilibrium; maps to exit code 3."""


def number(text: str):
    """Integers and ``p/q`` stay exact; everything else is a float."""
    text = text.strip()
    try:
        return int(text)
    except ValueError:
        pass
    if "/" in text:
        try:
            return Fraction(text)
        except (ValueError, ZeroDivisionError) as exc:
            raise argparse.ArgumentTypeError(f"bad rational {text!r}") from exc
    try:
        value = float(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from exc
    if not math.isfinite(value):
        raise argparse.ArgumentTypeError(f"not finite: {text!r}")
    return value


def _doc_number(value, where: str):
    try:
        return parse_number(value)
    except ValueError as exc:
        raise UsageError(f"{where}: {exc}") from exc


# ---------------------------------------------------------------------------
# input documents


@dataclass
class Problem:
    """A resolved input: normal-form coordinates plus where they came from."""

    params: Optional[ExpParams]
    spec: Optional[SSystemSpec] = None
    equilibrium: Optional[PositiveEquilibrium] = None
    scenario: Optional[str] = None
    scenario_args: Optional[Dict[str, object]] = None
    integrator: Optional[Dict[str, object]] = None


def _scenario_problem(name: str, args: Dict[str, object]) -> Problem:
    try:
        sc = by_name(name, **args)
    except KeyError as exc:
        raise UsageError(str(exc.args[0])) from exc
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    return Problem(sc.params, scenario=name, scenario_args=dict(args))


def parse_document(text: str) -> Problem:
    try:
        doc = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise UsageError(f"invalid document: {exc}") from exc
    forms = [key for key in ("exp_params", "s_system", "scenario") if key in doc]
    if len(forms) != 1:
        raise UsageError("the document needs exactly one of [exp_params], [s_system], [scenario]")
    integrator = doc.get("integrator")
    if integrator is not None:
        unknown = set(integrator) - set(INTEGRATOR_KEYS)
        if unknown:
            raise UsageError(f"unknown integrator keys: {sorted(unknown)}")
    form = forms[0]
    section = doc[form]
    if not isinstance(section, dict):
        raise UsageError(f"[{form}] must be a table")
    if form == "exp_params":
        try:
            a = tuple(_doc_number(x, "exp_params.a") for x in section["a"])
            b = tuple(_doc_number(x, "exp_params.b") for x in section["b"])
            problem = Problem(ExpParams(a, b))
        except KeyError as exc:
            raise UsageError(f"exp_params needs {exc.args[0]!r}") from exc
        except (TypeError, ValueError) as exc:
            raise UsageError(f"exp_params: {exc}") from exc
    elif form == "s_system":
        missing = [k for k in SPEC_KEYS if k not in section]
        if missing:
            raise UsageError(f"s_system is missing {missing}")
        try:
            spec = SSystemSpec(*(float(_doc_number(section[k], f"s_system.{k}")) for k in SPEC_KEYS))
            eq = None
            if "x1_star" in section or "x2_star" in section:
                eq = PositiveEquilibrium(float(section["x1_star"]), float(section["x2_star"]))
        except (KeyError, TypeError, ValueError) as exc:
            raise UsageError(f"s_system: {exc}") from exc
        problem = Problem(None, spec=spec, equilibrium=eq)
    else:
        name = section.get("name")
        if not isinstance(name, str):
            raise UsageError("[scenario] needs a name")
        args = {}
        for key, value in section.items():
            if key == "name":
                continue
            if key not in SCENARIO_ARGS:
                raise UsageError(f"unknown scenario argument {key!r}")
            args[key] = _doc_number(value, f"scenario.{key}")
        problem = _scenario_problem(name, args)
    problem.integrator = integrator
    return problem


def load_problem(ns: argparse.Namespace, stdin: TextIO) -> Problem:
    if (ns.input is None) == (ns.scenario is None):
        raise UsageError("give exactly one of --input and --scenario")
    if ns.scenario is not None:
        args = {k: getattr(ns, k) for k in SCENARIO_ARGS if getattr(ns, k) is not None}
        return _scenario_problem(ns.scenario, args)
    if ns.input == "-":
        text = stdin.read()
    else:
        try:
            with open(ns.input, encoding="utf-8") as fh:
                text = fh.read()
        except OSError as exc:
            raise UsageError(f"cannot read {ns.input}: {exc}") from exc
    return parse_document(text)


def resolve_params(problem: Problem) -> Tuple[ExpParams, Optional[PositiveEquilibrium]]:
    """Normal-form parameters, going through the equilibrium for S-systems."""
    if problem.params is not None:
        return problem.params, None
    spec = problem.spec
    eq = problem.equilibrium
    if eq is None:
        eqs = find_positive_equilibrium(spec)
        if eqs.kind is EquilibriumKind.NONE:
            raise DegenerateInput("the S-system has no positive equilibrium")
        eq = eqs.point
    else:
        r1, r2 = equilibrium_residuals(spec, eq)
        if max(abs(r1), abs(r2)) > 1e3 * EQUILIBRIUM_RTOL:
            raise UsageError("the supplied equilibrium does not solve the steady-state equations")
    return to_exponential(spec, eq), eq


def integrator_config(problem: Problem, ns: argparse.Namespace, base: IntegratorConfig) -> IntegratorConfig:
    overrides = {}
    for key, kind in INTEGRATOR_KEYS.items():
        if problem.integrator and key in problem.integrator:
            overrides[key] = kind(problem.integrator[key])
    for key in ("rel_tol", "abs_tol", "horizon", "max_step"):
        value = getattr(ns, key, None)
        if value is not None:
            overrides[key] = float(value)
    try:
        return replace(base, **overrides)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


# ---------------------------------------------------------------------------
# text rendering


def _fmt(x) -> str:
    if x is None:
        return "-"
    if isinstance(x, Fraction):
        return str(x)
    if isinstance(x, float):
        return format(x, ".10g")
    return str(x)


def classification_text(result: Classification, robust) -> str:
    lines = [f"verdict: {result.verdict.value}", f"case: {result.case.value if result.case else '-'}"]
    lines.append(f"reason: {result.reason}")
    if result.family:
        lines.append(f"family: {result.family}")
    if result.jacobian is not None:
        jac = result.jacobian
        lines.append(f"J: [[{_fmt(jac.j11)}, {_fmt(jac.j12)}], [{_fmt(jac.j21)}, {_fmt(jac.j22)}]]")
        lines.append(f"sgn J: {pattern_string(jac.signs)}")
        lines.append(f"det J: {_fmt(jac.det)}  tr J: {_fmt(jac.trace)}")
    if result.c is not None:
        lines.append("c: (" + ", ".join(_fmt(x) for x in result.c.as_tuple()) + ")")
    if result.l_infinity is not None:
        lines.append(f"L_inf: {_fmt(result.l_infinity)}")
    if result.L is not None:
        lines.append(f"L: {_fmt(result.L)}")
    if result.gas is not None:
        lines.append(f"globally stable: {'yes' if result.gas else 'no'}")
    if result.equilibrium is not None:
        lines.append(f"equilibrium: ({_fmt(result.equilibrium.x1_star)}, {_fmt(result.equilibrium.x2_star)})")
    if robust is not None:
        lines.append(f"robust: {'yes (' + robust.case.value + ')' if robust.robust else 'no'}")
    return "\n".join(lines)


def probe_text(report: ProbeReport) -> str:
    lines = [f"verdict: {report.verdict.value}", f"initial set: {report.initial_set}"]
    lines.append(f"escape radius: {report.escape_radius:g}")
    for o in report.orbits:
        flag = " escaped" if o.escaped else ""
        lines.append(
            f"  start ({o.initial[0]:.6g}, {o.initial[1]:.6g}): tail max {o.tail_max:.6g},"
            f" tail min {o.tail_min:.6g}, t={o.final_time:.6g}{flag}"
        )
    return "\n".join(lines)


def cycles_text(report) -> str:
    lines = [f"section: {report.section}", f"cycles: {report.count}"]
    for fp in report.fixed_points:
        lines.append(f"  r = {fp.r:.12g}  slope = {fp.slope:.9g}  {fp.stability}")
    return "\n".join(lines)


# ---------------------------------------------------------------------------
# plots


def _pyplot():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    return plt


def plot_trajectory(traj, path: str) -> None:
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(5, 5))
    if traj.dim == 2:
        ax.plot([s[0] for s in traj.states], [s[1] for s in traj.states], lw=0.8)
        ax.plot([0.0], [0.0], "ko", ms=4, label="equilibrium")
        ax.set_xlabel("u")
        ax.set_ylabel("v")
        ax.legend(loc="best")
    else:
        for i in range(traj.dim):
            ax.plot(traj.times, [s[i] for s in traj.states], lw=0.8, label=f"x{i + 1}")
        ax.set_xlabel("t")
        ax.legend(loc="best")
    fig.savefig(path, format="svg")
    plt.close(fig)


def plot_cycles(report, path: str) -> None:
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(6, 4))
    pts = [(r, R - r) for r, R in report.samples if R is not None]
    ax.plot([p[0] for p in pts], [p[1] for p in pts], ".-", lw=0.8)
    ax.axhline(0.0, color="k", lw=0.5)
    for fp in report.fixed_points:
        ax.plot([fp.r], [0.0], "o" if fp.stability == "stable" else "s", mfc="none")
    ax.set_xscale("log")
    ax.set_xlabel("r")
    ax.set_ylabel("R(r) - r")
    fig.savefig(path, format="svg")
    plt.close(fig)


# ---------------------------------------------------------------------------
# commands


def _emit(ns, out: TextIO, record: dict, text: str) -> None:
    out.write((dumps(record) if ns.format == "records" else text) + "\n")


def _open_out(ns, default: TextIO):
    return open(ns.out, "w", encoding="utf-8", newline="") if ns.out else contextlib.nullcontext(default)


def cmd_classify(ns, problem: Problem, out: TextIO) -> int:
    if problem.params is None and problem.equilibrium is None:
        result = classify_s_system(problem.spec)
        if result.jacobian is None:
            _emit(ns, out, classification_record(result), classification_text(result, None))
            return EXIT_DEGENERATE
        params = to_exponential(problem.spec, result.equilibrium)
    else:
        params, eq = resolve_params(problem)
        result = classify(params)
        if eq is not None:
            result = replace(result, equilibrium=eq)
    robust = robust_permanence(params)
    _emit(ns, out, classification_record(result, params, robust), classification_text(result, robust))
    return EXIT_DEGENERATE if result.verdict is Verdict.DEGENERATE else EXIT_OK


def _parse_initial(text: str) -> List[float]:
    try:
        values = [float(x) for x in text.split(",")]
    except ValueError as exc:
        raise UsageError(f"bad --initial {text!r}") from exc
    if len(values) not in (2, 4) or not all(math.isfinite(v) for v in values):
        raise UsageError("--initial takes two (u,v) or four (x1..x4) finite values")
    return values


def cmd_simulate(ns, problem: Problem, out: TextIO) -> int:
    params, _ = resolve_params(problem)
    base = IntegratorConfig()
    if ns.samples is not None:
        base = replace(base, dense_output=True, samples=ns.samples)
    cfg = integrator_config(problem, ns, base)
    initial = _parse_initial(ns.initial)
    if len(initial) == 2:
        traj = integrate_uv(params, initial, cfg)
    else:
        try:
            state = SimplexState(*initial)
        except ValueError as exc:
            raise UsageError(str(exc)) from exc
        traj = integrate_simplex(embed(params), state, cfg)
    summary = trajectory_summary(traj)
    if ns.out:
        with open(ns.out, "w", encoding="utf-8", newline="") as fh:
            write_trajectory_csv(traj, fh)
        text = f"status: {summary['status']}  points: {summary['points']}  t_final: {summary['t_final']:.10g}"
        _emit(ns, out, summary, text)
    else:
        write_trajectory_csv(traj, out)
    if ns.plot:
        plot_trajectory(traj, ns.plot)
    return EXIT_OK if traj.ok else EXIT_NUMERICAL


def cmd_probe(ns, problem: Problem, out: TextIO) -> int:
    params, _ = resolve_params(problem)
    cfg = integrator_config(problem, ns, IntegratorConfig(rel_tol=1e-8, abs_tol=1e-10, horizon=2e5))
    try:
        report = permanence_probe(params, cfg, ring_radius=ns.radius, n_points=ns.n)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    with _open_out(ns, out) as fh:
        _emit(ns, fh, probe_record(report), probe_text(report))
    return EXIT_OK


def cmd_cycles(ns, problem: Problem, out: TextIO) -> int:
    params, _ = resolve_params(problem)
    cfg = integrator_config(problem, ns, IntegratorConfig())
    samples = ns.samples if ns.samples is not None else 48
    if not (0 < ns.r_min < ns.r_max) or samples < 2:
        raise UsageError("need 0 < r-min < r-max and at least two samples")
    try:
        report = poincare_return_map(params, default_cycle_grid(ns.r_min, ns.r_max, samples), ns.angle, cfg)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    with _open_out(ns, out) as fh:
        _emit(ns, fh, cycle_record(report), cycles_text(report))
    if ns.plot:
        plot_cycles(report, ns.plot)
    return EXIT_OK


# -- sweep


def parse_range(text: str) -> Tuple[str, list]:
    """``NAME=start:stop:num``, inclusive of both ends; exact when the ends are."""
    try:
        name, spec = text.split("=", 1)
        start_s, stop_s, num_s = spec.split(":")
        start, stop, num = number(start_s), number(stop_s), int(num_s)
    except (ValueError, argparse.ArgumentTypeError) as exc:
        raise UsageError(f"bad range {text!r}, expected NAME=start:stop:num") from exc
    if num < 0:
        raise UsageError(f"negative point count in {text!r}")
    if num > MAX_GRID:
        raise UsageError(f"range {text!r} exceeds {MAX_GRID} points")
    exact = not isinstance(start, float) and not isinstance(stop, float)
    if num == 1:
        values = [start]
    elif exact:
        values = [start + Fraction(stop - start) * i / (num - 1) for i in range(num)]
    else:
        values = [start + (stop - start) * i / (num - 1) for i in range(num)]
    values = [v.numerator if isinstance(v, Fraction) and v.denominator == 1 else v for v in values]
    return name.strip(), values


def _sweep_point(job):
    kind, base, assignment = job
    if kind == "scenario":
        name, args = base
        params = by_name(name, **{**args, **assignment}).params
    else:
        a, b = list(base.a), list(base.b)
        for key, value in assignment.items():
            (a if key[0] == "a" else b)[int(key[1]) - 1] = value
        params = ExpParams(tuple(a), tuple(b))
    result = classify(params)
    return params, result, robust_permanence(params)


def cmd_sweep(ns, problem: Problem, out: TextIO) -> int:
    ranges = [parse_range(r) for r in (ns.range or [])]
    if not ranges:
        raise UsageError("sweep needs at least one --range")
    names = [n for n, _ in ranges]
    if len(set(names)) != len(names):
        raise UsageError("a parameter appears in two ranges")
    if problem.scenario is not None:
        allowed = SCENARIO_ARGS
        kind, base = "scenario", (problem.scenario, problem.scenario_args or {})
    elif problem.params is not None:
        allowed = EXP_KEYS
        kind, base = "exp", problem.params
    else:
        raise UsageError("sweep needs an [exp_params] or [scenario] template")
    bad = [n for n in names if n not in allowed]
    if bad:
        raise UsageError(f"cannot sweep {bad}; allowed: {list(allowed)}")
    total = math.prod(len(v) for _, v in ranges)
    if total > MAX_GRID:
        raise UsageError(f"grid of {total} points exceeds {MAX_GRID}")
    jobs = [(kind, base, dict(zip(names, combo))) for combo in itertools.product(*(v for _, v in ranges))]
    try:
        results = _ordered_map(_sweep_point, jobs)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    counts = {v.value: 0 for v in Verdict}
    with _open_out(ns, out) as fh:
        if ns.format == "text":
            fh.write("\t".join(names + ["verdict", "case", "robust"]) + "\n")
        for job, (params, result, robust) in zip(jobs, results):
            counts[result.verdict.value] += 1
            point = job[2]
            if ns.format == "records":
                rec = classification_record(result, params, robust)
                rec["point"] = point
                fh.write(dumps(rec) + "\n")
            else:
                cells = [_fmt(point[n]) for n in names]
                cells += [result.verdict.value, result.case.value if result.case else "-", "yes" if robust.robust else "no"]
                fh.write("\t".join(cells) + "\n")
        summary = {"record": "summary", "points": len(jobs), "counts": counts}
        text = "# " + ", ".join(f"{k}: {v}" for k, v in counts.items()) + f" (of {len(jobs)})"
        _emit(ns, fh, summary, text)
    return EXIT_OK


COMMANDS = {
    "classify": cmd_classify,
    "simulate": cmd_simulate,
    "probe": cmd_probe,
    "cycles": cmd_cycles,
    "sweep": cmd_sweep,
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="ssperm", description="Permanence of planar S-systems.")
    p.add_argument("command", choices=sorted(COMMANDS))
    p.add_argument("--input", help="TOML document, or - for standard input")
    p.add_argument("--scenario", help="named scenario (selkov, lotka, three-cycle, or a gallery label)")
    for name in SCENARIO_ARGS:
        p.add_argument(f"--{name}", type=number)
    p.add_argument("--rel-tol", dest="rel_tol", type=float)
    p.add_argument("--abs-tol", dest="abs_tol", type=float)
    p.add_argument("--horizon", type=float)
    p.add_argument("--max-step", dest="max_step", type=float)
    p.add_argument("--out", help="output file")
    p.add_argument("--plot", help="SVG file for a plot")
    p.add_argument("--format", choices=("text", "records"), default="text")
    p.add_argument("--initial", default="1,1", help="u,v or x1,x2,x3,x4 (simulate)")
    p.add_argument("--radius", type=float, default=20.0, help="probe ring radius")
    p.add_argument("--n", type=int, default=8, help="probe points per circle")
    p.add_argument("--angle", type=float, default=0.0, help="section angle (cycles)")
    p.add_argument("--r-min", dest="r_min", type=float, default=2e-3)
    p.add_argument("--r-max", dest="r_max", type=float, default=8.0)
    p.add_argument("--samples", type=int, help="section samples (cycles) or dense output points (simulate)")
    p.add_argument("--range", action="append", help="NAME=start:stop:num (sweep, repeatable)")
    return p


def main(argv: Optional[Sequence[str]] = None, stdin: TextIO = None, stdout: TextIO = None, stderr: TextIO = None) -> int:
    stdin = stdin or sys.stdin
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    try:
        ns = build_parser().parse_args(argv)
        problem = load_problem(ns, stdin)
        return COMMANDS[ns.command](ns, problem, stdout)
    except UsageError as exc:
        stderr.write(f"error: {exc}\n")
        return EXIT_PARSE
    except DegenerateInput as exc:
        stderr.write(f"degenerate: {exc}\n")
        return EXIT_DEGENERATE
    except ArithmeticError as exc:
        stderr.write(f"numerical failure: {exc}\n")
        return EXIT_NUMERICAL


def main_entry() -> None:
    sys.exit(main())


__all__ = ["build_parser", "main", "main_entry", "number", "parse_document", "parse_range"]
