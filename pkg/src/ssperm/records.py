"""Line-delimited machine records and CSV trajectories.

Floats are written with 17 significant digits, so a value read back is
bit-identical to the one written.  Exact rationals travel as ``"p/q"``
strings.
"""

from __future__ import annotations

import json
import math
import re
from fractions import Fraction
from typing import Any, Dict, Iterable, List, Optional, TextIO

from .classifier import Branch, CaseLabel, Classification, RobustResult, Verdict
from .dynamics import CycleReport, ProbeReport, Trajectory
from .params import CVector, ExpParams, JacobianSummary, PositiveEquilibrium

_RATIONAL = re.compile(r"^-?\d+/\d+$")


def format_float(x: float) -> str:
    if math.isnan(x):
        return "NaN"
    if math.isinf(x):
        return "Infinity" if x > 0 else "-Infinity"
    text = format(x, ".17g")
    if not any(ch in text for ch in ".eE"):
        text += ".0"
    return text


def dumps(obj: Any) -> str:
    """Compact, deterministic JSON text for records."""
    if obj is None or isinstance(obj, (bool, str)):
        return json.dumps(obj)
    if isinstance(obj, int):
        return str(obj)
    if isinstance(obj, float):
        return format_float(obj)
    if isinstance(obj, Fraction):
        return json.dumps(f"{obj.numerator}/{obj.denominator}")
    if isinstance(obj, dict):
        return "{" + ", ".join(f"{json.dumps(str(k))}: {dumps(v)}" for k, v in obj.items()) + "}"
    if isinstance(obj, (list, tuple)):
        return "[" + ", ".join(dumps(v) for v in obj) + "]"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def parse_number(value: Any):
    """Inverse of the number encoding: ``"p/q"`` strings become Fractions."""
    if isinstance(value, str) and _RATIONAL.match(value.strip()):
        return Fraction(value.strip())
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ValueError(f"not a number: {value!r}")
    return value


def _opt_number(value: Any):
    return None if value is None else parse_number(value)


# ---------------------------------------------------------------------------
# classification


def params_record(params: ExpParams) -> Dict[str, Any]:
    return {"a": list(params.a), "b": list(params.b)}


def params_from_record(rec: Dict[str, Any]) -> ExpParams:
    return ExpParams(tuple(parse_number(x) for x in rec["a"]), tuple(parse_number(x) for x in rec["b"]))


def classification_record(
    result: Classification, params: Optional[ExpParams] = None, robust: Optional[RobustResult] = None
) -> Dict[str, Any]:
    jac = result.jacobian
    rec: Dict[str, Any] = {
        "record": "classification",
        "verdict": result.verdict.value,
        "case": result.case.value if result.case else None,
        "reason": result.reason,
        "branch": result.branch.value,
        "jacobian": None
        if jac is None
        else {
            "matrix": [[jac.j11, jac.j12], [jac.j21, jac.j22]],
            "det": jac.det,
            "trace": jac.trace,
            "signs": [list(row) for row in jac.sign_pattern],
        },
        "c": None if result.c is None else list(result.c.as_tuple()),
        "l_infinity": result.l_infinity,
        "L": result.L,
        "gas": result.gas,
        "family": result.family,
        "exact": result.exact,
        "equilibrium": None
        if result.equilibrium is None
        else [result.equilibrium.x1_star, result.equilibrium.x2_star],
    }
    if robust is not None:
        rec["robust"] = robust.robust
        rec["robust_case"] = robust.case.value if robust.case else None
    if params is not None:
        rec["params"] = params_record(params)
    return rec


def classification_from_record(rec: Dict[str, Any]) -> Classification:
    jac = None
    if rec["jacobian"] is not None:
        j = rec["jacobian"]
        (j11, j12), (j21, j22) = j["matrix"]
        jac = JacobianSummary(
            parse_number(j11),
            parse_number(j12),
            parse_number(j21),
            parse_number(j22),
            parse_number(j["det"]),
            parse_number(j["trace"]),
            tuple(tuple(int(s) for s in row) for row in j["signs"]),
        )
    eq = rec.get("equilibrium")
    return Classification(
        verdict=Verdict(rec["verdict"]),
        case=CaseLabel(rec["case"]) if rec["case"] is not None else None,
        reason=rec["reason"],
        branch=Branch(rec["branch"]),
        jacobian=jac,
        c=None if rec["c"] is None else CVector(*(parse_number(x) for x in rec["c"])),
        l_infinity=_opt_number(rec["l_infinity"]),
        L=_opt_number(rec["L"]),
        gas=rec["gas"],
        family=rec["family"],
        exact=rec["exact"],
        equilibrium=None if eq is None else PositiveEquilibrium(eq[0], eq[1]),
    )


# ---------------------------------------------------------------------------
# numerical reports


def probe_record(report: ProbeReport) -> Dict[str, Any]:
    return {
        "record": "probe",
        "verdict": report.verdict.value,
        "initial_set": report.initial_set,
        "ring_radius": report.ring_radius,
        "escape_radius": report.escape_radius,
        "orbits": [
            {
                "initial": list(o.initial),
                "tail_max": o.tail_max,
                "tail_min": o.tail_min,
                "checkpoints": list(o.checkpoints),
                "escaped": o.escaped,
                "final_time": o.final_time,
            }
            for o in report.orbits
        ],
    }


def cycle_record(report: CycleReport) -> Dict[str, Any]:
    return {
        "record": "cycles",
        "section": report.section,
        "section_angle": report.section_angle,
        "resolution": report.resolution,
        "count": report.count,
        "fixed_points": [{"r": fp.r, "slope": fp.slope, "stability": fp.stability} for fp in report.fixed_points],
        "samples": [[r, R] for r, R in report.samples],
    }


def trajectory_summary(traj: Trajectory) -> Dict[str, Any]:
    return {
        "record": "trajectory",
        "status": traj.status.name.lower(),
        "message": traj.message,
        "points": len(traj.times),
        "t_final": traj.times[-1],
        "final": list(traj.final),
        "events": [[t, label] for t, label in traj.events],
    }


def trajectory_header(dim: int) -> List[str]:
    return ["t", "u", "v"] if dim == 2 else ["t"] + [f"x{i}" for i in range(1, dim + 1)]


def write_trajectory_csv(traj: Trajectory, out: TextIO) -> None:
    out.write(",".join(trajectory_header(traj.dim)) + "\n")
    for t, state in zip(traj.times, traj.states):
        out.write(",".join(format_float(float(x)) for x in (t, *state)) + "\n")


def read_trajectory_csv(lines: Iterable[str]) -> Trajectory:
    rows = [line.strip() for line in lines if line.strip()]
    if not rows:
        raise ValueError("empty trajectory file")
    width = len(rows[0].split(","))
    times, states = [], []
    for row in rows[1:]:
        values = [float(x) for x in row.split(",")]
        if len(values) != width:
            raise ValueError("ragged trajectory row")
        times.append(values[0])
        states.append(tuple(values[1:]))
    return Trajectory(times, states)


def write_records(records: Iterable[Dict[str, Any]], out: TextIO) -> None:
    for rec in records:
        out.write(dumps(rec) + "\n")


def read_records(lines: Iterable[str]) -> List[Dict[str, Any]]:
    return [json.loads(line) for line in lines if line.strip()]


__all__ = [
    "classification_from_record",
    "classification_record",
    "cycle_record",
    "dumps",
    "format_float",
    "params_from_record",
    "params_record",
    "parse_number",
    "probe_record",
    "read_records",
    "read_trajectory_csv",
    "trajectory_header",
    "trajectory_summary",
    "write_records",
    "write_trajectory_csv",
]
