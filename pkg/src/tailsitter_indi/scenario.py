"""Scenario runs: config to simulation to artifacts, and the run summary.

The summary is computed from the logged columns only, so it can be
recomputed from a CSV file with :func:`summarize`.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import svgplot
from .config import ScenarioConfig, load_scenario
from .errors import NumericalFault
from .guidance import MODE_NAMES, FollowLine, GotoWaypoint, Hover
from .io import result_columns, write_csv
from .simulation import SimConfig, SimResult, simulate

SETTLE = 12.0  # s after a line starts before its cross-track counts as steady


def sim_config(sc: ScenarioConfig, seed: int | None = None, duration: float | None = None) -> SimConfig:
    exc = sc.excitation
    return SimConfig(
        duration=sc.duration if duration is None else float(duration),
        seed=sc.seed if seed is None else int(seed),
        plant=sc.plant.params.copy(),
        controller=sc.vehicle.controller,
        sensors=sc.plant.sensors,
        wind=sc.wind,
        plan=sc.plan,
        gains=sc.vehicle.gains,
        excitation_fn=exc.signal if exc.amplitude != 0.0 else None,
    )


def _rms(x) -> float:
    x = np.asarray(x, dtype=float)
    x = x[np.isfinite(x)]
    return float(math.sqrt(np.mean(x * x))) if x.size else float("nan")


def _clean(v):
    """NaN to None so the JSON is standard."""
    if isinstance(v, float) and not math.isfinite(v):
        return None
    if isinstance(v, dict):
        return {k: _clean(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_clean(x) for x in v]
    return v


@dataclass
class RunSummary:
    duration: float
    rows: int
    pitch_rms_deg: float  # outside saturation
    roll_rms_deg: float
    accel_rms: float  # |acc_ref - acc_f| over the run
    theta_min_deg: float
    theta_max_deg: float
    max_airspeed: float
    max_altitude_excursion: float
    saturation_duty: list
    mode_changes: list
    phases: list = field(default_factory=list)
    regimes: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return _clean(asdict(self))

    def to_json(self) -> str:
        return json.dumps(self.as_dict(), indent=2, sort_keys=True)


def _tracking(cols, mask) -> dict:
    deg = np.degrees
    acc_err = np.sqrt(sum((cols[f"acc_ref_{a}"] - cols[f"acc_f_{a}"]) ** 2 for a in "ned"))
    return {
        "pitch_rms_deg": _rms(deg(cols["theta_ref"] - cols["theta"])[mask]),
        "roll_rms_deg": _rms(deg(cols["phi_ref"] - cols["phi"])[mask]),
        "accel_rms": _rms(acc_err[mask]),
        "seconds": float(mask.sum() * _dt(cols)),
    }


def _dt(cols) -> float:
    t = cols["t"]
    return float(t[1] - t[0]) if len(t) > 1 else 0.0


def summarize(cols: dict, settle: float = SETTLE) -> RunSummary:
    """Metrics from logged columns (a :func:`io.read_csv` mapping)."""
    t = np.asarray(cols["t"], dtype=float)
    n = len(t)
    sat = np.zeros(n, dtype=bool)
    duty = []
    for i in range(4):
        s = cols[f"sat{i}"] != 0.0
        sat |= s
        duty.append(float(s.mean()) if n else 0.0)
    unsat = ~sat
    deg = np.degrees
    V = cols["V"]
    mode = cols["mode"].astype(int)
    changes = []
    for k in range(n):
        if k == 0 or mode[k] != mode[k - 1]:
            changes.append([float(t[k]), MODE_NAMES.get(int(mode[k]), str(mode[k]))])

    phases = []
    el = cols["element"].astype(int)
    for j in np.unique(el):
        m = el == j
        tj = t[m]
        entry = {"element": int(j), "t0": float(tj[0]), "t1": float(tj[-1])} | _tracking(cols, m & unsat)
        ct = cols["cross_track"][m]
        if np.isfinite(ct).any():
            steady = ct[tj >= tj[0] + settle]
            entry |= {"cross_track_rms": _rms(ct), "cross_track_max": float(np.nanmax(np.abs(ct))),
                      "cross_track_steady_max": float(np.nanmax(np.abs(steady))) if steady.size else float("nan")}
        phases.append(entry)

    theta = deg(cols["theta"])
    regimes = {
        "hover": _tracking(cols, unsat & (V < 6.0)),
        "transition": _tracking(cols, unsat & (V >= 6.0) & (theta > -60.0)),
        "cruise": _tracking(cols, unsat & (V >= 6.0) & (theta <= -60.0)),
    }
    pd = cols["pos_d"]
    return RunSummary(
        duration=float(t[-1] - t[0] + _dt(cols)) if n else 0.0,
        rows=n,
        pitch_rms_deg=_rms(deg(cols["theta_ref"] - cols["theta"])[unsat]),
        roll_rms_deg=_rms(deg(cols["phi_ref"] - cols["phi"])[unsat]),
        accel_rms=_tracking(cols, np.ones(n, dtype=bool))["accel_rms"],
        theta_min_deg=float(theta.min()) if n else float("nan"),
        theta_max_deg=float(theta.max()) if n else float("nan"),
        max_airspeed=float(V.max()) if n else float("nan"),
        max_altitude_excursion=float(np.max(np.abs(pd - pd[0]))) if n else float("nan"),
        saturation_duty=duty,
        mode_changes=changes,
        phases=phases,
        regimes=regimes,
    )


def plan_lines(plan) -> list:
    """Horizontal plan geometry as ((e0, n0), (e1, n1)) pairs for the track plot."""
    pts = []
    out = []
    for el in plan.elements:
        if isinstance(el, FollowLine):
            out.append(((el.start[1], el.start[0]), (el.end[1], el.end[0])))
        elif isinstance(el, (Hover, GotoWaypoint)):
            pts.append((el.point[1], el.point[0]))
    out += list(zip(pts[:-1], pts[1:]))
    return out


@dataclass
class RunOutput:
    name: str
    result: SimResult
    summary: RunSummary
    files: list


def dump_state(path, result: SimResult, message: str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    last = {} if len(result.log) == 0 else {c: float(v) for c, v in zip(result.columns, result.log[-1])}
    path.write_text(json.dumps(_clean({"fault": message, "last_row": last}), indent=2))
    return path


def run_scenario(scenario, out_dir=None, seed: int | None = None, duration: float | None = None,
                 plots: bool = True) -> RunOutput:
    """Run a preset name, a scenario file path or a parsed :class:`ScenarioConfig`.

    With ``out_dir`` the run writes log.csv, summary.json and the standard
    SVG plots. A numerical fault writes fault.json and the partial log, then
    re-raises.
    """
    sc = scenario if isinstance(scenario, ScenarioConfig) else load_scenario(str(scenario))
    cfg = sim_config(sc, seed, duration)
    out = Path(out_dir) if out_dir is not None else None
    try:
        result = simulate(cfg)
    except NumericalFault as exc:
        if out is not None and getattr(exc, "result", None) is not None:
            write_csv(out / "log.csv", exc.result.log, exc.result.columns)
            dump_state(out / "fault.json", exc.result, str(exc))
        raise
    cols = result_columns(result)
    summary = summarize(cols)
    files = []
    if out is not None:
        files.append(write_csv(out / "log.csv", result.log, result.columns))
        (out / "summary.json").write_text(summary.to_json() + "\n")
        files.append(out / "summary.json")
        if plots:
            files += svgplot.standard_plots(cols, out, plan_lines(sc.plan))
    return RunOutput(sc.name, result, summary, files)
