"""Experiment replication: balanced vs unbalanced runs and reduction metrics.

A run samples a built-in (or file-loaded) trajectory, converts every sample
to joint space with the closed-form inverse kinematics, evaluates inverse
dynamics and the base reaction wrench, and streams one CSV row per sample.
The balanced run installs the exact counter-mass solution; the unbalanced
run zeroes every counter mass.  Kinematic channels are identical between the
two runs by construction.

Wrench rows follow the test-rig convention: each configuration calibrates
the sensor to zero while holding the start pose, so rows show dynamic
variation about zero.  The static penalty of the added counter masses (extra
weight in Fz, lateral moment in Mx) is kept separately as each run's static
offset and reported as a delta, not hidden in the zeroed streams.

All floats are quantized to 9 significant digits when a row is produced, so
summaries recomputed from the CSV text match bit-exactly and repeated runs
are byte-identical.
"""

from __future__ import annotations

import io
import math
import os
from dataclasses import dataclass, field

import numpy as np

from .balance import apply_solution, solve_counter_masses
from .dynamics import base_reaction, inverse_dynamics, ReactionWrench
from .errors import ForbalError, MismatchedRuns, SingularConfiguration
from .ik import ik_forbal2
from .model import (
    JointState,
    MechanismSpec,
    RateState,
    dunit,
    forward_kinematics,
    loop_closure_rates,
    passive_rate_jacobian,
    q_from_theta,
    unit,
)
from .trajectory import (
    DT_DEFAULT,
    SpeedLaw,
    TimedPath,
    WaypointSet,
    apply_speed_law,
    build_spline,
    builtin,
)

ENV_DT = "FORBAL_DT"


def effective_dt(dt: float | None = None) -> float:
    if dt is not None:
        return dt
    return float(os.environ.get(ENV_DT, DT_DEFAULT))


def _q9(x: float) -> float:
    """Quantize to the 9-significant-digit CSV representation."""
    return float(format(x, ".9g"))


# ---------------------------------------------------------------------------
# task-space to joint-space conversion

class JointTrajectory:
    """Evaluates loop-consistent joint states and rates along a timed path."""

    def __init__(self, spec: MechanismSpec, path: TimedPath, space: str, dim: int):
        self.spec = spec
        self.path = path
        self.space = space
        self.dim = dim
        self.spatial = dim == 5

    @property
    def duration(self) -> float:
        return self.path.duration

    def _planar_joint_rates(self, state: JointState, v, a):
        """Actuated joint rates that realize a planar end-effector velocity."""
        spec = self.spec
        l21 = spec.links["21"].length
        l22e = spec.links["22"].length + spec.ee_offset
        jac = passive_rate_jacobian(spec, state)
        col1 = l22e * dunit(state.theta22) * jac[1, 0]
        col2 = l21 * dunit(state.theta21) + l22e * dunit(state.theta22) * jac[1, 1]
        j_pe = np.column_stack([col1, col2])
        det = j_pe[0, 0] * j_pe[1, 1] - j_pe[0, 1] * j_pe[1, 0]
        if abs(det) < 1e-12:
            raise SingularConfiguration("end-effector Jacobian is singular")
        d11, d21 = np.linalg.solve(j_pe, v)
        r0 = loop_closure_rates(spec, state, d11, d21, 0.0, 0.0)
        bias = (-l21 * unit(state.theta21) * r0.d21 ** 2
                + l22e * (-unit(state.theta22) * r0.d22 ** 2
                          + dunit(state.theta22) * r0.dd22))
        dd11, dd21 = np.linalg.solve(j_pe, a - bias)
        return loop_closure_rates(spec, state, d11, d21, dd11, dd21)

    def eval(self, t: float) -> tuple[JointState, RateState]:
        value = self.path.value(t)
        vel = self.path.velocity(t)
        acc = self.path.acceleration(t)
        if self.space == "joint":
            q11, q21 = value
            dq11, dq21 = vel
            ddq11, ddq21 = acc
            state, _, _ = forward_kinematics(self.spec, -q11, q21)
            rates = loop_closure_rates(self.spec, state, -dq11, dq21, -ddq11, ddq21)
            return state, rates
        if not self.spatial:
            sol = ik_forbal2(self.spec, value)
            state = sol.joint_state()
            rates = self._planar_joint_rates(state, vel, acc)
            return state, rates
        return self._eval_spatial(value, vel, acc)

    def _eval_spatial(self, value, vel, acc):
        x, y, z, pitch, yaw = value
        vx, vy, vz, dpitch, dyaw = vel
        ax, ay, az, ddpitch, ddyaw = acc
        s = math.hypot(x, y)
        q0 = math.atan2(y, x)
        ds = (x * vx + y * vy) / s
        dds = (vx * vx + vy * vy + x * ax + y * ay - ds * ds) / s
        d0 = (x * vy - y * vx) / (s * s)
        dd0 = (x * ay - y * ax) / (s * s) - 2.0 * d0 * ds / s
        # implement joint minus pitch-rotated mount offset, with derivatives
        mo = np.array([self.spec.spatial.motor_offset[0],
                       self.spec.spatial.motor_offset[2]])
        cb, sb = math.cos(pitch), math.sin(pitch)
        rot = np.array([[cb, sb], [-sb, cb]])
        d_rot = np.array([[-sb, cb], [-cb, -sb]])
        dd_rot = np.array([[-cb, -sb], [sb, -cb]])
        p3 = np.array([s, z]) - rot @ mo
        v3 = np.array([ds, vz]) - dpitch * (d_rot @ mo)
        a3 = (np.array([dds, az]) - ddpitch * (d_rot @ mo)
              - dpitch * dpitch * (dd_rot @ mo))
        sol = ik_forbal2(self.spec, p3)
        q3 = sol.q22 - sol.q21 + pitch
        q4 = q0 - yaw
        state0 = sol.joint_state()
        rates = self._planar_joint_rates(state0, v3, a3)
        state = JointState(state0.theta11, state0.theta12, state0.theta21,
                           state0.theta22, q0=q0, q3=q3, q4=q4)
        return state, RateState(rates.d11, rates.d12, rates.d21, rates.d22,
                                rates.dd11, rates.dd12, rates.dd21, rates.dd22,
                                d0=d0, dd0=dd0)


def joint_trajectory(spec: MechanismSpec, wps: WaypointSet, law: SpeedLaw) -> JointTrajectory:
    path = apply_speed_law(build_spline(wps), law)
    return JointTrajectory(spec, path, wps.space, wps.dim)


# ---------------------------------------------------------------------------
# experiment runs

F2_COLUMNS = ["t", "q11", "q21", "tau11", "tau21",
              "Fx", "Fy", "Fz", "Mx", "My", "Mz"]
F5_COLUMNS = ["t", "q11", "q21", "q0", "q3", "q4", "tau11", "tau21", "tau0",
              "Fx", "Fy", "Fz", "Mx", "My", "Mz"]


@dataclass
class ExperimentResult:
    traj_id: str
    configuration: str            # "balanced" | "unbalanced"
    dt: float
    columns: list[str]
    rows: list[dict[str, float]]
    n_runs: int = 1               # deterministic simulation replaces averaging
    summary: dict[str, dict[str, float]] = field(default_factory=dict)
    static_offset: dict[str, float] = field(default_factory=dict)

    def compute_summary(self) -> None:
        self.summary = {}
        for col in self.columns:
            if col == "t":
                continue
            vals = np.array([row[col] for row in self.rows])
            self.summary[col] = {"mean_abs": float(np.mean(np.abs(vals))),
                                 "max_abs": float(np.max(np.abs(vals)))}

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write(",".join(self.columns) + "\n")
        for row in self.rows:
            buf.write(",".join(format(row[c], ".9g") for c in self.columns) + "\n")
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str, traj_id: str = "", configuration: str = "",
                 dt: float = DT_DEFAULT) -> "ExperimentResult":
        lines = [ln for ln in text.strip().splitlines() if ln]
        columns = lines[0].split(",")
        rows = []
        for ln in lines[1:]:
            vals = [float(v) for v in ln.split(",")]
            rows.append(dict(zip(columns, vals)))
        out = cls(traj_id, configuration, dt, columns, rows)
        out.compute_summary()
        return out


def _start_reference(spec: MechanismSpec, traj: JointTrajectory) -> ReactionWrench:
    """Static wrench at the trajectory start pose (sensor calibration)."""
    state, _ = traj.eval(traj.path.t0)
    still = RateState(0, 0, 0, 0)
    if traj.spatial:
        state = JointState(state.theta11, state.theta12, state.theta21,
                           state.theta22, q0=state.q0, q3=state.q3, q4=state.q4)
    return base_reaction(spec, state, still)


def run_single(spec: MechanismSpec, traj_id: str, traj: JointTrajectory,
               configuration: str, dt: float) -> ExperimentResult:
    spatial = traj.spatial
    columns = F5_COLUMNS if spatial else F2_COLUMNS
    zero_ref = _start_reference(spec, traj)
    n = int(math.floor(traj.duration / dt + 1e-9))
    rows = []
    for k in range(n + 1):
        t = traj.path.t0 + k * dt
        try:
            state, rates = traj.eval(t)
        except ForbalError as exc:
            exc.args = (f"sample {k} (t={t:.4g} s): {exc}",) + exc.args[1:]
            raise
        tau = inverse_dynamics(spec, state, rates)
        wrench = base_reaction(spec, state, rates).minus(zero_ref)
        q11, _, q21, _ = q_from_theta(state.theta11, state.theta12,
                                      state.theta21, state.theta22)
        row = {"t": t, "q11": q11, "q21": q21,
               "tau11": tau["tau11"], "tau21": tau["tau21"],
               "Fx": wrench.force[0], "Fy": wrench.force[1], "Fz": wrench.force[2],
               "Mx": wrench.moment[0], "My": wrench.moment[1], "Mz": wrench.moment[2]}
        if spatial:
            row["q0"] = state.q0 or 0.0
            row["q3"] = state.q3 or 0.0
            row["q4"] = state.q4 or 0.0
            row["tau0"] = tau.get("tau0", 0.0)
        rows.append({k2: _q9(v) for k2, v in row.items()})
    result = ExperimentResult(traj_id, configuration, dt, columns, rows)
    result.compute_summary()
    result.static_offset = {
        "Fx": _q9(zero_ref.force[0]), "Fy": _q9(zero_ref.force[1]),
        "Fz": _q9(zero_ref.force[2]), "Mx": _q9(zero_ref.moment[0]),
        "My": _q9(zero_ref.moment[1]), "Mz": _q9(zero_ref.moment[2]),
    }
    return result


def run_experiment(spec: MechanismSpec, traj_id_or_wps, dt: float | None = None,
                   both_configs: bool = True,
                   configuration: str = "balanced"):
    """Deterministic experiment run(s) for one trajectory.

    Returns (balanced, unbalanced) results when ``both_configs`` is set, else
    the single requested configuration.  The balanced spec installs the exact
    counter-mass solution; the unbalanced one zeroes all counter masses.
    """
    dt = effective_dt(dt)
    if isinstance(traj_id_or_wps, str):
        traj_id = traj_id_or_wps
        wps, law = builtin(traj_id, spec)
    else:
        traj_id = "custom"
        wps, law = traj_id_or_wps, SpeedLaw(t_acc=0.5, t_dec=0.5)
    unbalanced_spec = spec.zeroed_counter_masses()
    balanced_spec = apply_solution(spec, solve_counter_masses(spec))
    results = {}
    if both_configs or configuration == "unbalanced":
        results["unbalanced"] = run_single(
            unbalanced_spec, traj_id, joint_trajectory(unbalanced_spec, wps, law),
            "unbalanced", dt)
    if both_configs or configuration == "balanced":
        results["balanced"] = run_single(
            balanced_spec, traj_id, joint_trajectory(balanced_spec, wps, law),
            "balanced", dt)
    if both_configs:
        return results["balanced"], results["unbalanced"]
    return results[configuration]


# ---------------------------------------------------------------------------
# reduction metrics

@dataclass(frozen=True)
class ReductionReport:
    traj_id: str
    mean_reduction_pct: dict[str, float | None]
    max_reduction_pct: dict[str, float | None]
    mean_delta: dict[str, float]

    def as_dict(self) -> dict:
        return {"trajectory": self.traj_id,
                "mean_reduction_pct": self.mean_reduction_pct,
                "max_reduction_pct": self.max_reduction_pct,
                "mean_delta": self.mean_delta,
                "n_runs": 1}


REDUCTION_CHANNELS = ("My", "tau11", "tau21", "tau0")
DELTA_CHANNELS = ("Mx", "Fz")


def reduction_metrics(balanced: ExperimentResult,
                      unbalanced: ExperimentResult) -> ReductionReport:
    """Channel-wise percentage reductions of the balanced run.

    Reduction = 100 * (1 - mean|balanced| / mean|unbalanced|), likewise for
    the max-based variant; undefined (None) when the unbalanced baseline mean
    is below 1e-12.  Mx and Fz are reported as signed deltas of the static
    calibration offsets instead: the added counter-mass weight and its
    lateral moment make those channels worse, not better.
    """
    if balanced.traj_id != unbalanced.traj_id or balanced.dt != unbalanced.dt:
        raise MismatchedRuns(
            f"runs do not match: {balanced.traj_id}@{balanced.dt} vs "
            f"{unbalanced.traj_id}@{unbalanced.dt}")
    if len(balanced.rows) != len(unbalanced.rows):
        raise MismatchedRuns("runs have different sample counts")
    mean_red: dict[str, float | None] = {}
    max_red: dict[str, float | None] = {}
    for ch in REDUCTION_CHANNELS:
        if ch not in balanced.summary:
            continue
        um = unbalanced.summary[ch]["mean_abs"]
        ux = unbalanced.summary[ch]["max_abs"]
        bm = balanced.summary[ch]["mean_abs"]
        bx = balanced.summary[ch]["max_abs"]
        mean_red[ch] = None if um < 1e-12 else 100.0 * (1.0 - bm / um)
        max_red[ch] = None if ux < 1e-12 else 100.0 * (1.0 - bx / ux)
    deltas = {}
    for ch in DELTA_CHANNELS:
        deltas[ch] = float(balanced.static_offset.get(ch, 0.0)
                           - unbalanced.static_offset.get(ch, 0.0))
    return ReductionReport(balanced.traj_id, mean_red, max_red, deltas)


# ---------------------------------------------------------------------------
# SVG time-series rendering

_CHANNEL_COLORS = {
    "Fx": "#c00000", "Fy": "#00a000", "Fz": "#0040c0",
    "Mx": "#c00000", "My": "#00a000", "Mz": "#0040c0",
    "tau11": "#00a2c8", "tau21": "#8b5a2b", "tau0": "#c8a200",
}

_PANES = (
    ("reaction force [N]", ("Fx", "Fy", "Fz")),
    ("reaction moment [N m]", ("Mx", "My", "Mz")),
    ("joint torque [N m]", ("tau11", "tau21", "tau0")),
)


def _polyline(ts, vs, x0, y0, w, h, t_span, v_span, style) -> str:
    t_min, t_max = t_span
    v_min, v_max = v_span
    pts = []
    for t, v in zip(ts, vs):
        px = x0 + w * (t - t_min) / (t_max - t_min)
        py = y0 + h * (1.0 - (v - v_min) / (v_max - v_min))
        pts.append(f"{px:.2f},{py:.2f}")
    return f'  <polyline fill="none" {style} points="{" ".join(pts)}"/>\n'


def render_svg(results: list[ExperimentResult], width: int = 860) -> str:
    """Stacked time-series panes; solid = balanced, dashed = unbalanced."""
    pane_h, pad, label_h = 170, 48, 18
    panes = [(title, [c for c in chans if c in results[0].columns])
             for title, chans in _PANES]
    panes = [(t, cs) for t, cs in panes if cs]
    height = pad + len(panes) * (pane_h + label_h + pad)
    out = io.StringIO()
    out.write(f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" '
              f'height="{height}" font-family="sans-serif" font-size="12">\n')
    ts_all = [row["t"] for r in results for row in r.rows]
    t_span = (min(ts_all), max(ts_all))
    y0 = pad
    for title, chans in panes:
        lo, hi = math.inf, -math.inf
        for r in results:
            for ch in chans:
                vals = [row[ch] for row in r.rows]
                lo = min(lo, min(vals))
                hi = max(hi, max(vals))
        if hi - lo < 1e-12:
            lo, hi = lo - 1.0, hi + 1.0
        margin = 0.05 * (hi - lo)
        v_span = (lo - margin, hi + margin)
        x0, w = 60, width - 80
        out.write(f'  <text x="{x0}" y="{y0 - 5}">{title}  '
                  f'[{v_span[0]:.3g}, {v_span[1]:.3g}]</text>\n')
        out.write(f'  <rect x="{x0}" y="{y0}" width="{w}" height="{pane_h}" '
                  f'fill="none" stroke="#888"/>\n')
        if v_span[0] < 0.0 < v_span[1]:
            zero_y = y0 + pane_h * (1.0 - (0.0 - v_span[0]) / (v_span[1] - v_span[0]))
            out.write(f'  <line x1="{x0}" y1="{zero_y:.2f}" x2="{x0 + w}" '
                      f'y2="{zero_y:.2f}" stroke="#ccc"/>\n')
        for r in results:
            dash = "" if r.configuration == "balanced" else ' stroke-dasharray="6 4"'
            ts = [row["t"] for row in r.rows]
            for ch in chans:
                color = _CHANNEL_COLORS.get(ch, "#000")
                style = f'stroke="{color}" stroke-width="1.2"{dash}'
                vs = [row[ch] for row in r.rows]
                if len(ts) == 1:
                    px = x0 + w * 0.5
                    py = y0 + pane_h * 0.5
                    out.write(f'  <circle cx="{px:.2f}" cy="{py:.2f}" r="3" '
                              f'fill="{color}"/>\n')
                else:
                    out.write(_polyline(ts, vs, x0, y0, w, pane_h, t_span,
                                        v_span, style))
        y0 += pane_h + label_h + pad
    out.write("</svg>\n")
    return out.getvalue()
