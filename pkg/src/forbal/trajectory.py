"""Waypoint-to-trajectory pipeline.

Waypoints are interpolated with a cubic Hermite spline (finite-difference
interior tangents, zero end tangents for open paths, periodic tangents for
closed ones), then time-scaled by a trapezoidal speed law and sampled on a
fixed step.  The speed law preserves the total duration: the cruise rate
rises to make up for the ramps, ``r = T / (T - (t_acc + t_dec)/2)``, so
waypoint passage times shift into the trajectory while start and end stay
put with zero boundary velocity.

Built-in experiment trajectories for the planar (F2-T1..T4) and spatial
(F5-T1..T3) variants live here as well.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass

import numpy as np

from .errors import DuplicateTime, InfeasibleLaw, UnknownId

DT_DEFAULT = 0.01

BUILTIN_IDS = ("F2-T1", "F2-T2", "F2-T3", "F2-T4", "F5-T1", "F5-T2", "F5-T3")


@dataclass(frozen=True)
class WaypointSet:
    times: tuple[float, ...]
    values: np.ndarray            # (n, dim)
    space: str = "task"           # "task" | "joint"
    closed: bool = False

    def __post_init__(self):
        if len(self.times) < 2:
            raise ValueError("need at least two waypoints")
        if len(self.times) != len(self.values):
            raise ValueError("times and values length mismatch")
        for a, b in zip(self.times, self.times[1:]):
            if b <= a:
                raise DuplicateTime(f"waypoint times must strictly increase ({a} -> {b})")
        if self.closed and float(np.max(np.abs(self.values[0] - self.values[-1]))) > 1e-9:
            raise ValueError("closed waypoint set must end where it starts")

    @property
    def duration(self) -> float:
        return self.times[-1] - self.times[0]

    @property
    def dim(self) -> int:
        return self.values.shape[1]


@dataclass(frozen=True)
class SpeedLaw:
    """Trapezoidal time scaling, given by ramp-up and ramp-down times."""

    t_acc: float = 0.0
    t_dec: float = 0.0

    def __post_init__(self):
        if self.t_acc < 0.0 or self.t_dec < 0.0:
            raise InfeasibleLaw("ramp times must be non-negative")


class HermitePath:
    """Piecewise-cubic Hermite interpolant with analytic derivatives."""

    def __init__(self, times, values, closed: bool = False):
        self.t = np.asarray(times, dtype=float)
        self.v = np.atleast_2d(np.asarray(values, dtype=float))
        if self.v.shape[0] != self.t.shape[0]:
            self.v = self.v.T
        n = len(self.t)
        self.closed = closed
        self.m = np.zeros_like(self.v)
        for k in range(1, n - 1):
            self.m[k] = (self.v[k + 1] - self.v[k - 1]) / (self.t[k + 1] - self.t[k - 1])
        if closed and n > 2:
            span = (self.t[1] - self.t[0]) + (self.t[-1] - self.t[-2])
            wrap = (self.v[1] - self.v[-2]) / span
            self.m[0] = self.m[-1] = wrap
        # open paths keep zero end tangents: removes start/stop overshoot

    @property
    def duration(self) -> float:
        return float(self.t[-1] - self.t[0])

    @property
    def t0(self) -> float:
        return float(self.t[0])

    def _segment(self, t: float) -> tuple[int, float, float]:
        t = min(max(t, self.t[0]), self.t[-1])
        k = int(np.searchsorted(self.t, t, side="right") - 1)
        k = min(max(k, 0), len(self.t) - 2)
        h = self.t[k + 1] - self.t[k]
        return k, (t - self.t[k]) / h, h

    def value(self, t: float) -> np.ndarray:
        k, s, h = self._segment(t)
        h00 = 2 * s ** 3 - 3 * s ** 2 + 1
        h10 = s ** 3 - 2 * s ** 2 + s
        h01 = -2 * s ** 3 + 3 * s ** 2
        h11 = s ** 3 - s ** 2
        return (h00 * self.v[k] + h10 * h * self.m[k]
                + h01 * self.v[k + 1] + h11 * h * self.m[k + 1])

    def velocity(self, t: float) -> np.ndarray:
        k, s, h = self._segment(t)
        d00 = 6 * s ** 2 - 6 * s
        d10 = 3 * s ** 2 - 4 * s + 1
        d01 = -6 * s ** 2 + 6 * s
        d11 = 3 * s ** 2 - 2 * s
        return (d00 * self.v[k] + d10 * h * self.m[k]
                + d01 * self.v[k + 1] + d11 * h * self.m[k + 1]) / h

    def acceleration(self, t: float) -> np.ndarray:
        k, s, h = self._segment(t)
        a00 = 12 * s - 6
        a10 = 6 * s - 4
        a01 = -12 * s + 6
        a11 = 6 * s - 2
        return (a00 * self.v[k] + a10 * h * self.m[k]
                + a01 * self.v[k + 1] + a11 * h * self.m[k + 1]) / (h * h)


def build_spline(wps: WaypointSet) -> HermitePath:
    """Interpolating Hermite spline through a waypoint set."""
    return HermitePath(wps.times, wps.values, closed=wps.closed)


class TrapezoidalWarp:
    """C1 time map s(t) with trapezoidal rate, preserving total duration."""

    def __init__(self, duration: float, law: SpeedLaw, t0: float = 0.0):
        if law.t_acc + law.t_dec > duration + 1e-12:
            raise InfeasibleLaw(
                f"ramps ({law.t_acc} + {law.t_dec}) exceed duration {duration}")
        self.t0 = t0
        self.T = duration
        self.ta = law.t_acc
        self.td = law.t_dec
        denom = duration - 0.5 * (law.t_acc + law.t_dec)
        self.rate = duration / denom if denom > 0 else 0.0

    def s(self, t: float) -> float:
        t = min(max(t - self.t0, 0.0), self.T)
        if self.ta > 0.0 and t < self.ta:
            out = self.rate * t * t / (2.0 * self.ta)
        elif t <= self.T - self.td:
            out = self.rate * (t - 0.5 * self.ta)
        else:
            out = self.T - self.rate * (self.T - t) ** 2 / (2.0 * self.td)
        return self.t0 + min(max(out, 0.0), self.T)

    def ds(self, t: float) -> float:
        t = min(max(t - self.t0, 0.0), self.T)
        if self.ta > 0.0 and t < self.ta:
            return self.rate * t / self.ta
        if t <= self.T - self.td:
            return self.rate
        return self.rate * (self.T - t) / self.td

    def dds(self, t: float) -> float:
        t = min(max(t - self.t0, 0.0), self.T)
        if self.ta > 0.0 and t < self.ta:
            return self.rate / self.ta
        if t <= self.T - self.td:
            return 0.0
        return -self.rate / self.td

    def t_of_s(self, s: float) -> float:
        """Inverse time map (monotone, closed form per segment)."""
        s = min(max(s - self.t0, 0.0), self.T)
        s_ramp_up = 0.5 * self.rate * self.ta
        if s <= s_ramp_up and self.ta > 0.0:
            return self.t0 + math.sqrt(2.0 * self.ta * s / self.rate)
        s_ramp_down = 0.5 * self.rate * self.td
        if s >= self.T - s_ramp_down and self.td > 0.0:
            return self.t0 + self.T - math.sqrt(2.0 * self.td * (self.T - s) / self.rate)
        return self.t0 + s / self.rate + 0.5 * self.ta

    def breakpoints(self) -> list[float]:
        """Times where the warp acceleration jumps (ramp boundaries)."""
        return [self.t0, self.t0 + self.ta, self.t0 + self.T - self.td,
                self.t0 + self.T]


class TimedPath:
    """A geometric path composed with a speed-law time warp."""

    def __init__(self, path: HermitePath, law: SpeedLaw | None = None):
        self.path = path
        self.warp = TrapezoidalWarp(path.duration, law or SpeedLaw(), t0=path.t0)

    @property
    def duration(self) -> float:
        return self.path.duration

    @property
    def t0(self) -> float:
        return self.path.t0

    def value(self, t: float) -> np.ndarray:
        return self.path.value(self.warp.s(t))

    def velocity(self, t: float) -> np.ndarray:
        return self.path.velocity(self.warp.s(t)) * self.warp.ds(t)

    def acceleration(self, t: float) -> np.ndarray:
        s = self.warp.s(t)
        ds = self.warp.ds(t)
        return (self.path.acceleration(s) * ds * ds
                + self.path.velocity(s) * self.warp.dds(t))

    def breakpoints(self) -> list[float]:
        """Times where acceleration may jump: warp ramps and spline knots."""
        pts = set(self.warp.breakpoints())
        for knot in self.path.t:
            pts.add(self.warp.t_of_s(float(knot)))
        return sorted(pts)


def apply_speed_law(path: HermitePath, law: SpeedLaw) -> TimedPath:
    """Reparameterize a path in time; its geometric image is unchanged."""
    return TimedPath(path, law)


@dataclass(frozen=True)
class TrajectorySample:
    t: float
    value: np.ndarray
    d_value: np.ndarray
    dd_value: np.ndarray


def sample(path: TimedPath | HermitePath, dt: float = DT_DEFAULT) -> list[TrajectorySample]:
    """Fixed-step samples with analytic derivatives; count = floor(T/dt) + 1."""
    if dt <= 0.0:
        raise ValueError("dt must be positive")
    if isinstance(path, HermitePath):
        path = TimedPath(path)
    n = int(math.floor(path.duration / dt + 1e-9))
    out = []
    for k in range(n + 1):
        t = path.t0 + k * dt
        out.append(TrajectorySample(t, path.value(t), path.velocity(t),
                                    path.acceleration(t)))
    return out


# ---------------------------------------------------------------------------
# built-in experiment trajectories

_DIAMOND = [(0.22, 0.22), (0.32, 0.32), (0.42, 0.32), (0.32, 0.22), (0.22, 0.22)]


def _circle_points(center, radius, n_intervals, phase=0.0, sense=1.0, plane="xz"):
    pts = []
    for k in range(n_intervals + 1):
        phi = phase + sense * 2.0 * math.pi * k / n_intervals
        if plane == "xz":
            pts.append((center[0] + radius * math.cos(phi),
                        center[1] + radius * math.sin(phi)))
        else:  # yz circle at fixed x
            pts.append((center[0],
                        center[1] + radius * math.sin(phi),
                        center[2] + radius * math.cos(phi)))
    return pts


def builtin(traj_id: str, spec=None) -> tuple[WaypointSet, SpeedLaw]:
    """Waypoints and speed law of a built-in trajectory.

    F2-T2 interpolates in joint space, so it needs the mechanism spec to
    convert the shared diamond waypoints through the inverse kinematics.
    """
    law = SpeedLaw(t_acc=0.5, t_dec=0.5)
    if traj_id == "F2-T1":
        times = tuple(float(k) for k in range(5))
        return WaypointSet(times, np.array(_DIAMOND), "task", closed=True), law
    if traj_id == "F2-T2":
        if spec is None:
            raise ValueError("F2-T2 needs a mechanism spec (joint-space waypoints)")
        from .ik import ik_forbal2

        qs = []
        for x, z in _DIAMOND:
            sol = ik_forbal2(spec, (x, z))
            qs.append((sol.q11, sol.q21))
        times = tuple(float(k) for k in range(5))
        return WaypointSet(times, np.array(qs), "joint", closed=True), law
    if traj_id == "F2-T3":
        # figure of eight: one turn around each of two circles, 0.25 s spacing
        c1, c2, r = (0.235, 0.225), (0.285, 0.175), 0.025
        toward = math.atan2(c2[1] - c1[1], c2[0] - c1[0])
        first = _circle_points(c1, r, 8, phase=toward, sense=1.0)
        second = _circle_points(c2, r, 8, phase=toward + math.pi, sense=-1.0)
        pts = first + second[1:]
        times = tuple(0.25 * k for k in range(17))
        return WaypointSet(times, np.array(pts), "task", closed=False), law
    if traj_id == "F2-T4":
        pts = _circle_points((0.25, 0.22), 0.05, 40)
        times = tuple(0.2 * k for k in range(41))
        return WaypointSet(times, np.array(pts), "task", closed=True), law
    if traj_id == "F5-T1":
        pts = [(x, 0.0, z, 0.0, 0.0) for x, z in _DIAMOND]
        times = tuple(float(k) for k in range(5))
        return WaypointSet(times, np.array(pts), "task", closed=True), law
    if traj_id == "F5-T2":
        yaw = -1.570796
        pts = [(x, 0.0, z, 0.0, yaw) for x, z in _circle_points((0.25, 0.22), 0.05, 40)]
        times = tuple(0.2 * k for k in range(41))
        return WaypointSet(times, np.array(pts), "task", closed=True), law
    if traj_id == "F5-T3":
        pts = [(x, y, z, 0.0, 0.0)
               for x, y, z in _circle_points((0.3, 0.0, 0.3), 0.1, 40, plane="yz")]
        times = tuple(0.2 * k for k in range(41))
        return WaypointSet(times, np.array(pts), "task", closed=True), law
    raise UnknownId(f"unknown trajectory id {traj_id!r}; have {BUILTIN_IDS}")


# ---------------------------------------------------------------------------
# waypoint CSV files

_HEADERS = {
    ("task", 2): ["t", "x", "z"],
    ("task", 5): ["t", "x", "y", "z", "beta", "gamma"],
    ("joint", 2): ["t", "q11", "q21"],
}


def waypoints_to_csv(wps: WaypointSet) -> str:
    header = _HEADERS.get((wps.space, wps.dim))
    if header is None:
        raise ValueError(f"no CSV schema for space={wps.space} dim={wps.dim}")
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for t, row in zip(wps.times, wps.values):
        writer.writerow([format(t, ".9g")] + [format(v, ".9g") for v in row])
    return buf.getvalue()


def waypoints_from_csv(text: str) -> WaypointSet:
    rows = list(csv.reader(io.StringIO(text)))
    if not rows:
        raise ValueError("empty waypoint file")
    header = [h.strip() for h in rows[0]]
    space = None
    for (sp, _dim), cols in _HEADERS.items():
        if header == cols:
            space = sp
            break
    if space is None:
        raise ValueError(f"unrecognized waypoint header {header}")
    data = np.array([[float(v) for v in row] for row in rows[1:] if row])
    times = tuple(data[:, 0])
    values = data[:, 1:]
    closed = bool(np.max(np.abs(values[0] - values[-1])) < 1e-9)
    return WaypointSet(times, values, space, closed=closed)
