"""Inverse dynamics and base reaction wrench of the constrained linkage.

Every rigid body is reduced to an equivalent set of point masses: a uniform
slender rod is exactly three points (ends and center), counter masses and
payload lumps are single points.  That reproduces each link's mass, CoM and
rotational inertia for every rotation axis, so one point-mass formulation
covers the planar joint torques, the base-yaw torque of the spatial variant
(with its centripetal and Coriolis couplings) and the full reaction wrench,
with no separate inertia bookkeeping.

Torques come from the projected Newton-Euler (virtual work) balance over the
independent coordinates (theta11, theta21[, q0]); passive rates follow from
the loop closure.  Static lateral CoM offsets enter only as the constant
gravity moment they exert about the base x axis; they do not move.
"""

from __future__ import annotations

import math
import weakref
from dataclasses import dataclass

import numpy as np

from .model import (
    LINK_KEYS,
    JointState,
    MechanismSpec,
    RateState,
    dunit,
    passive_rate_jacobian,
    unit,
)

GRAV_DIR = np.array([0.0, 0.0, -1.0])


@dataclass(frozen=True)
class LinkInertia:
    """Aggregated planar rigid-body data of one link."""

    mass: float
    com: float
    rot_inertia: float  # about the aggregated CoM, out-of-plane axis


@dataclass(frozen=True)
class PointMass:
    mass: float
    link: str        # carrying link key
    offset: float    # inline offset from the link's proximal joint
    y: float = 0.0   # static lateral offset (gravity moment only)


@dataclass(frozen=True)
class ReactionWrench:
    force: np.ndarray   # (3,) base-on-robot support force
    moment: np.ndarray  # (3,) about the base origin

    def minus(self, other: "ReactionWrench") -> "ReactionWrench":
        return ReactionWrench(self.force - other.force, self.moment - other.moment)


def _rod_length(spec: MechanismSpec, key: str) -> float:
    ln = spec.links[key].length
    return ln + spec.ee_offset if key == "22" else ln


def link_inertia(spec: MechanismSpec, key: str) -> LinkInertia:
    """Aggregated (mass, CoM, inertia) of a link, payload excluded.

    Defaults model the profile as a uniform slender rod and the counter mass
    as a point; a configured ``rot_inertia`` overrides the aggregate.
    """
    ln = spec.links[key]
    m, s = ln.mass, ln.first_moment
    com = s / m if m > 0.0 else 0.0
    if ln.rot_inertia is not None:
        return LinkInertia(m, com, ln.rot_inertia)
    length = _rod_length(spec, key)
    inertia = ln.profile_mass * length * length / 12.0
    inertia += ln.profile_mass * (ln.profile_com - com) ** 2
    inertia += ln.counter_mass * (ln.counter_offset - com) ** 2
    return LinkInertia(m, com, inertia)


def _triple(mass: float, com: float, inertia: float, spread: float,
            link: str, y: float) -> list[PointMass]:
    """Three collinear points matching (mass, com, inertia about com)."""
    if mass <= 0.0:
        return []
    if inertia <= 0.0:
        return [PointMass(mass, link, com, y)]
    d = max(spread, math.sqrt(inertia / mass) * (1.0 + 1e-12))
    m_end = inertia / (2.0 * d * d)
    m_mid = mass - 2.0 * m_end
    return [PointMass(m_end, link, com - d, y),
            PointMass(m_end, link, com + d, y),
            PointMass(m_mid, link, com, y)]


_POINT_CACHE: dict[int, tuple] = {}


def point_masses(spec: MechanismSpec) -> list[PointMass]:
    """Equivalent point-mass set of the whole moving mechanism.

    Cached per spec instance (specs are immutable); treat the list as
    read-only.
    """
    hit = _POINT_CACHE.get(id(spec))
    if hit is not None and hit[0]() is spec:
        return hit[1]
    pts = _build_point_masses(spec)
    if len(_POINT_CACHE) > 256:
        _POINT_CACHE.clear()
    _POINT_CACHE[id(spec)] = (weakref.ref(spec), pts)
    return pts


def _build_point_masses(spec: MechanismSpec) -> list[PointMass]:
    pts: list[PointMass] = []
    for key in LINK_KEYS:
        ln = spec.links[key]
        length = _rod_length(spec, key)
        if ln.rot_inertia is not None:
            agg = link_inertia(spec, key)
            pts += _triple(agg.mass, agg.com, agg.rot_inertia, length / 2.0,
                           key, ln.profile_y)
        else:
            rod_i = ln.profile_mass * length * length / 12.0
            pts += _triple(ln.profile_mass, ln.profile_com, rod_i, length / 2.0,
                           key, ln.profile_y)
            if ln.counter_mass > 0.0:
                pts.append(PointMass(ln.counter_mass, key, ln.counter_offset,
                                     ln.counter_y))
    l22 = spec.links["22"].length
    for p in spec.payload_points():
        pts.append(PointMass(p.mass, "22", l22 + p.offset_from_pc, p.y_offset))
    return pts


# ---------------------------------------------------------------------------
# planar point kinematics
#
# Points on the same link share the carrier-joint kinematics and the link's
# direction trig, so both are computed once per (state, rates) in a frame
# table; per point the evaluation is a handful of scalar multiplies.

_CARRIER = {"11": (None, "joint11"), "12": ("11", "joint11"),
            "21": (None, "joint21"), "22": ("21", "joint21")}


def _angles(state: JointState, rates: RateState) -> dict[str, tuple[float, float, float]]:
    return {"11": (state.theta11, rates.d11, rates.dd11),
            "12": (state.theta12, rates.d12, rates.dd12),
            "21": (state.theta21, rates.d21, rates.dd21),
            "22": (state.theta22, rates.d22, rates.dd22)}


class _Frame:
    """Per-link origin kinematics and direction trig for one evaluation."""

    __slots__ = ("c", "s", "d", "dd", "ox", "oz", "ovx", "ovz", "oax", "oaz")

    def __init__(self, c, s, d, dd, ox, oz, ovx=0.0, ovz=0.0, oax=0.0, oaz=0.0):
        self.c, self.s, self.d, self.dd = c, s, d, dd
        self.ox, self.oz = ox, oz
        self.ovx, self.ovz = ovx, ovz
        self.oax, self.oaz = oax, oaz

    def point(self, e: float):
        """(pos, vel, acc) 2-vectors of a point at inline offset e."""
        c, s, d, dd = self.c, self.s, self.d, self.dd
        px = self.ox + e * c
        pz = self.oz + e * s
        vx = self.ovx - e * s * d
        vz = self.ovz + e * c * d
        ax = self.oax - e * (c * d * d + s * dd)
        az = self.oaz - e * (s * d * d - c * dd)
        return px, pz, vx, vz, ax, az


def _frames(spec: MechanismSpec, state: JointState, rates: RateState) -> dict[str, _Frame]:
    ang = _angles(state, rates)
    frames: dict[str, _Frame] = {}
    for key in LINK_KEYS:
        carrier, root = _CARRIER[key]
        base = getattr(spec, root)
        th, d, dd = ang[key]
        fr = _Frame(math.cos(th), math.sin(th), d, dd, base[0], base[1])
        if carrier is not None:
            lc = spec.links[carrier].length
            cf = frames[carrier]
            fr.ox = cf.ox + lc * cf.c
            fr.oz = cf.oz + lc * cf.s
            fr.ovx = -lc * cf.s * cf.d
            fr.ovz = lc * cf.c * cf.d
            fr.oax = -lc * (cf.c * cf.d * cf.d + cf.s * cf.dd)
            fr.oaz = -lc * (cf.s * cf.d * cf.d - cf.c * cf.dd)
        frames[key] = fr
    return frames


def _point_kin(spec: MechanismSpec, ang, pm: PointMass):
    """Planar position / velocity / acceleration of one point mass."""
    carrier, root = _CARRIER[pm.link]
    base = getattr(spec, root)
    th, d, dd = ang[pm.link]
    pos = base + pm.offset * unit(th)
    vel = pm.offset * dunit(th) * d
    acc = pm.offset * (-unit(th) * d * d + dunit(th) * dd)
    if carrier is not None:
        lc = spec.links[carrier].length
        thc, dc, ddc = ang[carrier]
        pos = pos + lc * unit(thc)
        vel = vel + lc * dunit(thc) * dc
        acc = acc + lc * (-unit(thc) * dc * dc + dunit(thc) * ddc)
    return pos, vel, acc


def _partial_frames(spec: MechanismSpec, state: JointState, jac) -> list[dict[str, _Frame]]:
    """Velocity-only frames under unit actuated rates (d11, d21)."""
    out = []
    for k in range(2):
        rates = {"11": 1.0 if k == 0 else 0.0, "21": 0.0 if k == 0 else 1.0,
                 "12": jac[0, k], "22": jac[1, k]}
        frames: dict[str, _Frame] = {}
        for key in LINK_KEYS:
            carrier, root = _CARRIER[key]
            base = getattr(spec, root)
            th = getattr(state, f"theta{key}")
            fr = _Frame(math.cos(th), math.sin(th), rates[key], 0.0,
                        base[0], base[1])
            if carrier is not None:
                lc = spec.links[carrier].length
                cf = frames[carrier]
                fr.ox = cf.ox + lc * cf.c
                fr.oz = cf.oz + lc * cf.s
                fr.ovx = -lc * cf.s * cf.d
                fr.ovz = lc * cf.c * cf.d
            frames[key] = fr
        out.append(frames)
    return out


def _rotz(q0: float) -> np.ndarray:
    c, s = math.cos(q0), math.sin(q0)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def _embed(spec: MechanismSpec, state: JointState, rates: RateState, pos2, vel2, acc2):
    """Lift planar point kinematics into 3D with the base yaw motion.

    Reference implementation: the production paths below work in the rotating
    frame and rotate once per wrench; the test oracles cross-check them
    against this explicit per-point embedding.
    """
    q0 = state.q0 or 0.0
    rot = _rotz(q0)
    x, z = pos2
    vx, vz = vel2
    ax, az = acc2
    d0, dd0 = rates.d0, rates.dd0
    pos = rot @ np.array([x, 0.0, z])
    vel = rot @ np.array([vx, d0 * x, vz])
    acc = rot @ np.array([ax - d0 * d0 * x, dd0 * x + 2.0 * d0 * vx, az])
    return pos, vel, acc, rot


def inverse_dynamics(spec: MechanismSpec, state: JointState,
                     rates: RateState) -> dict[str, float]:
    """Actuator torques for a loop-consistent state at full rate level.

    Returns tau11 and tau21 (conjugate to the absolute actuated angles), plus
    tau0 when the state carries a base yaw angle.  Projections are taken in
    the rotating linkage frame; the yaw terms are the centripetal/Coriolis
    couplings of the planar motion.
    """
    spatial = state.q0 is not None
    jac = passive_rate_jacobian(spec, state)
    frames = _frames(spec, state, rates)
    partials = _partial_frames(spec, state, jac)
    g = spec.gravity
    d0, dd0 = rates.d0, rates.dd0
    tau11 = tau21 = tau0 = 0.0
    for pm in point_masses(spec):
        if pm.mass == 0.0:
            continue
        px, pz, vx, vz, ax, az = frames[pm.link].point(pm.offset)
        _, _, v1x, v1z, _, _ = partials[0][pm.link].point(pm.offset)
        _, _, v2x, v2z, _, _ = partials[1][pm.link].point(pm.offset)
        if spatial:
            fx = pm.mass * (ax - d0 * d0 * px)
            fy = pm.mass * (dd0 * px + 2.0 * d0 * vx)
            tau0 += fy * px
        else:
            fx = pm.mass * ax
        fz = pm.mass * (az + g)
        tau11 += fx * v1x + fz * v1z
        tau21 += fx * v2x + fz * v2z
    out = {"tau11": tau11, "tau21": tau21}
    if spatial:
        out["tau0"] = tau0
    return out


def lateral_static_moment(spec: MechanismSpec) -> float:
    """Constant gravity moment about base x from lateral CoM offsets."""
    total = 0.0
    for pm in point_masses(spec):
        total += pm.mass * pm.y * spec.gravity
    return total


def base_reaction(spec: MechanismSpec, state: JointState,
                  rates: RateState) -> ReactionWrench:
    """Support wrench at the base origin: force Σ m (a - g), matching moment.

    Lateral CoM offsets add their constant gravity moment (rotated with the
    base yaw); they are held out of the motion so the force theorem stays
    exact for balanced specs.
    """
    frames = _frames(spec, state, rates)
    g = spec.gravity
    q0 = state.q0
    d0, dd0 = rates.d0, rates.dd0
    fx_t = fy_t = fz_t = mx_t = my_t = mz_t = 0.0
    for pm in point_masses(spec):
        if pm.mass == 0.0:
            continue
        px, pz, vx, vz, ax, az = frames[pm.link].point(pm.offset)
        if q0 is not None:
            fx = pm.mass * (ax - d0 * d0 * px)
            fy = pm.mass * (dd0 * px + 2.0 * d0 * vx)
        else:
            fx = pm.mass * ax
            fy = 0.0
        fz = pm.mass * (az + g)
        fx_t += fx
        fy_t += fy
        fz_t += fz
        mx_t -= pz * fy
        my_t += pz * fx - px * fz
        mz_t += px * fy
    mx_t += lateral_static_moment(spec)
    force = np.array([fx_t, fy_t, fz_t])
    moment = np.array([mx_t, my_t, mz_t])
    if q0 is not None:
        rot = _rotz(q0)
        force = rot @ force
        moment = rot @ moment
    return ReactionWrench(force, moment)


def dynamic_force(spec: MechanismSpec, state: JointState,
                  rates: RateState) -> np.ndarray:
    """Net inertial force Σ m a (weight support excluded); zero when balanced."""
    frames = _frames(spec, state, rates)
    q0 = state.q0
    d0, dd0 = rates.d0, rates.dd0
    fx_t = fy_t = fz_t = 0.0
    for pm in point_masses(spec):
        if pm.mass == 0.0:
            continue
        px, _, vx, _, ax, az = frames[pm.link].point(pm.offset)
        if q0 is not None:
            fx_t += pm.mass * (ax - d0 * d0 * px)
            fy_t += pm.mass * (dd0 * px + 2.0 * d0 * vx)
        else:
            fx_t += pm.mass * ax
        fz_t += pm.mass * az
    force = np.array([fx_t, fy_t, fz_t])
    return (_rotz(q0) @ force) if q0 is not None else force


def mechanical_energy(spec: MechanismSpec, state: JointState,
                      rates: RateState) -> tuple[float, float]:
    """(kinetic, potential) energy of the moving masses."""
    frames = _frames(spec, state, rates)
    d0 = rates.d0 if state.q0 is not None else 0.0
    ke = 0.0
    pe = 0.0
    for pm in point_masses(spec):
        if pm.mass == 0.0:
            continue
        px, pz, vx, vz, _, _ = frames[pm.link].point(pm.offset)
        vy = d0 * px
        ke += 0.5 * pm.mass * (vx * vx + vy * vy + vz * vz)
        pe += pm.mass * spec.gravity * pz
    return ke, pe


def total_momentum3(spec: MechanismSpec, state: JointState,
                    rates: RateState) -> np.ndarray:
    """Total linear momentum in 3D (base yaw motion included)."""
    frames = _frames(spec, state, rates)
    q0 = state.q0
    d0 = rates.d0 if q0 is not None else 0.0
    mx = my = mz = 0.0
    for pm in point_masses(spec):
        if pm.mass == 0.0:
            continue
        px, _, vx, vz, _, _ = frames[pm.link].point(pm.offset)
        mx += pm.mass * vx
        my += pm.mass * d0 * px
        mz += pm.mass * vz
    mom = np.array([mx, my, mz])
    return (_rotz(q0) @ mom) if q0 is not None else mom


def momentum_audit(spec: MechanismSpec, eval_state, times, delta: float = 1e-4) -> float:
    """Max over times of |Σ m a - dL/dt| with central-difference momentum.

    ``eval_state(t)`` must return a loop-consistent (JointState, RateState);
    the audit is the consistency gate between the momentum evaluation and the
    inverse-dynamics accelerations.
    """
    worst = 0.0
    for t in times:
        state, rates = eval_state(t)
        f_dyn = dynamic_force(spec, state, rates)
        sm, rm = eval_state(t - delta)
        sp, rp = eval_state(t + delta)
        dl = (total_momentum3(spec, sp, rp) - total_momentum3(spec, sm, rm)) / (2 * delta)
        worst = max(worst, float(np.linalg.norm(f_dyn - dl)))
    return worst
