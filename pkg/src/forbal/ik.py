"""Closed-form inverse kinematics for the planar and spatial variants.

The planar solve works the triangle (base joint, chain-2 elbow, end effector)
with the cosine rule: sides are the proximal link length ``l`` and the distal
link extended to the end effector ``l + l_e``.  The equal-length rhombus then
gives both passive angles for free.  Targets use the loop-aligned ``q``
convention; :mod:`forbal.model` converts to absolute angles.

The spatial variant rotates the target into the linkage plane with the base
yaw joint, retreats from the implement joint to the wrist joint by the
pitch-rotated mount offset, and reuses the planar solve.  The wrist angles
then decouple: the pitch joint compensates the distal-link rotation and the
implement joint the base yaw.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    ConfigError,
    LimitViolation,
    PitchSingularity,
    Unreachable,
    YawSingularity,
)
from .model import (
    JointState,
    MechanismSpec,
    forward_kinematics,
    q_from_theta,
    theta_from_q,
    wrap_angle,
)

#: reachability grace: cosine-rule arguments must stay this far inside [-1, 1]
ACOS_GRACE = 1e-9

#: margins below this classify a target as near-singular
NEAR_SINGULAR_MARGIN = 1e-3


@dataclass(frozen=True)
class IkSolution:
    """Joint solution plus the intermediate triangle quantities."""

    q11: float
    q21: float
    q12: float
    q22: float
    beta: float
    gamma: float
    theta_be: float
    p_be_norm: float
    q0: float | None = None
    q3: float | None = None
    q4: float | None = None

    def joint_state(self) -> JointState:
        t11, t12, t21, t22 = theta_from_q(self.q11, self.q12, self.q21, self.q22)
        return JointState(t11, t12, t21, t22, q0=self.q0, q3=self.q3, q4=self.q4)

    def as_dict(self) -> dict[str, float]:
        out = {"q11": self.q11, "q21": self.q21, "q12": self.q12, "q22": self.q22,
               "beta": self.beta, "gamma": self.gamma,
               "theta_be": self.theta_be, "p_be_norm": self.p_be_norm}
        for k in ("q0", "q3", "q4"):
            v = getattr(self, k)
            if v is not None:
                out[k] = v
        return out


def _rhombus_lengths(spec: MechanismSpec) -> tuple[float, float]:
    lengths = {k: spec.links[k].length for k in ("11", "12", "21", "22")}
    l = lengths["11"]
    if any(abs(v - l) > 1e-9 * max(l, 1.0) for v in lengths.values()):
        raise ConfigError("closed-form IK requires equal link lengths")
    if abs(spec.base_separation) > 1e-12:
        raise ConfigError("closed-form IK requires coaxial base joints")
    return l, l + spec.ee_offset


def _check_limits(spec: MechanismSpec, values: dict[str, float]) -> None:
    bad = []
    for key, val in values.items():
        lim = spec.joint_limits.get(key)
        if lim and not (lim[0] <= val <= lim[1]):
            bad.append(f"{key}={val:.4f} outside [{lim[0]}, {lim[1]}]")
    if bad:
        raise LimitViolation("; ".join(bad))


def _triangle_args(spec: MechanismSpec, target: np.ndarray) -> tuple[float, float, float, float]:
    """(arg_beta, arg_gamma, r, theta_be) of the IK triangle for a planar target."""
    l, big = _rhombus_lengths(spec)
    p_be = np.asarray(target, dtype=float) - spec.base_point
    r = float(np.hypot(p_be[0], p_be[1]))
    theta_be = math.atan2(p_be[1], p_be[0])
    if r < 1e-12:
        return -2.0, -2.0, r, theta_be  # folded onto the base joint: unreachable
    arg_beta = (l * l + big * big - r * r) / (2.0 * l * big)
    arg_gamma = (r * r + l * l - big * big) / (2.0 * l * r)
    return arg_beta, arg_gamma, r, theta_be


def ik_forbal2(spec: MechanismSpec, target, enforce_limits: bool = False) -> IkSolution:
    """Planar inverse kinematics for an end-effector target (x, z).

    Raises Unreachable when the target lies outside the annulus the two-link
    triangle can span (including the stretched singularity, where the two
    actuated angles would sum to zero) and LimitViolation when requested.
    """
    arg_beta, arg_gamma, r, theta_be = _triangle_args(spec, target)
    margin = min(1.0 - abs(arg_beta), 1.0 - abs(arg_gamma))
    if margin <= ACOS_GRACE:
        raise Unreachable(
            f"target at distance {r:.6g} from the base joint is outside the "
            f"reachable annulus (cosine-rule margin {margin:.3g})", margin=margin)
    beta = math.acos(arg_beta)
    gamma = math.acos(arg_gamma)
    q21 = gamma + theta_be
    q11 = math.pi - beta - q21
    q12 = q22 = math.pi - beta
    sol = IkSolution(q11=q11, q21=q21, q12=q12, q22=q22, beta=beta, gamma=gamma,
                     theta_be=theta_be, p_be_norm=r)
    if enforce_limits:
        _check_limits(spec, {"q11": q11, "q12": q12, "q21": q21, "q22": q22})
    return sol


def _rot2(phi: float) -> np.ndarray:
    c, s = math.cos(phi), math.sin(phi)
    return np.array([[c, -s], [s, c]])


def _mount_offset_inplane(spec: MechanismSpec, pitch: float) -> np.ndarray:
    """Wrist-to-implement offset in the linkage plane at a given mount pitch.

    Positive pitch about the out-of-plane axis tips the mount x axis toward
    -z, hence the inverse planar rotation.
    """
    mo = spec.spatial.motor_offset
    return _rot2(-pitch) @ np.array([mo[0], mo[2]])


def ik_forbal5(spec: MechanismSpec, target, enforce_limits: bool = False) -> IkSolution:
    """Spatial inverse kinematics for a pose (x, y, z, pitch, yaw).

    The position is the implement joint location in the global frame; pitch
    is about the linkage-plane lateral axis and yaw about the global vertical,
    composed as base-yaw * pitch * residual-yaw.
    """
    if spec.spatial is None:
        raise ConfigError("spec has no spatial extension")
    t = np.asarray(target, dtype=float)
    if t.shape != (5,):
        raise ValueError("spatial target must be (x, y, z, pitch, yaw)")
    x, y, z, pitch, yaw = (float(v) for v in t)
    if math.hypot(x, y) < 1e-12:
        raise YawSingularity("target on the base rotation axis: yaw angle undefined")
    if abs(abs(pitch) - math.pi) < 1e-9:
        raise PitchSingularity("pitch of +/-pi is a singular implement pose")
    q0 = math.atan2(y, x)
    # target in the rotated linkage plane: (radial, vertical)
    p4_plane = np.array([math.hypot(x, y), z])
    p3_plane = p4_plane - _mount_offset_inplane(spec, pitch)
    planar = ik_forbal2(spec, p3_plane, enforce_limits=enforce_limits)
    q3 = planar.q22 - planar.q21 + pitch
    q4 = q0 - yaw
    sol = IkSolution(q11=planar.q11, q21=planar.q21, q12=planar.q12, q22=planar.q22,
                     beta=planar.beta, gamma=planar.gamma, theta_be=planar.theta_be,
                     p_be_norm=planar.p_be_norm, q0=q0, q3=q3, q4=q4)
    if enforce_limits:
        _check_limits(spec, {"q0": q0, "q3": q3, "q4": q4})
    return sol


def fk_forbal2(spec: MechanismSpec, q11: float, q21: float) -> np.ndarray:
    """Planar end-effector position for an actuated pair in the IK convention."""
    _, _, pe = forward_kinematics(spec, -q11, q21, branch="elbow-down")
    return pe


def fk_forbal5(spec: MechanismSpec, q0: float, q11: float, q21: float,
               q3: float, q4: float) -> tuple[np.ndarray, float, float]:
    """Spatial forward kinematics: implement position, pitch, yaw.

    The mount pitch follows the wrist compensation identity, so a solution of
    :func:`ik_forbal5` reproduces its pose exactly.
    """
    if spec.spatial is None:
        raise ConfigError("spec has no spatial extension")
    state, _, pe = forward_kinematics(spec, -q11, q21, branch="elbow-down")
    _, _, _, q22 = q_from_theta(state.theta11, state.theta12, state.theta21, state.theta22)
    pitch = wrap_angle(q3 + q21 - q22)
    p4_plane = pe + _mount_offset_inplane(spec, pitch)
    c0, s0 = math.cos(q0), math.sin(q0)
    p4 = np.array([c0 * p4_plane[0], s0 * p4_plane[0], p4_plane[1]])
    yaw = wrap_angle(q0 - q4)
    return p4, pitch, yaw


@dataclass(frozen=True)
class ReachabilityReport:
    status: str  # "reachable" | "unreachable" | "near-singular"
    margin: float

    @property
    def reachable(self) -> bool:
        return self.status != "unreachable"


def reachability(spec: MechanismSpec, target, use_limits: bool = True) -> ReachabilityReport:
    """Diagnose a target without raising; margin mirrors the IK error behavior.

    The margin is the smaller of (a) the distance of the cosine-rule arguments
    from the +/-1 boundary and (b), when joint limits are configured and
    ``use_limits`` is set, the smallest joint-limit slack in radians.
    """
    t = np.asarray(target, dtype=float)
    if t.shape == (5,):
        if math.hypot(t[0], t[1]) < 1e-12:
            return ReachabilityReport("unreachable", -1.0)
        planar_target = (np.array([math.hypot(t[0], t[1]), t[2]])
                         - _mount_offset_inplane(spec, float(t[3])))
    elif t.shape == (2,):
        planar_target = t
    else:
        raise ValueError("target must be (x, z) or (x, y, z, pitch, yaw)")
    arg_beta, arg_gamma, _, theta_be = _triangle_args(spec, planar_target)
    margin = min(1.0 - abs(arg_beta), 1.0 - abs(arg_gamma))
    if margin <= ACOS_GRACE:
        return ReachabilityReport("unreachable", margin)
    if use_limits and spec.joint_limits:
        beta = math.acos(arg_beta)
        gamma = math.acos(arg_gamma)
        q21 = gamma + theta_be
        vals = {"q11": math.pi - beta - q21, "q12": math.pi - beta,
                "q21": q21, "q22": math.pi - beta}
        for key, val in vals.items():
            lim = spec.joint_limits.get(key)
            if lim:
                slack = min(val - lim[0], lim[1] - val)
                margin = min(margin, slack)
        if margin <= 0.0:
            return ReachabilityReport("unreachable", margin)
    if margin < NEAR_SINGULAR_MARGIN:
        return ReachabilityReport("near-singular", margin)
    return ReachabilityReport("reachable", margin)
