"""Mechanism description and closed-chain kinematics.

The five-bar linkage is modeled as two RR chains meeting at the closed-loop
point ``p_c``.  All planar quantities live in the x-z plane of the base frame
(x horizontal, z up, gravity along -z); y points out of plane.

Links are keyed ``"11", "12", "21", "22"``: the first digit is the chain, the
second the position along the chain starting at the base.  Angles ``theta_ij``
are absolute angles of each link axis from the +x axis (canonical internal
convention).  The inverse-kinematics modules use a separate loop-aligned
``q`` convention; :func:`theta_from_q` / :func:`q_from_theta` convert.

Geometry, with ``u(t) = (cos t, sin t)`` in (x, z):

    joint 11 at (-l_d/2, l_h)          joint 21 at (+l_d/2, l_h)
    elbow 1  = joint11 + l11 * u(theta11)
    elbow 2  = joint21 + l21 * u(theta21)
    p_c      = elbow1 + l12 * u(theta12) = elbow2 + l22 * u(theta22)
    p_e      = p_c + l_e * u(theta22)

The end effector rides on link 22, extended past ``p_c`` by ``ee_offset``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ConfigError, Singular, SingularConfiguration

LINK_KEYS = ("11", "12", "21", "22")

GRAVITY_DEFAULT = 9.80665

#: tolerance below which the two-circle intersection is treated as tangent
_TANGENT_TOL = 1e-12


def unit(theta: float) -> np.ndarray:
    """Planar direction vector (cos, sin) in the x-z plane."""
    return np.array([math.cos(theta), math.sin(theta)])


def dunit(theta: float) -> np.ndarray:
    """Derivative of :func:`unit` with respect to the angle."""
    return np.array([-math.sin(theta), math.cos(theta)])


def wrap_angle(a: float) -> float:
    """Wrap an angle to (-pi, pi]."""
    w = math.fmod(a + math.pi, 2.0 * math.pi)
    if w <= 0.0:
        w += 2.0 * math.pi
    return w - math.pi


@dataclass(frozen=True)
class LinkSpec:
    """Geometry and mass distribution of one link.

    Inline offsets are signed distances along the link axis from the proximal
    joint; counter masses mount behind the joint, so their offset is normally
    negative.  ``profile_y``/``counter_y`` are static lateral (out-of-plane)
    offsets used only for the constant gravity moment they add about the base
    x axis; they take no part in the balance conditions or in motion.
    """

    length: float
    profile_mass: float
    profile_com: float
    counter_mass: float = 0.0
    counter_com: float | None = None  # defaults to -length when unset
    profile_y: float = 0.0
    counter_y: float = 0.0
    rot_inertia: float | None = None  # aggregated override, about aggregated CoM

    def __post_init__(self):
        if not (self.length > 0.0 and math.isfinite(self.length)):
            raise ConfigError(f"link length must be positive, got {self.length}")
        if self.profile_mass < 0.0 or self.counter_mass < 0.0:
            raise ConfigError("link masses must be non-negative")
        if self.rot_inertia is not None and self.rot_inertia < 0.0:
            raise ConfigError("rot_inertia must be non-negative")

    @property
    def counter_offset(self) -> float:
        return -self.length if self.counter_com is None else self.counter_com

    @property
    def mass(self) -> float:
        """Aggregated mass (profile + counter)."""
        return self.profile_mass + self.counter_mass

    @property
    def first_moment(self) -> float:
        """Aggregated inline first moment m*e about the proximal joint."""
        return self.profile_mass * self.profile_com + self.counter_mass * self.counter_offset

    @property
    def com(self) -> float:
        """Aggregated inline CoM offset; 0 for a massless link."""
        m = self.mass
        return self.first_moment / m if m > 0.0 else 0.0

    def with_counter(self, mass: float, com: float | None = None) -> "LinkSpec":
        return replace(self, counter_mass=mass,
                       counter_com=self.counter_offset if com is None else com)


@dataclass(frozen=True)
class Forbal5Extension:
    """Spatial add-on: base yaw joint plus a 2-axis wrist on the end effector.

    ``motor_offset`` is the vector from the wrist pitch joint (at ``p_e``) to
    the implement joint, expressed in the wrist frame; its y component must be
    zero so the implement joint stays in the linkage plane.  CoM vectors are
    reduced to inline scalars by projection onto the link axis (x component,
    plus the implement z since the implement axis lies along the mount x at
    the nominal pose).
    """

    joint0_offset: float = 0.0
    motor_offset: tuple[float, float, float] = (0.0, 0.0, 0.0)
    ee_motor_mass: float = 0.0
    ee_motor_com: tuple[float, float, float] = (0.0, 0.0, 0.0)
    implement_mass: float = 0.0
    implement_com: tuple[float, float, float] = (0.0, 0.0, 0.0)

    def __post_init__(self):
        if abs(self.motor_offset[1]) > 1e-12:
            raise ConfigError("motor_offset must have zero out-of-plane component")
        if self.ee_motor_mass < 0.0 or self.implement_mass < 0.0:
            raise ConfigError("spatial masses must be non-negative")


@dataclass(frozen=True)
class PayloadPoint:
    """Point mass rigidly attached to link 22, offset inline from ``p_c``."""

    mass: float
    offset_from_pc: float
    y_offset: float = 0.0


@dataclass(frozen=True)
class MechanismSpec:
    """Full parameter set of one mechanism; single source of truth."""

    links: dict[str, LinkSpec]
    base_height: float = 0.0
    base_separation: float = 0.0
    ee_offset: float = 0.0
    ee_payload_mass: float = 0.0
    ee_payload_com: float = 0.0
    ee_payload_y: float = 0.0
    base_mass: float = 0.0
    gravity: float = GRAVITY_DEFAULT
    uniform: bool = False
    spatial: Forbal5Extension | None = None
    joint_limits: dict[str, tuple[float, float]] = field(default_factory=dict)
    floor_z: float | None = None  # lowest admissible end-effector height
    name: str = ""

    def __post_init__(self):
        missing = [k for k in LINK_KEYS if k not in self.links]
        if missing:
            raise ConfigError(f"links missing entries: {missing}")
        if self.base_separation < 0.0:
            raise ConfigError("base_separation must be >= 0")
        if self.uniform:
            lengths = {k: self.links[k].length for k in LINK_KEYS}
            lmax = max(lengths.values())
            if any(abs(v - lmax) > 1e-12 * max(lmax, 1.0) for v in lengths.values()):
                raise ConfigError(f"uniform flag set but link lengths differ: {lengths}")
        for key, (lo, hi) in self.joint_limits.items():
            if lo >= hi:
                raise ConfigError(f"joint limit for {key} has min >= max")

    @property
    def joint11(self) -> np.ndarray:
        return np.array([-0.5 * self.base_separation, self.base_height])

    @property
    def joint21(self) -> np.ndarray:
        return np.array([+0.5 * self.base_separation, self.base_height])

    @property
    def base_point(self) -> np.ndarray:
        """Midpoint of the two base joints (IK origin, balance pivot)."""
        return np.array([0.0, self.base_height])

    def link(self, key: str) -> LinkSpec:
        return self.links[key]

    @property
    def is_spatial(self) -> bool:
        return self.spatial is not None

    def payload_points(self) -> list[PayloadPoint]:
        """End-effector payload lumped as inline point masses on link 22.

        The planar variant carries one static payload at ``ee_payload_com``
        from ``p_c``.  The spatial variant adds the wrist motor (at ``p_e``
        plus its own inline CoM) and the implement (at the implement joint
        plus its inline CoM projection).
        """
        pts = []
        if self.ee_payload_mass > 0.0:
            pts.append(PayloadPoint(self.ee_payload_mass, self.ee_payload_com,
                                    self.ee_payload_y))
        sp = self.spatial
        if sp is not None:
            if sp.ee_motor_mass > 0.0:
                pts.append(PayloadPoint(sp.ee_motor_mass,
                                        self.ee_offset + sp.ee_motor_com[0],
                                        sp.ee_motor_com[1]))
            if sp.implement_mass > 0.0:
                off = self.ee_offset + sp.motor_offset[0] + sp.implement_com[2]
                pts.append(PayloadPoint(sp.implement_mass, off, sp.implement_com[1]))
        return pts

    def aggregate(self, key: str, include_payload: bool = True) -> tuple[float, float]:
        """(mass, first moment) of a link about its proximal joint.

        Payload point masses ride on link 22 at ``length + offset_from_pc``
        and are folded into its totals unless ``include_payload`` is False.
        """
        ln = self.links[key]
        m, s = ln.mass, ln.first_moment
        if key == "22" and include_payload:
            for p in self.payload_points():
                m += p.mass
                s += p.mass * (ln.length + p.offset_from_pc)
        return m, s

    def moving_mass(self) -> float:
        return sum(self.aggregate(k)[0] for k in LINK_KEYS)

    def zeroed_counter_masses(self) -> "MechanismSpec":
        """Copy of this spec with every counter mass removed."""
        links = {k: replace(v, counter_mass=0.0) for k, v in self.links.items()}
        return replace(self, links=links)

    def with_counter_masses(self, masses: dict[str, float]) -> "MechanismSpec":
        links = dict(self.links)
        for key, m in masses.items():
            links[key] = links[key].with_counter(m)
        return replace(self, links=links)


@dataclass(frozen=True)
class JointState:
    """Absolute link angles; spatial joints optional."""

    theta11: float
    theta12: float
    theta21: float
    theta22: float
    q0: float | None = None
    q3: float | None = None
    q4: float | None = None


@dataclass(frozen=True)
class RateState:
    """Angular velocities and accelerations matching a JointState."""

    d11: float
    d12: float
    d21: float
    d22: float
    dd11: float = 0.0
    dd12: float = 0.0
    dd21: float = 0.0
    dd22: float = 0.0
    d0: float = 0.0   # base yaw rate (spatial variant)
    dd0: float = 0.0


# ---------------------------------------------------------------------------
# forward kinematics

def chain_points(spec: MechanismSpec, state: JointState) -> dict[str, np.ndarray]:
    """Joint positions implied by a state: elbows, p_c (per chain) and p_e."""
    l = {k: spec.links[k].length for k in LINK_KEYS}
    e1 = spec.joint11 + l["11"] * unit(state.theta11)
    e2 = spec.joint21 + l["21"] * unit(state.theta21)
    pc1 = e1 + l["12"] * unit(state.theta12)
    pc2 = e2 + l["22"] * unit(state.theta22)
    pe = pc2 + spec.ee_offset * unit(state.theta22)
    return {"elbow1": e1, "elbow2": e2, "pc1": pc1, "pc2": pc2, "pe": pe}

def loop_closure_gap(spec: MechanismSpec, state: JointState) -> float:
    """Distance between the chain-1 and chain-2 evaluations of ``p_c``."""
    pts = chain_points(spec, state)
    return float(np.linalg.norm(pts["pc1"] - pts["pc2"]))


def forward_kinematics(spec: MechanismSpec, theta11: float, theta21: float,
                       branch: str = "elbow-down") -> tuple[JointState, np.ndarray, np.ndarray]:
    """Solve the passive angles for given actuated angles.

    The closed-loop point is one of the two intersections of the circles of
    radius l12 / l22 about the distal ends of links 11 / 21.  ``branch``
    selects the intersection: ``elbow-down`` is the working branch recovered
    by the inverse kinematics (the loop point lies clockwise of the
    elbow1->elbow2 direction), ``elbow-up`` the mirror.

    Returns (state, p_c, p_e).  Raises Unreachable when the circles do not
    intersect and Singular when they are tangent (or concentric).
    """
    from .errors import Unreachable  # local import keeps module deps one-way

    l12 = spec.links["12"].length
    l22 = spec.links["22"].length
    a = spec.joint11 + spec.links["11"].length * unit(theta11)
    b = spec.joint21 + spec.links["21"].length * unit(theta21)
    d = float(np.linalg.norm(b - a))
    scale = max(l12, l22)
    if d < _TANGENT_TOL * scale:
        raise Singular("distal-link circles are concentric")
    if d > l12 + l22 or d < abs(l12 - l22):
        raise Unreachable(
            f"distal-link circles do not intersect (d={d:.6g}, radii {l12}, {l22})")
    along = (l12 * l12 - l22 * l22 + d * d) / (2.0 * d)
    h_sq = l12 * l12 - along * along
    if h_sq < _TANGENT_TOL * scale * scale:
        raise Singular("distal-link circles are tangent (stretched or folded loop)")
    h = math.sqrt(h_sq)
    axis = (b - a) / d
    perp = np.array([axis[1], -axis[0]])  # clockwise normal of elbow1->elbow2
    if branch == "elbow-down":
        pc = a + along * axis + h * perp
    elif branch == "elbow-up":
        pc = a + along * axis - h * perp
    else:
        raise ValueError(f"unknown branch {branch!r}")
    theta12 = math.atan2(pc[1] - a[1], pc[0] - a[0])
    theta22 = math.atan2(pc[1] - b[1], pc[0] - b[0])
    state = JointState(theta11, theta12, theta21, theta22)
    pe = pc + spec.ee_offset * unit(theta22)
    return state, pc, pe


def fk_grid(spec: MechanismSpec, theta11: np.ndarray, theta21: np.ndarray,
            branch: str = "elbow-down") -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Vectorized forward kinematics for sampling oracles.

    Returns (theta12, theta22, p_e, valid); invalid entries (no intersection,
    tangent) are masked out rather than raised.
    """
    l12 = spec.links["12"].length
    l22 = spec.links["22"].length
    ax = spec.joint11[0] + spec.links["11"].length * np.cos(theta11)
    az = spec.joint11[1] + spec.links["11"].length * np.sin(theta11)
    bx = spec.joint21[0] + spec.links["21"].length * np.cos(theta21)
    bz = spec.joint21[1] + spec.links["21"].length * np.sin(theta21)
    dx, dz = bx - ax, bz - az
    d = np.hypot(dx, dz)
    valid = (d > 1e-9) & (d < l12 + l22 - 1e-12) & (d > abs(l12 - l22) + 1e-12)
    d_safe = np.where(valid, d, 1.0)
    along = (l12 * l12 - l22 * l22 + d_safe * d_safe) / (2.0 * d_safe)
    h_sq = l12 * l12 - along * along
    valid &= h_sq > _TANGENT_TOL
    h = np.sqrt(np.where(valid, h_sq, 0.0))
    ux, uz = dx / d_safe, dz / d_safe
    sgn = 1.0 if branch == "elbow-down" else -1.0
    pcx = ax + along * ux + sgn * h * uz
    pcz = az + along * uz - sgn * h * ux
    theta12 = np.arctan2(pcz - az, pcx - ax)
    theta22 = np.arctan2(pcz - bz, pcx - bx)
    pex = pcx + spec.ee_offset * np.cos(theta22)
    pez = pcz + spec.ee_offset * np.sin(theta22)
    return theta12, theta22, np.stack([pex, pez], axis=-1), valid


# ---------------------------------------------------------------------------
# loop-closure rates

def _rate_matrix(spec: MechanismSpec, state: JointState) -> np.ndarray:
    l12 = spec.links["12"].length
    l22 = spec.links["22"].length
    return np.column_stack([l12 * dunit(state.theta12), -l22 * dunit(state.theta22)])


def loop_closure_rates(spec: MechanismSpec, state: JointState,
                       d11: float, d21: float,
                       dd11: float | None = None,
                       dd21: float | None = None) -> RateState:
    """Passive rates (and accelerations) from the differentiated loop constraint.

    The velocity-level constraint is linear in (d12, d22); its time derivative
    gives the passive accelerations once actuated accelerations are supplied.
    Raises SingularConfiguration when links 12 and 22 are collinear.
    """
    l11 = spec.links["11"].length
    l21 = spec.links["21"].length
    l12 = spec.links["12"].length
    l22 = spec.links["22"].length
    a_mat = _rate_matrix(spec, state)
    det = a_mat[0, 0] * a_mat[1, 1] - a_mat[0, 1] * a_mat[1, 0]
    lref = max(spec.links[k].length for k in LINK_KEYS)
    if abs(det) <= 1e-12 * lref * lref:
        raise SingularConfiguration("links 12 and 22 are collinear")
    rhs = l21 * dunit(state.theta21) * d21 - l11 * dunit(state.theta11) * d11
    d12, d22 = np.linalg.solve(a_mat, rhs)
    if dd11 is None or dd21 is None:
        return RateState(d11, float(d12), d21, float(d22))
    rhs_acc = (
        -l21 * unit(state.theta21) * d21 * d21 + l21 * dunit(state.theta21) * dd21
        + l11 * unit(state.theta11) * d11 * d11 - l11 * dunit(state.theta11) * dd11
        + l12 * unit(state.theta12) * d12 * d12
        - l22 * unit(state.theta22) * d22 * d22
    )
    dd12, dd22 = np.linalg.solve(a_mat, rhs_acc)
    return RateState(d11, float(d12), d21, float(d22),
                     dd11, float(dd12), dd21, float(dd22))


def passive_rate_jacobian(spec: MechanismSpec, state: JointState) -> np.ndarray:
    """2x2 map from actuated rates (d11, d21) to passive rates (d12, d22)."""
    l11 = spec.links["11"].length
    l21 = spec.links["21"].length
    a_mat = _rate_matrix(spec, state)
    b_mat = np.column_stack([-l11 * dunit(state.theta11), l21 * dunit(state.theta21)])
    return np.linalg.solve(a_mat, b_mat)


# ---------------------------------------------------------------------------
# CoM kinematics

def com_kinematics(spec: MechanismSpec, state: JointState, rates: RateState,
                   include_payload: bool = True) -> dict[str, dict[str, np.ndarray]]:
    """Per-link aggregated CoM position, velocity and acceleration.

    Uses aggregated (profile + counter, payload lumped into link 22) inline
    first moments; massless links report their CoM on the proximal joint.
    """
    out: dict[str, dict[str, np.ndarray]] = {}
    ang = {"11": (state.theta11, rates.d11, rates.dd11),
           "12": (state.theta12, rates.d12, rates.dd12),
           "21": (state.theta21, rates.d21, rates.dd21),
           "22": (state.theta22, rates.d22, rates.dd22)}
    roots = {
        "11": (spec.joint11, None),
        "12": (spec.joint11, "11"),
        "21": (spec.joint21, None),
        "22": (spec.joint21, "21"),
    }
    for key in LINK_KEYS:
        m, s = spec.aggregate(key, include_payload)
        e = s / m if m > 0.0 else 0.0
        th, dth, ddth = ang[key]
        base, carrier = roots[key]
        pos = base + e * unit(th)
        vel = e * dunit(th) * dth
        acc = e * (-unit(th) * dth * dth + dunit(th) * ddth)
        if carrier is not None:
            lc = spec.links[carrier].length
            thc, dthc, ddthc = ang[carrier]
            pos = pos + lc * unit(thc)
            vel = vel + lc * dunit(thc) * dthc
            acc = acc + lc * (-unit(thc) * dthc * dthc + dunit(thc) * ddthc)
        out[key] = {"pos": pos, "vel": vel, "acc": acc, "mass": m}
    return out


# ---------------------------------------------------------------------------
# angle-convention conversion (IK loop convention <-> absolute angles)

def theta_from_q(q11: float, q12: float, q21: float, q22: float) -> tuple[float, float, float, float]:
    """Map loop-aligned IK angles to absolute link angles.

    Chain-2 joints run counterclockwise from +x while chain-1 joints (and the
    distal joint of chain 2) run clockwise, so the loop closes on itself: the
    passive joints measure the opening from the proximal link's direction.
    """
    theta11 = -q11
    theta12 = wrap_angle(q12 - q11)
    theta21 = q21
    theta22 = wrap_angle(q21 - q22)
    return theta11, theta12, theta21, theta22


def q_from_theta(theta11: float, theta12: float, theta21: float, theta22: float) -> tuple[float, float, float, float]:
    """Inverse of :func:`theta_from_q` (angles wrapped to (-pi, pi])."""
    q11 = -theta11
    q12 = wrap_angle(theta12 - theta11)
    q21 = theta21
    q22 = wrap_angle(theta21 - theta22)
    return q11, q12, q21, q22
