"""Workspace tracing, area/reach figures and the revolved-volume estimate.

The planar workspace is traced the way the physical analysis ran: rays fan
out from the end-effector position of a default pose, and each ray marches
outward until the inverse kinematics rejects the point (reachability, joint
limits, or floor clearance), with bisection refinement at the boundary.  The
spatial variant's workspace is the planar cross-section (shifted by the
wrist-to-implement offset) revolved about the base yaw axis; its volume
follows from the centroid rule.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass

import numpy as np

from .errors import AxisIntersects, DefaultPoseInvalid, ForbalError
from .ik import ik_forbal2, _mount_offset_inplane
from .model import MechanismSpec, fk_grid, forward_kinematics

MARCH_STEP = 1e-3          # coarse ray march, m
REFINE_STEP = 1e-5         # bisection target, m
DEFAULT_SPACING_DEG = 10.0
DEFAULT_POSE = (math.pi / 4.0, math.pi / 4.0)  # q11, q21


@dataclass(frozen=True)
class WorkspaceTrace:
    boundary: np.ndarray     # (n, 2) ordered boundary vertices
    area: float
    max_reach: float         # from the base origin
    max_reach_shoulder: float  # from the base joint axis
    center: np.ndarray       # ray origin (default-pose end effector)
    spacing_deg: float

    @property
    def degenerate(self) -> bool:
        return self.area < 1e-9


def _admissible(spec: MechanismSpec, limits, floor_z, point) -> bool:
    if floor_z is not None and point[1] < floor_z:
        return False
    try:
        sol = ik_forbal2(spec, point)
    except ForbalError:
        return False
    if limits:
        for key, val in (("q11", sol.q11), ("q12", sol.q12),
                         ("q21", sol.q21), ("q22", sol.q22)):
            lim = limits.get(key)
            if lim and not (lim[0] <= val <= lim[1]):
                return False
    return True


def shoelace_area(poly: np.ndarray) -> float:
    x, z = poly[:, 0], poly[:, 1]
    return 0.5 * abs(float(np.dot(x, np.roll(z, -1)) - np.dot(np.roll(x, -1), z)))


def polygon_centroid_x(poly: np.ndarray) -> float:
    """Signed-area-weighted centroid x of a simple polygon."""
    x, z = poly[:, 0], poly[:, 1]
    xn, zn = np.roll(x, -1), np.roll(z, -1)
    cross = x * zn - xn * z
    a = 0.5 * float(np.sum(cross))
    if abs(a) < 1e-15:
        raise ValueError("polygon area is zero")
    return float(np.sum((x + xn) * cross) / (6.0 * a))


def trace_workspace(spec: MechanismSpec,
                    limits: dict | None = None,
                    ray_spacing_deg: float = DEFAULT_SPACING_DEG,
                    default_pose: tuple[float, float] = DEFAULT_POSE,
                    floor_z: float | None = None) -> WorkspaceTrace:
    """Ray-traced reachable region around the default pose.

    ``limits`` defaults to the spec's configured joint limits and ``floor_z``
    to the spec's floor clearance.  Area is the shoelace area of the ray-end
    polygon; reach figures are the largest boundary distances from the base
    origin and from the base joint axis.
    """
    if limits is None:
        limits = spec.joint_limits
    if floor_z is None:
        floor_z = spec.floor_z
    q11, q21 = default_pose
    _, _, center = forward_kinematics(spec, -q11, q21)
    if not _admissible(spec, limits, floor_z, center):
        raise DefaultPoseInvalid(
            f"default pose end effector {center} fails reachability/limits")
    reach_cap = 2.0 * max(spec.links[k].length for k in ("11", "21")) \
        + spec.ee_offset + abs(spec.base_height) + 0.1
    n_rays = max(3, int(round(360.0 / ray_spacing_deg)))
    verts = []
    for i in range(n_rays):
        phi = 2.0 * math.pi * i / n_rays
        direction = np.array([math.cos(phi), math.sin(phi)])
        good = 0.0
        t = MARCH_STEP
        while t <= reach_cap and _admissible(spec, limits, floor_z, center + t * direction):
            good = t
            t += MARCH_STEP
        bad = good + MARCH_STEP
        while bad - good > REFINE_STEP:
            mid = 0.5 * (good + bad)
            if _admissible(spec, limits, floor_z, center + mid * direction):
                good = mid
            else:
                bad = mid
        verts.append(center + good * direction)
    boundary = np.array(verts)
    area = shoelace_area(boundary)
    reach_origin = float(np.max(np.hypot(boundary[:, 0], boundary[:, 1])))
    shoulder = spec.base_point
    reach_shoulder = float(np.max(np.hypot(boundary[:, 0] - shoulder[0],
                                           boundary[:, 1] - shoulder[1])))
    return WorkspaceTrace(boundary=boundary, area=area, max_reach=reach_origin,
                          max_reach_shoulder=reach_shoulder, center=center,
                          spacing_deg=ray_spacing_deg)


def grid_occupancy_area(spec: MechanismSpec,
                        limits: dict | None = None,
                        floor_z: float | None = None,
                        n_samples: int = 1_000_000,
                        cell: float = 1e-3,
                        seed: int = 0) -> float:
    """Occupancy-grid area of the reachable set, by joint-space sampling.

    Independent of the ray trace: draws actuated angles uniformly inside
    their limits, runs forward kinematics, masks passive-limit and floor
    violations and counts occupied cells.
    """
    if limits is None:
        limits = spec.joint_limits
    if floor_z is None:
        floor_z = spec.floor_z
    rng = np.random.default_rng(seed)
    lo11, hi11 = limits.get("q11", (-math.pi, math.pi))
    lo21, hi21 = limits.get("q21", (-math.pi, math.pi))
    q11 = rng.uniform(lo11, hi11, n_samples)
    q21 = rng.uniform(lo21, hi21, n_samples)
    theta12, theta22, pe, valid = fk_grid(spec, -q11, q21)
    q12 = theta12 + q11          # q12 = theta12 - theta11, theta11 = -q11
    q22 = q21 - theta22
    for key, arr in (("q12", q12), ("q22", q22)):
        lim = limits.get(key)
        if lim:
            valid &= (arr >= lim[0]) & (arr <= lim[1])
    if floor_z is not None:
        valid &= pe[:, 1] >= floor_z
    pts = pe[valid]
    if len(pts) == 0:
        return 0.0
    ij = np.floor(pts / cell).astype(np.int64)
    codes = ij[:, 0] * 2_000_003 + ij[:, 1]
    return float(len(np.unique(codes))) * cell * cell


def _cross_section(trace: WorkspaceTrace, spec: MechanismSpec) -> np.ndarray:
    poly = trace.boundary.copy()
    if spec.spatial is not None:
        poly = poly + _mount_offset_inplane(spec, 0.0)
    return poly


def toroid_volume(trace: WorkspaceTrace, spec: MechanismSpec) -> float:
    """Volume of the cross-section revolved about the base yaw axis.

    Uses the centroid rule V = 2 pi x_c A; the section must stay strictly on
    one side of the axis.
    """
    poly = _cross_section(trace, spec)
    if np.min(poly[:, 0]) <= 0.0:
        raise AxisIntersects("cross-section touches the revolution axis")
    area = shoelace_area(poly)
    return 2.0 * math.pi * polygon_centroid_x(poly) * area


def toroid_volume_slices(trace: WorkspaceTrace, spec: MechanismSpec,
                         dz: float = 1e-3) -> float:
    """Washer-integration check of :func:`toroid_volume` (z slices)."""
    poly = _cross_section(trace, spec)
    if np.min(poly[:, 0]) <= 0.0:
        raise AxisIntersects("cross-section touches the revolution axis")
    z_lo, z_hi = float(np.min(poly[:, 1])), float(np.max(poly[:, 1]))
    n = len(poly)
    volume = 0.0
    z = z_lo + 0.5 * dz
    while z < z_hi:
        xs = []
        for i in range(n):
            x0, z0 = poly[i]
            x1, z1 = poly[(i + 1) % n]
            if (z0 <= z < z1) or (z1 <= z < z0):
                frac = (z - z0) / (z1 - z0)
                xs.append(x0 + frac * (x1 - x0))
        xs.sort()
        for a, b in zip(xs[::2], xs[1::2]):
            volume += math.pi * (b * b - a * a) * dz
        z += dz
    return volume


def boundary_csv(trace: WorkspaceTrace) -> str:
    buf = io.StringIO()
    buf.write("x,z\n")
    for x, z in trace.boundary:
        buf.write(f"{x:.9g},{z:.9g}\n")
    return buf.getvalue()


def boundary_svg(trace: WorkspaceTrace, marker: tuple[float, float] = (0.3, 0.18)) -> str:
    """Boundary polygon plus the nominal workspace-center marker."""
    pts = trace.boundary
    scale = 800.0
    xs = pts[:, 0] * scale
    zs = -pts[:, 1] * scale
    pad = 20.0
    x0, x1 = float(np.min(xs)) - pad, float(np.max(xs)) + pad
    z0, z1 = float(np.min(zs)) - pad, float(np.max(zs)) + pad
    path = " ".join(f"{'M' if i == 0 else 'L'} {x:.2f} {z:.2f}"
                    for i, (x, z) in enumerate(zip(xs, zs))) + " Z"
    mx, mz = marker[0] * scale, -marker[1] * scale
    cx, cz = trace.center[0] * scale, -trace.center[1] * scale
    return (
        f'<svg xmlns="http://www.w3.org/2000/svg" '
        f'viewBox="{x0:.2f} {z0:.2f} {x1 - x0:.2f} {z1 - z0:.2f}">\n'
        f'  <path d="{path}" fill="#cfe2f3" stroke="#1f4e79" stroke-width="1.5"/>\n'
        f'  <circle cx="{mx:.2f}" cy="{mz:.2f}" r="4" fill="#c00"/>\n'
        f'  <circle cx="{cx:.2f}" cy="{cz:.2f}" r="3" fill="#060"/>\n'
        f"</svg>\n"
    )
