"""Force-balance conditions and the counter-mass design solver.

The mechanism's linear momentum reduces to three configuration-independent
coefficients once the loop constraint eliminates one passive rate.  Zeroing
all three makes the total center of mass stationary for every admissible
motion, which is the force-balance condition.  With the end-effector payload
lumped into link 22 they read (aggregated masses m, inline CoMs e, lengths l):

    c11:  m11*e11 + m12*l11 + m22*e22 * l11/l22          [kg m]
    c12:  m12*e12/l12 + m22*e22/l22                      [kg]
    c21:  m21*e21 + m22*l21 * (1 - e22/l22)              [kg m]

No counter mass is mounted on link 12 in either design, so c12 fixes link
22's counter mass, after which c11 and c21 are linear in the two remaining
counter masses.  The standard ("link12-short") design keeps link 12 short
and light; the alternative ("link12-extended") design gives link 12 the same
profile as link 22, trading workspace for smaller distal counter masses.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import InfeasibleMounting, MissingProfile
from .model import (
    LINK_KEYS,
    JointState,
    MechanismSpec,
    RateState,
    com_kinematics,
    dunit,
)

PROFILE_CHOICES = ("link12-short", "link12-extended")

#: steel ring denominations available for physical counter-mass stacks, kg
RING_MASSES = (13.2e-3, 11.4e-3)


@dataclass(frozen=True)
class BalanceResiduals:
    """Residuals of the three balance conditions; all near zero <=> balanced."""

    c11: float
    c12: float
    c21: float

    def max_abs(self) -> float:
        return max(abs(self.c11), abs(self.c12), abs(self.c21))

    def is_balanced(self, tol: float = 1e-9) -> bool:
        return self.max_abs() < tol


@dataclass(frozen=True)
class CounterMassSolution:
    m11c: float
    m21c: float
    m22c: float
    m12c: float | None  # populated by the link12-extended design
    profile: str
    mounting: dict[str, float]
    total_mass_with_cm: float

    def masses(self) -> dict[str, float]:
        out = {"11": self.m11c, "21": self.m21c, "22": self.m22c}
        if self.m12c is not None:
            out["12"] = self.m12c
        return out


def _aggregates(spec: MechanismSpec) -> dict[str, tuple[float, float]]:
    """Per-link (mass, first moment), payload folded into link 22."""
    return {k: spec.aggregate(k) for k in LINK_KEYS}


def balance_residuals(spec: MechanismSpec) -> BalanceResiduals:
    """Evaluate the three balance conditions for a spec as configured."""
    ag = _aggregates(spec)
    l11 = spec.links["11"].length
    l12 = spec.links["12"].length
    l21 = spec.links["21"].length
    l22 = spec.links["22"].length
    m11, s11 = ag["11"]
    m12, s12 = ag["12"]
    m21, s21 = ag["21"]
    m22, s22 = ag["22"]
    c11 = s11 + m12 * l11 + s22 * l11 / l22
    c12 = s12 / l12 + s22 / l22
    c21 = s21 + m22 * l21 - s22 * l21 / l22
    return BalanceResiduals(c11, c12, c21)


def linear_momentum(spec: MechanismSpec, state: JointState, rates: RateState) -> np.ndarray:
    """Total linear momentum (x, z) as the mass-weighted CoM velocity sum."""
    kin = com_kinematics(spec, state, rates)
    mom = np.zeros(2)
    for key in LINK_KEYS:
        mom += kin[key]["mass"] * kin[key]["vel"]
    return mom


def linear_momentum_reduced(spec: MechanismSpec, state: JointState, rates: RateState) -> np.ndarray:
    """Momentum in the reduced three-term form (loop constraint applied).

    Equals :func:`linear_momentum` for loop-consistent states; the passive
    rate of link 22 never appears.
    """
    ag = _aggregates(spec)
    l11 = spec.links["11"].length
    l12 = spec.links["12"].length
    l21 = spec.links["21"].length
    l22 = spec.links["22"].length
    m11, s11 = ag["11"]
    m12, s12 = ag["12"]
    m21, s21 = ag["21"]
    m22, s22 = ag["22"]
    k11 = s11 + m12 * l11 + s22 * l11 / l22
    k12 = s12 + s22 * l12 / l22
    k21 = s21 + m22 * l21 - s22 * l21 / l22
    return (k11 * dunit(state.theta11) * rates.d11
            + k12 * dunit(state.theta12) * rates.d12
            + k21 * dunit(state.theta21) * rates.d21)


def solve_counter_masses(spec: MechanismSpec,
                         profile: str = "link12-short",
                         mounting: dict[str, float] | None = None) -> CounterMassSolution:
    """Closed-form counter masses that zero all three balance residuals.

    ``mounting`` optionally overrides the counter-mass inline offsets per link
    (defaults to each link's configured offset, i.e. one length behind the
    joint).  Counter masses already present on the spec are ignored: the solve
    starts from the bare profiles.

    Raises InfeasibleMounting when a required counter mass comes out negative
    and MissingProfile when the extended design has no donor profile.
    """
    if profile not in PROFILE_CHOICES:
        raise ValueError(f"profile must be one of {PROFILE_CHOICES}")
    bare = spec.zeroed_counter_masses()
    if bare.moving_mass() <= 0.0:
        raise MissingProfile("no link profile data: nothing to balance")
    mounts = {k: bare.links[k].counter_offset for k in LINK_KEYS}
    if mounting:
        mounts.update(mounting)
    receiving = ("11", "21", "22") if profile == "link12-short" else LINK_KEYS
    for k in receiving:
        if abs(mounts[k]) < 1e-12:
            raise InfeasibleMounting(f"link {k} counter-mass offset is zero")

    l11 = bare.links["11"].length
    l12 = bare.links["12"].length
    l21 = bare.links["21"].length
    l22 = bare.links["22"].length
    # payload folded into link 22's bare moment
    m22p, s22p = bare.aggregate("22")
    m11p, s11p = bare.aggregate("11")
    m21p, s21p = bare.aggregate("21")

    m12c: float | None = None
    if profile == "link12-short":
        m12_final, s12 = bare.aggregate("12")
    else:
        # extended design: link 12 gets the same profile as link 22 and needs
        # no counter mass of its own; for equal lengths the link-22 counter
        # balances link 12's first moment across the loop
        donor = bare.links["22"]
        m12c = 0.0
        m12_final = donor.profile_mass
        s12 = donor.profile_mass * donor.profile_com
    s22 = -(l22 / l12) * s12                     # zeroes c12
    m22c = (s22 - s22p) / mounts["22"]
    m22 = m22p + m22c

    # c11 and c21 are linear in the remaining counter masses
    s11_target = -m12_final * l11 - s22 * l11 / l22
    m11c = (s11_target - s11p) / mounts["11"]
    s21_target = -m22 * l21 + s22 * l21 / l22
    m21c = (s21_target - s21p) / mounts["21"]

    solved = {"11": m11c, "21": m21c, "22": m22c}
    if m12c is not None:
        solved["12"] = m12c
    # a solution may sit exactly on zero; tolerate float dust below it
    for key, val in solved.items():
        if val < -1e-12:
            raise InfeasibleMounting(
                f"required counter mass on link {key} is negative ({val:.6g} kg)")
        solved[key] = max(val, 0.0)

    sol = CounterMassSolution(
        m11c=solved["11"], m21c=solved["21"], m22c=solved["22"],
        m12c=solved.get("12"), profile=profile, mounting=mounts,
        total_mass_with_cm=float("nan"),
    )
    balanced = apply_solution(spec, sol)
    total = total_mass_report(balanced)
    return replace(sol, total_mass_with_cm=total.total_with_cm)


def apply_solution(spec: MechanismSpec, sol: CounterMassSolution) -> MechanismSpec:
    """Install a counter-mass solution, returning the balanced spec."""
    links = {k: replace(v, counter_mass=0.0) for k, v in spec.links.items()}
    if sol.profile == "link12-extended":
        donor = links["22"]
        links["12"] = replace(links["12"], profile_mass=donor.profile_mass,
                              profile_com=donor.profile_com)
    for key, m in sol.masses().items():
        links[key] = replace(links[key], counter_mass=m, counter_com=sol.mounting[key])
    return replace(spec, links=links)


@dataclass(frozen=True)
class TotalMassReport:
    total_without_cm: float
    total_with_cm: float
    counter_mass_total: float
    per_link_counter: dict[str, float]


def total_mass_report(spec: MechanismSpec) -> TotalMassReport:
    """Mass bookkeeping: base + link profiles + payload, with/without counters."""
    profiles = sum(spec.links[k].profile_mass for k in LINK_KEYS)
    payload = sum(p.mass for p in spec.payload_points())
    counters = {k: spec.links[k].counter_mass for k in LINK_KEYS}
    without = spec.base_mass + profiles + payload
    total_counter = sum(counters.values())
    return TotalMassReport(
        total_without_cm=without,
        total_with_cm=without + total_counter,
        counter_mass_total=total_counter,
        per_link_counter=counters,
    )


@dataclass(frozen=True)
class RingStack:
    """Nearest realizable stack of physical counter-mass rings."""

    count_large: int
    count_small: int
    achieved_mass: float
    residual_mass: float


def ring_quantize(target: float, denominations: tuple[float, ...] = RING_MASSES) -> RingStack:
    """Closest two-denomination ring stack to a target mass (exhaustive)."""
    large, small = denominations
    best = RingStack(0, 0, 0.0, -target)
    best_err = abs(target)
    n_large_max = int(math.ceil(target / large)) + 1
    for a in range(n_large_max + 1):
        rem = target - a * large
        for b in (max(0, int(math.floor(rem / small))), max(0, int(math.ceil(rem / small)))):
            mass = a * large + b * small
            err = abs(mass - target)
            if err < best_err - 1e-15:
                best_err = err
                best = RingStack(a, b, mass, mass - target)
    return best
