import math

import numpy as np
import pytest

from forbal.errors import ConfigError, Singular, SingularConfiguration, Unreachable
from forbal.ik import ik_forbal2
from forbal.model import (
    JointState,
    LinkSpec,
    MechanismSpec,
    RateState,
    chain_points,
    com_kinematics,
    forward_kinematics,
    loop_closure_gap,
    loop_closure_rates,
    q_from_theta,
    theta_from_q,
    wrap_angle,
)


def make_uniform(l=1.0, **kw) -> MechanismSpec:
    link = LinkSpec(length=l, profile_mass=0.2, profile_com=0.4 * l)
    return MechanismSpec(links={k: link for k in ("11", "12", "21", "22")}, **kw)


# ---------------------------------------------------------------------------
# forward kinematics

def test_fk_mirror_symmetric_pose_lands_on_bisector():
    spec = make_uniform()
    state, pc, pe = forward_kinematics(spec, -0.7, 0.7)
    assert pc[1] == pytest.approx(spec.base_height, abs=1e-12)
    assert state.theta12 == pytest.approx(-state.theta22, abs=1e-12)
    assert pc[0] > 0.0


def test_fk_flattened_loop_is_singular():
    spec = make_uniform()
    with pytest.raises(Singular):
        forward_kinematics(spec, 0.0, 0.0)


def test_fk_unreachable_when_circles_separate():
    link = LinkSpec(length=1.0, profile_mass=0.1, profile_com=0.5)
    short = LinkSpec(length=0.2, profile_mass=0.1, profile_com=0.1)
    spec = MechanismSpec(links={"11": link, "12": short, "21": link, "22": short},
                         base_separation=0.0)
    with pytest.raises(Unreachable):
        forward_kinematics(spec, 2.0, -2.0)


def test_fk_ik_roundtrip_recovers_actuated_angles(spec2, rng):
    # random reachable poses: theta -> p_e -> ik recovers same actuated angles
    n_done = 0
    for _ in range(300):
        theta11 = rng.uniform(-1.45, 1.25)
        theta21 = rng.uniform(-1.5, 1.28)
        try:
            state, pc, pe = forward_kinematics(spec2, theta11, theta21)
        except (Singular, Unreachable):
            continue
        q11, q12, q21, q22 = q_from_theta(state.theta11, state.theta12,
                                          state.theta21, state.theta22)
        if q11 + q21 <= 1e-3:  # other branch of the loop, not the ik branch
            continue
        sol = ik_forbal2(spec2, pe)
        assert sol.q11 == pytest.approx(q11, abs=1e-9)
        assert sol.q21 == pytest.approx(q21, abs=1e-9)
        n_done += 1
    assert n_done > 100


def test_fk_branches_are_distinct_and_consistent():
    spec = make_uniform()
    s_down, pc_down, _ = forward_kinematics(spec, -0.9, 0.5, branch="elbow-down")
    s_up, pc_up, _ = forward_kinematics(spec, -0.9, 0.5, branch="elbow-up")
    assert np.linalg.norm(pc_down - pc_up) > 1e-3
    assert loop_closure_gap(spec, s_down) < 1e-10
    assert loop_closure_gap(spec, s_up) < 1e-10


def test_fk_supports_separated_base_joints():
    link = LinkSpec(length=1.0, profile_mass=0.2, profile_com=0.5)
    spec = MechanismSpec(links={k: link for k in ("11", "12", "21", "22")},
                         base_separation=0.3)
    state, pc, pe = forward_kinematics(spec, 1.2, 1.8)
    assert loop_closure_gap(spec, state) < 1e-10
    pts = chain_points(spec, state)
    assert np.allclose(pts["pc1"], pts["pc2"], atol=1e-10)


# ---------------------------------------------------------------------------
# loop-closure rates

def test_rates_zero_in_zero_out(spec2):
    state, _, _ = forward_kinematics(spec2, -0.5, 0.8)
    rates = loop_closure_rates(spec2, state, 0.0, 0.0)
    assert rates.d12 == 0.0 and rates.d22 == 0.0


def test_rates_mirror_symmetry(spec2):
    state, _, _ = forward_kinematics(spec2, -0.6, 0.6)
    rates = loop_closure_rates(spec2, state, -0.4, 0.4)
    assert rates.d12 == pytest.approx(-rates.d22, abs=1e-12)


def test_rates_match_finite_difference_of_fk(spec2, rng):
    dt = 1e-6
    for _ in range(40):
        theta11 = rng.uniform(-1.2, 0.6)
        theta21 = rng.uniform(-0.6, 1.2)
        d11 = rng.uniform(-2, 2)
        d21 = rng.uniform(-2, 2)
        try:
            state, _, _ = forward_kinematics(spec2, theta11, theta21)
            s_plus, _, _ = forward_kinematics(spec2, theta11 + d11 * dt, theta21 + d21 * dt)
            s_minus, _, _ = forward_kinematics(spec2, theta11 - d11 * dt, theta21 - d21 * dt)
        except (Singular, Unreachable):
            continue
        rates = loop_closure_rates(spec2, state, d11, d21)
        fd12 = wrap_angle(s_plus.theta12 - s_minus.theta12) / (2 * dt)
        fd22 = wrap_angle(s_plus.theta22 - s_minus.theta22) / (2 * dt)
        assert rates.d12 == pytest.approx(fd12, abs=1e-5)
        assert rates.d22 == pytest.approx(fd22, abs=1e-5)


def test_accelerations_match_finite_difference_of_rates(spec2, rng):
    dt = 1e-6
    for _ in range(25):
        theta11 = rng.uniform(-1.2, 0.4)
        theta21 = rng.uniform(-0.4, 1.2)
        d11, d21 = rng.uniform(-2, 2, 2)
        dd11, dd21 = rng.uniform(-5, 5, 2)
        try:
            state, _, _ = forward_kinematics(spec2, theta11, theta21)
        except (Singular, Unreachable):
            continue
        rates = loop_closure_rates(spec2, state, d11, d21, dd11, dd21)
        sp, _, _ = forward_kinematics(spec2, theta11 + d11 * dt + 0.5 * dd11 * dt * dt,
                                      theta21 + d21 * dt + 0.5 * dd21 * dt * dt)
        sm, _, _ = forward_kinematics(spec2, theta11 - d11 * dt + 0.5 * dd11 * dt * dt,
                                      theta21 - d21 * dt + 0.5 * dd21 * dt * dt)
        rp = loop_closure_rates(spec2, sp, d11 + dd11 * dt, d21 + dd21 * dt)
        rm = loop_closure_rates(spec2, sm, d11 - dd11 * dt, d21 - dd21 * dt)
        assert rates.dd12 == pytest.approx((rp.d12 - rm.d12) / (2 * dt), rel=1e-4, abs=1e-4)
        assert rates.dd22 == pytest.approx((rp.d22 - rm.d22) / (2 * dt), rel=1e-4, abs=1e-4)


def test_rates_singular_when_distal_links_collinear():
    spec = make_uniform()
    # fold the loop so links 12 and 22 lie on one line through the elbows
    state = JointState(0.5, -0.5, -0.5, wrap_angle(math.pi - 0.5))
    with pytest.raises(SingularConfiguration):
        loop_closure_rates(spec, state, 1.0, 0.0)


# ---------------------------------------------------------------------------
# CoM kinematics

def test_com_at_joint_for_zero_offsets():
    link = LinkSpec(length=1.0, profile_mass=0.3, profile_com=0.0)
    spec = MechanismSpec(links={k: link for k in ("11", "12", "21", "22")})
    state, _, _ = forward_kinematics(spec, -0.7, 0.9)
    rates = loop_closure_rates(spec, state, 0.3, -0.2)
    kin = com_kinematics(spec, state, rates)
    assert np.allclose(kin["11"]["pos"], spec.joint11, atol=1e-12)
    assert np.allclose(kin["11"]["vel"], 0.0, atol=1e-12)


def test_com_velocities_zero_when_still(spec2):
    state, _, _ = forward_kinematics(spec2, -0.5, 0.5)
    kin = com_kinematics(spec2, state, RateState(0, 0, 0, 0))
    for key in ("11", "12", "21", "22"):
        assert np.allclose(kin[key]["vel"], 0.0)


def test_com_velocities_match_finite_difference(spec2, rng):
    dt = 1e-6
    for _ in range(25):
        theta11 = rng.uniform(-1.2, 0.4)
        theta21 = rng.uniform(-0.4, 1.2)
        d11, d21 = rng.uniform(-2, 2, 2)
        try:
            state, _, _ = forward_kinematics(spec2, theta11, theta21)
        except (Singular, Unreachable):
            continue
        rates = loop_closure_rates(spec2, state, d11, d21, 0.0, 0.0)
        sp, _, _ = forward_kinematics(spec2, theta11 + d11 * dt, theta21 + d21 * dt)
        sm, _, _ = forward_kinematics(spec2, theta11 - d11 * dt, theta21 - d21 * dt)
        kp = com_kinematics(spec2, sp, rates)
        km = com_kinematics(spec2, sm, rates)
        kin = com_kinematics(spec2, state, rates)
        for key in ("11", "12", "21", "22"):
            fd = (kp[key]["pos"] - km[key]["pos"]) / (2 * dt)
            assert np.allclose(kin[key]["vel"], fd, atol=1e-5)


# ---------------------------------------------------------------------------
# convention conversion

def test_convention_roundtrip_identity(rng):
    for _ in range(200):
        q = rng.uniform(-math.pi + 0.01, math.pi - 0.01, 4)
        theta = theta_from_q(*q)
        back = q_from_theta(*theta)
        assert np.allclose(back, q, atol=1e-12)


def test_convention_symmetric_pose_maps_to_mirror():
    theta = theta_from_q(math.pi / 4, math.pi / 2, math.pi / 4, math.pi / 2)
    assert theta[0] == pytest.approx(-math.pi / 4)
    assert theta[2] == pytest.approx(math.pi / 4)
    assert theta[1] == pytest.approx(-theta[3])


def test_convention_cross_fk_agrees(spec2, rng):
    # FK evaluated from theta equals the triangle construction from q
    from forbal.ik import fk_forbal2

    for _ in range(50):
        x = rng.uniform(0.15, 0.4)
        z = rng.uniform(0.1, 0.4)
        try:
            sol = ik_forbal2(spec2, (x, z))
        except Unreachable:
            continue
        state = sol.joint_state()
        pts = chain_points(spec2, state)
        pe_theta = pts["pe"]
        pe_q = fk_forbal2(spec2, sol.q11, sol.q21)
        assert np.allclose(pe_theta, pe_q, atol=1e-12)


# ---------------------------------------------------------------------------
# invariants and validation

def test_loop_closure_invariant_for_ik_states(spec2, rng):
    from tests.conftest import random_reachable_targets

    targets = random_reachable_targets(spec2, rng, 200)
    checked = 0
    for t in targets:
        try:
            sol = ik_forbal2(spec2, t)
        except Unreachable:
            continue
        assert loop_closure_gap(spec2, sol.joint_state()) < 1e-10
        checked += 1
    assert checked > 50


def test_linkspec_validation():
    with pytest.raises(ConfigError):
        LinkSpec(length=-1.0, profile_mass=0.1, profile_com=0.0)
    with pytest.raises(ConfigError):
        LinkSpec(length=1.0, profile_mass=-0.1, profile_com=0.0)


def test_uniform_flag_checks_lengths():
    link = LinkSpec(length=1.0, profile_mass=0.1, profile_com=0.5)
    odd = LinkSpec(length=1.1, profile_mass=0.1, profile_com=0.5)
    with pytest.raises(ConfigError):
        MechanismSpec(links={"11": link, "12": odd, "21": link, "22": link},
                      uniform=True)


def test_aggregated_mass_and_moment():
    link = LinkSpec(length=1.0, profile_mass=0.4, profile_com=0.5,
                    counter_mass=0.2, counter_com=-1.0)
    assert link.mass == pytest.approx(0.6)
    assert link.first_moment == pytest.approx(0.4 * 0.5 - 0.2 * 1.0)
    assert link.com == pytest.approx(link.first_moment / 0.6)
