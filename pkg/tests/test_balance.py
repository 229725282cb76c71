from dataclasses import replace

import numpy as np
import pytest

from forbal.balance import (
    apply_solution,
    balance_residuals,
    linear_momentum,
    linear_momentum_reduced,
    ring_quantize,
    solve_counter_masses,
    total_mass_report,
)
from forbal.errors import InfeasibleMounting
from forbal.model import (
    LinkSpec,
    MechanismSpec,
    RateState,
    forward_kinematics,
    loop_closure_rates,
)
from forbal.config import builtin_config_doc


from tests.conftest import random_feasible_spec


def random_motion(spec, rng):
    while True:
        try:
            state, _, _ = forward_kinematics(spec, rng.uniform(-1.2, 0.4),
                                             rng.uniform(-0.4, 1.2))
        except Exception:
            continue
        d11, d21 = rng.uniform(-3, 3, 2)
        dd11, dd21 = rng.uniform(-8, 8, 2)
        return state, loop_closure_rates(spec, state, d11, d21, dd11, dd21)


# ---------------------------------------------------------------------------
# linear momentum

def test_momentum_zero_when_still(spec2):
    state, _, _ = forward_kinematics(spec2, -0.5, 0.7)
    mom = linear_momentum(spec2, state, RateState(0, 0, 0, 0))
    assert np.allclose(mom, 0.0)


def test_momentum_vanishes_on_balanced_spec(balanced2, rng):
    scale = balanced2.moving_mass() * 0.23
    for _ in range(50):
        state, rates = random_motion(balanced2, rng)
        speed = max(abs(rates.d11), abs(rates.d12), abs(rates.d21), abs(rates.d22))
        mom = linear_momentum(balanced2, state, rates)
        assert np.linalg.norm(mom) < 1e-12 * max(scale * speed, 1.0)


def test_momentum_matches_finite_difference_of_weighted_com(spec2, rng):
    # d/dt of the total first moment equals the momentum
    from forbal.model import com_kinematics

    dt = 1e-6
    for _ in range(20):
        state, rates = random_motion(spec2, rng)
        sp, _, _ = forward_kinematics(spec2, state.theta11 + rates.d11 * dt,
                                      state.theta21 + rates.d21 * dt)
        sm, _, _ = forward_kinematics(spec2, state.theta11 - rates.d11 * dt,
                                      state.theta21 - rates.d21 * dt)
        def first_moment(st):
            kin = com_kinematics(spec2, st, RateState(0, 0, 0, 0))
            return sum(kin[k]["mass"] * kin[k]["pos"] for k in ("11", "12", "21", "22"))
        fd = (first_moment(sp) - first_moment(sm)) / (2 * dt)
        mom = linear_momentum(spec2, state, rates)
        assert np.allclose(mom, fd, atol=1e-5)


def test_reduced_momentum_equals_full_form(spec2, balanced2, rng):
    for spec in (spec2, balanced2):
        for _ in range(30):
            state, rates = random_motion(spec, rng)
            full = linear_momentum(spec, state, rates)
            reduced = linear_momentum_reduced(spec, state, rates)
            scale = max(np.linalg.norm(full), 1e-6)
            assert np.linalg.norm(full - reduced) < 1e-12 * max(scale, 1.0)


# ---------------------------------------------------------------------------
# residuals

def test_residuals_zero_for_massless_distal_links():
    prox = LinkSpec(length=1.0, profile_mass=0.5, profile_com=0.0)
    dist = LinkSpec(length=1.0, profile_mass=0.0, profile_com=0.0)
    spec = MechanismSpec(links={"11": prox, "12": dist, "21": prox, "22": dist})
    res = balance_residuals(spec)
    assert res.max_abs() == 0.0
    assert res.is_balanced()


def test_shipped_config_is_unbalanced_with_positive_residuals(spec2):
    res = balance_residuals(spec2)
    # chain-1 and chain-2 coefficients pull forward (masses ahead of joints)
    assert res.c11 > 0.0
    assert res.c21 > 0.0
    assert not res.is_balanced()


def test_solver_output_zeroes_residuals(spec2):
    sol = solve_counter_masses(spec2)
    res = balance_residuals(apply_solution(spec2, sol))
    assert res.max_abs() < 1e-12


# ---------------------------------------------------------------------------
# counter-mass solver

def test_solver_zero_masses_for_massless_loop():
    prox = LinkSpec(length=1.0, profile_mass=0.3, profile_com=0.0)
    dist = LinkSpec(length=1.0, profile_mass=0.0, profile_com=0.0)
    spec = MechanismSpec(links={"11": prox, "12": dist, "21": prox, "22": dist})
    sol = solve_counter_masses(spec, profile="link12-extended")
    assert sol.m11c == sol.m21c == sol.m22c == 0.0
    assert sol.m12c == 0.0


def test_solver_short_profile_near_documented_values(spec2):
    # documented check: same mass data, inferred geometry; the documented
    # design values were 29.8 / 325.6 / 87.1 g
    sol = solve_counter_masses(spec2)
    assert sol.m11c * 1e3 == pytest.approx(29.8, abs=15.0)
    assert sol.m21c * 1e3 == pytest.approx(325.6, abs=20.0)
    assert sol.m22c * 1e3 == pytest.approx(87.1, abs=15.0)
    assert sol.total_mass_with_cm * 1e3 == pytest.approx(1847.6, abs=20.0)


def test_solver_extended_profile_near_documented_values(spec2):
    # documented extended-profile values: 164.0 / 0.0 / 173.5 / 11.1 g
    sol = solve_counter_masses(spec2, profile="link12-extended")
    assert sol.m12c == 0.0
    assert sol.m11c * 1e3 == pytest.approx(164.0, abs=15.0)
    assert sol.m21c * 1e3 == pytest.approx(173.5, abs=15.0)
    assert sol.m22c * 1e3 == pytest.approx(11.1, abs=10.0)


def test_solver_spatial_near_documented_values(spec5):
    # documented theoretical values for the spatial variant: 29.8 / 515.5 / 190.1
    sol = solve_counter_masses(spec5)
    assert sol.m11c * 1e3 == pytest.approx(29.8, abs=15.0)
    assert sol.m21c * 1e3 == pytest.approx(515.5, abs=25.0)
    assert sol.m22c * 1e3 == pytest.approx(190.1, abs=15.0)


def test_solver_random_specs_drive_momentum_to_zero(rng):
    for _ in range(20):
        spec = random_feasible_spec(rng)
        try:
            sol = solve_counter_masses(spec)
        except InfeasibleMounting:
            continue
        balanced = apply_solution(spec, sol)
        assert balance_residuals(balanced).max_abs() < 1e-12
        for _ in range(10):
            state, rates = random_motion(balanced, rng)
            assert np.linalg.norm(linear_momentum(balanced, state, rates)) < 1e-10


def test_solver_infeasible_mounting_raises():
    # counter mass ahead of the joint cannot balance a forward CoM
    link = LinkSpec(length=1.0, profile_mass=0.3, profile_com=0.5, counter_com=0.5)
    spec = MechanismSpec(links={k: link for k in ("11", "12", "21", "22")})
    with pytest.raises(InfeasibleMounting):
        solve_counter_masses(spec)


def test_solver_mounting_override(spec2):
    sol_near = solve_counter_masses(spec2, mounting={"22": -0.115})
    sol_far = solve_counter_masses(spec2)
    # halving the lever doubles the required mass, to first order
    assert sol_near.m22c > 1.8 * sol_far.m22c
    res = balance_residuals(apply_solution(spec2, sol_near))
    assert res.max_abs() < 1e-12


def test_payload_linearity_slope(spec2):
    # d m22c / d payload = -(l22 + payload offset) / (l22 * e22c) * l22 ...
    # verified against the closed-form two-point slope
    m0 = solve_counter_masses(spec2).m22c
    delta = 0.05
    bumped = replace(spec2, ee_payload_mass=spec2.ee_payload_mass + delta)
    m1 = solve_counter_masses(bumped).m22c
    l22 = spec2.links["22"].length
    e_pay = l22 + spec2.ee_payload_com
    e22c = spec2.links["22"].counter_offset
    expected_slope = -e_pay / e22c
    assert (m1 - m0) / delta == pytest.approx(expected_slope, rel=1e-9)


# ---------------------------------------------------------------------------
# totals and rings

def test_total_without_cm_matches_mass_table(spec2):
    rep = total_mass_report(spec2)
    assert rep.total_without_cm * 1e3 == pytest.approx(1405.1, abs=0.05)
    assert rep.total_with_cm == pytest.approx(rep.total_without_cm)  # no CMs yet


def test_total_with_reference_masses_matches_documented_total(spec5):
    doc = builtin_config_doc("forbal5")
    ref = doc["reference_counter_masses_g"]["theoretical"]
    spec = spec5.with_counter_masses({k: v * 1e-3 for k, v in ref.items()})
    rep = total_mass_report(spec)
    assert rep.total_with_cm * 1e3 == pytest.approx(2421.5, abs=0.05)


def test_ring_quantization():
    stack = ring_quantize(0.0264)  # exactly two large rings
    assert (stack.count_large, stack.count_small) == (2, 0)
    assert stack.residual_mass == pytest.approx(0.0, abs=1e-12)
    stack = ring_quantize(0.3256)
    assert abs(stack.residual_mass) < 0.0057  # within half a small ring
    assert stack.achieved_mass == pytest.approx(
        stack.count_large * 13.2e-3 + stack.count_small * 11.4e-3)
