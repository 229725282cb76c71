import numpy as np
import pytest

from forbal.balance import apply_solution, solve_counter_masses
from forbal.config import load_config
from forbal.harness import run_experiment


@pytest.fixture(scope="session")
def spec2():
    return load_config("forbal2")


@pytest.fixture(scope="session")
def spec5():
    return load_config("forbal5")


@pytest.fixture(scope="session")
def balanced2(spec2):
    return apply_solution(spec2, solve_counter_masses(spec2))


@pytest.fixture(scope="session")
def balanced5(spec5):
    return apply_solution(spec5, solve_counter_masses(spec5))


@pytest.fixture
def rng():
    return np.random.default_rng(20240811)


ALL_TRAJECTORIES = ("F2-T1", "F2-T2", "F2-T3", "F2-T4", "F5-T1", "F5-T2", "F5-T3")


@pytest.fixture(scope="session")
def all_runs(spec2, spec5):
    """Balanced/unbalanced experiment pairs for every built-in trajectory."""
    runs = {}
    for tid in ALL_TRAJECTORIES:
        spec = spec2 if tid.startswith("F2") else spec5
        runs[tid] = run_experiment(spec, tid)
    return runs


def random_reachable_targets(spec, rng, n, margin=0.02):
    """Random planar targets strictly inside the reachable annulus."""
    l = spec.links["11"].length
    big = l + spec.ee_offset
    r = rng.uniform(abs(big - l) + margin, big + l - margin, n)
    phi = rng.uniform(-1.1, 1.4, n)
    pb = spec.base_point
    return np.stack([pb[0] + r * np.cos(phi), pb[1] + r * np.sin(phi)], axis=1)


def random_feasible_spec(rng):
    """Random equal-length mechanism with forward-heavy mass distributions."""
    from forbal.model import LinkSpec, MechanismSpec

    l = rng.uniform(0.15, 0.5)
    links = {}
    for key in ("11", "12", "21", "22"):
        links[key] = LinkSpec(
            length=l,
            profile_mass=rng.uniform(0.05, 0.6),
            profile_com=rng.uniform(-0.1 * l, 0.8 * l),
            counter_com=-rng.uniform(0.5 * l, 1.5 * l),
        )
    return MechanismSpec(links=links, base_height=rng.uniform(0.0, 0.3),
                         ee_offset=rng.uniform(0.0, 0.1 * l),
                         ee_payload_mass=rng.uniform(0.0, 0.2),
                         ee_payload_com=rng.uniform(0.0, 0.05))
