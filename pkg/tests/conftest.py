import random

import pytest

from salesmix.model import benchmark_config
from salesmix.scenario import Scenario, mean_value_scenario

ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def bench():
    return benchmark_config()


@pytest.fixture(scope="session")
def mean_scn(bench):
    return mean_value_scenario(bench)


@pytest.fixture
def toy():
    """u1 (c=0) and u2 (c=10) strategic, r1 (c=20) rival, 100 MWh each, D=150."""
    return make_scenario([0.0, 10.0, 20.0], [100.0, 100.0, 100.0], [True, True, False], 150.0)


def make_scenario(cost, cap, strategic, demand, ids=None):
    n = len(cost)
    if ids is None:
        si = iter(range(1, n + 1))
        ri = iter(range(1, n + 1))
        ids = [f"u{next(si)}" if s else f"r{next(ri)}" for s in strategic]
    return Scenario(0, 1.0, float(demand), tuple(ids), tuple(strategic),
                    tuple(float(c) for c in cap), tuple(float(c) for c in cost))


def random_system(rng: random.Random, n_strategic=None, n_rival=None):
    """Small random market; the futures commitment fits the strategic capacity and the demand."""
    ns = n_strategic or rng.randint(2, 3)
    nr = n_rival or rng.randint(1, 3)
    strategic = [True] * ns + [False] * nr
    rng.shuffle(strategic)
    cap = [rng.uniform(10, 100) for _ in strategic]
    cost = [round(rng.uniform(0, 50), 2) for _ in strategic]
    demand = rng.uniform(0.2, 0.95) * sum(cap)
    scn = make_scenario(cost, cap, strategic, demand)
    qft = rng.uniform(0, 0.9) * min(scn.strategic_capacity, demand)
    pf = rng.uniform(5, 45)
    return scn, qft, pf


def random_lattice_system(rng: random.Random):
    """Integer capacities and demand with qft dividing 200, so a 200-step lattice holds every integer point.

    Every enumeration candidate is integer in such a system, which makes the
    lattice search an exact oracle rather than an approximate one.
    """
    ns = rng.randint(2, 3)
    nr = rng.randint(1, 3)
    strategic = [True] * ns + [False] * nr
    rng.shuffle(strategic)
    cap = [rng.randint(20, 200) for _ in strategic]
    cost = [round(rng.uniform(0, 50), 2) for _ in strategic]
    firm = sum(c for c, s in zip(cap, strategic) if s)
    demand = rng.randint(int(0.3 * sum(cap)), int(0.95 * sum(cap)))
    choices = [k for k in (1, 2, 4, 5, 8, 10, 20, 25, 40, 50, 100, 200) if k <= min(firm, demand)]
    qft = rng.choice(choices)
    scn = make_scenario(cost, cap, strategic, demand)
    return scn, float(qft), rng.uniform(5, 45)
