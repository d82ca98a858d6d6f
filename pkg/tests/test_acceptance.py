"""Acceptance criteria at their stated tolerances; one PASS/FAIL line per check in the summary."""

import math
import random
import time

import numpy as np
import pytest

from salesmix.cli import main
from salesmix.clearing import kkt_residuals
from salesmix.model import save_config
from salesmix.mpec import brute_force_allocation, fortuny_amat_allocation, linear_identity_residual, \
    optimize_allocation
from salesmix.risk import ProfitDistribution, cvar, expected
from salesmix.scenario import VariabilityFactors, generate_scenarios
from salesmix.sweep import futures_price, run_sweep

from conftest import ACCEPTANCE_LINES, make_scenario, random_lattice_system

GRID = tuple(float(q) for q in range(0, 3001, 250))


def record(tag, ok, detail):
    ACCEPTANCE_LINES.append(f"{'PASS' if ok else 'FAIL'}  {tag}: {detail}")
    assert ok, detail


@pytest.fixture(scope="module")
def acc_config(bench):
    return bench.replace(qft_grid=GRID)


@pytest.fixture(scope="module")
def acc_scenarios(acc_config):
    return generate_scenarios(acc_config)


@pytest.fixture(scope="module")
def timed_run(acc_config, acc_scenarios):
    t0 = time.perf_counter()
    frontier = run_sweep(acc_config, acc_scenarios, threads=4)
    return frontier, time.perf_counter() - t0


@pytest.fixture(scope="module")
def frontier(timed_run):
    return timed_run[0]


def col(fr, attr):
    return [getattr(p, attr) for p in fr.points]


def test_c01_runtime(timed_run):
    frontier, secs = timed_run
    ok = secs < 60 and len(frontier.points) == 13 and not any(p.infeasible for p in frontier.points)
    record("C1 benchmark sweep < 60 s on 4 workers", ok, f"{secs:.2f} s, {len(frontier.points)} points")


def test_c02_expected_profit_at_zero(frontier):
    v = frontier.point(0.0).expected_profit
    record("C2a E[profit](0) within 5% of 121783", abs(v / 121783 - 1) <= 0.05, f"{v:.2f}")


def test_c02_spot_price_at_zero(frontier):
    v = frontier.point(0.0).expected_spot_price
    record("C2b E[spot](0) within 3% of 39.49", abs(v / 39.49 - 1) <= 0.03, f"{v:.4f}")


def test_c03_spot_price_constant(frontier):
    prices = [p.expected_spot_price for p in frontier.points if p.qft <= 2250]
    dev = max(abs(x / prices[0] - 1) for x in prices)
    record("C3 E[spot] deviation over [0, 2250] <= 1%", dev <= 0.01, f"max rel dev {dev:.2e}")


def test_c04_futures_price_monotone(frontier):
    pf = col(frontier, "pf")
    ok = all(b <= a for a, b in zip(pf, pf[1:]))
    record("C4a pf nonincreasing in qft", ok, f"pf(0)={pf[0]:.4f} pf(3000)={pf[-1]:.4f}")


def test_c04_futures_price_band(frontier):
    v = frontier.point(2250.0).pf
    record("C4b pf(2250) within 4% of 36.46", abs(v / 36.46 - 1) <= 0.04,
           f"{v:.4f} (band {36.46 * 0.96:.4f}..{36.46 * 1.04:.4f})")


def test_c04_negative_premium(frontier):
    prem = [(p.qft, p.risk_premium) for p in frontier.points if p.qft >= 250]
    worst = max(r for _, r in prem)
    record("C4c risk premium < 0 for qft >= 250", worst < 0, f"largest premium {worst:.4f}")


def test_c05_cvar_shape(frontier):
    e0 = frontier.point(0.0).expected_profit
    cv = col(frontier, "cvar_profit")
    k = int(np.argmax(cv))
    peak_q = frontier.points[k].qft
    unique = cv.count(cv[k]) == 1
    rises = all(b >= a for a, b in zip(cv[:k + 1], cv[1:k + 1]))
    falls = all(b <= a for a, b in zip(cv[k:], cv[k + 1:]))
    ok = (cv[0] <= 0.05 * e0 and unique and 0 < k < len(cv) - 1 and 1750 <= peak_q <= 2750
          and abs(cv[k] / 77351 - 1) <= 0.10 and rises and falls and cv[-1] < cv[k])
    record("C5 CVaR rises to a unique interior peak in [1750, 2750] within 10% of 77351, then declines", ok,
           f"CVaR(0)={cv[0]:.2f} ({cv[0] / e0:.1%} of E), peak {cv[k]:.2f} at {peak_q:g}, CVaR(3000)={cv[-1]:.2f}")


def test_c06_expected_profit_monotone(frontier):
    e = col(frontier, "expected_profit")
    ok = all(b <= a for a, b in zip(e, e[1:]))
    record("C6 E[profit] nonincreasing in qft", ok, f"{e[0]:.2f} -> {e[-1]:.2f}")


def test_c07_oracle_equivalence():
    rng = random.Random(20190)
    worst = 0.0
    for _ in range(50):
        scn, qft, pf = random_lattice_system(rng)
        a = optimize_allocation(scn, qft, pf).profit
        b = brute_force_allocation(scn, qft, pf, grid_steps=200).profit
        worst = max(worst, abs(a - b) / max(1.0, abs(b)))
    toy = make_scenario([0.0, 10.0, 20.0], [100.0, 100.0, 100.0], [True, True, False], 150.0)
    t1 = optimize_allocation(toy, 50.0, 15.0).profit
    t2 = brute_force_allocation(toy, 50.0, 15.0, grid_steps=200).profit
    ok = worst <= 0.005 and t1 == 1250.0 and t2 == 1250.0
    record("C7 enumeration vs 200-step lattice on 50 systems within 0.5%; toy 1250", ok,
           f"worst rel gap {worst:.2e}, toy {t1:g}/{t2:g}")


def test_c08_kkt_and_identity(frontier, acc_scenarios):
    worst_kkt = worst_id = 0.0
    for p in frontier.points:
        for s, sol in zip(acc_scenarios, p.solutions):
            worst_kkt = max(worst_kkt, kkt_residuals(sol.outcome, s, sol.allocation).worst)
            r = linear_identity_residual(sol.outcome, s, p.qft)
            worst_id = max(worst_id, r / (1 + abs(sol.spot_price * s.demand)))
    ok = worst_kkt <= 1e-6 and worst_id <= 1e-6
    record("C8a KKT and linear revenue identity <= 1e-6 on every benchmark clearing", ok,
           f"KKT {worst_kkt:.2e}, identity {worst_id:.2e}")


def test_c08_milp_verifier(acc_scenarios):
    rng = random.Random(8)
    picks = rng.sample(range(len(acc_scenarios)), 20)
    worst = 0.0
    for q in (1000.0, 2250.0, 3000.0):
        pf, _ = futures_price(acc_scenarios, q)
        for w in picks:
            s = acc_scenarios[w]
            a = optimize_allocation(s, q, pf).profit
            m = fortuny_amat_allocation(s, q, pf).objective
            worst = max(worst, abs(a - m) / max(1.0, abs(a)))
    record("C8b big-M MILP verifier agrees on 20 scenarios x 3 grid points", worst <= 1e-6, f"worst rel gap {worst:.2e}")


@pytest.fixture(scope="module")
def acc_config_file(acc_config, tmp_path_factory):
    path = tmp_path_factory.mktemp("acc") / "benchmark_250.json"
    save_config(acc_config, path)
    return path


def test_c09_determinism(acc_config_file, tmp_path):
    a, b, c = tmp_path / "t1", tmp_path / "t8", tmp_path / "rerun"
    codes = [main(["sweep", "--config", str(acc_config_file), "--out", str(a), "--threads", "1"]),
             main(["sweep", "--config", str(acc_config_file), "--out", str(b), "--threads", "8"]),
             main(["rerun", str(a / "manifest.json"), "--out", str(c)])]
    same_threads = (a / "frontier.csv").read_bytes() == (b / "frontier.csv").read_bytes()
    same_rerun = all((a / n).read_bytes() == (c / n).read_bytes() for n in ("frontier.csv", "frontier_plot.csv"))
    record("C9 threads 1 vs 8 and manifest rerun byte-identical", codes == [0, 0, 0] and same_threads and same_rerun,
           f"exit codes {codes}, threads identical={same_threads}, rerun identical={same_rerun}")


def test_c10_demand_ordering(acc_config):
    cv = {}
    for f in (0.8, 1.0, 1.2):
        scen = generate_scenarios(acc_config, VariabilityFactors(demand=f))
        cv[f] = run_sweep(acc_config, scen, threads=4, grid=(2250.0,)).points[0].cvar_profit
    ok = cv[0.8] >= cv[1.0] >= cv[1.2]
    record("C10a CVaR(2250) ordered by demand factor 0.8 >= 1.0 >= 1.2", ok,
           ", ".join(f"{k:g}: {v:.2f}" for k, v in cv.items()))


def test_c10_cost_curves_coincide(acc_config):
    curves = {}
    for f in (0.8, 1.0, 1.2):
        scen = generate_scenarios(acc_config, VariabilityFactors(costs=f))
        curves[f] = col(run_sweep(acc_config, scen, threads=4), "expected_profit")
    worst = max(max(c[k] for c in curves.values()) / min(c[k] for c in curves.values()) - 1
                for k in range(len(GRID)))
    record("C10b cost-factor E[profit] curves differ < 2%", worst < 0.02, f"max rel spread {worst:.3%}")


def test_c11_risk_properties():
    rng = np.random.default_rng(11)
    failures = 0
    for _ in range(1000):
        n = int(rng.integers(1, 60))
        v = rng.normal(0, 1e5, n) if rng.random() < 0.5 else rng.integers(-5, 5, n).astype(float)
        w = rng.random(n) + 1e-3
        p = w / w.sum()
        p[-1] = 1 - p[:-1].sum()
        d = ProfitDistribution(tuple(v), tuple(np.maximum(p, 0.0)))
        tol = 1e-9 * (1 + np.abs(v).max())
        betas = np.sort(rng.uniform(1e-3, 1, 5))
        cv = [cvar(d, b) for b in betas]
        perm = rng.permutation(n)
        dp = ProfitDistribution(tuple(v[perm]), tuple(d.probs[k] for k in perm))
        c = float(rng.normal(0, 1e4))
        point = ProfitDistribution.uniform([c] * n)
        ok = (all(x <= expected(d) + tol for x in cv)
              and all(b >= a - tol for a, b in zip(cv, cv[1:]))
              and math.isclose(cvar(d, 1.0), expected(d), rel_tol=1e-12, abs_tol=tol)
              and all(abs(cvar(dp, b) - x) <= tol for b, x in zip(betas, cv))
              and abs(expected(dp) - expected(d)) <= tol
              and all(abs(cvar(point, b) - c) <= 1e-9 * (1 + abs(c)) for b in betas))
        failures += not ok
    record("C11 CVaR properties on 1000 random distributions", failures == 0, f"{failures} failures")
