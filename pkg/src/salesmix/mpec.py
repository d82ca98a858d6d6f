"""Per-scenario optimal split of a futures commitment across the strategic units.

With ``qft`` and ``pf`` fixed, each scenario is a small bilevel problem: the
producer picks ``qf`` (sum ``qft``) and the spot market clears by merit order
on the capacity left over. The spot price takes one of at most ``I + J + 1``
values, so the search enumerates which unit ends up marginal.

Fix a candidate marginal unit ``k`` at price ``c_k``. Every unit ahead of ``k``
in merit order is fully dispatched, so moving futures between those units is
profit-neutral, and each MWh placed on a strategic unit behind ``k`` costs
``c_i - c_k``. The best allocation for ``k`` therefore loads as much of
``qft`` as possible on units up to and including ``k`` (cheapest first),
subject to ``k`` still being reached by residual demand, and spills the rest
onto the cheapest units behind ``k``. Each such allocation is cleared for real
and the most profitable one wins.

``brute_force_allocation`` (lattice search) and ``fortuny_amat_allocation``
(big-M MILP over the complementarity conditions) are independent checks.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .clearing import ClearingOutcome, merit_order, strategic_clearing
from .errors import InfeasibleError, ParameterError
from .scenario import Scenario

_TOL = 1e-9


@dataclass(frozen=True)
class AllocationSolution:
    qft: float
    pf: float
    allocation: tuple[float, ...]  # MWh committed to futures, per strategic unit
    outcome: ClearingOutcome
    profit: float
    profit_futures: float
    profit_spot: float

    @property
    def spot_price(self) -> float:
        return self.outcome.price


def _profit_parts(scenario: Scenario, qft, pf, allocation, outcome):
    idx = scenario.strategic_indices()
    c = [scenario.cost[k] for k in idx]
    qs = [outcome.dispatch[k] for k in idx]
    fut = math.fsum([pf * qft] + [-ci * qf for ci, qf in zip(c, allocation)])
    spot = math.fsum([(outcome.price - ci) * q for ci, q in zip(c, qs)])
    return fut, spot


def evaluate_allocation(scenario: Scenario, qft: float, pf: float, allocation: Sequence[float]) -> AllocationSolution:
    """Clear the spot market under ``allocation`` and book the resulting profit."""
    allocation = tuple(float(a) for a in allocation)
    outcome = strategic_clearing(scenario, allocation)
    fut, spot = _profit_parts(scenario, qft, pf, allocation, outcome)
    return AllocationSolution(qft, pf, allocation, outcome, fut + spot, fut, spot)


def _fill(amount, units, caps, out):
    """Place ``amount`` on ``units`` in the given order up to their capacities."""
    for k in units:
        if amount <= 0:
            break
        take = min(caps[k], amount)
        out[k] += take
        amount -= take
    return amount


def _candidate_allocations(scenario: Scenario, qft: float):
    caps = scenario.capacity
    strat = scenario.strategic
    order = merit_order(scenario.cost, strat, scenario.unit_ids)
    strat_order = [k for k in order if strat[k]]

    cheapest = [0.0] * len(caps)
    _fill(qft, strat_order, caps, cheapest)
    yield cheapest

    residual = scenario.demand - qft
    if residual <= 0:
        return

    before_total = 0.0
    before_strat = []
    before_strat_cap = 0.0
    for pos, k in enumerate(order):
        through = before_total + caps[k]
        if caps[k] > 0 and through >= residual:
            after = [u for u in order[pos + 1:] if strat[u]]
            if strat[k]:
                load = min(before_strat_cap + caps[k], through - residual, qft)
                on_before = min(before_strat_cap, load)
            else:
                load = min(before_strat_cap, through - residual, qft)
                on_before = load
            # k stays marginal only while capacity ahead of it falls short of residual demand
            if on_before > before_total - residual:
                alloc = [0.0] * len(caps)
                _fill(on_before, before_strat, caps, alloc)
                alloc[k] += load - on_before
                left = _fill(qft - load, after, caps, alloc)
                if left <= _TOL * max(1.0, qft):
                    yield alloc
        before_total = through
        if strat[k]:
            before_strat.append(k)
            before_strat_cap += caps[k]


def optimize_allocation(scenario: Scenario, qft: float, pf: float) -> AllocationSolution:
    """Profit-maximizing futures allocation for one scenario (exact).

    Ties between candidates keep the first one found; the first candidate is
    the plain cheapest-first allocation.
    """
    if not math.isfinite(pf):
        raise ParameterError("futures price must be finite")
    if qft < 0:
        raise ParameterError("qft must be nonnegative")
    cap = scenario.strategic_capacity
    if qft > cap * (1 + _TOL) + _TOL:
        raise InfeasibleError(
            f"scenario {scenario.index}: qft {qft} exceeds strategic capacity {cap:.4f}",
            shortfall=qft - cap,
            scenario=scenario.index,
        )
    idx = scenario.strategic_indices()
    best = None
    for alloc in _candidate_allocations(scenario, qft):
        sol = evaluate_allocation(scenario, qft, pf, [min(alloc[k], scenario.capacity[k]) for k in idx])
        if best is None or sol.profit > best.profit + _TOL * max(1.0, abs(best.profit)):
            best = sol
    return best


def _lattice(n_units: int, steps: int) -> np.ndarray:
    if n_units == 1:
        return np.array([[steps]])
    rows = [(*head, steps - sum(head))
            for head in itertools.product(range(steps + 1), repeat=n_units - 1)
            if sum(head) <= steps]
    return np.array(rows)


def brute_force_allocation(scenario: Scenario, qft: float, pf: float, grid_steps: int = 100,
                           max_units: int = 3) -> AllocationSolution:
    """Best allocation over the simplex lattice ``qf = qft * k / grid_steps``.

    The clearing and profit of every lattice point are computed here with
    array operations, independently of the clearing module.
    """
    if grid_steps < 1:
        raise ParameterError("grid_steps must be >= 1")
    idx = scenario.strategic_indices()
    if len(idx) > max_units:
        raise ParameterError(f"brute force refused: {len(idx)} strategic units > {max_units}")
    caps = np.asarray(scenario.capacity, dtype=float)
    cost = np.asarray(scenario.cost, dtype=float)
    strat = np.asarray(scenario.strategic)

    steps = 1 if qft == 0 else grid_steps
    qf = _lattice(len(idx), steps) * (qft / steps)
    keep = np.all(qf <= caps[idx] * (1 + _TOL) + _TOL, axis=1)
    qf = np.minimum(qf[keep], caps[idx])
    if len(qf) == 0:
        raise InfeasibleError(f"no lattice point fits the strategic capacities at qft={qft}", scenario=scenario.index)

    avail = np.tile(caps, (len(qf), 1))
    avail[:, idx] = np.maximum(avail[:, idx] - qf, 0.0)
    residual = max(0.0, scenario.demand - qft)

    ids = np.asarray(scenario.unit_ids)
    perm = np.lexsort((ids, ~strat, cost))
    a = avail[:, perm]
    taken = np.clip(residual - (np.cumsum(a, axis=1) - a), 0.0, a)
    if residual > 0 and np.any(taken.sum(axis=1) < residual * (1 - 1e-9)):
        raise InfeasibleError("demand exceeds available capacity", scenario=scenario.index)
    active = taken > 0
    has = active.any(axis=1)
    last = a.shape[1] - 1 - np.argmax(active[:, ::-1], axis=1)
    price = np.where(has, cost[perm][last], 0.0)

    dispatch = np.empty_like(taken)
    dispatch[:, perm] = taken
    c_s = cost[idx]
    fut = pf * qft - qf @ c_s
    spot = ((price[:, None] - c_s[None, :]) * dispatch[:, idx]).sum(axis=1)
    profit = fut + spot
    b = int(np.argmax(profit))

    alloc = tuple(float(x) for x in qf[b])
    return AllocationSolution(qft, pf, alloc, strategic_clearing(scenario, alloc),
                              float(profit[b]), float(fut[b]), float(spot[b]))


def linear_identity_residual(outcome: ClearingOutcome, scenario: Scenario, qft: float) -> float:
    """Gap between the spot revenue and its linear rewrite through rival duals.

    The identity holds for any KKT point of the true clearing, so a nonzero
    value flags inconsistent duals.
    """
    p = outcome.price
    lhs = p * math.fsum(outcome.strategic_dispatch)
    rival = [k for k, s in enumerate(scenario.strategic) if not s]
    rhs = math.fsum(
        [-scenario.cost[k] * outcome.dispatch[k] for k in rival]
        + [-outcome.upper_dual[k] * scenario.capacity[k] for k in rival]
        + [p * max(0.0, scenario.demand - qft)]
    )
    return abs(lhs - rhs)


def big_m_bounds(scenario: Scenario) -> tuple[float, float]:
    """(primal M in MWh, dual M in money/MWh) valid for the complementarity big-M rows."""
    return max(scenario.capacity), max(scenario.cost) - min(scenario.cost) + 1.0


@dataclass(frozen=True)
class MILPResult:
    objective: float
    allocation: tuple[float, ...]
    price: float
    solution: AllocationSolution  # the allocation re-cleared by merit order


def fortuny_amat_allocation(scenario: Scenario, qft: float, pf: float) -> MILPResult:
    """Solve the single-level problem as a MILP with binary complementarity patterns.

    The bilinear spot revenue is replaced by its linear rewrite through the
    rival bound duals, and each complementarity pair gets a binary switch with
    big-M bounds. Solved with HiGHS via scipy.
    """
    from scipy.optimize import Bounds, LinearConstraint, milp

    si = scenario.strategic_indices()
    rj = [k for k, s in enumerate(scenario.strategic) if not s]
    I, J = len(si), len(rj)
    Qi = np.array([scenario.capacity[k] for k in si])
    Qj = np.array([scenario.capacity[k] for k in rj])
    ci = np.array([scenario.cost[k] for k in si])
    cj = np.array([scenario.cost[k] for k in rj])
    Mp, Md = big_m_bounds(scenario)
    Mp = max(Mp, 1.0)
    residual = max(0.0, scenario.demand - qft)

    # variable blocks
    names = ["qf", "qs", "qr", "p", "mu_max", "mu_min", "nu_max", "nu_min", "u_max", "u_min", "v_max", "v_min"]
    sizes = [I, I, J, 1, I, I, J, J, I, I, J, J]
    start = dict(zip(names, np.cumsum([0] + sizes[:-1])))
    n = sum(sizes)

    def sl(name):
        return slice(start[name], start[name] + sizes[names.index(name)])

    c = np.zeros(n)
    c[sl("qf")] = ci
    c[sl("qs")] = ci
    c[sl("qr")] = cj
    c[sl("nu_max")] = Qj
    c[sl("p")] = -residual  # minimize the negated profit (constant pf*qft added back)

    rows, lo, hi = [], [], []

    def add(coeffs, lb, ub):
        r = np.zeros(n)
        for name, pos, val in coeffs:
            r[start[name] + pos] = val
        rows.append(r)
        lo.append(lb)
        hi.append(ub)

    add([("qf", i, 1.0) for i in range(I)], qft, qft)
    add([("qs", i, 1.0) for i in range(I)] + [("qr", j, 1.0) for j in range(J)], residual, residual)
    for i in range(I):
        add([("p", 0, 1.0), ("mu_max", i, -1.0), ("mu_min", i, 1.0)], ci[i], ci[i])
        add([("qs", i, 1.0), ("qf", i, 1.0)], -np.inf, Qi[i])
        add([("qs", i, -1.0), ("qf", i, -1.0), ("u_max", i, -Mp)], -np.inf, -Qi[i])
        add([("mu_max", i, 1.0), ("u_max", i, Md)], -np.inf, Md)
        add([("qs", i, 1.0), ("u_min", i, -Mp)], -np.inf, 0.0)
        add([("mu_min", i, 1.0), ("u_min", i, Md)], -np.inf, Md)
    for j in range(J):
        add([("p", 0, 1.0), ("nu_max", j, -1.0), ("nu_min", j, 1.0)], cj[j], cj[j])
        add([("qr", j, -1.0), ("v_max", j, -Mp)], -np.inf, -Qj[j])
        add([("nu_max", j, 1.0), ("v_max", j, Md)], -np.inf, Md)
        add([("qr", j, 1.0), ("v_min", j, -Mp)], -np.inf, 0.0)
        add([("nu_min", j, 1.0), ("v_min", j, Md)], -np.inf, Md)

    lb = np.zeros(n)
    ub = np.full(n, np.inf)
    ub[sl("qf")] = Qi
    ub[sl("qs")] = Qi
    ub[sl("qr")] = Qj
    lb[sl("p")] = -np.inf
    for name in ("mu_max", "mu_min", "nu_max", "nu_min"):
        ub[sl(name)] = Md
    integrality = np.zeros(n)
    for name in ("u_max", "u_min", "v_max", "v_min"):
        ub[sl(name)] = 1.0
        integrality[sl(name)] = 1

    res = milp(c, constraints=LinearConstraint(np.array(rows), lo, hi), bounds=Bounds(lb, ub),
               integrality=integrality, options={"mip_rel_gap": 1e-9})
    if not res.success:
        raise InfeasibleError(f"MILP failed in scenario {scenario.index}: {res.message}", scenario=scenario.index)
    x = res.x
    alloc = tuple(float(v) for v in np.clip(x[sl("qf")], 0.0, Qi))
    # rescale rounding drift so the commitment is met exactly
    total = sum(alloc)
    if total > 0:
        alloc = tuple(a * qft / total for a in alloc)
    return MILPResult(
        objective=pf * qft - float(res.fun),
        allocation=alloc,
        price=float(x[start["p"]]),
        solution=evaluate_allocation(scenario, qft, pf, [min(a, q) for a, q in zip(alloc, Qi)]),
    )
