"""Merit-order solution of the spot dispatch LP, with dual recovery.

Both lower-level problems (the rivals' "naive" view and the true strategic
clearing) are the same LP: minimize total cost subject to a balance row and
box bounds. Filling units in ascending cost order is optimal; the balance dual
is the cost of the last dispatched unit and the bound duals follow from
stationarity.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

from .errors import InfeasibleError, ParameterError
from .scenario import Scenario

_TOL = 1e-9


@dataclass(frozen=True)
class ClearingOutcome:
    """Dispatch and duals of one clearing, all per-unit tuples in scenario unit order.

    ``upper_dual``/``lower_dual`` hold the capacity-bound and zero-bound duals;
    the ``mu_*`` and ``nu_*`` views split them by owner.
    """

    unit_ids: tuple[str, ...]
    strategic: tuple[bool, ...]
    cost: tuple[float, ...]
    capacity: tuple[float, ...]
    dispatch: tuple[float, ...]
    price: float
    upper_dual: tuple[float, ...]
    lower_dual: tuple[float, ...]
    marginal_unit: str | None
    residual_demand: float

    def _pick(self, values, strategic):
        return tuple(v for v, s in zip(values, self.strategic) if s is strategic)

    @property
    def mu_max(self):
        return self._pick(self.upper_dual, True)

    @property
    def mu_min(self):
        return self._pick(self.lower_dual, True)

    @property
    def nu_max(self):
        return self._pick(self.upper_dual, False)

    @property
    def nu_min(self):
        return self._pick(self.lower_dual, False)

    @property
    def strategic_dispatch(self):
        return self._pick(self.dispatch, True)

    @property
    def rival_dispatch(self):
        return self._pick(self.dispatch, False)


def merit_order(cost: Sequence[float], strategic: Sequence[bool], unit_ids: Sequence[str]) -> list[int]:
    """Unit indices by (cost, strategic before rival, id)."""
    return sorted(range(len(cost)), key=lambda k: (cost[k], not strategic[k], unit_ids[k]))


def merit_order_dispatch(cost, capacity, demand, strategic=None, unit_ids=None) -> ClearingOutcome:
    """Cost-minimal dispatch of ``demand`` over units with the given available capacities.

    The price is the cost of the last dispatched unit (0 when demand is 0); at a
    tier breakpoint this picks the lower end of the dual interval.
    """
    n = len(cost)
    if len(capacity) != n:
        raise ParameterError("cost and capacity lengths differ")
    strategic = tuple(strategic) if strategic is not None else (True,) * n
    unit_ids = tuple(unit_ids) if unit_ids is not None else tuple(f"u{k + 1}" for k in range(n))
    if any(q < 0 for q in capacity):
        raise ParameterError("negative available capacity")
    if demand < 0:
        raise ParameterError("negative demand")

    total = math.fsum(capacity)
    if demand > total * (1 + _TOL) + _TOL:
        raise InfeasibleError(
            f"demand {demand:.6f} MWh exceeds available capacity {total:.6f} MWh",
            shortfall=demand - total,
        )

    dispatch = [0.0] * n
    remaining = demand
    last = None
    for k in merit_order(cost, strategic, unit_ids):
        if remaining <= 0:
            break
        cap = capacity[k]
        if cap <= 0:
            continue
        if cap >= remaining:
            dispatch[k] = remaining
            remaining = 0.0
        else:
            dispatch[k] = cap
            remaining -= cap
        last = k
    price = cost[last] if last is not None else 0.0

    upper, lower = [0.0] * n, [0.0] * n
    for k in range(n):
        q, cap, c = dispatch[k], capacity[k], cost[k]
        if q >= cap:
            upper[k] = max(0.0, price - c)
        if q <= 0:
            lower[k] = max(0.0, c - price)

    return ClearingOutcome(
        unit_ids=unit_ids,
        strategic=strategic,
        cost=tuple(cost),
        capacity=tuple(capacity),
        dispatch=tuple(dispatch),
        price=price,
        upper_dual=tuple(upper),
        lower_dual=tuple(lower),
        marginal_unit=unit_ids[last] if last is not None else None,
        residual_demand=demand,
    )


def _expand(scenario: Scenario, withheld: Sequence[float]) -> list[float]:
    """Per-unit available capacity after removing ``withheld`` from strategic units."""
    idx = scenario.strategic_indices()
    if len(withheld) != len(idx):
        raise ParameterError(f"expected {len(idx)} strategic values, got {len(withheld)}")
    caps = list(scenario.capacity)
    for k, w in zip(idx, withheld):
        caps[k] = max(0.0, caps[k] - w)
    return caps


def naive_reduction(scenario: Scenario, qft: float, alpha: float) -> list[float]:
    """Pro-rata split of ``alpha * qft`` across strategic units by available capacity."""
    if not alpha > 0:
        raise ParameterError("alpha must be positive")
    idx = scenario.strategic_indices()
    total = math.fsum(scenario.capacity[k] for k in idx)
    guessed = alpha * qft
    if guessed <= 0:
        return [0.0] * len(idx)
    if guessed > total * (1 + _TOL):
        raise ParameterError(
            f"alpha*qft = {guessed:.4f} MWh exceeds strategic capacity {total:.4f} MWh "
            f"in scenario {scenario.index}"
        )
    return [scenario.capacity[k] / total * guessed for k in idx]


def naive_clearing(scenario: Scenario, qft: float, alpha: float = 1.0) -> ClearingOutcome:
    """Rivals' view: futures assumed supplied pro rata from every strategic unit."""
    reduction = naive_reduction(scenario, qft, alpha)
    caps = _expand(scenario, reduction)
    residual = max(0.0, scenario.demand - alpha * qft)
    try:
        return merit_order_dispatch(scenario.cost, caps, residual, scenario.strategic, scenario.unit_ids)
    except InfeasibleError as exc:
        exc.scenario = scenario.index
        raise


def strategic_clearing(scenario: Scenario, allocation: Sequence[float]) -> ClearingOutcome:
    """True spot clearing once ``allocation`` (MWh per strategic unit) is committed to futures."""
    idx = scenario.strategic_indices()
    if len(allocation) != len(idx):
        raise ParameterError(f"expected {len(idx)} allocations, got {len(allocation)}")
    for k, qf in zip(idx, allocation):
        cap = scenario.capacity[k]
        if qf < -_TOL * max(1.0, cap) or qf > cap + _TOL * max(1.0, cap):
            raise ParameterError(
                f"futures allocation {qf} on unit {scenario.unit_ids[k]} outside [0, {cap}]"
            )
    caps = _expand(scenario, allocation)
    residual = max(0.0, scenario.demand - math.fsum(allocation))
    try:
        return merit_order_dispatch(scenario.cost, caps, residual, scenario.strategic, scenario.unit_ids)
    except InfeasibleError as exc:
        exc.scenario = scenario.index
        raise


@dataclass(frozen=True)
class KKTReport:
    stationarity: float
    complementarity: float
    balance: float
    feasibility: float
    per_unit_stationarity: tuple[float, ...]

    @property
    def worst(self) -> float:
        return max(self.stationarity, self.complementarity, self.balance, self.feasibility)

    def ok(self, tol: float = 1e-6) -> bool:
        return self.worst <= tol


def kkt_residuals(outcome: ClearingOutcome, scenario: Scenario, withheld: Sequence[float] | None = None) -> KKTReport:
    """Evaluate the optimality conditions of the dispatch LP at ``outcome``.

    Available capacities and residual demand are rebuilt from ``scenario`` and
    the strategic capacity ``withheld`` (the futures allocation for the true
    clearing, the pro-rata reduction for the naive one), so the check does not
    trust anything stored in the outcome besides dispatch and duals.
    """
    if len(outcome.dispatch) != len(scenario.capacity):
        raise ParameterError("outcome and scenario dimensions differ")
    withheld = list(withheld) if withheld is not None else [0.0] * len(scenario.strategic_indices())
    caps = _expand(scenario, withheld)
    residual = max(0.0, scenario.demand - math.fsum(withheld))
    p = outcome.price
    stat = []
    comp = 0.0
    feas = 0.0
    for k, c in enumerate(scenario.cost):
        q, up, lo = outcome.dispatch[k], outcome.upper_dual[k], outcome.lower_dual[k]
        stat.append(abs(c - p + up - lo))
        comp = max(comp, abs((caps[k] - q) * up), abs(q * lo))
        feas = max(feas, -q, q - caps[k], -up, -lo)
    balance = abs(math.fsum(outcome.dispatch) - residual)
    return KKTReport(
        stationarity=max(stat),
        complementarity=comp,
        balance=balance / max(1.0, residual),
        feasibility=max(0.0, feas),
        per_unit_stationarity=tuple(stat),
    )
