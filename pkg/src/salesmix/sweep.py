"""Grid exploration of the total futures commitment.

For each grid value: form the futures price from the rivals' naive clearing,
solve every scenario's allocation problem, then aggregate the profit
distribution. Scenario problems are independent once ``qft`` and ``pf`` are
fixed, so grid points are farmed out to worker processes. Every reduction runs
in scenario-index order with ``math.fsum``; the worker count never changes a
bit of the output.
"""

from __future__ import annotations

import csv
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

from . import risk
from .clearing import naive_clearing
from .errors import InfeasibleError, SalesMixError
from .model import TECH_GROUPS, SystemConfig, config_digest
from .mpec import AllocationSolution, optimize_allocation
from .scenario import ScenarioSet, VariabilityFactors

log = logging.getLogger(__name__)

FRONTIER_COLUMNS = ["qft", "pf", "exp_spot_price", "exp_profit", "cvar_profit",
                    "nuc_spot", "nuc_fut", "ren_spot", "ren_fut", "conv_spot", "conv_fut", "infeasible"]
_GROUP_PREFIX = {"nuclear": "nuc", "renewables": "ren", "conventional": "conv"}


@dataclass(frozen=True)
class SweepPoint:
    qft: float
    pf: float = math.nan
    probs: tuple[float, ...] = ()
    naive_prices: tuple[float, ...] = ()
    solutions: tuple[AllocationSolution, ...] = ()
    groups: tuple[str, ...] = ()  # reporting group of each strategic unit
    expected_profit: float = math.nan
    cvar_profit: float = math.nan
    expected_spot_price: float = math.nan
    mix: dict = field(default_factory=dict)
    infeasible: bool = False
    reason: str = ""

    @property
    def risk_premium(self) -> float:
        return risk.risk_premium(self.pf, self.expected_spot_price)

    def profit_distribution(self) -> risk.ProfitDistribution:
        return risk.ProfitDistribution(tuple(s.profit for s in self.solutions), self.probs)


@dataclass(frozen=True)
class Frontier:
    points: tuple[SweepPoint, ...]
    config_digest: str
    factors: VariabilityFactors
    seed: int | None
    cvar_level: float
    alpha: float

    def point(self, qft: float) -> SweepPoint:
        for p in self.points:
            if p.qft == qft:
                return p
        raise KeyError(qft)


def feasible_qft_range(scenarios: ScenarioSet) -> tuple[float, float]:
    if not len(scenarios):
        raise SalesMixError("empty scenario set")
    return 0.0, max(s.strategic_capacity for s in scenarios)


def futures_price(scenarios: ScenarioSet, qft: float, alpha: float = 1.0) -> tuple[float, list[float]]:
    """Probability-weighted mean of the naive spot prices, and the prices themselves."""
    prices = []
    for s in scenarios:
        try:
            prices.append(naive_clearing(s, qft, alpha).price)
        except SalesMixError as exc:
            raise type(exc)(f"naive clearing, scenario {s.index}: {exc}") from exc
    pf = math.fsum(p * s.probability for p, s in zip(prices, scenarios))
    return pf, prices


def technology_mix(point: SweepPoint) -> dict[str, dict[str, float]]:
    """Expected strategic output per reporting group, split into spot and futures MWh."""
    out = {}
    for g in TECH_GROUPS:
        cols = [k for k, gg in enumerate(point.groups) if gg == g]
        spot, fut = [], []
        for sol, pr in zip(point.solutions, point.probs):
            qs = sol.outcome.strategic_dispatch
            spot.extend(pr * qs[k] for k in cols)
            fut.extend(pr * sol.allocation[k] for k in cols)
        out[g] = {"spot": math.fsum(spot), "futures": math.fsum(fut)}
    return out


def solve_point(scenarios: ScenarioSet, qft: float, groups: tuple[str, ...], alpha: float, beta: float) -> SweepPoint:
    """Solve one grid point; any failure yields an infeasible point carrying the reason."""
    try:
        low_cap = min(s.strategic_capacity for s in scenarios)
        if qft > low_cap * (1 + 1e-9):
            raise InfeasibleError(f"qft {qft} exceeds strategic capacity {low_cap:.4f} in some scenario")
        pf, naive = futures_price(scenarios, qft, alpha)
        sols = tuple(optimize_allocation(s, qft, pf) for s in scenarios)
    except SalesMixError as exc:
        return SweepPoint(qft=qft, infeasible=True, reason=str(exc))
    probs = tuple(s.probability for s in scenarios)
    point = SweepPoint(
        qft=qft,
        pf=pf,
        probs=probs,
        naive_prices=tuple(naive),
        solutions=sols,
        groups=groups,
    )
    dist = point.profit_distribution()
    return replace(
        point,
        expected_profit=risk.expected(dist),
        cvar_profit=risk.cvar(dist, beta),
        expected_spot_price=math.fsum(p * s.spot_price for p, s in zip(probs, sols)),
        mix=technology_mix(point),
    )


def _solve_task(args):
    return solve_point(*args)


def run_sweep(config: SystemConfig, scenarios: ScenarioSet, threads: int = 1,
              grid=None, alpha: float | None = None, beta: float | None = None) -> Frontier:
    grid = tuple(config.qft_grid if grid is None else grid)
    alpha = config.alpha if alpha is None else alpha
    beta = config.cvar_level if beta is None else beta
    groups = tuple(u.tech.group for u in config.units if u.strategic)
    tasks = [(scenarios, q, groups, alpha, beta) for q in grid]
    if threads <= 1 or len(tasks) == 1:
        points = [_solve_task(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            points = list(pool.map(_solve_task, tasks))
    for p in points:
        if p.infeasible:
            log.warning("grid point qft=%s infeasible: %s", p.qft, p.reason)
    prov = scenarios.provenance
    return Frontier(
        points=tuple(points),
        config_digest=prov.config_digest if prov else config_digest(config),
        factors=prov.factors if prov else VariabilityFactors(),
        seed=prov.seed if prov else None,
        cvar_level=beta,
        alpha=alpha,
    )


def _fmt(x: float) -> str:
    return repr(float(x))


def frontier_rows(frontier: Frontier):
    for p in frontier.points:
        if p.infeasible:
            yield [_fmt(p.qft)] + [""] * (len(FRONTIER_COLUMNS) - 2) + ["1"]
            continue
        row = [p.qft, p.pf, p.expected_spot_price, p.expected_profit, p.cvar_profit]
        for g in TECH_GROUPS:
            row += [p.mix[g]["spot"], p.mix[g]["futures"]]
        yield [_fmt(v) for v in row] + ["0"]


def write_frontier_csv(frontier: Frontier, path: str | Path) -> None:
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(FRONTIER_COLUMNS)
        w.writerows(frontier_rows(frontier))


def write_detail_csv(frontier: Frontier, scenarios: ScenarioSet, path: str | Path) -> None:
    """One row per (grid point, scenario) with allocation and dispatch of each strategic unit."""
    first = scenarios[0]
    sids = [first.unit_ids[k] for k in first.strategic_indices()]
    header = ["qft", "omega", "prob", "naive_price", "spot_price", "profit", "profit_futures", "profit_spot"]
    header += [f"qf_{i}" for i in sids] + [f"qs_{i}" for i in sids]
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for p in frontier.points:
            if p.infeasible:
                continue
            for s, naive, sol in zip(scenarios, p.naive_prices, p.solutions):
                w.writerow([_fmt(p.qft), s.index, _fmt(s.probability), _fmt(naive), _fmt(sol.spot_price),
                            _fmt(sol.profit), _fmt(sol.profit_futures), _fmt(sol.profit_spot)]
                           + [_fmt(v) for v in sol.allocation]
                           + [_fmt(v) for v in sol.outcome.strategic_dispatch])


@dataclass(frozen=True)
class FrontierRow:
    """A frontier CSV row read back from disk."""

    qft: float
    pf: float
    expected_spot_price: float
    expected_profit: float
    cvar_profit: float
    mix: dict
    infeasible: bool

    @property
    def risk_premium(self) -> float:
        return risk.risk_premium(self.pf, self.expected_spot_price)


def read_frontier_csv(path: str | Path) -> list[FrontierRow]:
    with Path(path).open(newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != FRONTIER_COLUMNS:
            raise SalesMixError(f"{path}: unexpected frontier columns {reader.fieldnames}")
        out = []
        for rec in reader:
            bad = rec["infeasible"] == "1"
            num = {k: (math.nan if bad or rec[k] == "" else float(rec[k])) for k in FRONTIER_COLUMNS[:-1]}
            mix = {g: {"spot": num[f"{pre}_spot"], "futures": num[f"{pre}_fut"]} for g, pre in _GROUP_PREFIX.items()}
            out.append(FrontierRow(float(rec["qft"]), num["pf"], num["exp_spot_price"], num["exp_profit"],
                                   num["cvar_profit"], mix, bad))
    return out
