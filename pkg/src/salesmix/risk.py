"""Risk functionals over discrete profit distributions.

CVaR here is the *lower-tail* mean of profit: the expected profit over the worst
``beta`` probability mass. It is a safety measure, so larger is better, and
``cvar <= expected`` always. This is the opposite sign convention from
loss-based CVaR.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import ParameterError


@dataclass(frozen=True)
class ProfitDistribution:
    values: tuple[float, ...]
    probs: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(float(v) for v in self.values))
        object.__setattr__(self, "probs", tuple(float(p) for p in self.probs))
        if len(self.values) != len(self.probs):
            raise ParameterError("values and probs differ in length")
        if not self.values:
            raise ParameterError("empty distribution")
        if any(p < 0 for p in self.probs) or abs(math.fsum(self.probs) - 1.0) > 1e-9:
            raise ParameterError("probabilities must be nonnegative and sum to 1")

    @classmethod
    def uniform(cls, values: Sequence[float]) -> "ProfitDistribution":
        n = len(values)
        return cls(tuple(values), (1.0 / n,) * n)


def expected(dist: ProfitDistribution) -> float:
    return math.fsum(v * p for v, p in zip(dist.values, dist.probs))


def cvar(dist: ProfitDistribution, beta: float) -> float:
    """Mean of the worst ``beta`` mass of profit; the boundary atom is weighted partially."""
    if not 0 < beta <= 1:
        raise ParameterError(f"beta must lie in (0, 1], got {beta}")
    if beta == 1:
        return expected(dist)
    order = np.lexsort((np.asarray(dist.probs), np.asarray(dist.values)))
    need = beta
    terms = []
    for k in order:
        if need <= 0:
            break
        w = min(dist.probs[k], need)
        terms.append(w * dist.values[k])
        need -= w
    # sum of tail weights is beta up to rounding in `need`
    return math.fsum(terms) / beta


def risk_premium(pf: float, expected_spot_price: float) -> float:
    """Futures price minus expected spot price; negative means backwardation."""
    return pf - expected_spot_price


def select_optimal(points: Sequence, lam: float):
    """Point maximizing ``lam * expected + (1 - lam) * cvar``; ties go to the smaller qft.

    ``points`` need ``qft``, ``expected_profit`` and ``cvar_profit`` attributes.
    Points flagged ``infeasible`` are skipped.
    """
    if not 0 <= lam <= 1:
        raise ParameterError("lambda must lie in [0, 1]")
    pool = [p for p in points if not getattr(p, "infeasible", False)]
    if not pool:
        raise ParameterError("no feasible points to select from")
    scores = [lam * p.expected_profit + (1 - lam) * p.cvar_profit for p in pool]
    best = max(scores)
    return min((p for p, s in zip(pool, scores) if s == best), key=lambda p: p.qft)
