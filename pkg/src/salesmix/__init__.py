"""Joint futures/spot sales-mix and generation-plan optimization for a strategic power producer."""

__version__ = "0.1.0"

from .clearing import ClearingOutcome, kkt_residuals, merit_order_dispatch, naive_clearing, strategic_clearing
from .model import SystemConfig, TechnologyKind, UnitSpec, benchmark_config, load_config, validate_system
from .mpec import AllocationSolution, brute_force_allocation, optimize_allocation
from .risk import ProfitDistribution, cvar, expected, risk_premium, select_optimal
from .scenario import Scenario, ScenarioSet, VariabilityFactors, generate_scenarios, mean_value_scenario
from .sweep import Frontier, SweepPoint, futures_price, run_sweep

__all__ = [
    "AllocationSolution", "ClearingOutcome", "Frontier", "ProfitDistribution", "Scenario", "ScenarioSet",
    "SweepPoint", "SystemConfig", "TechnologyKind", "UnitSpec", "VariabilityFactors", "benchmark_config",
    "brute_force_allocation", "cvar", "expected", "futures_price", "generate_scenarios", "kkt_residuals",
    "load_config", "mean_value_scenario", "merit_order_dispatch", "naive_clearing", "optimize_allocation",
    "risk_premium", "run_sweep", "select_optimal", "strategic_clearing", "validate_system",
]
