"""Domain types for generating units, the power system and run configuration."""

from __future__ import annotations

import enum
import hashlib
import json
from dataclasses import asdict, dataclass, field
from importlib import resources
from pathlib import Path
from typing import Sequence

from .errors import ConfigError


class TechnologyKind(str, enum.Enum):
    NUCLEAR = "nuclear"
    WIND = "wind"
    SOLAR = "solar"
    COAL = "coal"
    GAS = "gas"

    @property
    def renewable(self) -> bool:
        """Capacity is uncertain."""
        return self in (TechnologyKind.WIND, TechnologyKind.SOLAR)

    @property
    def fuel_cost_uncertain(self) -> bool:
        return self in (TechnologyKind.COAL, TechnologyKind.GAS)

    @property
    def group(self) -> str:
        """Reporting group: nuclear, renewables or conventional."""
        if self is TechnologyKind.NUCLEAR:
            return "nuclear"
        if self.renewable:
            return "renewables"
        return "conventional"


class Owner(str, enum.Enum):
    STRATEGIC = "strategic"
    RIVAL = "rival"


TECH_GROUPS = ("nuclear", "renewables", "conventional")

# cost_sd at or below this is a placeholder for "deterministic"
_NEGLIGIBLE_SD = 1e-3


@dataclass(frozen=True)
class UnitSpec:
    id: str
    owner: Owner
    tech: TechnologyKind
    cost_mean: float
    cost_sd: float
    cap_mean: float
    cap_sd: float

    @property
    def strategic(self) -> bool:
        return self.owner is Owner.STRATEGIC

    @classmethod
    def from_dict(cls, d: dict) -> "UnitSpec":
        try:
            return cls(
                id=str(d["id"]),
                owner=Owner(d["owner"]),
                tech=TechnologyKind(d["tech"]),
                cost_mean=float(d["cost_mean"]),
                cost_sd=float(d["cost_sd"]),
                cap_mean=float(d["cap_mean"]),
                cap_sd=float(d["cap_sd"]),
            )
        except KeyError as exc:
            raise ConfigError(f"unit entry missing field {exc.args[0]!r}") from None
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"unit entry {d.get('id', '?')!r}: {exc}") from None

    def to_dict(self) -> dict:
        d = asdict(self)
        d["owner"] = self.owner.value
        d["tech"] = self.tech.value
        return d


@dataclass(frozen=True)
class SystemConfig:
    units: tuple[UnitSpec, ...]
    demand_mean: float
    demand_sd: float
    alpha: float = 1.0
    n_scenarios: int = 300
    seed: int = 0
    qft_grid: tuple[float, ...] = field(default=(0.0,))
    cvar_level: float = 0.05
    lambda_risk: float = 0.5

    def __post_init__(self):
        # accept lists from callers but store tuples so the config stays hashable
        object.__setattr__(self, "units", tuple(self.units))
        object.__setattr__(self, "qft_grid", tuple(float(q) for q in self.qft_grid))

    @property
    def strategic_units(self) -> tuple[UnitSpec, ...]:
        return tuple(u for u in self.units if u.strategic)

    @property
    def rival_units(self) -> tuple[UnitSpec, ...]:
        return tuple(u for u in self.units if not u.strategic)

    def replace(self, **changes) -> "SystemConfig":
        d = {f: getattr(self, f) for f in self.__dataclass_fields__}
        d.update(changes)
        return SystemConfig(**d)

    def to_dict(self) -> dict:
        return {
            "units": [u.to_dict() for u in self.units],
            "demand_mean": self.demand_mean,
            "demand_sd": self.demand_sd,
            "alpha": self.alpha,
            "n_scenarios": self.n_scenarios,
            "seed": self.seed,
            "qft_grid": list(self.qft_grid),
            "cvar_level": self.cvar_level,
            "lambda_risk": self.lambda_risk,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SystemConfig":
        if not isinstance(d, dict):
            raise ConfigError("config root must be a JSON object")
        try:
            return cls(
                units=tuple(UnitSpec.from_dict(u) for u in d["units"]),
                demand_mean=float(d["demand_mean"]),
                demand_sd=float(d["demand_sd"]),
                alpha=float(d.get("alpha", 1.0)),
                n_scenarios=int(d["n_scenarios"]),
                seed=int(d.get("seed", 0)),
                qft_grid=tuple(float(q) for q in d["qft_grid"]),
                cvar_level=float(d.get("cvar_level", 0.05)),
                lambda_risk=float(d.get("lambda_risk", 0.5)),
            )
        except KeyError as exc:
            raise ConfigError(f"config missing field {exc.args[0]!r}") from None
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad config value: {exc}") from None


def validate_system(config: SystemConfig) -> list[str]:
    """Return every invariant violation as ``"<locus>: <message>"``; empty means valid."""
    problems = []
    ids = [u.id for u in config.units]
    if len(set(ids)) != len(ids):
        problems.append("units: duplicate unit ids")
    for k, u in enumerate(config.units):
        loc = f"units[{k}] ({u.id})"
        if not u.cost_mean >= 0:
            problems.append(f"{loc}.cost_mean: must be >= 0")
        if not u.cost_sd >= 0:
            problems.append(f"{loc}.cost_sd: must be >= 0")
        if not u.cap_mean > 0:
            problems.append(f"{loc}.cap_mean: must be > 0")
        if not u.cap_sd >= 0:
            problems.append(f"{loc}.cap_sd: must be >= 0")
        if u.cap_sd > 0 and not u.tech.renewable:
            problems.append(f"{loc}.cap_sd: only renewable units may have uncertain capacity")
        if u.cost_sd > _NEGLIGIBLE_SD and not u.tech.fuel_cost_uncertain:
            problems.append(f"{loc}.cost_sd: only coal/gas units may have uncertain cost")
    if not config.strategic_units:
        problems.append("units: no strategic units")
    if not config.rival_units:
        problems.append("units: no rival units")
    if not config.demand_mean >= 0:
        problems.append("demand_mean: must be >= 0")
    if not config.demand_sd >= 0:
        problems.append("demand_sd: must be >= 0")
    if not config.alpha > 0:
        problems.append("alpha: must be > 0")
    if config.n_scenarios < 1:
        problems.append("n_scenarios: must be >= 1")
    if not 0 <= config.seed < 2**64:
        problems.append("seed: must be an unsigned 64-bit integer")
    grid = config.qft_grid
    if not grid:
        problems.append("qft_grid: empty")
    if any(not q >= 0 for q in grid):
        problems.append("qft_grid: values must be nonnegative")
    if any(b <= a for a, b in zip(grid, grid[1:])):
        problems.append("qft_grid: grid not increasing")
    if not 0 < config.cvar_level <= 1:
        problems.append("cvar_level: must lie in (0, 1]")
    if not 0 <= config.lambda_risk <= 1:
        problems.append("lambda_risk: must lie in [0, 1]")
    return problems


def ensure_valid(config: SystemConfig) -> SystemConfig:
    problems = validate_system(config)
    if problems:
        raise ConfigError("invalid configuration:\n  " + "\n  ".join(problems))
    return config


def load_config(path: str | Path) -> SystemConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}") from None
    return SystemConfig.from_dict(raw)


def save_config(config: SystemConfig, path: str | Path) -> None:
    Path(path).write_text(json.dumps(config.to_dict(), indent=2) + "\n")


def benchmark_config() -> SystemConfig:
    """The bundled 16-unit benchmark system."""
    text = resources.files("salesmix").joinpath("data/benchmark.json").read_text()
    return SystemConfig.from_dict(json.loads(text))


def config_digest(config: SystemConfig) -> str:
    blob = json.dumps(config.to_dict(), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()


def expected_capacity(units: Sequence[UnitSpec]) -> float:
    return sum(u.cap_mean for u in units)
