"""Seeded Monte Carlo scenario generation and CSV persistence.

Every stochastic quantity gets its own random stream keyed by ``(seed, label)``,
so changing the number of scenarios, the unit order, or one variability factor
leaves the other quantities' standard-normal draws untouched. That gives common
random numbers across sensitivity runs for free.

All wind units, strategic and rival alike, share one standard-normal deviate
per scenario (perfect correlation). Negative draws are truncated at zero.
"""

from __future__ import annotations

import csv
import json
import math
import zlib
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ScenarioFormatError
from .model import SystemConfig, TechnologyKind, config_digest, ensure_valid


@dataclass(frozen=True)
class VariabilityFactors:
    """Multipliers applied to the standard deviations of each uncertainty source."""

    demand: float = 1.0
    renewables: float = 1.0
    costs: float = 1.0

    def __post_init__(self):
        for name in ("demand", "renewables", "costs"):
            v = getattr(self, name)
            if not (v > 0 and math.isfinite(v)):
                raise ValueError(f"variability factor {name!r} must be positive, got {v}")

    def to_dict(self) -> dict:
        return {"demand": self.demand, "renewables": self.renewables, "costs": self.costs}


@dataclass(frozen=True)
class Scenario:
    """One joint realization. ``capacity`` and ``cost`` follow ``unit_ids`` order."""

    index: int
    probability: float
    demand: float
    unit_ids: tuple[str, ...]
    strategic: tuple[bool, ...]
    capacity: tuple[float, ...]
    cost: tuple[float, ...]

    @property
    def strategic_capacity(self) -> float:
        return math.fsum(q for q, s in zip(self.capacity, self.strategic) if s)

    @property
    def total_capacity(self) -> float:
        return math.fsum(self.capacity)

    def strategic_indices(self) -> list[int]:
        return [k for k, s in enumerate(self.strategic) if s]


@dataclass(frozen=True)
class Provenance:
    seed: int
    config_digest: str
    factors: VariabilityFactors

    def to_dict(self) -> dict:
        return {"seed": self.seed, "config_digest": self.config_digest, "factors": self.factors.to_dict()}


@dataclass(frozen=True)
class ScenarioSet:
    scenarios: tuple[Scenario, ...]
    provenance: Provenance | None = None

    def __len__(self):
        return len(self.scenarios)

    def __iter__(self):
        return iter(self.scenarios)

    def __getitem__(self, k):
        return self.scenarios[k]

    @property
    def probabilities(self) -> list[float]:
        return [s.probability for s in self.scenarios]


def _stream(seed: int, label: str) -> np.random.Generator:
    key = zlib.crc32(label.encode())
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(key,)))


def _draw(seed, label, n):
    return _stream(seed, label).standard_normal(n)


def generate_scenarios(config: SystemConfig, factors: VariabilityFactors | None = None) -> ScenarioSet:
    ensure_valid(config)
    factors = factors or VariabilityFactors()
    n, seed = config.n_scenarios, config.seed

    demand = np.maximum(config.demand_mean + config.demand_sd * factors.demand * _draw(seed, "demand", n), 0.0)
    wind_z = _draw(seed, "wind", n)

    caps, costs = [], []
    for u in config.units:
        if u.tech is TechnologyKind.WIND:
            z = wind_z
        elif u.tech.renewable:
            z = _draw(seed, f"capacity:{u.id}", n)
        else:
            z = None
        if z is None or u.cap_sd == 0:
            caps.append(np.full(n, u.cap_mean))
        else:
            caps.append(np.maximum(u.cap_mean + u.cap_sd * factors.renewables * z, 0.0))

        if u.tech.fuel_cost_uncertain and u.cost_sd > 0:
            z = _draw(seed, f"cost:{u.id}", n)
            costs.append(np.maximum(u.cost_mean + u.cost_sd * factors.costs * z, 0.0))
        else:
            costs.append(np.full(n, u.cost_mean))

    ids = tuple(u.id for u in config.units)
    strategic = tuple(u.strategic for u in config.units)
    prob = 1.0 / n
    scenarios = tuple(
        Scenario(
            index=w,
            probability=prob,
            demand=float(demand[w]),
            unit_ids=ids,
            strategic=strategic,
            capacity=tuple(float(c[w]) for c in caps),
            cost=tuple(float(c[w]) for c in costs),
        )
        for w in range(n)
    )
    return ScenarioSet(scenarios, Provenance(seed, config_digest(config), factors))


def mean_value_scenario(config: SystemConfig) -> Scenario:
    ensure_valid(config)
    return Scenario(
        index=0,
        probability=1.0,
        demand=config.demand_mean,
        unit_ids=tuple(u.id for u in config.units),
        strategic=tuple(u.strategic for u in config.units),
        capacity=tuple(u.cap_mean for u in config.units),
        cost=tuple(u.cost_mean for u in config.units),
    )


def deterministic_set(config: SystemConfig) -> ScenarioSet:
    """Singleton set holding the mean-value scenario."""
    return ScenarioSet((mean_value_scenario(config),), None)


def _meta_path(path: Path) -> Path:
    return path.with_name(path.name + ".meta.json")


def save_scenarios(scenario_set: ScenarioSet, path: str | Path) -> None:
    """Write the CSV plus a ``<name>.meta.json`` sidecar with provenance and ownership."""
    path = Path(path)
    first = scenario_set[0]
    ids = first.unit_ids
    header = ["omega", "prob", "demand"] + [f"Q_{i}" for i in ids] + [f"c_{i}" for i in ids]
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for s in scenario_set:
            w.writerow([s.index, repr(s.probability), repr(s.demand)]
                       + [repr(q) for q in s.capacity] + [repr(c) for c in s.cost])
    meta = {
        "unit_ids": list(ids),
        "strategic": list(first.strategic),
        "provenance": scenario_set.provenance.to_dict() if scenario_set.provenance else None,
    }
    _meta_path(path).write_text(json.dumps(meta, indent=2) + "\n")


def load_scenarios(path: str | Path, config: SystemConfig | None = None) -> ScenarioSet:
    """Read a scenario CSV.

    Unit ownership comes from ``config`` when given, otherwise from the sidecar.
    Raises ScenarioFormatError with the offending row/column on bad content.
    """
    path = Path(path)
    meta = {}
    if _meta_path(path).exists():
        try:
            meta = json.loads(_meta_path(path).read_text())
        except json.JSONDecodeError as exc:
            raise ScenarioFormatError(f"bad metadata sidecar: {exc.msg}") from None

    with path.open(newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ScenarioFormatError("empty scenario file", row=1)
    header = rows[0]
    if header[:3] != ["omega", "prob", "demand"]:
        raise ScenarioFormatError("header must start with omega,prob,demand", row=1)
    body = header[3:]
    if len(body) % 2:
        raise ScenarioFormatError("unbalanced Q_/c_ columns", row=1)
    half = len(body) // 2
    ids = []
    for k in range(half):
        qcol, ccol = body[k], body[half + k]
        if not qcol.startswith("Q_") or ccol != "c_" + qcol[2:]:
            raise ScenarioFormatError("expected matching Q_<id>/c_<id> columns", row=1, column=qcol)
        ids.append(qcol[2:])
    ids = tuple(ids)

    if config is not None:
        owner = {u.id: u.strategic for u in config.units}
        missing = [i for i in ids if i not in owner]
        if missing or len(ids) != len(config.units):
            raise ScenarioFormatError(f"unit columns do not match config units (unknown: {missing})", row=1)
        strategic = tuple(owner[i] for i in ids)
    elif "strategic" in meta:
        strategic = tuple(bool(s) for s in meta["strategic"])
        if tuple(meta.get("unit_ids", ())) != ids:
            raise ScenarioFormatError("sidecar unit ids do not match header", row=1)
    else:
        raise ScenarioFormatError("unit ownership unknown: pass a config or keep the sidecar file")

    scenarios = []
    for r, row in enumerate(rows[1:], start=2):
        if len(row) != len(header):
            raise ScenarioFormatError(f"expected {len(header)} fields, got {len(row)}", row=r)
        vals = []
        for col, cell in zip(header, row):
            try:
                v = float(cell)
            except ValueError:
                raise ScenarioFormatError(f"not a number: {cell!r}", row=r, column=col) from None
            if not math.isfinite(v):
                raise ScenarioFormatError("non-finite value", row=r, column=col)
            if v < 0:
                raise ScenarioFormatError("negative value", row=r, column=col)
            vals.append(v)
        omega = int(vals[0])
        if omega != r - 2:
            raise ScenarioFormatError(f"omega must be contiguous from 0, got {row[0]}", row=r, column="omega")
        scenarios.append(Scenario(
            index=omega,
            probability=vals[1],
            demand=vals[2],
            unit_ids=ids,
            strategic=strategic,
            capacity=tuple(vals[3:3 + half]),
            cost=tuple(vals[3 + half:]),
        ))
    if not scenarios:
        raise ScenarioFormatError("no scenario rows", row=2)
    total = math.fsum(s.probability for s in scenarios)
    if abs(total - 1.0) > 1e-9:
        raise ScenarioFormatError(f"probabilities sum to {total}, not 1", column="prob")

    prov = None
    if meta.get("provenance"):
        p = meta["provenance"]
        prov = Provenance(int(p["seed"]), p["config_digest"], VariabilityFactors(**p["factors"]))
    return ScenarioSet(tuple(scenarios), prov)
