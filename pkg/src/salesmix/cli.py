"""Command-line front end: ``generate``, ``sweep``, ``sensitivity``, ``report``, ``rerun``.

Exit codes: 0 ok, 2 configuration error, 3 infeasible run, 4 I/O or file-format error.
Every command writes ``manifest.json`` next to its outputs; ``rerun`` replays one.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import logging
import os
import sys
from datetime import datetime, timezone
from pathlib import Path

from . import __version__
from .errors import ConfigError, InfeasibleError, ParameterError, ScenarioFormatError, SalesMixError
from .model import SystemConfig, benchmark_config, config_digest, ensure_valid, load_config
from .risk import select_optimal
from .scenario import VariabilityFactors, generate_scenarios, load_scenarios, save_scenarios
from .sweep import read_frontier_csv, run_sweep, write_detail_csv, write_frontier_csv

log = logging.getLogger("salesmix")

EXIT_OK, EXIT_CONFIG, EXIT_INFEASIBLE, EXIT_IO = 0, 2, 3, 4
SENSITIVITY_TARGETS = ("demand", "renewables", "costs")


def _config_from_args(args) -> SystemConfig:
    if getattr(args, "config_dict", None) is not None:
        config = SystemConfig.from_dict(args.config_dict)
    elif args.config:
        config = load_config(args.config)
    else:
        config = benchmark_config()
    changes = {}
    for flag, name in (("seed", "seed"), ("alpha", "alpha"), ("beta", "cvar_level"), ("lam", "lambda_risk")):
        v = getattr(args, flag, None)
        if v is not None:
            changes[name] = v
    if changes:
        config = config.replace(**changes)
    return ensure_valid(config)


def _factors_from_args(args) -> VariabilityFactors:
    try:
        return VariabilityFactors(args.demand_factor, args.renewables_factor, args.costs_factor)
    except ValueError as exc:
        raise ParameterError(str(exc)) from None


def _sha256(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _manifest(command, args, config, factors=None, **extra) -> dict:
    m = {
        "command": command,
        "tool_version": __version__,
        "timestamp": datetime.now(timezone.utc).isoformat(timespec="seconds"),
        "config_path": str(args.config) if getattr(args, "config", None) else None,
        "config": config.to_dict(),
        "config_digest": config_digest(config),
        "seed": config.seed,
        "factors": factors.to_dict() if factors else None,
        "output_dir": str(args.out),
        "threads": getattr(args, "threads", None),
    }
    m.update(extra)
    return m


def _write_text(path: Path, text: str) -> None:
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text)
    os.replace(tmp, path)


def _write_with(path: Path, writer, *a) -> None:
    tmp = path.with_name(path.name + ".tmp")
    writer(*a, tmp)
    os.replace(tmp, path)


def _table(rows) -> str:
    head = (f"{'qft':>8} {'E[profit]':>12} {'CVaR':>11} {'pf':>7} {'E[p_s]':>7} "
            f"{'nuc_s':>8} {'nuc_f':>8} {'ren_s':>8} {'ren_f':>8} {'conv_s':>8} {'conv_f':>8}")
    lines = [head]
    for r in rows:
        if r.infeasible:
            lines.append(f"{r.qft:8.0f}  infeasible")
            continue
        m = r.mix
        lines.append(
            f"{r.qft:8.0f} {r.expected_profit:12.2f} {r.cvar_profit:11.2f} {r.pf:7.2f} {r.expected_spot_price:7.2f} "
            f"{m['nuclear']['spot']:8.2f} {m['nuclear']['futures']:8.2f} "
            f"{m['renewables']['spot']:8.2f} {m['renewables']['futures']:8.2f} "
            f"{m['conventional']['spot']:8.2f} {m['conventional']['futures']:8.2f}"
        )
    return "\n".join(lines) + "\n"


def _plot_csv(rows, path: Path) -> None:
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["qft", "x_cvar_profit", "y_exp_profit"])
        for r in rows:
            if not r.infeasible:
                w.writerow([repr(r.qft), repr(r.cvar_profit), repr(r.expected_profit)])


def cmd_generate(args) -> int:
    config = _config_from_args(args)
    factors = _factors_from_args(args)
    scen = generate_scenarios(config, factors)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    target = out / "scenarios.csv"
    save_scenarios(scen, target)
    _write_text(out / "manifest.json", json.dumps(_manifest("generate", args, config, factors,
                                                            scenarios_sha256=_sha256(target)), indent=2) + "\n")
    print(f"wrote {len(scen)} scenarios to {target}")
    return EXIT_OK


def _sweep_into(out: Path, config, scen, args, name="frontier.csv"):
    frontier = run_sweep(config, scen, threads=args.threads)
    _write_with(out / name, write_frontier_csv, frontier)
    return frontier


def cmd_sweep(args) -> int:
    config = _config_from_args(args)
    if args.scenarios:
        scen = load_scenarios(args.scenarios, config)
        factors = scen.provenance.factors if scen.provenance else None
    else:
        factors = _factors_from_args(args)
        scen = generate_scenarios(config, factors)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    frontier = _sweep_into(out, config, scen, args)
    rows = read_frontier_csv(out / "frontier.csv")
    if args.detail:
        _write_with(out / "detail.csv", write_detail_csv, frontier, scen)
    _plot_csv(rows, out / "frontier_plot.csv")
    extra = {"scenarios_path": str(args.scenarios) if args.scenarios else None,
             "scenarios_sha256": _sha256(args.scenarios) if args.scenarios else None,
             "detail": bool(args.detail)}
    _write_text(out / "manifest.json", json.dumps(_manifest("sweep", args, config, factors, **extra), indent=2) + "\n")
    sys.stdout.write(_table(rows))
    return _finish(rows, config.lambda_risk if args.lam is None else args.lam)


def _finish(rows, lam) -> int:
    if any(r.infeasible for r in rows):
        print(f"{sum(r.infeasible for r in rows)} grid point(s) infeasible", file=sys.stderr)
        if all(r.infeasible for r in rows):
            return EXIT_INFEASIBLE
    best = select_optimal(rows, lam)
    print(f"selected (lambda={lam:g}): qft={best.qft:g} E[profit]={best.expected_profit:.2f} CVaR={best.cvar_profit:.2f}")
    return EXIT_INFEASIBLE if any(r.infeasible for r in rows) else EXIT_OK


def _factor_label(f: float) -> str:
    return f"{f:g}"


def cmd_sensitivity(args) -> int:
    config = _config_from_args(args)
    try:
        levels = [float(x) for x in args.factors.split(",")]
    except ValueError:
        raise ParameterError(f"bad --factors {args.factors!r}") from None
    base = _factors_from_args(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    files = []
    for f in levels:
        try:
            factors = VariabilityFactors(**{**base.to_dict(), args.target: f})
        except ValueError as exc:
            raise ParameterError(str(exc)) from None
        name = f"frontier_{args.target}_{_factor_label(f)}.csv"
        _sweep_into(out, config, generate_scenarios(config, factors), args, name)
        files.append(name)
        print(f"wrote {out / name}")
    _write_text(out / "manifest.json", json.dumps(
        _manifest("sensitivity", args, config, base, target=args.target, levels=levels, files=files), indent=2) + "\n")
    return EXIT_OK


def cmd_report(args) -> int:
    from . import plotting

    out = Path(args.out)
    tables = {}
    for p in args.frontiers:
        tables[Path(p).stem] = read_frontier_csv(p)
    out.mkdir(parents=True, exist_ok=True)
    label, rows = next(iter(tables.items()))
    text = _table(rows)
    _write_text(out / "table.txt", text)
    _plot_csv(rows, out / "frontier_plot.csv")
    feasible = [r for r in rows if not r.infeasible]
    best = select_optimal(rows, args.lam) if feasible else None
    figures = [plotting.plot_frontier(tables, out / "frontier.png", highlight=best)]
    if feasible:
        figures.append(plotting.plot_prices(rows, out / "prices.png"))
        figures.append(plotting.plot_mix(rows, out / "mix.png"))
    if args.detail:
        with open(args.detail, newline="") as fh:
            detail = list(csv.DictReader(fh))
        figures.append(plotting.plot_profit_violins(detail, out / "profit_violin.png",
                                                    {r.qft: r.cvar_profit for r in feasible}))
    _write_text(out / "manifest.json", json.dumps({
        "command": "report",
        "tool_version": __version__,
        "timestamp": datetime.now(timezone.utc).isoformat(timespec="seconds"),
        "inputs": {str(p): _sha256(p) for p in args.frontiers},
        "detail": str(args.detail) if args.detail else None,
        "lambda": args.lam,
        "output_dir": str(out),
        "figures": [f.name for f in figures],
    }, indent=2) + "\n")
    sys.stdout.write(text)
    if best is not None:
        print(f"selected (lambda={args.lam:g}): qft={best.qft:g} "
              f"E[profit]={best.expected_profit:.2f} CVaR={best.cvar_profit:.2f}")
    return EXIT_OK


def cmd_rerun(args) -> int:
    """Replay the run recorded in a manifest, with the embedded configuration."""
    try:
        m = json.loads(Path(args.manifest).read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"bad manifest: {exc.msg}") from None
    command = m.get("command")
    if command not in ("generate", "sweep", "sensitivity"):
        raise ConfigError(f"manifest command {command!r} cannot be replayed")
    f = m.get("factors") or {}
    ns = argparse.Namespace(
        config=m.get("config_path"),
        config_dict=m["config"],
        seed=None, alpha=None, beta=None, lam=None,
        demand_factor=f.get("demand", 1.0),
        renewables_factor=f.get("renewables", 1.0),
        costs_factor=f.get("costs", 1.0),
        out=args.out or m["output_dir"],
        threads=args.threads or m.get("threads") or 1,
        scenarios=m.get("scenarios_path"),
        detail=m.get("detail", False),
        target=m.get("target"),
        factors=",".join(repr(x) for x in m.get("levels", [])),
    )
    if command == "sweep" and ns.scenarios and m.get("scenarios_sha256") != _sha256(ns.scenarios):
        raise ConfigError(f"scenario file {ns.scenarios} changed since the manifest was written")
    return {"generate": cmd_generate, "sweep": cmd_sweep, "sensitivity": cmd_sensitivity}[command](ns)


def _common(p, factors=True):
    p.add_argument("--config", type=Path, help="system config JSON (default: bundled benchmark)")
    p.add_argument("--seed", type=int)
    p.add_argument("--out", type=Path, required=True)
    if factors:
        p.add_argument("--demand-factor", type=float, default=1.0)
        p.add_argument("--renewables-factor", type=float, default=1.0)
        p.add_argument("--costs-factor", type=float, default=1.0)


def _run_flags(p):
    p.add_argument("--alpha", type=float)
    p.add_argument("--beta", type=float, help="CVaR level")
    p.add_argument("--lambda", dest="lam", type=float, help="weight on expected profit when selecting")
    p.add_argument("--threads", type=int, default=1)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="salesmix", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=__version__)
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="generate a scenario CSV")
    _common(p)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("sweep", help="solve the futures grid and write frontier.csv")
    _common(p)
    _run_flags(p)
    p.add_argument("--scenarios", type=Path, help="scenario CSV (default: generate from the config seed)")
    p.add_argument("--detail", action="store_true", help="also write per-scenario detail.csv")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("sensitivity", help="one frontier per variability factor")
    _common(p)
    _run_flags(p)
    p.add_argument("--target", choices=SENSITIVITY_TARGETS, required=True)
    p.add_argument("--factors", default="0.8,1.0,1.2")
    p.set_defaults(func=cmd_sensitivity)

    p = sub.add_parser("report", help="tables and figures from frontier CSVs")
    p.add_argument("frontiers", nargs="+", type=Path)
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--detail", type=Path, help="detail.csv for profit violins")
    p.add_argument("--lambda", dest="lam", type=float, default=0.5)
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("rerun", help="replay a run from its manifest.json")
    p.add_argument("manifest", type=Path)
    p.add_argument("--out", type=Path)
    p.add_argument("--threads", type=int)
    p.set_defaults(func=cmd_rerun)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ConfigError, ParameterError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except InfeasibleError as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (OSError, ScenarioFormatError) as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except SalesMixError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
