"""Command line: ``dispcancel {analyze,montecarlo,bounds,sweep} --config FILE --out DIR``.

Exit codes: 0 success, 2 validation error (schema, domain, semiclassical
gate, empty sweep), 3 numeric-configuration error (grid resolution,
degenerate or width-undefined results).  Errors go to stderr as one JSON
object per line with ``path`` and ``message`` keys.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import List, Optional

from .analytic import (contrast, cross_correlation, dispersion_sweep, gain_sweep,
                       signature_width)
from .config import ConfigError, ScenarioConfig, load_config, scenario_to_dict
from .errors import (ConfigurationError, DegenerateSourceError, DispCancelError, DomainError,
                     SemiclassicalError, WidthUndefinedError)
from .montecarlo import mc_run
from .report import ReportRecord, write_sweep_csv, write_trace_csv
from .spectra import RectNoiseSource, classify_state

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_NUMERIC = 3


def _emit(path: str, message: str, kind: str) -> None:
    sys.stderr.write(json.dumps({"error": kind, "path": path, "message": message}) + "\n")


def _scenario_dict(cfg: ScenarioConfig, grid) -> dict:
    return scenario_to_dict(cfg.source, cfg.filters, cfg.detector, grid, cfg.montecarlo)


def _classification(cfg: ScenarioConfig, grid) -> Optional[dict]:
    try:
        c = classify_state(cfg.source, grid)
    except ConfigurationError:
        return None
    return {"label": c.label, "worst_margin": c.worst_margin, "worst_omega": c.worst_omega}


def cmd_analyze(cfg: ScenarioConfig, out: Path) -> ReportRecord:
    sc = cfg.scenario
    grid = sc.resolved_grid()
    r = cross_correlation(sc.source, sc.filters, sc.detector, grid)
    try:
        con = contrast(r)
    except DegenerateSourceError:
        con = None
    try:
        width = signature_width(r)
    except WidthUndefinedError:
        width = None
    trace = write_trace_csv(out / "trace.csv", r.tau, r.C, r.C_acc)
    rec = ReportRecord.new("analyze", _scenario_dict(cfg, grid),
                           classification=_classification(cfg, grid),
                           C_acc=r.C_acc, contrast=con, fwhm_s=width, traces=[trace.name])
    rec.write(out / "report.json")
    return rec


def cmd_montecarlo(cfg: ScenarioConfig, out: Path) -> ReportRecord:
    mc = cfg.mc_config()
    est, rec = mc_run(mc, cfg.scenario)
    trace = write_trace_csv(out / "mc_trace.csv", est.tau, est.C, est.accidentals(), est.stderr)
    rec.traces.append(trace.name)
    rec.write(out / "report.json")
    return rec


def cmd_bounds(cfg: ScenarioConfig, out: Path) -> ReportRecord:
    grid = cfg.scenario.resolved_grid()
    c = classify_state(cfg.source, grid)
    rec = ReportRecord.new("bounds", _scenario_dict(cfg, grid),
                           classification={"label": c.label, "worst_margin": c.worst_margin,
                                           "worst_omega": c.worst_omega,
                                           "quantum_margin": c.quantum_margin,
                                           "classical_margin": c.classical_margin})
    rec.write(out / "report.json")
    return rec


def cmd_sweep(cfg: ScenarioConfig, out: Path, param: str, values: List[float]) -> ReportRecord:
    if not values:
        raise ConfigError([("--values", "at least one value required")])
    sc = cfg.scenario
    if param == "gain":
        src = cfg.source
        if not isinstance(src, RectNoiseSource):
            raise ConfigError([("--sweep-param", "gain sweep needs a rect_noise source")])
        if any(v < 1 for v in values):
            raise ConfigError([("--values", "gain ≥ 1 required")])
        grid = cfg.grid
        table = gain_sweep(src.P, src.Omega, values, grid=grid,
                           q=cfg.detector.q, eta=cfg.detector.eta)
    else:
        bs, br = cfg.filters.signal.beta, cfg.filters.reference.beta
        if param == "beta":
            pairs = [(v, 0.0 - v) for v in values]
        elif param == "beta_s":
            pairs = [(v, br) for v in values]
        else:
            pairs = [(bs, v) for v in values]
        grid = sc.resolved_grid()
        table = dispersion_sweep(sc, pairs)
    f = write_sweep_csv(out / "sweep.csv", table)
    rec = ReportRecord.new("sweep", _scenario_dict(cfg, grid), traces=[f.name],
                           extra={"sweep_param": param, "values": list(values)})
    rec.write(out / "report.json")
    return rec


def _values(raw: Optional[str]) -> List[float]:
    if raw is None or not raw.strip():
        return []
    try:
        return [float(v) for v in raw.split(",") if v.strip()]
    except ValueError:
        raise ConfigError([("--values", f"expected comma-separated numbers, got {raw!r}")])


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="dispcancel", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    for name, helptext in (("analyze", "analytic C(τ), contrast and width"),
                           ("montecarlo", "semiclassical Monte Carlo estimate of C(τ)"),
                           ("bounds", "classify the source against the cross-spectrum bounds"),
                           ("sweep", "dispersion or gain sweep")):
        s = sub.add_parser(name, help=helptext)
        s.add_argument("--config", required=True, type=Path, help="scenario JSON file")
        s.add_argument("--out", type=Path, default=Path("."), help="output directory")
        if name == "sweep":
            s.add_argument("--sweep-param", required=True,
                           choices=("beta", "beta_s", "beta_r", "gain"),
                           help="beta: balanced β_S = -β_R = value; beta_s/beta_r: one arm; "
                                "gain: rect_noise amplifier gain")
            s.add_argument("--values", default="", help="comma-separated values")
    return p


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        out: Path = args.out
        out.mkdir(parents=True, exist_ok=True)
        if args.command == "analyze":
            rec = cmd_analyze(cfg, out)
        elif args.command == "montecarlo":
            rec = cmd_montecarlo(cfg, out)
        elif args.command == "bounds":
            rec = cmd_bounds(cfg, out)
        else:
            rec = cmd_sweep(cfg, out, args.sweep_param, _values(args.values))
    except ConfigError as exc:
        for path, msg in exc.errors:
            _emit(path, msg, "validation")
        return EXIT_VALIDATION
    except SemiclassicalError as exc:
        _emit("montecarlo", str(exc), "validation")
        return EXIT_VALIDATION
    except OSError as exc:
        _emit("--config", str(exc), "validation")
        return EXIT_VALIDATION
    except DomainError as exc:
        _emit("$", str(exc), "validation")
        return EXIT_VALIDATION
    except DispCancelError as exc:
        _emit("$", str(exc), "numeric")
        return EXIT_NUMERIC
    summary = {k: rec.to_dict()[k] for k in ("command", "scenario_hash", "contrast", "fwhm_s",
                                             "traces")}
    if rec.classification:
        summary["label"] = rec.classification.get("label")
    print(json.dumps(summary))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
