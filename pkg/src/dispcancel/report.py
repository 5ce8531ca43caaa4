"""Result records and CSV/JSON output."""

from __future__ import annotations

import datetime as _dt
import hashlib
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, List, Optional

import numpy as np

from . import __version__

TRACE_COLUMNS = ("tau_s", "C", "C_acc", "C_dc")
SWEEP_COLUMNS = ("value", "beta_s", "beta_r", "contrast", "fwhm_s", "c_acc", "peak_c_dc", "label")


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, str):
        return x
    return "%.17g" % x


def scenario_hash(scenario_dict: dict) -> str:
    blob = json.dumps(scenario_dict, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()


def write_trace_csv(path, tau, C, C_acc, stderr=None) -> Path:
    """Columns ``tau_s,C,C_acc,C_dc`` (plus ``stderr`` for Monte Carlo), 17 significant digits."""
    path = Path(path)
    cols = list(TRACE_COLUMNS) + (["stderr"] if stderr is not None else [])
    C = np.asarray(C, dtype=float)
    data = [np.asarray(tau, dtype=float), C, np.full_like(C, C_acc), C - C_acc]
    if stderr is not None:
        data.append(np.asarray(stderr, dtype=float))
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(cols) + "\n")
        np.savetxt(fh, np.column_stack(data), fmt="%.17g", delimiter=",")
    return path


def write_sweep_csv(path, table) -> Path:
    path = Path(path)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(SWEEP_COLUMNS) + "\n")
        for r in table.rows:
            vals = (r.value, r.beta_s, r.beta_r, r.contrast, r.fwhm, r.c_acc, r.peak_dc, r.label)
            fh.write(",".join(_fmt(v) for v in vals) + "\n")
    return path


def _clean(x):
    if isinstance(x, float) and not np.isfinite(x):
        return None
    if isinstance(x, (np.floating, np.integer)):
        return _clean(x.item())
    if isinstance(x, dict):
        return {k: _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    return x


@dataclass
class ReportRecord:
    command: str
    scenario: dict
    scenario_hash: str
    classification: Optional[dict] = None
    C_acc: Optional[float] = None
    contrast: Optional[float] = None
    fwhm_s: Optional[float] = None
    traces: List[str] = field(default_factory=list)
    seed: Optional[int] = None
    extra: dict = field(default_factory=dict)
    tool_version: str = __version__
    timestamp: str = field(
        default_factory=lambda: _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds"))

    @classmethod
    def new(cls, command: str, scenario_dict: dict, **kw) -> "ReportRecord":
        return cls(command, scenario_dict, scenario_hash(scenario_dict), **kw)

    @classmethod
    def for_montecarlo(cls, scenario, config, est) -> "ReportRecord":
        from .analytic import contrast, signature_width
        from .config import MCSettings, scenario_to_dict
        from .errors import DispCancelError

        sd = scenario_to_dict(scenario.source, scenario.filters, scenario.detector, config.grid,
                              MCSettings(config.trials, config.seed, config.burn_margin))
        res = est.as_result()
        try:
            width = signature_width(res)
        except DispCancelError:
            width = None
        try:
            con = contrast(res)
        except DispCancelError:
            con = None
        return cls.new("montecarlo", sd, C_acc=res.C_acc, contrast=con, fwhm_s=width,
                       seed=int(config.seed), classification={"label": est.metadata.get("state")},
                       extra={"trials": est.trials, **est.metadata})

    def to_dict(self) -> dict:
        return _clean(asdict(self))

    def write(self, path) -> Path:
        path = Path(path)
        path.write_text(json.dumps(self.to_dict(), indent=2) + "\n", encoding="utf-8")
        return path
