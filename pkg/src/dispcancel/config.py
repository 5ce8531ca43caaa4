"""Scenario documents: parsing with full error collection, and serialization.

A scenario is a JSON object in SI units::

    {
      "source":   {"family": "gaussian_quantum", "P": 1e6, "T0": 1e-12},
      "filters":  {"omega0": 0.0, "balanced_beta": 1e-24},
      "detector": {"eta": 1.0, "response": "gaussian", "Tg": 1e-9, "q": 1.0},
      "grid":     {"n": 262144, "dt": 6.25e-14},
      "montecarlo": {"trials": 2000, "seed": 7, "burn_margin": 0.1}
    }

``grid`` may be omitted (the smallest adequate grid is chosen) and
``montecarlo`` is only needed by the ``montecarlo`` command.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Any, List, Optional, Tuple

import numpy as np

from .errors import DispCancelError
from .filters import Detector, DispersiveFilter, FilterPair
from .montecarlo import MCConfig
from .scenario import Scenario
from .spectra import (FAMILIES, GaussianSource, JointGaussianSource, RectNoiseSource,
                      SincSource, SpectralGrid, TabulatedSource, classify_state)

__all__ = ["ConfigError", "MCSettings", "ScenarioConfig", "parse_config", "load_config",
           "serialize", "scenario_to_dict"]


class ConfigError(DispCancelError, ValueError):
    """All schema and precondition violations found in a scenario document."""

    def __init__(self, errors: List[Tuple[str, str]]):
        self.errors = list(errors)
        super().__init__("; ".join(f"{p}: {m}" for p, m in self.errors))


@dataclass(frozen=True)
class MCSettings:
    trials: int
    seed: int = 0
    burn_margin: float = 0.1


@dataclass(frozen=True)
class ScenarioConfig:
    source: JointGaussianSource
    filters: FilterPair
    detector: Detector
    grid: Optional[SpectralGrid] = None
    montecarlo: Optional[MCSettings] = None

    @property
    def scenario(self) -> Scenario:
        return Scenario(self.source, self.filters, self.detector, self.grid)

    def mc_config(self) -> MCConfig:
        if self.montecarlo is None:
            raise ConfigError([("montecarlo", "montecarlo block required for this command")])
        m = self.montecarlo
        return MCConfig(m.trials, self.scenario.resolved_grid(), m.seed, m.burn_margin)


_SOURCE_KEYS = {
    "gaussian_quantum": ({"P", "T0"}, {"pump_phase"}),
    "gaussian_classical": ({"P", "T0"}, {"pump_phase"}),
    "rect_noise": ({"P", "Omega"}, {"G", "pump_phase"}),
    "sinc_downconverter": ({"g0", "Dl"}, {"pump_phase"}),
    "custom_tabulated": ({"omega", "S_SS", "S_RR", "S_SR_re"}, {"S_SR_im", "pump_phase"}),
}
_ARM_KEYS = {"tau_p", "tau_g", "beta"}


class _Checker:
    def __init__(self):
        self.errors: List[Tuple[str, str]] = []

    def add(self, path, msg):
        self.errors.append((path, msg))

    def obj(self, doc, path, allowed, required=()):
        if not isinstance(doc, dict):
            self.add(path or "$", "expected an object")
            return None
        for k in sorted(set(doc) - set(allowed)):
            self.add(f"{path}.{k}" if path else k, "unknown key")
        ok = True
        for k in required:
            if k not in doc:
                self.add(f"{path}.{k}" if path else k, "required key missing")
                ok = False
        return doc if ok else None

    def num(self, doc, key, path, default=None, required=False, check=None, why=""):
        p = f"{path}.{key}"
        if key not in doc:
            if required:
                self.add(p, "required key missing")
            return default
        v = doc[key]
        if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
            self.add(p, f"expected a finite number, got {v!r}")
            return None
        if check is not None and not check(v):
            self.add(p, f"{why} (got {v!r})")
            return None
        return float(v)

    def integer(self, doc, key, path, default=None, required=False, check=None, why=""):
        p = f"{path}.{key}"
        if key not in doc:
            if required:
                self.add(p, "required key missing")
            return default
        v = doc[key]
        if isinstance(v, bool) or not isinstance(v, int):
            self.add(p, f"expected an integer, got {v!r}")
            return None
        if check is not None and not check(v):
            self.add(p, f"{why} (got {v!r})")
            return None
        return v

    def array(self, doc, key, path):
        v = doc.get(key)
        if not isinstance(v, list) or not all(
                isinstance(x, (int, float)) and not isinstance(x, bool) and math.isfinite(x) for x in v):
            self.add(f"{path}.{key}", "expected a list of finite numbers")
            return None
        return [float(x) for x in v]


def _positive(v):
    return v > 0


def _parse_source(c: _Checker, doc) -> Optional[JointGaussianSource]:
    if not isinstance(doc, dict):
        c.add("source", "expected an object")
        return None
    family = doc.get("family")
    if family not in FAMILIES:
        c.add("source.family", f"unknown family {family!r}; expected one of {', '.join(FAMILIES)}")
        return None
    req, opt = _SOURCE_KEYS[family]
    if c.obj(doc, "source", req | opt | {"family"}, sorted(req)) is None:
        return None
    n0 = len(c.errors)
    phase = c.num(doc, "pump_phase", "source", 0.0)
    try:
        if family.startswith("gaussian_"):
            P = c.num(doc, "P", "source", check=_positive, why="flux must be > 0")
            T0 = c.num(doc, "T0", "source", check=_positive, why="coherence time must be > 0")
            if len(c.errors) > n0:
                return None
            return GaussianSource(P, T0, family.split("_", 1)[1], phase)
        if family == "rect_noise":
            P = c.num(doc, "P", "source", check=_positive, why="flux must be > 0")
            Om = c.num(doc, "Omega", "source", check=_positive, why="bandwidth must be > 0")
            G = c.num(doc, "G", "source", 1.0, check=lambda g: g >= 1, why="gain ≥ 1 required")
            if len(c.errors) > n0:
                return None
            return RectNoiseSource(P, Om, G, phase)
        if family == "sinc_downconverter":
            g0 = c.num(doc, "g0", "source", check=_positive, why="gain amplitude must be > 0")
            Dl = c.num(doc, "Dl", "source", check=_positive, why="group-mismatch time must be > 0")
            if len(c.errors) > n0:
                return None
            return SincSource(g0, Dl, phase)
        cols = {k: c.array(doc, k, "source") for k in ("omega", "S_SS", "S_RR", "S_SR_re")}
        im = c.array(doc, "S_SR_im", "source") if "S_SR_im" in doc else None
        if len(c.errors) > n0:
            return None
        re = np.asarray(cols["S_SR_re"])
        if im is not None and len(im) != len(re):
            c.add("source.S_SR_im", "length differs from S_SR_re")
            return None
        sr = re + 1j * (np.asarray(im) if im is not None else np.zeros_like(re))
        return TabulatedSource(cols["omega"], cols["S_SS"], cols["S_RR"], sr, phase)
    except DispCancelError as exc:
        c.add("source", str(exc))
        return None


def _parse_filters(c: _Checker, doc) -> Optional[FilterPair]:
    if doc is None:
        return FilterPair()
    if c.obj(doc, "filters", {"omega0", "signal", "reference", "balanced_beta"}) is None:
        return None
    n0 = len(c.errors)
    omega0 = c.num(doc, "omega0", "filters", 0.0)
    arms = {}
    for arm in ("signal", "reference"):
        a = doc.get(arm, {})
        path = f"filters.{arm}"
        if c.obj(a, path, _ARM_KEYS) is None:
            continue
        arms[arm] = {k: c.num(a, k, path, 0.0) for k in _ARM_KEYS}
    if "balanced_beta" in doc:
        bb = c.num(doc, "balanced_beta", "filters")
        for arm in ("signal", "reference"):
            if "beta" in doc.get(arm, {}):
                c.add(f"filters.{arm}.beta", "conflicts with filters.balanced_beta")
        if bb is not None and len(arms) == 2:
            arms["signal"]["beta"] = bb
            arms["reference"]["beta"] = -bb
    if len(c.errors) > n0 or omega0 is None:
        return None
    try:
        return FilterPair(*(DispersiveFilter(arms[a]["tau_p"], arms[a]["tau_g"], arms[a]["beta"], omega0)
                            for a in ("signal", "reference")))
    except DispCancelError as exc:
        c.add("filters", str(exc))
        return None


def _parse_detector(c: _Checker, doc) -> Optional[Detector]:
    if doc is None:
        return Detector()
    if c.obj(doc, "detector", {"eta", "response", "Tg", "q"}) is None:
        return None
    n0 = len(c.errors)
    eta = c.num(doc, "eta", "detector", 1.0, check=lambda e: 0 < e <= 1, why="eta must lie in (0, 1]")
    q = c.num(doc, "q", "detector", 1.0, check=_positive, why="q must be > 0")
    response = doc.get("response", "ideal")
    Tg = None
    if response == "gaussian":
        Tg = c.num(doc, "Tg", "detector", required=True, check=_positive, why="Tg must be > 0")
    elif response == "ideal":
        if "Tg" in doc:
            c.add("detector.Tg", "ideal detector takes no Tg")
    else:
        c.add("detector.response", f"expected 'gaussian' or 'ideal', got {response!r}")
    if len(c.errors) > n0:
        return None
    return Detector(eta, response, Tg, q)


def _parse_grid(c: _Checker, doc) -> Optional[SpectralGrid]:
    if doc is None:
        return None
    if c.obj(doc, "grid", {"n", "dt"}, ("n", "dt")) is None:
        return None
    n0 = len(c.errors)
    n = c.integer(doc, "n", "grid", check=lambda v: v >= 16 and not v & (v - 1),
                  why="n must be a power of two ≥ 16")
    dt = c.num(doc, "dt", "grid", check=_positive, why="dt must be > 0")
    if len(c.errors) > n0:
        return None
    return SpectralGrid(n, dt)


def _parse_mc(c: _Checker, doc) -> Optional[MCSettings]:
    if c.obj(doc, "montecarlo", {"trials", "seed", "burn_margin"}, ("trials",)) is None:
        return None
    n0 = len(c.errors)
    trials = c.integer(doc, "trials", "montecarlo", check=lambda v: v >= 1, why="trials must be ≥ 1")
    seed = c.integer(doc, "seed", "montecarlo", 0, check=lambda v: 0 <= v < 2**64,
                     why="seed must be a 64-bit unsigned integer")
    burn = c.num(doc, "burn_margin", "montecarlo", 0.1, check=lambda b: 0 <= b <= 0.25,
                 why="burn_margin must lie in [0, 0.25]")
    if len(c.errors) > n0:
        return None
    return MCSettings(trials, seed, burn)


def parse_config(text: str) -> ScenarioConfig:
    """Parse and validate a scenario document; raises :class:`ConfigError` listing every problem."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError([("$", f"not valid JSON: {exc}")]) from None
    c = _Checker()
    if c.obj(doc, "", {"source", "filters", "detector", "grid", "montecarlo"}, ("source",)) is None:
        raise ConfigError(c.errors)
    source = _parse_source(c, doc["source"])
    filters = _parse_filters(c, doc.get("filters"))
    detector = _parse_detector(c, doc.get("detector"))
    grid = _parse_grid(c, doc.get("grid"))
    mc = _parse_mc(c, doc["montecarlo"]) if "montecarlo" in doc else None

    if mc is not None and source is not None and detector is not None:
        # semiclassical gate, checked up front
        try:
            g = grid or Scenario(source, detector=detector).resolved_grid()
            cls = classify_state(source, g)
        except DispCancelError:
            cls = None  # numeric problems surface when the command runs
        if cls is not None and not cls.is_classical:
            c.add("montecarlo", f"semiclassical gate: source is {cls.label}; "
                                f"Monte Carlo requires a classical state")
    if c.errors:
        raise ConfigError(c.errors)
    return ScenarioConfig(source, filters, detector, grid, mc)


def load_config(path) -> ScenarioConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())


def scenario_to_dict(source: JointGaussianSource, filters: FilterPair, detector: Detector,
                     grid: Optional[SpectralGrid], montecarlo: Optional[MCSettings] = None) -> dict:
    src = {"family": source.family, **source.params()}
    if source.pump_phase:
        src["pump_phase"] = source.pump_phase
    out: dict[str, Any] = {
        "source": src,
        "filters": {
            "omega0": filters.signal.omega0,
            "signal": {"tau_p": filters.signal.tau_p, "tau_g": filters.signal.tau_g,
                       "beta": filters.signal.beta},
            "reference": {"tau_p": filters.reference.tau_p, "tau_g": filters.reference.tau_g,
                          "beta": filters.reference.beta},
        },
        "detector": {"eta": detector.eta, "response": detector.response, "q": detector.q},
    }
    if not detector.is_ideal:
        out["detector"]["Tg"] = detector.Tg
    if grid is not None:
        out["grid"] = {"n": grid.n, "dt": grid.dt}
    if montecarlo is not None:
        out["montecarlo"] = {"trials": montecarlo.trials, "seed": montecarlo.seed,
                             "burn_margin": montecarlo.burn_margin}
    return out


def serialize(config: ScenarioConfig) -> str:
    d = scenario_to_dict(config.source, config.filters, config.detector, config.grid,
                         config.montecarlo)
    return json.dumps(d, indent=2)
