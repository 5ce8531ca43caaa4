"""Semiclassical Monte Carlo of the photocurrent cross correlation.

Only classical states are sampled: each trial synthesizes a periodic pair of
jointly Gaussian complex fields, filters them, draws Poisson detection
events with rate ``η|E(t)|²`` per detector and time-averages the product of
the two photocurrents.

Random streams: trial ``k`` of master seed ``s`` uses Philox generators
keyed by ``SeedSequence(s, spawn_key=(k, stream))`` with ``stream`` 0 for the
fields, 1 for the signal detector and 2 for the reference detector, so
results never depend on trial order or on the number of worker threads.
"""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import List, Optional, Tuple, Union

import numpy as np

from .analytic import CrossCorrResult, _threads, check_grid
from .errors import ConfigurationError, DomainError, FactorizationError, SemiclassicalError
from .filters import Detector, FilterPair, filter_response
from .scenario import Scenario
from .spectra import (JointGaussianSource, SampledSpectra, SpectralGrid,
                      classify_spectra, classify_state)

__all__ = [
    "MCConfig",
    "FieldRealization",
    "EventTrain",
    "MCEstimate",
    "trial_rng",
    "synthesize_fields",
    "apply_filter",
    "detect",
    "photocurrent",
    "estimate_C",
    "mc_run",
]

MAX_RATE_DT = 0.1
MIN_EVENTS = 10
BLOCK = 32  # trials per accumulation block; fixed so sums never depend on threading
_PSD_SLACK = 1e-10


@dataclass(frozen=True)
class MCConfig:
    trials: int
    grid: SpectralGrid
    seed: int = 0
    burn_margin: float = 0.1

    def __post_init__(self):
        if isinstance(self.trials, bool) or not isinstance(self.trials, (int, np.integer)) or self.trials < 1:
            raise DomainError(f"trials must be a positive integer, got {self.trials!r}")
        if not (0.0 <= self.burn_margin <= 0.25):
            raise DomainError(f"burn_margin must lie in [0, 0.25], got {self.burn_margin!r}")
        if not (0 <= int(self.seed) < 2**64):
            raise DomainError("seed must be a 64-bit unsigned integer")


@dataclass(frozen=True, eq=False)
class FieldRealization:
    """Complex baseband fields sampled at ``t_j = j dt``, ``j = 0..n-1`` (√(photons/s))."""

    E_S: np.ndarray
    E_R: np.ndarray


@dataclass(frozen=True, eq=False)
class EventTrain:
    times: np.ndarray
    detector: str = "S"
    trial: int = 0

    def __len__(self):
        return int(self.times.size)


@dataclass(frozen=True, eq=False)
class MCEstimate:
    grid: SpectralGrid
    tau: np.ndarray
    C: np.ndarray
    stderr: np.ndarray
    trials: int
    metadata: dict = field(default_factory=dict)

    def accidentals(self) -> float:
        """Accidentals level estimated from the flat wings ``T/8 <= |τ| <= T/4``."""
        wings = np.abs(self.tau) >= self.grid.T / 8
        return float(np.mean(self.C[wings]))

    def as_result(self, C_acc: Optional[float] = None) -> CrossCorrResult:
        acc = self.accidentals() if C_acc is None else C_acc
        return CrossCorrResult(self.grid, self.tau, self.C, acc, dict(self.metadata))


def trial_rng(seed: int, trial: int, stream: int = 0) -> np.random.Generator:
    ss = np.random.SeedSequence(int(seed), spawn_key=(int(trial), int(stream)))
    return np.random.Generator(np.random.Philox(ss))


# ---------------------------------------------------------------------------
# field synthesis
# ---------------------------------------------------------------------------


class _Synthesizer:
    """Per-bin Cholesky factors for circular spectral synthesis.

    With ``E_S(t) = Σ_k a_k exp(iω_k t)`` and ``E_R(t) = Σ_k b_k exp(iω_k t)``
    the pair ``(a_k, conj(b_{-k}))`` has Hermitian covariance
    ``[[S_SS(ω_k), S_SR(-ω_k)], [c.c., S_RR(-ω_k)]] / T``, which reproduces the
    source correlation functions exactly on the periodic domain.
    """

    def __init__(self, spectra: SampledSpectra):
        g = spectra.grid
        self.grid = g
        T = g.T
        # standard FFT order from here on
        a_var = np.fft.ifftshift(spectra.ss) / T
        b_var = np.fft.ifftshift(g.flip(spectra.rr)) / T
        cross = np.fft.ifftshift(g.flip(spectra.sr)) / T
        self.neg = (-np.arange(g.n)) % g.n

        l11 = np.sqrt(a_var)
        with np.errstate(divide="ignore", invalid="ignore"):
            l21 = np.where(l11 > 0, np.conj(cross) / l11, 0.0)
        orphan = (l11 == 0) & (np.abs(cross) > 0)
        if orphan.any():
            k = int(np.argmax(orphan))
            raise FactorizationError(f"cross spectrum nonzero where S_SS vanishes (bin {k})")
        resid = b_var - np.abs(l21) ** 2
        bad = resid < -_PSD_SLACK * np.maximum(b_var, np.abs(l21) ** 2)
        if bad.any():
            k = int(np.argmax(bad))
            raise FactorizationError(
                f"per-bin covariance not positive semidefinite at bin {k}: residual {resid[k]:.3g}")
        self.l11 = l11
        self.l21 = l21
        self.l22 = np.sqrt(np.clip(resid, 0.0, None))

    def draw(self, rng: np.random.Generator) -> FieldRealization:
        n = self.grid.n
        z = (rng.standard_normal((2, n)) + 1j * rng.standard_normal((2, n))) * math.sqrt(0.5)
        a = self.l11 * z[0]
        v2 = self.l21 * z[0] + self.l22 * z[1]
        b = np.conj(v2)[self.neg]
        return FieldRealization(np.fft.ifft(a) * n, np.fft.ifft(b) * n)


def _gate(spectra: SampledSpectra, tol: float = 1e-9):
    cls = classify_spectra(spectra, tol)
    if not cls.is_classical:
        bound = "quantum" if cls.label == "invalid" else "classical"
        raise SemiclassicalError(
            f"semiclassical gate: source is {cls.label}; the {bound} cross-spectrum bound is "
            f"violated by a normalized margin {cls.worst_margin:.3g} at ω = {cls.worst_omega:.6g} rad/s. "
            f"Monte Carlo requires a classical state")
    return cls


def synthesize_fields(source: Union[JointGaussianSource, SampledSpectra], grid: SpectralGrid,
                      rng: np.random.Generator) -> FieldRealization:
    """One periodic realization of the classical input fields."""
    spectra = source if isinstance(source, SampledSpectra) else source.sample(grid)
    _gate(spectra)
    return _Synthesizer(spectra).draw(rng)


def apply_filter(fr: FieldRealization, pair: FilterPair, grid: SpectralGrid) -> FieldRealization:
    """Multiply each arm's Fourier coefficients by its ``H(ω)``."""
    w = np.fft.fftfreq(grid.n, d=grid.dt) * 2 * math.pi

    def one(E, f):
        if f.is_identity:
            return E
        return np.fft.ifft(np.fft.fft(E) * filter_response(f, w))

    return FieldRealization(one(fr.E_S, pair.signal), one(fr.E_R, pair.reference))


# ---------------------------------------------------------------------------
# photodetection
# ---------------------------------------------------------------------------


def detect(field: np.ndarray, det: Detector, grid: SpectralGrid, rng: np.random.Generator,
           detector_id: str = "S", trial: int = 0) -> EventTrain:
    """Poisson events with rate ``η|E(t)|²`` (piecewise constant per bin) by thinning."""
    rate = det.eta * (field.real**2 + field.imag**2)
    mu_max = float(np.max(rate)) if rate.size else 0.0
    if mu_max * grid.dt > MAX_RATE_DT:
        raise ConfigurationError(
            f"rate under-resolved: max(mu)*dt = {mu_max * grid.dt:.4g} > {MAX_RATE_DT}")
    if mu_max <= 0:
        return EventTrain(np.empty(0), detector_id, trial)
    T = grid.T
    count = rng.poisson(mu_max * T)
    t = np.sort(rng.uniform(0.0, T, count))
    idx = np.minimum((t / grid.dt).astype(np.int64), grid.n - 1)
    keep = rng.uniform(0.0, mu_max, count) < rate[idx]
    return EventTrain(t[keep], detector_id, trial)


def photocurrent(events: EventTrain, det: Detector, grid: SpectralGrid) -> np.ndarray:
    """``i(t_j) = q Σ_n g(t_j - t_n)`` on the periodic window ``[0, T)``."""
    n, dt = grid.n, grid.dt
    out = np.zeros(n)
    t = np.asarray(events.times)
    if t.size == 0:
        return out
    idx = np.minimum((t / dt).astype(np.int64), n - 1)
    if det.is_ideal:
        out += np.bincount(idx, minlength=n) * (det.q / dt)
        return out

    T = grid.T
    half = min(int(math.ceil(8.0 * det.Tg / dt)) + 1, n // 2)
    offs = np.arange(-half, n - half) if 2 * half + 1 > n else np.arange(-half, half + 1)
    cols = (idx[:, None] + offs[None, :]) % n
    # wrapped distance from each grid point to its event
    d = (cols * dt - t[:, None] + T / 2) % T - T / 2
    np.add.at(out, cols.ravel(), (det.q * det.impulse(d)).ravel())
    return out


# ---------------------------------------------------------------------------
# estimation
# ---------------------------------------------------------------------------


class _Pipeline:
    def __init__(self, config: MCConfig, scenario: Scenario):
        grid = config.grid
        src = scenario.source
        check_grid(src, scenario.detector, grid)
        spectra = src.sample(grid)
        self.state = _gate(spectra)
        self.synth = _Synthesizer(spectra)
        self.config = config
        self.scenario = scenario
        self.grid = grid
        n = grid.n
        b = int(math.floor(config.burn_margin * n))
        mask = np.zeros(n)
        mask[b:n - b] = 1.0
        self.mask = mask
        self.n_window = n - 2 * b
        self.win = grid.window()

    def trial(self, k: int):
        cfg, sc, g = self.config, self.scenario, self.grid
        fr = self.synth.draw(trial_rng(cfg.seed, k, 0))
        fr = apply_filter(fr, sc.filters, g)
        ev_s = detect(fr.E_S, sc.detector, g, trial_rng(cfg.seed, k, 1), "S", k)
        ev_r = detect(fr.E_R, sc.detector, g, trial_rng(cfg.seed, k, 2), "R", k)
        i_s = photocurrent(ev_s, sc.detector, g)
        i_r = photocurrent(ev_r, sc.detector, g) * self.mask
        # c[m] = Σ_j i_S(t_j + τ_m) i_R(t_j) over the trimmed window, circular in m
        c = np.fft.irfft(np.fft.rfft(i_s) * np.conj(np.fft.rfft(i_r)), g.n) / self.n_window
        return np.fft.fftshift(c)[self.win], len(ev_s), len(ev_r)

    def block(self, start: int, stop: int):
        traces, ns, nr = [], 0, 0
        for k in range(start, stop):
            c, a, b = self.trial(k)
            traces.append(c)
            ns += a
            nr += b
        x = np.stack(traces)
        m = x.mean(axis=0)
        m2 = ((x - m) ** 2).sum(axis=0)
        return stop - start, m, m2, ns, nr


def _combine(parts):
    # Chan et al. pairwise update, applied in block order
    n, mean, m2 = 0, None, None
    for nb, mb, m2b in parts:
        if mean is None:
            n, mean, m2 = nb, mb.copy(), m2b.copy()
            continue
        tot = n + nb
        delta = mb - mean
        mean = mean + delta * (nb / tot)
        m2 = m2 + m2b + delta**2 * (n * nb / tot)
        n = tot
    return n, mean, m2


def estimate_C(config: MCConfig, scenario: Scenario, workers: Optional[int] = None) -> MCEstimate:
    """Trial-averaged photocurrent cross correlation with per-lag standard error."""
    pipe = _Pipeline(config, scenario)
    blocks = [(s, min(s + BLOCK, config.trials)) for s in range(0, config.trials, BLOCK)]
    workers = workers or _threads() or 1
    if workers > 1 and len(blocks) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(lambda b: pipe.block(*b), blocks))
    else:
        results = [pipe.block(*b) for b in blocks]

    n, mean, m2 = _combine([(r[0], r[1], r[2]) for r in results])
    if n > 1:
        stderr = np.sqrt(m2 / (n - 1) / n)
    else:
        stderr = np.full_like(mean, np.nan)
    ev_s = sum(r[3] for r in results) / n
    ev_r = sum(r[4] for r in results) / n
    g = config.grid
    det = scenario.detector
    per = det.Tg if not det.is_ideal else g.dt
    meta = {
        "mean_events_S": ev_s,
        "mean_events_R": ev_r,
        "mean_events_per_response_time": 0.5 * (ev_s + ev_r) * per / g.T,
        "state": pipe.state.label,
        "seed": int(config.seed),
        "burn_margin": config.burn_margin,
        "warnings": [],
    }
    if min(ev_s, ev_r) < MIN_EVENTS:
        msg = f"insufficient events: mean events per trial {min(ev_s, ev_r):.3g} < {MIN_EVENTS}"
        meta["warnings"].append(msg)
        warnings.warn(msg, RuntimeWarning, stacklevel=2)
    return MCEstimate(g, g.tau[pipe.win], mean, stderr, n, meta)


def mc_run(config: MCConfig, scenario: Scenario, workers: Optional[int] = None):
    """Run :func:`estimate_C` and build the accompanying report record."""
    from .report import ReportRecord

    est = estimate_C(config, scenario, workers)
    return est, ReportRecord.for_montecarlo(scenario, config, est)
