"""Ensemble-average photocurrent cross correlation, closed forms and sweeps.

The numeric path follows the moment-factoring result

    C(τ) = q²η² [K_SS(0) K_RR(0) + (|K_SR^out|² ⋆ R_gg)(τ)]

with the output correlations obtained by FFT from the propagated spectra.
Traces are reported on ``|τ| <= T/4`` so that circular wrap-around of the
FFT convolution stays outside the window.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, List, Optional, Sequence, Tuple

import numpy as np

from .errors import (ConfigurationError, DegenerateSourceError, DomainError,
                     UnsupportedError, WidthUndefinedError)
from .filters import Detector, FilterPair, detector_rgg, propagate_spectra
from .scenario import Scenario
from .spectra import (JointGaussianSource, RectNoiseSource, SpectralGrid,
                      classify_state, spectrum_to_correlation)

__all__ = [
    "CrossCorrResult",
    "SweepRow",
    "SweepTable",
    "default_grid",
    "check_grid",
    "cross_correlation",
    "closed_form_gaussian",
    "closed_form_rect_noise",
    "contrast",
    "critical_gain",
    "contrast_rect",
    "signature_width",
    "dispersion_sweep",
    "gain_sweep",
    "high_brightness_delta",
]

# grid adequacy: T >= 16 * longest timescale, dt <= shortest timescale / 16
MIN_SPAN_RATIO = 16.0
MIN_SAMPLES_PER_TIME = 16.0
_SLACK = 1e-12

SINC2_HALF_POINT = 1.3915573782515103  # sinc²(x) = 1/2


@dataclass(frozen=True, eq=False)
class CrossCorrResult:
    """``C(τ)`` on the reported window together with its accidentals level."""

    grid: SpectralGrid
    tau: np.ndarray
    C: np.ndarray
    C_acc: float
    metadata: dict = field(default_factory=dict)

    @property
    def C_dc(self) -> np.ndarray:
        return self.C - self.C_acc

    def at(self, tau: float) -> float:
        """Value of ``C`` at the grid lag nearest to ``tau``."""
        return float(self.C[int(np.argmin(np.abs(self.tau - tau)))])


def _threads() -> Optional[int]:
    raw = os.environ.get("DISPCANCEL_THREADS")
    if not raw:
        return None
    try:
        n = int(raw)
    except ValueError:
        raise ConfigurationError(f"DISPCANCEL_THREADS must be an integer, got {raw!r}")
    return max(1, n)


def _timescales(source: JointGaussianSource, detector: Detector) -> Tuple[float, float]:
    tc = source.coherence_time
    tg = detector.response_time
    if tg > 0:
        return min(tc, tg), max(tc, tg)
    return tc, tc


def default_grid(source: JointGaussianSource, detector: Detector,
                 span: Optional[float] = None) -> SpectralGrid:
    """Smallest power-of-two grid meeting :func:`check_grid`, with ``T/4 >= span``.

    ``span`` defaults to ten coherence times.
    """
    short, long = _timescales(source, detector)
    if span is None:
        span = 10.0 * source.coherence_time
    return SpectralGrid.for_timescales(short, long, span, oversample=int(MIN_SAMPLES_PER_TIME))


def check_grid(source: JointGaussianSource, detector: Detector, grid: SpectralGrid) -> None:
    short, long = _timescales(source, detector)
    span_ratio = grid.T / long
    if span_ratio < MIN_SPAN_RATIO * (1 - _SLACK):
        raise ConfigurationError(
            f"grid too short: T/max(T0, Tg) = {span_ratio:.4g} < {MIN_SPAN_RATIO:g}")
    res_ratio = short / grid.dt
    if res_ratio < MIN_SAMPLES_PER_TIME * (1 - _SLACK):
        raise ConfigurationError(
            f"grid too coarse: min(T0, Tg)/dt = {res_ratio:.4g} < {MIN_SAMPLES_PER_TIME:g}")
    support = source.support_halfwidth
    if grid.nyquist < support:
        raise ConfigurationError(
            f"grid Nyquist span too small: nyquist/support = {grid.nyquist / support:.4g} < 1")


def cross_correlation(source: JointGaussianSource, pair: FilterPair, det: Detector,
                      grid: Optional[SpectralGrid] = None) -> CrossCorrResult:
    """Numeric ``C(τ)`` for any Gaussian source behind a filter pair."""
    if grid is None:
        grid = default_grid(source, det)
    check_grid(source, det, grid)

    out = propagate_spectra(source.sample(grid), pair)
    k_ss0 = spectrum_to_correlation(out.ss, grid, "auto_S").at_zero().real
    k_rr0 = spectrum_to_correlation(out.rr, grid, "auto_R").at_zero().real
    k_sr = spectrum_to_correlation(out.sr, grid).values
    mag2 = k_sr.real**2 + k_sr.imag**2
    smoothed = detector_rgg(det, grid).convolve(mag2)

    scale = det.q**2 * det.eta**2
    acc = k_ss0 * k_rr0
    win = grid.window()
    C = scale * (acc + smoothed[win])
    return CrossCorrResult(grid, grid.tau[win], C, scale * acc,
                           {"family": source.family, "net_beta": pair.net_beta})


def closed_form_gaussian(P: float, T0: float, Tg: Optional[float], kind: str,
                         q: float = 1.0, eta: float = 1.0,
                         grid: Optional[SpectralGrid] = None) -> CrossCorrResult:
    """Closed-form ``C(τ)`` for the Gaussian families with a Gaussian detector.

    ``Tg=None`` (or 0) is the instantaneous detector.
    """
    if not (P > 0 and T0 > 0):
        raise DomainError("P and T0 must be positive")
    if kind not in ("quantum", "classical"):
        raise DomainError(f"kind must be 'quantum' or 'classical', got {kind!r}")
    Tg = 0.0 if Tg is None else float(Tg)
    if Tg < 0:
        raise DomainError("Tg must be nonnegative")
    if grid is None:
        short = min(T0, Tg) if Tg > 0 else T0
        grid = SpectralGrid.for_timescales(short, max(T0, Tg), 10 * T0)
    tau = grid.tau[grid.window()]
    scale = q * q * eta * eta
    acc = scale * P * P
    C = acc * (1.0 + np.exp(-tau**2 / (T0**2 + 2 * Tg**2)) / math.sqrt(1.0 + 2 * Tg**2 / T0**2))
    if kind == "quantum":
        C = C + scale * P * np.exp(-2 * tau**2 / (T0**2 + 4 * Tg**2)) / math.sqrt(
            math.pi * (T0**2 / 2 + 2 * Tg**2))
    return CrossCorrResult(grid, tau, C, acc, {"family": f"gaussian_{kind}", "closed_form": True})


def closed_form_rect_noise(P: float, Omega: float, G: float, q: float = 1.0, eta: float = 1.0,
                           grid: Optional[SpectralGrid] = None,
                           detector: Optional[Detector] = None) -> CrossCorrResult:
    """Fast-detector ``C(τ)`` for the band-limited additive-noise source."""
    if detector is not None and not detector.is_ideal:
        raise UnsupportedError("the rect_noise closed form exists only for an ideal detector; "
                               "use cross_correlation for finite response times")
    RectNoiseSource(P, Omega, G)  # validates
    if grid is None:
        grid = SpectralGrid.for_timescales(math.pi / Omega, math.pi / Omega, 20 * math.pi / Omega)
    tau = grid.tau[grid.window()]
    scale = q * q * eta * eta
    acc = scale * (P + (G - 1) * Omega / math.pi) ** 2
    sinc = np.sinc(Omega * tau / math.pi)
    C = acc + scale * (P * P + P * Omega / math.pi) * sinc**2
    return CrossCorrResult(grid, tau, C, acc, {"family": "rect_noise", "closed_form": True})


def contrast(r: CrossCorrResult) -> float:
    """``max_τ C_dc(τ) / C_acc``."""
    if not r.C_acc > 0:
        raise DegenerateSourceError("accidentals level is zero; contrast undefined")
    return float(np.max(r.C_dc) / r.C_acc)


def critical_gain(P: float, Omega: float) -> float:
    """Amplifier gain at which the rect_noise state saturates the classical bound.

    ``G_c = 1 + x (sqrt(1 + 1/x) - 1)`` with ``x = πP/Ω``, i.e. the gain solving
    ``(x + G - 1)^2 = x^2 + x``.
    """
    if not (P > 0 and Omega > 0):
        raise DomainError("P and Omega must be positive")
    x = math.pi * P / Omega
    # sqrt(x^2 + x) - x without cancellation at large x
    return 1.0 + x / (math.sqrt(x * x + x) + x)


def contrast_rect(P: float, Omega: float, G: float) -> float:
    """``(1 + Ω/πP) / (1 + (G-1)Ω/πP)^2``."""
    RectNoiseSource(P, Omega, G)
    r = Omega / (math.pi * P)
    return (1.0 + r) / (1.0 + (G - 1.0) * r) ** 2


def signature_width(r: CrossCorrResult) -> float:
    """FWHM of ``C_dc`` around its global maximum, linearly interpolated."""
    y = np.asarray(r.C_dc, dtype=float)
    tau = r.tau
    i0 = int(np.argmax(y))
    peak = y[i0]
    if not peak > 0:
        raise WidthUndefinedError("C_dc has no positive peak")
    half = 0.5 * peak

    right = np.nonzero(y[i0:] <= half)[0]
    left = np.nonzero(y[: i0 + 1][::-1] <= half)[0]
    if right.size == 0 or left.size == 0:
        raise WidthUndefinedError("no half-maximum crossing inside the reported window")
    j = i0 + int(right[0])
    k = i0 - int(left[0])

    def cross(a, b):
        # linear interpolation between samples a (above) and b (at/below)
        frac = (y[a] - half) / (y[a] - y[b])
        return tau[a] + frac * (tau[b] - tau[a])

    return float(cross(j - 1, j) - cross(k + 1, k))


@dataclass(frozen=True)
class SweepRow:
    value: float
    contrast: float
    fwhm: float
    c_acc: float
    peak_dc: float
    label: Optional[str] = None
    beta_s: Optional[float] = None
    beta_r: Optional[float] = None


@dataclass(frozen=True)
class SweepTable:
    param: str
    rows: Tuple[SweepRow, ...]

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(row, name) for row in self.rows])


def _map(fn, items, workers):
    items = list(items)
    workers = workers or _threads() or 1
    if workers <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def dispersion_sweep(scenario: Scenario, pairs: Sequence[Tuple[float, float]],
                     workers: Optional[int] = None) -> SweepTable:
    """Contrast and FWHM for each ``(β_S, β_R)``; rows sorted by ``β_S + β_R`` then ``β_S``."""
    pairs = [(float(a), float(b)) for a, b in pairs]
    if not pairs:
        raise DomainError("dispersion_sweep needs at least one (beta_S, beta_R) pair")
    grid = scenario.resolved_grid()

    def row(pair):
        bs, br = pair
        s = scenario.with_betas(bs, br)
        r = cross_correlation(s.source, s.filters, s.detector, grid)
        return SweepRow(bs + br, contrast(r), signature_width(r), r.C_acc,
                        float(np.max(r.C_dc)), None, bs, br)

    rows = _map(row, pairs, workers)
    rows.sort(key=lambda x: (x.value, x.beta_s))
    return SweepTable("beta", tuple(rows))


def gain_sweep(P: float, Omega: float, G_values: Iterable[float],
               grid: Optional[SpectralGrid] = None, tol: float = 1e-9,
               q: float = 1.0, eta: float = 1.0) -> SweepTable:
    """Contrast and state label of the rect_noise source versus amplifier gain."""
    G_values = sorted(float(g) for g in G_values)
    if not G_values:
        raise DomainError("gain_sweep needs at least one gain value")
    if grid is None:
        grid = SpectralGrid.for_timescales(math.pi / Omega, math.pi / Omega, 20 * math.pi / Omega)
    rows = []
    for G in G_values:
        label = classify_state(RectNoiseSource(P, Omega, G), grid, tol).label
        r = closed_form_rect_noise(P, Omega, G, q, eta, grid)
        rows.append(SweepRow(G, contrast_rect(P, Omega, G), 2 * SINC2_HALF_POINT / Omega,
                             r.C_acc, float(np.max(r.C_dc)), label))
    return SweepTable("gain", tuple(rows))


def high_brightness_delta(P: float, T0: float, Tg: Optional[float] = None,
                          grid: Optional[SpectralGrid] = None) -> float:
    """``max_τ |C_q(τ) - C_c(τ)| / C_c(τ)`` from the Gaussian closed forms."""
    cq = closed_form_gaussian(P, T0, Tg, "quantum", grid=grid)
    cc = closed_form_gaussian(P, T0, Tg, "classical", grid=cq.grid)
    return float(np.max(np.abs(cq.C - cc.C) / cc.C))
