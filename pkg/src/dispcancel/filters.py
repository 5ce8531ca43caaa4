"""Lossless dispersive filters, detector response and spectral propagation."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Literal, Optional

import numpy as np

from .errors import ConfigurationError, DomainError
from .spectra import SampledSpectra, SpectralGrid

__all__ = [
    "DispersiveFilter",
    "FilterPair",
    "Detector",
    "ResponseKernel",
    "filter_response",
    "propagate_spectra",
    "detector_rgg",
]


@dataclass(frozen=True)
class DispersiveFilter:
    """All-pass filter ``H(ω) = exp(iω0τp) exp(-i(ωτg + ω²β))``."""

    tau_p: float = 0.0
    tau_g: float = 0.0
    beta: float = 0.0
    omega0: float = 0.0

    def __post_init__(self):
        for name in ("tau_p", "tau_g", "beta", "omega0"):
            v = getattr(self, name)
            if not math.isfinite(v):
                raise DomainError(f"filter {name} must be finite, got {v!r}")

    @property
    def is_identity(self) -> bool:
        return self.tau_g == 0.0 and self.beta == 0.0 and self.omega0 * self.tau_p == 0.0

    def response(self, omega) -> np.ndarray:
        return filter_response(self, omega)

    def then(self, other: "DispersiveFilter") -> "DispersiveFilter":
        """Cascade with ``other``; delays and dispersion add."""
        if other.omega0 != self.omega0:
            raise ConfigurationError("cascaded filters must share omega0")
        return DispersiveFilter(self.tau_p + other.tau_p, self.tau_g + other.tau_g,
                                self.beta + other.beta, self.omega0)


def filter_response(f: DispersiveFilter, omega) -> np.ndarray:
    w = np.asarray(omega, dtype=float)
    return np.exp(1j * (f.omega0 * f.tau_p - (w * f.tau_g + w * w * f.beta)))


@dataclass(frozen=True)
class FilterPair:
    signal: DispersiveFilter = DispersiveFilter()
    reference: DispersiveFilter = DispersiveFilter()

    def __post_init__(self):
        if self.signal.omega0 != self.reference.omega0:
            raise ConfigurationError(
                f"signal and reference filters must share omega0 "
                f"({self.signal.omega0!r} != {self.reference.omega0!r})")

    @classmethod
    def balanced(cls, beta: float, tau_p: float = 0.0, tau_g: float = 0.0,
                 omega0: float = 0.0) -> "FilterPair":
        """Equal delays and ``β_S = -β_R = beta``."""
        return cls(DispersiveFilter(tau_p, tau_g, beta, omega0),
                   DispersiveFilter(tau_p, tau_g, -beta, omega0))

    def with_betas(self, beta_s: float, beta_r: float) -> "FilterPair":
        return FilterPair(replace(self.signal, beta=beta_s), replace(self.reference, beta=beta_r))

    @property
    def net_beta(self) -> float:
        return self.signal.beta + self.reference.beta


def propagate_spectra(spectra: SampledSpectra, pair: FilterPair) -> SampledSpectra:
    """Output spectra behind the filter pair.

    Auto-spectra are returned untouched since ``|H|^2 = 1``; the
    phase-sensitive cross spectrum picks up ``H_S(-ω) H_R(ω)``.
    """
    g = spectra.grid
    for name in ("ss", "rr", "sr"):
        if getattr(spectra, name).shape != (g.n,):
            raise ConfigurationError("spectra are not sampled on a common grid")
    w = g.omega
    sr = spectra.sr * filter_response(pair.signal, -w) * filter_response(pair.reference, w)
    return SampledSpectra(g, spectra.ss, spectra.rr, sr)


@dataclass(frozen=True)
class Detector:
    """Photodetector with quantum efficiency ``eta`` and impulse response.

    ``response="gaussian"`` uses ``g(t) = exp(-t²/Tg²)/sqrt(π Tg²)``;
    ``response="ideal"`` is an instantaneous detector.
    """

    eta: float = 1.0
    response: Literal["gaussian", "ideal"] = "ideal"
    Tg: Optional[float] = None
    q: float = 1.0

    def __post_init__(self):
        if not (0.0 < self.eta <= 1.0):
            raise DomainError(f"eta must lie in (0, 1], got {self.eta!r}")
        if not (math.isfinite(self.q) and self.q > 0):
            raise DomainError(f"q must be positive, got {self.q!r}")
        if self.response == "gaussian":
            if self.Tg is None or not (math.isfinite(self.Tg) and self.Tg > 0):
                raise DomainError(f"gaussian response needs Tg > 0, got {self.Tg!r}")
        elif self.response == "ideal":
            if self.Tg is not None:
                raise DomainError("ideal detector takes no Tg")
        else:
            raise DomainError(f"unknown detector response {self.response!r}")

    @classmethod
    def gaussian(cls, Tg: float, eta: float = 1.0, q: float = 1.0) -> "Detector":
        return cls(eta, "gaussian", Tg, q)

    @property
    def is_ideal(self) -> bool:
        return self.response == "ideal"

    @property
    def response_time(self) -> float:
        return 0.0 if self.is_ideal else float(self.Tg)

    def impulse(self, t) -> np.ndarray:
        """Baseband impulse response ``g(t)``, unit area."""
        if self.is_ideal:
            raise ConfigurationError("the ideal detector has a delta impulse response")
        Tg = self.Tg
        return np.exp(-(np.asarray(t) / Tg) ** 2) / math.sqrt(math.pi * Tg * Tg)


@dataclass(frozen=True, eq=False)
class ResponseKernel:
    """Sampled ``R_gg(τ)`` on a grid; ``values is None`` flags a delta."""

    grid: SpectralGrid
    values: Optional[np.ndarray]

    @property
    def is_delta(self) -> bool:
        return self.values is None

    def convolve(self, f: np.ndarray) -> np.ndarray:
        """Circular ``(f ⋆ R_gg)(τ)`` for a real trace on the centred grid."""
        f = np.asarray(f, dtype=float)
        if self.is_delta:
            return f
        n = self.grid.n
        fk = np.fft.rfft(np.fft.ifftshift(f))
        rk = np.fft.rfft(np.fft.ifftshift(self.values))
        return np.fft.fftshift(np.fft.irfft(fk * rk, n)) * self.grid.dt


def detector_rgg(d: Detector, grid: SpectralGrid) -> ResponseKernel:
    """Autocorrelation ``R_gg(τ) = ∫ g(t+τ) g(t) dt`` of the impulse response."""
    if d.is_ideal:
        return ResponseKernel(grid, None)
    if grid.dt > d.Tg / 8:
        raise ConfigurationError(
            f"detector Tg={d.Tg:.6g} s under-resolved: dt/Tg = {grid.dt / d.Tg:.3g} > 1/8")
    Tg = d.Tg
    tau = grid.tau
    r = np.exp(-tau**2 / (2 * Tg * Tg)) / math.sqrt(2 * math.pi * Tg * Tg)
    r.setflags(write=False)
    return ResponseKernel(grid, r)
