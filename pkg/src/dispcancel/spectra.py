"""Joint Gaussian source families, spectrum/correlation transforms and bound tests.

Conventions
-----------
Frequencies and lags live on a :class:`SpectralGrid` in ascending order,
``omega[k] = (k - n/2) * domega`` and ``tau[j] = (j - n/2) * dt``.  The
correlation/spectrum pair is::

    K(tau) = int dω/2π S(ω) exp(-iωτ)        S(ω) = int dτ K(τ) exp(iωτ)

and the discrete versions are exact inverses of each other on the grid.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Literal, Optional, Sequence, Union

import numpy as np

from .errors import ConfigurationError, DomainError

__all__ = [
    "SpectralGrid",
    "SampledSpectra",
    "JointGaussianSource",
    "GaussianSource",
    "RectNoiseSource",
    "SincSource",
    "TabulatedSource",
    "CorrelationTrace",
    "StateClass",
    "FAMILIES",
    "eval_gaussian_source",
    "eval_rect_noise_source",
    "eval_sinc_source",
    "bound_margins",
    "classify_spectra",
    "classify_state",
    "spectrum_to_correlation",
    "correlation_to_spectrum",
]

FAMILIES = (
    "gaussian_quantum",
    "gaussian_classical",
    "rect_noise",
    "sinc_downconverter",
    "custom_tabulated",
)

# bins with S_SS below this fraction of max(S_SS) are ignored by saturation tests
SUPPORT_FLOOR = 1e-12
DEFAULT_TOL = 1e-9


# ---------------------------------------------------------------------------
# grid
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SpectralGrid:
    """Uniform, centred time/angular-frequency sampling with ``n`` points."""

    n: int
    dt: float

    def __post_init__(self):
        n = self.n
        if isinstance(n, bool) or not isinstance(n, (int, np.integer)):
            raise ConfigurationError(f"grid.n must be an integer, got {n!r}")
        if n < 16 or n & (n - 1):
            raise ConfigurationError(f"grid.n must be a power of two >= 16, got {n}")
        if not (math.isfinite(self.dt) and self.dt > 0):
            raise ConfigurationError(f"grid.dt must be positive and finite, got {self.dt!r}")
        object.__setattr__(self, "n", int(n))
        object.__setattr__(self, "dt", float(self.dt))

    @property
    def T(self) -> float:
        return self.n * self.dt

    @property
    def domega(self) -> float:
        return 2.0 * math.pi / self.T

    @property
    def nyquist(self) -> float:
        return math.pi / self.dt

    @property
    def omega(self) -> np.ndarray:
        return (np.arange(self.n) - self.n // 2) * self.domega

    @property
    def tau(self) -> np.ndarray:
        return (np.arange(self.n) - self.n // 2) * self.dt

    @property
    def center(self) -> int:
        """Index of ω = 0 (and τ = 0)."""
        return self.n // 2

    def flip(self, values: np.ndarray) -> np.ndarray:
        """Return ``f(-x)`` sampled on the grid given ``f(x)``.

        The Nyquist bin pairs with itself.
        """
        return np.roll(np.asarray(values)[::-1], 1)

    def window(self, fraction: float = 0.25) -> slice:
        """Slice of lags with ``|τ| <= fraction * T``."""
        half = int(round(fraction * self.n))
        c = self.center
        return slice(c - half, c + half + 1 if c + half < self.n else self.n)

    @classmethod
    def for_timescales(cls, shortest: float, longest: float, span: float = 0.0,
                       oversample: int = 16) -> "SpectralGrid":
        """Smallest grid with ``dt <= shortest/oversample``, ``T >= 16*longest``
        and ``T/4 >= span``."""
        if not (shortest > 0 and longest > 0):
            raise DomainError("timescales must be positive")
        dt = shortest / oversample
        need = max(16.0 * longest, 4.0 * span, 16 * dt)
        n = 1 << max(4, math.ceil(math.log2(need / dt - 1e-9)))
        return cls(n, dt)


# ---------------------------------------------------------------------------
# closed-form families
# ---------------------------------------------------------------------------


def _positive(name, value):
    if not (isinstance(value, (int, float, np.floating, np.integer)) and math.isfinite(value) and value > 0):
        raise DomainError(f"{name} must be positive and finite, got {value!r}")


def eval_gaussian_source(P, T0, kind, omega):
    """Gaussian-spectrum source of flux ``P`` and coherence time ``T0``.

    ``kind="quantum"`` saturates the quantum cross-spectrum bound,
    ``kind="classical"`` saturates the classical one.
    """
    _positive("P", P)
    _positive("T0", T0)
    if kind not in ("quantum", "classical"):
        raise DomainError(f"kind must be 'quantum' or 'classical', got {kind!r}")
    w = np.asarray(omega, dtype=float)
    s = P * math.sqrt(2.0 * math.pi * T0**2) * np.exp(-(w * T0) ** 2 / 2.0)
    if kind == "classical":
        sr = s.astype(complex)
    else:
        extra = math.sqrt(P) * (2.0 * math.pi * T0**2) ** 0.25 * np.exp(-(w * T0) ** 2 / 4.0)
        sr = s + 1j * extra
    return s, s.copy(), sr


def eval_rect_noise_source(P, Omega, G, omega):
    """Band-limited downconverter output after matched loss and amplification.

    Gain ``G = 1`` is the pure maximally entangled state; noise ``G - 1`` is
    added to both auto-spectra while the cross spectrum is untouched.
    """
    _positive("P", P)
    _positive("Omega", Omega)
    if not (math.isfinite(G) and G >= 1.0):
        raise DomainError(f"gain >= 1 required, got G={G!r}")
    w = np.asarray(omega, dtype=float)
    x = math.pi * P / Omega
    inside = np.abs(w) <= Omega
    s = np.where(inside, x + (G - 1.0), 0.0)
    sr = np.where(inside, x + 1j * math.sqrt(x), 0.0 + 0.0j)
    return s, s.copy(), sr


def eval_sinc_source(g0, Dl, omega):
    """Low-gain type-II downconverter with timing compensation.

    ``g0`` is the dimensionless gain amplitude and ``Dl`` the group-mismatch
    time; the pump phasor is taken real and positive.
    """
    _positive("g0", g0)
    _positive("Dl", Dl)
    w = np.asarray(omega, dtype=float)
    # np.sinc(x) = sin(pi x)/(pi x)
    s = np.sinc(w * Dl / (2.0 * math.pi))
    ss = g0**2 * s**2
    return ss, ss.copy(), 1j * g0 * s


# ---------------------------------------------------------------------------
# source objects
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class SampledSpectra:
    """``S_SS``, ``S_RR`` (real) and ``S_SR`` (complex) sampled on ``grid.omega``."""

    grid: SpectralGrid
    ss: np.ndarray
    rr: np.ndarray
    sr: np.ndarray

    def __post_init__(self):
        n = self.grid.n
        for name in ("ss", "rr", "sr"):
            arr = np.asarray(getattr(self, name))
            if arr.shape != (n,):
                raise ConfigurationError(
                    f"spectrum {name} has shape {arr.shape}, grid expects ({n},)")
            arr = arr.astype(complex if name == "sr" else float, copy=True)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)


class JointGaussianSource:
    """Zero-mean stationary jointly Gaussian signal/reference state.

    Subclasses provide :meth:`_spectra` and the timescales used for grid checks.
    ``pump_phase`` rotates the phase-sensitive cross spectrum by ``exp(i φ)``.
    """

    family: str = ""
    pump_phase: float = 0.0

    def _spectra(self, omega):
        raise NotImplementedError

    def spectra(self, omega):
        ss, rr, sr = self._spectra(omega)
        if self.pump_phase:
            sr = sr * np.exp(1j * self.pump_phase)
        return ss, rr, sr

    def sample(self, grid: SpectralGrid) -> SampledSpectra:
        return SampledSpectra(grid, *self.spectra(grid.omega))

    @property
    def coherence_time(self) -> float:
        """Correlation time that the grid must resolve and contain."""
        raise NotImplementedError

    @property
    def support_halfwidth(self) -> float:
        """Largest |ω| where the spectra are appreciable."""
        raise NotImplementedError

    def params(self) -> dict:
        raise NotImplementedError


@dataclass(frozen=True)
class GaussianSource(JointGaussianSource):
    P: float
    T0: float
    kind: Literal["quantum", "classical"] = "quantum"
    pump_phase: float = 0.0

    def __post_init__(self):
        # validate eagerly
        eval_gaussian_source(self.P, self.T0, self.kind, 0.0)

    @property
    def family(self):
        return f"gaussian_{self.kind}"

    def _spectra(self, omega):
        return eval_gaussian_source(self.P, self.T0, self.kind, omega)

    @property
    def coherence_time(self):
        return self.T0

    @property
    def support_halfwidth(self):
        return math.sqrt(2.0 * math.log(1.0 / SUPPORT_FLOOR)) / self.T0

    def params(self):
        return {"P": self.P, "T0": self.T0}


@dataclass(frozen=True)
class RectNoiseSource(JointGaussianSource):
    P: float
    Omega: float
    G: float = 1.0
    pump_phase: float = 0.0
    family = "rect_noise"

    def __post_init__(self):
        eval_rect_noise_source(self.P, self.Omega, self.G, 0.0)

    @property
    def kappa(self) -> float:
        """Beam-splitter transmissivity ``1/G`` ahead of the amplifier."""
        return 1.0 / self.G

    def _spectra(self, omega):
        return eval_rect_noise_source(self.P, self.Omega, self.G, omega)

    @property
    def coherence_time(self):
        return math.pi / self.Omega

    @property
    def support_halfwidth(self):
        return self.Omega

    def params(self):
        return {"P": self.P, "Omega": self.Omega, "G": self.G}


@dataclass(frozen=True)
class SincSource(JointGaussianSource):
    g0: float
    Dl: float
    pump_phase: float = 0.0
    family = "sinc_downconverter"

    def __post_init__(self):
        eval_sinc_source(self.g0, self.Dl, 0.0)

    def _spectra(self, omega):
        return eval_sinc_source(self.g0, self.Dl, omega)

    @property
    def coherence_time(self):
        return self.Dl

    @property
    def support_halfwidth(self):
        # main lobe only; the sinc tails never fall below the floor
        return 2.0 * math.pi / self.Dl

    def params(self):
        return {"g0": self.g0, "Dl": self.Dl}


@dataclass(frozen=True)
class TabulatedSource(JointGaussianSource):
    """User-supplied spectra, linearly interpolated and zero outside the table."""

    omega: Sequence[float]
    S_SS: Sequence[float]
    S_RR: Sequence[float]
    S_SR: Sequence[complex]
    pump_phase: float = 0.0
    family = "custom_tabulated"

    def __post_init__(self):
        w = np.asarray(self.omega, dtype=float)
        cols = {k: np.asarray(getattr(self, k)) for k in ("S_SS", "S_RR", "S_SR")}
        if w.ndim != 1 or w.size < 2:
            raise DomainError("tabulated omega needs at least two samples")
        if not np.all(np.diff(w) > 0):
            raise DomainError("tabulated omega must be strictly increasing")
        for k, v in cols.items():
            if v.shape != w.shape:
                raise DomainError(f"{k} has {v.size} samples, omega has {w.size}")
            if not np.all(np.isfinite(v)):
                raise DomainError(f"{k} contains non-finite values")
        for k in ("S_SS", "S_RR"):
            if np.iscomplexobj(cols[k]) and np.any(cols[k].imag != 0):
                raise DomainError(f"{k} must be real")
            if np.any(cols[k].real < 0):
                raise DomainError(f"{k} must be nonnegative")
        object.__setattr__(self, "omega", tuple(float(x) for x in w))
        object.__setattr__(self, "S_SS", tuple(float(x) for x in cols["S_SS"].real))
        object.__setattr__(self, "S_RR", tuple(float(x) for x in cols["S_RR"].real))
        object.__setattr__(self, "S_SR", tuple(complex(x) for x in cols["S_SR"]))

    def _spectra(self, omega):
        w = np.asarray(omega, dtype=float)
        tw = np.asarray(self.omega)
        sr = np.asarray(self.S_SR)

        def interp(v):
            return np.interp(w, tw, v, left=0.0, right=0.0)

        return (interp(np.asarray(self.S_SS)), interp(np.asarray(self.S_RR)),
                interp(sr.real) + 1j * interp(sr.imag))

    @property
    def support_halfwidth(self):
        tw = np.asarray(self.omega)
        mag = np.abs(np.asarray(self.S_SS)) + np.abs(np.asarray(self.S_RR)) + np.abs(np.asarray(self.S_SR))
        nz = tw[mag > 0]
        return float(np.max(np.abs(nz))) if nz.size else float(np.max(np.abs(tw)))

    @property
    def coherence_time(self):
        return math.pi / self.support_halfwidth

    def params(self):
        sr = np.asarray(self.S_SR)
        return {
            "omega": list(self.omega),
            "S_SS": list(self.S_SS),
            "S_RR": list(self.S_RR),
            "S_SR_re": [float(x) for x in sr.real],
            "S_SR_im": [float(x) for x in sr.imag],
        }


# ---------------------------------------------------------------------------
# bounds and classification
# ---------------------------------------------------------------------------

StateLabel = Literal["maximally_entangled", "nonclassical",
                     "classical_maximally_correlated", "classical", "invalid"]


@dataclass(frozen=True)
class StateClass:
    """Result of :func:`classify_state`.

    ``worst_margin`` is the extremal normalized excess ``|S_SR|^2/B - 1`` over
    the supported bins, where ``B`` is the quantum bound for the
    ``maximally_entangled`` and ``invalid`` labels and the classical bound
    otherwise.  ``worst_omega`` is where it occurs.
    """

    label: str
    worst_margin: float
    worst_omega: float
    quantum_margin: float = field(default=float("nan"))
    classical_margin: float = field(default=float("nan"))

    @property
    def is_classical(self) -> bool:
        return self.label in ("classical", "classical_maximally_correlated")


def _normalized_excess(num, bound):
    with np.errstate(divide="ignore", invalid="ignore"):
        out = num / bound - 1.0
    out = np.where(bound > 0, out, np.where(num > 0, np.inf, 0.0))
    return out


def bound_margins(spectra: SampledSpectra):
    """Per-bin normalized excesses over the quantum and classical bounds.

    Returns ``(quantum, classical)`` arrays of ``|S_SR(ω)|^2 / bound(ω) - 1``
    with the bounds ``S_SS(ω)[1 + S_RR(-ω)]`` and ``S_SS(ω) S_RR(-ω)``.
    """
    g = spectra.grid
    rr_neg = g.flip(spectra.rr)
    mag2 = np.abs(spectra.sr) ** 2
    q = _normalized_excess(mag2, spectra.ss * (1.0 + rr_neg))
    c = _normalized_excess(mag2, spectra.ss * rr_neg)
    return q, c


def classify_spectra(spectra: SampledSpectra, tol: float = DEFAULT_TOL) -> StateClass:
    if not (0 < tol <= 1e-2):
        raise DomainError(f"tol must lie in (0, 1e-2], got {tol!r}")
    omega = spectra.grid.omega
    q, c = bound_margins(spectra)

    # the quantum bound is checked on every bin, supported or not, except
    # where |S_SR|^2 has underflowed to numerical noise
    mag2 = np.abs(spectra.sr) ** 2
    live = mag2 > SUPPORT_FLOOR**2 * np.max(mag2) if mag2.size else mag2 > 0
    q_live = np.where(live, q, -np.inf)
    worst_q = int(np.argmax(q_live))
    if q_live[worst_q] > tol:
        return StateClass("invalid", float(q[worst_q]), float(omega[worst_q]),
                          float(q[worst_q]), float(np.max(c)))

    peak = float(np.max(spectra.ss)) if spectra.ss.size else 0.0
    support = spectra.ss >= SUPPORT_FLOOR * peak if peak > 0 else np.zeros_like(spectra.ss, bool)
    if not support.any():
        # vacuum-like: nothing to correlate
        return StateClass("classical", 0.0, 0.0, 0.0, 0.0)

    qs, cs, ws = q[support], c[support], omega[support]
    iq = int(np.argmax(np.abs(qs)))
    ic = int(np.argmax(cs))
    ic_abs = int(np.argmax(np.abs(cs)))
    qmax, cmax = float(np.max(qs)), float(cs[ic])

    if np.all(np.abs(qs) <= tol):
        return StateClass("maximally_entangled", float(qs[iq]), float(ws[iq]), qmax, cmax)
    if np.all(np.abs(cs) <= tol):
        return StateClass("classical_maximally_correlated", float(cs[ic_abs]), float(ws[ic_abs]),
                          qmax, cmax)
    if np.all(cs <= tol):
        return StateClass("classical", cmax, float(ws[ic]), qmax, cmax)
    return StateClass("nonclassical", cmax, float(ws[ic]), qmax, cmax)


def classify_state(source: Union[JointGaussianSource, SampledSpectra],
                   grid: Optional[SpectralGrid] = None,
                   tol: float = DEFAULT_TOL) -> StateClass:
    """Place a source against the quantum and classical cross-spectrum bounds.

    Labels, in order of precedence: ``invalid`` (quantum bound exceeded at
    any bin), ``maximally_entangled`` (quantum bound saturated on the
    support), ``classical_maximally_correlated`` (classical bound saturated
    on the support), ``classical`` and ``nonclassical``.
    """
    if isinstance(source, SampledSpectra):
        return classify_spectra(source, tol)
    if grid is None:
        raise ConfigurationError("classify_state needs a grid for an unsampled source")
    support = source.support_halfwidth
    if grid.nyquist < support:
        raise ConfigurationError(
            f"grid Nyquist span {grid.nyquist:.6g} rad/s is smaller than the source "
            f"support {support:.6g} rad/s (ratio {grid.nyquist / support:.3g})")
    return classify_spectra(source.sample(grid), tol)


# ---------------------------------------------------------------------------
# transforms
# ---------------------------------------------------------------------------

CorrelationKind = Literal["auto_S", "auto_R", "cross_phase_sensitive"]


@dataclass(frozen=True, eq=False)
class CorrelationTrace:
    grid: SpectralGrid
    values: np.ndarray
    kind: str = "cross_phase_sensitive"

    @property
    def tau(self) -> np.ndarray:
        return self.grid.tau

    def at_zero(self) -> complex:
        return complex(self.values[self.grid.center])


def spectrum_to_correlation(spectrum, grid: SpectralGrid,
                            kind: CorrelationKind = "cross_phase_sensitive") -> CorrelationTrace:
    """``K(τ_j) = Σ_k S(ω_k) exp(-iω_kτ_j) dω/2π`` on the centred grid."""
    s = np.asarray(spectrum, dtype=complex)
    if s.shape != (grid.n,):
        raise ConfigurationError(f"spectrum has shape {s.shape}, grid expects ({grid.n},)")
    k = np.fft.fftshift(np.fft.fft(np.fft.ifftshift(s))) / grid.T
    return CorrelationTrace(grid, k, kind)


def correlation_to_spectrum(trace: CorrelationTrace) -> np.ndarray:
    """Exact inverse of :func:`spectrum_to_correlation`."""
    g = trace.grid
    return np.fft.fftshift(np.fft.ifft(np.fft.ifftshift(trace.values))) * g.T
