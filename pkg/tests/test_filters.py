import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dispcancel import (ConfigurationError, Detector, DispersiveFilter, DomainError, FilterPair,
                        GaussianSource, RectNoiseSource, SpectralGrid, detector_rgg,
                        filter_response, propagate_spectra, spectrum_to_correlation)

finite = st.floats(-1e3, 1e3, allow_nan=False)


def test_identity_filter():
    w = np.linspace(-50, 50, 101)
    assert np.all(filter_response(DispersiveFilter(), w) == 1)


def test_pure_dispersion_value():
    h = filter_response(DispersiveFilter(beta=2.0), 1.0)
    assert h == pytest.approx(-0.4161468365471424 - 0.9092974268256817j, abs=1e-15)


@settings(max_examples=50, deadline=None)
@given(tau_p=finite, tau_g=finite, beta=finite, omega0=finite)
def test_filters_are_lossless(tau_p, tau_g, beta, omega0):
    g = SpectralGrid(256, 0.01)
    h = filter_response(DispersiveFilter(tau_p, tau_g, beta, omega0), g.omega)
    assert np.max(np.abs(np.abs(h) - 1)) <= 1e-12


def test_pair_requires_common_center_frequency():
    with pytest.raises(ConfigurationError):
        FilterPair(DispersiveFilter(omega0=1.0), DispersiveFilter(omega0=2.0))


def test_filter_rejects_nonfinite():
    with pytest.raises(DomainError):
        DispersiveFilter(beta=float("nan"))


GRID = SpectralGrid(1024, 1.0 / 16)


def _spectra(kind="quantum"):
    return GaussianSource(1.0, 1.0, kind).sample(GRID)


def test_auto_spectra_untouched():
    sp = _spectra()
    out = propagate_spectra(sp, FilterPair(DispersiveFilter(0.3, 1.0, 5.0, 2.0),
                                           DispersiveFilter(0.1, -2.0, 1.0, 2.0)))
    assert np.array_equal(out.ss, sp.ss) and np.array_equal(out.rr, sp.rr)


def test_balanced_pair_preserves_correlations():
    sp = _spectra()
    pair = FilterPair.balanced(3.7, tau_p=0.4, tau_g=1.5, omega0=10.0)
    out = propagate_spectra(sp, pair)
    k_in = spectrum_to_correlation(sp.sr, GRID).values
    k_out = spectrum_to_correlation(out.sr, GRID).values
    np.testing.assert_allclose(np.abs(k_out), np.abs(k_in), atol=1e-12 * np.max(np.abs(k_in)))
    # only the constant exp(2i ω0 τp) survives
    phase = np.exp(2j * 10.0 * 0.4)
    np.testing.assert_allclose(k_out, phase * k_in, atol=1e-12 * np.max(np.abs(k_in)))


def test_unbalanced_pair_picks_up_net_chirp():
    sp = _spectra()
    pair = FilterPair(DispersiveFilter(beta=0.8), DispersiveFilter(beta=0.5))
    out = propagate_spectra(sp, pair)
    np.testing.assert_allclose(out.sr / sp.sr, np.exp(-1j * GRID.omega**2 * 1.3), rtol=1e-12)


def test_cascade_consistency():
    sp = _spectra()
    a = DispersiveFilter(0.1, 0.2, 0.7)
    b = DispersiveFilter(0.3, -0.5, -1.9)
    ref = DispersiveFilter(0.0, 0.4, 0.25)
    twice = propagate_spectra(propagate_spectra(sp, FilterPair(a, ref)),
                              FilterPair(b, DispersiveFilter()))
    once = propagate_spectra(sp, FilterPair(a.then(b), ref))
    np.testing.assert_allclose(twice.sr, once.sr, atol=1e-12 * np.max(np.abs(sp.sr)))


def test_propagate_rejects_mismatched_grid():
    sp = _spectra()
    with pytest.raises(ConfigurationError):
        from dispcancel import SampledSpectra
        SampledSpectra(SpectralGrid(512, 1 / 16), sp.ss, sp.rr, sp.sr)


# -- detector ------------------------------------------------------------------

def test_detector_validation():
    with pytest.raises(DomainError):
        Detector(eta=0.0)
    with pytest.raises(DomainError):
        Detector(eta=1.0, response="gaussian")
    with pytest.raises(DomainError):
        Detector(response="ideal", Tg=1.0)


def test_impulse_response_normalized():
    d = Detector.gaussian(1.0)
    g = SpectralGrid(1024, 1 / 8)
    assert np.sum(d.impulse(g.tau)) * g.dt == pytest.approx(1.0, abs=1e-9)


def test_rgg_unit_area_and_peak():
    d = Detector.gaussian(1e-9)
    g = SpectralGrid(4096, 1e-9 / 16)
    r = detector_rgg(d, g)
    assert np.sum(r.values) * g.dt == pytest.approx(1.0, abs=1e-9)
    assert r.values[g.center] == pytest.approx(398942280.4014327, rel=1e-12)


def test_rgg_matches_numerical_autocorrelation_of_g():
    d = Detector.gaussian(0.7)
    g = SpectralGrid(2048, 0.7 / 16)
    t = g.tau
    # brute-force Σ g(t+τ) g(t) dt at a few lags
    for lag in (0, 10, 37):
        brute = np.sum(d.impulse(t + lag * g.dt) * d.impulse(t)) * g.dt
        assert detector_rgg(d, g).values[g.center + lag] == pytest.approx(brute, rel=1e-10)


def test_rgg_under_resolved():
    with pytest.raises(ConfigurationError, match="under-resolved"):
        detector_rgg(Detector.gaussian(1.0), SpectralGrid(64, 0.2))


def test_ideal_detector_is_convolution_identity():
    g = SpectralGrid(64, 0.1)
    f = np.random.default_rng(0).normal(size=64)
    r = detector_rgg(Detector(), g)
    assert r.is_delta
    assert np.array_equal(r.convolve(f), f)


def test_gaussian_convolution_of_gaussian():
    # N(0, a²) ⋆ N(0, Tg²) = N(0, a² + Tg²)
    Tg, a = 1.0, 2.0
    g = SpectralGrid(4096, 1 / 16)
    f = np.exp(-g.tau**2 / (2 * a * a)) / math.sqrt(2 * math.pi * a * a)
    out = detector_rgg(Detector.gaussian(Tg), g).convolve(f)
    s2 = a * a + Tg * Tg
    np.testing.assert_allclose(out, np.exp(-g.tau**2 / (2 * s2)) / math.sqrt(2 * math.pi * s2),
                               atol=1e-12)
