import math

import numpy as np
import pytest

from dispcancel import (ConfigurationError, Detector, DomainError, EventTrain, FieldRealization,
                        FilterPair, GaussianSource, MCConfig, RectNoiseSource, Scenario,
                        SemiclassicalError, SpectralGrid, apply_filter, closed_form_gaussian,
                        detect, estimate_C, mc_run, photocurrent, spectrum_to_correlation,
                        synthesize_fields)
from dispcancel.montecarlo import trial_rng

GRID = SpectralGrid(1024, 1 / 16)


def test_trial_rng_streams_are_reproducible_and_distinct():
    a = trial_rng(7, 3, 0).standard_normal(4)
    assert np.array_equal(a, trial_rng(7, 3, 0).standard_normal(4))
    assert not np.array_equal(a, trial_rng(7, 3, 1).standard_normal(4))
    assert not np.array_equal(a, trial_rng(7, 4, 0).standard_normal(4))


def test_config_validation():
    with pytest.raises(DomainError):
        MCConfig(0, GRID)
    with pytest.raises(DomainError):
        MCConfig(True, GRID)
    with pytest.raises(DomainError):
        MCConfig(10, GRID, burn_margin=0.3)
    with pytest.raises(DomainError):
        MCConfig(10, GRID, seed=-1)


def test_gate_rejects_nonclassical_source():
    with pytest.raises(SemiclassicalError, match="classical cross-spectrum bound"):
        synthesize_fields(GaussianSource(1.0, 1.0, "quantum"), GRID, trial_rng(0, 0))
    with pytest.raises(SemiclassicalError):
        estimate_C(MCConfig(2, GRID), Scenario(RectNoiseSource(1.0, 1.0, 1.0)))


def test_synthesized_correlations_match_spectra():
    src = GaussianSource(1.0, 1.0, "classical")
    sp = src.sample(GRID)
    k_ss = spectrum_to_correlation(sp.ss, GRID).values
    k_sr = spectrum_to_correlation(sp.sr, GRID).values
    power = 0.0
    acc_sr = np.zeros(GRID.n, complex)
    trials = 400
    for k in range(trials):
        fr = synthesize_fields(src, GRID, trial_rng(1, k))
        fs = np.fft.fft(fr.E_S)
        # time-averaged <E_S(t+τ) E_R(t)>, circular
        power += np.mean(np.abs(fr.E_S) ** 2)
        acc_sr += np.fft.ifft(fs * np.conj(np.fft.fft(np.conj(fr.E_R)))) / GRID.n
    acc_sr = np.fft.fftshift(acc_sr) / trials
    c = GRID.center
    assert power / trials == pytest.approx(k_ss[c].real, rel=0.05)
    lags = c + np.array([-16, -8, 0, 8, 16])
    np.testing.assert_allclose(acc_sr[lags], k_sr[lags], atol=0.06 * abs(k_sr[c]))


def test_apply_filter_identity_is_noop():
    fr = synthesize_fields(GaussianSource(1.0, 1.0, "classical"), GRID, trial_rng(0, 0))
    out = apply_filter(fr, FilterPair(), GRID)
    assert out.E_S is fr.E_S and out.E_R is fr.E_R


def test_apply_filter_preserves_energy():
    fr = synthesize_fields(GaussianSource(1.0, 1.0, "classical"), GRID, trial_rng(0, 0))
    out = apply_filter(fr, FilterPair.balanced(3.0, tau_g=2.0), GRID)
    assert np.sum(np.abs(out.E_S) ** 2) == pytest.approx(np.sum(np.abs(fr.E_S) ** 2), rel=1e-12)


def test_detect_counts_follow_poisson_mean():
    E = np.full(GRID.n, math.sqrt(0.5), complex)
    counts = [len(detect(E, Detector(eta=0.8), GRID, trial_rng(2, k))) for k in range(300)]
    mu = 0.8 * 0.5 * GRID.T
    assert np.mean(counts) == pytest.approx(mu, abs=4 * math.sqrt(mu / 300))
    assert np.var(counts) == pytest.approx(mu, rel=0.25)


def test_detect_rate_check():
    E = np.full(GRID.n, 2.0, complex)
    with pytest.raises(ConfigurationError, match="under-resolved"):
        detect(E, Detector(), GRID, trial_rng(0, 0))


def test_detect_events_lie_in_window():
    E = np.sqrt(0.5 * (1 + np.sin(GRID.tau)))
    ev = detect(E.astype(complex), Detector(), GRID, trial_rng(3, 0))
    assert np.all((ev.times >= 0) & (ev.times < GRID.T))
    assert np.all(np.diff(ev.times) >= 0)


@pytest.mark.parametrize("det", [Detector(q=2.0), Detector.gaussian(0.5, q=2.0)])
def test_photocurrent_charge(det):
    ev = EventTrain(np.array([1.03, 10.0, 63.9]))
    i = photocurrent(ev, det, GRID)
    assert np.sum(i) * GRID.dt == pytest.approx(2.0 * 3, rel=1e-9)


def test_photocurrent_gaussian_wraps():
    ev = EventTrain(np.array([0.01]))
    i = photocurrent(ev, Detector.gaussian(0.5), GRID)
    assert i[-1] > 0 and i[0] > 0


def test_photocurrent_empty():
    assert not np.any(photocurrent(EventTrain(np.empty(0)), Detector(), GRID))


SMALL = Scenario(GaussianSource(0.2, 1.0, "classical"), detector=Detector())
SMALL_GRID = SpectralGrid(8192, 1 / 32)


def test_estimate_matches_analytic():
    est = estimate_C(MCConfig(256, SMALL_GRID, seed=11), SMALL)
    ref = closed_form_gaussian(0.2, 1.0, None, "classical", grid=SMALL_GRID)
    c = int(np.argmin(np.abs(est.tau)))
    assert abs(est.C[c] - ref.C[np.argmin(np.abs(ref.tau))]) <= 4 * est.stderr[c]
    assert est.accidentals() == pytest.approx(0.04, rel=0.1)
    assert est.metadata["state"] == "classical_maximally_correlated"
    assert est.metadata["mean_events_S"] == pytest.approx(0.2 * SMALL_GRID.T, rel=0.05)


def test_estimate_deterministic_across_workers():
    cfg = MCConfig(70, SMALL_GRID, seed=5)
    a = estimate_C(cfg, SMALL, workers=1)
    b = estimate_C(cfg, SMALL, workers=3)
    assert np.array_equal(a.C, b.C) and np.array_equal(a.stderr, b.stderr)


def test_estimate_seed_changes_result():
    a = estimate_C(MCConfig(4, SMALL_GRID, seed=1), SMALL)
    b = estimate_C(MCConfig(4, SMALL_GRID, seed=2), SMALL)
    assert not np.array_equal(a.C, b.C)


def test_single_trial_has_no_stderr():
    est = estimate_C(MCConfig(1, SMALL_GRID), SMALL)
    assert np.all(np.isnan(est.stderr))


def test_few_events_warns():
    sc = Scenario(GaussianSource(0.01, 1.0, "classical"))
    with pytest.warns(RuntimeWarning, match="insufficient events"):
        est = estimate_C(MCConfig(2, SpectralGrid(512, 1 / 16)), sc)
    assert est.metadata["warnings"]


def test_estimate_rejects_bad_grid():
    with pytest.raises(ConfigurationError):
        estimate_C(MCConfig(2, SpectralGrid(64, 1 / 16)), SMALL)


def test_gaussian_detector_run():
    sc = Scenario(GaussianSource(0.2, 1.0, "classical"), detector=Detector.gaussian(1.0))
    est = estimate_C(MCConfig(8, SpectralGrid(8192, 1 / 32), seed=3), sc)
    assert np.all(np.isfinite(est.C))
    assert est.metadata["mean_events_per_response_time"] == pytest.approx(0.2, rel=0.2)


def test_mc_run_report():
    est, rec = mc_run(MCConfig(4, SMALL_GRID, seed=9), SMALL)
    d = rec.to_dict()
    assert d["command"] == "montecarlo" and d["seed"] == 9
    assert d["scenario"]["montecarlo"]["trials"] == 4
    assert d["C_acc"] == pytest.approx(est.accidentals())
