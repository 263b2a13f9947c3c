import numpy as np
import pytest

from micropost import analysis, hbt, source
from micropost.errors import (
    FitDiverged,
    InsufficientPeaks,
    NoPeak,
    RangeExceeded,
    ValidationError,
    WindowExceedsPeriod,
)

PERIOD = 1000.0 / 76.0


def make_histogram(bin_width=0.05, tau_range=200.0, fill=0.0):
    spec = hbt.HistogramSpec(bin_width=bin_width, tau_range=tau_range)
    edges = spec.edges()
    counts = np.full(len(edges) - 1, fill)
    return hbt.CorrelationHistogram(bin_edges=edges, counts=counts)


def comb_histogram(peak_counts, width=0.6, k_max=14, bin_width=0.05):
    """Delta-comb histogram: peak k carries peak_counts(k), spread uniformly
    over a few bins around k * PERIOD."""
    hist = make_histogram(bin_width=bin_width)
    centers = hist.bin_centers
    counts = np.zeros_like(centers)
    for k in range(-k_max, k_max + 1):
        sel = np.abs(centers - k * PERIOD) <= width / 2
        if np.any(sel):
            counts[sel] = peak_counts(k) / sel.sum()
    return hbt.CorrelationHistogram(bin_edges=hist.bin_edges, counts=counts)


def test_integrate_peaks_exact_areas():
    hist = comb_histogram(lambda k: 100.0 if k != 0 else 10.0)
    areas = analysis.integrate_peaks(hist, PERIOD, 4.0, 10)
    assert areas.areas[0] == pytest.approx(10.0)
    for k in list(range(-10, 0)) + list(range(1, 11)):
        assert areas.areas[k] == pytest.approx(100.0)


def test_integrate_peaks_fractional_bin_overlap():
    # A window edge that cuts through a bin takes the proportional share.
    hist = make_histogram(bin_width=0.05, fill=1.0)
    w = 0.05 * 7 + 0.02  # cuts 0.01 into a bin on each side
    areas = analysis.integrate_peaks(hist, PERIOD, w, 1)
    assert areas.areas[0] == pytest.approx(w / 0.05)


def test_integrate_peaks_additive_in_counts():
    hist1 = comb_histogram(lambda k: 50.0)
    hist2 = comb_histogram(lambda k: 30.0)
    combined = hbt.CorrelationHistogram(hist1.bin_edges, hist1.counts + hist2.counts)
    a1 = analysis.integrate_peaks(hist1, PERIOD, 4.0, 8)
    a2 = analysis.integrate_peaks(hist2, PERIOD, 4.0, 8)
    a12 = analysis.integrate_peaks(combined, PERIOD, 4.0, 8)
    for k in a12.areas:
        assert a12.areas[k] == pytest.approx(a1.areas[k] + a2.areas[k])


def test_integrate_peaks_window_errors():
    hist = make_histogram()
    with pytest.raises(WindowExceedsPeriod):
        analysis.integrate_peaks(hist, PERIOD, PERIOD * 1.5, 4)
    with pytest.raises(RangeExceeded):
        analysis.integrate_peaks(hist, PERIOD, 4.0, 50)
    with pytest.raises(ValidationError):
        analysis.integrate_peaks(hist, PERIOD, -1.0, 4)


def envelope_counts(k, a_inf=1000.0, beta=1 / 3, tau_b=26.04):
    if k == 0:
        return 20.0
    return a_inf * (1.0 + beta * np.exp(-abs(k) * PERIOD / tau_b))


def test_fit_envelope_recovers_parameters():
    rng = np.random.default_rng(15)
    hist = comb_histogram(lambda k: rng.poisson(envelope_counts(k)))
    areas = analysis.integrate_peaks(hist, PERIOD, 4.0, 14)
    env = analysis.fit_envelope(areas)
    assert env.a_inf == pytest.approx(1000.0, rel=0.05)
    assert env.beta == pytest.approx(1 / 3, rel=0.25)
    assert env.tau_b == pytest.approx(26.04, rel=0.25)


def test_fit_envelope_flat_data_zero_beta():
    rng = np.random.default_rng(16)
    hist = comb_histogram(lambda k: rng.poisson(1000.0))
    areas = analysis.integrate_peaks(hist, PERIOD, 4.0, 14)
    env = analysis.fit_envelope(areas)
    assert env.beta == 0.0
    assert env.a_inf == pytest.approx(1000.0, rel=0.05)


def test_fit_envelope_needs_enough_peaks():
    hist = comb_histogram(lambda k: 100.0)
    areas = analysis.integrate_peaks(hist, PERIOD, 4.0, 3)
    with pytest.raises(InsufficientPeaks):
        analysis.fit_envelope(areas)


def test_g2_zero_arithmetic():
    hist = comb_histogram(lambda k: envelope_counts(k))
    areas = analysis.integrate_peaks(hist, PERIOD, 4.0, 14)
    env = analysis.fit_envelope(areas)
    rep = analysis.g2_zero(areas, env)
    assert rep.g2_zero == pytest.approx(20.0 / env.a_inf, rel=1e-6)
    a1 = envelope_counts(1)
    assert rep.g_nearest == pytest.approx(20.0 / a1, rel=1e-3)
    # Bunching pushes the nearest peak above the asymptote, so g < g2(0).
    assert rep.g_nearest < rep.g2_zero


def test_g2_scale_invariance():
    rng = np.random.default_rng(19)
    base = comb_histogram(lambda k: rng.poisson(envelope_counts(k)))
    for scale in (1.0, 7.0):
        hist = base.rescaled(scale)
        areas = analysis.integrate_peaks(hist, PERIOD, 4.0, 14)
        env = analysis.fit_envelope(areas)
        rep = analysis.g2_zero(areas, env)
        if scale == 1.0:
            ref = rep
        else:
            assert rep.g2_zero == pytest.approx(ref.g2_zero, rel=1e-3)
            assert rep.g_nearest == pytest.approx(ref.g_nearest, rel=1e-9)


def test_window_sensitivity_report_per_window():
    hist = comb_histogram(lambda k: envelope_counts(k))
    reports = analysis.window_sensitivity(hist, [4.0, 1.0], PERIOD, 14)
    assert [r.window for r in reports] == [4.0, 1.0]


def synth_streak(tau, n=2_000_000, irf_fwhm=0.025, bin_width=0.025, seed=23):
    rng = np.random.default_rng(seed)
    n_pulses = n
    delays = rng.exponential(tau, n)
    stream = source.EmissionStream(
        pulse_index=np.arange(n, dtype=np.int64),
        time=np.arange(n) * PERIOD + delays,
        n_pulses=n_pulses, period=PERIOD,
    )
    return hbt.streak(stream, irf_fwhm=irf_fwhm, bin_width=bin_width)


def test_fit_lifetime_tail():
    hist = synth_streak(0.2)
    tau, amp, resid = analysis.fit_lifetime(hist)
    assert tau == pytest.approx(0.2, rel=0.02)
    assert amp > 0


def test_fit_lifetime_short_lifetime_uses_irf_model():
    # Lifetime below 4x the IRF width: the convolved model must still
    # recover it.
    hist = synth_streak(0.05, irf_fwhm=0.05, bin_width=0.01)
    tau, _, _ = analysis.fit_lifetime(hist)
    assert tau == pytest.approx(0.05, rel=0.10)


def test_fit_lifetime_errors():
    empty = hbt.StreakHistogram(
        bin_edges=np.linspace(0, PERIOD, 100), counts=np.zeros(99),
        period=PERIOD, irf_fwhm=0.025,
    )
    with pytest.raises(NoPeak):
        analysis.fit_lifetime(empty)
    flat = hbt.StreakHistogram(
        bin_edges=np.linspace(0, PERIOD, 100), counts=np.full(99, 3.0),
        period=PERIOD, irf_fwhm=0.025,
    )
    with pytest.raises((NoPeak, FitDiverged)):
        analysis.fit_lifetime(flat)


def test_decay_curve_end_to_end():
    lambda_c, q = 880.0, 1270.0
    mode_dl = lambda_c / q
    detunings = np.linspace(-2 * mode_dl, 2 * mode_dl, 8)
    runs = []
    for i, d in enumerate(detunings):
        coupling = 1.0 / (1.0 + (2 * d / mode_dl) ** 2)
        gamma = 1.0 + 4.0 * coupling
        runs.append((d, synth_streak(1.0 / gamma, n=500_000, seed=40 + i)))
    points, model, diag = analysis.decay_curve(runs, lambda_c)
    assert model.gamma_max / model.gamma_min == pytest.approx(5.0, rel=0.1)
    assert model.mode.q_factor == pytest.approx(q, rel=0.15)
    assert all(d >= 0 for d, _ in points)


def test_dark_count_floor_makes_g2_window_dependent():
    # With zero background the area ratio is window independent; a flat
    # dark-count floor adds counts proportional to the window, so shrinking
    # the window lowers the estimate.
    train = source.PulseTrain(n_pulses=1_000_000)
    emission = source.EmissionModel(gamma=5.0, p1=0.8, p2=0.005)
    stream = source.run_source(train, source.BlinkingModel.always_on(),
                               emission, seed=55)
    det = hbt.DetectorModel(efficiency=0.3, jitter_fwhm=0.3, dead_time=0.0,
                            dark_rate=5e-4)
    rng = np.random.default_rng(56)
    c1, c2 = hbt.beamsplit_and_detect(stream, det, det, rng)
    spec = hbt.HistogramSpec(bin_width=0.05, tau_range=200.0)
    hist = hbt.correlate(c1, c2, spec, mode="all_pairs")
    reports = analysis.window_sensitivity(hist, [4.0, 1.0], PERIOD, 14)
    assert reports[1].g2_zero < reports[0].g2_zero


def test_peak_tail_fraction_analytic():
    frac = analysis.peak_tail_fraction(0.2, 0.13, 4.0)
    assert 0.0 < frac < 0.01
    # Monotone decreasing in the window size.
    assert analysis.peak_tail_fraction(0.2, 0.13, 2.0) > frac
    # No jitter: two-sided exponential tail mass exp(-w / (2 tau)).
    exact = analysis.peak_tail_fraction(0.5, 0.0, 2.0)
    assert exact == pytest.approx(np.exp(-2.0 / (2 * 0.5)), rel=1e-6)
    # Small jitter barely moves it.
    small = analysis.peak_tail_fraction(0.5, 0.01, 2.0)
    assert small == pytest.approx(exact, rel=0.02)
