"""Estimators operating on correlation and streak histograms.

Peak areas by windowed integration with fractional bin overlap (no background
subtraction), a double-sided-exponential fit to the side-peak envelope, the
central-to-asymptotic area ratio g2(0) and the central-to-nearest ratio g,
and single-exponential (optionally IRF-convolved) lifetime fits.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad
from scipy.optimize import curve_fit
from scipy.special import erfc, erfcx
from scipy.stats import f as f_dist

from micropost import purcell
from micropost.constants import FWHM_TO_SIGMA
from micropost.errors import (
    FitDiverged,
    InsufficientPeaks,
    NoPeak,
    RangeExceeded,
    ValidationError,
    WindowExceedsPeriod,
)

__all__ = [
    "PeakAreas",
    "EnvelopeFit",
    "G2Report",
    "integrate_peaks",
    "fit_envelope",
    "g2_zero",
    "window_sensitivity",
    "fit_lifetime",
    "decay_curve",
    "peak_tail_fraction",
]


@dataclass(frozen=True)
class PeakAreas:
    """Windowed counts per peak index k (peak k centered at k * period)."""

    window: float
    period: float
    areas: dict  # k -> counts (float; fractional bin overlap)

    def side_indices(self):
        return sorted(k for k in self.areas if k != 0)


@dataclass(frozen=True)
class EnvelopeFit:
    """Side-peak envelope A(k) = a_inf * (1 + beta * exp(-|k| T / tau_b))."""

    a_inf: float
    beta: float
    tau_b: float
    a_inf_stderr: float = 0.0
    residual_norm: float = 0.0

    def area_at(self, k, period):
        return self.a_inf * (1.0 + self.beta * math.exp(-abs(k) * period / self.tau_b))


@dataclass(frozen=True)
class G2Report:
    g2_zero: float
    g_nearest: float
    window: float
    a0: float
    a1: float
    a_inf: float
    g2_zero_stderr: float
    g_nearest_stderr: float


def integrate_peaks(hist, period, window, k_max):
    """Sum counts in [k*period - window/2, k*period + window/2] for |k| <= k_max.

    Bins straddling a window edge contribute fractionally by overlap. No
    background subtraction.
    """
    if window <= 0:
        raise ValidationError("window must be > 0")
    if window > period:
        raise WindowExceedsPeriod(f"window {window} ns > period {period} ns")
    edges = hist.bin_edges
    if k_max * period + window / 2 > edges[-1] + 1e-12:
        raise RangeExceeded(
            f"peak {k_max} at {k_max * period:.1f} ns +- {window / 2:.1f} ns "
            f"outside histogram range +-{edges[-1]:.1f} ns"
        )
    counts = hist.counts
    bw = edges[1] - edges[0]
    areas = {}
    for k in range(-k_max, k_max + 1):
        lo = k * period - window / 2
        hi = k * period + window / 2
        overlap = np.clip(np.minimum(edges[1:], hi) - np.maximum(edges[:-1], lo), 0.0, bw)
        areas[k] = float(np.sum(counts * (overlap / bw)))
    return PeakAreas(window=window, period=period, areas=areas)


def fit_envelope(areas, exclude_center=True):
    """Least-squares double-sided-exponential fit to the side-peak areas."""
    ks = np.array(sorted(areas.areas))
    if exclude_center:
        ks = ks[ks != 0]
    n_pos = int(np.sum(ks > 0))
    n_neg = int(np.sum(ks < 0))
    if n_pos < 4 or n_neg < 4:
        raise InsufficientPeaks(
            f"need >= 4 side peaks per sign, got {n_neg} negative / {n_pos} positive"
        )
    a = np.array([areas.areas[k] for k in ks], float)
    period = areas.period

    mean_far = float(np.mean(a[np.abs(ks) == np.abs(ks).max()]))
    if mean_far <= 0:
        raise FitDiverged("far side-peak areas are zero; envelope undefined")

    # Poisson weights; the constant model is the beta = 0 fallback.
    sigma = np.sqrt(np.maximum(a, 1.0))
    wmean = float(np.sum(a / sigma**2) / np.sum(1.0 / sigma**2))
    wmean_stderr = float(1.0 / math.sqrt(np.sum(1.0 / sigma**2)))
    rss_const = float(np.sum(((a - wmean) / sigma) ** 2))
    constant_fit = EnvelopeFit(
        a_inf=wmean, beta=0.0, tau_b=period,
        a_inf_stderr=wmean_stderr,
        residual_norm=float(np.linalg.norm(a - wmean)),
    )
    if rss_const < 1e-12 * max(wmean, 1.0):
        return constant_fit

    def model(k, a_inf, beta, tau_b):
        return a_inf * (1.0 + beta * np.exp(-np.abs(k) * period / tau_b))

    a1 = float(np.mean(a[np.abs(ks) == 1])) if np.any(np.abs(ks) == 1) else mean_far
    beta0 = max(a1 / mean_far - 1.0, 1e-3)
    p0 = (mean_far, beta0, 2.0 * period)
    try:
        popt, pcov = curve_fit(
            model, ks, a, p0=p0, sigma=sigma, absolute_sigma=True,
            bounds=([1e-12, 0.0, 1e-3 * period], [np.inf, np.inf, 100.0 * period]),
            maxfev=20000,
        )
    except (RuntimeError, ValueError) as exc:
        raise FitDiverged(f"envelope fit failed: {exc}") from exc
    resid = a - model(ks, *popt)
    rss_env = float(np.sum((resid / sigma) ** 2))

    # The bunching term is unidentifiable on flat data; keep it only when it
    # improves the fit significantly (F-test on the two extra parameters).
    dof = len(a) - 3
    if dof > 0 and rss_env > 0:
        f_stat = ((rss_const - rss_env) / 2.0) / (rss_env / dof)
        if f_dist.sf(max(f_stat, 0.0), 2, dof) > 0.05:
            return constant_fit
    stderr = np.sqrt(max(pcov[0, 0], 0.0)) if np.all(np.isfinite(pcov)) else 0.0
    return EnvelopeFit(
        a_inf=float(popt[0]),
        beta=float(popt[1]),
        tau_b=float(popt[2]),
        a_inf_stderr=float(stderr),
        residual_norm=float(np.linalg.norm(resid)),
    )


def g2_zero(areas, envelope, nearest="symmetric"):
    """Central-peak ratios: g2(0) = A0 / A_inf, g = A0 / A_nearest.

    Statistical uncertainties are Poisson-propagated (sqrt of raw counts);
    the A_inf uncertainty comes from the envelope-fit covariance.
    """
    a0 = areas.areas.get(0)
    if a0 is None:
        raise ValidationError("peak areas must include k = 0")
    if nearest == "symmetric":
        a1 = 0.5 * (areas.areas[1] + areas.areas[-1])
        a1_var = 0.25 * (areas.areas[1] + areas.areas[-1])
    elif nearest == "positive_only":
        a1 = areas.areas[1]
        a1_var = areas.areas[1]
    else:
        raise ValidationError(f"unknown nearest convention {nearest!r}")
    a_inf = envelope.a_inf
    g2 = a0 / a_inf
    g = a0 / a1 if a1 > 0 else 0.0
    rel_a0 = math.sqrt(a0) / a0 if a0 > 0 else 0.0
    rel_ainf = envelope.a_inf_stderr / a_inf if a_inf > 0 else 0.0
    rel_a1 = math.sqrt(a1_var) / a1 if a1 > 0 else 0.0
    return G2Report(
        g2_zero=float(g2),
        g_nearest=float(g),
        window=areas.window,
        a0=float(a0),
        a1=float(a1),
        a_inf=float(a_inf),
        g2_zero_stderr=float(g2 * math.hypot(rel_a0, rel_ainf)),
        g_nearest_stderr=float(g * math.hypot(rel_a0, rel_a1)),
    )


def window_sensitivity(hist, windows, period, k_max, nearest="symmetric"):
    """One G2Report per integration window."""
    reports = []
    for w in windows:
        areas = integrate_peaks(hist, period, w, k_max)
        envelope = fit_envelope(areas)
        reports.append(g2_zero(areas, envelope, nearest=nearest))
    return reports


def _emg_model(t, amp, t0, tau, sigma):
    """Exponential decay convolved with a Gaussian IRF (EMG profile)."""
    arg = (sigma * sigma / tau - (t - t0)) / (math.sqrt(2.0) * sigma)
    return (
        0.5 * amp
        * np.exp((sigma * sigma / (2 * tau * tau)) - (t - t0) / tau)
        * erfc(arg)
    )


def fit_lifetime(streak_hist, fit_start_offset=0.05):
    """Single-exponential lifetime from a streak histogram tail.

    The tail fit starts fit_start_offset after the peak bin. When the
    estimated lifetime is below 4x the IRF FWHM, an IRF-convolved model is
    fit over the full profile instead. Returns (tau, amplitude, residuals).
    """
    t = streak_hist.bin_centers
    c = np.asarray(streak_hist.counts, float)
    if c.sum() <= 0:
        raise NoPeak("histogram is empty")
    ipk = int(np.argmax(c))
    if c[ipk] < 5 * max(np.median(c), 1e-12) and c[ipk] < 10:
        raise NoPeak("no dominant peak above the baseline")
    t_peak = t[ipk]
    # The circular IRF convolution wraps part of the peak to the end of the
    # period; keep that region out of the fit.
    wrap_guard = streak_hist.period - 5.0 * streak_hist.irf_fwhm
    tail = (t >= t_peak + fit_start_offset) & (t <= wrap_guard) & (c > 0)
    if tail.sum() < 3:
        raise NoPeak("not enough tail samples after the peak")

    # Log-linear seed estimate, weighted by counts.
    tt, cc = t[tail], c[tail]
    w = np.sqrt(cc)
    slope, intercept = np.polyfit(tt, np.log(cc), 1, w=w)
    if slope >= 0:
        raise FitDiverged("tail does not decay")
    tau0 = -1.0 / slope

    if tau0 >= 4.0 * streak_hist.irf_fwhm:
        def model(x, amp, tau):
            return amp * np.exp(-x / tau)
        try:
            popt, _ = curve_fit(
                model, tt, cc, p0=(np.exp(intercept), tau0),
                sigma=1.0 / np.maximum(w, 1e-9), maxfev=20000,
            )
        except (RuntimeError, ValueError) as exc:
            raise FitDiverged(f"lifetime tail fit failed: {exc}") from exc
        amp, tau = popt
        resid = cc - model(tt, *popt)
    else:
        sigma_irf = max(streak_hist.irf_fwhm * FWHM_TO_SIGMA, 1e-6)
        mask = (c > 0) & (t <= wrap_guard)
        try:
            popt, _ = curve_fit(
                _emg_model, t[mask], c[mask],
                p0=(c[ipk], t_peak, tau0, sigma_irf),
                sigma=1.0 / np.sqrt(c[mask]), maxfev=40000,
            )
        except (RuntimeError, ValueError) as exc:
            raise FitDiverged(f"IRF-convolved lifetime fit failed: {exc}") from exc
        amp, _, tau, _ = popt
        resid = c[mask] - _emg_model(t[mask], *popt)
    if tau <= 0:
        raise FitDiverged("non-physical fitted lifetime")
    return float(tau), float(amp), resid


def decay_curve(runs, lambda_c, fit_start_offset=0.05):
    """Lifetime-vs-detuning analysis of a batch of streak histograms.

    runs: sequence of (detuning_nm, StreakHistogram). Each run yields a rate
    1/tau; detunings are folded to |detuning| and the Lorentzian decay model
    is fit with the center fixed at lambda_c. Returns (points, model,
    diagnostics) with points as (abs_detuning, gamma) pairs.
    """
    points = []
    for detuning, hist in runs:
        tau, _, _ = fit_lifetime(hist, fit_start_offset)
        points.append((abs(detuning), 1.0 / tau))
    fit_points = [(lambda_c + d, g) for d, g in points]
    model, diagnostics = purcell.fit_decay_model(fit_points, lambda_c)
    return points, model, diagnostics


def peak_tail_fraction(tau, sigma_jitter, window):
    """Analytic fraction of a correlation peak's area outside +-window/2.

    The peak shape is the distribution of the delay difference between two
    photons: Laplace(scale tau) from the two exponential emission delays
    convolved with a Gaussian of sigma sqrt(2) * sigma_jitter from the two
    independent detector jitters. Evaluated by quadrature.
    """
    if tau <= 0 or window <= 0:
        raise ValidationError("tau and window must be > 0")
    sg = math.sqrt(2.0) * sigma_jitter

    def density(x):
        if sg == 0:
            return math.exp(-abs(x) / tau) / (2 * tau)
        # Laplace (*) Gaussian closed form. Each erfc term is evaluated in
        # whichever of its two algebraically equal forms avoids overflow.
        s2 = math.sqrt(2.0)
        base = 0.5 * (sg / tau) ** 2

        def term(a, log_tail):
            if a > 0:
                return erfcx(a) * math.exp(-0.5 * (x / sg) ** 2)
            return math.erfc(a) * math.exp(base + log_tail)

        up = term((x / sg + sg / tau) / s2, x / tau)
        dn = term((-x / sg + sg / tau) / s2, -x / tau)
        return (up + dn) / (4 * tau)

    half = window / 2.0
    inside, _ = quad(density, -half, half, limit=200)
    return float(max(0.0, 1.0 - inside))
