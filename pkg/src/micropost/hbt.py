"""Simulated measurement chain: beamsplitter, photon counters, correlator.

Photons are split 50/50, detected with finite efficiency, Gaussian timing
jitter and non-paralyzable dead time. The correlator implements start-stop
time-to-amplitude semantics (first stop in range wins, converter then
re-arms) with an idealized all-pairs mode for cross-checks. A streak-camera
style decay histogram folds emission times into one pulse period.
"""

from dataclasses import dataclass

import numpy as np

from micropost.constants import FWHM_TO_SIGMA
from micropost.errors import ValidationError

__all__ = [
    "DetectorModel",
    "HistogramSpec",
    "CorrelationHistogram",
    "StreakHistogram",
    "beamsplit_and_detect",
    "correlate",
    "streak",
]


@dataclass(frozen=True)
class DetectorModel:
    efficiency: float = 1.0
    jitter_fwhm: float = 0.3  # ns
    dead_time: float = 50.0  # ns
    dark_rate: float = 0.0  # clicks/ns, flat in time

    def __post_init__(self):
        if not (0 <= self.efficiency <= 1):
            raise ValidationError("efficiency must be in [0, 1]")
        if self.jitter_fwhm < 0 or self.dead_time < 0 or self.dark_rate < 0:
            raise ValidationError("jitter, dead time and dark rate must be >= 0")

    @property
    def jitter_sigma(self):
        return self.jitter_fwhm * FWHM_TO_SIGMA


@dataclass(frozen=True)
class HistogramSpec:
    """Uniform binning for the delay histogram, symmetric about tau = 0.

    tau = 0 falls at the center of the middle bin (odd bin count).
    """

    bin_width: float = 0.05  # ns
    tau_range: float = 65.0  # ns, histogram spans about +-tau_range

    def __post_init__(self):
        if self.bin_width <= 0 or self.tau_range <= 0:
            raise ValidationError("bin_width and tau_range must be > 0")

    def edges(self):
        n_half = int(np.floor(self.tau_range / self.bin_width))
        n_bins = 2 * n_half + 1
        return (np.arange(n_bins + 1) - n_bins / 2) * self.bin_width


@dataclass(frozen=True)
class CorrelationHistogram:
    """Binned counts of relative delay tau = t2 - t1."""

    bin_edges: np.ndarray
    counts: np.ndarray

    @property
    def bin_centers(self):
        return 0.5 * (self.bin_edges[:-1] + self.bin_edges[1:])

    @property
    def bin_width(self):
        return float(self.bin_edges[1] - self.bin_edges[0])

    @property
    def tau_range(self):
        return float(self.bin_edges[-1])

    def total(self):
        return float(self.counts.sum())

    def rescaled(self, factor):
        return CorrelationHistogram(self.bin_edges, self.counts * factor)


@dataclass(frozen=True)
class StreakHistogram:
    """Emission decay folded to one pulse period, IRF-convolved."""

    bin_edges: np.ndarray
    counts: np.ndarray
    period: float
    irf_fwhm: float

    @property
    def bin_centers(self):
        return 0.5 * (self.bin_edges[:-1] + self.bin_edges[1:])

    @property
    def bin_width(self):
        return float(self.bin_edges[1] - self.bin_edges[0])


def _prune_dead_time(times, dead_time):
    """Non-paralyzable dead time: drop clicks within dead_time of the last kept."""
    if dead_time == 0 or len(times) == 0:
        return times
    kept = np.empty(len(times))
    kept[0] = times[0]
    n = 1
    last = times[0]
    for t in times[1:]:
        if t - last >= dead_time:
            kept[n] = t
            n += 1
            last = t
    return kept[:n]


def beamsplit_and_detect(stream, det1, det2, rng):
    """Route photons through a 50/50 splitter onto two counters.

    Returns (clicks1, clicks2): sorted click-time arrays after efficiency
    thinning, Gaussian jitter and dead-time pruning.
    """
    times = np.asarray(stream.time, float)
    n = len(times)
    route = rng.integers(0, 2, n)  # 0 -> detector 1
    u = rng.random(n)
    noise = rng.standard_normal(n)
    duration = stream.n_pulses * stream.period
    clicks = []
    for which, det in ((0, det1), (1, det2)):
        sel = (route == which) & (u < det.efficiency)
        t = times[sel] + noise[sel] * det.jitter_sigma
        if det.dark_rate > 0:
            # Flat dark-count floor, uniform over the run.
            n_dark = rng.poisson(det.dark_rate * duration)
            t = np.concatenate((t, rng.uniform(0.0, duration, n_dark)))
        t.sort()
        clicks.append(_prune_dead_time(t, det.dead_time))
    return clicks[0], clicks[1]


def _correlate_tac(clicks1, clicks2, tau_range):
    """Start-stop conversion: each accepted start takes the first detector-2
    click with tau in [-range, +range]; starts arriving while a conversion is
    in progress are ignored."""
    taus = np.empty(len(clicks1))
    n = 0
    busy_until = -np.inf
    for t1 in clicks1:
        if t1 < busy_until:
            continue
        i = np.searchsorted(clicks2, t1 - tau_range, side="left")
        if i < len(clicks2) and clicks2[i] <= t1 + tau_range:
            taus[n] = clicks2[i] - t1
            n += 1
            busy_until = max(clicks2[i], t1)
        else:
            busy_until = t1 + tau_range
    return taus[:n]


def _correlate_all_pairs(clicks1, clicks2, tau_range):
    lo = np.searchsorted(clicks2, clicks1 - tau_range, side="left")
    hi = np.searchsorted(clicks2, clicks1 + tau_range, side="right")
    counts = hi - lo
    total = int(counts.sum())
    if total == 0:
        return np.empty(0)
    # Flatten the per-start index ranges [lo_i, hi_i) into one index vector.
    offsets = np.repeat(np.cumsum(counts) - counts, counts)
    flat = np.arange(total) - offsets + np.repeat(lo, counts)
    return clicks2[flat] - np.repeat(clicks1, counts)


def correlate(clicks1, clicks2, spec=None, mode="tac"):
    """Histogram of delays tau = t2 - t1 between the two click streams."""
    if spec is None:
        spec = HistogramSpec()
    edges = spec.edges()
    if mode == "tac":
        taus = _correlate_tac(np.asarray(clicks1), np.asarray(clicks2), edges[-1])
    elif mode == "all_pairs":
        taus = _correlate_all_pairs(np.asarray(clicks1), np.asarray(clicks2), edges[-1])
    else:
        raise ValidationError(f"unknown correlator mode {mode!r}")
    counts, _ = np.histogram(taus, bins=edges)
    return CorrelationHistogram(bin_edges=edges, counts=counts.astype(np.int64))


def _gaussian_kernel(sigma, bin_width):
    half = max(1, int(np.ceil(5 * sigma / bin_width)))
    x = np.arange(-half, half + 1) * bin_width
    k = np.exp(-0.5 * (x / sigma) ** 2)
    return k / k.sum()


def streak(stream, irf_fwhm=0.025, bin_width=0.025, period=None):
    """Decay histogram: emission delays folded modulo the pulse period,
    convolved (circularly) with a Gaussian instrument response."""
    if period is None:
        period = stream.period
    if bin_width <= 0 or bin_width > period:
        raise ValidationError("bin_width must be in (0, period]")
    delays = np.mod(np.asarray(stream.time) - np.asarray(stream.pulse_index) * period, period)
    n_bins = int(round(period / bin_width))
    edges = np.linspace(0.0, period, n_bins + 1)
    counts, _ = np.histogram(delays, bins=edges)
    counts = counts.astype(float)
    if irf_fwhm > 0:
        sigma = irf_fwhm * FWHM_TO_SIGMA
        kernel = _gaussian_kernel(sigma, edges[1] - edges[0])
        half = len(kernel) // 2
        padded = np.concatenate((counts[-half:], counts, counts[:half]))
        counts = np.convolve(padded, kernel, mode="valid")
    return StreakHistogram(bin_edges=edges, counts=counts, period=period, irf_fwhm=irf_fwhm)
