"""Emitter-cavity coupling: Lorentzian decay-rate-vs-detuning model.

The spontaneous decay rate interpolates between an off-resonance floor and an
on-resonance maximum with a Lorentzian of the emitter-cavity detuning whose
width is the cavity linewidth lambda_c / Q. Includes the corresponding curve
fit (center fixed at lambda_c), a temperature-tuning map, and a Lorentzian
peak fit for extracting the cavity mode from a background spectrum.
"""

from dataclasses import dataclass

import numpy as np
from scipy.optimize import curve_fit

from micropost.errors import (
    FitDiverged,
    InsufficientSpan,
    NoPeak,
    OutOfRange,
    ValidationError,
)

__all__ = [
    "CavityMode",
    "DecayModel",
    "TuningMap",
    "FitDiagnostics",
    "lorentzian_coupling",
    "decay_rate",
    "purcell_factor",
    "fit_decay_model",
    "detuning_at_temperature",
    "fit_cavity_from_background",
]


@dataclass(frozen=True)
class CavityMode:
    """Cavity resonance wavelength (nm) and quality factor."""

    lambda_c: float
    q_factor: float

    def __post_init__(self):
        if self.lambda_c <= 0 or self.q_factor <= 0:
            raise ValidationError("lambda_c and q_factor must be > 0")

    @property
    def linewidth(self):
        return self.lambda_c / self.q_factor


@dataclass(frozen=True)
class DecayModel:
    """Decay rates (1/ns) at resonance and far off resonance, with the mode."""

    gamma_max: float
    gamma_min: float
    mode: CavityMode

    def __post_init__(self):
        if not (self.gamma_max >= self.gamma_min > 0):
            raise ValidationError("need gamma_max >= gamma_min > 0")


@dataclass(frozen=True)
class TuningMap:
    """Emitter wavelength vs temperature (linear interpolation between knots).

    The cavity resonance red-shifts linearly by cavity_shift_nm over the
    tabulated temperature range; lambda_c_base is the resonance at the lowest
    tabulated temperature.
    """

    temperatures: tuple
    qd_wavelengths: tuple
    lambda_c_base: float = 880.0
    cavity_shift_nm: float = 0.3
    apply_cavity_shift: bool = True

    def __post_init__(self):
        t = np.asarray(self.temperatures, float)
        w = np.asarray(self.qd_wavelengths, float)
        if t.size != w.size or t.size < 2:
            raise ValidationError("need >= 2 (temperature, wavelength) knots")
        if not np.all(np.diff(t) > 0):
            raise ValidationError("temperatures must be strictly increasing")
        object.__setattr__(self, "temperatures", tuple(t))
        object.__setattr__(self, "qd_wavelengths", tuple(w))


@dataclass(frozen=True)
class FitDiagnostics:
    residual_norm: float
    stderr: dict


def lorentzian_coupling(lambda_qd, mode):
    """Normalized Lorentzian coupling in [0, 1] at the given emitter wavelength."""
    dl = mode.linewidth
    x = 2.0 * (lambda_qd - mode.lambda_c) / dl
    return 1.0 / (1.0 + x * x)


def decay_rate(lambda_qd, model):
    """Spontaneous decay rate (1/ns) at the given emitter wavelength."""
    coupling = lorentzian_coupling(lambda_qd, model.mode)
    return model.gamma_min + (model.gamma_max - model.gamma_min) * coupling


def purcell_factor(model):
    """On/off-resonance decay-rate ratio gamma_max / gamma_min."""
    return model.gamma_max / model.gamma_min


def fit_decay_model(points, lambda_c_fixed):
    """Least-squares fit of (gamma_min, gamma_max, linewidth), center fixed.

    points: sequence of (lambda_qd_nm, gamma_per_ns). Returns
    (DecayModel, FitDiagnostics) with parameter standard errors from the
    fit covariance.
    """
    pts = np.asarray(points, float)
    if pts.ndim != 2 or pts.shape[1] != 2 or pts.shape[0] < 4:
        raise InsufficientSpan("need at least 4 (wavelength, rate) points")
    lam, gam = pts[:, 0], pts[:, 1]
    span = lam.max() - lam.min()
    if np.unique(lam).size < 3 or span == 0:
        raise InsufficientSpan("points must span at least three distinct wavelengths")

    def model(l, gmin, gmax, dl):
        x = 2.0 * (l - lambda_c_fixed) / dl
        return gmin + (gmax - gmin) / (1.0 + x * x)

    p0 = (max(gam.min(), 1e-6), gam.max(), max(span / 2, 1e-6))
    try:
        popt, pcov = curve_fit(
            model, lam, gam, p0=p0,
            bounds=([1e-12, 1e-12, 1e-12], [np.inf, np.inf, np.inf]),
            maxfev=20000,
        )
    except (RuntimeError, ValueError) as exc:
        raise FitDiverged(f"decay-model fit failed: {exc}") from exc
    gmin, gmax, dl = popt
    if dl > 10 * span:
        raise InsufficientSpan(
            f"fitted linewidth {dl:.3g} nm exceeds 10x the data span {span:.3g} nm"
        )
    resid = gam - model(lam, *popt)
    err = np.sqrt(np.maximum(np.diag(pcov), 0.0))
    diagnostics = FitDiagnostics(
        residual_norm=float(np.linalg.norm(resid)),
        stderr={"gamma_min": err[0], "gamma_max": err[1], "linewidth": err[2]},
    )
    mode = CavityMode(lambda_c_fixed, lambda_c_fixed / dl)
    return DecayModel(gamma_max=gmax, gamma_min=gmin, mode=mode), diagnostics


def detuning_at_temperature(tuning, temperature):
    """Signed detuning lambda_qd(T) - lambda_c(T) in nm."""
    t = np.asarray(tuning.temperatures)
    if not (t[0] <= temperature <= t[-1]):
        raise OutOfRange(
            f"temperature {temperature} K outside [{t[0]}, {t[-1]}] K"
        )
    lam_qd = float(np.interp(temperature, t, tuning.qd_wavelengths))
    lam_c = tuning.lambda_c_base
    if tuning.apply_cavity_shift:
        lam_c += tuning.cavity_shift_nm * (temperature - t[0]) / (t[-1] - t[0])
    return lam_qd - lam_c


def fit_cavity_from_background(spectrum, min_contrast=2.0):
    """Lorentzian peak fit of a background-emission spectrum -> CavityMode.

    spectrum: sequence of (wavelength_nm, intensity). The peak must dominate
    the baseline by at least min_contrast.
    """
    pts = np.asarray(spectrum, float)
    if pts.ndim != 2 or pts.shape[1] != 2 or pts.shape[0] < 5:
        raise NoPeak("need at least 5 (wavelength, intensity) samples")
    lam, inten = pts[:, 0], pts[:, 1]
    baseline = np.median(inten)
    peak = inten.max()
    if baseline <= 0:
        baseline = 1e-12
    if peak / baseline < min_contrast:
        raise NoPeak(f"peak/baseline contrast {peak / baseline:.2f} < {min_contrast}")

    ipk = int(np.argmax(inten))

    def model(l, bg, amp, lc, dl):
        x = 2.0 * (l - lc) / dl
        return bg + amp / (1.0 + x * x)

    span = lam.max() - lam.min()
    p0 = (baseline, peak - baseline, lam[ipk], max(span / 20, 1e-6))
    try:
        popt, _ = curve_fit(
            model, lam, inten, p0=p0,
            bounds=([0, 0, lam.min(), 1e-9], [np.inf, np.inf, lam.max(), span]),
            maxfev=20000,
        )
    except (RuntimeError, ValueError) as exc:
        raise FitDiverged(f"cavity peak fit failed: {exc}") from exc
    _, _, lc, dl = popt
    return CavityMode(lambda_c=float(lc), q_factor=float(lc / dl))
