"""Frequency-domain stratified-media solver for the micropost layer stack.

Characteristic-matrix method at normal incidence, lossless media. Provides
reflectance spectra, stopband location, resonance wavelength and cavity Q.
"""

from dataclasses import dataclass

import numpy as np

from micropost.errors import NoDip, NoStopband, ValidationError

__all__ = [
    "Layer",
    "LayerStack",
    "ReflectanceSpectrum",
    "ResonanceResult",
    "build_micropost_stack",
    "layer_matrix",
    "reflectance",
    "reflectance_spectrum",
    "find_resonance",
]


@dataclass(frozen=True)
class Layer:
    """Homogeneous lossless dielectric layer.

    thickness in nm (0 allowed as a degenerate layer), real refractive
    index >= 1.
    """

    thickness: float
    refractive_index: float
    label: str = ""

    def __post_init__(self):
        if self.thickness < 0:
            raise ValidationError(f"layer thickness must be >= 0, got {self.thickness}")
        if self.refractive_index < 1:
            raise ValidationError(
                f"refractive index must be >= 1, got {self.refractive_index}"
            )


@dataclass(frozen=True)
class LayerStack:
    """Ordered layers (top-incidence order) between two semi-infinite media."""

    layers: tuple
    ambient_index: float = 1.0
    substrate_index: float = 3.5

    def __post_init__(self):
        object.__setattr__(self, "layers", tuple(self.layers))
        if self.ambient_index < 1 or self.substrate_index < 1:
            raise ValidationError("ambient and substrate indices must be >= 1")

    def reversed(self):
        return LayerStack(
            layers=tuple(reversed(self.layers)),
            ambient_index=self.substrate_index,
            substrate_index=self.ambient_index,
        )

    @property
    def total_optical_thickness(self):
        return sum(l.thickness * l.refractive_index for l in self.layers)


@dataclass(frozen=True)
class ReflectanceSpectrum:
    """Uniformly sampled reflectance vs wavelength (nm)."""

    wavelengths: np.ndarray
    reflectance: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.wavelengths, float)
        r = np.asarray(self.reflectance, float)
        if w.ndim != 1 or w.shape != r.shape:
            raise ValidationError("wavelengths and reflectance must be 1-D and equal length")
        if not np.all(np.diff(w) > 0):
            raise ValidationError("wavelengths must be strictly increasing")
        if np.any(r < -1e-9) or np.any(r > 1 + 1e-9):
            raise ValidationError("reflectance outside [0, 1] beyond tolerance")
        object.__setattr__(self, "wavelengths", w)
        object.__setattr__(self, "reflectance", r)


@dataclass(frozen=True)
class ResonanceResult:
    """Cavity resonance extracted from a reflectance spectrum."""

    lambda_c: float
    fwhm: float
    q_factor: float
    stopband: tuple


def build_micropost_stack(
    top_pairs,
    bottom_pairs,
    spacer_nm,
    gaas_nm,
    alas_nm,
    n_gaas=3.5,
    n_alas=2.9,
    cap=None,
    ambient_index=1.0,
    substrate_index=3.5,
):
    """Assemble the micropost layer stack in top-incidence order.

    ambient | [cap] | (GaAs/AlAs) x top_pairs | spacer(GaAs) |
    (AlAs/GaAs) x bottom_pairs | substrate.
    """
    if top_pairs < 0 or bottom_pairs < 0:
        raise ValidationError("pair counts must be >= 0")
    for name, v in (("spacer_nm", spacer_nm), ("gaas_nm", gaas_nm), ("alas_nm", alas_nm)):
        if v <= 0:
            raise ValidationError(f"{name} must be > 0, got {v}")
    if n_gaas < 1 or n_alas < 1:
        raise ValidationError("material indices must be >= 1")

    layers = []
    if cap is not None:
        layers.append(cap)
    for _ in range(top_pairs):
        layers.append(Layer(gaas_nm, n_gaas, "GaAs"))
        layers.append(Layer(alas_nm, n_alas, "AlAs"))
    layers.append(Layer(spacer_nm, n_gaas, "spacer"))
    for _ in range(bottom_pairs):
        layers.append(Layer(alas_nm, n_alas, "AlAs"))
        layers.append(Layer(gaas_nm, n_gaas, "GaAs"))
    return LayerStack(tuple(layers), ambient_index, substrate_index)


def layer_matrix(layer, wavelength):
    """2x2 characteristic matrix of one layer at normal incidence.

    [[cos d, i sin d / n], [i n sin d, cos d]] with d = 2 pi n t / lambda.
    Unit determinant for any lossless layer.
    """
    if wavelength <= 0:
        raise ValidationError("wavelength must be > 0")
    n = layer.refractive_index
    delta = 2.0 * np.pi * n * layer.thickness / wavelength
    c, s = np.cos(delta), np.sin(delta)
    return np.array([[c, 1j * s / n], [1j * n * s, c]])


def _amplitude_reflection(m, n0, ns):
    """Amplitude reflection coefficient from a stack matrix and admittances."""
    b = m[..., 0, 0] + m[..., 0, 1] * ns
    c = m[..., 1, 0] + m[..., 1, 1] * ns
    return (n0 * b - c) / (n0 * b + c)


def reflectance(stack, wavelength):
    """Power reflectance of the stack at one wavelength."""
    if wavelength <= 0:
        raise ValidationError("wavelength must be > 0")
    m = np.eye(2, dtype=complex)
    for layer in stack.layers:
        m = m @ layer_matrix(layer, wavelength)
    r = _amplitude_reflection(m, stack.ambient_index, stack.substrate_index)
    return float(min(abs(r) ** 2, 1.0))


def reflectance_spectrum(stack, lambda_min=850.0, lambda_max=1050.0, n_samples=20001):
    """Reflectance sampled uniformly over [lambda_min, lambda_max].

    Broadcasts the matrix product over all wavelengths at once; identical in
    value to per-wavelength reflectance().
    """
    if lambda_min >= lambda_max:
        raise ValidationError("lambda_min must be < lambda_max")
    if n_samples < 2:
        raise ValidationError("n_samples must be >= 2")
    lams = np.linspace(lambda_min, lambda_max, n_samples)
    m = np.broadcast_to(np.eye(2, dtype=complex), (n_samples, 2, 2)).copy()
    for layer in stack.layers:
        n = layer.refractive_index
        delta = 2.0 * np.pi * n * layer.thickness / lams
        c, s = np.cos(delta), np.sin(delta)
        lm = np.empty((n_samples, 2, 2), dtype=complex)
        lm[:, 0, 0] = c
        lm[:, 0, 1] = 1j * s / n
        lm[:, 1, 0] = 1j * n * s
        lm[:, 1, 1] = c
        m = m @ lm
    r = _amplitude_reflection(m, stack.ambient_index, stack.substrate_index)
    return ReflectanceSpectrum(lams, np.minimum(np.abs(r) ** 2, 1.0))


def _high_reflectance_run(mask, wavelengths, min_neighbor_fraction=0.2):
    """Contiguous run of True containing the stopband, bridging the dip.

    A resonance dip below threshold splits the stopband in two comparable
    halves, while side-lobe fringes outside the band form only short runs.
    Starting from the longest run, neighbors at least min_neighbor_fraction
    of its width are merged across the gap; short fringe runs are not.
    """
    idx = np.flatnonzero(mask)
    if idx.size == 0:
        return None
    breaks = np.flatnonzero(np.diff(idx) > 1)
    starts = np.concatenate(([0], breaks + 1))
    ends = np.concatenate((breaks, [idx.size - 1]))
    runs = [(idx[s], idx[e]) for s, e in zip(starts, ends)]

    def width(run):
        return wavelengths[run[1]] - wavelengths[run[0]]

    k = max(range(len(runs)), key=lambda i: width(runs[i]))
    lo, hi = runs[k]
    min_width = min_neighbor_fraction * width(runs[k])
    for run in runs[k + 1:]:
        if width(run) < min_width:
            break
        hi = run[1]
    for run in reversed(runs[:k]):
        if width(run) < min_width:
            break
        lo = run[0]
    return lo, hi


def find_resonance(spectrum, threshold=0.95, min_dip_depth=1e-3, edge_fraction=0.05):
    """Locate the stopband and the interior resonance dip.

    The dip minimum is refined by a parabola through the three samples around
    it; the FWHM comes from linear interpolation of the half-depth crossings
    (half depth relative to the stopband shoulder).
    """
    w = spectrum.wavelengths
    r = spectrum.reflectance
    run = _high_reflectance_run(r >= threshold, w)
    if run is None:
        raise NoStopband(f"no region with reflectance >= {threshold}")
    i0, i1 = run
    if i1 - i0 < 10:
        raise NoStopband("high-reflectance region too narrow to be a stopband")

    margin = max(1, int(edge_fraction * (i1 - i0)))
    lo, hi = i0 + margin, i1 - margin
    if hi - lo < 3:
        raise NoDip("stopband interior too narrow to search for a dip")

    # Most prominent interior local minimum; monotone edge roll-off is not a
    # local minimum and cannot be mistaken for the resonance.
    ri = r[lo : hi + 1]
    local_min = np.flatnonzero((ri[1:-1] <= ri[:-2]) & (ri[1:-1] <= ri[2:])) + 1
    best, best_prom = None, 0.0
    for j in local_min:
        prom = min(ri[:j].max(), ri[j + 1 :].max()) - ri[j]
        if prom > best_prom:
            best, best_prom = j, prom
    if best is None or best_prom < min_dip_depth:
        raise NoDip(
            f"no interior dip with depth >= {min_dip_depth:.2e} "
            f"(best {best_prom:.2e})"
        )
    imin = lo + int(best)
    shoulder = float(min(ri[:best].max(), ri[best + 1 :].max()))
    depth = shoulder - r[imin]

    # Parabolic sub-sample refinement of the dip position.
    if 0 < imin < len(w) - 1:
        y0, y1, y2 = r[imin - 1], r[imin], r[imin + 1]
        denom = y0 - 2 * y1 + y2
        shift = 0.5 * (y0 - y2) / denom if denom != 0 else 0.0
        shift = float(np.clip(shift, -0.5, 0.5))
        lambda_c = w[imin] + shift * (w[1] - w[0])
    else:
        lambda_c = float(w[imin])

    half = shoulder - 0.5 * depth
    j = imin
    while j > i0 and r[j] < half:
        j -= 1
    if r[j] < half:
        raise NoDip("half-depth crossing not found on the short-wavelength side")
    left = w[j] + (half - r[j]) / (r[j + 1] - r[j]) * (w[j + 1] - w[j])
    j = imin
    while j < i1 and r[j] < half:
        j += 1
    if r[j] < half:
        raise NoDip("half-depth crossing not found on the long-wavelength side")
    right = w[j - 1] + (half - r[j - 1]) / (r[j] - r[j - 1]) * (w[j] - w[j - 1])

    fwhm = float(right - left)
    return ResonanceResult(
        lambda_c=float(lambda_c),
        fwhm=fwhm,
        q_factor=float(lambda_c / fwhm),
        stopband=(float(w[i0]), float(w[i1])),
    )
