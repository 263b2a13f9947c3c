"""1-D Yee-scheme time-domain solver over the same layer stacks.

Serves as an independent oracle for the frequency-domain solver: broadband
reflectance via incident/total field subtraction, and cavity Q via an
energy-envelope ringdown fit. Boundaries use a matched graded-conductivity
absorber. Time step is fixed at 0.99 dx/c.
"""

from dataclasses import dataclass

import numpy as np
from numba import njit

from micropost.cavity import ReflectanceSpectrum
from micropost.constants import C_NM_PER_NS
from micropost.errors import (
    FitDiverged,
    NoDecayDetected,
    ResolutionTooCoarse,
    ValidationError,
)

__all__ = [
    "Grid1D",
    "RingdownRecord",
    "discretize_stack",
    "run_reflectance",
    "run_ringdown",
    "simulate",
]

_MIN_CELLS_PER_WAVELENGTH = 20
_MIN_RESOLVED_WAVELENGTH = 850.0
_DEFAULT_ABSORBER_CELLS = 64
_DEFAULT_PAD_CELLS = 400  # free cells between absorber and stack, each side


@dataclass(frozen=True)
class Grid1D:
    """Discretized stack: per-cell relative permittivity plus geometry."""

    dx: float
    permittivity: np.ndarray
    absorber: int
    layer_bounds: np.ndarray  # cell index of each layer boundary, len = n_layers + 1

    def __post_init__(self):
        if self.dx <= 0:
            raise ValidationError("dx must be > 0")
        if np.any(self.permittivity < 1):
            raise ValidationError("relative permittivity must be >= 1 everywhere")

    @property
    def n_cells(self):
        return len(self.permittivity)

    @property
    def stack_start(self):
        return int(self.layer_bounds[0])

    @property
    def stack_end(self):
        return int(self.layer_bounds[-1])

    def layer_cell_span(self, layer_index):
        return int(self.layer_bounds[layer_index]), int(self.layer_bounds[layer_index + 1])


@dataclass(frozen=True)
class RingdownRecord:
    """Probe field samples at uniform spacing, with the drive frequency."""

    probe_times: np.ndarray
    field_samples: np.ndarray
    omega0: float  # rad/ns


def discretize_stack(stack, dx=2.0, pad_cells=_DEFAULT_PAD_CELLS, absorber=_DEFAULT_ABSORBER_CELLS):
    """Map a LayerStack onto a uniform grid.

    Cell permittivity is n^2 of the containing layer; layer boundaries snap
    to the nearest cell edge (error < dx per layer). Ambient padding on the
    incidence side, substrate padding on the exit side, absorber at both ends.
    """
    indices = [stack.ambient_index, stack.substrate_index] + [
        l.refractive_index for l in stack.layers
    ]
    n_max = max(indices)
    dx_max = _MIN_RESOLVED_WAVELENGTH / (n_max * _MIN_CELLS_PER_WAVELENGTH)
    if dx > dx_max:
        raise ResolutionTooCoarse(
            f"dx = {dx} nm exceeds {dx_max:.3f} nm needed for "
            f"{_MIN_CELLS_PER_WAVELENGTH} cells/wavelength at "
            f"{_MIN_RESOLVED_WAVELENGTH} nm in n = {n_max}"
        )
    total = absorber + pad_cells
    eps = [stack.ambient_index**2] * total
    bounds = [len(eps)]
    for layer in stack.layers:
        m = int(round(layer.thickness / dx))
        eps.extend([layer.refractive_index**2] * m)
        bounds.append(len(eps))
    eps.extend([stack.substrate_index**2] * total)
    return Grid1D(
        dx=dx,
        permittivity=np.asarray(eps, float),
        absorber=absorber,
        layer_bounds=np.asarray(bounds, np.int64),
    )


@njit(cache=True)
def _step_loop(ez, hy, ca, cb, dh, eh, src, src_cell, probe_cell,
               record_every, rec, energy, e_lo, e_hi, eps):
    nrec = 0
    for t in range(src.shape[0]):
        for i in range(hy.shape[0]):
            hy[i] = dh[i] * hy[i] + eh[i] * (ez[i + 1] - ez[i])
        for i in range(1, ez.shape[0] - 1):
            ez[i] = ca[i] * ez[i] + cb[i] * (hy[i] - hy[i - 1])
        ez[src_cell] += src[t]
        if t % record_every == 0:
            rec[nrec] = ez[probe_cell]
            u = 0.0
            for i in range(e_lo, e_hi):
                u += eps[i] * ez[i] * ez[i]
            for i in range(e_lo, min(e_hi, hy.shape[0])):
                u += hy[i] * hy[i]
            energy[nrec] = u
            nrec += 1
    return nrec


def _update_coefficients(grid):
    """Yee update coefficients with matched graded conductivity at both ends."""
    eps = grid.permittivity
    n = len(eps)
    dt = 0.99 * grid.dx / C_NM_PER_NS
    sigma = np.zeros(n)
    a = grid.absorber
    if a > 0:
        profile = ((np.arange(a) + 0.5) / a) ** 3 * (0.33 / dt)
        sigma[:a] = profile[::-1]
        sigma[-a:] = profile
    sigma_h = 0.5 * (sigma[:-1] + sigma[1:])  # matched loss at the H points
    ca = (1 - sigma * dt / 2) / (1 + sigma * dt / 2)
    cb = (dt * C_NM_PER_NS / (grid.dx * eps)) / (1 + sigma * dt / 2)
    dh = (1 - sigma_h * dt / 2) / (1 + sigma_h * dt / 2)
    eh = (dt * C_NM_PER_NS / grid.dx) / (1 + sigma_h * dt / 2)
    return ca, cb, dh, eh, dt


def simulate(grid, source_cell, source_waveform, probe_cell, record_every=32):
    """Run the Yee update with an additive point source.

    Returns (field_record, energy_record, sample_dt). The energy record sums
    eps*E^2 + H^2 over the non-absorber interior, sampled every record_every
    steps together with the probe field.
    """
    ca, cb, dh, eh, dt = _update_coefficients(grid)
    n = grid.n_cells
    ez = np.zeros(n)
    hy = np.zeros(n - 1)
    src = np.ascontiguousarray(source_waveform, dtype=float)
    nrec = (len(src) + record_every - 1) // record_every
    rec = np.zeros(nrec)
    energy = np.zeros(nrec)
    _step_loop(
        ez, hy, ca, cb, dh, eh, src, source_cell, probe_cell,
        record_every, rec, energy, grid.absorber, n - grid.absorber,
        grid.permittivity,
    )
    return rec, energy, dt * record_every


def _gaussian_sine(t, t0, tau, f0):
    return np.exp(-(((t - t0) / tau) ** 2)) * np.sin(2 * np.pi * f0 * t)


def run_reflectance(
    grid,
    pulse_center_nm=950.0,
    pulse_bandwidth_nm=120.0,
    lambda_min=None,
    lambda_max=None,
    n_samples=400,
    q_allowance=4000.0,
    record_every=32,
):
    """Broadband reflectance from two runs: ambient-only reference and full grid.

    A Gaussian-modulated sine is launched in the ambient padding; the
    reflected field at a probe between source and stack is the total-field
    minus reference-field record. R(lambda) is the ratio of the discrete
    Fourier transforms of reflected and incident records. q_allowance sets
    how long the record runs to let cavity ringing decay (12 energy decay
    times at that Q).
    """
    if lambda_min is None:
        lambda_min = pulse_center_nm - pulse_bandwidth_nm / 2
    if lambda_max is None:
        lambda_max = pulse_center_nm + pulse_bandwidth_nm / 2
    if not (lambda_min < pulse_center_nm < lambda_max):
        raise ValidationError("requested band must contain the pulse center")

    dt = 0.99 * grid.dx / C_NM_PER_NS
    tau_p = pulse_center_nm**2 / (np.pi * pulse_bandwidth_nm * C_NM_PER_NS)
    t0 = 5 * tau_p
    transit = 2 * grid.n_cells * grid.dx * np.sqrt(grid.permittivity.max()) / C_NM_PER_NS
    ring = 12 * q_allowance * pulse_center_nm / (2 * np.pi * C_NM_PER_NS)
    n_steps = int((t0 + transit + ring) / dt)
    t = np.arange(n_steps) * dt
    src = _gaussian_sine(t, t0, tau_p, C_NM_PER_NS / pulse_center_nm)

    source_cell = grid.absorber + 50
    probe_cell = grid.absorber + 200
    if probe_cell >= grid.stack_start:
        raise ValidationError("ambient padding too small for source/probe placement")

    ref_grid = Grid1D(
        dx=grid.dx,
        permittivity=np.full(grid.n_cells, grid.permittivity[0]),
        absorber=grid.absorber,
        layer_bounds=grid.layer_bounds,
    )
    rec_ref, _, sample_dt = simulate(ref_grid, source_cell, src, probe_cell, record_every)
    rec_tot, _, _ = simulate(grid, source_cell, src, probe_cell, record_every)
    reflected = rec_tot - rec_ref

    lams = np.linspace(lambda_min, lambda_max, n_samples)
    ts = np.arange(len(rec_ref)) * sample_dt
    phase = np.exp(-2j * np.pi * np.outer(C_NM_PER_NS / lams, ts))
    incident_ft = phase @ rec_ref
    reflected_ft = phase @ reflected
    r = np.abs(reflected_ft / incident_ft) ** 2
    return ReflectanceSpectrum(lams, np.minimum(r, 1.0))


def run_ringdown(
    grid,
    source_cell,
    lambda0,
    envelope_cycles=200,
    q_allowance=8000.0,
    record_every=32,
    min_decay_factor=2.0,
    min_stored_fraction=1e-4,
):
    """Excite a resonance, fit the stored-energy decay, return (Q, record).

    The source is a narrowband Gaussian-modulated sine at lambda0. After
    turn-off and a transient flush (non-resonant energy leaving the stack),
    log U(t) is fit linearly; Q = -omega0 / slope. The fit uses only the top
    three decades of the decay so a slowly leaking background floor cannot
    contaminate the slope, and raises NoDecayDetected when the stored energy
    at the fit start is below min_stored_fraction of the drive peak (nothing
    resonant was excited).
    """
    if lambda0 <= 0:
        raise ValidationError("lambda0 must be > 0")
    if not (0 < source_cell < grid.n_cells - 1):
        raise ValidationError("source_cell outside grid")

    dt = 0.99 * grid.dx / C_NM_PER_NS
    f0 = C_NM_PER_NS / lambda0
    omega0 = 2 * np.pi * f0
    # For a low-Q resonance a long drive would let the mode decay to the
    # noise floor during the post-drive flush; cap the envelope so the flush
    # (~2 tau_p) costs only a bounded number of cavity decay times.
    tau_p = min(envelope_cycles, max(q_allowance / 8.0, 10.0)) / f0
    t0 = 4 * tau_p
    transit = 4 * grid.n_cells * grid.dx * np.sqrt(grid.permittivity.max()) / C_NM_PER_NS
    ring = 4 * q_allowance / omega0
    # Budget: drive, post-drive flush (2 tau_p + transit, matching the fit
    # start below), then the ringdown fit window itself.
    n_steps = int((t0 + 2 * tau_p + transit + ring) / dt)
    t = np.arange(n_steps) * dt
    src = _gaussian_sine(t, t0, tau_p, f0)

    probe_cell = min(source_cell + 5, grid.n_cells - 2)
    rec, energy, sample_dt = simulate(grid, source_cell, src, probe_cell, record_every)
    times = np.arange(len(rec)) * sample_dt

    fit_mask = times > (t0 + 2 * tau_p + transit)
    if fit_mask.sum() < 10:
        raise FitDiverged("ringdown record too short for the envelope fit")
    u = energy[fit_mask]
    tt = times[fit_mask]
    if np.any(u <= 0):
        raise NoDecayDetected("stored energy vanished; nothing to fit")
    if u[0] < min_stored_fraction * energy.max():
        raise NoDecayDetected(
            f"stored energy at the fit start is {u[0] / energy.max():.2e} of "
            f"the drive peak (< {min_stored_fraction:.0e}); drive is off resonance"
        )
    if u[0] / u[-1] < min_decay_factor:
        raise NoDecayDetected(
            f"energy decayed by {u[0] / u[-1]:.3f}x over the fit window "
            f"(< {min_decay_factor}x); Q beyond measurable at this run length"
        )
    keep = u > u[0] * 1e-3
    if keep.sum() < 10:
        raise FitDiverged("ringdown record too short for the envelope fit")
    slope, _ = np.polyfit(tt[keep], np.log(u[keep]), 1)
    if not np.isfinite(slope) or slope >= 0:
        raise NoDecayDetected("non-decaying energy envelope")
    q = -omega0 / slope
    return float(q), RingdownRecord(probe_times=times, field_samples=rec, omega0=omega0)
