"""Composed simulation chains driven by an ExperimentConfig.

These are the building blocks shared by the CLI subcommands, the calibration
routine and the one-shot reproduction pipeline.
"""

from dataclasses import dataclass

import numpy as np

from micropost import analysis, hbt, purcell, source

__all__ = ["HbtResult", "run_hbt_chain", "run_lifetime_sweep", "SweepResult"]


@dataclass(frozen=True)
class HbtResult:
    stream: object
    clicks1: np.ndarray
    clicks2: np.ndarray
    histogram: hbt.CorrelationHistogram
    envelope: analysis.EnvelopeFit
    reports: list  # one G2Report per analysis window


def _detection_rng(seed):
    # Distinct fixed stream for the detection chain, decoupled from the
    # source's per-block streams.
    return np.random.default_rng(np.random.SeedSequence((seed, 0xDE7EC7)))


def run_hbt_chain(cfg, n_pulses=None, p2_override=None, correlator_override=None):
    """Source -> beamsplitter/counters -> correlator -> peak-area analysis."""
    train = cfg.pulse_train(n_pulses=n_pulses)
    det1, det2 = cfg.detector_models()
    mode, spec = cfg.correlator()
    if correlator_override is not None:
        mode = correlator_override
    settings = cfg.analysis_settings()

    poisson_mean = cfg.poisson_mean()
    if poisson_mean is not None:
        stream = source.run_poisson_source(
            train, poisson_mean, cfg.decay_model().gamma_max, seed=cfg.seed
        )
    else:
        emission = cfg.emission_model()
        if p2_override is not None:
            emission = source.EmissionModel(
                gamma=emission.gamma, p1=emission.p1, p2=p2_override
            )
        stream = source.run_source(train, cfg.blinking_model(), emission, seed=cfg.seed)

    rng = _detection_rng(cfg.seed)
    clicks1, clicks2 = hbt.beamsplit_and_detect(stream, det1, det2, rng)
    histogram = hbt.correlate(clicks1, clicks2, spec, mode=mode)

    reports = []
    envelope = None
    for window in settings["windows"]:
        areas = analysis.integrate_peaks(histogram, train.period, window, settings["k_max"])
        env = analysis.fit_envelope(areas)
        reports.append(analysis.g2_zero(areas, env, nearest=settings["nearest"]))
        if envelope is None:
            envelope = env
    return HbtResult(
        stream=stream, clicks1=clicks1, clicks2=clicks2,
        histogram=histogram, envelope=envelope, reports=reports,
    )


@dataclass(frozen=True)
class SweepResult:
    detunings: np.ndarray
    points: list  # (abs_detuning, gamma) pairs
    model: purcell.DecayModel
    diagnostics: purcell.FitDiagnostics
    histograms: list


def run_lifetime_sweep(cfg, detunings=None, n_pulses=None):
    """Per-detuning Monte Carlo + streak histogram + lifetime/Lorentzian fit."""
    decay = cfg.decay_model()
    mode = decay.mode
    if detunings is None:
        detunings = np.linspace(-2 * mode.linewidth, 2 * mode.linewidth, 8)
    detunings = np.asarray(detunings, float)
    irf_fwhm, bin_width = cfg.streak_settings()
    blinking = cfg.blinking_model()
    base_emission = cfg.emission_model()

    runs = []
    for i, d in enumerate(detunings):
        gamma = purcell.decay_rate(mode.lambda_c + d, decay)
        emission = source.EmissionModel(gamma=gamma, p1=base_emission.p1,
                                        p2=base_emission.p2)
        train = cfg.pulse_train(n_pulses=n_pulses)
        stream = source.run_source(train, blinking, emission, seed=cfg.seed + i)
        runs.append((d, hbt.streak(stream, irf_fwhm=irf_fwhm, bin_width=bin_width)))

    points, model, diagnostics = analysis.decay_curve(runs, mode.lambda_c)
    return SweepResult(
        detunings=detunings, points=points, model=model,
        diagnostics=diagnostics, histograms=[h for _, h in runs],
    )
