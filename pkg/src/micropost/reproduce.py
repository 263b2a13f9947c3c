"""One-shot reproduction pipeline.

Runs the full chain on the bundled presets and checks the headline numbers:
planar cavity Q and resonance wavelength, Purcell factor from a lifetime
sweep, the on/off lifetime pair, g2(0) for the calibrated source plus the
Poisson and ideal benchmarks, and the blinking envelope parameters. Each
check carries a pass/fail flag; artifacts (CSV, report, optional SVG plots)
are written to an output directory.
"""

import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from micropost import analysis, cavity, fdtd, hbt, io_utils, purcell, source
from micropost.pipeline import run_hbt_chain, run_lifetime_sweep

__all__ = ["CheckResult", "ReproductionReport", "run_reproduction"]

FAST_PULSES = 100_000


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    value: float
    expected: str


@dataclass
class ReproductionReport:
    seed: int
    fast: bool
    checks: list = field(default_factory=list)
    values: dict = field(default_factory=dict)
    runtimes: dict = field(default_factory=dict)
    config_hashes: dict = field(default_factory=dict)

    @property
    def all_passed(self):
        return all(c.passed for c in self.checks)

    def add_check(self, name, passed, value, expected):
        self.checks.append(CheckResult(name, bool(passed), float(value), expected))

    def lines(self):
        out = [f"seed = {self.seed}", f"fast = {self.fast}"]
        for name, h in sorted(self.config_hashes.items()):
            out.append(f"config_hash.{name} = {h}")
        for key, val in self.values.items():
            out.append(f"{key} = {val}")
        for name, t in self.runtimes.items():
            out.append(f"runtime_s.{name} = {t:.2f}")
        for c in self.checks:
            flag = "PASS" if c.passed else "FAIL"
            out.append(f"check.{c.name} = {flag} ({c.value:.6g}, expected {c.expected})")
        out.append(f"all_passed = {self.all_passed}")
        return out


def _within(value, center, rel):
    return abs(value - center) <= rel * center


def _stage(report, name):
    class _Timer:
        def __enter__(self):
            self.t0 = time.perf_counter()
            return self

        def __exit__(self, *exc):
            report.runtimes[name] = time.perf_counter() - self.t0
            return False

    return _Timer()


def _run_cavity(config, report, out_dir, cross_check):
    cfg = config.preset("reference_stack")
    report.config_hashes["reference_stack"] = cfg.config_hash
    stack = cfg.stack()
    lo, hi, n = cfg.spectrum_band()
    with _stage(report, "cavity"):
        spectrum = cavity.reflectance_spectrum(stack, lo, hi, n)
        res = cavity.find_resonance(spectrum)
    io_utils.write_spectrum_csv(out_dir / "cavity_spectrum.csv", spectrum,
                                config_hash=cfg.config_hash)
    report.values["cavity.lambda_c_nm"] = f"{res.lambda_c:.3f}"
    report.values["cavity.q_factor"] = f"{res.q_factor:.1f}"
    report.add_check("cavity_q", 3000.0 <= res.q_factor <= 5000.0,
                     res.q_factor, "4000 +- 25%")
    report.add_check("cavity_lambda", 940.0 <= res.lambda_c <= 980.0,
                     res.lambda_c, "[940, 980] nm")

    if cross_check:
        with _stage(report, "fdtd_cross_check"):
            grid = fdtd.discretize_stack(stack)
            band_lo, band_hi = res.stopband
            fd = fdtd.run_reflectance(grid, lambda_min=band_lo, lambda_max=band_hi,
                                      n_samples=200, q_allowance=res.q_factor)
            tm = np.array([cavity.reflectance(stack, lam) for lam in fd.wavelengths])
            rms = float(np.sqrt(np.mean((fd.reflectance - tm) ** 2)))
            spacer = next(i for i, l in enumerate(stack.layers) if l.label == "spacer")
            a, b = grid.layer_cell_span(spacer)
            q_fd, ringdown = fdtd.run_ringdown(
                grid, (a + b) // 2, res.lambda_c, q_allowance=2 * res.q_factor,
            )
        io_utils.write_ringdown_csv(out_dir / "fdtd_ringdown.csv", ringdown,
                                    config_hash=cfg.config_hash)
        report.values["fdtd.reflectance_rms"] = f"{rms:.5f}"
        report.values["fdtd.q_factor"] = f"{q_fd:.1f}"
        report.add_check("fdtd_reflectance_rms", rms < 0.01, rms, "< 1%")
        report.add_check("fdtd_q_agreement",
                         abs(q_fd - res.q_factor) / res.q_factor < 0.10,
                         q_fd, f"within 10% of {res.q_factor:.0f}")
    return spectrum, res


def _run_sweep(config, report, out_dir, n_pulses, fast):
    cfg = config.preset("nominal_dot")
    report.config_hashes["nominal_dot"] = cfg.config_hash
    with _stage(report, "lifetime_sweep"):
        sweep = run_lifetime_sweep(cfg, n_pulses=n_pulses)
    io_utils.write_decay_curve_csv(out_dir / "decay_curve.csv", sweep.points,
                                   config_hash=cfg.config_hash)
    fp = purcell.purcell_factor(sweep.model)
    q_fit = sweep.model.mode.q_factor
    report.values["sweep.purcell_factor"] = f"{fp:.3f}"
    report.values["sweep.q_factor"] = f"{q_fit:.1f}"
    fp_tol, q_tol = (0.25, 0.35) if fast else (0.10, 0.15)
    report.add_check("purcell_factor", _within(fp, 5.0, fp_tol), fp,
                     f"5 +- {fp_tol:.0%}")
    report.add_check("sweep_q", _within(q_fit, 1270.0, q_tol), q_fit,
                     f"1270 +- {q_tol:.0%}")
    return sweep


def _run_lifetime_pair(config, report, n_pulses, fast):
    cfg = config.preset("nominal_dot")
    decay = cfg.decay_model()
    train = cfg.pulse_train(n_pulses=n_pulses)
    blinking = cfg.blinking_model()
    base = cfg.emission_model()
    irf_fwhm, bin_width = cfg.streak_settings()
    taus = {}
    with _stage(report, "lifetime_pair"):
        for label, gamma in (("on", decay.gamma_max), ("off", decay.gamma_min)):
            emission = source.EmissionModel(gamma=gamma, p1=base.p1, p2=base.p2)
            stream = source.run_source(train, blinking, emission, seed=cfg.seed)
            hist = hbt.streak(stream, irf_fwhm=irf_fwhm, bin_width=bin_width)
            taus[label], _, _ = analysis.fit_lifetime(hist)
    ratio = taus["off"] / taus["on"]
    report.values["lifetime.tau_on_ns"] = f"{taus['on']:.4f}"
    report.values["lifetime.tau_off_ns"] = f"{taus['off']:.4f}"
    report.values["lifetime.ratio"] = f"{ratio:.3f}"
    tau_tol, ratio_tol = (0.06, 0.12) if fast else (0.02, 0.05)
    report.add_check("tau_on", _within(taus["on"], 0.200, tau_tol), taus["on"],
                     f"0.200 ns +- {tau_tol:.0%}")
    report.add_check("lifetime_ratio", _within(ratio, 5.0, ratio_tol), ratio,
                     f"5 +- {ratio_tol:.0%}")
    return taus


def _run_g2(config, report, out_dir, n_pulses, fast):
    cfg = config.preset("calibrated_dot")
    report.config_hashes["calibrated_dot"] = cfg.config_hash
    with _stage(report, "g2_calibrated"):
        result = run_hbt_chain(cfg, n_pulses=n_pulses)
    io_utils.write_histogram_csv(out_dir / "correlation_histogram.csv",
                                 result.histogram, config_hash=cfg.config_hash)
    for rep in result.reports:
        w = f"{rep.window:g}"
        report.values[f"g2.window_{w}ns.g2_zero"] = f"{rep.g2_zero:.4f}"
        report.values[f"g2.window_{w}ns.g_nearest"] = f"{rep.g_nearest:.4f}"
    main = result.reports[0]
    g2_tol = 0.012 if fast else 0.005
    report.add_check("g2_zero_4ns", abs(main.g2_zero - 0.020) <= g2_tol,
                     main.g2_zero, f"0.020 +- {g2_tol}")
    report.add_check("g_below_g2", main.g_nearest < main.g2_zero,
                     main.g_nearest, f"< g2(0) = {main.g2_zero:.4f}")

    env = result.envelope
    report.values["envelope.beta"] = f"{env.beta:.4f}"
    report.values["envelope.tau_b_ns"] = f"{env.tau_b:.3f}"
    blk = cfg.blinking_model()
    beta_true = blk.k_off / blk.k_on
    tau_true = 1.0 / (blk.k_on + blk.k_off)
    env_tol = 0.5 if fast else 0.15
    report.add_check("envelope_beta", _within(env.beta, beta_true, env_tol),
                     env.beta, f"{beta_true:.3f} +- {env_tol:.0%}")
    report.add_check("envelope_tau_b", _within(env.tau_b, tau_true, env_tol),
                     env.tau_b, f"{tau_true:.2f} ns +- {env_tol:.0%}")

    with _stage(report, "g2_poisson"):
        cfg_p = config.preset("poisson_benchmark")
        report.config_hashes["poisson_benchmark"] = cfg_p.config_hash
        poisson = run_hbt_chain(cfg_p, n_pulses=n_pulses)
    g2_p = poisson.reports[0].g2_zero
    report.values["g2.poisson"] = f"{g2_p:.4f}"
    p_tol = 0.15 if fast else 0.02
    report.add_check("g2_poisson", abs(g2_p - 1.0) <= p_tol, g2_p,
                     f"1.00 +- {p_tol}")

    with _stage(report, "g2_ideal"):
        cfg_i = config.preset("ideal_dot")
        report.config_hashes["ideal_dot"] = cfg_i.config_hash
        ideal = run_hbt_chain(cfg_i, n_pulses=n_pulses)
    a0 = ideal.reports[0].a0
    report.values["g2.ideal_central_area"] = f"{a0:g}"
    report.add_check("ideal_central_area", a0 == 0.0, a0, "exactly 0")
    return result


def _write_plots(out_dir, resonance_spectrum, sweep, g2_result):
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(5, 3.2))
    ax.plot(resonance_spectrum.wavelengths, resonance_spectrum.reflectance, lw=0.8)
    ax.set_xlabel("wavelength (nm)")
    ax.set_ylabel("reflectance")
    fig.tight_layout()
    fig.savefig(out_dir / "cavity_spectrum.svg")
    plt.close(fig)

    d = np.array([p[0] for p in sweep.points])
    g = np.array([p[1] for p in sweep.points])
    fig, ax = plt.subplots(figsize=(5, 3.2))
    ax.plot(d, g, "o", label="fitted rates")
    dd = np.linspace(0, d.max() * 1.1, 200)
    model = sweep.model
    ax.plot(dd, [purcell.decay_rate(model.mode.lambda_c + x, model) for x in dd],
            "-", label="Lorentzian fit")
    ax.set_xlabel("|detuning| (nm)")
    ax.set_ylabel("decay rate (1/ns)")
    ax.legend()
    fig.tight_layout()
    fig.savefig(out_dir / "decay_curve.svg")
    plt.close(fig)

    hist = g2_result.histogram
    fig, ax = plt.subplots(figsize=(6, 3.2))
    centers = hist.bin_centers
    keep = np.abs(centers) <= 66.0
    ax.plot(centers[keep], hist.counts[keep], lw=0.6)
    ax.set_xlabel("delay (ns)")
    ax.set_ylabel("coincidences")
    fig.tight_layout()
    fig.savefig(out_dir / "correlation_histogram.svg")
    plt.close(fig)


def run_reproduction(config, out_dir, seed=None, fast=False, cross_check=False,
                     plots=False):
    """Run every stage on the bundled presets and return a ReproductionReport.

    config is a loaded ConfigFile; out_dir receives the CSV artifacts, the
    key-value report and (optionally) SVG plots. fast mode caps every Monte
    Carlo stage at 1e5 pulses and widens the statistical tolerances.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    if seed is not None:
        config = type(config)(presets=config.presets, seed=seed)
    report = ReproductionReport(seed=config.seed, fast=fast)

    spectrum, _ = _run_cavity(config, report, out_dir, cross_check)

    n_sweep = FAST_PULSES if fast else None
    sweep = _run_sweep(config, report, out_dir, n_sweep, fast)
    _run_lifetime_pair(config, report, n_sweep, fast)

    n_hbt = FAST_PULSES if fast else None
    g2_result = _run_g2(config, report, out_dir, n_hbt, fast)

    if plots:
        with _stage(report, "plots"):
            _write_plots(out_dir, spectrum, sweep, g2_result)

    io_utils.write_report(out_dir / "reproduction_report.txt", report.lines())
    _write_report_csv(out_dir / "reproduction_report.csv", report)
    return report


def _write_report_csv(path, report):
    names = [c.name for c in report.checks]
    values = [f"{c.value:.6g}" for c in report.checks]
    flags = ["PASS" if c.passed else "FAIL" for c in report.checks]
    with open(path, "w") as fh:
        fh.write("check," + ",".join(names) + "\n")
        fh.write("value," + ",".join(values) + "\n")
        fh.write("status," + ",".join(flags) + "\n")
