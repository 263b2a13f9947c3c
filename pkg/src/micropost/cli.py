"""Command-line front end.

Subcommands:
  cavity          reflectance spectrum and resonance of a layer-stack preset
  lifetime-sweep  Monte Carlo lifetime vs detuning plus Lorentzian fit
  hbt             source -> beamsplitter -> correlator -> g2 report
  calibrate-p2    bisect the two-photon probability to a target g2(0)
  reproduce       one-shot pipeline over all bundled presets
  analyze         peak-area analysis of an existing histogram CSV

Exit codes: 0 success, 2 validation/config error, 3 simulation or fit
failure, 4 reproduction acceptance-check failure.
"""

import argparse
import sys
from pathlib import Path

from micropost import analysis, cavity, fdtd, io_utils, purcell
from micropost.calibrate import calibrate_p2, g2_closed_form_no_blinking
from micropost.config import load_config
from micropost.errors import MicropostError, ValidationError
from micropost.pipeline import run_hbt_chain, run_lifetime_sweep
from micropost.reproduce import run_reproduction

__all__ = ["main"]


def _add_common(parser, preset_default):
    parser.add_argument("--config", metavar="PATH", default=None,
                        help="preset file (default: bundled presets)")
    parser.add_argument("--preset", default=preset_default,
                        help=f"preset name (default: {preset_default})")
    parser.add_argument("--seed", type=int, default=None,
                        help="override the config seed")
    parser.add_argument("--out", metavar="DIR", default="out",
                        help="output directory (default: ./out)")


def _outdir(args):
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_cavity(args):
    cfg = load_config(args.config, seed=args.seed).preset(args.preset)
    stack = cfg.stack()
    lo, hi, n = cfg.spectrum_band()
    spectrum = cavity.reflectance_spectrum(stack, lo, hi, n)
    res = cavity.find_resonance(spectrum)
    out = _outdir(args)
    io_utils.write_spectrum_csv(out / "cavity_spectrum.csv", spectrum,
                                config_hash=cfg.config_hash)
    lines = [
        f"config_hash = {cfg.config_hash}",
        f"lambda_c_nm = {res.lambda_c:.3f}",
        f"fwhm_nm = {res.fwhm:.4f}",
        f"q_factor = {res.q_factor:.1f}",
        f"stopband_nm = {res.stopband[0]:.1f}..{res.stopband[1]:.1f}",
    ]
    if args.cross_check:
        import numpy as np
        grid = fdtd.discretize_stack(stack)
        band_lo, band_hi = res.stopband
        fd = fdtd.run_reflectance(grid, lambda_min=band_lo, lambda_max=band_hi,
                                  n_samples=200, q_allowance=res.q_factor)
        tm = np.array([cavity.reflectance(stack, lam) for lam in fd.wavelengths])
        rms = float(np.sqrt(np.mean((fd.reflectance - tm) ** 2)))
        spacer = next(i for i, l in enumerate(stack.layers) if l.label == "spacer")
        a, b = grid.layer_cell_span(spacer)
        q_fd, _ = fdtd.run_ringdown(grid, (a + b) // 2, res.lambda_c,
                                    q_allowance=2 * res.q_factor)
        lines += [
            f"fdtd_reflectance_rms = {rms:.5f}",
            f"fdtd_q_factor = {q_fd:.1f}",
            f"q_relative_difference = {abs(q_fd - res.q_factor) / res.q_factor:.4f}",
        ]
    io_utils.write_report(out / "cavity_report.txt", lines)
    print("\n".join(lines))
    return 0


def cmd_lifetime_sweep(args):
    cfg = load_config(args.config, seed=args.seed).preset(args.preset)
    sweep = run_lifetime_sweep(cfg, n_pulses=args.pulses)
    out = _outdir(args)
    io_utils.write_decay_curve_csv(out / "decay_curve.csv", sweep.points,
                                   config_hash=cfg.config_hash)
    d = sweep.diagnostics
    lines = [
        f"config_hash = {cfg.config_hash}",
        f"purcell_factor = {purcell.purcell_factor(sweep.model):.3f}",
        f"gamma_max_per_ns = {sweep.model.gamma_max:.4f}",
        f"gamma_min_per_ns = {sweep.model.gamma_min:.4f}",
        f"fitted_q_factor = {sweep.model.mode.q_factor:.1f}",
        f"fit_residual_norm = {d.residual_norm:.4g}",
    ]
    io_utils.write_report(out / "lifetime_sweep_report.txt", lines)
    print("\n".join(lines))
    return 0


def _g2_lines(cfg, result):
    lines = [f"config_hash = {cfg.config_hash}"]
    for rep in result.reports:
        w = f"{rep.window:g}"
        lines += [
            f"window_{w}ns.g2_zero = {rep.g2_zero:.4f}",
            f"window_{w}ns.g2_zero_stderr = {rep.g2_zero_stderr:.4f}",
            f"window_{w}ns.g_nearest = {rep.g_nearest:.4f}",
        ]
    env = result.envelope
    lines += [
        f"envelope.a_inf = {env.a_inf:.2f}",
        f"envelope.beta = {env.beta:.4f}",
        f"envelope.tau_b_ns = {env.tau_b:.3f}",
    ]
    return lines


def cmd_hbt(args):
    cfg = load_config(args.config, seed=args.seed).preset(args.preset)
    result = run_hbt_chain(cfg, n_pulses=args.pulses,
                           correlator_override=args.correlator)
    out = _outdir(args)
    io_utils.write_histogram_csv(out / "correlation_histogram.csv",
                                 result.histogram, config_hash=cfg.config_hash)
    lines = _g2_lines(cfg, result)
    io_utils.write_report(out / "g2_report.txt", lines)
    print("\n".join(lines))
    return 0


def cmd_analyze(args):
    cfg = load_config(args.config, seed=args.seed).preset(args.preset)
    hist, stored_hash = io_utils.read_histogram_csv(args.histogram)
    if stored_hash is not None and args.expect_hash and stored_hash != cfg.config_hash:
        raise ValidationError(
            f"histogram config hash {stored_hash} does not match preset "
            f"{args.preset} hash {cfg.config_hash}"
        )
    settings = cfg.analysis_settings()
    period = cfg.pulse_train(n_pulses=1).period
    lines = [f"config_hash = {cfg.config_hash}"]
    for window in settings["windows"]:
        areas = analysis.integrate_peaks(hist, period, window, settings["k_max"])
        env = analysis.fit_envelope(areas)
        rep = analysis.g2_zero(areas, env, nearest=settings["nearest"])
        w = f"{window:g}"
        lines += [
            f"window_{w}ns.g2_zero = {rep.g2_zero:.4f}",
            f"window_{w}ns.g2_zero_stderr = {rep.g2_zero_stderr:.4f}",
            f"window_{w}ns.g_nearest = {rep.g_nearest:.4f}",
        ]
    out = _outdir(args)
    io_utils.write_report(out / "g2_report.txt", lines)
    print("\n".join(lines))
    return 0


def cmd_calibrate_p2(args):
    cfg = load_config(args.config, seed=args.seed).preset(args.preset)
    p2 = calibrate_p2(args.target, cfg, tolerance=args.tolerance,
                      n_pulses=args.pulses)
    p1 = cfg.emission_model().p1
    lines = [
        f"config_hash = {cfg.config_hash}",
        f"target_g2 = {args.target}",
        f"calibrated_p2 = {p2:.6f}",
        f"closed_form_no_blinking_g2 = {g2_closed_form_no_blinking(p1, p2):.4f}",
    ]
    out = _outdir(args)
    io_utils.write_report(out / "calibration_report.txt", lines)
    print("\n".join(lines))
    return 0


def cmd_reproduce(args):
    config = load_config(args.config, seed=args.seed)
    report = run_reproduction(
        config, args.out, fast=args.fast,
        cross_check=args.cross_check, plots=args.plots,
    )
    print("\n".join(report.lines()))
    return 0 if report.all_passed else 4


def build_parser():
    parser = argparse.ArgumentParser(
        prog="micropost",
        description="Simulator and analysis toolkit for a quantum-dot "
                    "micropost single-photon source.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("cavity", help="stack reflectance and resonance")
    _add_common(p, "reference_stack")
    p.add_argument("--cross-check", action="store_true",
                   help="also run the FDTD solver and compare")
    p.set_defaults(func=cmd_cavity)

    p = sub.add_parser("lifetime-sweep", help="lifetime vs detuning")
    _add_common(p, "nominal_dot")
    p.add_argument("--pulses", type=int, default=None,
                   help="pulses per detuning (default: preset value)")
    p.set_defaults(func=cmd_lifetime_sweep)

    p = sub.add_parser("hbt", help="correlation histogram and g2 report")
    _add_common(p, "calibrated_dot")
    p.add_argument("--pulses", type=int, default=None)
    p.add_argument("--correlator", choices=("tac", "all_pairs"), default=None,
                   help="override the preset's correlator mode")
    p.set_defaults(func=cmd_hbt)

    p = sub.add_parser("analyze", help="g2 analysis of an existing histogram CSV")
    _add_common(p, "calibrated_dot")
    p.add_argument("histogram", help="histogram CSV path")
    p.add_argument("--expect-hash", action="store_true",
                   help="fail when the CSV's config hash mismatches the preset")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("calibrate-p2", help="tune p2 to a target g2(0)")
    _add_common(p, "calibrated_dot")
    p.add_argument("--target", type=float, default=0.02)
    p.add_argument("--tolerance", type=float, default=0.002)
    p.add_argument("--pulses", type=int, default=None)
    p.set_defaults(func=cmd_calibrate_p2)

    p = sub.add_parser("reproduce", help="one-shot reproduction pipeline")
    _add_common(p, "reference_stack")
    p.add_argument("--fast", action="store_true",
                   help="cap Monte Carlo stages at 1e5 pulses, widen tolerances")
    p.add_argument("--cross-check", action="store_true",
                   help="include the FDTD cross-validation stage")
    p.add_argument("--plots", action="store_true", help="write SVG plots")
    p.set_defaults(func=cmd_reproduce)

    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except MicropostError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
