"""Calibration of the two-photon probability against a target g2(0).

The source-level two-photon probability is not observable directly; it is
tuned by bisection on brute-force simulations at a fixed seed schedule until
the measured central-to-asymptotic area ratio hits the target.
"""

from micropost.errors import NonBracketing, ValidationError
from micropost.pipeline import run_hbt_chain

__all__ = ["calibrate_p2", "g2_closed_form_no_blinking"]


def g2_closed_form_no_blinking(p1, p2):
    """Exact area ratio for a blinking-free source: 2 p2 / (p1 + 2 p2)^2.

    The central peak collects p2 coincidences per pulse pair-normalized by
    the squared mean photon number, independent of detection efficiency.
    """
    mu = p1 + 2.0 * p2
    if mu == 0:
        return 0.0
    return 2.0 * p2 / (mu * mu)


def calibrate_p2(target_g2, cfg, tolerance=0.002, n_pulses=None, max_iter=40,
                 window_index=0):
    """Bisection on p2 until the simulated g2(0) is within tolerance of target.

    Restricted to p2 <= p1/2, the rising branch of g2(p2), so the root is
    unique. Raises NonBracketing when the target is unreachable there.
    """
    if not (0 <= target_g2 < 1e3):
        raise ValidationError("target_g2 must be non-negative and finite")
    if target_g2 == 0:
        return 0.0
    p1 = cfg.emission_model().p1
    lo, hi = 0.0, min(p1 / 2.0, 1.0 - p1)

    def measure(p2):
        result = run_hbt_chain(cfg, n_pulses=n_pulses, p2_override=p2)
        return result.reports[window_index].g2_zero

    g_hi = measure(hi)
    if g_hi < target_g2 - tolerance:
        raise NonBracketing(
            f"target {target_g2} above reachable g2 {g_hi:.4f} at p2 = {hi:.3f}"
        )
    g_lo = 0.0
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        g_mid = measure(mid)
        if abs(g_mid - target_g2) < tolerance:
            return mid
        if g_mid < target_g2:
            lo, g_lo = mid, g_mid
        else:
            hi, g_hi = mid, g_mid
    return 0.5 * (lo + hi)
