import numpy as np
from hypothesis import given, settings, strategies as st

from micropost import analysis, cavity, hbt

indices = st.floats(min_value=1.0, max_value=4.0, allow_nan=False)
thicknesses = st.floats(min_value=5.0, max_value=400.0, allow_nan=False)
layer_st = st.builds(cavity.Layer, thicknesses, indices)
stack_st = st.builds(
    cavity.LayerStack,
    st.lists(layer_st, min_size=0, max_size=12).map(tuple),
    indices,
    indices,
)
wavelength_st = st.floats(min_value=400.0, max_value=2000.0, allow_nan=False)


@given(stack_st, wavelength_st)
@settings(max_examples=150, deadline=None)
def test_reflectance_energy_bound(stack, lam):
    r = cavity.reflectance(stack, lam)
    assert -1e-9 <= r <= 1.0 + 1e-9


@given(layer_st, wavelength_st)
@settings(max_examples=150, deadline=None)
def test_layer_matrix_unimodular(layer, lam):
    m = cavity.layer_matrix(layer, lam)
    det = m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0]
    assert abs(det - 1.0) < 1e-9


@given(stack_st, wavelength_st)
@settings(max_examples=100, deadline=None)
def test_reflectance_reciprocity(stack, lam):
    # Lossless multilayer: reflectance is the same from either side.
    reversed_stack = cavity.LayerStack(
        tuple(reversed(stack.layers)), stack.substrate_index, stack.ambient_index
    )
    r_fwd = cavity.reflectance(stack, lam)
    r_bwd = cavity.reflectance(reversed_stack, lam)
    assert abs(r_fwd - r_bwd) < 1e-9


@given(st.integers(min_value=0, max_value=10_000))
@settings(max_examples=30, deadline=None)
def test_pair_counts_monotone_in_range(seed):
    rng = np.random.default_rng(seed)
    c1 = np.sort(rng.uniform(0, 200, 80))
    c2 = np.sort(rng.uniform(0, 200, 90))
    totals = []
    for tau_range in (5.0, 20.0, 80.0):
        spec = hbt.HistogramSpec(bin_width=0.5, tau_range=tau_range)
        totals.append(hbt.correlate(c1, c2, spec, mode="all_pairs").total())
    assert totals[0] <= totals[1] <= totals[2]


PERIOD = 1000.0 / 76.0


@given(st.integers(min_value=0, max_value=10_000))
@settings(max_examples=30, deadline=None)
def test_period_windows_tile_histogram(seed):
    # Windows of one full period, centered on each peak, partition the
    # histogram span when the range is a half-integer number of periods.
    rng = np.random.default_rng(seed)
    k_max = 5
    # An odd bins-per-period count puts the outermost bin edges exactly at
    # +-(k_max + 1/2) periods, so the windows tile the whole span.
    spec = hbt.HistogramSpec(bin_width=PERIOD / 101, tau_range=(k_max + 0.5) * PERIOD)
    edges = spec.edges()
    counts = rng.poisson(10.0, len(edges) - 1)
    hist = hbt.CorrelationHistogram(edges, counts)
    areas = analysis.integrate_peaks(hist, PERIOD, PERIOD, k_max)
    assert sum(areas.areas.values()) == np.float64(counts.sum()).item() or abs(
        sum(areas.areas.values()) - counts.sum()
    ) < 1e-6 * counts.sum()


@given(st.integers(min_value=1, max_value=50))
@settings(max_examples=30, deadline=None)
def test_g2_scale_invariance(scale):
    rng = np.random.default_rng(77)
    spec = hbt.HistogramSpec(bin_width=0.05, tau_range=200.0)
    edges = spec.edges()
    centers = 0.5 * (edges[:-1] + edges[1:])
    counts = np.zeros(len(centers))
    for k in range(-14, 15):
        sel = np.abs(centers - k * PERIOD) <= 0.3
        level = 25.0 if k == 0 else 900.0 * (1 + np.exp(-abs(k) * PERIOD / 26.0) / 3)
        counts[sel] = rng.poisson(level) / sel.sum()
    base = hbt.CorrelationHistogram(edges, counts)
    ref_areas = analysis.integrate_peaks(base, PERIOD, 4.0, 14)
    ref = analysis.g2_zero(ref_areas, analysis.fit_envelope(ref_areas))

    scaled = base.rescaled(float(scale))
    areas = analysis.integrate_peaks(scaled, PERIOD, 4.0, 14)
    rep = analysis.g2_zero(areas, analysis.fit_envelope(areas))
    assert np.isclose(rep.g2_zero, ref.g2_zero, rtol=1e-6)
    assert np.isclose(rep.g_nearest, ref.g_nearest, rtol=1e-9)
