import numpy as np
import pytest

from micropost import cavity
from micropost.errors import NoDip, NoStopband, ValidationError


def fresnel_r(n0, ns):
    return ((n0 - ns) / (n0 + ns)) ** 2


def test_bare_interface_matches_fresnel():
    stack = cavity.LayerStack((), ambient_index=1.0, substrate_index=3.5)
    for lam in (850.0, 950.0, 1050.0):
        assert cavity.reflectance(stack, lam) == pytest.approx(fresnel_r(1.0, 3.5))


def test_quarter_wave_layer_closed_form():
    # Single quarter-wave coating: R = ((n0 ns - n1^2) / (n0 ns + n1^2))^2.
    lam0, n1, ns = 950.0, 1.6, 3.5
    layer = cavity.Layer(lam0 / (4 * n1), n1)
    stack = cavity.LayerStack((layer,), 1.0, ns)
    expected = ((ns - n1**2) / (ns + n1**2)) ** 2
    assert cavity.reflectance(stack, lam0) == pytest.approx(expected, abs=1e-12)


def test_half_wave_layer_is_absentee():
    lam0, n1, ns = 950.0, 2.2, 3.5
    layer = cavity.Layer(lam0 / (2 * n1), n1)
    stack = cavity.LayerStack((layer,), 1.0, ns)
    assert cavity.reflectance(stack, lam0) == pytest.approx(fresnel_r(1.0, ns), abs=1e-12)


def test_layer_matrix_unit_determinant():
    layer = cavity.Layer(81.4, 2.9)
    m = cavity.layer_matrix(layer, 953.0)
    det = m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0]
    assert abs(det - 1.0) < 1e-12


def test_dbr_reflectance_grows_with_pair_count():
    lam0 = 4 * 68.6 * 3.5  # quarter-wave design wavelength of the GaAs layer
    previous = 0.0
    for pairs in (2, 4, 8, 16):
        stack = cavity.build_micropost_stack(pairs, 0, spacer_nm=137.2,
                                             gaas_nm=68.6, alas_nm=81.4)
        r = cavity.reflectance(stack, lam0)
        assert r > previous
        previous = r
    assert previous > 0.99


def test_spectrum_matches_pointwise_reflectance(config_file):
    stack = config_file.preset("reference_stack").stack()
    spec = cavity.reflectance_spectrum(stack, 900.0, 1000.0, 51)
    individual = [cavity.reflectance(stack, lam) for lam in spec.wavelengths]
    assert np.allclose(spec.reflectance, individual, atol=1e-12)


def test_reflectance_bounded(config_file):
    stack = config_file.preset("reference_stack").stack()
    spec = cavity.reflectance_spectrum(stack, 400.0, 2000.0, 2001)
    assert np.all(spec.reflectance >= 0.0)
    assert np.all(spec.reflectance <= 1.0)


def test_reference_stack_resonance(config_file):
    cfg = config_file.preset("reference_stack")
    spec = cavity.reflectance_spectrum(cfg.stack(), *cfg.spectrum_band()[:2],
                                       cfg.spectrum_band()[2])
    res = cavity.find_resonance(spec)
    assert 940.0 <= res.lambda_c <= 980.0
    assert 3000.0 <= res.q_factor <= 5000.0
    assert res.stopband[0] < res.lambda_c < res.stopband[1]
    assert res.q_factor == pytest.approx(res.lambda_c / res.fwhm)


def test_capped_stack_still_resonates(config_file):
    cfg = config_file.preset("reference_stack_capped")
    spec = cavity.reflectance_spectrum(cfg.stack(), 850.0, 1050.0, 20001)
    res = cavity.find_resonance(spec)
    assert 900.0 <= res.lambda_c <= 1000.0
    assert res.q_factor > 500.0


def test_no_stopband_in_low_contrast_stack():
    # Nearly index-matched layers never reach the reflectance threshold.
    layers = tuple(
        cavity.Layer(70.0, 1.01 if i % 2 else 1.02) for i in range(20)
    )
    spec = cavity.reflectance_spectrum(cavity.LayerStack(layers, 1.0, 1.0),
                                       850.0, 1050.0, 1001)
    with pytest.raises(NoStopband):
        cavity.find_resonance(spec)


def test_mirror_without_cavity_has_no_dip():
    stack = cavity.build_micropost_stack(0, 20, spacer_nm=68.6,
                                         gaas_nm=68.6, alas_nm=81.4)
    spec = cavity.reflectance_spectrum(stack, 850.0, 1050.0, 5001)
    with pytest.raises(NoDip):
        cavity.find_resonance(spec)


def test_validation_errors():
    with pytest.raises(ValidationError):
        cavity.Layer(-1.0, 3.5)
    with pytest.raises(ValidationError):
        cavity.Layer(10.0, 0.5)
    with pytest.raises(ValidationError):
        cavity.build_micropost_stack(-1, 4, spacer_nm=100, gaas_nm=50, alas_nm=50)
    with pytest.raises(ValidationError):
        cavity.ReflectanceSpectrum(np.array([1.0, 1.0]), np.array([0.5, 0.5]))
    with pytest.raises(ValidationError):
        cavity.ReflectanceSpectrum(np.array([1.0, 2.0]), np.array([0.5, 1.5]))
