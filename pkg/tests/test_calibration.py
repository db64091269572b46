import math
import warnings

import numpy as np
import pytest
from hypothesis import given, strategies as st

from mechsqueeze import analytics, calibration as cal
from mechsqueeze.model import TWO_PI, ValidityWarning, hz, reference_device, to_hz

OCCUPATIONS = np.array([15.0, 30.0, 60.0, 120.0, 200.0, 300.0, 400.0, 520.0])


def test_sideband_ratio_basics(device):
    assert cal.sideband_power_ratio(device, 0.0, "red") == 0.0
    r1 = cal.sideband_power_ratio(device, 50.0)
    assert cal.sideband_power_ratio(device, 100.0) == pytest.approx(2 * r1, rel=1e-15)
    assert cal.sideband_power_ratio(device, 0.0, "blue") > 0
    with pytest.raises(ValueError):
        cal.sideband_power_ratio(device, 1.0, "green")


def test_sideband_blue_red_asymmetry(device):
    n = 400.0
    T = (0.8, 0.5)
    red = cal.sideband_power_ratio(device, n, "red", transmission=T)
    blue = cal.sideband_power_ratio(device, n, "blue", transmission=T)
    assert blue / red == pytest.approx((T[0] / T[1]) * (n + 1) / n, rel=1e-14)


def test_sideband_cavity_lorentzian(device):
    k = device.kappa
    on = cal.sideband_power_ratio(device, 10.0)
    off = cal.sideband_power_ratio(device, 10.0, sideband_detuning=k / 2)
    assert off / on == pytest.approx(0.5)


def test_fit_g0_exact(device):
    ratios = cal.sideband_power_ratio(device, OCCUPATIONS)
    fit = cal.fit_g0(OCCUPATIONS, ratios, device.kappa)
    assert fit.g0 == pytest.approx(hz(36.0), rel=1e-12)
    assert fit.g0_err < 1e-9 * fit.g0


def test_fit_g0_blue_with_transmission(device):
    T = (1.0, 0.6)
    ratios = cal.sideband_power_ratio(device, OCCUPATIONS, "blue", transmission=T)
    fit = cal.fit_g0(OCCUPATIONS, ratios, device.kappa, side="blue", transmission=T)
    assert fit.g0 == pytest.approx(device.g0, rel=1e-12)


def test_fit_g0_rejects_bad_input(device):
    with pytest.raises(ValueError):
        cal.fit_g0([50.0], [1e-6], device.kappa)
    with pytest.raises(ValueError):
        cal.fit_g0([50.0, 50.0, 50.0], [1e-6, 1.1e-6, 0.9e-6], device.kappa)


def test_fit_g0_noise_monte_carlo(device):
    rng = np.random.default_rng(2024)
    truth = cal.sideband_power_ratio(device, OCCUPATIONS)
    z = []
    for _ in range(500):
        noisy = truth * (1 + 0.1 * rng.standard_normal(truth.size))
        fit = cal.fit_g0(OCCUPATIONS, noisy, device.kappa, sigma=0.1 * truth)
        z.append((fit.g0 - device.g0) / fit.g0_err)
    z = np.array(z)
    assert np.mean(np.abs(z) < 2) >= 0.93
    assert abs(np.mean(z)) < 0.2 and 0.85 < np.std(z) < 1.15


def test_weak_fit_exact(device):
    c = hz(2e3)
    P = np.linspace(1, 50, 12)
    gamma = device.gamma_m + 4 * c ** 2 * P / device.kappa
    fit = cal.fit_Gminus_weak(P, gamma, device.kappa)
    assert fit.coupling_per_root_power == pytest.approx(c, rel=1e-12)
    assert fit.gamma_m == pytest.approx(hz(3.0), rel=1e-9)
    assert not fit.rejected.any()


def test_weak_fit_rejects_strong_points(device):
    c = hz(2e3)
    P = np.r_[np.linspace(1, 50, 8), 5e3, 1e4]
    gamma = device.gamma_m + 4 * c ** 2 * P / device.kappa
    with pytest.warns(ValidityWarning):
        fit = cal.fit_Gminus_weak(P, gamma, device.kappa)
    assert fit.rejected.tolist() == [False] * 8 + [True, True]
    assert fit.coupling_per_root_power == pytest.approx(c, rel=1e-12)


def test_driven_response_bare_limit(device):
    f = to_hz(device.omega_c) + np.linspace(-1e6, 1e6, 101)
    assert np.array_equal(cal.driven_response(device, 0.0, f), cal.bare_cavity_response(device, f))
    t = np.abs(cal.bare_cavity_response(device, f)) ** 2
    half = f[t >= t.max() / 2]
    assert TWO_PI * (half[-1] - half[0]) == pytest.approx(device.kappa, rel=0.03)


def test_driven_response_weak_width(device):
    G = hz(20e3)
    gamma_tot = analytics.total_linewidth(device, G)
    f = to_hz(device.omega_c) + np.linspace(-4, 4, 40001) * to_hz(gamma_tot)
    r = cal.driven_response(device, G, f) / cal.bare_cavity_response(device, f)
    feature = np.abs(1 - r) ** 2
    above = f[feature >= feature.max() / 2]
    assert TWO_PI * (above[-1] - above[0]) == pytest.approx(gamma_tot, rel=0.02)


def test_normal_mode_splitting(device):
    G = hz(1e6)
    f = to_hz(device.omega_c) + np.linspace(-3e6, 3e6, 60001)
    mag = np.abs(cal.driven_response(device, G, f))
    left = f < to_hz(device.omega_c)
    split = f[~left][np.argmax(mag[~left])] - f[left][np.argmax(mag[left])]
    assert TWO_PI * split == pytest.approx(2 * G, rel=0.02)
    # the centre is suppressed between the two normal modes
    assert mag[30000] < 0.1 * mag.max()


def test_normalize_trace(device):
    f = to_hz(device.omega_c) + np.linspace(-5e6, 5e6, 2001)
    t = cal.driven_response(device, hz(30e3), f)
    n = cal.normalize_trace(device, f, (0.3 - 0.2j) * t)
    np.testing.assert_allclose(n, t, rtol=2e-3)


def test_linewidth_fit(device):
    G = hz(15e3)
    gamma_tot = analytics.total_linewidth(device, G)
    f = to_hz(device.omega_c) + np.linspace(-10, 10, 801) * to_hz(gamma_tot)
    lw = cal.fit_linewidth(device, f, (0.7 + 0.1j) * cal.driven_response(device, G, f))
    assert lw.gamma_tot == pytest.approx(gamma_tot, rel=0.01)


def test_strong_fit_exact(device):
    f = to_hz(device.omega_c) + np.linspace(-1.5e6, 1.5e6, 1201)
    trace = (0.5 + 0.5j) * cal.driven_response(device, hz(250e3), f)
    fit = cal.fit_driven_response(device, f, trace, G_guess=hz(200e3))
    assert fit.G_minus == pytest.approx(hz(250e3), rel=1e-9)
    assert fit.gain == pytest.approx(0.5 + 0.5j, rel=1e-9)


def test_gain_ratio():
    eq = cal.fit_Gplus_gain_ratio(2.0, 2.0, 5.0)
    assert eq.coupling_per_root_power == 5.0 and eq.correction == 1.0
    r = cal.fit_Gplus_gain_ratio(1.0, 2.0, 5.0)
    assert r.correction == pytest.approx(math.sqrt(2))
    with pytest.raises(ValueError):
        cal.fit_Gplus_gain_ratio(0.0, 1.0, 1.0)
    e = cal.fit_Gplus_gain_ratio(1.0, 1.0, 5.0, coupling_minus_err=0.5, gain_plus_err=0.1)
    assert e.coupling_err == pytest.approx(5.0 * math.hypot(0.1, 0.05))


def test_optimal_pump_ratio_through_calibrations(device):
    c_minus = hz(36.0)  # per sqrt(photon) when power is recorded in photon units
    gp = cal.fit_Gplus_gain_ratio(1.0, 1.0, c_minus)
    ratio = gp.coupling_per_root_power * math.sqrt(0.51e7) / (c_minus * math.sqrt(1.26e7))
    assert ratio == pytest.approx(0.636, abs=5e-4)


@given(st.floats(1e-3, 1e3), st.floats(1.0, 1e4))
def test_intracavity_photons_round_trip(power, c):
    g0 = hz(36.0)
    n = cal.intracavity_photons(power, c, g0)
    assert g0 * math.sqrt(n) == pytest.approx(c * math.sqrt(power), rel=1e-12)


def test_calibration_point_validation():
    with pytest.raises(ValueError):
        cal.CalibrationPoint(0.0, 1.0)
    with pytest.raises(ValueError):
        cal.CalibrationPoint(1.0, 1.0, side="up")
