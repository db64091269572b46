import math
import warnings

import numpy as np
import pytest
from hypothesis import given, strategies as st

from mechsqueeze.model import (
    HBAR,
    BathState,
    GoodCavityWarning,
    PumpConfig,
    QuadratureState,
    SpectrumModelParams,
    SystemParams,
    bae_device,
    enhanced_couplings,
    hz,
    reference_device,
    stability_check,
    to_hz,
)

photons = st.one_of(st.just(0.0), st.floats(1e-6, 1e9))


def test_reference_couplings(device, pumps):
    r = enhanced_couplings(device, pumps)
    # g0 sqrt(n): 36 * sqrt(1.26e7) = 127.79 kHz, 36 * sqrt(0.51e7) = 81.30 kHz
    assert to_hz(r.G_minus) == pytest.approx(36 * math.sqrt(1.26e7), rel=1e-12)
    assert to_hz(r.G_minus) == pytest.approx(127.8e3, rel=1e-3)
    assert to_hz(r.G_plus) == pytest.approx(81.3e3, rel=1e-3)
    assert r.G_plus / r.G_minus == pytest.approx(math.sqrt(0.51 / 1.26), rel=1e-12)


def test_single_pump_and_bae_limits(device):
    r = enhanced_couplings(device, PumpConfig(1e6, 0.0))
    assert r.G_plus == 0 and r.G_eff == r.G_minus
    r = enhanced_couplings(device, PumpConfig(1e6, 1e6))
    assert r.G_eff == 0


def test_stability(device, pumps):
    s = stability_check(device, enhanced_couplings(device, PumpConfig(0, 0)))
    assert s.stable and s.gamma_eff == device.gamma_m
    assert not stability_check(device, enhanced_couplings(device, PumpConfig(1e6, 2e6))).stable
    r = enhanced_couplings(device, pumps)
    s = stability_check(device, r)
    expected = device.gamma_m + 4 * (r.G_minus ** 2 - r.G_plus ** 2) / device.kappa
    assert s.gamma_eff == pytest.approx(expected, rel=1e-14)
    assert to_hz(s.gamma_eff) == pytest.approx(86e3, rel=0.01)


def test_imaginary_coupling_flagged(device):
    r = enhanced_couplings(device, PumpConfig(1e6, 2e6))
    assert not r.real and math.isnan(r.G_eff)


@given(photons, photons, st.floats(0.01, 100))
def test_couplings_scale_as_sqrt(n1, n2, s):
    p = reference_device()
    a = enhanced_couplings(p, PumpConfig(n1, n2))
    b = enhanced_couplings(p, PumpConfig(n1 * s, n2 * s))
    assert b.G_minus == pytest.approx(a.G_minus * math.sqrt(s), rel=1e-12, abs=1e-300)
    assert b.G_plus == pytest.approx(a.G_plus * math.sqrt(s), rel=1e-12, abs=1e-300)


@given(photons, photons, photons)
def test_couplings_monotone(n1, n2, extra):
    p = reference_device()
    a = enhanced_couplings(p, PumpConfig(n1, n2))
    b = enhanced_couplings(p, PumpConfig(n1 + extra, n2 + extra))
    assert b.G_minus >= a.G_minus and b.G_plus >= a.G_plus


@given(photons)
def test_red_only_always_stable(n):
    p = reference_device()
    assert stability_check(p, enhanced_couplings(p, PumpConfig(n, 0.0))).stable


def test_param_validation():
    with pytest.raises(ValueError):
        reference_device(gamma_m=-1.0)
    with pytest.raises(ValueError):
        reference_device(kappa_in=hz(400e3))
    with pytest.raises(ValueError):
        PumpConfig(-1.0)
    with pytest.raises(ValueError):
        BathState(-0.1)


def test_bad_cavity_warns_not_raises():
    with pytest.warns(GoodCavityWarning):
        p = reference_device(omega_m=hz(300e3))
    assert not p.good_cavity
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        assert reference_device().good_cavity
    assert reference_device().kappa_over_omega_m == pytest.approx(0.125)


def test_from_mass():
    rates = dict(omega_m=hz(3.6e6), omega_c=hz(6e9), kappa=hz(1e5), kappa_in=hz(5e4),
                 kappa_out=hz(5e4), gamma_m=hz(3), g0=hz(36))
    m = 48e-12
    p = SystemParams.from_mass(m, **rates)
    assert p.x_zp ** 2 == pytest.approx(HBAR / (2 * m * rates["omega_m"]), rel=1e-14)


def test_bae_device_linewidth():
    p = bae_device()
    r = enhanced_couplings(p, PumpConfig(16e6, 3.2e6))
    assert to_hz(stability_check(p, r).gamma_eff) == pytest.approx(10e3, rel=1e-12)
    assert to_hz(p.kappa) == pytest.approx(860e3)


def test_from_ratio():
    p = PumpConfig.from_ratio(1.76e7, 0.4)
    assert p.n_p_minus + p.n_p_plus == pytest.approx(1.76e7)
    assert p.ratio == pytest.approx(0.4)


def test_bath_from_heating_rate(device):
    b = BathState.from_heating_rate(hz(150), device.gamma_m, 0.5)
    assert b.n_m_th == pytest.approx(50.0)


def test_quadrature_state_helpers():
    q = QuadratureState(0.5, 4.0, 0.1)
    assert q.determinant == pytest.approx(2.0 - 0.01)
    assert q.occupation == pytest.approx(4.5 / 4 - 0.5)
    v1, v2, c = q.in_m2(2e-15)
    assert v1 == pytest.approx(0.5 * 4e-30)
    u = QuadratureState.unstable(0.1)
    assert not u.stable and math.isnan(u.var_x1)


def test_spectrum_model_validation():
    with pytest.raises(ValueError):
        SpectrumModelParams(0.0, 0.0, np.arange(3.0))
    with pytest.raises(ValueError):
        SpectrumModelParams(0.0, 1.0, np.array([1.0, 1.0, 2.0]))
    m = SpectrumModelParams.around(100.0, 10.0, 11)
    assert m.freq_grid[0] == 95.0 and m.freq_grid[-1] == 105.0
