import math
import warnings

import numpy as np
import pytest
from hypothesis import assume, given, strategies as st
from scipy.integrate import quad

from mechsqueeze import analytics
from mechsqueeze.model import (
    OPTIMAL_PUMPS,
    SWEEP_RATIOS,
    SWEEP_TOTAL_PHOTONS,
    BathState,
    GoodCavityWarning,
    PumpConfig,
    QuadratureState,
    SpectrumModelParams,
    TWO_PI,
    ValidityWarning,
    enhanced_couplings,
    hz,
    reference_device,
    to_hz,
)


def langevin_oracle(gm, k, Gm, Gp, nm, nc):
    """Mechanical variances from a hand-built drift for b, d and their adjoints.

    Works with complex amplitudes (b, b†, d, d†) rather than quadratures so it
    shares no algebra with the package: d/dt b = -gm/2 b - i Gm d - i Gp d† + noise.
    """
    A = np.array([
        [-gm / 2, 0, -1j * Gm, -1j * Gp],
        [0, -gm / 2, 1j * Gp, 1j * Gm],
        [-1j * Gm, -1j * Gp, -k / 2, 0],
        [1j * Gp, 1j * Gm, 0, -k / 2],
    ])
    # symmetrized noise correlations <{xi_i, xi_j}>/2 for (b, b†, d, d†)
    D = np.zeros((4, 4), complex)
    D[0, 1] = D[1, 0] = gm * (nm + 0.5)
    D[2, 3] = D[3, 2] = k * (nc + 0.5)
    # C_ij = <{a_i, a_j}>/2 satisfies A C + C A^T + D = 0 (plain transpose)
    I = np.eye(4)
    C = np.linalg.solve(np.kron(I, A) + np.kron(A, I), -D.reshape(-1)).reshape(4, 4)
    # X1 = b + b†, X2 = -i(b - b†)
    v1 = C[0, 0] + C[1, 1] + 2 * C[0, 1]
    v2 = -(C[0, 0] + C[1, 1]) + 2 * C[0, 1]
    return v1.real, v2.real


stable_inputs = st.tuples(
    st.floats(-8, -2),   # log10 gamma_m / kappa
    st.floats(-4, 0),    # log10 G_minus / kappa
    st.floats(0, 0.999),  # G_plus / G_minus
    st.floats(0, 1e3),
    st.floats(0, 5),
)


def _unpack(t):
    lg, lG, r, nm, nc = t
    k = 1.0
    gm = 10 ** lg
    Gm = 10 ** lG
    return gm, k, Gm, r * Gm, nm, nc


@given(stable_inputs)
def test_variances_match_independent_oracle(t):
    gm, k, Gm, Gp, nm, nc = _unpack(t)
    v1, v2 = analytics.variances(gm, k, Gm, Gp, nm, nc)
    o1, o2 = langevin_oracle(gm, k, Gm, Gp, nm, nc)
    assert v1 == pytest.approx(o1, rel=1e-8)
    assert v2 == pytest.approx(o2, rel=1e-8)


def test_normalized_units_example():
    v1, v2 = analytics.variances(1e-6, 1.0, 0.05, 0.0, 50, 0)
    assert v1 == v2
    assert v1 == pytest.approx(1.010, abs=5e-4)
    o1, _ = langevin_oracle(1e-6, 1.0, 0.05, 0.0, 50, 0)
    assert v1 == pytest.approx(o1, rel=1e-9)


def test_good_cavity_form_is_leading_order():
    gm, k, Gm, Gp = 1e-5, 1.0, 0.1, 0.06
    e1, e2 = analytics.variances(gm, k, Gm, Gp, 100, 0.3)
    g1, g2 = analytics.variances(gm, k, Gm, Gp, 100, 0.3, form="good_cavity")
    assert abs(g1 / e1 - 1) < 10 * gm / k
    assert abs(g1 / e1 - 1) > 0
    with pytest.raises(ValueError):
        analytics.variances(gm, k, Gm, Gp, 1, 1, form="other")


@given(stable_inputs)
def test_bae_limit(t):
    gm, k, Gm, _, nm, nc = _unpack(t)
    v1, _ = analytics.variances(gm, k, Gm, Gm, nm, nc)
    assert v1 == pytest.approx(2 * nm + 1, rel=1e-12)


@given(stable_inputs)
def test_ordering_and_uncertainty(t):
    gm, k, Gm, Gp, nm, nc = _unpack(t)
    v1, v2 = analytics.variances(gm, k, Gm, Gp, nm, nc)
    assert v1 <= v2 * (1 + 1e-12)
    assert v1 * v2 >= 1 - 1e-12
    if Gp == 0:
        assert v1 == v2
    elif Gp > 1e-6 * Gm:
        assert v1 < v2


@given(stable_inputs)
def test_cooling_is_both_quadratures(t):
    gm, k, Gm, _, nm, nc = _unpack(t)
    p = reference_device(gamma_m=gm * hz(450e3), kappa=hz(450e3), kappa_in=hz(225e3), kappa_out=hz(225e3))
    G = Gm * p.kappa
    v1, v2 = analytics.variances(p.gamma_m, p.kappa, G, 0.0, nm, nc)
    n = analytics.cooled_occupation(p, G, BathState(nm, nc))
    assert v1 == pytest.approx(2 * n + 1, rel=1e-12)
    assert v2 == pytest.approx(2 * n + 1, rel=1e-12)


def test_cooled_occupation_limits(device):
    assert analytics.cooled_occupation(device, 0.0, BathState(50, 0.3)) == pytest.approx(50, rel=1e-12)
    Gs = np.geomspace(hz(10), hz(1e6), 200)
    n = analytics.cooled_occupation(device, Gs, BathState(0, 0))
    assert np.all(n >= -1e-12)
    # back-action floor is (kappa/4 omega... ) small but positive away from G -> 0
    assert n.min() < 1e-3


def test_quad_variances_unstable_and_tags(device, baths):
    q = analytics.quad_variances(device, PumpConfig(1e6, 2e6), baths)
    assert not q.stable and math.isnan(q.var_x1)
    q = analytics.quad_variances(device, OPTIMAL_PUMPS, baths)
    assert q.stable and q.cov_x12 == 0 and q.kappa_over_omega_m == pytest.approx(0.125)
    bad = reference_device(omega_m=hz(1e6))  # kappa/omega_m = 0.45
    assert not bad.good_cavity
    with pytest.warns(GoodCavityWarning):
        q = analytics.quad_variances(bad, OPTIMAL_PUMPS, baths)
    assert q.notes


def test_total_linewidth(device):
    assert analytics.total_linewidth(device, 0.0) == device.gamma_m
    G1 = device.g0 * math.sqrt(1e5)
    G2 = device.g0 * math.sqrt(2e5)
    d1 = analytics.total_linewidth(device, G1) - device.gamma_m
    d2 = analytics.total_linewidth(device, G2) - device.gamma_m
    assert d2 == pytest.approx(2 * d1, rel=1e-12)
    with pytest.warns(ValidityWarning):
        analytics.total_linewidth(device, hz(100e3))


def test_squeezing_db():
    assert analytics.squeezing_db(QuadratureState(1.0, 1.0)) == 0.0
    assert analytics.squeezing_db(QuadratureState(0.5, 2.0)) == pytest.approx(3.0103, abs=1e-4)
    assert analytics.squeezing_db(QuadratureState(0.806, 2.0)) == pytest.approx(0.94, abs=0.005)
    with pytest.raises(ValueError):
        analytics.squeezing_db(QuadratureState(0.0, 1.0))


def _grid(device, span=2e6, n=2001, s0=0.0):
    return SpectrumModelParams.around(to_hz(device.omega_c), span, n, s0=s0)


def test_spectrum_flat_without_pumps(device):
    s = analytics.output_spectrum(device, PumpConfig(0, 0), BathState(50, 0.0), _grid(device, s0=0.7))
    assert np.all(s.psd == 0.7)


def test_spectrum_closed_form(device, pumps, baths):
    # direct transcription of the printed spectral density
    m = _grid(device, s0=0.2)
    m = SpectrumModelParams(0.2, 1.7, m.freq_grid)
    s = analytics.output_spectrum(device, pumps, baths, m)
    r = enhanced_couplings(device, pumps)
    w = TWO_PI * m.freq_grid - device.omega_c
    gm, k, ko = device.gamma_m, device.kappa, device.kappa_out
    f = (r.G_minus ** 2 - r.G_plus ** 2) + (gm / 2 - 1j * w) * (k / 2 - 1j * w)
    num = ko * k * ((gm / 2) ** 2 + w ** 2) * baths.n_c_th + ko * gm * (
        r.G_minus ** 2 * baths.n_m_th + r.G_plus ** 2 * (baths.n_m_th + 1))
    np.testing.assert_allclose(s.psd, 0.2 + 1.7 * num / np.abs(f) ** 2, rtol=1e-13)


def test_spectrum_symmetric(device, pumps, baths):
    m = _grid(device)
    s = analytics.output_spectrum(device, pumps, baths, m)
    np.testing.assert_allclose(s.psd, s.psd[::-1], rtol=1e-9)


def test_spectrum_unstable_raises(device, baths):
    with pytest.raises(analytics.UnstableSystemError):
        analytics.output_spectrum(device, PumpConfig(1e6, 2e6), baths, _grid(device))


def test_feature_area_by_quadrature(device, pumps, baths):
    r = enhanced_couplings(device, pumps)

    def mech(w):
        _, v, wt = analytics.spectrum_terms(device, r.G_minus, r.G_plus, w)
        return v * device.gamma_m * baths.n_m_th + wt

    # w = kappa tan(t) maps the real line onto (-pi/2, pi/2)
    k = device.kappa
    total, _ = quad(lambda t: mech(k * np.tan(t)) * k / np.cos(t) ** 2, -np.pi / 2, np.pi / 2,
                    limit=400, epsabs=0, epsrel=1e-11)
    assert total / TWO_PI == pytest.approx(analytics.mechanical_feature_area(device, pumps, baths),
                                           rel=1e-7)


@pytest.mark.parametrize("nc,gamma_n", [(0.1, 2e3), (0.05, 1e3), (0.2, 4e3)])
def test_noise_squashing_progression(device, nc, gamma_n):
    baths = BathState.from_heating_rate(hz(gamma_n), device.gamma_m, nc)
    signs = [analytics.feature_sign(device, PumpConfig.from_ratio(SWEEP_TOTAL_PHOTONS, r), baths)
             for r in SWEEP_RATIOS]
    # decreasing ratio turns the peak into a dip, never back
    assert signs[-1] == 1 and signs[0] == -1
    assert all(a <= b for a, b in zip(signs, signs[1:]))


def test_feature_sign_matches_dense_grid(device):
    baths = BathState.from_heating_rate(hz(2e3), device.gamma_m, 0.1)
    for r in (0.3, 0.7):
        pumps = PumpConfig.from_ratio(SWEEP_TOTAL_PHOTONS, r)
        m = SpectrumModelParams.around(to_hz(device.omega_c), 4e3, 401)
        s = analytics.output_spectrum(device, pumps, baths, m).psd
        centre = s[200]
        expected = 1 if centre == s.max() else (-1 if centre == s.min() else 0)
        assert analytics.feature_sign(device, pumps, baths) == expected


def test_optimize_ratio_against_grid(device):
    baths = BathState(30, 0.2)
    total = SWEEP_TOTAL_PHOTONS
    r, q = analytics.optimize_ratio(device, baths, total)
    grid = np.linspace(0, 0.999, 200001)
    n_minus = total / (1 + grid)
    vals, _ = analytics.variances(device.gamma_m, device.kappa, device.g0 * np.sqrt(n_minus),
                                  device.g0 * np.sqrt(total - n_minus), baths.n_m_th, baths.n_c_th)
    i = int(np.argmin(vals))
    assert abs(r - grid[i]) < 1e-4
    assert q.var_x1 <= vals[i] * (1 + 1e-8)  # flat minimum, ratio tolerance 1e-4


def test_optimize_ratio_limits(device):
    baths = BathState(20, 0.1)
    total = 1e7
    cool = analytics.quad_variances(device, PumpConfig.from_ratio(total, 0.0), baths)
    G = device.g0 * math.sqrt(total)
    assert cool.var_x1 == pytest.approx(2 * analytics.cooled_occupation(device, G, baths) + 1, rel=1e-12)
    bae = analytics.quad_variances(device, PumpConfig(total / 2, total / 2), baths)
    assert bae.var_x1 == pytest.approx(2 * baths.n_m_th + 1, rel=1e-12)
    with pytest.raises(ValueError):
        analytics.optimize_ratio(device, baths, 0.0)


def test_beyond_three_db_quick():
    p = reference_device(gamma_m=1e-9 * hz(450e3))
    r, q = analytics.optimize_ratio(p, BathState(10, 0.0), SWEEP_TOTAL_PHOTONS)
    assert q.var_x1 < 0.5
    assert 0 < r < 1
