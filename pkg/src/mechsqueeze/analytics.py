"""Closed-form predictions for two-tone reservoir-engineered squeezing.

Everything here assumes pumps aligned at ``omega_c -+ omega_m``; detuned pumps
are routed through the transfer-function model in :mod:`mechsqueeze.lyapunov`.
"""

from __future__ import annotations

import math
import warnings

import numpy as np
from scipy.optimize import minimize_scalar

from . import lyapunov
from .lyapunov import UnstableSystemError
from .model import (
    BathState,
    GoodCavityWarning,
    PumpConfig,
    QuadratureState,
    Spectrum,
    SpectrumModelParams,
    SystemParams,
    TWO_PI,
    ValidityWarning,
    enhanced_couplings,
    stability_check,
)

__all__ = [
    "SpectrumModelParams",
    "variances",
    "quad_variances",
    "cooled_occupation",
    "total_linewidth",
    "spectrum_terms",
    "output_spectrum",
    "mechanical_feature_area",
    "feature_sign",
    "squeezing_db",
    "optimize_ratio",
]


def variances(gamma_m, kappa, G_minus, G_plus, n_m_th, n_c_th, form="exact"):
    """Steady-state quadrature variances (x_zp**2 units), array friendly.

    ``form="exact"`` is the full rotating-wave steady state. ``"good_cavity"``
    keeps only the leading order in ``gamma_m / kappa``; the two differ by a
    relative amount of order ``gamma_m / kappa``.
    """
    G2 = G_minus ** 2 - G_plus ** 2
    nm = 2 * n_m_th + 1
    nc = 2 * n_c_th + 1
    if form == "exact":
        den = (gamma_m + kappa) * (gamma_m * kappa + 4 * G2)
        mech = gamma_m * (gamma_m * kappa + kappa ** 2 + 4 * G2) / den
        back = 4 * kappa / den
    elif form == "good_cavity":
        den = 4 * G2 + gamma_m * kappa
        mech = gamma_m / kappa * (4 * G2 + kappa ** 2) / den
        back = 4 / den
    else:
        raise ValueError(f"unknown form {form!r}")
    var_x1 = mech * nm + back * (G_minus - G_plus) ** 2 * nc
    var_x2 = mech * nm + back * (G_minus + G_plus) ** 2 * nc
    return var_x1, var_x2


def _check_cavity(params: SystemParams, notes: list):
    if not params.good_cavity:
        msg = f"kappa/omega_m = {params.kappa_over_omega_m:.3g} outside the sideband-resolved regime"
        warnings.warn(msg, GoodCavityWarning, stacklevel=3)
        notes.append(msg)


def quad_variances(params: SystemParams, pumps: PumpConfig, baths: BathState,
                   form: str = "exact") -> QuadratureState:
    """Quadrature variances of the mechanics; unstable input gives a tagged state."""
    notes: list = []
    _check_cavity(params, notes)
    ratio = params.kappa_over_omega_m
    if pumps.detuned:
        sys = lyapunov.build_system(params, pumps, baths)
        return lyapunov.steady_covariance(sys).quadratures(ratio)
    rates = enhanced_couplings(params, pumps)
    if not stability_check(params, rates).stable:
        return QuadratureState.unstable(ratio)
    v1, v2 = variances(params.gamma_m, params.kappa, rates.G_minus, rates.G_plus,
                       baths.n_m_th, baths.n_c_th, form=form)
    return QuadratureState(float(v1), float(v2), 0.0, kappa_over_omega_m=ratio, notes=tuple(notes))


def cooled_occupation(params: SystemParams, G_minus, baths: BathState):
    """Phonon number under a single red-detuned pump of coupling ``G_minus``."""
    v1, v2 = variances(params.gamma_m, params.kappa, G_minus, 0.0, baths.n_m_th, baths.n_c_th)
    return (v1 + v2) / 4 - 0.5


def total_linewidth(params: SystemParams, G_minus, weak_fraction: float = 0.1):
    """``gamma_m + 4 G_minus**2 / kappa``; warns outside the weak-coupling regime."""
    optical = 4 * np.asarray(G_minus) ** 2 / params.kappa
    if np.any(optical > weak_fraction * params.kappa):
        warnings.warn("optical damping is not small compared with kappa; "
                      "the linewidth is no longer a simple Lorentzian width",
                      ValidityWarning, stacklevel=2)
    return params.gamma_m + optical


def spectrum_terms(params: SystemParams, G_minus, G_plus, omega):
    """Per-frequency weights ``(u, v, w)`` of the intrinsic output spectrum.

    The spectrum at detection offset ``omega`` from ``omega_c`` is
    ``u * n_c_th + v * (gamma_m * n_m_th) + w``.
    """
    gm, k = params.gamma_m, params.kappa
    G2 = G_minus ** 2 - G_plus ** 2
    f = G2 + (gm / 2 - 1j * omega) * (k / 2 - 1j * omega)
    inv = params.kappa_out / np.abs(f) ** 2
    u = k * ((gm / 2) ** 2 + omega ** 2) * inv
    v = (G_minus ** 2 + G_plus ** 2) * inv
    w = gm * G_plus ** 2 * inv
    return u, v, w


def output_spectrum(params: SystemParams, pumps: PumpConfig, baths: BathState,
                    model: SpectrumModelParams) -> Spectrum:
    """Recorded output noise spectrum on ``model.freq_grid``.

    Aligned pumps use the closed form; detuned pumps use the numerical
    transfer-function model (same rotating-wave physics).
    """
    if pumps.detuned:
        sys = lyapunov.build_system(params, pumps, baths)
        return lyapunov.transfer_spectrum(sys, model)
    rates = enhanced_couplings(params, pumps)
    if not stability_check(params, rates).stable:
        raise UnstableSystemError("pump configuration has no steady state")
    omega = TWO_PI * model.freq_grid - params.omega_c
    u, v, w = spectrum_terms(params, rates.G_minus, rates.G_plus, omega)
    intrinsic = u * baths.n_c_th + v * params.gamma_m * baths.n_m_th + w
    return Spectrum(model.freq_grid, model.s0 + model.gain * intrinsic)


def mechanical_feature_area(params: SystemParams, pumps: PumpConfig, baths: BathState) -> float:
    """Integral over ``dw / 2pi`` of the mechanical-bath part of the spectrum.

    ``1/|f|^2`` is the squared response of a second-order system with
    ``a1 = (gamma_m + kappa)/2`` and ``a0 = gamma_m kappa/4 + G_eff**2``; its
    area is ``1 / (2 a1 a0)``.
    """
    rates = enhanced_couplings(params, pumps)
    gm, k = params.gamma_m, params.kappa
    weight = gm * (rates.G_minus ** 2 * baths.n_m_th + rates.G_plus ** 2 * (baths.n_m_th + 1))
    a1 = (gm + k) / 2
    a0 = gm * k / 4 + rates.G_eff_sq
    return params.kappa_out * weight / (2 * a1 * a0)


def feature_sign(params: SystemParams, pumps: PumpConfig, baths: BathState, step=None) -> int:
    """+1 if the spectrum has a local maximum at ``omega_c`` (peak), -1 for a dip."""
    rates = enhanced_couplings(params, pumps)
    report = stability_check(params, rates)
    if not report.stable:
        raise UnstableSystemError("pump configuration has no steady state")
    h = step if step is not None else 1e-3 * min(report.gamma_eff, params.kappa)
    omega = np.array([-h, 0.0, h])
    u, v, w = spectrum_terms(params, rates.G_minus, rates.G_plus, omega)
    s = u * baths.n_c_th + v * params.gamma_m * baths.n_m_th + w
    curvature = s[0] + s[2] - 2 * s[1]
    return -1 if curvature > 0 else 1


def squeezing_db(q: QuadratureState) -> float:
    """Squeezing below zero-point, ``-10 log10(var_x1)`` (positive = squeezed)."""
    if not q.var_x1 > 0:
        raise ValueError("var_x1 must be positive")
    return -10.0 * math.log10(q.var_x1)


def optimize_ratio(params: SystemParams, baths: BathState, total_photons: float,
                   tol: float = 1e-4, n_grid: int = 400):
    """Blue/red ratio minimizing ``var_x1`` at fixed total intracavity photons.

    A dense grid locates the basin, then a bounded scalar search refines it
    to ``tol`` in ratio. Returns ``(ratio, QuadratureState)``.
    """
    if not total_photons > 0:
        raise ValueError("total_photons must be positive")
    g0, gm, k = params.g0, params.gamma_m, params.kappa

    def var1(r):
        n_minus = total_photons / (1 + r)
        n_plus = total_photons - n_minus
        v1, _ = variances(gm, k, g0 * np.sqrt(n_minus), g0 * np.sqrt(n_plus),
                          baths.n_m_th, baths.n_c_th)
        return v1

    grid = np.linspace(0.0, 1.0, n_grid + 1)[:-1]
    values = var1(grid)
    i = int(np.argmin(values))
    lo = grid[max(i - 1, 0)]
    hi = grid[min(i + 1, n_grid - 1)] if i + 1 < n_grid else 1.0 - 1e-12
    res = minimize_scalar(var1, bounds=(lo, hi), method="bounded",
                          options={"xatol": tol / 4})
    best = float(res.x) if res.fun <= values[i] else float(grid[i])
    pumps = PumpConfig.from_ratio(total_photons, best)
    return best, quad_variances(params, pumps, baths)
