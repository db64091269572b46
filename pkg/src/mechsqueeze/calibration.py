"""Calibration chain: g0 from thermal sidebands, G_minus from damping, G_plus from gain.

Pump powers are in arbitrary recorded units. Couplings are reported per
square root of recorded power, ``G = c * sqrt(P)``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.optimize import least_squares

from .model import SystemParams, TWO_PI, ValidityWarning


@dataclass(frozen=True)
class CalibrationPoint:
    pump_power: float
    observable: object
    side: str = "red"

    def __post_init__(self):
        if not self.pump_power > 0:
            raise ValueError("pump power must be positive")
        if self.side not in ("red", "blue"):
            raise ValueError("side must be 'red' or 'blue'")


@dataclass(frozen=True)
class LineFit:
    slope: float
    slope_err: float
    intercept: float
    intercept_err: float
    chi2: float


def _weighted_line(x, y, sigma=None) -> LineFit:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if sigma is None:
        w = np.ones_like(x)
    else:
        w = 1.0 / np.asarray(sigma, dtype=float) ** 2
    X = np.column_stack([np.ones_like(x), x])
    XtW = X.T * w
    normal = XtW @ X
    if np.linalg.matrix_rank(normal) < 2:
        raise ValueError("rank-deficient calibration data (need distinct abscissae)")
    cov = np.linalg.inv(normal)
    beta = cov @ (XtW @ y)
    resid = y - X @ beta
    chi2 = float(np.sum(w * resid ** 2))
    dof = len(x) - 2
    if sigma is None:
        # errors from the scatter about the line
        cov = cov * (chi2 / dof if dof > 0 else 0.0)
    return LineFit(float(beta[1]), float(math.sqrt(cov[1, 1])), float(beta[0]),
                   float(math.sqrt(cov[0, 0])), chi2)


# -- thermal sideband calibration -------------------------------------------


def _side_factor(n_m_th, side):
    n = np.asarray(n_m_th, dtype=float)
    if side == "red":
        return n
    if side == "blue":
        return n + 1.0
    raise ValueError("side must be 'red' or 'blue'")


def sideband_power_ratio(params: SystemParams, n_m_th, side: str = "red",
                         transmission=(1.0, 1.0), sideband_detuning: float = 0.0):
    """Integrated mechanical sideband power over transmitted pump power.

    For a weak pump at ``omega_c -+ omega_m`` the scattered sideband carries
    ``(4 g0**2 / kappa**2) * n`` (red) or ``* (n + 1)`` (blue) relative to the
    pump, times the cavity Lorentzian at the sideband's offset from
    ``omega_c``. ``transmission = (T_minus, T_plus)`` is the measurement-line
    transmission at the red/blue pump frequency relative to that at
    ``omega_c``; it divides the ratio because the pump is recorded through it.
    """
    half = params.kappa / 2
    lorentz = half ** 2 / (half ** 2 + sideband_detuning ** 2)
    T = transmission[0] if side == "red" else transmission[1]
    return 4 * params.g0 ** 2 / params.kappa ** 2 * lorentz * _side_factor(n_m_th, side) / T


@dataclass(frozen=True)
class G0Fit:
    g0: float
    g0_err: float
    line: LineFit


def fit_g0(n_m_th, ratio, kappa: float, sigma=None, side: str = "red",
           transmission=(1.0, 1.0)) -> G0Fit:
    """Single-photon coupling from sideband ratios at known thermal occupations.

    Fits ``ratio = offset + slope * n`` (``n + 1`` on the blue side) by
    weighted least squares and converts the slope to ``g0``.
    """
    n = np.asarray(n_m_th, dtype=float)
    if n.size < 3:
        raise ValueError("need at least 3 calibration points")
    if np.unique(n).size < 2:
        raise ValueError("rank-deficient calibration data (need distinct occupations)")
    T = transmission[0] if side == "red" else transmission[1]
    line = _weighted_line(_side_factor(n, side), ratio, sigma)
    if not line.slope > 0:
        raise ValueError("non-positive sideband slope; cannot infer g0")
    g0 = kappa / 2 * math.sqrt(line.slope * T)
    return G0Fit(g0, g0 * line.slope_err / (2 * line.slope), line)


# -- red-pump damping calibration ----------------------------------------------


@dataclass(frozen=True)
class WeakCouplingFit:
    coupling_per_root_power: float  # c in G = c * sqrt(P), rad/s per sqrt(power unit)
    coupling_err: float
    gamma_m: float
    gamma_m_err: float
    rejected: np.ndarray

    def G_minus(self, power):
        return self.coupling_per_root_power * np.sqrt(power)


def fit_Gminus_weak(power, gamma_tot, kappa: float, sigma=None,
                    weak_fraction: float = 0.1) -> WeakCouplingFit:
    """Fit ``gamma_tot = gamma_m + 4 c**2 P / kappa`` on weak-drive points.

    Points with ``gamma_tot > weak_fraction * kappa`` are outside the
    Lorentzian regime; they are dropped with a :class:`ValidityWarning`.
    """
    power = np.asarray(power, dtype=float)
    gamma_tot = np.asarray(gamma_tot, dtype=float)
    rejected = gamma_tot > weak_fraction * kappa
    if rejected.any():
        warnings.warn(f"{int(rejected.sum())} point(s) outside the weak-coupling regime "
                      f"(gamma_tot > {weak_fraction:g} kappa) were rejected",
                      ValidityWarning, stacklevel=2)
    keep = ~rejected
    if keep.sum() < 3:
        raise ValueError("need at least 3 weak-regime points")
    sig = None if sigma is None else np.asarray(sigma, dtype=float)[keep]
    line = _weighted_line(power[keep], gamma_tot[keep], sig)
    if not line.slope > 0:
        raise ValueError("damping does not increase with power")
    c = math.sqrt(line.slope * kappa / 4)
    return WeakCouplingFit(c, c * line.slope_err / (2 * line.slope),
                           line.intercept, line.intercept_err, rejected)


def bare_cavity_response(params: SystemParams, freq_hz):
    delta = TWO_PI * np.asarray(freq_hz, dtype=float) - params.omega_c
    return math.sqrt(params.kappa_in * params.kappa_out) / (params.kappa / 2 - 1j * delta)


def driven_response(params: SystemParams, G_minus: float, freq_hz):
    """Complex probe transmission with a red pump at ``omega_c - omega_m``.

    ``t = sqrt(kin kout) / [kappa/2 - i D + G**2 / (gamma_m/2 - i D)]`` with
    ``D`` the probe offset from ``omega_c``. The transmission magnitude splits
    into two normal modes about ``2 G`` apart once ``2 G`` exceeds the mean
    linewidth.
    """
    delta = TWO_PI * np.asarray(freq_hz, dtype=float) - params.omega_c
    mech = G_minus ** 2 / (params.gamma_m / 2 - 1j * delta)
    return math.sqrt(params.kappa_in * params.kappa_out) / (params.kappa / 2 - 1j * delta + mech)


def normalize_trace(params: SystemParams, freq_hz, trace, off_resonant_hz=None):
    """Scale a trace so its off-resonant value matches the bare cavity response.

    ``off_resonant_hz`` selects the reference bins (default: the outer 10% of
    the grid on each side).
    """
    freq_hz = np.asarray(freq_hz, dtype=float)
    trace = np.asarray(trace, dtype=complex)
    if off_resonant_hz is None:
        k = max(1, len(freq_hz) // 10)
        sel = np.r_[0:k, len(freq_hz) - k:len(freq_hz)]
    else:
        sel = np.isin(freq_hz, off_resonant_hz)
    ref = bare_cavity_response(params, freq_hz[sel])
    scale = np.vdot(ref, trace[sel]) / np.vdot(ref, ref)
    return trace / scale


@dataclass(frozen=True)
class LinewidthFit:
    gamma_tot: float
    gamma_tot_err: float
    center: float  # offset from omega_c, rad/s


def fit_linewidth(params: SystemParams, freq_hz, trace) -> LinewidthFit:
    """Total mechanical linewidth from a weak-drive transmission trace.

    Dividing by the bare cavity response leaves ``g * (1 - A / (gamma/2 - i(D - D0)))``
    near ``omega_c`` when ``gamma_tot << kappa``; ``g`` absorbs the line gain.
    """
    freq_hz = np.asarray(freq_hz, dtype=float)
    r = np.asarray(trace, dtype=complex) / bare_cavity_response(params, freq_hz)
    delta = TWO_PI * freq_hz - params.omega_c
    k = max(1, len(r) // 10)
    g0 = np.mean(np.r_[r[:k], r[-k:]])
    dip = np.abs(1 - r / g0)
    i0 = int(np.argmax(dip))
    above = delta[dip >= dip[i0] / math.sqrt(2)]
    width0 = max(above.max() - above.min(), abs(delta[1] - delta[0]))

    def model(p):
        gr, gi, A, gamma, d0 = p
        return (gr + 1j * gi) * (1 - A / (gamma / 2 - 1j * (delta - d0)))

    def resid(p):
        e = model(p) - r
        return np.concatenate([e.real, e.imag])

    p0 = [g0.real, g0.imag, dip[i0] * width0 / 2, width0, delta[i0]]
    res = least_squares(resid, p0, x_scale=[1, 1, width0, width0, width0], xtol=1e-14, ftol=1e-14, gtol=1e-14)
    gamma = abs(res.x[3])
    err = _param_errors(res)[3]
    return LinewidthFit(gamma, err, res.x[4])


def _param_errors(res):
    J = res.jac
    dof = max(J.shape[0] - J.shape[1], 1)
    s2 = 2 * res.cost / dof
    try:
        cov = np.linalg.pinv(J.T @ J) * s2
    except np.linalg.LinAlgError:
        return np.full(J.shape[1], np.nan)
    return np.sqrt(np.abs(np.diag(cov)))


@dataclass(frozen=True)
class StrongCouplingFit:
    G_minus: float
    G_minus_err: float
    gain: complex


def fit_driven_response(params: SystemParams, freq_hz, trace, G_guess: float) -> StrongCouplingFit:
    """Fit ``G_minus`` (and a complex line gain) with the full driven-response model."""
    freq_hz = np.asarray(freq_hz, dtype=float)
    trace = np.asarray(trace, dtype=complex)
    t0 = driven_response(params, G_guess, freq_hz)
    g_init = np.vdot(t0, trace) / np.vdot(t0, t0)

    def resid(p):
        gr, gi, G = p
        e = (gr + 1j * gi) * driven_response(params, G, freq_hz) - trace
        return np.concatenate([e.real, e.imag])

    res = least_squares(resid, [g_init.real, g_init.imag, G_guess],
                        x_scale=[1, 1, G_guess], xtol=1e-14, ftol=1e-14, gtol=1e-14)
    err = _param_errors(res)[2]
    return StrongCouplingFit(abs(res.x[2]), err, complex(res.x[0], res.x[1]))


# -- blue-pump calibration -------------------------------------------------


@dataclass(frozen=True)
class GainRatioCalibration:
    coupling_per_root_power: float
    coupling_err: float
    correction: float


def fit_Gplus_gain_ratio(gain_at_plus: float, gain_at_minus: float, coupling_minus: float,
                         coupling_minus_err: float = 0.0, gain_plus_err: float = 0.0,
                         gain_minus_err: float = 0.0) -> GainRatioCalibration:
    """Transfer the red-pump calibration to the blue pump.

    Recorded power is line gain times the power leaving the device, so
    ``c_plus = c_minus * sqrt(gain_minus / gain_plus)``.
    """
    if not (gain_at_plus > 0 and gain_at_minus > 0):
        raise ValueError("gains must be positive")
    corr = math.sqrt(gain_at_minus / gain_at_plus)
    c = coupling_minus * corr
    rel = math.sqrt((coupling_minus_err / coupling_minus) ** 2
                    + 0.25 * (gain_plus_err / gain_at_plus) ** 2
                    + 0.25 * (gain_minus_err / gain_at_minus) ** 2) if coupling_minus else 0.0
    return GainRatioCalibration(c, abs(c) * rel, corr)


def intracavity_photons(power, coupling_per_root_power: float, g0: float):
    """Photon number implied by a coupling calibration: ``(c sqrt(P) / g0)**2``."""
    return coupling_per_root_power ** 2 * np.asarray(power, dtype=float) / g0 ** 2
