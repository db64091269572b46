"""Phase-resolved readout of the squeezed state with a weak BAE probe pair.

A balanced probe pair placed ``probe_offset`` away from the squeezing pumps
produces a mechanical sideband at ``omega_c + probe_offset`` whose area is
proportional to the variance of the quadrature selected by the probe phase.
The probe's own back-action is taken to be ideal (entirely in the conjugate
quadrature), which holds when the probe is weak and its sideband is many
linewidths away from the squeezing sideband.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.optimize import curve_fit

from . import analytics
from .model import (
    BathState,
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

MIN_OFFSET_LINEWIDTHS = 10.0
MAX_PROBE_FRACTION = 0.1


@dataclass(frozen=True)
class ProbeConfig:
    n_p_probe: float
    theta: float = 0.0
    probe_offset: float = 0.0  # rad/s, probe sideband relative to omega_c

    def __post_init__(self):
        if self.n_p_probe < 0:
            raise ValueError("n_p_probe must be non-negative")

    def at_phase(self, theta: float) -> "ProbeConfig":
        return ProbeConfig(self.n_p_probe, theta, self.probe_offset)


def variance_vs_phase(q: QuadratureState, theta):
    """Variance of ``X1 cos(theta) + X2 sin(theta)`` in x_zp**2 units."""
    c, s = np.cos(theta), np.sin(theta)
    return q.var_x1 * c ** 2 + q.var_x2 * s ** 2 + 2 * q.cov_x12 * s * c


def sideband_scale(params: SystemParams, probe: ProbeConfig) -> float:
    """Sideband photon flux per unit quadrature variance.

    ``kappa_out * G_p**2 * |chi_c(offset)|**2`` with ``G_p = g0 sqrt(n_p_probe)``
    and ``|chi_c(D)|**2 = 1 / ((kappa/2)**2 + D**2)``.
    """
    Gp2 = params.g0 ** 2 * probe.n_p_probe
    return params.kappa_out * Gp2 / ((params.kappa / 2) ** 2 + probe.probe_offset ** 2)


def check_probe_validity(params, pumps, probe, gamma_tot) -> list:
    problems = []
    if abs(probe.probe_offset) < MIN_OFFSET_LINEWIDTHS * gamma_tot:
        problems.append(f"probe offset is {abs(probe.probe_offset) / gamma_tot:.3g} linewidths "
                        f"(< {MIN_OFFSET_LINEWIDTHS:g}); sidebands overlap")
    if pumps.n_p_minus > 0 and probe.n_p_probe > MAX_PROBE_FRACTION * pumps.n_p_minus:
        problems.append("probe is not weak compared with the squeezing pumps")
    for msg in problems:
        warnings.warn(msg, ValidityWarning, stacklevel=3)
    return problems


def probe_sideband_spectrum(params: SystemParams, pumps: PumpConfig, probe: ProbeConfig,
                            baths: BathState, model: SpectrumModelParams,
                            include_background: bool = False) -> Spectrum:
    """Recorded spectrum around the probe sideband.

    A Lorentzian of full width ``gamma_tot`` (net mechanical damping from the
    squeezing pumps) centred at ``omega_c + probe_offset`` with area
    ``sideband_scale * V(theta)`` per ``dw / 2pi``. With
    ``include_background`` the squeezing-pump output spectrum is added.
    """
    rates = enhanced_couplings(params, pumps)
    report = stability_check(params, rates)
    if not report.stable:
        raise analytics.UnstableSystemError("pump configuration has no steady state")
    gamma = report.gamma_eff
    check_probe_validity(params, pumps, probe, gamma)
    q = analytics.quad_variances(params, pumps, baths)
    area = sideband_scale(params, probe) * variance_vs_phase(q, probe.theta)
    omega = TWO_PI * model.freq_grid - (params.omega_c + probe.probe_offset)
    lorentz = gamma / (omega ** 2 + (gamma / 2) ** 2)
    psd = model.s0 + model.gain * area * lorentz
    if include_background:
        bg = analytics.output_spectrum(params, pumps, baths,
                                       SpectrumModelParams(0.0, model.gain, model.freq_grid))
        psd = psd + bg.psd
    return Spectrum(model.freq_grid, psd)


def background_spectrum(params, pumps, baths, model: SpectrumModelParams) -> np.ndarray:
    """Floor plus the squeezing-pump spectrum evaluated without the probe."""
    return analytics.output_spectrum(params, pumps, baths, model).psd


@dataclass(frozen=True)
class VarianceEstimate:
    variance: float
    stderr: float
    ok: bool = True
    center: float = math.nan  # rad/s offset of the fitted sideband from omega_c
    width: float = math.nan
    message: str = ""


def lorentzian(omega, area, center, width):
    return area * width / ((omega - center) ** 2 + (width / 2) ** 2)


def extract_variance(freq_hz, psd, background, scale: float, gain: float = 1.0,
                     omega_c: float = 0.0, detection: float = 3.0, sigma=None) -> VarianceEstimate:
    """Quadrature variance from the area of a probe-sideband Lorentzian.

    ``background`` (scalar floor or per-bin array) is subtracted first; a
    single Lorentzian is fitted by least squares and its area divided by
    ``gain * scale``; ``sigma`` optionally weights the bins. The fit is
    reported as a failure (``ok`` False) when the peak bin is below
    ``detection`` times the scatter of the outer bins, or when the fitted
    area is below ``detection`` standard errors.
    """
    freq_hz = np.asarray(freq_hz, dtype=float)
    resid = np.asarray(psd, dtype=float) - np.broadcast_to(background, freq_hz.shape)
    omega = TWO_PI * freq_hz - omega_c
    k = max(2, len(resid) // 10)
    edges = np.r_[resid[:k], resid[-k:]]
    noise = float(np.std(edges))
    peak_i = int(np.argmax(resid))
    peak = resid[peak_i]
    if not peak > 0 or peak < detection * noise or peak <= 1e-12 * np.max(np.abs(psd)):
        return VarianceEstimate(math.nan, math.nan, ok=False, message="no sideband feature found")

    above = omega[resid >= peak / 2]
    width0 = max(above.max() - above.min(), omega[1] - omega[0])
    center0 = omega[peak_i]
    x = omega - center0
    p0 = [peak * width0 / 4, 0.0, width0]
    try:
        popt, pcov = curve_fit(lambda w, a, c, g: lorentzian(w, a, c, g), x, resid, p0=p0,
                               sigma=sigma, absolute_sigma=sigma is not None, method="trf", x_scale=[p0[0], width0, width0],
                               max_nfev=20000)
    except RuntimeError as exc:
        return VarianceEstimate(math.nan, math.nan, ok=False, message=str(exc))
    area, c, width = popt
    err = math.sqrt(abs(pcov[0, 0])) if np.all(np.isfinite(pcov)) else math.inf
    if not area > detection * err:
        return VarianceEstimate(math.nan, math.nan, ok=False,
                                message=f"sideband area not significant ({area:.3g} +- {err:.3g})")
    denom = gain * scale
    return VarianceEstimate(area / denom, err / denom, ok=True,
                            center=center0 + c, width=abs(width))


def phase_sweep(params, pumps, probe, baths, model, thetas, rng=None, n_avg=None,
                include_background=True):
    """Simulate and re-extract ``V(theta)`` at each phase.

    Returns rows ``(theta, recovered, stderr, expected)``. With ``rng`` and
    ``n_avg`` the spectra carry averaged-periodogram scatter.
    """
    q = analytics.quad_variances(params, pumps, baths)
    scale = sideband_scale(params, probe)
    bg = background_spectrum(params, pumps, baths, model) if include_background else model.s0
    rows = []
    for theta in thetas:
        spec = probe_sideband_spectrum(params, pumps, probe.at_phase(theta), baths, model,
                                       include_background=include_background)
        psd = spec.psd
        if rng is not None:
            psd = psd * rng.gamma(n_avg, 1.0 / n_avg, size=psd.shape)
        sigma = None if rng is None else spec.psd / np.sqrt(n_avg)
        est = extract_variance(model.freq_grid, psd, bg, scale, model.gain, params.omega_c, sigma=sigma)
        rows.append((float(theta), est.variance, est.stderr, float(variance_vs_phase(q, theta))))
    return rows


def fit_quadratures(thetas, variances) -> QuadratureState:
    """Recover ``(var_x1, var_x2, cov_x12)`` from ``V(theta)`` samples.

    ``V = a + b cos(2 theta) + c sin(2 theta)`` is linear in ``(a, b, c)``,
    so three or more distinct phases (mod pi) determine the state.
    """
    t = np.asarray(thetas, dtype=float)
    v = np.asarray(variances, dtype=float)
    keep = np.isfinite(v)
    if np.unique(np.round(np.mod(t[keep], np.pi), 12)).size < 3:
        raise ValueError("need at least three distinct phases with valid variances")
    M = np.column_stack([np.ones(keep.sum()), np.cos(2 * t[keep]), np.sin(2 * t[keep])])
    (a, b, c), *_ = np.linalg.lstsq(M, v[keep], rcond=None)
    return QuadratureState(float(a + b), float(a - b), float(c))


def principal_variances(q: QuadratureState) -> tuple[float, float]:
    """Minimum and maximum of ``V(theta)`` over the phase."""
    mean = (q.var_x1 + q.var_x2) / 2
    r = math.hypot((q.var_x1 - q.var_x2) / 2, q.cov_x12)
    return mean - r, mean + r
