"""Linear quantum Langevin model in quadrature form.

State ordering is ``(X1, X2, U1, U2)``: the mechanical quadratures followed by
the cavity quadratures, each in a frame that removes the pump-induced time
dependence (rotating-wave part of the two-tone interaction only).

Convention: ``X = (b + b^dag)/sqrt(2)``, so the vacuum covariance is ``I/2``.
Variances in ``x_zp**2`` units (vacuum = 1) are twice the covariance entries;
:meth:`CovarianceMatrix.quadratures` does that conversion.

Spectra here are computed from the susceptibility ``chi(w) = (i w I - A)^-1``
and the input-noise spectral matrix, without reusing any closed form.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import (
    BathState,
    PumpConfig,
    QuadratureState,
    Spectrum,
    SpectrumModelParams,
    SystemParams,
    TWO_PI,
    enhanced_couplings,
)

_OMEGA2 = np.array([[0.0, 1.0], [-1.0, 0.0]])
SYMPLECTIC_FORM = np.kron(np.eye(2), _OMEGA2)


class UnstableSystemError(ValueError):
    pass


@dataclass(frozen=True)
class LinearSystem:
    """Drift ``A``, diffusion ``D`` and the input-noise description.

    ``noise`` is the (complex, Hermitian) white-noise correlation matrix of the
    input quadratures, ``<xi(t) xi(t')^T> = noise * delta(t - t')``; its real
    part gives ``D = B Re(noise) B^T``.
    """

    drift: np.ndarray
    diffusion: np.ndarray
    input_map: np.ndarray
    noise: np.ndarray
    omega_c: float = 0.0
    cavity_frame: float = 0.0  # frame frequency minus omega_c (rad/s)
    kappa_out: float = 1.0

    @property
    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvals(self.drift)

    @property
    def stable(self) -> bool:
        return bool(np.all(self.eigenvalues.real < 0))


@dataclass(frozen=True)
class CovarianceMatrix:
    """Steady-state covariance (vacuum = I/2) with solve diagnostics.

    ``status`` is ``"ok"``, ``"unstable"`` or ``"singular"``; failed solves
    carry a NaN matrix.
    """

    matrix: np.ndarray
    status: str = "ok"
    residual: float = 0.0
    condition: float = 1.0

    @property
    def ok(self) -> bool:
        return self.status == "ok"

    def quadratures(self, kappa_over_omega_m: float = math.nan) -> QuadratureState:
        if not self.ok:
            return QuadratureState.unstable(kappa_over_omega_m, note=self.status)
        v = self.matrix
        return QuadratureState(2 * v[0, 0], 2 * v[1, 1], 2 * v[0, 1],
                               kappa_over_omega_m=kappa_over_omega_m)


def thermal_noise(n: float) -> np.ndarray:
    """Quadrature correlation matrix of a white thermal input with occupation n."""
    return np.array([[n + 0.5, 0.5j], [-0.5j, n + 0.5]])


def build_system(params: SystemParams, pumps: PumpConfig, baths: BathState) -> LinearSystem:
    """Drift and diffusion of the mechanics + cavity under two detuned pumps.

    The cavity frame rotates at the mean pump frequency and the mechanical
    frame at ``omega_m + (delta_plus - delta_minus)/2``; the residual
    detunings enter as rotation blocks.
    """
    rates = enhanced_couplings(params, pumps)
    a = rates.G_minus - rates.G_plus
    b = rates.G_minus + rates.G_plus
    gm, k = params.gamma_m, params.kappa
    det_c = -(pumps.delta_minus + pumps.delta_plus) / 2
    det_m = (pumps.delta_minus - pumps.delta_plus) / 2

    drift = np.array([
        [-gm / 2, det_m, 0.0, -a],
        [-det_m, -gm / 2, b, 0.0],
        [0.0, -a, -k / 2, det_c],
        [b, 0.0, -det_c, -k / 2],
    ])
    input_map = np.diag([math.sqrt(gm), math.sqrt(gm), math.sqrt(k), math.sqrt(k)])
    noise = np.zeros((4, 4), dtype=complex)
    noise[:2, :2] = thermal_noise(baths.n_m_th)
    noise[2:, 2:] = thermal_noise(baths.n_c_th)
    diffusion = input_map @ noise.real @ input_map.T
    return LinearSystem(
        drift=drift,
        diffusion=diffusion,
        input_map=input_map,
        noise=noise,
        omega_c=params.omega_c,
        cavity_frame=-det_c,
        kappa_out=params.kappa_out,
    )


def _symmetric_basis(n):
    idx = [(i, j) for i in range(n) for j in range(i, n)]
    return idx


def solve_lyapunov(A: np.ndarray, D: np.ndarray) -> tuple[np.ndarray, float]:
    """Solve ``A V + V A^T + D = 0`` for symmetric V by direct vectorization.

    Unknowns are the upper-triangle entries of V (10 for a 4x4 system).
    Returns ``(V, condition number of the unscaled linear map)``.
    """
    n = A.shape[0]
    idx = _symmetric_basis(n)
    m = len(idx)
    L = np.empty((m, m))
    for col, (i, j) in enumerate(idx):
        E = np.zeros((n, n))
        E[i, j] = E[j, i] = 1.0
        image = A @ E + E @ A.T
        L[:, col] = [image[p, q] for p, q in idx]
    rhs = -np.array([D[p, q] for p, q in idx])
    cond = np.linalg.cond(L)
    # Mechanical and optical rates can differ by ~1e9; row/column equilibration
    # keeps the solve accurate to ~1e-15 where the raw map would lose ~1e-8.
    with np.errstate(divide="ignore"):
        r = 1.0 / np.abs(L).max(axis=1)
        c = 1.0 / np.abs(L * r[:, None]).max(axis=0)
    r[~np.isfinite(r)] = 1.0
    c[~np.isfinite(c)] = 1.0
    sol = np.linalg.solve(L * r[:, None] * c, rhs * r) * c
    V = np.empty((n, n))
    for value, (i, j) in zip(sol, idx):
        V[i, j] = V[j, i] = value
    return V, cond


def steady_covariance(sys: LinearSystem, max_condition: float = 1e13) -> CovarianceMatrix:
    nan = np.full_like(sys.drift, np.nan)
    if not sys.stable:
        return CovarianceMatrix(nan, status="unstable", residual=math.nan, condition=math.inf)
    try:
        V, cond = solve_lyapunov(sys.drift, sys.diffusion)
    except np.linalg.LinAlgError:
        return CovarianceMatrix(nan, status="singular", residual=math.nan, condition=math.inf)
    if cond > max_condition:
        return CovarianceMatrix(nan, status="singular", residual=math.nan, condition=cond)
    residual = np.max(np.abs(sys.drift @ V + V @ sys.drift.T + sys.diffusion))
    return CovarianceMatrix(V, residual=float(residual), condition=float(cond))


def symplectic_eigenvalues(V: np.ndarray) -> np.ndarray:
    """Symplectic spectrum of a covariance matrix in (x1, p1, x2, p2) order."""
    ev = np.linalg.eigvals(1j * SYMPLECTIC_FORM @ V)
    return np.sort(np.abs(ev.real))[::2]


def _noise_kernel(sys: LinearSystem) -> np.ndarray:
    B = sys.input_map
    return B @ sys.noise @ B.T


def quadrature_spectrum(sys: LinearSystem, omega) -> np.ndarray:
    """Unsymmetrized spectral matrix ``S_jk(w) = int dt e^{i w t} <x_j(t) x_k(0)>``.

    Shape ``(len(omega), 4, 4)``. Integrating over ``dw / 2 pi`` gives
    ``V + i*Omega/2``.
    """
    omega = np.atleast_1d(np.asarray(omega, dtype=float))
    n = sys.drift.shape[0]
    M = -1j * omega[:, None, None] * np.eye(n) - sys.drift
    chi = np.linalg.inv(M)
    K = _noise_kernel(sys)
    return chi @ K @ np.conj(np.swapaxes(chi, 1, 2))


def cavity_emission_spectrum(sys: LinearSystem, omega) -> np.ndarray:
    """Normal-ordered intracavity spectrum ``int dt e^{i w t} <d^dag(0) d(t)>``.

    ``omega`` is measured from the cavity frame frequency. Written as
    ``r K r^H`` with ``r = c^H chi(w)``, ``chi(w) = (i w I - A)^-1`` and
    ``c`` selecting ``d = (U1 + i U2)/sqrt(2)``.
    """
    omega = np.atleast_1d(np.asarray(omega, dtype=float))
    n = sys.drift.shape[0]
    c = np.zeros(n, dtype=complex)
    c[2], c[3] = 1.0, 1.0j
    M = 1j * omega[:, None, None] * np.eye(n) - sys.drift
    # r^T = M^{-T} conj(c)
    rhs = np.broadcast_to(np.conj(c), (omega.size, n))[..., None]
    r = np.linalg.solve(np.swapaxes(M, 1, 2), rhs)[..., 0]
    K = _noise_kernel(sys)
    s = np.einsum("fi,ij,fj->f", r, K, np.conj(r))
    return 0.5 * s.real


def transfer_spectrum(sys: LinearSystem, model: SpectrumModelParams) -> Spectrum:
    """Recorded output spectrum on the absolute grid ``model.freq_grid`` (Hz)."""
    if not sys.stable:
        raise UnstableSystemError("drift matrix has eigenvalues with non-negative real part")
    freq = model.freq_grid
    omega = TWO_PI * freq - (sys.omega_c + sys.cavity_frame)
    psd = model.s0 + model.gain * sys.kappa_out * cavity_emission_spectrum(sys, omega)
    return Spectrum(freq, psd)
