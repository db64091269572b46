"""Domain types for a two-tone pumped electromechanical system.

All rates and frequencies are angular (rad/s). Files and the command line use
Hz; use :func:`hz` to convert at that boundary. Variances are expressed in
units of the mechanical zero-point variance ``x_zp**2`` (vacuum = 1).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace

import numpy as np

HBAR = 1.054571817e-34
TWO_PI = 2.0 * math.pi

# kappa/omega_m above which counter-rotating terms are no longer negligible
GOOD_CAVITY_THRESHOLD = 0.3


class GoodCavityWarning(UserWarning):
    """Raised (as a warning) when the sideband-resolved approximation is doubtful."""


class ValidityWarning(UserWarning):
    """A model precondition (weak coupling, probe separation, ...) is violated."""


def hz(f):
    """Convert a frequency in Hz to an angular rate in rad/s."""
    return TWO_PI * f


def to_hz(w):
    return w / TWO_PI


@dataclass(frozen=True)
class SystemParams:
    """Fixed device rates, all in rad/s except ``x_zp`` (m)."""

    omega_m: float
    omega_c: float
    kappa: float
    kappa_in: float
    kappa_out: float
    gamma_m: float
    g0: float
    x_zp: float = 2.3e-15

    def __post_init__(self):
        for name in ("omega_m", "omega_c", "kappa", "kappa_in", "kappa_out", "gamma_m", "g0", "x_zp"):
            value = getattr(self, name)
            if not (np.isfinite(value) and value > 0):
                raise ValueError(f"{name} must be positive and finite, got {value!r}")
        if self.kappa_in + self.kappa_out > self.kappa * (1 + 1e-12):
            raise ValueError("kappa_in + kappa_out must not exceed kappa")
        if self.omega_m <= self.kappa:
            warnings.warn(
                f"omega_m <= kappa (kappa/omega_m = {self.kappa_over_omega_m:.3g}); "
                "results neglect counter-rotating terms",
                GoodCavityWarning,
                stacklevel=3,
            )

    @classmethod
    def from_mass(cls, mass: float, **rates) -> "SystemParams":
        """Build parameters with ``x_zp = sqrt(hbar / (2 m omega_m))``."""
        x_zp = math.sqrt(HBAR / (2.0 * mass * rates["omega_m"]))
        return cls(x_zp=x_zp, **rates)

    @property
    def kappa_over_omega_m(self) -> float:
        return self.kappa / self.omega_m

    @property
    def good_cavity(self) -> bool:
        return self.kappa_over_omega_m <= GOOD_CAVITY_THRESHOLD

    def with_(self, **changes) -> "SystemParams":
        return replace(self, **changes)


@dataclass(frozen=True)
class PumpConfig:
    """Intracavity photon numbers of the red/blue pumps and their detunings.

    ``delta_minus`` is measured from ``omega_c - omega_m`` and ``delta_plus``
    from ``omega_c + omega_m`` (rad/s).
    """

    n_p_minus: float
    n_p_plus: float = 0.0
    delta_minus: float = 0.0
    delta_plus: float = 0.0

    def __post_init__(self):
        if self.n_p_minus < 0 or self.n_p_plus < 0:
            raise ValueError("pump photon numbers must be non-negative")

    @classmethod
    def from_ratio(cls, total: float, ratio: float, **detunings) -> "PumpConfig":
        """Split ``total`` photons so that ``n_p_plus / n_p_minus == ratio``."""
        n_minus = total / (1.0 + ratio)
        return cls(n_p_minus=n_minus, n_p_plus=total - n_minus, **detunings)

    @property
    def ratio(self) -> float:
        return self.n_p_plus / self.n_p_minus if self.n_p_minus > 0 else math.inf

    @property
    def detuned(self) -> bool:
        return self.delta_minus != 0.0 or self.delta_plus != 0.0


@dataclass(frozen=True)
class CouplingRates:
    """Pump-enhanced couplings.

    ``G_eff_sq = G_minus**2 - G_plus**2`` is kept signed; ``G_eff`` is NaN when
    it is negative (imaginary effective coupling, ``real`` is False).
    """

    G_minus: float
    G_plus: float
    G_eff_sq: float

    @property
    def real(self) -> bool:
        return self.G_eff_sq >= 0

    @property
    def G_eff(self) -> float:
        return math.sqrt(self.G_eff_sq) if self.real else math.nan


@dataclass(frozen=True)
class BathState:
    n_m_th: float
    n_c_th: float = 0.0

    def __post_init__(self):
        if self.n_m_th < 0 or self.n_c_th < 0:
            raise ValueError("bath occupations must be non-negative")

    @classmethod
    def from_heating_rate(cls, gamma_n_m: float, gamma_m: float, n_c_th: float) -> "BathState":
        """Build from the combination ``gamma_m * n_m_th`` that spectra constrain."""
        return cls(n_m_th=gamma_n_m / gamma_m, n_c_th=n_c_th)


@dataclass(frozen=True)
class QuadratureState:
    """Mechanical quadrature (co)variances in units of ``x_zp**2``.

    An unstable configuration is carried in-band: ``stable`` is False and the
    variances are NaN.
    """

    var_x1: float
    var_x2: float
    cov_x12: float = 0.0
    stable: bool = True
    kappa_over_omega_m: float = math.nan
    notes: tuple = field(default=())

    @classmethod
    def unstable(cls, kappa_over_omega_m=math.nan, note="unstable") -> "QuadratureState":
        return cls(math.nan, math.nan, math.nan, stable=False,
                   kappa_over_omega_m=kappa_over_omega_m, notes=(note,))

    @property
    def determinant(self) -> float:
        return self.var_x1 * self.var_x2 - self.cov_x12 ** 2

    @property
    def occupation(self) -> float:
        """Mean phonon number, ``(var_x1 + var_x2)/4 - 1/2``."""
        return (self.var_x1 + self.var_x2) / 4.0 - 0.5

    def in_m2(self, x_zp: float) -> tuple[float, float, float]:
        s = x_zp ** 2
        return self.var_x1 * s, self.var_x2 * s, self.cov_x12 * s


@dataclass(frozen=True)
class StabilityReport:
    stable: bool
    gamma_eff: float


def enhanced_couplings(params: SystemParams, pumps: PumpConfig) -> CouplingRates:
    G_minus = params.g0 * math.sqrt(pumps.n_p_minus)
    G_plus = params.g0 * math.sqrt(pumps.n_p_plus)
    return CouplingRates(G_minus, G_plus, G_minus ** 2 - G_plus ** 2)


def stability_check(params: SystemParams, rates: CouplingRates) -> StabilityReport:
    """Net mechanical damping ``gamma_m + 4 G_eff**2 / kappa`` and its sign.

    For aligned pumps the linearized dynamics are stable exactly when the net
    damping is positive. This admits a sliver ``G_plus > G_minus`` (imaginary
    effective coupling) where intrinsic damping still wins.
    """
    gamma_eff = params.gamma_m + 4.0 * rates.G_eff_sq / params.kappa
    return StabilityReport(bool(gamma_eff > 0), gamma_eff)


def reference_device(**overrides) -> SystemParams:
    """Device of the squeezing measurement (rates quoted as 2*pi x Hz).

    ``x_zp`` is approximate (about 2.3 fm). The input/output split of the
    cavity linewidth is not known; it defaults to half each.
    """
    kappa = hz(450e3)
    values = dict(
        omega_m=hz(3.6e6),
        omega_c=hz(6.23e9),
        kappa=kappa,
        kappa_in=kappa / 2,
        kappa_out=kappa / 2,
        gamma_m=hz(3.0),
        g0=hz(36.0),
        x_zp=2.3e-15,
    )
    values.update(overrides)
    return SystemParams(**values)


OPTIMAL_PUMPS = PumpConfig(n_p_minus=1.26e7, n_p_plus=0.51e7)
SWEEP_TOTAL_PHOTONS = 1.76e7
SWEEP_RATIOS = (0.3, 0.4, 0.5, 0.6, 0.65, 0.7)

BAE_PUMPS = PumpConfig(n_p_minus=16e6, n_p_plus=3.2e6)
BAE_PROBE_PHOTONS = 0.95e6
BAE_GAMMA_TOT = hz(10e3)


def bae_device(**overrides) -> SystemParams:
    """Wider-linewidth device used for the back-action-evading probe.

    Only ``kappa`` and the squeezed linewidth are known; ``g0`` is chosen so
    the pumps in :data:`BAE_PUMPS` give a total linewidth of 2*pi x 10 kHz.
    The mechanical frequency and intrinsic damping are borrowed from the
    first device.
    """
    kappa = hz(860e3)
    gamma_m = hz(3.0)
    n_diff = BAE_PUMPS.n_p_minus - BAE_PUMPS.n_p_plus
    g0 = math.sqrt((BAE_GAMMA_TOT - gamma_m) * kappa / (4.0 * n_diff))
    values = dict(
        omega_m=hz(3.6e6),
        omega_c=hz(6.23e9),
        kappa=kappa,
        kappa_in=kappa / 2,
        kappa_out=kappa / 2,
        gamma_m=gamma_m,
        g0=g0,
        x_zp=2.3e-15,
    )
    values.update(overrides)
    return SystemParams(**values)


@dataclass(frozen=True)
class SpectrumModelParams:
    """Recorded-spectrum conversion: noise floor, overall gain, frequency grid (Hz)."""

    s0: float = 0.0
    gain: float = 1.0
    freq_grid: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def __post_init__(self):
        grid = np.asarray(self.freq_grid, dtype=float)
        object.__setattr__(self, "freq_grid", grid)
        if not self.gain > 0:
            raise ValueError("gain must be positive")
        if grid.ndim != 1 or (grid.size > 1 and np.any(np.diff(grid) <= 0)):
            raise ValueError("freq_grid must be a strictly increasing 1-D sequence")

    @classmethod
    def around(cls, center_hz: float, span_hz: float, n: int, s0: float = 0.0, gain: float = 1.0):
        """Symmetric grid of ``n`` points covering ``center_hz +- span_hz / 2``."""
        grid = center_hz + np.linspace(-span_hz / 2, span_hz / 2, n)
        return cls(s0=s0, gain=gain, freq_grid=grid)


@dataclass(frozen=True)
class Spectrum:
    freq: np.ndarray
    psd: np.ndarray

    def __iter__(self):
        return iter(zip(self.freq, self.psd))

    def __len__(self):
        return len(self.freq)
