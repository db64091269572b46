"""Bayesian recovery of bath occupations from averaged output noise spectra.

Parameters (physical units, internal order :data:`PARAM_NAMES`):

``n_c_th``
    cavity bath occupation (quanta)
``gamma_n_m``
    ``gamma_m * n_m_th`` in rad/s (the mechanical heating-rate combination)
``s0``, ``gain``
    noise floor and conversion gain of the recorded spectrum
``delta_minus``, ``delta_plus``
    pump detunings (rad/s)

``gain`` multiplies both bath terms, so it is degenerate with the bath
occupations unless a prior pins it; by default it is fixed at 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize
from scipy.special import gammaln

from . import analytics, lyapunov
from .model import (
    BathState,
    PumpConfig,
    QuadratureState,
    SpectrumModelParams,
    SystemParams,
    TWO_PI,
    enhanced_couplings,
    hz,
    stability_check,
)
from .sampler import EnsembleSampler, integrated_time, split_rhat

PARAM_NAMES = ("n_c_th", "gamma_n_m", "s0", "gain", "delta_minus", "delta_plus")
RHAT_LIMIT = 1.1


@dataclass(frozen=True)
class SpectrumData:
    """Averaged power spectrum with the pump settings it was recorded under."""

    freq: np.ndarray
    psd: np.ndarray
    n_avg: np.ndarray
    pump_record: dict = field(default_factory=dict)

    def __post_init__(self):
        freq = np.asarray(self.freq, dtype=float)
        psd = np.asarray(self.psd, dtype=float)
        n_avg = np.broadcast_to(np.asarray(self.n_avg, dtype=float), freq.shape).copy()
        if not (freq.shape == psd.shape and freq.ndim == 1):
            raise ValueError("freq and psd must be 1-D arrays of equal length")
        if freq.size == 0:
            raise ValueError("empty spectrum")
        if np.any(np.diff(freq) <= 0):
            raise ValueError("freq must be strictly increasing")
        if np.any(psd < 0) or not np.all(np.isfinite(psd)):
            raise ValueError("psd must be finite and non-negative")
        if np.any(n_avg < 1):
            raise ValueError("n_avg must be >= 1")
        object.__setattr__(self, "freq", freq)
        object.__setattr__(self, "psd", psd)
        object.__setattr__(self, "n_avg", n_avg)

    @property
    def pumps(self) -> PumpConfig:
        rec = self.pump_record
        if "n_p_minus" not in rec:
            raise KeyError("pump_record lacks n_p_minus")
        return PumpConfig(
            n_p_minus=float(rec["n_p_minus"]),
            n_p_plus=float(rec.get("n_p_plus", 0.0)),
            delta_minus=hz(float(rec.get("delta_minus_hz", 0.0))),
            delta_plus=hz(float(rec.get("delta_plus_hz", 0.0))),
        )


def simulate_spectrum(params: SystemParams, pumps: PumpConfig, baths: BathState,
                      model: SpectrumModelParams, n_avg: int, rng=None) -> SpectrumData:
    """Model spectrum with averaged-periodogram scatter.

    Each bin of an average of ``n_avg`` periodograms is Gamma distributed with
    shape ``n_avg`` and mean equal to the model. ``rng=None`` gives the
    noiseless expectation.
    """
    expected = analytics.output_spectrum(params, pumps, baths, model).psd
    if rng is None:
        psd = expected
    else:
        psd = expected * rng.gamma(n_avg, 1.0 / n_avg, size=expected.shape)
    record = {
        "n_p_minus": pumps.n_p_minus,
        "n_p_plus": pumps.n_p_plus,
        "delta_minus_hz": pumps.delta_minus / TWO_PI,
        "delta_plus_hz": pumps.delta_plus / TWO_PI,
    }
    return SpectrumData(model.freq_grid, psd, n_avg, record)


# -- priors ---------------------------------------------------------------


@dataclass(frozen=True)
class Prior:
    """One-parameter prior. Log-uniform parameters are sampled in log space."""

    kind: str
    a: float
    b: float = math.nan

    def __post_init__(self):
        if self.kind not in ("uniform", "log_uniform", "normal", "fixed"):
            raise ValueError(f"unknown prior kind {self.kind!r}")
        if self.kind in ("uniform", "log_uniform"):
            if not (np.isfinite(self.a) and np.isfinite(self.b) and self.a < self.b):
                raise ValueError("bounded prior needs finite lo < hi")
            if self.kind == "log_uniform" and self.a <= 0:
                raise ValueError("log-uniform prior needs lo > 0")
        if self.kind == "normal" and not self.b > 0:
            raise ValueError("normal prior needs sd > 0")

    @classmethod
    def uniform(cls, lo, hi):
        return cls("uniform", lo, hi)

    @classmethod
    def log_uniform(cls, lo, hi):
        return cls("log_uniform", lo, hi)

    @classmethod
    def normal(cls, mean, sd):
        return cls("normal", mean, sd)

    @classmethod
    def fixed(cls, value):
        return cls("fixed", value)

    @property
    def is_fixed(self):
        return self.kind == "fixed"

    def to_sampling(self, value):
        return np.log(value) if self.kind == "log_uniform" else value

    def from_sampling(self, x):
        return np.exp(x) if self.kind == "log_uniform" else x

    def log_density(self, x):
        """Log density in sampling coordinates (up to a constant)."""
        x = np.asarray(x, dtype=float)
        if self.kind == "normal":
            return -0.5 * ((x - self.a) / self.b) ** 2
        lo, hi = self.sampling_bounds
        return np.where((x >= lo) & (x <= hi), 0.0, -np.inf)

    @property
    def sampling_bounds(self):
        if self.kind == "uniform":
            return self.a, self.b
        if self.kind == "log_uniform":
            return math.log(self.a), math.log(self.b)
        return -np.inf, np.inf

    def draw(self, rng, size=None):
        if self.kind == "normal":
            return rng.normal(self.a, self.b, size)
        lo, hi = self.sampling_bounds
        return rng.uniform(lo, hi, size)

    def to_dict(self):
        if self.kind == "fixed":
            return {"kind": "fixed", "value": self.a}
        if self.kind == "normal":
            return {"kind": "normal", "mean": self.a, "sd": self.b}
        return {"kind": self.kind, "lo": self.a, "hi": self.b}


class PriorSpec(dict):
    """Mapping ``name -> Prior`` covering every entry of :data:`PARAM_NAMES`."""

    def __init__(self, priors):
        super().__init__(priors)
        missing = set(PARAM_NAMES) - set(self)
        unknown = set(self) - set(PARAM_NAMES)
        if missing or unknown:
            raise ValueError(f"prior spec mismatch: missing {sorted(missing)}, unknown {sorted(unknown)}")

    @property
    def free(self):
        return [n for n in PARAM_NAMES if not self[n].is_fixed]

    def with_(self, **changes) -> "PriorSpec":
        updated = dict(self)
        updated.update(changes)
        return PriorSpec(updated)


def default_priors(data: SpectrumData) -> PriorSpec:
    scale = float(np.median(data.psd)) or 1.0
    return PriorSpec({
        "n_c_th": Prior.log_uniform(1e-3, 20.0),
        "gamma_n_m": Prior.log_uniform(hz(1.0), hz(1e5)),
        "s0": Prior.log_uniform(1e-6 * scale, 10.0 * float(np.max(data.psd))),
        "gain": Prior.fixed(1.0),
        "delta_minus": Prior.fixed(0.0),
        "delta_plus": Prior.fixed(0.0),
    })


# -- likelihood -------------------------------------------------------------


class SpectrumLikelihood:
    """Per-bin likelihood of an averaged spectrum, batched over parameter rows.

    With aligned pumps the model is linear in ``(n_c_th, gamma_n_m)`` and the
    frequency weights are cached; detuned parameter rows go through the
    transfer-function model.
    """

    def __init__(self, data: SpectrumData, params: SystemParams, pumps: PumpConfig,
                 kind: str = "gaussian"):
        if kind not in ("gaussian", "gamma"):
            raise ValueError("likelihood kind must be 'gaussian' or 'gamma'")
        self.data = data
        self.params = params
        self.pumps = pumps
        self.kind = kind
        self.rates = enhanced_couplings(params, pumps)
        omega = TWO_PI * data.freq - params.omega_c
        self._terms = analytics.spectrum_terms(params, self.rates.G_minus, self.rates.G_plus, omega)
        self._stable = stability_check(params, self.rates).stable

    def model(self, theta: np.ndarray) -> np.ndarray:
        """Model spectra for parameter rows ``theta`` (``(n, 6)`` or ``(6,)``)."""
        theta = np.atleast_2d(np.asarray(theta, dtype=float))
        out = np.empty((theta.shape[0], self.data.freq.size))
        u, v, w = self._terms
        for i, (n_c, gnm, s0, gain, dm, dp) in enumerate(theta):
            if dm == 0.0 and dp == 0.0:
                if not self._stable:
                    out[i] = np.nan
                    continue
                out[i] = s0 + gain * (u * n_c + v * gnm + w)
            else:
                pumps = PumpConfig(self.pumps.n_p_minus, self.pumps.n_p_plus, dm, dp)
                baths = BathState.from_heating_rate(gnm, self.params.gamma_m, n_c)
                sys = lyapunov.build_system(self.params, pumps, baths)
                if not sys.stable:
                    out[i] = np.nan
                    continue
                model = SpectrumModelParams(s0=s0, gain=gain, freq_grid=self.data.freq)
                out[i] = lyapunov.transfer_spectrum(sys, model).psd
        return out

    def __call__(self, theta) -> np.ndarray:
        theta = np.atleast_2d(np.asarray(theta, dtype=float))
        S = self.model(theta)
        y = self.data.psd
        m = self.data.n_avg
        with np.errstate(divide="ignore", invalid="ignore"):
            if self.kind == "gaussian":
                sigma = S / np.sqrt(m)
                ll = -0.5 * np.sum(((y - S) / sigma) ** 2 + 2 * np.log(sigma) + math.log(2 * math.pi), axis=1)
            else:
                ll = np.sum((m - 1) * np.log(y) - y * m / S - m * np.log(S / m) - gammaln(m), axis=1)
        bad = ~np.all(np.isfinite(S) & (S > 0), axis=1)
        ll[bad | ~np.isfinite(ll)] = -np.inf
        return ll


def _as_theta(theta) -> np.ndarray:
    if isinstance(theta, dict):
        return np.array([float(theta[n]) for n in PARAM_NAMES])
    return np.asarray(theta, dtype=float)


def log_likelihood(data: SpectrumData, theta, params: SystemParams, pumps: PumpConfig = None,
                   kind: str = "gaussian") -> float:
    """Log-likelihood of ``data`` at ``theta`` (dict or 6-vector); ``-inf`` if infeasible."""
    pumps = pumps if pumps is not None else data.pumps
    return float(SpectrumLikelihood(data, params, pumps, kind)(_as_theta(theta))[0])


# -- posterior sampling -------------------------------------------------------


@dataclass(frozen=True)
class SamplerConfig:
    n_walkers: int = 32
    n_steps: int = 1500
    burn_in: int = 500
    seed: int = 0
    likelihood: str = "gaussian"


@dataclass
class FitResult:
    samples: np.ndarray
    param_names: tuple
    free_names: tuple
    map_estimate: dict
    credible_intervals: dict
    diagnostics: dict
    priors: PriorSpec

    @property
    def converged(self) -> bool:
        return bool(self.diagnostics["converged"])

    @property
    def status(self) -> str:
        return "converged" if self.converged else "unconverged"

    def column(self, name) -> np.ndarray:
        return self.samples[:, self.param_names.index(name)]

    def median(self, name) -> float:
        return float(np.median(self.column(name)))

    def covers(self, name, value, level="90") -> bool:
        lo, hi = self.credible_intervals[name][level]
        return lo <= value <= hi

    def summary(self) -> dict:
        return {
            "status": self.status,
            "param_names": list(self.param_names),
            "free_parameters": list(self.free_names),
            "map_estimate": dict(self.map_estimate),
            "median": {n: self.median(n) for n in self.param_names},
            "credible_intervals": self.credible_intervals,
            "diagnostics": self.diagnostics,
            "priors": {n: p.to_dict() for n, p in self.priors.items()},
        }


def _interval(x, level):
    tail = (1 - level) / 2
    lo, hi = np.quantile(x, [tail, 1 - tail])
    return [float(lo), float(hi)]


def sample_posterior(data: SpectrumData, priors: PriorSpec, config: SamplerConfig,
                     params: SystemParams, pumps: PumpConfig = None) -> FitResult:
    """Sample the posterior of the free parameters with an ensemble sampler.

    The walkers start in a small ball around the MAP point found by
    Nelder-Mead from a few prior draws. Results whose split-chain statistic
    exceeds :data:`RHAT_LIMIT` are marked unconverged.
    """
    pumps = pumps if pumps is not None else data.pumps
    like = SpectrumLikelihood(data, params, pumps, kind=config.likelihood)
    free = priors.free
    ndim = len(free)
    base = np.array([priors[n].a if priors[n].is_fixed else np.nan for n in PARAM_NAMES])
    free_idx = [PARAM_NAMES.index(n) for n in free]
    free_priors = [priors[n] for n in free]

    def to_theta(x):
        x = np.atleast_2d(x)
        theta = np.tile(base, (x.shape[0], 1))
        for j, (i, p) in enumerate(zip(free_idx, free_priors)):
            theta[:, i] = p.from_sampling(x[:, j])
        return theta

    def log_post(x):
        x = np.atleast_2d(x)
        lp = np.zeros(x.shape[0])
        for j, p in enumerate(free_priors):
            lp += p.log_density(x[:, j])
        ok = np.isfinite(lp)
        out = np.full(x.shape[0], -np.inf)
        if np.any(ok):
            out[ok] = lp[ok] + like(to_theta(x[ok]))
        return out

    if ndim == 0:
        theta = base[None, :]
        samples = np.repeat(theta, config.n_walkers * config.n_steps, axis=0)
        diag = {"acceptance_fraction": 0.0, "ess": {}, "rhat": {}, "tau": {},
                "stretch": 0.0, "converged": True, "n_samples": int(samples.shape[0])}
        return _package(samples, free, {n: float(base[i]) for i, n in enumerate(PARAM_NAMES)},
                        diag, priors)

    rng = np.random.default_rng(np.random.SeedSequence(config.seed).spawn(1)[0])
    starts = [np.array([p.to_sampling(p.a) if p.kind == "normal" else
                        0.5 * sum(p.sampling_bounds) for p in free_priors])]
    starts += [np.array([p.draw(rng) for p in free_priors]) for _ in range(4)]
    neg = lambda x: -float(log_post(x)[0]) if np.isfinite(log_post(x)[0]) else 1e300
    best = None
    for s in starts:
        res = minimize(neg, s, method="Nelder-Mead",
                       options={"xatol": 1e-8, "fatol": 1e-8, "maxiter": 4000 * ndim})
        res = minimize(neg, res.x, method="Nelder-Mead",
                       options={"xatol": 1e-10, "fatol": 1e-10, "maxiter": 4000 * ndim})
        if best is None or res.fun < best.fun:
            best = res
    x_map = best.x

    # initial ball sized from a finite-difference curvature estimate
    widths = np.empty(ndim)
    f0 = log_post(x_map)[0]
    for j in range(ndim):
        h = 1e-4 * max(1.0, abs(x_map[j]))
        e = np.zeros(ndim)
        e[j] = h
        curv = (log_post(x_map + e)[0] + log_post(x_map - e)[0] - 2 * f0) / h ** 2
        widths[j] = 1.0 / math.sqrt(-curv) if np.isfinite(curv) and curv < 0 else h
    p0 = []
    while len(p0) < config.n_walkers:
        trial = x_map + 0.1 * widths * rng.standard_normal(ndim)
        if np.isfinite(log_post(trial)[0]):
            p0.append(trial)

    sampler = EnsembleSampler(log_post, ndim, config.n_walkers, vectorized=True)
    chain = sampler.run(np.array(p0), config.n_steps, seed=config.seed, burn_in=config.burn_in)

    flat_x = chain.flat()
    samples = to_theta(flat_x)
    tau = integrated_time(chain.samples)
    rhat = split_rhat(chain.samples)
    n_total = flat_x.shape[0]
    diag = {
        "acceptance_fraction": float(np.mean(chain.acceptance_fraction)),
        "ess": {n: float(n_total / t) for n, t in zip(free, tau)},
        "rhat": {n: float(r) for n, r in zip(free, rhat)},
        "tau": {n: float(t) for n, t in zip(free, tau)},
        "stretch": float(chain.stretch),
        "converged": bool(np.all(rhat < RHAT_LIMIT)),
        "n_samples": int(n_total),
    }
    theta_map = to_theta(x_map)[0]
    return _package(samples, free, {n: float(v) for n, v in zip(PARAM_NAMES, theta_map)}, diag, priors)


def _package(samples, free, map_estimate, diag, priors) -> FitResult:
    intervals = {
        n: {"68": _interval(samples[:, i], 0.68), "90": _interval(samples[:, i], 0.90)}
        for i, n in enumerate(PARAM_NAMES)
    }
    return FitResult(samples, PARAM_NAMES, tuple(free), map_estimate, intervals, diag, priors)


# -- derived quadratures --------------------------------------------------------


@dataclass(frozen=True)
class QuadraturePosterior:
    var_x1: np.ndarray
    var_x2: np.ndarray
    n_excluded: int
    n_total: int

    @property
    def excluded_fraction(self) -> float:
        return self.n_excluded / self.n_total if self.n_total else 0.0

    def median(self) -> QuadratureState:
        return QuadratureState(float(np.median(self.var_x1)), float(np.median(self.var_x2)))

    def interval(self, which="var_x1", level=0.68):
        return _interval(getattr(self, which), level)

    def summary(self) -> dict:
        return {
            "var_x1": {"median": float(np.median(self.var_x1)), "68": self.interval("var_x1")},
            "var_x2": {"median": float(np.median(self.var_x2)), "68": self.interval("var_x2")},
            "n_excluded": self.n_excluded,
            "excluded_fraction": self.excluded_fraction,
        }


def derive_quadratures(fit: FitResult, params: SystemParams, pumps: PumpConfig,
                       max_samples: int = 20000) -> QuadraturePosterior:
    """Push posterior samples through the steady-state variance model.

    Unstable samples are dropped and counted. At most ``max_samples`` evenly
    thinned samples are used when detunings are sampled (each needs a
    Lyapunov solve).
    """
    s = fit.samples
    n_c = s[:, 0]
    n_m = s[:, 1] / params.gamma_m
    aligned = np.all(s[:, 4:6] == 0.0)
    if aligned:
        rates = enhanced_couplings(params, pumps)
        if not stability_check(params, rates).stable:
            return QuadraturePosterior(np.zeros(0), np.zeros(0), len(s), len(s))
        v1, v2 = analytics.variances(params.gamma_m, params.kappa, rates.G_minus, rates.G_plus, n_m, n_c)
        return QuadraturePosterior(np.asarray(v1), np.asarray(v2), 0, len(s))
    step = max(1, len(s) // max_samples)
    v1, v2, excluded = [], [], 0
    for row in s[::step]:
        p = PumpConfig(pumps.n_p_minus, pumps.n_p_plus, row[4], row[5])
        cov = lyapunov.steady_covariance(lyapunov.build_system(params, p, BathState(row[1] / params.gamma_m, row[0])))
        if not cov.ok:
            excluded += 1
            continue
        q = cov.quadratures()
        v1.append(q.var_x1)
        v2.append(q.var_x2)
    return QuadraturePosterior(np.array(v1), np.array(v2), excluded, len(s[::step]))
