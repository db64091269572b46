"""Affine-invariant ensemble sampler (stretch move) and chain diagnostics.

Each walker owns an independent random stream spawned from the run seed, so a
run is reproducible regardless of how the log-probability is evaluated.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class Chain:
    samples: np.ndarray  # (n_steps, n_walkers, ndim)
    log_prob: np.ndarray  # (n_steps, n_walkers)
    accepted: np.ndarray  # (n_walkers,) accepted moves over the stored steps
    stretch: float

    @property
    def acceptance_fraction(self) -> np.ndarray:
        return self.accepted / max(self.samples.shape[0], 1)

    def flat(self) -> np.ndarray:
        return self.samples.reshape(-1, self.samples.shape[-1])


class EnsembleSampler:
    """Goodman-Weare stretch-move ensemble sampler.

    ``log_prob`` maps an ``(n, ndim)`` array to ``n`` log densities when
    ``vectorized`` is true, otherwise a single point to a float.
    """

    def __init__(self, log_prob, ndim: int, n_walkers: int, stretch: float = 2.0,
                 vectorized: bool = False):
        if n_walkers < 2 * ndim or n_walkers % 2:
            raise ValueError("need an even number of walkers, at least 2 * ndim")
        self.log_prob = log_prob
        self.ndim = ndim
        self.n_walkers = n_walkers
        self.stretch = stretch
        self.vectorized = vectorized

    def _evaluate(self, points):
        if self.vectorized:
            return np.asarray(self.log_prob(points), dtype=float)
        return np.array([self.log_prob(p) for p in points], dtype=float)

    def run(self, p0, n_steps: int, seed: int, burn_in: int = 0,
            target_acceptance=(0.2, 0.5)) -> Chain:
        """Advance the ensemble ``burn_in + n_steps`` steps and keep the last ``n_steps``.

        During burn-in the stretch scale is nudged every 50 steps to keep the
        acceptance rate inside ``target_acceptance``; it is frozen afterwards.
        """
        x = np.array(p0, dtype=float).reshape(self.n_walkers, self.ndim)
        lp = self._evaluate(x)
        if not np.all(np.isfinite(lp)):
            raise ValueError("initial walkers must have finite log probability")

        total = burn_in + n_steps
        streams = [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(self.n_walkers)]
        draws = np.stack([g.random((total, 3)) for g in streams], axis=1)  # (total, walkers, 3)

        a = self.stretch
        half = self.n_walkers // 2
        groups = (np.arange(half), np.arange(half, self.n_walkers))
        samples = np.empty((n_steps, self.n_walkers, self.ndim))
        log_probs = np.empty((n_steps, self.n_walkers))
        accepted = np.zeros(self.n_walkers)
        window_acc = 0.0

        for step in range(total):
            u = draws[step]
            step_acc = 0
            for g in range(2):
                active, other = groups[g], groups[1 - g]
                z = ((a - 1.0) * u[active, 0] + 1.0) ** 2 / a
                partners = other[(u[active, 1] * half).astype(int)]
                proposal = x[partners] + z[:, None] * (x[active] - x[partners])
                lp_new = self._evaluate(proposal)
                log_ratio = (self.ndim - 1) * np.log(z) + lp_new - lp[active]
                with np.errstate(invalid="ignore"):
                    accept = np.log(u[active, 2]) < log_ratio
                idx = active[accept]
                x[idx] = proposal[accept]
                lp[idx] = lp_new[accept]
                step_acc += accept.sum()
                if step >= burn_in:
                    accepted[idx] += 1
            if step < burn_in:
                window_acc += step_acc / self.n_walkers
                if (step + 1) % 50 == 0:
                    rate = window_acc / 50
                    if rate < target_acceptance[0]:
                        a = max(1.2, 1.0 + (a - 1.0) * 0.7)
                    elif rate > target_acceptance[1]:
                        a = min(5.0, 1.0 + (a - 1.0) * 1.3)
                    window_acc = 0.0
            else:
                samples[step - burn_in] = x
                log_probs[step - burn_in] = lp
        return Chain(samples, log_probs, accepted, a)


def _autocorr_1d(x):
    n = len(x)
    f = np.fft.rfft(x - x.mean(), n=2 * n)
    acf = np.fft.irfft(f * np.conj(f))[:n]
    return acf / acf[0] if acf[0] > 0 else np.ones(n)


def integrated_time(chain: np.ndarray, c: float = 5.0) -> np.ndarray:
    """Integrated autocorrelation time per parameter, walker-averaged ACF.

    ``chain`` has shape ``(n_steps, n_walkers, ndim)``; uses the automatic
    window ``M >= c * tau``.
    """
    n_steps, n_walkers, ndim = chain.shape
    tau = np.empty(ndim)
    for d in range(ndim):
        acf = np.mean([_autocorr_1d(chain[:, k, d]) for k in range(n_walkers)], axis=0)
        taus = 2.0 * np.cumsum(acf) - 1.0
        m = np.arange(len(taus))
        window = np.argmax(m >= c * taus) if np.any(m >= c * taus) else len(taus) - 1
        tau[d] = max(taus[window], 1.0)
    return tau


def split_rhat(chain: np.ndarray) -> np.ndarray:
    """Split-chain potential scale reduction, one value per parameter."""
    n_steps = chain.shape[0] // 2 * 2
    first, second = chain[: n_steps // 2], chain[n_steps // 2: n_steps]
    parts = np.concatenate([first, second], axis=1)  # (n, 2*walkers, ndim)
    n = parts.shape[0]
    means = parts.mean(axis=0)
    W = parts.var(axis=0, ddof=1).mean(axis=0)
    B = n * means.var(axis=0, ddof=1)
    var_plus = (n - 1) / n * W + B / n
    with np.errstate(divide="ignore", invalid="ignore"):
        rhat = np.sqrt(var_plus / W)
    return np.where(W > 0, rhat, 1.0)
