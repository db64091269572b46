"""Credible-interval coverage of the spectrum fit over seeded synthetic datasets.

    python scripts/coverage_study.py --runs 100 --seed0 1000
"""

import argparse
import time

import numpy as np

from mechsqueeze import analytics, fitting
from mechsqueeze.model import OPTIMAL_PUMPS, BathState, SpectrumModelParams, hz, reference_device, to_hz


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--runs", type=int, default=100)
    ap.add_argument("--seed0", type=int, default=1000, help="data seed of the first run")
    ap.add_argument("--n-c", type=float, default=0.5)
    ap.add_argument("--gamma-n-m-hz", type=float, default=150.0)
    ap.add_argument("--likelihood", choices=("gaussian", "gamma"), default="gaussian")
    ap.add_argument("--steps", type=int, default=1000)
    args = ap.parse_args()

    p, pumps = reference_device(), OPTIMAL_PUMPS
    truth = BathState.from_heating_rate(hz(args.gamma_n_m_hz), p.gamma_m, args.n_c)
    v_true = analytics.quad_variances(p, pumps, truth).var_x1
    model = SpectrumModelParams.around(to_hz(p.omega_c), 1.2e6, 400, s0=0.5)
    cfg = dict(n_steps=args.steps, burn_in=args.steps // 2, likelihood=args.likelihood)
    hits = np.zeros(2, dtype=int)
    z, errs, conv = [], [], 0
    t0 = time.perf_counter()
    for i in range(args.runs):
        data = fitting.simulate_spectrum(p, pumps, truth, model, 200, np.random.default_rng(args.seed0 + i))
        fit = fitting.sample_posterior(data, fitting.default_priors(data),
                                       fitting.SamplerConfig(seed=i, **cfg), p)
        conv += fit.converged
        hits += [fit.covers("n_c_th", truth.n_c_th), fit.covers("gamma_n_m", hz(args.gamma_n_m_hz))]
        col = fit.column("n_c_th")
        z.append((np.mean(col) - truth.n_c_th) / np.std(col))
        errs.append(np.median(fitting.derive_quadratures(fit, p, pumps).var_x1) / v_true - 1)
    print(f"{args.runs} fits in {time.perf_counter() - t0:.0f} s, {conv} converged")
    print(f"90% coverage: n_c_th {hits[0]}, gamma_m*n_m_th {hits[1]} "
          f"(expected {0.9 * args.runs:.0f} +- {np.sqrt(0.09 * args.runs):.0f})")
    print(f"n_c_th z-scores: mean {np.mean(z):+.3f}, sd {np.std(z):.3f}")
    print(f"var_x1 posterior-median RMS error {np.sqrt(np.mean(np.square(errs))):.2%}")


if __name__ == "__main__":
    main()
