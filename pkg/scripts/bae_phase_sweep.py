"""Closed-loop V(theta) readout with the weak probe pair on the second device."""

import argparse

import numpy as np

from mechsqueeze import bae
from mechsqueeze.model import (
    BAE_PROBE_PHOTONS, BAE_PUMPS, BathState, SpectrumModelParams, bae_device, hz, to_hz,
)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n-c", type=float, default=0.8871252236414291)
    ap.add_argument("--n-m", type=float, default=50.0)
    ap.add_argument("--phases", type=int, default=8)
    ap.add_argument("--n-avg", type=int, default=20000, help="0 for noiseless spectra")
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    p = bae_device()
    offset = hz(300e3)
    probe = bae.ProbeConfig(BAE_PROBE_PHOTONS, 0.0, offset)
    model = SpectrumModelParams.around(to_hz(p.omega_c + offset), 200e3, 2001, s0=0.2)
    thetas = np.linspace(0, np.pi, args.phases, endpoint=False)
    rng = np.random.default_rng(args.seed) if args.n_avg else None
    rows = bae.phase_sweep(p, BAE_PUMPS, probe, BathState(args.n_m, args.n_c), model, thetas,
                           rng=rng, n_avg=args.n_avg or None)
    for theta, v, err, expected in rows:
        print(f"theta {theta:6.4f}  V {v:8.4f} +- {err:.4f}  configured {expected:8.4f}")
    rec = bae.fit_quadratures(thetas, [r[1] for r in rows])
    lo, hi = bae.principal_variances(rec)
    print(f"recovered min V {lo:.4f}, max V {hi:.4f}")


if __name__ == "__main__":
    main()
