"""Sideband-cooled occupation against G_- with power-dependent cavity heating.

The cavity bath follows n_c_th = alpha * n_p (alpha defaults to the value that
puts the minimum at 0.22 quanta for n_m_th = 50).
"""

import argparse

import numpy as np

from mechsqueeze import analytics
from mechsqueeze.dataio import write_table
from mechsqueeze.model import BathState, reference_device, to_hz


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n-m", type=float, default=50.0)
    ap.add_argument("--alpha", type=float, default=9.30566822538279e-07, help="n_c_th per pump photon")
    ap.add_argument("--points", type=int, default=200)
    ap.add_argument("--out", help="optional CSV output")
    args = ap.parse_args()

    p = reference_device()
    n = np.geomspace(1e3, 1e8, args.points)
    G = p.g0 * np.sqrt(n)
    n_c = args.alpha * n
    occ = np.array([analytics.cooled_occupation(p, g, BathState(args.n_m, c)) for g, c in zip(G, n_c)])
    i = int(np.argmin(occ))
    print(f"minimum occupation {occ[i]:.4f} at G_-/2pi = {to_hz(G[i]) / 1e3:.2f} kHz "
          f"(n_p = {n[i]:.3g}, n_c_th = {n_c[i]:.3f})")
    if args.out:
        write_table(args.out, {"n_p_minus": n, "G_minus_hz": to_hz(G), "n_c_th": n_c, "occupation": occ})


if __name__ == "__main__":
    main()
