"""Coupling calibrations on synthetic data: g0 from sideband ratios, then G_-
from weak-drive linewidths checked against strong-drive response fits."""

import math

import numpy as np

from mechsqueeze import analytics, calibration as cal
from mechsqueeze.model import hz, reference_device, to_hz


def main():
    p = reference_device()
    rng = np.random.default_rng(0)
    n = np.array([15.0, 30.0, 60.0, 120.0, 200.0, 300.0, 400.0, 520.0])
    ratio = cal.sideband_power_ratio(p, n) * (1 + 0.1 * rng.standard_normal(n.size))
    g = cal.fit_g0(n, ratio, p.kappa, sigma=0.1 * ratio)
    print(f"g0/2pi = {to_hz(g.g0):.2f} +- {to_hz(g.g0_err):.2f} Hz (truth 36)")

    c = hz(20.0)
    power = np.linspace(1e4, 5e5, 8)
    widths = []
    for P in power:
        G = c * math.sqrt(P)
        gt = analytics.total_linewidth(p, G)
        f = to_hz(p.omega_c) + np.linspace(-10, 10, 801) * to_hz(gt)
        trace = cal.driven_response(p, G, f) * (1 + 1e-3 * rng.standard_normal(f.size))
        widths.append(cal.fit_linewidth(p, f, trace).gamma_tot)
    weak = cal.fit_Gminus_weak(power, np.array(widths), p.kappa)
    print(f"G_-/sqrt(P) = {to_hz(weak.coupling_per_root_power):.4f} Hz (truth 20)")
    for P in (2.5e7, 1e8, 2.25e8):
        f = to_hz(p.omega_c) + np.linspace(-1.5e6, 1.5e6, 1201)
        trace = 0.7 * cal.driven_response(p, c * math.sqrt(P), f)
        strong = cal.fit_driven_response(p, f, trace, weak.G_minus(P))
        print(f"P = {P:.3g}: strong fit {to_hz(strong.G_minus) / 1e3:.2f} kHz, "
              f"weak extrapolation {to_hz(weak.G_minus(P)) / 1e3:.2f} kHz")


if __name__ == "__main__":
    main()
