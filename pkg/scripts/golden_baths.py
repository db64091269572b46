"""Recompute the frozen bath values used by the acceptance suite."""

import math

from scipy.optimize import brentq, minimize_scalar

from mechsqueeze import analytics
from mechsqueeze.model import BAE_PUMPS, OPTIMAL_PUMPS, BathState, bae_device, reference_device


def var_x1(params, pumps, n_m, n_c):
    return analytics.quad_variances(params, pumps, BathState(n_m, n_c)).var_x1


def min_occupation(params, alpha, n_m=50.0):
    def occ(log_n):
        n = math.exp(log_n)
        return analytics.cooled_occupation(params, params.g0 * math.sqrt(n), BathState(n_m, alpha * n))
    res = minimize_scalar(occ, bounds=(math.log(1e3), math.log(1e9)), method="bounded",
                          options={"xatol": 1e-12})
    return res.fun, math.exp(res.x)


def main():
    p, b = reference_device(), bae_device()
    nc4 = brentq(lambda nc: var_x1(p, OPTIMAL_PUMPS, 50.0, nc) - 0.806, 0.0, 2.0, xtol=1e-15)
    print(f"headline point:  n_m_th = 50, n_c_th = {nc4!r}")
    alpha = brentq(lambda a: min_occupation(p, a)[0] - 0.22, 1e-9, 1e-4, xtol=1e-22)
    occ, n = min_occupation(p, alpha)
    print(f"cooling curve:   alpha = {alpha!r}  (min {occ:.4f} at n_p = {n:.4g}, n_c_th = {alpha * n:.3f})")
    nc8 = brentq(lambda nc: var_x1(b, BAE_PUMPS, 50.0, nc) - 1.09, 0.0, 5.0, xtol=1e-15)
    print(f"second device:   n_m_th = 50, n_c_th = {nc8!r}")


if __name__ == "__main__":
    main()
