"""Feature sign and quadrature variances across the six-ratio pump sweep.

    python scripts/ratio_sweep.py [--n-m 666.7] [--n-c 0.1] [--out sweep.csv]
"""

import argparse

from mechsqueeze import analytics
from mechsqueeze.dataio import write_table
from mechsqueeze.model import BathState, PumpConfig, reference_device

RATIOS = (0.3, 0.4, 0.5, 0.6, 0.65, 0.7)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n-m", type=float, default=2000 / 3, help="mechanical bath occupation")
    ap.add_argument("--n-c", type=float, default=0.1, help="cavity bath occupation")
    ap.add_argument("--total", type=float, default=1.76e7, help="n_p_minus + n_p_plus")
    ap.add_argument("--out", help="optional CSV output")
    args = ap.parse_args()

    p, baths = reference_device(), BathState(args.n_m, args.n_c)
    rows = []
    for r in RATIOS:
        pumps = PumpConfig.from_ratio(args.total, r)
        q = analytics.quad_variances(p, pumps, baths)
        sign = analytics.feature_sign(p, pumps, baths)
        rows.append((r, q.var_x1, q.var_x2, sign))
        print(f"ratio {r:4.2f}  var_x1 {q.var_x1:8.4f}  var_x2 {q.var_x2:9.3f}  "
              f"{'peak' if sign > 0 else 'dip'}")
    if args.out:
        cols = dict(zip(("ratio", "var_x1", "var_x2", "feature_sign"), zip(*rows)))
        write_table(args.out, cols)


if __name__ == "__main__":
    main()
