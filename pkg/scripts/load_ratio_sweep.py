"""Crack growth rate versus load ratio in hydrogen at fixed ΔK."""

import argparse

from _coarse import WINDOW, coarse_config
from h2fatigue.experiment import growth_rate, run_experiment


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--dK", type=float, default=12.0)
    ap.add_argument("--p", type=float, default=106.0)
    ap.add_argument("--R", type=float, nargs="+", default=[0.1, 0.4, 0.7])
    ap.add_argument("--out", default="results/load_ratio")
    args = ap.parse_args()
    for R in args.R:
        rec = run_experiment(coarse_config(args.dK, p_H2=args.p, R=R, run_id=f"R{R:g}",
                                           out=args.out))
        print(f"R = {R:.1f}  da/dN = {growth_rate(rec, *WINDOW):.4e} mm/cycle  "
              f"status = {rec.status}", flush=True)


if __name__ == "__main__":
    main()
