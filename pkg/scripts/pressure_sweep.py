"""Crack growth rate versus hydrogen pressure at fixed ΔK (precharged specimens)."""

import argparse

from _coarse import WINDOW, coarse_config
from h2fatigue.experiment import growth_rate, run_experiment


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--dK", type=float, default=15.0)
    ap.add_argument("--pressures", type=float, nargs="+", default=[0.0, 1.0, 10.0, 106.0])
    ap.add_argument("--out", default="results/pressure")
    args = ap.parse_args()
    base = None
    for p in args.pressures:
        rec = run_experiment(coarse_config(args.dK, p_H2=p, run_id=f"p{p:g}", out=args.out))
        r = growth_rate(rec, *WINDOW)
        base = r if base is None else base
        print(f"p_H2 = {p:6.1f} MPa  da/dN = {r:.4e} mm/cycle  ratio to first = {r / base:.2f}",
              flush=True)


if __name__ == "__main__":
    main()
