"""Paris slope in air on the coarse CT specimen with a scaled fatigue threshold.

    python3 scripts/air_paris.py --dK 12 15 19 24
"""

import argparse

from _coarse import WINDOW, coarse_config
from h2fatigue.experiment import growth_rate, paris_fit, run_experiment
from h2fatigue.laws import paris_m_from_n


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--dK", type=float, nargs="+", default=[12.0, 15.0, 19.0, 24.0])
    ap.add_argument("--out", default="results/air_paris")
    args = ap.parse_args()
    rates = []
    for dK in args.dK:
        rec = run_experiment(coarse_config(dK, run_id=f"air_dK{dK:g}", out=args.out))
        rates.append(growth_rate(rec, *WINDOW))
        print(f"dK = {dK:5.1f}  da/dN = {rates[-1]:.4e} mm/cycle  N = {rec.N[-1]}", flush=True)
    C, m = paris_fit(args.dK, rates)
    print(f"Paris fit: C = {C:.3e}, m = {m:.3f} (expected {paris_m_from_n(1.25):.3f})")


if __name__ == "__main__":
    main()
