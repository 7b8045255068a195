"""Crack growth rate versus loading frequency in hydrogen at fixed ΔK.

Frequencies are given in units of ``D / ell**2``.  Specimens start
uncharged and take up hydrogen through the notch, the outer faces and the
newly created crack faces.
"""

import argparse

from _coarse import ELL, WINDOW, coarse_config
from h2fatigue.experiment import growth_rate, run_experiment
from h2fatigue.params import HydrogenParams


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--dK", type=float, default=15.0)
    ap.add_argument("--p", type=float, default=106.0)
    ap.add_argument("--f-hat", type=float, nargs="+", default=[1e-3, 1e-1, 1e1, 1e3])
    ap.add_argument("--out", default="results/frequency")
    args = ap.parse_args()
    f_ref = HydrogenParams().D / ELL**2
    for fh in args.f_hat:
        cfg = coarse_config(args.dK, p_H2=args.p, f=fh * f_ref, precharged=False,
                            run_id=f"fhat{fh:g}", out=args.out)
        r = growth_rate(run_experiment(cfg), *WINDOW)
        print(f"f = {fh:8.0e} D/ell^2 = {fh * f_ref:.3e} Hz  da/dN = {r:.4e} mm/cycle", flush=True)
    pre = coarse_config(args.dK, p_H2=args.p, f=args.f_hat[0] * f_ref, precharged=True,
                        run_id="precharged", out=args.out)
    print(f"precharged at the slowest f: da/dN = {growth_rate(run_experiment(pre), *WINDOW):.4e}")


if __name__ == "__main__":
    main()
