"""Closed-form benchmarks: strip strength, length scale, enrichment, Sievert chain."""

import math

import numpy as np

from h2fatigue import laws
from h2fatigue.params import HydrogenParams, MaterialParams
from h2fatigue.verification import enrichment_bar, strip_tension


def main():
    mat, hp = MaterialParams(), HydrogenParams()
    r = strip_tension(mat)
    print(f"strip strength   {r.peak:9.3f} MPa   closed form {mat.sigma_c:9.3f} MPa")
    print(f"length scale     {mat.ell:9.6f} mm    from sigma_c = 4 x 715 MPa")
    print(f"alpha_n          {mat.alpha_n:9.4f} MPa   eps_c = {mat.eps_c:.7f}")
    print(f"K_Ic             {laws.KIc_from_toughness(mat.Gc0, mat.E, mat.nu):9.3f} MPa sqrt(m)")
    x, C, exact = enrichment_bar(1000.0, hp)
    print(f"enrichment bar   max rel error {np.abs(C / exact - 1).max():.2e}, "
          f"C(L)/C0 = {C[np.argmax(x)]:.4f} (exp = {math.exp(hp.drift_coefficient * 1000):.4f})")
    for p in (0.0, 1.0, 10.0, 55.0, 106.0):
        c = hp.C_env(p)
        print(f"p_H2 = {p:6.1f} MPa  C_env = {c:.5f} wppm  f_H = {float(hp.fH(c)):.5f}")


if __name__ == "__main__":
    main()
