"""Coarse ΔK-controlled setup shared by the scripts (same as the acceptance runs)."""

from h2fatigue.config import config_from_dict
from h2fatigue.params import MaterialParams

ELL = MaterialParams().ell
A0 = 20.32
WINDOW = (A0 + 0.4, A0 + 0.9)


def coarse_config(dK, p_H2=0.0, R=0.1, f=1.0, precharged=True, soak=0.0,
                  alpha_bar_0=0.08, run_id="run", out="results"):
    return config_from_dict({
        "fatigue": {"alpha_bar_0": alpha_bar_0},
        "geometry": {"a0": A0, "band_length": 3.0, "band_behind": 0.3,
                     "band_half_height": ELL},
        "load": {"delta_K": dK, "R": R, "f": f, "p_H2": p_H2, "precharged": precharged,
                 "soak_duration": soak, "increments_per_cycle": 4,
                 "max_crack_extension": WINDOW[1] - A0 + 0.05, "max_cycles": 20_000},
        "output": {"run_id": run_id, "directory": out, "da_log": 0.1},
    })
