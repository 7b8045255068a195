"""Small benchmark problems with closed-form answers.

Used by the test-suite and by ``scripts/verify.py``.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .mechanics import Loading, MechanicsSolver
from .mesh import rectangle_mesh
from .params import HydrogenParams, MaterialParams
from .phasefield import IrreversibilityHistory, PhaseFieldSolver
from .transport import HydrogenState, TransportOptions, TransportSolver


@dataclass
class StripResult:
    strain: np.ndarray
    stress: np.ndarray
    phi: np.ndarray

    @property
    def peak(self) -> float:
        return float(self.stress.max())


def strip_tension(material: MaterialParams, n_steps: int = 300, max_strain_ratio: float = 2.0,
                  tol: float = 1e-10, max_iter: int = 500, length: float = 1.0) -> StripResult:
    """Uniaxial tension of a homogeneous strip with ``nu = 0``.

    Alternate minimisation is iterated to convergence at every strain
    level so the response is the rate-independent AT2 solution.
    """
    mat = replace(material, nu=0.0, sigma_c=None, eps_c=None)
    m = rectangle_mesh(length, 0.1 * length, 4, 1)
    loading = Loading(fixed=(("LEFT", 0, 0.0), ("BOTTOM", 1, 0.0)),
                      scaled_displacements=(("RIGHT", 0, 1.0),))
    mech = MechanicsSolver(m, mat, loading)
    pf = PhaseFieldSolver(m, mat, mech.geom)
    one = np.ones(mech.geom.shape)
    irr = IrreversibilityHistory.zeros(mech.geom.shape)
    phi = np.zeros(m.n_nodes)
    eps = np.linspace(0.0, max_strain_ratio * mat.eps_c, n_steps + 1)[1:]
    sig, ph = [], []
    for e in eps:
        phi_step = phi
        for _ in range(max_iter):
            st = mech.solve(phi, e * length)
            H = irr.update(st.psi0)
            new = pf.solve(H.H, one, phi_step)
            done = np.abs(new - phi).max() < tol
            phi = new
            if done:
                break
        irr = H
        g = (1.0 - mech.geom.interpolate(phi)) ** 2
        sig.append(float(np.mean(g * st.stress0[..., 0])))
        ph.append(float(phi.mean()))
    return StripResult(eps, np.array(sig), np.array(ph))


def enrichment_bar(sigma_max: float = 1000.0, hydrogen: HydrogenParams = HydrogenParams(),
                   C0: float = 1.0, length: float = 1.0, n_el: int = 20,
                   dt: float = 1e4, n_steps: int = 60):
    """Steady state of a bar held at ``C0`` at x = 0 under a linear sigma_h.

    Returns ``(x, C, C_exact)`` along the bar.
    """
    m = rectangle_mesh(length, 0.1 * length, n_el, 1)
    solver = TransportSolver(m, hydrogen, ell=length, options=TransportOptions(boundary_sets=("LEFT",)))
    sig_q = sigma_max * solver.geom.points[..., 0] / length
    st = HydrogenState(np.full(m.n_nodes, C0), C0, np.zeros(m.n_nodes, dtype=bool))
    for _ in range(n_steps):
        st = solver.step(st, sig_q, dt)
    x = m.nodes[:, 0]
    exact = C0 * np.exp(hydrogen.drift_coefficient * sigma_max * x / length)
    return x, st.C, exact


def synthetic_paris_record(C: float = 1e-8, m: float = 3.0, dP: float = 20_000.0,
                           a0: float = 15.24, a_end: float = 30.0, W: float = 50.8,
                           B: float = 25.4, da_log: float = 0.1, R: float = 0.1,
                           run_id: str = "synthetic"):
    """Record of a crack growing exactly as ``da/dN = C dK**m`` at constant load.

    Cycle counts at each logging level come from quadrature of
    ``dN/da = 1 / (C dK(a)**m)`` and are rounded to whole cycles.
    """
    from scipy.integrate import quad

    from .experiment import CrackGrowthRecord, compute_delta_K

    rec = CrackGrowthRecord(run_id=run_id, R=R)
    levels = a0 + da_log * np.arange(int(np.floor((a_end - a0) / da_log + 1e-9)) + 1)
    N = 0.0
    prev = a0
    for a in levels:
        N += quad(lambda s: 1.0 / (C * compute_delta_K(dP, s, W, B) ** m), prev, a)[0]
        rec.log(round(N), N, a, compute_delta_K(dP, a, W, B), dP)
        prev = a
    return rec
