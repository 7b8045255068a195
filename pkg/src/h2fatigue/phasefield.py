"""Phase-field evolution with fatigue and hydrogen toughness degradation.

The damage equation is solved in the form obtained after dividing by the
combined toughness factor ``f = f_F f_H``::

    (Gc/ell) phi - Gc ell lap(phi) + 2 (H/f) phi = 2 H / f

so gradients of ``f`` never enter and the operator stays symmetric positive
definite.  ``H`` is the irreversibility history ``max_t psi0``.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from . import laws
from .fem import Assembler, DofMap, ElementGeometry, Factorization, assemble
from .mesh import Mesh
from .params import FatigueParams, HydrogenParams, MaterialParams


@dataclass(frozen=True)
class FatigueHistory:
    """Per quadrature point fatigue variables, arrays of shape (ne, nq)."""

    alpha_bar: np.ndarray
    alpha_max: np.ndarray
    hist_max: np.ndarray
    gate: np.ndarray

    @classmethod
    def zeros(cls, shape) -> "FatigueHistory":
        z = np.zeros(shape)
        return cls(z, z.copy(), z.copy(), np.zeros(shape, dtype=bool))

    def observe(self, alpha: np.ndarray) -> "FatigueHistory":
        """Fold one increment's ``alpha`` into the within-cycle maximum."""
        return replace(self, alpha_max=np.maximum(self.alpha_max, alpha))

    def start_cycle(self) -> "FatigueHistory":
        return replace(self, alpha_max=np.zeros_like(self.alpha_max))


@dataclass(frozen=True)
class IrreversibilityHistory:
    H: np.ndarray

    @classmethod
    def zeros(cls, shape) -> "IrreversibilityHistory":
        return cls(np.zeros(shape))

    def update(self, psi0: np.ndarray) -> "IrreversibilityHistory":
        return IrreversibilityHistory(np.maximum(self.H, psi0))


def update_alpha(phi_q: np.ndarray, psi0: np.ndarray, degraded: bool = True) -> np.ndarray:
    """Fatigue driving variable at quadrature points.

    ``degraded`` selects ``(1 - phi)**2 psi0`` (the stored energy density);
    otherwise the undamaged ``psi0`` is used.
    """
    if not degraded:
        return np.asarray(psi0, dtype=float).copy()
    return (1.0 - np.clip(phi_q, 0.0, 1.0)) ** 2 * psi0


def accumulate_fatigue(history: FatigueHistory, R: float, params: FatigueParams,
                       p_H2: float = 0.0, cycle_jump: int = 1) -> FatigueHistory:
    """Close a load cycle: update the threshold gate, then add the increment.

    ``params.alpha_n`` must be resolved.  The increment is multiplied by
    ``cycle_jump`` to stand for that many identical cycles.
    """
    if params.alpha_n is None:
        raise ValueError("FatigueParams.alpha_n is unresolved")
    if not 0.0 <= R <= 1.0:
        raise ValueError("load ratio must lie in [0, 1]")
    amp = ((1.0 - R) / 2.0) ** (2.0 * params.kappa)
    hist_max = np.maximum(history.hist_max, history.alpha_max * amp)
    gate = history.gate | (hist_max > params.alpha_e)
    n = params.exponent(p_H2)
    d = laws.fatigue_increment(history.alpha_max, R, n, params.kappa, params.alpha_n, gate)
    return FatigueHistory(history.alpha_bar + cycle_jump * d, history.alpha_max, hist_max, gate)


def homogeneous_phi(psi0, Gc, ell, fF=1.0, fH=1.0):
    """Closed-form root of the damage equation without gradients."""
    return 2.0 * psi0 * ell / (fF * fH * Gc + 2.0 * psi0 * ell)


class PhaseFieldSolver:
    """Damage solver bound to one mesh; skips solves when the drive is unchanged."""

    def __init__(self, mesh: Mesh, material: MaterialParams,
                 geom: Optional[ElementGeometry] = None):
        self.mesh = mesh
        self.material = material
        self.geom = geom if geom is not None else ElementGeometry(mesh)
        self.assembler = Assembler(mesh, 1)
        self.dofmap = DofMap(mesh.n_nodes, 1)
        self._last_drive = None
        self._last_phi = None
        self.n_solves = 0

    def toughness_factor(self, C: Optional[np.ndarray], fatigue: Optional[FatigueHistory],
                         fatigue_params: Optional[FatigueParams],
                         hydrogen: Optional[HydrogenParams]) -> np.ndarray:
        f = np.ones(self.geom.shape)
        if fatigue is not None and fatigue_params is not None:
            f = f * laws.fatigue_degradation_fF(fatigue.alpha_bar, fatigue_params.alpha_bar_0)
        if C is not None and hydrogen is not None:
            Cq = np.maximum(self.geom.interpolate(C), 0.0)
            f = f * hydrogen.fH(Cq)
        return f

    def solve(self, H: np.ndarray, f: np.ndarray, phi_prev: Optional[np.ndarray] = None) -> np.ndarray:
        """Damage field for history ``H`` and toughness factor ``f`` at points."""
        if phi_prev is None:
            phi_prev = np.zeros(self.mesh.n_nodes)
        drive = H / f
        if (self._last_drive is not None and np.array_equal(drive, self._last_drive)
                and np.array_equal(phi_prev, self._last_phi)):
            return phi_prev
        if not np.any(drive > 0.0):
            phi = np.zeros(self.mesh.n_nodes)
        else:
            m = self.material
            system = assemble("phase_field", self.geom, self.assembler, self.dofmap,
                              gc=m.Gc0, ell=m.ell, drive_q=drive)
            phi = Factorization(system).solve()
            self.n_solves += 1
        phi = np.maximum(np.clip(phi, 0.0, 1.0), phi_prev)
        self._last_drive = drive
        self._last_phi = phi
        return phi


def solve_phase_field(mesh: Mesh, H_irr: np.ndarray, C: Optional[np.ndarray],
                      fatigue: Optional[FatigueHistory], material: MaterialParams,
                      fatigue_params: Optional[FatigueParams] = None,
                      hydrogen: Optional[HydrogenParams] = None,
                      phi_prev: Optional[np.ndarray] = None,
                      solver: Optional[PhaseFieldSolver] = None) -> np.ndarray:
    """Functional wrapper around :class:`PhaseFieldSolver`."""
    if solver is None:
        solver = PhaseFieldSolver(mesh, material)
    f = solver.toughness_factor(C, fatigue, fatigue_params, hydrogen)
    return solver.solve(H_irr, f, phi_prev)
