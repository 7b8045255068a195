"""Stress-assisted hydrogen diffusion.

Backward Euler for ``dC/dt = div(D grad C) - div(D V_H C grad(sigma_h) / (Rg T))``
with a row-scaled (HRZ) lumped mass by default; the consistent mass is
an option.  Lumping removes the undershoot that the consistent mass
produces next to charged boundaries when ``dt << h**2 / D``.  ``sigma_h`` at quadrature points is first projected
to a continuous nodal field so that its gradient exists everywhere.
Crack faces (nodes with ``phi >= phi_exposure``) are held at the
environmental concentration by a penalty weighted with positive lumped
nodal volumes.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional, Sequence

import numpy as np
import scipy.sparse.linalg as spla

from .fem import (Assembler, DofMap, ElementGeometry, Factorization, drift_matrices,
                  weighted)
from .mesh import Mesh
from .params import HydrogenParams


@dataclass(frozen=True)
class HydrogenState:
    C: np.ndarray
    C_env: float
    exposed: np.ndarray  # bool per node, grows monotonically

    @classmethod
    def empty(cls, n_nodes: int, C_env: float) -> "HydrogenState":
        return cls(np.zeros(n_nodes), float(C_env), np.zeros(n_nodes, dtype=bool))

    @property
    def C_clipped(self) -> np.ndarray:
        return np.maximum(self.C, 0.0)


def lumped_volumes(geom: ElementGeometry, assembler: Assembler) -> np.ndarray:
    """Row-sum-scaled diagonal (HRZ) nodal volumes; positive for Q8."""
    diag = geom.mass_q.sum(axis=1)[:, ::9]           # (ne, 8) element diagonal
    area = geom.wdet.sum(axis=1)
    scale = area / diag.sum(axis=1)
    return assembler.vector(diag * scale[:, None])


@dataclass(frozen=True)
class TransportOptions:
    phi_exposure: float = 0.9
    penalty_factor: float = 1e6     # k_pen = factor * D / ell**2
    penalty_min_dt_ratio: float = 1e3  # k_pen >= ratio / dt
    stabilization: bool = False
    lumped_mass: bool = True
    boundary_sets: Sequence[str] = ("OUTER", "NOTCH_FACES")


class TransportSolver:
    def __init__(self, mesh: Mesh, hydrogen: HydrogenParams, ell: float,
                 geom: Optional[ElementGeometry] = None,
                 options: TransportOptions = TransportOptions()):
        self.mesh = mesh
        self.hydrogen = hydrogen
        self.ell = ell
        self.options = options
        self.geom = geom if geom is not None else ElementGeometry(mesh)
        self.assembler = Assembler(mesh, 1)
        one = np.ones(self.geom.shape)
        Mc = weighted(one, self.geom.mass_q)
        self.Ke = weighted(one, self.geom.lap_q)
        self.M_consistent = self.assembler.matrix(Mc)
        self.volumes = lumped_volumes(self.geom, self.assembler)
        if options.lumped_mass:
            diag = np.einsum("eii->ei", Mc)
            scale = self.geom.wdet.sum(axis=1) / diag.sum(axis=1)
            self.Me = np.zeros_like(Mc)
            idx = np.arange(Mc.shape[1])
            self.Me[:, idx, idx] = diag * scale[:, None]
        else:
            self.Me = Mc
        self.M = self.assembler.matrix(self.Me)
        self._Mlu = None
        bnd = [mesh.nodes_in(s) for s in options.boundary_sets if s in mesh.node_sets]
        self.boundary = np.unique(np.concatenate(bnd)) if bnd else np.zeros(0, dtype=np.int64)
        self.is_boundary = np.zeros(mesh.n_nodes, dtype=bool)
        self.is_boundary[self.boundary] = True
        self.h_elem = np.sqrt(self.geom.wdet.sum(axis=1))
        self.n_solves = 0

    # -- helpers -----------------------------------------------------------
    def project(self, values_q: np.ndarray) -> np.ndarray:
        """L2 projection of a quadrature field onto the nodal basis."""
        if self._Mlu is None:
            self._Mlu = spla.splu(self.M_consistent.tocsc())
        b = self.assembler.vector((values_q * self.geom.wdet) @ self.geom.N)
        return self._Mlu.solve(b)

    def velocity(self, sigma_h_q: Optional[np.ndarray]) -> Optional[np.ndarray]:
        """Drift velocity ``D V_H grad(sigma_h) / (Rg T)`` at points [mm/s]."""
        if sigma_h_q is None or not np.any(sigma_h_q):
            return None
        s = self.project(sigma_h_q)
        h = self.hydrogen
        return h.D * h.drift_coefficient * self.geom.gradient(s)

    def penalty_stiffness(self, dt: float) -> float:
        o = self.options
        return max(o.penalty_factor * self.hydrogen.D / self.ell**2, o.penalty_min_dt_ratio / dt)

    def _stabilization(self, v: np.ndarray) -> np.ndarray:
        """Streamline diffusion where the element Peclet number exceeds 2."""
        speed = np.linalg.norm(v, axis=-1)
        D = self.hydrogen.D
        pe = speed * self.h_elem[:, None] / (2.0 * D)
        with np.errstate(divide="ignore", invalid="ignore"):
            xi = np.where(pe > 1e-8, 1.0 / np.tanh(pe) - 1.0 / pe, 0.0)
            k = np.where(pe > 2.0, 0.5 * speed * self.h_elem[:, None] * xi, 0.0)
            vhat = np.where(speed[..., None] > 0, v / speed[..., None], 0.0)
        s = np.einsum("eqai,eqi->eqa", self.geom.dN, vhat)
        w = (k * self.geom.wdet)[..., None, None]
        return (w * s[..., :, None] * s[..., None, :]).sum(axis=1)

    # -- stepping ----------------------------------------------------------
    def step(self, state: HydrogenState, sigma_h_q: Optional[np.ndarray], dt: float,
             phi: Optional[np.ndarray] = None) -> HydrogenState:
        if not dt > 0:
            raise ValueError("dt must be positive")
        h = self.hydrogen
        exposed = state.exposed
        if phi is not None:
            exposed = exposed | (phi >= self.options.phi_exposure)
        Ke = self.Me / dt + h.D * self.Ke
        v = self.velocity(sigma_h_q)
        symmetric = v is None
        if v is not None:
            Ke = Ke - drift_matrices(self.geom, v)
            if self.options.stabilization:
                Ke = Ke + self._stabilization(v)
        F = self.M @ state.C / dt
        dofmap = DofMap(self.mesh.n_nodes, 1)
        if self.boundary.size:
            dofmap.constrain(self.boundary, state.C_env)
        diag = None
        pen = exposed & ~self.is_boundary
        if pen.any():
            k = self.penalty_stiffness(dt)
            diag = np.where(pen, k * self.volumes, 0.0)
            F = F + diag * state.C_env
        system = self.assembler.system(Ke, F, dofmap, symmetric, "C", diag=diag)
        C = Factorization(system).solve()
        self.n_solves += 1
        return HydrogenState(C, state.C_env, exposed)

    def soak(self, state: HydrogenState, duration: float, dt0: Optional[float] = None,
             growth: float = 1.25) -> HydrogenState:
        """Unloaded diffusion over ``duration`` with geometrically growing steps."""
        if duration < 0:
            raise ValueError("duration must be non-negative")
        if duration == 0:
            return state
        if dt0 is None:
            hmin = float(self.h_elem.min())
            dt0 = hmin**2 / self.hydrogen.D
        t, dt = 0.0, min(dt0, duration)
        while t < duration * (1 - 1e-12):
            dt = min(dt, duration - t)
            state = self.step(state, None, dt)
            t += dt
            dt *= growth
        return state

    def total(self, state: HydrogenState) -> float:
        """``int C dV`` with the mass matrix in use (conserved exactly when sealed)."""
        return float(self.M.sum(axis=0).A1 @ state.C)


def precharge(state: HydrogenState) -> HydrogenState:
    """Uniform field at the environmental concentration."""
    return replace(state, C=np.full_like(state.C, state.C_env))


def soak(solver: TransportSolver, state: HydrogenState, duration: float) -> HydrogenState:
    return solver.soak(state, duration)


def step_diffusion(solver: TransportSolver, state: HydrogenState,
                   sigma_h_q: Optional[np.ndarray], dt: float,
                   phi: Optional[np.ndarray] = None) -> HydrogenState:
    return solver.step(state, sigma_h_q, dt, phi)
