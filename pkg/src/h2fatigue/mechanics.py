"""Plane-strain elasticity with phase-field degraded stiffness."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .fem import (Assembler, DofMap, ElementGeometry, Factorization, SolverError,
                  assemble, plane_strain_D)
from .mesh import Mesh
from .params import MaterialParams

K_RES = 1e-7


class SpecimenSeparated(RuntimeError):
    """The ligament no longer carries load (singular or runaway system)."""


def residual_stiffness_floor(phi, k_res: float = K_RES):
    """Effective degradation ``(1 - phi)**2 + k_res`` used in the stiffness."""
    p = np.clip(np.asarray(phi, dtype=float), 0.0, 1.0)
    out = (1.0 - p) ** 2 + k_res
    return float(out) if np.ndim(phi) == 0 else out


@dataclass(frozen=True)
class Loading:
    """Boundary data for the displacement field.

    ``fixed`` entries ``(set, comp, value)`` are load independent supports.
    ``scaled_displacements`` and ``forces`` are multiplied by the load
    parameter; a force entry is the total force on the set, shared equally
    by its nodes.
    """

    fixed: Sequence[tuple] = ()
    scaled_displacements: Sequence[tuple] = ()
    forces: Sequence[tuple] = ()

    @classmethod
    def compact_tension(cls, B: float, distributed_pin: bool = False) -> "Loading":
        """Symmetry plane, one horizontal anchor and pin force ``P/B`` per unit thickness."""
        pin = "PIN_AREA" if distributed_pin else "PIN"
        return cls(fixed=(("SYMMETRY", 1, 0.0), ("ANCHOR", 0, 0.0)),
                   forces=((pin, 1, 1.0 / B),))


@dataclass(frozen=True)
class MechState:
    """Displacement solution and quadrature-point fields.

    ``strain`` and ``stress0`` are Voigt ``(xx, yy, xy)`` with engineering
    shear strain; ``stress0`` is the undamaged stress.
    """

    u: np.ndarray
    strain: np.ndarray
    stress0: np.ndarray
    psi0: np.ndarray
    sigma_h: np.ndarray
    g_eff: np.ndarray
    load: float
    work: float = 0.0    # external work 0.5 * P * u_load
    energy: float = 0.0  # stored energy sum(g_eff psi0 w)


def hydrostatic_stress(stress0, nu, g=None):
    """``tr(sigma)/3`` in plane strain, optionally degraded by ``g``."""
    sh = (1.0 + nu) * (stress0[..., 0] + stress0[..., 1]) / 3.0
    return sh if g is None else g * sh


class MechanicsSolver:
    """Equilibrium solver bound to one mesh, material and loading.

    While the phase field is unchanged the factorised stiffness is reused
    and the response is scaled linearly with the load parameter.
    """

    def __init__(self, mesh: Mesh, material: MaterialParams, loading: Loading,
                 geom: Optional[ElementGeometry] = None, damaged_sigma_h: bool = True,
                 k_res: float = K_RES):
        self.mesh = mesh
        self.material = material
        self.loading = loading
        self.geom = geom if geom is not None else ElementGeometry(mesh)
        self.damaged_sigma_h = damaged_sigma_h
        self.k_res = k_res
        self.D = plane_strain_D(material.E, material.nu)
        self.Kq = self.geom.elastic_q(self.D)
        self.assembler = Assembler(mesh, 2)
        self.dofmap = DofMap(mesh.n_nodes, 2)
        for name, comp, val in loading.fixed:
            self.dofmap.constrain(mesh.nodes_in(name), val, comp)
        for name, comp, val in loading.scaled_displacements:
            self.dofmap.constrain(mesh.nodes_in(name), val, comp)
        self.F_unit = np.zeros(self.dofmap.n_dofs)
        for name, comp, total in loading.forces:
            nodes = mesh.nodes_in(name)
            np.add.at(self.F_unit, self.dofmap.dofs(nodes, comp), total / len(nodes))
        self._cache_phi = None
        self._cache = None
        self.n_factorizations = 0

    def _unit_response(self, phi: np.ndarray):
        if self._cache_phi is not None and np.array_equal(phi, self._cache_phi):
            return self._cache
        g_q = residual_stiffness_floor(self.geom.interpolate(phi), self.k_res)
        system = assemble("elasticity", self.geom, self.assembler, self.dofmap,
                          Kq=self.Kq, g_q=g_q, F=self.F_unit)
        try:
            u = Factorization(system).solve()
        except SolverError as exc:
            raise SpecimenSeparated(str(exc)) from exc
        self.n_factorizations += 1
        self._cache_phi = phi.copy()
        self._cache = (u, g_q)
        return self._cache

    def solve(self, phi: np.ndarray, load: float) -> MechState:
        if not np.isfinite(load):
            raise ValueError("load must be finite")
        u1, g_q = self._unit_response(np.asarray(phi, dtype=float))
        # all non-zero boundary data scale with the load, so u is linear in it
        has_fixed_offsets = any(v != 0.0 for _, _, v in self.loading.fixed)
        if has_fixed_offsets:
            raise NotImplementedError("non-zero load-independent supports")
        u = load * u1
        if not np.all(np.isfinite(u)) or np.abs(u).max(initial=0.0) > 1e3 * self.mesh.meta.get("W", 1e3):
            raise SpecimenSeparated("displacement runaway")
        return self.postprocess(u, g_q, load)

    def postprocess(self, u: np.ndarray, g_q: np.ndarray, load: float) -> MechState:
        geom = self.geom
        ue = u[self.assembler.edofs]
        strain = np.einsum("eqij,ej->eqi", geom.B, ue)
        stress0 = strain @ self.D.T
        psi0 = 0.5 * np.einsum("eqi,eqi->eq", stress0, strain)
        np.maximum(psi0, 0.0, out=psi0)
        g = g_q - self.k_res if self.damaged_sigma_h else None
        sigma_h = hydrostatic_stress(stress0, self.material.nu, g)
        work = 0.5 * load * float(self.F_unit @ u)
        energy = float((g_q * psi0 * geom.wdet).sum())
        return MechState(u, strain, stress0, psi0, sigma_h, g_q, float(load), work, energy)

    def reactions(self, state: MechState) -> np.ndarray:
        """Nodal reaction forces ``K u - F`` (zero at free dofs)."""
        K = self.assembler.matrix(
            np.matmul(state.g_eff[:, None, :], self.Kq)[:, 0, :].reshape(-1, 16, 16))
        return K @ state.u - state.load * self.F_unit

    def pin_displacement(self, state: MechState) -> float:
        _, comp, _ = self.loading.forces[0]
        nodes = self.mesh.nodes_in(self.loading.forces[0][0])
        return float(state.u[self.dofmap.dofs(nodes, comp)].mean())


_SOLVERS: dict = {}


def solve_equilibrium(mesh: Mesh, phi: np.ndarray, load: float,
                      material: MaterialParams = MaterialParams(),
                      loading: Optional[Loading] = None, **options) -> MechState:
    """Functional entry point; caches one solver per (mesh, material, loading)."""
    if loading is None:
        loading = Loading.compact_tension(mesh.meta["B"])
    key = (id(mesh), material, loading, tuple(sorted(options.items())))
    solver = _SOLVERS.get(key)
    if solver is None or solver.mesh is not mesh:
        if len(_SOLVERS) > 8:
            _SOLVERS.clear()
        solver = _SOLVERS[key] = MechanicsSolver(mesh, material, loading, **options)
    return solver.solve(phi, load)
