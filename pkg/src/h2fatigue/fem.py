"""Finite element machinery shared by the three fields.

Assembly is vectorised: element matrices for the whole mesh are built as one
``(n_elements, nd, nd)`` array and scattered into a sparsity pattern that is
computed once per field.  Dirichlet conditions are removed by row/column
elimination with the prescribed values lifted into the right-hand side.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .mesh import Mesh, gauss_legendre_2d, q8_shape

log = logging.getLogger(__name__)


class AssemblyError(RuntimeError):
    pass


class SolverError(RuntimeError):
    def __init__(self, field: str, message: str):
        super().__init__(f"[{field}] {message}")
        self.field = field


class ElementGeometry:
    """Shape functions, mapped gradients and quadrature weights for a mesh."""

    def __init__(self, mesh: Mesh, order: int = 3):
        self.mesh = mesh
        pts, wts = gauss_legendre_2d(order)
        N, dNr = q8_shape(pts[:, 0], pts[:, 1])
        X = mesh.nodes[mesh.elements]                       # (ne, 8, 2)
        J = np.einsum("qad,eai->eqid", dNr, X)              # dx_i/dxi_d
        det = J[..., 0, 0] * J[..., 1, 1] - J[..., 0, 1] * J[..., 1, 0]
        bad = np.flatnonzero((det <= 0).any(axis=1))
        if bad.size:
            raise AssemblyError(f"non-positive Jacobian in element {int(bad[0])}")
        Jinv = np.empty_like(J)
        Jinv[..., 0, 0] = J[..., 1, 1] / det
        Jinv[..., 1, 1] = J[..., 0, 0] / det
        Jinv[..., 0, 1] = -J[..., 0, 1] / det
        Jinv[..., 1, 0] = -J[..., 1, 0] / det
        self.N = N                                          # (nq, 8)
        self.dN = np.einsum("qad,eqdi->eqai", dNr, Jinv)    # (ne, nq, 8, 2)
        self.wdet = det * wts                               # (ne, nq)
        self.points = np.einsum("qa,eai->eqi", N, X)        # (ne, nq, 2)
        self.n_qp = len(wts)
        self._mass_q = None
        self._lap_q = None
        self._B = None

    @property
    def shape(self):
        return self.wdet.shape

    def interpolate(self, nodal: np.ndarray) -> np.ndarray:
        """Nodal scalar field -> values at quadrature points (ne, nq)."""
        return nodal[self.mesh.elements] @ self.N.T

    def gradient(self, nodal: np.ndarray) -> np.ndarray:
        return np.einsum("eqai,ea->eqi", self.dN, nodal[self.mesh.elements])

    @property
    def mass_q(self):
        """Per-point ``N_i N_j w detJ`` as (ne, nq, 64)."""
        if self._mass_q is None:
            NN = np.einsum("qi,qj->qij", self.N, self.N).reshape(self.n_qp, -1)
            self._mass_q = self.wdet[..., None] * NN[None]
        return self._mass_q

    @property
    def lap_q(self):
        """Per-point ``grad N_i . grad N_j w detJ`` as (ne, nq, 64)."""
        if self._lap_q is None:
            G = np.einsum("eqid,eqjd->eqij", self.dN, self.dN)
            self._lap_q = self.wdet[..., None] * G.reshape(*self.shape, -1)
        return self._lap_q

    @property
    def B(self):
        """Plane strain-displacement operator (ne, nq, 3, 16), Voigt order xx, yy, xy."""
        if self._B is None:
            ne, nq = self.shape
            B = np.zeros((ne, nq, 3, 16))
            dx, dy = self.dN[..., 0], self.dN[..., 1]
            B[..., 0, 0::2] = dx
            B[..., 1, 1::2] = dy
            B[..., 2, 0::2] = dy
            B[..., 2, 1::2] = dx
            self._B = B
        return self._B

    def elastic_q(self, D: np.ndarray):
        """Per-point ``B^T D B w detJ`` as (ne, nq, 256)."""
        B = self.B
        K = np.einsum("eqai,ab,eqbj->eqij", B, D, B, optimize=True)
        return self.wdet[..., None] * K.reshape(*self.shape, -1)

    def integrate(self, values_q: np.ndarray) -> float:
        return float((values_q * self.wdet).sum())


def weighted(coef_q: np.ndarray, per_point: np.ndarray) -> np.ndarray:
    """Element matrices ``sum_q coef_q * per_point_q`` (ne, nd, nd)."""
    ne, nq, k = per_point.shape
    nd = int(round(np.sqrt(k)))
    out = np.matmul(coef_q[:, None, :], per_point)[:, 0, :]
    return out.reshape(ne, nd, nd)


def load_vector(geom: ElementGeometry, coef_q: np.ndarray) -> np.ndarray:
    """Element vectors ``int coef N_i`` (ne, 8)."""
    return (coef_q * geom.wdet) @ geom.N


def drift_matrices(geom: ElementGeometry, velocity_q: np.ndarray) -> np.ndarray:
    """Element matrices ``int N_j (v . grad N_i)`` (ne, 8, 8).

    Row index i is the test function.  Used for the stress-driven hydrogen
    flux with ``v = D V_H grad(sigma_h) / (Rg T)``.
    """
    s = np.einsum("eqai,eqi->eqa", geom.dN, velocity_q) * geom.wdet[..., None]
    return np.einsum("eqa,qb->eab", s, geom.N)


@dataclass
class DofMap:
    """Node -> equation numbering for one field with a constraint registry."""

    n_nodes: int
    ncomp: int = 1

    def __post_init__(self):
        self.constrained: dict[int, float] = {}

    @property
    def n_dofs(self) -> int:
        return self.n_nodes * self.ncomp

    def dofs(self, nodes, comp: int = 0) -> np.ndarray:
        return np.asarray(nodes, dtype=np.int64) * self.ncomp + comp

    def constrain(self, nodes, value=0.0, comp: int = 0) -> None:
        d = self.dofs(nodes, comp)
        vals = np.broadcast_to(np.asarray(value, dtype=float), d.shape)
        self.constrained.update(zip(d.tolist(), vals.tolist()))

    def release(self, nodes, comp: int = 0) -> None:
        for d in self.dofs(nodes, comp).tolist():
            self.constrained.pop(d, None)

    def fixed(self):
        if not self.constrained:
            return np.zeros(0, dtype=np.int64), np.zeros(0)
        d = np.fromiter(self.constrained.keys(), dtype=np.int64)
        v = np.fromiter(self.constrained.values(), dtype=float)
        o = np.argsort(d)
        return d[o], v[o]

    def free(self) -> np.ndarray:
        mask = np.ones(self.n_dofs, dtype=bool)
        mask[self.fixed()[0]] = False
        return np.flatnonzero(mask)


@dataclass
class SparseSystem:
    """Reduced linear system over the free dofs of one field."""

    matrix: sp.csr_matrix
    rhs: np.ndarray
    free: np.ndarray
    fixed: np.ndarray
    fixed_values: np.ndarray
    n_dofs: int
    symmetric: bool
    field: str = "?"

    def expand(self, x_free: np.ndarray) -> np.ndarray:
        x = np.empty(self.n_dofs)
        x[self.free] = x_free
        x[self.fixed] = self.fixed_values
        return x


class _Plan:
    __slots__ = ("free", "inv", "nnz", "indices", "indptr", "pos_fc", "row_fc", "col_fc", "pos_ff")


class Assembler:
    """Scatter element arrays of one field into a fixed sparsity pattern."""

    def __init__(self, mesh: Mesh, ncomp: int = 1):
        self.ncomp = ncomp
        self.n_dofs = mesh.n_nodes * ncomp
        el = mesh.elements
        edofs = (el[:, :, None] * ncomp + np.arange(ncomp)).reshape(len(el), -1)
        self.edofs = edofs
        nd = edofs.shape[1]
        self.rows = np.repeat(edofs, nd, axis=1).ravel()
        self.cols = np.tile(edofs, (1, nd)).ravel()
        key = self.rows * self.n_dofs + self.cols
        uniq, inv = np.unique(key, return_inverse=True)
        self._inv = inv
        self._indices = (uniq % self.n_dofs).astype(np.int32)
        r = uniq // self.n_dofs
        self._indptr = np.searchsorted(r, np.arange(self.n_dofs + 1)).astype(np.int32)
        self._plans: dict = {}

    def matrix(self, Ke: np.ndarray) -> sp.csr_matrix:
        data = np.bincount(self._inv, weights=Ke.ravel(), minlength=len(self._indices))
        return sp.csr_matrix((data, self._indices, self._indptr),
                             shape=(self.n_dofs, self.n_dofs))

    def vector(self, Fe: np.ndarray) -> np.ndarray:
        return np.bincount(self.edofs.ravel(), weights=Fe.ravel(), minlength=self.n_dofs)

    def _plan(self, fixed: np.ndarray) -> _Plan:
        k = fixed.tobytes()
        plan = self._plans.get(k)
        if plan is not None:
            return plan
        is_free = np.ones(self.n_dofs, dtype=bool)
        is_free[fixed] = False
        free = np.flatnonzero(is_free)
        rmap = -np.ones(self.n_dofs, dtype=np.int64)
        rmap[free] = np.arange(len(free))
        nf = len(free)
        rf, cf = is_free[self.rows], is_free[self.cols]
        ff = np.flatnonzero(rf & cf)
        key = rmap[self.rows[ff]] * nf + rmap[self.cols[ff]]
        uniq, inv = np.unique(key, return_inverse=True)
        plan = _Plan()
        plan.free = free
        plan.pos_ff = ff
        plan.inv = inv
        plan.nnz = len(uniq)
        plan.indices = (uniq % nf).astype(np.int32)
        plan.indptr = np.searchsorted(uniq // nf, np.arange(nf + 1)).astype(np.int32)
        fc = np.flatnonzero(rf & ~cf)
        plan.pos_fc = fc
        plan.row_fc = rmap[self.rows[fc]]
        plan.col_fc = self.cols[fc]
        if len(self._plans) > 64:
            self._plans.clear()
        self._plans[k] = plan
        return plan

    def system(self, Ke: np.ndarray, F: np.ndarray, dofmap: DofMap,
               symmetric: bool, field: str = "?",
               diag: Optional[np.ndarray] = None) -> SparseSystem:
        """Assemble and reduce.  ``diag`` adds a nodal diagonal (penalties)."""
        fixed, values = dofmap.fixed()
        plan = self._plan(fixed)
        flat = Ke.reshape(-1)
        nf = len(plan.free)
        data = np.bincount(plan.inv, weights=flat[plan.pos_ff], minlength=plan.nnz)
        A = sp.csr_matrix((data, plan.indices, plan.indptr), shape=(nf, nf))
        if diag is not None:
            A = A + sp.diags(diag[plan.free])
        b = F[plan.free].copy()
        if len(fixed) and np.any(values != 0.0):
            full = np.zeros(self.n_dofs)
            full[fixed] = values
            b -= np.bincount(plan.row_fc, weights=flat[plan.pos_fc] * full[plan.col_fc],
                             minlength=nf)
        return SparseSystem(A, b, plan.free, fixed, values, self.n_dofs, symmetric, field)


def assemble(field_kind: str, geom: ElementGeometry, assembler: Assembler,
             dofmap: DofMap, **coefficients) -> SparseSystem:
    """Assemble one of the model operators.

    ``field_kind`` is ``"elasticity"`` (coefficients ``D``, ``g_q``, optional
    ``F``), ``"phase_field"`` (``gc``, ``ell``, ``drive_q``: the history
    field divided by the toughness factors) or ``"transport"`` (``D``,
    ``dt``, ``velocity_q``, ``C_old``).
    """
    if field_kind == "elasticity":
        Kq = coefficients.get("Kq")
        if Kq is None:
            Kq = geom.elastic_q(coefficients["D"])
        Ke = weighted(coefficients["g_q"], Kq)
        F = coefficients.get("F")
        if F is None:
            F = np.zeros(assembler.n_dofs)
        return assembler.system(Ke, F, dofmap, True, "u")
    if field_kind == "phase_field":
        gc, ell, drive = coefficients["gc"], coefficients["ell"], coefficients["drive_q"]
        one = np.ones(geom.shape)
        Ke = (weighted(gc / ell + 2.0 * drive, geom.mass_q)
              + weighted(gc * ell * one, geom.lap_q))
        F = assembler.vector(load_vector(geom, 2.0 * drive))
        return assembler.system(Ke, F, dofmap, True, "phi")
    if field_kind == "transport":
        dt, D = coefficients["dt"], coefficients["D"]
        one = np.ones(geom.shape)
        M = weighted(one, geom.mass_q)
        Ke = M / dt + weighted(D * one, geom.lap_q)
        v = coefficients.get("velocity_q")
        symmetric = v is None
        if v is not None:
            Ke = Ke - drift_matrices(geom, v)
        Mg = assembler.matrix(M)
        F = Mg @ coefficients["C_old"] / dt
        return assembler.system(Ke, F, dofmap, symmetric, "C")
    raise ValueError(f"unknown field kind {field_kind!r}")


class Factorization:
    """Direct sparse LU of a reduced system, reusable for new right-hand sides."""

    def __init__(self, system: SparseSystem):
        self.system = system
        A = system.matrix.tocsc()
        self._A = A
        if A.shape[0] == 0:
            self._lu = None
            return
        try:
            if system.symmetric:
                self._lu = spla.splu(A, permc_spec="MMD_AT_PLUS_A",
                                     diag_pivot_thresh=0.0,
                                     options={"SymmetricMode": True})
            else:
                self._lu = spla.splu(A, permc_spec="COLAMD")
        except RuntimeError as exc:
            raise SolverError(system.field, f"factorization failed: {exc}") from exc

    def solve_free(self, b: np.ndarray) -> np.ndarray:
        if self._lu is None:
            return np.zeros(0)
        x = self._lu.solve(b)
        if not np.all(np.isfinite(x)):
            raise SolverError(self.system.field, "non-finite solution (singular system)")
        nb = np.linalg.norm(b)
        r = b - self._A @ x
        res = np.linalg.norm(r)
        for _ in range(3):  # iterative refinement for ill-conditioned systems
            if res <= 1e-12 * nb:
                break
            x = x + self._lu.solve(r)
            r = b - self._A @ x
            res = np.linalg.norm(r)
        if res > 1e-10 * max(nb, 1e-300) and res > 1e-280:
            raise SolverError(self.system.field,
                              f"relative residual {res / max(nb, 1e-300):.2e} exceeds 1e-10")
        return x

    def solve(self, b: Optional[np.ndarray] = None) -> np.ndarray:
        """Full-length solution including the prescribed values."""
        x = self.solve_free(self.system.rhs if b is None else b)
        return self.system.expand(x)


def solve(system: SparseSystem) -> np.ndarray:
    """Direct solve of a reduced system; returns the full dof vector."""
    return Factorization(system).solve()


def plane_strain_D(E: float, nu: float) -> np.ndarray:
    """Plane-strain elasticity matrix in Voigt form with engineering shear."""
    c = E / ((1 + nu) * (1 - 2 * nu))
    return c * np.array([[1 - nu, nu, 0.0],
                         [nu, 1 - nu, 0.0],
                         [0.0, 0.0, 0.5 - nu]])
