import numpy as np
import pytest

from conftest import ELL, coarse_ct_geometry
from h2fatigue.experiment import compute_delta_K
from h2fatigue.fem import plane_strain_D
from h2fatigue.mechanics import (K_RES, Loading, MechanicsSolver, hydrostatic_stress,
                                 residual_stiffness_floor, solve_equilibrium)
from h2fatigue.mesh import generate_ct_half_mesh, rectangle_mesh
from h2fatigue.params import MaterialParams

MAT = MaterialParams()


@pytest.fixture(scope="module")
def ct_solver(coarse_ct):
    return MechanicsSolver(coarse_ct, MAT, Loading.compact_tension(coarse_ct.meta["B"]))


def test_zero_load_gives_zero_fields(ct_solver, coarse_ct):
    s = ct_solver.solve(np.zeros(coarse_ct.n_nodes), 0.0)
    assert np.all(s.u == 0) and np.all(s.psi0 == 0) and np.all(s.sigma_h == 0)


def test_linear_in_load_and_factorization_reused(ct_solver, coarse_ct):
    phi = np.zeros(coarse_ct.n_nodes)
    n0 = ct_solver.n_factorizations
    a = ct_solver.solve(phi, 1000.0)
    b = ct_solver.solve(phi, 2500.0)
    assert np.allclose(b.u, 2.5 * a.u, rtol=1e-13, atol=0)
    assert np.allclose(b.psi0, 2.5**2 * a.psi0, rtol=1e-12)
    assert ct_solver.n_factorizations - n0 <= 1


def test_energy_identity(ct_solver, coarse_ct):
    s = ct_solver.solve(np.zeros(coarse_ct.n_nodes), 1500.0)
    assert s.energy == pytest.approx(s.work, rel=1e-6)


def test_reaction_balance(ct_solver, coarse_ct):
    P = 1500.0
    s = ct_solver.solve(np.zeros(coarse_ct.n_nodes), P)
    r = ct_solver.reactions(s)
    B = coarse_ct.meta["B"]
    ry = r[1::2].sum()
    assert abs(ry - (-P / B)) < 1e-8 * P / B or abs(ry + P / B) < 1e-8 * P / B
    free = ct_solver.dofmap.free()
    assert np.abs(r[free]).max() < 1e-8 * P / B


def test_stress_intensity_from_compliance():
    """dC/da of the FE model matches the standard CT K expression within 10%."""
    a, d = 20.32, 0.2
    comp = []
    for a0 in (a - d, a + d):
        m = generate_ct_half_mesh(coarse_ct_geometry(a0=a0).resolved(ELL), ELL)
        s = MechanicsSolver(m, MAT, Loading.compact_tension(m.meta["B"]))
        st = s.solve(np.zeros(m.n_nodes), 1000.0)
        comp.append(2 * s.pin_displacement(st) / 1000.0)  # full opening
    B, W = m.meta["B"], m.meta["W"]
    G = 1000.0**2 / (2 * B) * (comp[1] - comp[0]) / (2 * d)
    K = np.sqrt(G * MAT.E / (1 - MAT.nu**2)) / np.sqrt(1000.0)
    assert K == pytest.approx(compute_delta_K(1000.0, a, W, B), rel=0.10)


def _uniaxial_strip():
    m = rectangle_mesh(2.0, 1.0, 4, 2)
    load = Loading(fixed=(("LEFT", 0, 0.0), ("BOTTOM", 1, 0.0)),
                   scaled_displacements=(("RIGHT", 0, 1.0),))
    return m, load


def test_plane_strain_out_of_plane_stress():
    m, load = _uniaxial_strip()
    s = MechanicsSolver(m, MAT, load)
    st = s.solve(np.zeros(m.n_nodes), 0.001)
    sx, sy = st.stress0[..., 0], st.stress0[..., 1]
    sz = MAT.nu * (sx + sy)
    sh = (sx + sy + sz) / 3.0
    assert np.allclose(hydrostatic_stress(st.stress0, MAT.nu), sh, rtol=1e-12)
    # homogeneous uniaxial plane-strain tension: sigma_yy = 0
    assert np.abs(sy).max() < 1e-8 * np.abs(sx).max()
    assert np.allclose(sx, MAT.E / (1 - MAT.nu**2) * 0.0005, rtol=1e-9)


def test_rigid_translation_is_stress_free():
    m = rectangle_mesh(1.0, 1.0, 2, 2)
    D = plane_strain_D(MAT.E, MAT.nu)
    from h2fatigue.fem import ElementGeometry
    g = ElementGeometry(m)
    u = np.tile([0.3, -0.7], m.n_nodes)
    from h2fatigue.fem import Assembler
    eps = np.einsum("eqij,ej->eqi", g.B, u[Assembler(m, 2).edofs])
    assert np.abs(eps @ D.T).max() < 1e-9


def test_residual_floor():
    assert residual_stiffness_floor(1.0) == pytest.approx(K_RES)
    assert residual_stiffness_floor(0.0) == pytest.approx(1 + K_RES)
    assert residual_stiffness_floor(1.5) == residual_stiffness_floor(1.0)


def test_fully_damaged_strip_carries_nearly_nothing():
    m = rectangle_mesh(2.0, 1.0, 4, 2)
    load = Loading(fixed=(("LEFT", 0, 0.0), ("BOTTOM", 1, 0.0)), forces=(("RIGHT", 0, 1.0),))
    s = MechanicsSolver(m, MAT, load)
    u0 = s.solve(np.zeros(m.n_nodes), 1.0).u
    u1 = s.solve(np.ones(m.n_nodes), 1.0).u
    assert np.abs(u1).max() == pytest.approx(np.abs(u0).max() / K_RES * (1 + K_RES), rel=1e-6)


def test_damaged_hydrostatic_stress_option(coarse_ct):
    phi = np.full(coarse_ct.n_nodes, 0.5)
    kw = dict(material=MAT)
    a = solve_equilibrium(coarse_ct, phi, 1000.0, damaged_sigma_h=True, **kw)
    b = solve_equilibrium(coarse_ct, phi, 1000.0, damaged_sigma_h=False, **kw)
    assert np.allclose(a.sigma_h, 0.25 * b.sigma_h, rtol=1e-10)


def test_displacement_loading_scales():
    m, load = _uniaxial_strip()
    s = MechanicsSolver(m, MAT, load)
    st = s.solve(np.zeros(m.n_nodes), 0.01)
    right = m.nodes_in("RIGHT")
    assert np.allclose(st.u[2 * right], 0.01)
    assert np.allclose(st.strain[..., 0], 0.005, rtol=1e-9)
