import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from h2fatigue import laws
from h2fatigue.fem import ElementGeometry
from h2fatigue.mesh import rectangle_mesh
from h2fatigue.params import FatigueParams, HydrogenParams, MaterialParams
from h2fatigue.phasefield import (FatigueHistory, IrreversibilityHistory, PhaseFieldSolver,
                                  accumulate_fatigue, homogeneous_phi, update_alpha)
from h2fatigue.verification import strip_tension

MAT = MaterialParams()
FAT = FatigueParams().resolved(MAT)


@pytest.fixture(scope="module")
def square():
    m = rectangle_mesh(2.0, 2.0, 3, 3)
    return m, PhaseFieldSolver(m, MAT)


def _uniform(solver, psi0, f=1.0):
    shape = solver.geom.shape
    return solver.solve(np.full(shape, psi0), np.full(shape, f))


@pytest.mark.parametrize("psi0", [0.01, 1.0, 30.0])
def test_homogeneous_drive_closed_form(square, psi0):
    m, s = square
    phi = _uniform(s, psi0)
    ref = homogeneous_phi(psi0, MAT.Gc0, MAT.ell)
    assert np.allclose(phi, ref, rtol=1e-8)


def test_homogeneous_closed_form_oracle():
    # independent oracle: root of (Gc/ell) phi + 2 psi (phi - 1) = 0
    psi = 3.0
    phi = homogeneous_phi(psi, 100.0, 0.27)
    assert 100.0 / 0.27 * phi + 2 * psi * (phi - 1) == pytest.approx(0.0, abs=1e-12)


def test_toughness_reduction_raises_damage(square):
    m, s = square
    full = _uniform(s, 1.0, 1.0)
    half = _uniform(s, 1.0, 0.5)
    assert np.all(half > full)
    assert np.allclose(half, homogeneous_phi(1.0, MAT.Gc0, MAT.ell, 0.5), rtol=1e-8)


def test_factor_composition(square):
    m, s = square
    a = _uniform(s, 1.0, 0.5 * 0.5)
    assert np.allclose(a, homogeneous_phi(1.0, MAT.Gc0, MAT.ell, fF=0.5, fH=0.5), rtol=1e-8)
    assert np.allclose(a, homogeneous_phi(1.0, MAT.Gc0, MAT.ell, fF=0.25), rtol=1e-12)


def test_toughness_factor_product(square):
    m, s = square
    hp = HydrogenParams()
    C = np.full(m.n_nodes, hp.C_env(106.0))
    hist = FatigueHistory.zeros(s.geom.shape)
    hist = FatigueHistory(np.full(s.geom.shape, 3 * FAT.alpha_bar_0), hist.alpha_max,
                          hist.hist_max, hist.gate)
    f = s.toughness_factor(C, hist, FAT, hp)
    expect = laws.fatigue_degradation_fF(3 * FAT.alpha_bar_0, FAT.alpha_bar_0) * float(hp.fH(C[0]))
    assert np.allclose(f, expect, rtol=1e-12)


def test_zero_drive_zero_damage(square):
    m, s = square
    assert np.all(_uniform(s, 0.0) == 0.0)


def test_irreversibility_of_solution(square):
    m, s = square
    prev = np.full(m.n_nodes, 0.6)
    phi = s.solve(np.full(s.geom.shape, 0.01), np.ones(s.geom.shape), prev)
    assert np.all(phi >= prev)
    assert phi.max() <= 1.0


def test_solve_skipped_when_unchanged(square):
    m, s = square
    H = np.full(s.geom.shape, 0.3)
    f = np.ones(s.geom.shape)
    p = s.solve(H, f)
    n = s.n_solves
    q = s.solve(H, f, p)
    assert s.n_solves == n
    assert np.array_equal(p, q)


def test_strip_strength():
    r = strip_tension(MAT, n_steps=301)
    assert r.peak == pytest.approx(MAT.sigma_c, rel=0.01)
    assert np.all(np.diff(r.phi) >= 0)


def test_history_field_monotone(rng):
    h = IrreversibilityHistory.zeros((3, 9))
    prev = h.H
    for _ in range(10):
        h = h.update(rng.uniform(0, 1, (3, 9)))
        assert np.all(h.H >= prev)
        prev = h.H


def test_update_alpha_variants():
    psi = np.array([[2.0, 4.0]])
    phi = np.array([[0.0, 0.5]])
    assert np.allclose(update_alpha(phi, psi), [[2.0, 1.0]])
    assert np.allclose(update_alpha(phi, psi, degraded=False), psi)


def _hist(alpha_max, gate=False):
    a = np.atleast_2d(np.asarray(alpha_max, dtype=float))
    return FatigueHistory(np.zeros_like(a), a, np.zeros_like(a), np.full(a.shape, gate))


def test_accumulate_R_one_gives_nothing():
    h = accumulate_fatigue(_hist(50.0, True), 1.0, FAT)
    assert np.all(h.alpha_bar == 0)


def test_accumulate_gate_threshold():
    amp = ((1 - 0.1) / 2) ** (2 * FAT.kappa)
    below = accumulate_fatigue(_hist(0.99 * FAT.alpha_e / amp), 0.1, FAT)
    above = accumulate_fatigue(_hist(1.01 * FAT.alpha_e / amp), 0.1, FAT)
    assert np.all(below.alpha_bar == 0) and not below.gate.any()
    assert np.all(above.alpha_bar > 0) and above.gate.all()


def test_accumulate_reference_value():
    # alpha_max = alpha_n, R = 0.1, n = 1.25, kappa = 0.78
    h = accumulate_fatigue(_hist(FAT.alpha_n, True), 0.1, FAT)
    ref = 0.45 ** (2 * 0.78 * 1.25)
    assert h.alpha_bar.item() == pytest.approx(ref, rel=1e-12)
    assert ref == pytest.approx(0.2108, abs=5e-4)


def test_gate_stays_open():
    h = accumulate_fatigue(_hist(100.0), 0.1, FAT)
    h = h.start_cycle()
    h2 = accumulate_fatigue(h.observe(np.full_like(h.alpha_max, 0.001)), 0.1, FAT)
    assert h2.gate.all()
    assert np.all(h2.alpha_bar > h.alpha_bar)


def test_cycle_jump_multiplies_increment():
    one = accumulate_fatigue(_hist(10.0, True), 0.1, FAT)
    ten = accumulate_fatigue(_hist(10.0, True), 0.1, FAT, cycle_jump=10)
    assert ten.alpha_bar.item() == pytest.approx(10 * one.alpha_bar.item(), rel=1e-14)


def test_hydrogen_exponent_override():
    fp = FatigueParams(n_hydrogen_override=1.9).resolved(MAT)
    air = accumulate_fatigue(_hist(FAT.alpha_n * 0.5, True), 0.1, fp, p_H2=0.0)
    h2 = accumulate_fatigue(_hist(FAT.alpha_n * 0.5, True), 0.1, fp, p_H2=10.0)
    assert h2.alpha_bar.item() < air.alpha_bar.item()


@settings(max_examples=40, deadline=None)
@given(st.floats(0, 200), st.floats(0, 0.95), st.integers(1, 50))
def test_accumulation_monotone(alpha_max, R, J):
    h = accumulate_fatigue(_hist(alpha_max), R, FAT, cycle_jump=J)
    assert np.all(h.alpha_bar >= 0)
    assert np.all(h.hist_max >= 0)


@settings(max_examples=40, deadline=None)
@given(st.floats(0, 1e3), st.floats(1e-3, 1.0))
def test_homogeneous_phi_in_unit_interval(psi, f):
    phi = homogeneous_phi(psi, MAT.Gc0, MAT.ell, f)
    assert 0.0 <= phi < 1.0
