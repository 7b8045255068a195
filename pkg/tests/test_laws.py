import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from h2fatigue import laws
from h2fatigue.laws import DomainError
from h2fatigue.params import (FatigueParams, HydrogenParams, MaterialParams,
                              endurance_energy, enrichment_factor)

H = HydrogenParams()


def test_degradation_g_values():
    assert laws.degradation_g(0.0) == 1.0
    assert laws.degradation_g(1.0) == 0.0
    assert laws.degradation_g(0.5) == 0.25


@pytest.mark.parametrize("phi", [-0.1, 1.2, float("nan")])
def test_degradation_g_domain(phi):
    with pytest.raises(DomainError):
        laws.degradation_g(phi)


@given(st.floats(0.01, 0.99))
def test_g_prime_matches_central_difference(phi):
    h = 1e-6
    fd = (laws.degradation_g(phi + h) - laws.degradation_g(phi - h)) / (2 * h)
    assert laws.degradation_g_prime(phi) == pytest.approx(fd, rel=1e-6)


def test_fH_examples():
    assert H.fH(0.0) == 1.0
    assert H.fH(1e6) == pytest.approx(0.12)
    # independent evaluation of the fit at 0.7928 wppm
    ref = 0.12 + 0.88 * math.exp(-7.0 * 0.7928**2)
    assert H.fH(0.7928) == pytest.approx(ref, rel=1e-12)
    assert round(H.fH(0.7928), 4) == 0.1308


def test_fH_negative_rejected():
    with pytest.raises(DomainError):
        H.fH(-1e-3)


@given(st.lists(st.floats(0, 50), min_size=2, max_size=20))
def test_fH_range_and_monotone(cs):
    c = np.sort(np.array(cs))
    f = H.fH(c)
    assert np.all(f > H.xi - 1e-15) and np.all(f <= 1.0)
    assert np.all(np.diff(f) <= 1e-15)


def test_fF_examples():
    a0 = 8.0
    assert laws.fatigue_degradation_fF(0.0, a0) == 1.0
    assert laws.fatigue_degradation_fF(a0, a0) == 0.25
    assert laws.fatigue_degradation_fF(3 * a0, a0) == pytest.approx(0.0625)
    with pytest.raises(DomainError):
        laws.fatigue_degradation_fF(-1.0, a0)


@given(st.lists(st.floats(0, 1e6), min_size=2, max_size=20), st.floats(1e-3, 100))
def test_fF_range_and_monotone(abars, a0):
    a = np.sort(np.array(abars))
    f = laws.fatigue_degradation_fF(a, a0)
    assert np.all(f > 0) and np.all(f <= 1)
    assert np.all(np.diff(f) <= 0)


def test_sieverts():
    assert laws.sieverts_concentration(0.0, 0.077) == 0.0
    assert laws.sieverts_concentration(106.0, 0.077) == pytest.approx(0.077 * math.sqrt(106))
    assert round(laws.sieverts_concentration(106.0, 0.077), 4) == 0.7928
    assert laws.sieverts_concentration(55.0, 0.077) == pytest.approx(0.5711, abs=1e-4)
    with pytest.raises(DomainError):
        laws.sieverts_concentration(-1.0, 0.077)


def test_length_scale_from_strength():
    ell = laws.derive_length_scale(210000.0, 100.0, 4 * 715.0)
    assert ell == pytest.approx(0.27, rel=0.01)
    # at the rounded length scale the critical strain and alpha_n follow
    eps = laws.critical_strain(210000.0, 100.0, 0.27)
    assert eps == pytest.approx(0.02425, rel=2e-4)
    assert laws.normalisation_alpha_n(2860.0, eps) == pytest.approx(34.68, rel=5e-4)


def test_length_scale_limits():
    assert laws.derive_length_scale(210000.0, 1e-12, 2860.0) < 1e-14
    assert laws.derive_strength(210000.0, 1e-16, 0.27) < 1e-5
    with pytest.raises(DomainError):
        laws.derive_length_scale(210000.0, 0.0, 2860.0)


@given(st.floats(1e3, 1e6), st.floats(1e-3, 1e3), st.floats(1.0, 1e4))
def test_length_scale_round_trip(E, Gc, sc):
    ell = laws.derive_length_scale(E, Gc, sc)
    assert laws.derive_strength(E, Gc, ell) == pytest.approx(sc, rel=1e-10)


def test_toughness_conversion():
    assert laws.toughness_from_KIc(0.0, 210000.0, 0.3) == 0.0
    K = laws.KIc_from_toughness(100.0, 210000.0, 0.3)
    assert K == pytest.approx(math.sqrt(210000 * 100 / 0.91) / math.sqrt(1000))
    assert round(K, 1) == 151.9
    assert laws.toughness_from_KIc(K, 210000.0, 0.3) == pytest.approx(100.0)
    assert laws.toughness_from_KIc(2 * K, 210000.0, 0.3) == pytest.approx(400.0)


def test_paris_relation():
    assert laws.paris_m_from_n(1.25) == pytest.approx(1.86 / 0.49)
    assert round(laws.paris_m_from_n(1.25), 3) == 3.796
    assert round(laws.paris_m_from_n(1.9), 3) == 5.122
    assert laws.paris_n_from_m(laws.paris_m_from_n(1.9)) == pytest.approx(1.9)
    with pytest.raises(DomainError):
        laws.paris_n_from_m(0.61 / 0.49)
    with pytest.raises(DomainError):
        laws.paris_n_from_m(1.0)


def test_endurance_energy_cross_check():
    # 150 MPa endurance stress gives roughly the tabulated threshold
    ae = endurance_energy(150.0, 210000.0)
    assert ae == pytest.approx(0.0536, abs=1e-4)
    assert abs(ae - 0.05) / 0.05 < 0.10


def test_enrichment_factor():
    assert enrichment_factor(1000.0, H) == pytest.approx(math.exp(2000 * 1000 / (8314 * 300)))
    assert round(enrichment_factor(1000.0, H), 3) == 2.230


def test_material_defaults_and_invariants():
    m = MaterialParams()
    assert m.sigma_c == pytest.approx(2860.0, rel=1e-12)
    assert m.ell == pytest.approx(laws.derive_length_scale(m.E, m.Gc0, 2860.0))
    assert m.eps_c == pytest.approx(math.sqrt(m.Gc0 / (3 * m.ell * m.E)))
    assert m.alpha_n == pytest.approx(0.5 * m.sigma_c * m.eps_c)
    m2 = MaterialParams(ell=0.27)
    assert m2.sigma_c == pytest.approx(laws.derive_strength(m2.E, m2.Gc0, 0.27), rel=1e-12)


@pytest.mark.parametrize("kw", [dict(E=-1.0), dict(nu=0.5), dict(nu=-0.1), dict(Gc0=0.0),
                                dict(ell=0.27, sigma_c=2000.0), dict(ell=-0.1)])
def test_material_rejects(kw):
    with pytest.raises(DomainError):
        MaterialParams(**kw)


def test_fatigue_params():
    fp = FatigueParams().resolved(MaterialParams())
    assert fp.alpha_n == pytest.approx(MaterialParams().alpha_n)
    assert fp.exponent(106.0) == 1.25
    fh = FatigueParams(n_hydrogen_override=1.9)
    assert fh.exponent(0.0) == 1.25 and fh.exponent(55.0) == 1.9
    for kw in (dict(n=0.0), dict(kappa=-1.0), dict(alpha_bar_0=0.0), dict(alpha_e=-0.1),
               dict(alpha_n=0.0)):
        with pytest.raises(DomainError):
            FatigueParams(**kw)


def test_hydrogen_params():
    assert H.drift_coefficient * 8314 * 300 == pytest.approx(2000.0)
    assert H.C_env(106.0) == pytest.approx(0.7927635, rel=1e-6)
    for kw in (dict(D=0.0), dict(T=-1.0), dict(xi=1.5), dict(eta=-1.0), dict(b=0.0),
               dict(Rg=8.314)):
        with pytest.raises(DomainError):
            HydrogenParams(**kw)
