"""Pointwise constitutive and degradation laws.

All functions accept scalars or numpy arrays and return the same kind.
Units follow :data:`h2fatigue.params.UNITS` (mm, N, MPa, s, wppm).
"""

from __future__ import annotations

import math

import numpy as np

# 1 MPa*sqrt(mm) expressed in MPa*sqrt(m)
MPA_SQRT_MM_TO_MPA_SQRT_M = 1.0 / math.sqrt(1000.0)

PARIS_SLOPE = 0.49
PARIS_OFFSET = 0.61


class DomainError(ValueError):
    """Raised when a law is evaluated outside its domain."""


def _out(x, like):
    if np.ndim(like) == 0:
        return float(x)
    return x


def degradation_g(phi):
    """Quadratic stiffness degradation ``(1 - phi)**2``."""
    p = np.asarray(phi, dtype=float)
    if np.any(p < 0.0) or np.any(p > 1.0) or not np.all(np.isfinite(p)):
        raise DomainError("phase field must lie in [0, 1]")
    return _out((1.0 - p) ** 2, phi)


def degradation_g_prime(phi):
    p = np.asarray(phi, dtype=float)
    if np.any(p < 0.0) or np.any(p > 1.0):
        raise DomainError("phase field must lie in [0, 1]")
    return _out(-2.0 * (1.0 - p), phi)


def hydrogen_degradation_fH(C, xi, eta, b):
    """Toughness reduction factor ``xi + (1 - xi) exp(-eta C**b)``.

    Parameters
    ----------
    C : float or ndarray
        Lattice hydrogen concentration [wppm], non-negative.
    xi, eta, b : float
        Fit constants; ``xi`` is the fully embrittled limit.
    """
    c = np.asarray(C, dtype=float)
    if np.any(c < 0.0) or not np.all(np.isfinite(c)):
        raise DomainError("hydrogen concentration must be non-negative")
    return _out(xi + (1.0 - xi) * np.exp(-eta * c**b), C)


def fatigue_degradation_fF(alpha_bar, alpha_bar_0):
    """Fatigue toughness factor ``(1 - a/(a + a0))**2``.

    Written as ``(a0/(a + a0))**2`` which is the same quantity without the
    cancellation for large accumulated history.
    """
    a = np.asarray(alpha_bar, dtype=float)
    if np.any(a < 0.0) or not np.all(np.isfinite(a)):
        raise DomainError("fatigue history must be non-negative")
    return _out((alpha_bar_0 / (a + alpha_bar_0)) ** 2, alpha_bar)


def sieverts_concentration(p_H2, S):
    """Equilibrium concentration ``S*sqrt(p)`` for gas pressure ``p`` [MPa]."""
    p = np.asarray(p_H2, dtype=float)
    if np.any(p < 0.0):
        raise DomainError("gas pressure must be non-negative")
    return _out(S * np.sqrt(p), p_H2)


def _positive(**kw):
    for k, v in kw.items():
        if not v > 0.0:
            raise DomainError(f"{k} must be positive, got {v!r}")


def derive_length_scale(E, Gc0, sigma_c):
    """Length scale giving homogeneous strength ``sigma_c`` (AT2 model)."""
    _positive(E=E, Gc0=Gc0, sigma_c=sigma_c)
    return (81.0 / 256.0) * E * Gc0 / (3.0 * sigma_c**2)


def derive_strength(E, Gc0, ell):
    """Inverse of :func:`derive_length_scale`: ``(9/16) sqrt(E Gc / 3 ell)``."""
    _positive(E=E, Gc0=Gc0, ell=ell)
    return 9.0 / 16.0 * math.sqrt(E * Gc0 / (3.0 * ell))


def critical_strain(E, Gc0, ell):
    _positive(E=E, Gc0=Gc0, ell=ell)
    return math.sqrt(Gc0 / (3.0 * ell * E))


def normalisation_alpha_n(sigma_c, eps_c):
    """Fatigue normalisation energy density ``sigma_c eps_c / 2`` [N/mm^2]."""
    return 0.5 * sigma_c * eps_c


def toughness_from_KIc(K_Ic, E, nu):
    """Plane-strain toughness [N/mm] from ``K_Ic`` given in MPa*sqrt(m).

    ``K_Ic`` is first converted to MPa*sqrt(mm) (factor sqrt(1000)) so that
    with ``E`` in MPa the result is MPa*mm = N/mm.
    """
    if K_Ic < 0.0:
        raise DomainError("K_Ic must be non-negative")
    _positive(E=E)
    if not 0.0 <= nu < 0.5:
        raise DomainError("Poisson ratio must lie in [0, 0.5)")
    K_mm = K_Ic / MPA_SQRT_MM_TO_MPA_SQRT_M
    return (1.0 - nu**2) * K_mm**2 / E


def KIc_from_toughness(Gc, E, nu):
    """Inverse of :func:`toughness_from_KIc`, result in MPa*sqrt(m)."""
    if Gc < 0.0:
        raise DomainError("Gc must be non-negative")
    _positive(E=E)
    return math.sqrt(E * Gc / (1.0 - nu**2)) * MPA_SQRT_MM_TO_MPA_SQRT_M


def paris_n_from_m(m):
    """Fatigue exponent matching a Paris slope: ``n = 0.49 m - 0.61``."""
    n = PARIS_SLOPE * m - PARIS_OFFSET
    if not n > 0.0:
        raise DomainError(f"Paris slope m={m} gives non-positive exponent n={n}")
    return n


def paris_m_from_n(n):
    if not n > 0.0:
        raise DomainError("fatigue exponent must be positive")
    return (n + PARIS_OFFSET) / PARIS_SLOPE


def fatigue_increment(alpha_max, R, n, kappa, alpha_n, gate_open):
    """Per-cycle history increment for peak energy ``alpha_max``.

    ``gate_open`` is the (latched) threshold state; the increment is zero
    where it is False.
    """
    amp = ((1.0 - R) / 2.0) ** (2.0 * kappa * n)
    inc = (np.asarray(alpha_max, dtype=float) / alpha_n) ** n * amp
    return np.where(gate_open, inc, 0.0)
