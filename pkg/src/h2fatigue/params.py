"""Material, fatigue and hydrogen parameter records.

Defaults reproduce the pressure vessel steel used for the reference
virtual experiments: E = 210 GPa, nu = 0.3, Gc = 100 kJ/m^2 and a critical
strength of four times the 715 MPa yield stress.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

from . import laws
from .laws import DomainError


@dataclass(frozen=True)
class UnitsConvention:
    """Unit system used everywhere in the package.

    With stress in MPa, V_H in mm^3/mol and Rg in N*mm/(mol*K) the drift group
    ``V_H * sigma_h / (Rg * T)`` is dimensionless.  Concentration enters the
    flux linearly so wppm never needs converting to mol/mm^3.
    """

    length: str = "mm"
    force: str = "N"
    stress: str = "MPa"
    time: str = "s"
    concentration: str = "wppm"
    toughness: str = "N/mm"


UNITS = UnitsConvention()
GAS_CONSTANT = 8314.0  # N*mm/(mol*K)


@dataclass(frozen=True)
class MaterialParams:
    E: float = 210000.0
    nu: float = 0.3
    Gc0: float = 100.0
    ell: Optional[float] = None
    sigma_c: Optional[float] = None
    eps_c: Optional[float] = None

    def __post_init__(self):
        if not self.E > 0:
            raise DomainError("E must be positive")
        # nu = 0 is admitted so that a plane-strain strip reduces to 1-D.
        if not 0.0 <= self.nu < 0.5:
            raise DomainError("nu must lie in [0, 0.5)")
        if not self.Gc0 > 0:
            raise DomainError("Gc0 must be positive")
        ell, sc = self.ell, self.sigma_c
        if ell is None and sc is None:
            sc = 4.0 * 715.0
        if ell is None:
            ell = laws.derive_length_scale(self.E, self.Gc0, sc)
        sc_from_ell = laws.derive_strength(self.E, self.Gc0, ell)
        if sc is not None and abs(sc - sc_from_ell) > 1e-10 * sc_from_ell:
            raise DomainError("sigma_c and ell are inconsistent; give only one of them")
        eps_c = laws.critical_strain(self.E, self.Gc0, ell)
        if self.eps_c is not None and abs(self.eps_c - eps_c) > 1e-10 * eps_c:
            raise DomainError("eps_c is inconsistent with E, Gc0 and ell")
        object.__setattr__(self, "ell", float(ell))
        object.__setattr__(self, "sigma_c", float(sc_from_ell))
        object.__setattr__(self, "eps_c", eps_c)

    @classmethod
    def from_strength(cls, E, nu, Gc0, sigma_c):
        return cls(E=E, nu=nu, Gc0=Gc0, sigma_c=sigma_c)

    @classmethod
    def from_length_scale(cls, E, nu, Gc0, ell):
        return cls(E=E, nu=nu, Gc0=Gc0, ell=ell)

    @property
    def alpha_n(self) -> float:
        return laws.normalisation_alpha_n(self.sigma_c, self.eps_c)

    @property
    def lame(self) -> tuple[float, float]:
        lam = self.E * self.nu / ((1 + self.nu) * (1 - 2 * self.nu))
        mu = self.E / (2 * (1 + self.nu))
        return lam, mu


@dataclass(frozen=True)
class FatigueParams:
    """Cyclic damage accumulation constants.

    ``alpha_n`` left as None is resolved from the material by
    :meth:`resolved`.  ``n_hydrogen_override`` replaces ``n`` wholesale in
    gaseous hydrogen (p_H2 > 0) when set.
    """

    n: float = 1.25
    kappa: float = 0.78
    alpha_bar_0: float = 8.0
    alpha_e: float = 0.05
    alpha_n: Optional[float] = None
    n_hydrogen_override: Optional[float] = None

    def __post_init__(self):
        if not self.n > 0:
            raise DomainError("n must be positive")
        if not self.kappa >= 0:
            raise DomainError("kappa must be non-negative")
        if not self.alpha_bar_0 > 0:
            raise DomainError("alpha_bar_0 must be positive")
        if not self.alpha_e >= 0:
            raise DomainError("alpha_e must be non-negative")
        if self.alpha_n is not None and not self.alpha_n > 0:
            raise DomainError("alpha_n must be positive")
        if self.n_hydrogen_override is not None and not self.n_hydrogen_override > 0:
            raise DomainError("n_hydrogen_override must be positive")

    def resolved(self, material: MaterialParams) -> "FatigueParams":
        if self.alpha_n is not None:
            return self
        return FatigueParams(self.n, self.kappa, self.alpha_bar_0, self.alpha_e,
                             material.alpha_n, self.n_hydrogen_override)

    def exponent(self, p_H2: float) -> float:
        if self.n_hydrogen_override is not None and p_H2 > 0.0:
            return self.n_hydrogen_override
        return self.n


@dataclass(frozen=True)
class HydrogenParams:
    D: float = 2.0e-4
    V_H: float = 2000.0
    T: float = 300.0
    S: float = 0.077
    xi: float = 0.12
    eta: float = 7.0
    b: float = 2.0
    Rg: float = GAS_CONSTANT

    def __post_init__(self):
        for name in ("D", "V_H", "T", "b"):
            if not getattr(self, name) > 0:
                raise DomainError(f"{name} must be positive")
        if not 0.0 <= self.xi <= 1.0:
            raise DomainError("xi must lie in [0, 1]")
        if not self.eta >= 0:
            raise DomainError("eta must be non-negative")
        if self.Rg != GAS_CONSTANT:
            raise DomainError("Rg is fixed by the unit system")

    @property
    def drift_coefficient(self) -> float:
        """``V_H / (Rg T)`` in 1/MPa."""
        return self.V_H / (self.Rg * self.T)

    def fH(self, C):
        return laws.hydrogen_degradation_fH(C, self.xi, self.eta, self.b)

    def C_env(self, p_H2: float) -> float:
        return laws.sieverts_concentration(p_H2, self.S)


def endurance_energy(sigma_e: float, E: float) -> float:
    """Elastic energy density ``sigma_e**2 / 2E`` at an endurance stress."""
    return sigma_e**2 / (2.0 * E)


def enrichment_factor(sigma_h: float, hydrogen: HydrogenParams) -> float:
    """Zero-flux lattice enrichment ``exp(V_H sigma_h / (Rg T))``."""
    return math.exp(hydrogen.drift_coefficient * sigma_h)
