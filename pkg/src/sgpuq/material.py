"""Constitutive relations of the 1D gradient-plasticity model.

Parameter vector, material point state, and the pointwise energetic /
dissipative stress evaluations consumed by the finite element assembly.
Units: stress GPa, length nm, time s, strain dimensionless.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

# Floor inside the effective flow rate, removes the singularity of the
# rate-independent (m = 0) flow rule at zero plastic rate.  Units 1/s.
RATE_FLOOR = 1e-8


@dataclass(frozen=True)
class SgpParams:
    """Gradient-plasticity parameters.

    l_dis / l_en are the dissipative and energetic length scales (nm),
    yield_strength, h_iso, elastic_modulus in GPa, r_iso dimensionless.
    rate_power (m) and rate_coeff (q, 1/s) are fixed to 0 and 1 for the
    quasi-static studies; poisson only enters through the shear modulus.
    """

    l_dis: float
    l_en: float
    yield_strength: float
    h_iso: float
    r_iso: float
    elastic_modulus: float
    rate_power: float = 0.0
    rate_coeff: float = 1.0
    poisson: float = 0.3

    def __post_init__(self):
        for name in ("l_dis", "l_en", "yield_strength", "h_iso",
                     "elastic_modulus", "rate_coeff", "r_iso"):
            if getattr(self, name) <= 0.0:
                raise ValueError(f"{name} must be > 0, got {getattr(self, name)}")
        if not 0.0 <= self.rate_power <= 1.0:
            raise ValueError(f"rate_power must be in [0, 1], got {self.rate_power}")
        if not 0.0 <= self.poisson < 0.5:
            raise ValueError(f"poisson must be in [0, 0.5), got {self.poisson}")

    @property
    def shear_modulus(self) -> float:
        """mu = E / (2 (1 + nu)), GPa."""
        return self.elastic_modulus / (2.0 * (1.0 + self.poisson))


@dataclass(frozen=True)
class MaterialPointState:
    """Kinematic state at a quadrature point with backward-Euler history."""

    eps_total: float
    eps_plastic: float
    eps_plastic_grad: float
    eps_plastic_prev: float = 0.0
    eps_plastic_grad_prev: float = 0.0
    dt: float = 5.0e-5

    def __post_init__(self):
        if self.dt <= 0.0:
            raise ValueError(f"dt must be > 0, got {self.dt}")

    @property
    def plastic_rate(self) -> float:
        return (self.eps_plastic - self.eps_plastic_prev) / self.dt

    @property
    def plastic_grad_rate(self) -> float:
        return (self.eps_plastic_grad - self.eps_plastic_grad_prev) / self.dt


def cauchy_stress(state: MaterialPointState, p: SgpParams) -> float:
    """T = E (eps - eps_p), GPa."""
    return p.elastic_modulus * (state.eps_total - state.eps_plastic)


def energetic_microstress_r(state: MaterialPointState, p: SgpParams) -> float:
    """Isotropic-hardening microstress, odd in eps_p, saturates at h_iso."""
    ep = state.eps_plastic
    return math.copysign(
        p.h_iso * (1.0 - math.exp(-p.r_iso * abs(ep))), ep
    ) if ep != 0.0 else 0.0


def energetic_microstress_s(state: MaterialPointState, p: SgpParams) -> float:
    """Gradient backstress mu * l_en^2 * grad(eps_p), GPa nm."""
    return p.shear_modulus * p.l_en ** 2 * state.eps_plastic_grad


def effective_flow_rate(dep: float, dgrad: float, l_dis: float,
                        floor: float = RATE_FLOOR) -> float:
    """Nonlocal flow rate sqrt(dep^2 + l_dis^2 dgrad^2 + floor^2), 1/s."""
    return math.sqrt(dep * dep + l_dis * l_dis * dgrad * dgrad + floor * floor)


def dissipative_microstresses(
    state: MaterialPointState, p: SgpParams, floor: float = RATE_FLOOR
) -> tuple[float, float]:
    """Rate-driven microstresses (R_dis in GPa, S_dis in GPa nm)."""
    dep = state.plastic_rate
    dgrad = state.plastic_grad_rate
    w = effective_flow_rate(dep, dgrad, p.l_dis, floor)
    scale = p.yield_strength * (w / p.rate_coeff) ** p.rate_power
    return scale * dep / w, scale * p.l_dis ** 2 * dgrad / w
