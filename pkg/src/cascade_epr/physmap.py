"""Map cavity-optomechanics parameters onto the generic oscillator model.

A driven single-sided cavity coupled to a mechanical mode, with the cavity
adiabatically eliminated, produces the two-sideband coupling of the generic
model.  The cavity Lorentzian L(Omega) = (kappa/2)/(kappa/2 + i(Delta - Omega))
weights the Stokes and anti-Stokes rates, shifts the mechanical resonance
(optical spring, solved self-consistently), and attaches phases to the
sideband amplitudes; a quadrature rotation between the two subsystem drives
then renders the cascade coupling rate real.

Spin-side coupling constants are direct inputs to the generic model and are
not derived here.
"""

from __future__ import annotations

import cmath
import math
import warnings
from dataclasses import dataclass

__all__ = [
    "CavityParams",
    "SidebandMapping",
    "cavity_lorentzian",
    "spring_shift_fixed_point",
    "sideband_rates_from_cavity",
    "cascade_phase_choice",
    "FixedPointError",
]

_FP_TOL = 1e-12
_FP_MAXITER = 1000
_ADIABATIC_WARN = 10.0   # warn when gamma_M >= kappa/10
_Q_WARN = 100.0          # warn when Omega_M/gamma_M < 100


class FixedPointError(RuntimeError):
    """Spring-shift fixed point failed to converge."""


@dataclass(frozen=True)
class CavityParams:
    """Linearized optomechanical cavity knobs (angular units).

    kappa: cavity decay rate (FWHM), Delta: drive detuning omega_c - omega_L,
    g_om: drive-enhanced coupling, Omega_M_bare: bare mechanical resonance.
    """

    kappa: float
    Delta: float
    g_om: float
    Omega_M_bare: float

    def __post_init__(self):
        if self.kappa <= 0:
            raise ValueError(f"kappa must be > 0, got {self.kappa}")
        if self.Omega_M_bare <= 0:
            raise ValueError(f"Omega_M_bare must be > 0, got {self.Omega_M_bare}")


@dataclass(frozen=True)
class SidebandMapping:
    """Derived generic-model quantities for the optomechanical subsystem."""

    Omega_M: float       # dynamically shifted resonance
    Gamma_MB: float
    Gamma_MP: float
    theta_M: float
    theta_plus: float    # upper-sideband phase
    theta_minus: float   # lower-sideband phase
    optical_broadening: float   # gamma_M - gamma_M0 contribution


def cavity_lorentzian(c: CavityParams, omega: float) -> complex:
    """L(Omega) = (kappa/2)/(kappa/2 + i(Delta - Omega)); Re L = |L|^2."""
    half = c.kappa / 2.0
    return half / complex(half, c.Delta - omega)


def _shift(c: CavityParams, omega: float) -> float:
    L_p = cavity_lorentzian(c, omega)
    L_m = cavity_lorentzian(c, -omega)
    return 2.0 * c.g_om ** 2 * (L_p - L_m.conjugate()).imag / c.kappa


def spring_shift_fixed_point(c: CavityParams) -> float:
    """Self-consistent shifted resonance Omega_M = Omega_bare + shift(Omega_M).

    Plain fixed-point iteration from the bare resonance; if the update
    magnitude grows on two consecutive iterations the step is halved (damped
    iteration), which converges through the weakly contracting regime.
    """
    x = c.Omega_M_bare
    if c.g_om == 0.0:
        return x
    damping = 1.0
    prev_step = math.inf
    grew = 0
    for _ in range(_FP_MAXITER):
        target = c.Omega_M_bare + _shift(c, x)
        step = target - x
        if abs(step) <= _FP_TOL * abs(x):
            return x + step
        if abs(step) > abs(prev_step):
            grew += 1
            if grew >= 2:
                damping *= 0.5
                grew = 0
        else:
            grew = 0
        prev_step = step
        x = x + damping * step
    raise FixedPointError(
        f"spring-shift fixed point did not converge in {_FP_MAXITER} iterations; "
        f"last iterates {x:.12g}, {x + damping * step:.12g}"
    )


def sideband_rates_from_cavity(c: CavityParams, Omega_M: float) -> SidebandMapping:
    """Sideband rates, angles and phases at the shifted resonance.

    Gamma_MB/P = 4 g_om^2 |L(+/-Omega_M)|^2 / kappa, sideband phases
    theta_+/- = -arctan(2(Delta -/+ Omega_M)/kappa), and
    theta_M = arctan(sqrt(Gamma_MB/Gamma_MP)) (pi/2 limit at Gamma_MP = 0).
    """
    L_p = cavity_lorentzian(c, Omega_M)
    L_m = cavity_lorentzian(c, -Omega_M)
    pref = 4.0 * c.g_om ** 2 / c.kappa
    G_MB = pref * abs(L_p) ** 2
    G_MP = pref * abs(L_m) ** 2
    theta_plus = -math.atan(2.0 * (c.Delta - Omega_M) / c.kappa)
    theta_minus = -math.atan(2.0 * (c.Delta + Omega_M) / c.kappa)
    if G_MP == 0.0:
        theta_m = math.pi / 2.0
    else:
        theta_m = math.atan(math.sqrt(G_MB / G_MP))
    broadening = pref * (L_p - L_m.conjugate()).real
    if broadening >= c.kappa / _ADIABATIC_WARN:
        warnings.warn(
            f"adiabatic elimination marginal: optical broadening {broadening:.4g} "
            f">= kappa/10 = {c.kappa / 10:.4g}",
            stacklevel=2,
        )
    if Omega_M < _Q_WARN * abs(broadening):
        warnings.warn(
            f"low effective mechanical Q = {Omega_M / abs(broadening) if broadening else math.inf:.3g}",
            stacklevel=2,
        )
    return SidebandMapping(
        Omega_M=Omega_M,
        Gamma_MB=G_MB,
        Gamma_MP=G_MP,
        theta_M=theta_m,
        theta_plus=theta_plus,
        theta_minus=theta_minus,
        optical_broadening=broadening,
    )


def cascade_phase_choice(theta_plus: float, theta_minus: float) -> float:
    """Drive-phase rotation phi = -(theta_+ + theta_-)/2 that makes R real.

    With this choice the complex cascade amplitude becomes
    exp(i(theta_+ - theta_-)/2) times a real rate, and the residual phase is
    absorbed into the mechanical mode definition.
    """
    return -(theta_plus + theta_minus) / 2.0


def assembled_cascade_amplitude(
    g_sb: float, g_sp: float, mapping: SidebandMapping, phi: float
) -> complex:
    """Complex cascade amplitude R0 for given spin couplings and drive phase.

    R0 = sqrt(G_SB G_MP) e^{-i(theta_- + phi)} - sqrt(G_MB G_SP) e^{i(theta_+ + phi)};
    with the optimal phi, R0 e^{-i(theta_+ - theta_-)/2} is real.
    """
    term1 = math.sqrt(g_sb ** 2 * mapping.Gamma_MP) * cmath.exp(-1j * (mapping.theta_minus + phi))
    term2 = math.sqrt(mapping.Gamma_MB * g_sp ** 2) * cmath.exp(1j * (mapping.theta_plus + phi))
    return term1 - term2
