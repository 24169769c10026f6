"""Parameter model and Langevin drift/diffusion for the cascaded hybrid system.

Two harmonic oscillators -- a negative-effective-mass collective spin (S) and a
positive-mass motional mode (M) -- are coupled in sequence to one unidirectional
light field.  Working in the rotating frame and the rotating wave approximation,
the quadrature vector x = (X_S, P_S, X_M, P_M) obeys a linear Langevin equation
dx = A x dt + noise, and all Gaussian steady-state questions reduce to the drift
matrix A and the symmetrized diffusion matrix D built here.

Conventions
-----------
* Covariances are symmetrized with the factor-1/2 convention,
  Sigma_ij = <{dx_i, dx_j}>/2, so the vacuum state is Sigma = I/2.
* All rates are angular frequencies in one consistent unit (rad/s everywhere in
  this package); every reported figure of merit is a ratio, so the unit cancels.
* Dynamical instability (gamma_j <= 0) is a reported state here, not an error;
  the steady-state solvers reject unstable inputs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "OscillatorParams",
    "HybridParams",
    "DerivedRates",
    "UnstableDynamicsError",
    "SYMPLECTIC_FORM",
    "sideband_split",
    "effective_linewidth",
    "decoherence_and_cooperativity",
    "unidirectional_rate",
    "epr_weight",
    "derived_rates",
    "drift_matrix",
    "diffusion_matrix",
    "stability",
    "hybrid_from_cooperativities",
]

# Symplectic form J for (X_S, P_S, X_M, P_M): [x_i, x_j] = i J_ij.
SYMPLECTIC_FORM = np.array(
    [
        [0.0, 1.0, 0.0, 0.0],
        [-1.0, 0.0, 0.0, 0.0],
        [0.0, 0.0, 0.0, 1.0],
        [0.0, 0.0, -1.0, 0.0],
    ]
)


class UnstableDynamicsError(ValueError):
    """Raised by solvers when the drift is not strictly stable."""


@dataclass(frozen=True)
class OscillatorParams:
    """Physical knobs of one oscillator.

    Parameters
    ----------
    gamma0 : float
        Intrinsic linewidth (rad/s) in absence of dynamical broadening, > 0.
    n_bar : float
        Thermal occupancy of the private bath, >= 0.
    Gamma : float
        Total sideband coupling rate Gamma_B + Gamma_P (rad/s), >= 0.
    theta : float
        Coupling angle in [0, pi/2]; theta = pi/4 is the balanced QND point,
        theta = pi/2 a pure beam splitter.
    """

    gamma0: float
    n_bar: float
    Gamma: float
    theta: float

    def __post_init__(self):
        if not self.gamma0 > 0:
            raise ValueError(f"gamma0 must be > 0, got {self.gamma0}")
        if self.n_bar < 0:
            raise ValueError(f"n_bar must be >= 0, got {self.n_bar}")
        if self.Gamma < 0:
            raise ValueError(f"Gamma must be >= 0, got {self.Gamma}")
        if not 0 <= self.theta <= math.pi / 2:
            raise ValueError(f"theta must lie in [0, pi/2], got {self.theta}")


@dataclass(frozen=True)
class HybridParams:
    """Full cascaded configuration: light meets the spin first, then the mechanics."""

    spin: OscillatorParams
    mech: OscillatorParams
    epsilon: float = 0.0

    def __post_init__(self):
        if not 0 <= self.epsilon <= 1:
            raise ValueError(f"epsilon must lie in [0, 1], got {self.epsilon}")


@dataclass(frozen=True)
class DerivedRates:
    """Rates derived from one HybridParams, all in the same angular unit."""

    Gamma_SB: float
    Gamma_SP: float
    Gamma_MB: float
    Gamma_MP: float
    gamma_S: float
    gamma_M: float
    gamma_tilde_S0: float
    gamma_tilde_M0: float
    C_S: float
    C_M: float
    R: float
    g: float


def sideband_split(Gamma: float, theta: float) -> tuple[float, float]:
    """Split a total coupling rate into (Gamma_B, Gamma_P) sideband rates.

    Gamma_B = Gamma sin^2(theta) drives the beam-splitter process and
    Gamma_P = Gamma cos^2(theta) the parametric one; they sum to Gamma exactly.
    """
    if Gamma < 0:
        raise ValueError(f"Gamma must be >= 0, got {Gamma}")
    if not 0 <= theta <= math.pi / 2:
        raise ValueError(f"theta must lie in [0, pi/2], got {theta}")
    s = math.sin(theta)
    c = math.cos(theta)
    return Gamma * s * s, Gamma * c * c


def effective_linewidth(p: OscillatorParams) -> float:
    """Effective linewidth gamma = gamma0 - Gamma cos(2 theta).

    The light coupling broadens (theta > pi/4) or anti-broadens (theta < pi/4)
    the oscillator.  A non-positive return value flags dynamical instability;
    no exception is raised here.
    """
    return p.gamma0 - p.Gamma * math.cos(2.0 * p.theta)


def decoherence_and_cooperativity(p: OscillatorParams) -> tuple[float, float]:
    """Thermal decoherence rate gamma0*(n_bar + 1/2) and quantum cooperativity."""
    gamma_tilde0 = p.gamma0 * (p.n_bar + 0.5)
    return gamma_tilde0, p.Gamma / gamma_tilde0


def unidirectional_rate(h: HybridParams) -> float:
    """Cascade interference rate R = sqrt(G_SB G_MP) - sqrt(G_MB G_SP).

    Equals -sqrt(Gamma_M Gamma_S) sin(theta_M - theta_S), so equal angles give
    R = 0 (purely dissipative coupling) and theta_M > theta_S gives R < 0,
    the sign exploited for enhanced noise cancellation.
    """
    G_SB, G_SP = sideband_split(h.spin.Gamma, h.spin.theta)
    G_MB, G_MP = sideband_split(h.mech.Gamma, h.mech.theta)
    return math.sqrt(G_SB * G_MP) - math.sqrt(G_MB * G_SP)


def epr_weight(h: HybridParams) -> float:
    """Readout weight g of the EPR variables mapped into the output light.

    g = sqrt(Gamma_M / ((1-eps) Gamma_S)) * cos(theta_M - pi/4)/cos(theta_S - pi/4).
    This is the weight the joint homodyne record measures non-destructively, so
    the headline entanglement metric is always evaluated at this g.
    """
    if h.spin.Gamma <= 0:
        raise ZeroDivisionError("epr_weight undefined for Gamma_S = 0")
    if h.epsilon >= 1:
        raise ZeroDivisionError("epr_weight undefined for epsilon = 1")
    num = math.cos(h.mech.theta - math.pi / 4)
    den = math.cos(h.spin.theta - math.pi / 4)
    return math.sqrt(h.mech.Gamma / ((1.0 - h.epsilon) * h.spin.Gamma)) * num / den


def stability(h: HybridParams) -> tuple[float, float, bool]:
    """Return (gamma_S, gamma_M, stable) with stable = both linewidths > 0."""
    g_s = effective_linewidth(h.spin)
    g_m = effective_linewidth(h.mech)
    return g_s, g_m, (g_s > 0 and g_m > 0)


def derived_rates(h: HybridParams) -> DerivedRates:
    """Evaluate every derived rate of the configuration in one pass."""
    G_SB, G_SP = sideband_split(h.spin.Gamma, h.spin.theta)
    G_MB, G_MP = sideband_split(h.mech.Gamma, h.mech.theta)
    gt_s, C_S = decoherence_and_cooperativity(h.spin)
    gt_m, C_M = decoherence_and_cooperativity(h.mech)
    g = epr_weight(h) if (h.spin.Gamma > 0 and h.epsilon < 1) else float("nan")
    return DerivedRates(
        Gamma_SB=G_SB,
        Gamma_SP=G_SP,
        Gamma_MB=G_MB,
        Gamma_MP=G_MP,
        gamma_S=effective_linewidth(h.spin),
        gamma_M=effective_linewidth(h.mech),
        gamma_tilde_S0=gt_s,
        gamma_tilde_M0=gt_m,
        C_S=C_S,
        C_M=C_M,
        R=unidirectional_rate(h),
        g=g,
    )


def drift_matrix(h: HybridParams) -> np.ndarray:
    """Langevin drift A in the basis (X_S, P_S, X_M, P_M).

    Lower block-triangular: the spin never sees the mechanics.  The cascade
    enters as A[X_M, X_S] = +sqrt(1-eps) R and A[P_M, P_S] = -sqrt(1-eps) R.
    """
    g_s = effective_linewidth(h.spin)
    g_m = effective_linewidth(h.mech)
    R = unidirectional_rate(h)
    se = math.sqrt(1.0 - h.epsilon)
    A = np.diag([-g_s / 2, -g_s / 2, -g_m / 2, -g_m / 2])
    A[2, 0] = se * R
    A[3, 1] = -se * R
    return A


def diffusion_matrix(h: HybridParams) -> np.ndarray:
    """Symmetrized diffusion matrix D of the quadrature Langevin equation.

    Derived from the force correlators (thermal baths plus light back action)
    under the Sigma = <{.,.}>/2 convention:

        D[X_S,X_S] = D[P_S,P_S] = gamma~_S0 + Gamma_S/2
        D[X_M,X_M] = D[P_M,P_M] = gamma~_M0 + Gamma_M/2
        D[X_S,X_M] = -sqrt(1-eps) sqrt(Gamma_S Gamma_M) sin(theta_S+theta_M)/2
        D[P_S,P_M] = -D[X_S,X_M]

    The cross entries come from the shared vacuum driving both oscillators and
    vanish with full transmission loss.  Validity is anchored by reproducing the
    closed-form steady state through the Lyapunov equation (see the
    unconditional module tests).
    """
    gt_s, _ = decoherence_and_cooperativity(h.spin)
    gt_m, _ = decoherence_and_cooperativity(h.mech)
    se = math.sqrt(1.0 - h.epsilon)
    d = -se * math.sqrt(h.spin.Gamma * h.mech.Gamma) * math.sin(h.spin.theta + h.mech.theta) / 2.0
    D = np.diag([gt_s + h.spin.Gamma / 2, gt_s + h.spin.Gamma / 2,
                 gt_m + h.mech.Gamma / 2, gt_m + h.mech.Gamma / 2])
    D[0, 2] = D[2, 0] = d
    D[1, 3] = D[3, 1] = -d
    return D


def hybrid_from_cooperativities(
    gamma_s0: float,
    n_bar_s: float,
    c_s: float,
    theta_s: float,
    gamma_m0: float,
    n_bar_m: float,
    c_m: float,
    theta_m: float,
    epsilon: float = 0.0,
) -> HybridParams:
    """Assemble HybridParams with Gamma_j = C_j * gamma~_j0 (the sweep parametrization)."""
    gt_s = gamma_s0 * (n_bar_s + 0.5)
    gt_m = gamma_m0 * (n_bar_m + 0.5)
    return HybridParams(
        spin=OscillatorParams(gamma0=gamma_s0, n_bar=n_bar_s, Gamma=c_s * gt_s, theta=theta_s),
        mech=OscillatorParams(gamma0=gamma_m0, n_bar=n_bar_m, Gamma=c_m * gt_m, theta=theta_m),
        epsilon=epsilon,
    )
