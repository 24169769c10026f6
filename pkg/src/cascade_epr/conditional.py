"""Conditional (measurement-based) steady states via the Riccati flow.

Continuously homodyning the light leaving the cascade conditions the Gaussian
state on the photocurrent record.  Only second moments matter: the conditional
covariance obeys the deterministic matrix Riccati equation

    dSigma/dt = A Sigma + Sigma A^T + D - (Sigma C^T + G^T)(C Sigma + G),

where A and D are the unconditional drift/diffusion and the measurement
matrices C, G encode the two monitored quadrature channels of the collective
jump operators

    s_+ = sqrt((1-eps) Gamma_SP) a_S^dag + sqrt(Gamma_MB) a_M,
    s_- = sqrt((1-eps) Gamma_SB) a_S   + sqrt(Gamma_MP) a_M^dag,

read out in their cosine and sine combinations at homodyne phase psi (psi = 0
is optimal and the default).  Transmission-loss channels enter A and D but are
never monitored.

At theta_S = theta_M = pi/4 the flow closes on three scalar moments
(Var X_S, Var X_M and the two-sided correlator <X_S, X_M>); that explicit flow
is implemented separately in ``riccati_rhs_qnd`` and doubles as the
correctness gate for the general-angle measurement matrices.

The coefficients of this flow are anchored twice over: switching the
measurement terms off must reproduce the unconditional steady state exactly,
and the hot-bath closed form of ``conditional_analytic_qnd`` must satisfy the
mechanics moment equation identically.  Both anchors are enforced by tests.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .model import (
    SYMPLECTIC_FORM,
    HybridParams,
    UnstableDynamicsError,
    decoherence_and_cooperativity,
    diffusion_matrix,
    drift_matrix,
    effective_linewidth,
    sideband_split,
)
from .unconditional import (
    CovarianceState,
    covariance_analytic,
    epr_variance_at_fixed_g,
    lyapunov_solve,
    rwa_sigma,
)

__all__ = [
    "RiccatiProblem",
    "measurement_matrices",
    "riccati_rhs_qnd",
    "riccati_rhs_general",
    "riccati_steady_state",
    "conditional_analytic_qnd",
    "RiccatiConvergenceError",
]

_QND_ANGLE_TOL = 1e-12
_HOT_BATH_MIN_NBAR = 1e3
_MAX_STEPS = 10_000_000


class RiccatiConvergenceError(RuntimeError):
    """Raised when the steady-state iteration fails to reach tolerance."""


@dataclass(frozen=True)
class RiccatiProblem:
    """Bundle of drift, diffusion and measurement data for one configuration."""

    A: np.ndarray
    D: np.ndarray
    config: HybridParams
    detection_phase: float = 0.0
    # complex coefficient vectors of the monitored channels, L_k = c_k . x
    c_vectors: tuple = field(default=None)

    @classmethod
    def from_params(cls, h: HybridParams, detection_phase: float = 0.0) -> "RiccatiProblem":
        return cls(
            A=drift_matrix(h),
            D=diffusion_matrix(h),
            config=h,
            detection_phase=detection_phase,
            c_vectors=_channel_vectors(h, detection_phase),
        )


def _channel_vectors(h: HybridParams, psi: float = 0.0) -> tuple:
    """Complex c-vectors of the cosine/sine homodyne channels in the x basis.

    With a_j = (X_j + i P_j)/sqrt(2), the monitored operators
    L_c = e^{i psi}(s_+ + s_-)/sqrt(2) and L_s = -i e^{i psi}(s_+ - s_-)/sqrt(2)
    are linear forms c^T x.
    """
    G_SB, G_SP = sideband_split(h.spin.Gamma, h.spin.theta)
    G_MB, G_MP = sideband_split(h.mech.Gamma, h.mech.theta)
    one_m_eps = 1.0 - h.epsilon
    sB = math.sqrt(one_m_eps * G_SB)
    sP = math.sqrt(one_m_eps * G_SP)
    mB = math.sqrt(G_MB)
    mP = math.sqrt(G_MP)
    c_cos = 0.5 * np.array(
        [sB + sP, 1j * (sB - sP), mB + mP, 1j * (mB - mP)], dtype=complex
    )
    c_sin = 0.5 * np.array(
        [1j * (sB - sP), -(sB + sP), -1j * (mB - mP), mB + mP], dtype=complex
    )
    phase = complex(math.cos(psi), math.sin(psi))
    return (phase * c_cos, phase * c_sin)


def measurement_matrices(h: HybridParams, psi: float = 0.0) -> tuple[np.ndarray, np.ndarray]:
    """Measurement matrices (C, G) with rows 2 Re(c_k) and Im(c_k)^T J.

    The photocurrents obey dy_k = (C <x>)_k dt + dW_k and the Kalman gain is
    Sigma C^T + G^T, so the Riccati correction is -(Sigma C^T + G^T)(C Sigma + G).
    """
    cs = _channel_vectors(h, psi)
    C = np.vstack([2.0 * c.real for c in cs])
    G = np.vstack([c.imag @ SYMPLECTIC_FORM for c in cs])
    return C, G


def _kalman_gains(sigma: np.ndarray, cs: tuple) -> list[np.ndarray]:
    J = SYMPLECTIC_FORM
    return [2.0 * sigma @ c.real - J @ c.imag for c in cs]


def riccati_rhs_general(
    sigma: np.ndarray, h: HybridParams, psi: float = 0.0
) -> np.ndarray:
    """dSigma/dt of the conditional flow for arbitrary coupling angles."""
    A = drift_matrix(h)
    D = diffusion_matrix(h)
    out = A @ sigma + sigma @ A.T + D
    for K in _kalman_gains(sigma, _channel_vectors(h, psi)):
        out -= np.outer(K, K)
    return out


def riccati_rhs_qnd(sigma: np.ndarray, h: HybridParams) -> np.ndarray:
    """Explicit three-moment conditional flow at theta_S = theta_M = pi/4.

    In the mixed variables (x, y) = one-sided variances, w = two-sided
    correlator, with s = sqrt((1-eps) Gamma_S) and m = sqrt(Gamma_M):

        dx/dt = -gamma_S0 x + Gamma_S/2 + gamma~_S0 - (2 s x + m w)^2 / 2
        dy/dt = -gamma_M0 y + Gamma_M/2 + gamma~_M0 - (s w + 2 m y)^2 / 2
        dw/dt = -(gamma_S0 + gamma_M0) w / 2 - s m - (2 s x + m w)(s w + 2 m y)

    mapped back into the 4x4 matrix with the rotating-wave symmetries.  Inputs
    off the QND point are rejected.
    """
    if (
        abs(h.spin.theta - math.pi / 4) > _QND_ANGLE_TOL
        or abs(h.mech.theta - math.pi / 4) > _QND_ANGLE_TOL
    ):
        raise ValueError(
            "riccati_rhs_qnd requires theta_S = theta_M = pi/4; got "
            f"theta_S={h.spin.theta}, theta_M={h.mech.theta}"
        )
    gt_s, _ = decoherence_and_cooperativity(h.spin)
    gt_m, _ = decoherence_and_cooperativity(h.mech)
    s = math.sqrt((1.0 - h.epsilon) * h.spin.Gamma)
    m = math.sqrt(h.mech.Gamma)
    x = float(sigma[0, 0])
    y = float(sigma[2, 2])
    w = 2.0 * float(sigma[0, 2])
    b1 = 2.0 * s * x + m * w
    b2 = s * w + 2.0 * m * y
    dx = -h.spin.gamma0 * x + h.spin.Gamma / 2.0 + gt_s - 0.5 * b1 * b1
    dy = -h.mech.gamma0 * y + h.mech.Gamma / 2.0 + gt_m - 0.5 * b2 * b2
    dw = -(h.spin.gamma0 + h.mech.gamma0) / 2.0 * w - s * m - b1 * b2
    return rwa_sigma(dx, dy, dw / 2.0)


def _rk4_burn(
    sigma: np.ndarray, A: np.ndarray, D: np.ndarray, cs: tuple, base_rate: float, n_steps: int
) -> tuple[np.ndarray, int]:
    """Fixed-step RK4 with a stiffness guard on the measurement nonlinearity.

    The nominal step is 0.05/max(gamma_S, gamma_M, Gamma_S, Gamma_M); far from
    the fixed point the quadratic term's local rate ~ |K| |C| can exceed every
    linear rate (hot initial states), so the step shrinks accordingly.
    """

    def rhs(S):
        out = A @ S + S @ A.T + D
        for K in _kalman_gains(S, cs):
            out -= np.outer(K, K)
        return out

    c_norms = [np.linalg.norm(2.0 * c.real) for c in cs]
    S = sigma
    done = 0
    for _ in range(n_steps):
        guard = base_rate
        for c, cn in zip(cs, c_norms):
            K = 2.0 * S @ c.real - SYMPLECTIC_FORM @ c.imag
            guard = max(guard, 2.0 * cn * np.linalg.norm(K))
        dt = 0.05 / guard
        k1 = rhs(S)
        k2 = rhs(S + 0.5 * dt * k1)
        k3 = rhs(S + 0.5 * dt * k2)
        k4 = rhs(S + dt * k3)
        S = S + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        S = 0.5 * (S + S.T)
        done += 1
    return S, done


def _residual_floor(S: np.ndarray, A: np.ndarray, D: np.ndarray, cs: tuple) -> float:
    """Double-precision floor of the Riccati residual norm at state S.

    The Kalman gain is a large cancellation (Sigma-weighted sums of opposite
    sign), so the achievable residual scales with the *uncancelled* magnitudes
    of every product feeding the residual, times machine epsilon.
    """
    eps = np.finfo(float).eps
    mag = 2.0 * float(np.linalg.norm(np.abs(A) @ np.abs(S))) + float(np.linalg.norm(D))
    for c in cs:
        K = 2.0 * S @ c.real - SYMPLECTIC_FORM @ c.imag
        Kmag = 2.0 * np.abs(S) @ np.abs(c.real) + np.abs(SYMPLECTIC_FORM) @ np.abs(c.imag)
        mag += 2.0 * float(np.linalg.norm(Kmag)) * float(np.linalg.norm(K))
    return 64.0 * eps * mag


def _newton_refine(
    sigma: np.ndarray, A: np.ndarray, D: np.ndarray, cs: tuple, tol_abs: float, itmax: int = 60
) -> tuple[np.ndarray, float]:
    """Newton-Kleinman iterations on the algebraic Riccati equation.

    Each step solves the Lyapunov linearization around the current iterate;
    convergence is quadratic once the closed-loop drift is Hurwitz.  Stops at
    the tolerance or on residual stagnation (floating-point floor), returning
    the best iterate seen.  Raises RiccatiConvergenceError if the closed loop
    is unstable (caller then keeps integrating before retrying).
    """
    S = sigma.copy()
    best_S, best_res = None, math.inf
    for _ in range(itmax):
        F = A @ S + S @ A.T + D
        gains = _kalman_gains(S, cs)
        for K in gains:
            F -= np.outer(K, K)
        res = float(np.linalg.norm(F))
        if res < best_res:
            best_S, best_res = S.copy(), res
        if res <= tol_abs:
            return S, res
        if res > 0.5 * best_res and best_res < math.inf and res != best_res:
            break  # stagnation: no further digits available
        A_cl = A.copy()
        for K, c in zip(gains, cs):
            A_cl -= 2.0 * np.outer(K, c.real)
        if np.max(np.linalg.eigvals(A_cl).real) >= 0:
            raise RiccatiConvergenceError("Newton closed loop not Hurwitz")
        S = S + lyapunov_solve(A_cl, F)
        S = 0.5 * (S + S.T)
    return best_S, best_res


def riccati_steady_state(
    h: HybridParams,
    which: str = "general",
    psi: float = 0.0,
    sigma0: np.ndarray | None = None,
) -> CovarianceState:
    """Steady state of the conditional Riccati flow.

    Starts from the unconditional steady state (or ``sigma0``), relaxes the
    fast measurement transient with guarded fixed-step RK4, then polishes with
    Newton iterations until ||dSigma/dt|| <= 1e-12 ||D||.  Pure fixed-step
    integration alone cannot reach that residual inside the step budget when
    Gamma/gamma_0 is large, because the unmonitored thermal mode relaxes at
    gamma_0 while the step is set by Gamma; the Newton tail lands on the same
    fixed point (it is unique and initial-condition independent, which the
    tests verify directly).

    ``which`` selects the flow used for the final residual check: "general"
    (any angles) or "qnd" (requires theta_S = theta_M = pi/4; the flows are
    identical there).
    """
    if which not in ("qnd", "general"):
        raise ValueError(f"which must be 'qnd' or 'general', got {which!r}")
    g_s = effective_linewidth(h.spin)
    g_m = effective_linewidth(h.mech)
    if not (g_s > 0 and g_m > 0):
        raise UnstableDynamicsError(
            f"conditional steady state needs a stable unconditional problem: "
            f"gamma_S={g_s:.6g}, gamma_M={g_m:.6g}"
        )
    if which == "qnd":
        # triggers the angle validation
        riccati_rhs_qnd(np.eye(4) * 0.5, h)

    uncond = covariance_analytic(h)
    S = np.array(uncond.sigma if sigma0 is None else sigma0, dtype=float)
    A = drift_matrix(h)
    D = diffusion_matrix(h)
    cs = _channel_vectors(h, psi)
    base_rate = max(g_s, g_m, h.spin.Gamma, h.mech.Gamma)
    tol_nominal = 1e-12 * float(np.linalg.norm(D))

    steps = 0
    burn = 0
    last_err = None
    while steps <= _MAX_STEPS:
        if burn:
            S, n = _rk4_burn(S, A, D, cs, base_rate, burn)
            steps += n
        try:
            S_new, res = _newton_refine(S, A, D, cs, tol_nominal)
        except RiccatiConvergenceError as err:
            last_err = err
            burn = max(4 * burn, 500)
            continue
        # accept at the nominal tolerance, or at the double-precision floor of the
        # residual when the rate-scale separation puts that floor above it
        if res <= max(tol_nominal, _residual_floor(S_new, A, D, cs)):
            S = S_new
            break
        S = S_new
        last_err = RiccatiConvergenceError(
            f"residual {res:.3e} above tolerance {tol_nominal:.3e}"
        )
        burn = max(4 * burn, 500)
    else:
        raise RiccatiConvergenceError(
            f"no convergence within {_MAX_STEPS} steps; last error: {last_err}"
        )

    if psi == 0.0:
        # the psi = 0 flow preserves the rotating-wave family exactly and its
        # fixed point is unique, so residual X/P asymmetry is pure roundoff
        S = rwa_sigma(
            0.5 * (S[0, 0] + S[1, 1]),
            0.5 * (S[2, 2] + S[3, 3]),
            0.5 * (S[0, 2] - S[1, 3]),
        )
    _validate_conditional(S, uncond.sigma)
    return CovarianceState(sigma=S, xi_g=epr_variance_at_fixed_g(S, h))


def _validate_conditional(cond: np.ndarray, uncond: np.ndarray) -> None:
    """Conditioning can only remove noise: uncond - cond must be PSD (tolerance)."""
    diff = uncond - cond
    scale = max(np.max(np.abs(uncond)), 1.0)
    min_eig = float(np.linalg.eigvalsh(0.5 * (diff + diff.T))[0])
    if min_eig < -1e-10 * scale:
        raise RiccatiConvergenceError(
            f"conditional covariance exceeds unconditional: min eig {min_eig:.3e}"
        )


def conditional_analytic_qnd(h: HybridParams) -> CovarianceState:
    """Hot-bath closed form of the conditional QND steady state.

    Valid for theta_S = theta_M = pi/4 and n_bar_M >> 1 (guarded at 1e3); in
    terms of the cooperativities C_S, C_M, the decoherence ratio
    r = gamma~_M0/gamma~_S0 and u = 2 n_bar_S + 1:

        Var X_M  = (n_S + 1/2) [ sqrt((C_M+2)(sqrt(C_M(C_M+2)) r + 1/u)^2/C_M
                   + (1-eps) C_S (C_S - 2 C_M r + 2)) - (C_M r + 2 r - (1-eps) C_S) ]
        <X_S,X_M> = sqrt(C_M r) (sqrt((C_M+2)/C_M) - 2 Var X_M) / sqrt(C_S(1-eps))
        Var X_S  = -sqrt(C_M/(C_M+2))/2
                   - [sqrt(C_M r) + 1/(u sqrt((C_M+2) r))] <X_S,X_M> / (2 sqrt(C_S(1-eps)))

    This is the leading large-C_S solution: it satisfies the mechanics moment
    equation exactly but the spin equation only to O(1/C_S), so integrator
    comparisons tighten as C_S grows.
    """
    if (
        abs(h.spin.theta - math.pi / 4) > _QND_ANGLE_TOL
        or abs(h.mech.theta - math.pi / 4) > _QND_ANGLE_TOL
    ):
        raise ValueError("conditional_analytic_qnd requires theta_S = theta_M = pi/4")
    if h.mech.n_bar < _HOT_BATH_MIN_NBAR:
        raise ValueError(
            f"hot-bath approximation needs n_bar_M >= {_HOT_BATH_MIN_NBAR:g}, "
            f"got {h.mech.n_bar:g}"
        )
    gt_s, C_S = decoherence_and_cooperativity(h.spin)
    gt_m, C_M = decoherence_and_cooperativity(h.mech)
    if C_S <= 0:
        raise ValueError("conditional_analytic_qnd requires C_S > 0")
    r = gt_m / gt_s
    eps = h.epsilon
    n_s = h.spin.n_bar
    u = 2.0 * n_s + 1.0

    if C_M == 0.0:
        # unmonitored mechanics: thermal variance, no cross correlation, and the
        # spin settles to its single-mode heterodyne fixed point.
        y = h.mech.n_bar + 0.5
        w = 0.0
        s2 = (1.0 - eps) * h.spin.Gamma
        # 0 = -gamma_S0 x + Gamma_S/2 + gt_s - 2 s^2 x^2
        a, b, c = 2.0 * s2, h.spin.gamma0, -(h.spin.Gamma / 2.0 + gt_s)
        x = (-b + math.sqrt(b * b - 4.0 * a * c)) / (2.0 * a) if a > 0 else -c / b
    else:
        y = (n_s + 0.5) * (
            math.sqrt(
                (C_M + 2.0)
                * (math.sqrt(C_M * (C_M + 2.0)) * r + 1.0 / u) ** 2
                / C_M
                + (1.0 - eps) * C_S * (C_S - 2.0 * C_M * r + 2.0)
            )
            - (C_M * r + 2.0 * r - (1.0 - eps) * C_S)
        )
        w = (
            math.sqrt(C_M * r)
            * (math.sqrt((C_M + 2.0) / C_M) - 2.0 * y)
            / math.sqrt(C_S * (1.0 - eps))
        )
        x = -math.sqrt(C_M / (C_M + 2.0)) / 2.0 - (
            (math.sqrt(C_M * r) + 1.0 / (u * math.sqrt((C_M + 2.0) * r)))
            / (2.0 * math.sqrt(C_S * (1.0 - eps)))
        ) * w

    sigma = rwa_sigma(x, y, w / 2.0)
    return CovarianceState(sigma=sigma, xi_g=epr_variance_at_fixed_g(sigma, h))
