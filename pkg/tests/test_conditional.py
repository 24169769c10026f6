import math

import numpy as np
import pytest

from cascade_epr.conditional import (
    RiccatiProblem,
    conditional_analytic_qnd,
    measurement_matrices,
    riccati_rhs_general,
    riccati_rhs_qnd,
    riccati_steady_state,
)
from cascade_epr.model import (
    HybridParams,
    OscillatorParams,
    UnstableDynamicsError,
    diffusion_matrix,
    drift_matrix,
    hybrid_from_cooperativities,
)
from cascade_epr.unconditional import covariance_analytic, physicality_min_eig, rwa_sigma
from conftest import (
    FIG_GAMMA_M0,
    FIG_GAMMA_S0,
    FIG_N_M,
    FIG_N_S,
    random_rwa_sigma,
    random_stable_hybrid,
)

QND = math.pi / 4


def qnd_hybrid(c_s, c_m, eps=0.1):
    return hybrid_from_cooperativities(
        FIG_GAMMA_S0, FIG_N_S, c_s, QND, FIG_GAMMA_M0, FIG_N_M, c_m, QND, eps
    )


def random_qnd_hybrid(rng, eps=0.1):
    return qnd_hybrid(10.0 ** rng.uniform(0, 4), 10.0 ** rng.uniform(0, 4), eps)


class TestQndRhs:
    def test_thermal_fixed_point_without_light(self):
        h = hybrid_from_cooperativities(
            FIG_GAMMA_S0, FIG_N_S, 0.0, QND, FIG_GAMMA_M0, FIG_N_M, 0.0, QND, 0.0
        )
        sigma = rwa_sigma(FIG_N_S + 0.5, FIG_N_M + 0.5, 0.0)
        rhs = riccati_rhs_qnd(sigma, h)
        assert np.max(np.abs(rhs)) <= 1e-9 * np.linalg.norm(diffusion_matrix(h))

    def test_wrong_angles_rejected(self):
        h = hybrid_from_cooperativities(
            FIG_GAMMA_S0, FIG_N_S, 1.0, QND + 0.01, FIG_GAMMA_M0, FIG_N_M, 1.0, QND, 0.1
        )
        with pytest.raises(ValueError, match="pi/4"):
            riccati_rhs_qnd(np.eye(4) * 0.5, h)

    def test_analytic_solution_is_near_fixed_point(self):
        # the closed form is the leading large-C_S solution, so its residual
        # shrinks with C_S but floors at the dropped gamma_M0/gamma_S0 pieces
        h = qnd_hybrid(1e6, 7e5)
        state = conditional_analytic_qnd(h)
        rhs = riccati_rhs_qnd(state.sigma, h)
        assert np.linalg.norm(rhs) <= 2e-5 * np.linalg.norm(diffusion_matrix(h))

    def test_measurement_off_reduces_to_lyapunov(self, rng):
        for _ in range(50):
            h = random_qnd_hybrid(rng)
            sigma = random_rwa_sigma(rng)
            A, D = drift_matrix(h), diffusion_matrix(h)
            C, G = measurement_matrices(h)
            gain = sigma @ C.T + G.T
            full = riccati_rhs_general(sigma, h)
            lyap = A @ sigma + sigma @ A.T + D
            assert full + gain @ gain.T == pytest.approx(lyap, rel=1e-12, abs=1e-9 * np.linalg.norm(D))


class TestGeneralRhsGate:
    def test_matches_qnd_flow_at_balanced_angles(self, rng):
        worst = 0.0
        for _ in range(300):
            h = random_qnd_hybrid(rng, eps=float(rng.uniform(0.0, 0.5)))
            sigma = random_rwa_sigma(rng)
            general = riccati_rhs_general(sigma, h)
            explicit = riccati_rhs_qnd(sigma, h)
            scale = max(np.max(np.abs(explicit)), 1e-300)
            worst = max(worst, np.max(np.abs(general - explicit)) / scale)
        assert worst <= 1e-10

    def test_problem_bundle(self):
        h = qnd_hybrid(10.0, 10.0)
        prob = RiccatiProblem.from_params(h)
        assert prob.detection_phase == 0.0
        assert prob.A == pytest.approx(drift_matrix(h))
        assert prob.D == pytest.approx(diffusion_matrix(h))
        assert len(prob.c_vectors) == 2


class TestSteadyState:
    def test_no_light_returns_thermal_state(self):
        h = hybrid_from_cooperativities(
            FIG_GAMMA_S0, FIG_N_S, 0.0, QND, FIG_GAMMA_M0, FIG_N_M, 0.0, QND, 0.0
        )
        state = riccati_steady_state(h, which="qnd")
        expect = rwa_sigma(FIG_N_S + 0.5, FIG_N_M + 0.5, 0.0)
        assert state.sigma == pytest.approx(expect, rel=1e-9)

    def test_matches_hot_bath_analytic(self):
        # large C_S so the leading-order closed form is accurate to < 1e-4
        h = qnd_hybrid(1e6, 7e5)
        num = riccati_steady_state(h, which="qnd")
        ana = conditional_analytic_qnd(h)
        assert num.xi_g == pytest.approx(ana.xi_g, rel=1e-4)
        assert num.var_xs == pytest.approx(ana.var_xs, rel=1e-4)
        assert num.var_xm == pytest.approx(ana.var_xm, rel=1e-4)
        assert num.cov_xs_xm == pytest.approx(ana.cov_xs_xm, rel=1e-4)

    def test_initial_condition_independence(self, rng):
        for _ in range(100):
            h = hybrid_from_cooperativities(
                FIG_GAMMA_S0, FIG_N_S, 10.0 ** rng.uniform(0, 2), QND,
                FIG_GAMMA_M0, 1e4, 10.0 ** rng.uniform(0, 2), QND,
                float(rng.uniform(0.0, 0.3)),
            )
            s1 = riccati_steady_state(h).sigma
            s2 = riccati_steady_state(h, sigma0=10.0 * np.eye(4)).sigma
            scale = max(np.max(np.abs(s1)), 1.0)
            assert np.max(np.abs(s1 - s2)) <= 1e-9 * scale

    def test_conditioning_never_hurts(self, rng):
        for _ in range(40):
            h = random_stable_hybrid(rng, epsilon_range=(0.0, 0.5))
            uncond = covariance_analytic(h)
            cond = riccati_steady_state(h, which="general")
            diff = uncond.sigma - cond.sigma
            min_eig = np.linalg.eigvalsh(0.5 * (diff + diff.T))[0]
            assert min_eig >= -1e-10 * max(np.max(np.abs(uncond.sigma)), 1.0)
            if not math.isnan(cond.xi_g):
                assert cond.xi_g <= uncond.xi_g + 1e-10

    def test_physicality(self, rng):
        for _ in range(40):
            h = random_stable_hybrid(rng, epsilon_range=(0.0, 0.5))
            sigma = riccati_steady_state(h, which="general").sigma
            assert physicality_min_eig(sigma) >= -1e-10 * np.trace(sigma)

    def test_unstable_rejected(self):
        h = HybridParams(
            spin=OscillatorParams(gamma0=1.0, n_bar=0.0, Gamma=5.0, theta=0.0),
            mech=OscillatorParams(gamma0=1.0, n_bar=0.0, Gamma=0.0, theta=QND),
        )
        with pytest.raises(UnstableDynamicsError):
            riccati_steady_state(h)

    def test_bad_selector(self):
        with pytest.raises(ValueError):
            riccati_steady_state(qnd_hybrid(1.0, 1.0), which="weird")


class TestAnalyticQnd:
    def test_angle_and_occupancy_guards(self):
        h = hybrid_from_cooperativities(
            FIG_GAMMA_S0, FIG_N_S, 1.0, QND + 1e-3, FIG_GAMMA_M0, FIG_N_M, 1.0, QND, 0.1
        )
        with pytest.raises(ValueError):
            conditional_analytic_qnd(h)
        cold = hybrid_from_cooperativities(
            FIG_GAMMA_S0, FIG_N_S, 1.0, QND, FIG_GAMMA_M0, 10.0, 1.0, QND, 0.1
        )
        with pytest.raises(ValueError, match="hot-bath"):
            conditional_analytic_qnd(cold)

    def test_unmonitored_mechanics_limit(self):
        state = conditional_analytic_qnd(qnd_hybrid(100.0, 0.0))
        assert state.cov_xs_xm == 0.0
        assert state.var_xm == pytest.approx(FIG_N_M + 0.5, rel=1e-12)

    def test_matches_integrator_on_random_params(self, rng):
        # hot-bath formula carries O(1/C_S) errors, so demand agreement at a
        # tolerance scaled to the operating point
        for _ in range(5):
            c_s = 10.0 ** rng.uniform(4.5, 6.0)
            c_m = c_s * float(rng.uniform(0.3, 1.0))
            h = qnd_hybrid(c_s, c_m)
            num = riccati_steady_state(h, which="qnd")
            ana = conditional_analytic_qnd(h)
            assert num.xi_g == pytest.approx(ana.xi_g, rel=max(1e-4, 40.0 / c_s))
