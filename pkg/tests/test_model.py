import math

import numpy as np
import pytest

from cascade_epr.model import (
    HybridParams,
    OscillatorParams,
    decoherence_and_cooperativity,
    diffusion_matrix,
    drift_matrix,
    effective_linewidth,
    epr_weight,
    sideband_split,
    stability,
    unidirectional_rate,
)
from conftest import TWO_PI, random_stable_hybrid


def osc(gamma0=1.0, n_bar=0.0, Gamma=0.0, theta=math.pi / 4):
    return OscillatorParams(gamma0=gamma0, n_bar=n_bar, Gamma=Gamma, theta=theta)


def hybrid(G_s, th_s, G_m, th_m, eps=0.0, gamma_s0=1.0, gamma_m0=1.0, n_s=0.0, n_m=0.0):
    return HybridParams(
        spin=osc(gamma_s0, n_s, G_s, th_s),
        mech=osc(gamma_m0, n_m, G_m, th_m),
        epsilon=eps,
    )


class TestSidebandSplit:
    def test_balanced_qnd_point(self):
        assert sideband_split(1.0, math.pi / 4) == pytest.approx((0.5, 0.5), abs=1e-15)

    def test_pure_beam_splitter(self):
        gb, gp = sideband_split(2.0, math.pi / 2)
        assert gb == pytest.approx(2.0, abs=1e-15)
        assert gp == pytest.approx(0.0, abs=1e-15)

    def test_sin2_pi_3(self):
        assert sideband_split(1.0, math.pi / 3) == pytest.approx((0.75, 0.25), abs=1e-15)

    def test_out_of_range_theta_rejected(self):
        with pytest.raises(ValueError):
            sideband_split(1.0, -0.1)
        with pytest.raises(ValueError):
            sideband_split(1.0, math.pi / 2 + 0.1)

    def test_sum_identity_random(self, rng):
        for _ in range(10_000):
            Gamma = 10.0 ** rng.uniform(-3, 3)
            theta = rng.uniform(0.0, math.pi / 2)
            gb, gp = sideband_split(Gamma, theta)
            assert gb >= 0.0 and gp >= 0.0
            assert gb + gp == pytest.approx(Gamma, rel=1e-15)


class TestEffectiveLinewidth:
    def test_qnd_point_no_broadening(self):
        assert effective_linewidth(osc(1.0, 0.0, 5.0, math.pi / 4)) == pytest.approx(1.0, abs=1e-12)

    def test_full_broadening(self):
        assert effective_linewidth(osc(1.0, 0.0, 5.0, math.pi / 2)) == pytest.approx(6.0)

    def test_unstable_is_reported_not_raised(self):
        g = effective_linewidth(osc(1.0, 0.0, 5.0, 0.0))
        assert g == pytest.approx(-4.0)
        h = hybrid(5.0, 0.0, 0.0, math.pi / 4)
        _, _, stable = stability(h)
        assert not stable

    def test_two_form_consistency(self, rng):
        for _ in range(2000):
            p = osc(10.0 ** rng.uniform(-2, 4), rng.uniform(0, 100),
                    10.0 ** rng.uniform(-3, 5), rng.uniform(0, math.pi / 2))
            gb, gp = sideband_split(p.Gamma, p.theta)
            direct = effective_linewidth(p)
            viasum = p.gamma0 + gb - gp
            # machine-precision agreement relative to the input scale Gamma
            assert direct == pytest.approx(viasum, rel=1e-14, abs=5e-14 * (p.gamma0 + p.Gamma))


class TestDecoherence:
    def test_fig_parameters(self):
        gt, _ = decoherence_and_cooperativity(osc(TWO_PI * 5e3, 1.0, 1.0))
        assert gt == pytest.approx(TWO_PI * 7.5e3, rel=1e-14)

    def test_vacuum_bath(self):
        gt, c = decoherence_and_cooperativity(osc(1.0, 0.0, 10.0))
        assert gt == pytest.approx(0.5)
        assert c == pytest.approx(20.0)

    def test_hot_mechanical_bath(self):
        gt, c = decoherence_and_cooperativity(osc(TWO_PI * 0.1, 1e5, 0.0))
        assert gt == pytest.approx(TWO_PI * 10000.05, rel=1e-12)
        assert c == 0.0


class TestUnidirectionalRate:
    def test_equal_angles_vanish(self, rng):
        for _ in range(50):
            th = rng.uniform(0, math.pi / 2)
            h = hybrid(10.0 ** rng.uniform(-2, 2), th, 10.0 ** rng.uniform(-2, 2), th)
            assert unidirectional_rate(h) == pytest.approx(0.0, abs=1e-12)

    def test_closed_forms(self):
        assert unidirectional_rate(hybrid(1.0, math.pi / 4, 1.0, math.pi / 2)) == pytest.approx(
            -math.sin(math.pi / 4), rel=1e-14
        )
        assert unidirectional_rate(hybrid(4.0, 0.0, 1.0, math.pi / 2)) == pytest.approx(-2.0)

    def test_both_forms_agree(self, rng):
        for _ in range(2000):
            G_s = 10.0 ** rng.uniform(-3, 3)
            G_m = 10.0 ** rng.uniform(-3, 3)
            th_s = rng.uniform(0, math.pi / 2)
            th_m = rng.uniform(0, math.pi / 2)
            h = hybrid(G_s, th_s, G_m, th_m)
            closed = -math.sqrt(G_s * G_m) * math.sin(th_m - th_s)
            assert unidirectional_rate(h) == pytest.approx(
                closed, rel=1e-12, abs=1e-12 * math.sqrt(G_s * G_m)
            )

    def test_sign_convention(self):
        assert unidirectional_rate(hybrid(1.0, 0.3, 1.0, 0.9)) < 0.0


class TestEprWeight:
    def test_symmetric_configuration(self):
        assert epr_weight(hybrid(2.0, 0.6, 2.0, 0.6)) == pytest.approx(1.0, rel=1e-14)

    def test_mirrored_angles(self):
        th = 0.3
        h = hybrid(2.0, th, 2.0, math.pi / 2 - th)
        # cos(theta_M - pi/4) = cos(pi/4 - theta_S), so the ratio is one
        assert epr_weight(h) == pytest.approx(1.0, rel=1e-13)

    def test_loss_rescaling(self):
        h = hybrid(1.0, math.pi / 4, 4.0, math.pi / 4, eps=0.75)
        assert epr_weight(h) == pytest.approx(4.0, rel=1e-14)

    def test_division_errors(self):
        with pytest.raises(ZeroDivisionError):
            epr_weight(hybrid(0.0, 0.3, 1.0, 0.3))
        with pytest.raises(ZeroDivisionError):
            epr_weight(hybrid(1.0, 0.3, 1.0, 0.3, eps=1.0))


class TestDriftMatrix:
    def test_decoupled_when_r_zero(self):
        A = drift_matrix(hybrid(1.0, 0.7, 2.0, 0.7))
        off = A - np.diag(np.diag(A))
        assert np.max(np.abs(off)) == pytest.approx(0.0, abs=1e-14)

    def test_full_loss_decouples(self):
        A = drift_matrix(hybrid(1.0, 0.3, 2.0, 1.2, eps=1.0))
        off = A - np.diag(np.diag(A))
        assert np.max(np.abs(off)) == pytest.approx(0.0, abs=1e-14)

    def test_eigenvalues_are_half_linewidths(self, rng):
        for _ in range(100):
            h = random_stable_hybrid(rng)
            A = drift_matrix(h)
            g_s = effective_linewidth(h.spin)
            g_m = effective_linewidth(h.mech)
            eig = np.sort(np.linalg.eigvals(A).real)
            expect = np.sort([-g_s / 2, -g_s / 2, -g_m / 2, -g_m / 2])
            assert eig == pytest.approx(expect, rel=1e-10)

    def test_cascade_entries(self):
        h = hybrid(1.0, 0.3, 2.0, 1.2, eps=0.36)
        A = drift_matrix(h)
        expect = math.sqrt(1 - 0.36) * unidirectional_rate(h)
        assert A[2, 0] == pytest.approx(expect, rel=1e-14)
        assert A[3, 1] == pytest.approx(-expect, rel=1e-14)

    def test_spectral_abscissa_iff_stable(self, rng):
        for _ in range(300):
            G_s = 10.0 ** rng.uniform(-2, 2)
            G_m = 10.0 ** rng.uniform(-2, 2)
            h = hybrid(G_s, rng.uniform(0, math.pi / 2), G_m, rng.uniform(0, math.pi / 2))
            A = drift_matrix(h)
            abscissa = np.max(np.linalg.eigvals(A).real)
            _, _, stable = stability(h)
            assert (abscissa < 0) == stable


class TestDiffusionMatrix:
    def test_thermal_only(self):
        h = hybrid(0.0, 0.3, 0.0, 1.2, gamma_s0=2.0, gamma_m0=3.0, n_s=1.0, n_m=2.0)
        D = diffusion_matrix(h)
        assert D == pytest.approx(np.diag([3.0, 3.0, 7.5, 7.5]), rel=1e-14)

    def test_full_loss_kills_cross_terms(self):
        D = diffusion_matrix(hybrid(1.0, 0.5, 2.0, 0.9, eps=1.0))
        assert D[0, 2] == 0.0 and D[1, 3] == 0.0

    def test_cross_entry_value(self):
        h = hybrid(1.0, 0.5, 2.0, 0.9, eps=0.19)
        D = diffusion_matrix(h)
        expect = -math.sqrt(0.81) * math.sqrt(2.0) * math.sin(1.4) / 2.0
        assert D[0, 2] == pytest.approx(expect, rel=1e-14)
        assert D[1, 3] == pytest.approx(-expect, rel=1e-14)

    def test_positive_semidefinite(self, rng):
        for _ in range(1000):
            h = random_stable_hybrid(rng)
            D = diffusion_matrix(h)
            assert np.allclose(D, D.T)
            min_eig = np.linalg.eigvalsh(D)[0]
            assert min_eig >= -1e-12 * np.trace(D)


class TestValidation:
    def test_invariants_enforced(self):
        with pytest.raises(ValueError):
            OscillatorParams(gamma0=0.0, n_bar=0.0, Gamma=1.0, theta=0.3)
        with pytest.raises(ValueError):
            OscillatorParams(gamma0=1.0, n_bar=-1.0, Gamma=1.0, theta=0.3)
        with pytest.raises(ValueError):
            OscillatorParams(gamma0=1.0, n_bar=0.0, Gamma=-1.0, theta=0.3)
        with pytest.raises(ValueError):
            OscillatorParams(gamma0=1.0, n_bar=0.0, Gamma=1.0, theta=2.0)
        with pytest.raises(ValueError):
            HybridParams(spin=osc(), mech=osc(), epsilon=1.5)
