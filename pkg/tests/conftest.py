"""Shared helpers for the test suite."""

from __future__ import annotations

import math

import numpy as np
import pytest

from cascade_epr.model import HybridParams, OscillatorParams, stability

TWO_PI = 2.0 * math.pi

# Fixed operating point used throughout the source figures: spin linewidth
# 2pi x 5 kHz with one thermal quantum, mechanical decoherence 2pi x 10 kHz
# realized as gamma_M0 = 2pi x 0.1 Hz with n_bar_M = 1e5.
FIG_GAMMA_S0 = TWO_PI * 5e3
FIG_N_S = 1.0
FIG_GAMMA_M0 = TWO_PI * 0.1
FIG_N_M = 1e5
FIG_GT_S0 = FIG_GAMMA_S0 * (FIG_N_S + 0.5)
FIG_GT_M0 = FIG_GAMMA_M0 * (FIG_N_M + 0.5)
FIG_R = FIG_GT_M0 / FIG_GT_S0


def random_oscillator(rng, gamma0_range=(TWO_PI * 1e2, TWO_PI * 1e4),
                      n_bar_max=100.0, coop_log_range=(-2.0, 3.0),
                      theta_range=(0.02, math.pi / 2 - 0.02),
                      zero_gamma_prob=0.1) -> OscillatorParams:
    gamma0 = float(rng.uniform(*gamma0_range))
    n_bar = float(rng.uniform(0.0, n_bar_max))
    gt0 = gamma0 * (n_bar + 0.5)
    if rng.random() < zero_gamma_prob:
        Gamma = 0.0
    else:
        Gamma = gt0 * 10.0 ** float(rng.uniform(*coop_log_range))
    theta = float(rng.uniform(*theta_range))
    return OscillatorParams(gamma0=gamma0, n_bar=n_bar, Gamma=Gamma, theta=theta)


def random_stable_hybrid(rng, epsilon_range=(0.0, 0.99), max_tries=500) -> HybridParams:
    for _ in range(max_tries):
        h = HybridParams(
            spin=random_oscillator(rng),
            mech=random_oscillator(rng, gamma0_range=(TWO_PI * 0.01, TWO_PI * 10.0),
                                   n_bar_max=1e5),
            epsilon=float(rng.uniform(*epsilon_range)),
        )
        if stability(h)[2]:
            return h
    raise RuntimeError("could not draw a stable configuration")


def random_rwa_sigma(rng, v_max=30.0):
    """Random physical covariance of the rotating-wave family.

    Sigma - I/2 >= 0 guarantees Sigma + iJ/2 >= 0, so these are all physical.
    """
    from cascade_epr.unconditional import rwa_sigma

    v_s = 0.5 + 10.0 ** float(rng.uniform(-3, math.log10(v_max)))
    v_m = 0.5 + 10.0 ** float(rng.uniform(-3, math.log10(v_max)))
    c = float(rng.uniform(-0.99, 0.99)) * math.sqrt((v_s - 0.5) * (v_m - 0.5))
    return rwa_sigma(v_s, v_m, c)


@pytest.fixture
def rng():
    return np.random.default_rng(20260808)
