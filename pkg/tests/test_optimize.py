import math

import pytest

from cascade_epr.optimize import (
    OptimizationContext,
    asymptotic_references,
    heatmap_cs_cm,
    nelder_mead,
    objective,
    optimize_cm_conditional_qnd,
    optimize_point,
    sweep_cs,
    xi_symmetric_largecs,
)
from conftest import FIG_GAMMA_M0, FIG_GAMMA_S0, FIG_N_M, FIG_N_S, TWO_PI

FIG_CTX = OptimizationContext(
    gamma_s0=FIG_GAMMA_S0, n_bar_s=FIG_N_S,
    gamma_m0=FIG_GAMMA_M0, n_bar_m=FIG_N_M, epsilon=0.0,
)
VACUUM_CTX = OptimizationContext(
    gamma_s0=1.0, n_bar_s=0.0, gamma_m0=1.0, n_bar_m=0.0, epsilon=0.0,
)


class TestObjective:
    def test_vacuum_corner_is_separability_boundary(self):
        xi = objective(0.6, 0.9, -8.0, 1e-8, VACUUM_CTX)
        assert xi == pytest.approx(1.0, abs=1e-6)

    def test_unstable_corner_returns_sentinel(self):
        # theta_M = 0 with large C_M anti-damps the mechanics
        assert objective(math.pi / 4, 0.0, 4.0, 10.0, FIG_CTX) == math.inf

    def test_entangled_along_optimal_ridge(self):
        res = optimize_point(100.0, FIG_CTX, constraint="free")
        assert res.xi_g < 1.0

    def test_bad_mode_rejected(self):
        with pytest.raises(ValueError):
            objective(0.5, 0.5, 0.0, 1.0, FIG_CTX, mode="bogus")


class TestNelderMead:
    def test_quadratic_bowl(self):
        fn = lambda z: (z[0] - 1.0) ** 2 + 2.0 * (z[1] + 0.5) ** 2
        z, f, it, conv = nelder_mead(fn, [4.0, 3.0], [0.5, 0.5])
        assert conv
        assert z[0] == pytest.approx(1.0, abs=1e-7)
        assert z[1] == pytest.approx(-0.5, abs=1e-7)

    def test_deterministic(self):
        fn = lambda z: math.sin(3 * z[0]) + z[0] ** 2 + (z[1] - 0.2) ** 4
        a = nelder_mead(fn, [0.7, -0.4], [0.1, 0.1])
        b = nelder_mead(fn, [0.7, -0.4], [0.1, 0.1])
        assert a == b


class TestAsymptoticReferences:
    def test_reference_values(self):
        refs = asymptotic_references(1e4, 4.0 / 3.0, 1.0, 0.0)
        assert refs.scaling_sym == pytest.approx(0.021602468994693, rel=1e-12)
        assert refs.scaling_asym == pytest.approx(0.011547005383793, rel=1e-12)

    def test_loss_floors(self):
        refs = asymptotic_references(1e5, 4.0 / 3.0, 1.0, 0.1)
        assert refs.floor_free == pytest.approx(math.sqrt(0.1 / 3.7), rel=1e-12)
        assert refs.floor_sym == pytest.approx(math.sqrt(0.1) * (1 + 0.1 / 16), rel=1e-12)

    def test_sin_2theta_limit(self):
        refs = asymptotic_references(1e12, 4.0 / 3.0, 1.0, 0.0)
        assert refs.sin_2theta_opt == pytest.approx(1.0, abs=1e-10)
        assert asymptotic_references(1e12, 4.0 / 3.0, 1.0, 0.3).sin_2theta_opt < 1.0

    def test_symmetric_closed_form_matches_direct_xi(self):
        # at large C_S the closed form tracks the exact symmetric-mode xi
        c_s, c_m = 1e6, 1e6 / FIG_CTX.r
        refs = asymptotic_references(c_s, FIG_CTX.r, FIG_N_S, 0.0)
        theta = 0.5 * math.asin(min(1.0, refs.sin_2theta_opt))
        theta = math.pi / 2 - theta  # beam-splitter branch
        closed = xi_symmetric_largecs(theta, c_s, c_m, FIG_CTX.r, 0.0)
        exact = objective(theta, theta, math.log10(c_m), c_s, FIG_CTX)
        assert closed == pytest.approx(exact, rel=1e-2)


class TestOptimizePoint:
    def test_free_mode_structure_at_large_cs(self):
        res = optimize_point(1e4, FIG_CTX, constraint="free")
        assert res.feasible and res.converged
        assert math.pi / 4 - 0.1 < res.theta_s < math.pi / 4 + 0.05
        assert res.theta_m > math.pi / 4
        assert res.r_over_gamma_m > 0.0  # R < 0 against gamma_M > 0
        refs = asymptotic_references(1e4, FIG_CTX.r, FIG_N_S, 0.0)
        assert abs(res.xi_g / refs.scaling_asym - 1.0) <= 0.10
        assert abs(res.c_m * FIG_CTX.r / 1e4 - 1.0) <= 0.10

    def test_symmetric_mode_scaling(self):
        res = optimize_point(1e4, FIG_CTX, constraint="symmetric")
        refs = asymptotic_references(1e4, FIG_CTX.r, FIG_N_S, 0.0)
        assert res.theta_s == res.theta_m
        assert abs(res.xi_g / refs.scaling_sym - 1.0) <= 0.10

    def test_reported_point_reevaluates_identically(self):
        for mode in ("free", "symmetric"):
            res = optimize_point(300.0, FIG_CTX, constraint=mode)
            fresh = objective(res.theta_s, res.theta_m, math.log10(res.c_m), 300.0, FIG_CTX)
            assert res.xi_g == pytest.approx(fresh, rel=1e-12)

    def test_deterministic(self):
        a = optimize_point(123.0, FIG_CTX, constraint="free")
        b = optimize_point(123.0, FIG_CTX, constraint="free")
        assert a == b

    def test_free_never_worse_than_symmetric(self):
        for c_s in (3.0, 30.0, 3000.0):
            free = optimize_point(c_s, FIG_CTX, constraint="free")
            sym = optimize_point(c_s, FIG_CTX, constraint="symmetric")
            assert free.xi_g <= sym.xi_g + 1e-12

    def test_invalid_inputs(self):
        with pytest.raises(ValueError):
            optimize_point(0.0, FIG_CTX)
        with pytest.raises(ValueError):
            optimize_point(1.0, FIG_CTX, constraint="diagonal")


class TestSweep:
    def test_monotone_nonincreasing_and_modes(self):
        grid = [10.0, 100.0, 1000.0]
        rows = sweep_cs(grid, FIG_CTX, modes=("free", "symmetric"))
        assert len(rows) == 6
        by_mode = {"free": [], "symmetric": []}
        for row in rows:
            by_mode[row.result.mode].append(row.result)
        for mode, results in by_mode.items():
            assert [r.c_s for r in results] == grid
            xis = [r.xi_g for r in results]
            assert all(xis[i + 1] <= xis[i] + 1e-12 for i in range(len(xis) - 1))
        for f, s in zip(by_mode["free"], by_mode["symmetric"]):
            assert f.xi_g <= s.xi_g + 1e-12
        # along the optimizer's path the optimal C_M grows and the optimized
        # xi never increases with it
        free_sorted = sorted(by_mode["free"], key=lambda r: r.c_m)
        xis = [r.xi_g for r in free_sorted]
        assert all(xis[i + 1] <= xis[i] + 1e-12 for i in range(len(xis) - 1))

    def test_grid_validation(self):
        with pytest.raises(ValueError):
            sweep_cs([10.0, 1.0], FIG_CTX)
        with pytest.raises(ValueError):
            sweep_cs([-1.0, 10.0], FIG_CTX)

    def test_conditional_columns(self):
        rows = sweep_cs([100.0], FIG_CTX, modes=("free",), conditional=True)
        row = rows[0]
        assert row.conditional_xi_g is not None
        assert 0.0 <= row.rel_improvement <= 0.10
        assert row.conditional_xi_g <= row.result.xi_g + 1e-10


class TestHeatmap:
    def test_cell_count_and_nesting(self):
        cells = heatmap_cs_cm([10.0, 1000.0], [10.0, 300.0], FIG_CTX)
        assert len(cells) == 4
        for cell in cells:
            assert cell.free.xi_g <= cell.symmetric.xi_g + 1e-12
            if cell.symmetric.xi_g < 1.0:
                assert cell.free.xi_g < 1.0

    def test_angles_only_c_m_fixed(self):
        cells = heatmap_cs_cm([100.0], [50.0], FIG_CTX)
        assert cells[0].free.c_m == pytest.approx(50.0, rel=1e-12)


class TestConditionalQndOptimum:
    def test_tracks_unconditional_scaling(self):
        ctx = OptimizationContext(
            gamma_s0=FIG_GAMMA_S0, n_bar_s=FIG_N_S,
            gamma_m0=FIG_GAMMA_M0, n_bar_m=FIG_N_M, epsilon=0.1,
        )
        c_m, xi = optimize_cm_conditional_qnd(1e4, ctx)
        # conditional QND optimum approaches the same asymptotic scaling
        refs = asymptotic_references(1e4, ctx.r, FIG_N_S, 0.0)
        assert xi < 1.0
        assert c_m == pytest.approx(math.sqrt(1 - 0.1) * 1e4 / ctx.r, rel=0.25)
