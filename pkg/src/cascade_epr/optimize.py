"""Entanglement optimization over coupling angles and motional cooperativity.

The optimization landscape is cheap (closed-form steady state per evaluation)
but has an unstable region and a narrow valley near theta = pi/4, so the
strategy is deterministic brute force: coarse grid seeding followed by
Nelder-Mead refinement from the best seeds.  Free mode explores
(theta_S, theta_M, log10 C_M); symmetric mode enforces theta_S = theta_M
(hence R = 0, the purely dissipative benchmark).

Asymptotic closed forms from the large-C_S analysis are provided for
cross-checking optimizer output: an ideal-case scaling for both modes and the
transmission-loss floors.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

from .conditional import conditional_analytic_qnd, riccati_steady_state
from .model import (
    HybridParams,
    effective_linewidth,
    hybrid_from_cooperativities,
    unidirectional_rate,
)

__all__ = [
    "OptimizationContext",
    "OptimizationResult",
    "SweepRow",
    "HeatmapCell",
    "AsymptoticReferences",
    "objective",
    "optimize_point",
    "sweep_cs",
    "heatmap_cs_cm",
    "asymptotic_references",
    "xi_symmetric_largecs",
    "nelder_mead",
    "optimize_cm_conditional_qnd",
]

_PI_2 = math.pi / 2
_THETA_LO = 0.02
_THETA_HI = _PI_2 - 0.02
_N_THETA_SEED = 24
_N_LOGCM_SEED = 16
_LOGCM_LO, _LOGCM_HI = -1.0, 6.0
_N_REFINE = 5
_SIMPLEX_TOL = 1e-9
_SIMPLEX_MAXITER = 2000
_PENALTY = 1.0e6
_TIE_TOL = 1e-10


@dataclass(frozen=True)
class OptimizationContext:
    """Fixed parameters of an optimization run (rates in rad/s)."""

    gamma_s0: float
    n_bar_s: float
    gamma_m0: float
    n_bar_m: float
    epsilon: float = 0.0

    @property
    def gt_s0(self) -> float:
        return self.gamma_s0 * (self.n_bar_s + 0.5)

    @property
    def gt_m0(self) -> float:
        return self.gamma_m0 * (self.n_bar_m + 0.5)

    @property
    def r(self) -> float:
        return self.gt_m0 / self.gt_s0

    def hybrid(self, c_s: float, c_m: float, theta_s: float, theta_m: float) -> HybridParams:
        return hybrid_from_cooperativities(
            self.gamma_s0, self.n_bar_s, c_s, theta_s,
            self.gamma_m0, self.n_bar_m, c_m, theta_m, self.epsilon,
        )


@dataclass(frozen=True)
class OptimizationResult:
    c_s: float
    mode: str
    theta_s: float
    theta_m: float
    c_m: float
    xi_g: float
    r_over_gamma_m: float
    converged: bool
    iterations: int
    feasible: bool = True


@dataclass(frozen=True)
class SweepRow:
    result: OptimizationResult
    conditional_xi_g: float | None = None
    rel_improvement: float | None = None


@dataclass(frozen=True)
class HeatmapCell:
    c_s: float
    c_m: float
    free: OptimizationResult
    symmetric: OptimizationResult


def _xi_scalar(ctx: OptimizationContext, c_s, c_m, th_s, th_m):
    """Closed-form unconditional xi_g at the fixed readout weight; None if unstable.

    Scalar math on purpose: this sits in the optimizer hot loop.
    """
    gt_s, gt_m = ctx.gt_s0, ctx.gt_m0
    G_S = c_s * gt_s
    G_M = c_m * gt_m
    g_s = ctx.gamma_s0 - G_S * math.cos(2.0 * th_s)
    g_m = ctx.gamma_m0 - G_M * math.cos(2.0 * th_m)
    if g_s <= 0.0 or g_m <= 0.0:
        return None
    root = math.sqrt(G_S * G_M)
    R = -root * math.sin(th_m - th_s)
    se = math.sqrt(1.0 - ctx.epsilon)
    x = (G_S / 2.0 + gt_s) / g_s
    w = -(2.0 * se / (g_s + g_m)) * (root * math.sin(th_m + th_s) - 2.0 * R * x)
    y = (G_M / 2.0 + gt_m + se * R * w) / g_m
    if G_S <= 0.0:
        return None
    g = math.sqrt(G_M / ((1.0 - ctx.epsilon) * G_S)) * (
        math.cos(th_m - math.pi / 4.0) / math.cos(th_s - math.pi / 4.0)
    )
    return 2.0 * (x + g * g * y + g * w) / (1.0 + g * g)


def _xi_conditional(ctx: OptimizationContext, c_s, c_m, th_s, th_m):
    try:
        state = riccati_steady_state(ctx.hybrid(c_s, c_m, th_s, th_m), which="general")
    except Exception:
        return None
    return state.xi_g


def objective(
    theta_s: float,
    theta_m: float,
    log10_c_m: float,
    c_s: float,
    ctx: OptimizationContext,
    mode: str = "unconditional",
) -> float:
    """xi_g of the assembled configuration; +inf sentinel when dynamically unstable."""
    if not (0.0 <= theta_s <= _PI_2 and 0.0 <= theta_m <= _PI_2):
        return math.inf
    c_m = 10.0 ** log10_c_m
    if mode == "unconditional":
        xi = _xi_scalar(ctx, c_s, c_m, theta_s, theta_m)
    elif mode == "conditional":
        xi = _xi_conditional(ctx, c_s, c_m, theta_s, theta_m)
    else:
        raise ValueError(f"unknown mode {mode!r}")
    return math.inf if xi is None else xi


def _penalized(ctx: OptimizationContext, c_s, mode, symmetric):
    """Objective wrapper for the simplex: finite penalty encoding infeasibility.

    Outside the angle box or the stable region the value is 1e6 plus a distance
    measure, which keeps the simplex contracting back toward feasibility.
    """

    def fn(z):
        if symmetric:
            th_s = th_m = z[0]
            lcm = z[1]
        else:
            th_s, th_m, lcm = z
        pen = 0.0
        for th in ((th_s,) if symmetric else (th_s, th_m)):
            if th < 0.0:
                pen += -th
            elif th > _PI_2:
                pen += th - _PI_2
        if lcm < _LOGCM_LO - 4.0:
            pen += (_LOGCM_LO - 4.0) - lcm
        elif lcm > _LOGCM_HI + 2.0:
            pen += lcm - (_LOGCM_HI + 2.0)
        if pen > 0.0:
            return _PENALTY + pen
        th_s_c = min(max(th_s, 0.0), _PI_2)
        th_m_c = min(max(th_m, 0.0), _PI_2)
        c_m = 10.0 ** lcm
        G_S = c_s * ctx.gt_s0
        G_M = c_m * ctx.gt_m0
        g_s = ctx.gamma_s0 - G_S * math.cos(2.0 * th_s_c)
        g_m = ctx.gamma_m0 - G_M * math.cos(2.0 * th_m_c)
        if g_s <= 0.0 or g_m <= 0.0:
            dist = max(0.0, -g_s) / ctx.gt_s0 + max(0.0, -g_m) / ctx.gt_m0
            return _PENALTY + dist
        val = objective(th_s_c, th_m_c, lcm, c_s, ctx, mode)
        return _PENALTY if math.isinf(val) else val

    return fn


def nelder_mead(fn, x0, steps, tol=_SIMPLEX_TOL, maxiter=_SIMPLEX_MAXITER):
    """Deterministic Nelder-Mead simplex minimization.

    Terminates when the simplex diameter drops below ``tol`` or after
    ``maxiter`` iterations.  Returns (x_best, f_best, iterations, converged).
    """
    n = len(x0)
    simplex = [list(x0)]
    for i in range(n):
        v = list(x0)
        v[i] += steps[i]
        simplex.append(v)
    fvals = [fn(v) for v in simplex]

    def diameter():
        d = 0.0
        for i in range(n + 1):
            for j in range(i + 1, n + 1):
                s = 0.0
                for k in range(n):
                    s += (simplex[i][k] - simplex[j][k]) ** 2
                d = max(d, s)
        return math.sqrt(d)

    it = 0
    converged = False
    while it < maxiter:
        order = sorted(range(n + 1), key=lambda i: fvals[i])
        simplex = [simplex[i] for i in order]
        fvals = [fvals[i] for i in order]
        if diameter() <= tol:
            converged = True
            break
        it += 1
        centroid = [sum(simplex[i][k] for i in range(n)) / n for k in range(n)]
        worst = simplex[n]
        refl = [centroid[k] + (centroid[k] - worst[k]) for k in range(n)]
        f_refl = fn(refl)
        if fvals[0] <= f_refl < fvals[n - 1]:
            simplex[n], fvals[n] = refl, f_refl
            continue
        if f_refl < fvals[0]:
            expa = [centroid[k] + 2.0 * (centroid[k] - worst[k]) for k in range(n)]
            f_expa = fn(expa)
            if f_expa < f_refl:
                simplex[n], fvals[n] = expa, f_expa
            else:
                simplex[n], fvals[n] = refl, f_refl
            continue
        contr = [centroid[k] + 0.5 * (worst[k] - centroid[k]) for k in range(n)]
        f_contr = fn(contr)
        if f_contr < fvals[n]:
            simplex[n], fvals[n] = contr, f_contr
            continue
        best = simplex[0]
        for i in range(1, n + 1):
            simplex[i] = [best[k] + 0.5 * (simplex[i][k] - best[k]) for k in range(n)]
            fvals[i] = fn(simplex[i])
    order = sorted(range(n + 1), key=lambda i: fvals[i])
    return simplex[order[0]], fvals[order[0]], it, converged


def _theta_seeds():
    return [
        _THETA_LO + (_THETA_HI - _THETA_LO) * i / (_N_THETA_SEED - 1)
        for i in range(_N_THETA_SEED)
    ]


def _logcm_seeds():
    return [
        _LOGCM_LO + (_LOGCM_HI - _LOGCM_LO) * i / (_N_LOGCM_SEED - 1)
        for i in range(_N_LOGCM_SEED)
    ]


def optimize_point(
    c_s: float,
    ctx: OptimizationContext,
    constraint: str = "free",
    mode: str = "unconditional",
    warm_starts: tuple = (),
) -> OptimizationResult:
    """Minimize xi_g at fixed C_S over angles (and C_M).

    Grid seeding (24 theta points per angle, 16 log-spaced C_M points) picks
    the best 5 starts for simplex refinement; extra ``warm_starts`` join the
    refinement list.  In free mode the symmetric optimum is always added as a
    start, which makes free <= symmetric exact by construction.  Ties within
    1e-10 in xi resolve to the smallest C_M.
    """
    if constraint not in ("free", "symmetric"):
        raise ValueError(f"constraint must be 'free' or 'symmetric', got {constraint!r}")
    if c_s <= 0:
        raise ValueError("c_s must be > 0")
    symmetric = constraint == "symmetric"
    # grid seeding always uses the cheap unconditional surface
    seed_fn = _penalized(ctx, c_s, "unconditional", symmetric)
    seeds = []
    for th in _theta_seeds():
        for lcm in _logcm_seeds():
            if symmetric:
                z = [th, lcm]
                seeds.append((seed_fn(z), z))
            else:
                for th2 in _theta_seeds():
                    z = [th, th2, lcm]
                    seeds.append((seed_fn(z), z))
    seeds.sort(key=lambda t: t[0])
    starts = [z for _, z in seeds[:_N_REFINE]]
    starts.extend(list(w) for w in warm_starts)
    if not symmetric:
        sym = optimize_point(c_s, ctx, constraint="symmetric", mode=mode)
        if sym.feasible:
            starts.append([sym.theta_s, sym.theta_m, math.log10(sym.c_m)])

    fn = _penalized(ctx, c_s, mode, symmetric)
    steps = [0.03, 0.2] if symmetric else [0.03, 0.03, 0.2]
    candidates = []
    total_it = 0
    any_converged = False
    for z0 in starts:
        z, f, it, conv = nelder_mead(fn, z0, steps)
        total_it += it
        any_converged = any_converged or conv
        candidates.append((f, z, conv))
    best_f = min(c[0] for c in candidates)
    if best_f >= _PENALTY:
        return OptimizationResult(
            c_s=c_s, mode=constraint, theta_s=math.nan, theta_m=math.nan,
            c_m=math.nan, xi_g=math.inf, r_over_gamma_m=math.nan,
            converged=False, iterations=total_it, feasible=False,
        )
    near = [c for c in candidates if c[0] <= best_f + _TIE_TOL]
    near.sort(key=lambda c: c[1][-1])  # smallest log10 C_M among ties
    f, z, conv = near[0]

    if symmetric:
        th_s = th_m = z[0]
        lcm = z[1]
    else:
        th_s, th_m, lcm = z
    c_m = 10.0 ** lcm
    xi = objective(th_s, th_m, lcm, c_s, ctx, mode)
    h = ctx.hybrid(c_s, c_m, th_s, th_m)
    g_m = effective_linewidth(h.mech)
    R = unidirectional_rate(h)
    return OptimizationResult(
        c_s=c_s, mode=constraint, theta_s=th_s, theta_m=th_m, c_m=c_m, xi_g=xi,
        r_over_gamma_m=-2.0 * math.sqrt(1.0 - ctx.epsilon) * R / g_m,
        converged=conv, iterations=total_it, feasible=True,
    )


def _conditional_at(ctx: OptimizationContext, res: OptimizationResult):
    h = ctx.hybrid(res.c_s, res.c_m, res.theta_s, res.theta_m)
    state = riccati_steady_state(h, which="general")
    return state.xi_g


def _sweep_one(args):
    ctx, c_s, mode, warm, conditional = args
    res = optimize_point(c_s, ctx, constraint=mode, warm_starts=warm)
    cond_xi = None
    rel = None
    if conditional and res.feasible:
        cond_xi = _conditional_at(ctx, res)
        rel = (res.xi_g - cond_xi) / res.xi_g
    return SweepRow(result=res, conditional_xi_g=cond_xi, rel_improvement=rel)


def sweep_cs(
    cs_grid,
    ctx: OptimizationContext,
    modes=("free", "symmetric"),
    conditional: bool = False,
    threads: int = 1,
) -> list[SweepRow]:
    """Optimize along a C_S grid, one row per (C_S, mode).

    Each point warm-starts from the previous grid point of the same mode, so
    the grid must be traversed in order; with ``threads`` > 1 a first serial
    pass without warm starts would break determinism, hence parallelism here
    splits only across modes' independent chains when requested.
    """
    cs_grid = list(cs_grid)
    if any(c <= 0 for c in cs_grid):
        raise ValueError("cs_grid must be positive")
    if sorted(cs_grid) != cs_grid:
        raise ValueError("cs_grid must be monotone increasing")

    def chain(mode):
        rows = []
        warm = ()
        for c_s in cs_grid:
            row = _sweep_one((ctx, c_s, mode, warm, conditional))
            if row.result.feasible:
                warm = (
                    [row.result.theta_s, row.result.theta_m, math.log10(row.result.c_m)]
                    if mode == "free"
                    else [row.result.theta_s, math.log10(row.result.c_m)],
                )
            rows.append(row)
        return rows

    per_mode = {}
    if threads != 1 and len(modes) > 1:
        with ProcessPoolExecutor(max_workers=min(len(modes), threads or len(modes))) as ex:
            futs = {mode: ex.submit(_chain_worker, ctx, cs_grid, mode, conditional) for mode in modes}
            for mode in modes:
                per_mode[mode] = futs[mode].result()
    else:
        for mode in modes:
            per_mode[mode] = chain(mode)
    rows = []
    for c_i, _ in enumerate(cs_grid):
        for mode in modes:
            rows.append(per_mode[mode][c_i])
    return rows


def _chain_worker(ctx, cs_grid, mode, conditional):
    rows = []
    warm = ()
    for c_s in cs_grid:
        row = _sweep_one((ctx, c_s, mode, warm, conditional))
        if row.result.feasible:
            warm = (
                [row.result.theta_s, row.result.theta_m, math.log10(row.result.c_m)]
                if mode == "free"
                else [row.result.theta_s, math.log10(row.result.c_m)],
            )
        rows.append(row)
    return rows


def _heatmap_cell(args):
    ctx, c_s, c_m = args
    lcm = math.log10(c_m)
    free = _optimize_angles_fixed_cm(ctx, c_s, lcm, symmetric=False)
    sym = _optimize_angles_fixed_cm(ctx, c_s, lcm, symmetric=True)
    return HeatmapCell(c_s=c_s, c_m=c_m, free=free, symmetric=sym)


def _optimize_angles_fixed_cm(ctx, c_s, lcm, symmetric):
    c_m = 10.0 ** lcm

    def fn(z):
        if symmetric:
            th_s = th_m = z[0]
        else:
            th_s, th_m = z
        pen = 0.0
        for th in ((th_s,) if symmetric else (th_s, th_m)):
            if th < 0.0:
                pen += -th
            elif th > _PI_2:
                pen += th - _PI_2
        if pen > 0.0:
            return _PENALTY + pen
        val = objective(th_s, th_m, lcm, c_s, ctx)
        if math.isinf(val):
            G_S, G_M = c_s * ctx.gt_s0, c_m * ctx.gt_m0
            g_s = ctx.gamma_s0 - G_S * math.cos(2.0 * th_s)
            g_m = ctx.gamma_m0 - G_M * math.cos(2.0 * th_m)
            return _PENALTY + max(0.0, -g_s) / ctx.gt_s0 + max(0.0, -g_m) / ctx.gt_m0
        return val

    seeds = []
    for th in _theta_seeds():
        if symmetric:
            seeds.append((fn([th]), [th]))
        else:
            for th2 in _theta_seeds():
                seeds.append((fn([th, th2]), [th, th2]))
    seeds.sort(key=lambda t: t[0])
    starts = [z for _, z in seeds[:_N_REFINE]]
    if not symmetric:
        sym_res = _optimize_angles_fixed_cm(ctx, c_s, lcm, symmetric=True)
        if sym_res.feasible:
            starts.append([sym_res.theta_s, sym_res.theta_m])
    steps = [0.03] if symmetric else [0.03, 0.03]
    best = None
    total_it = 0
    for z0 in starts:
        z, f, it, conv = nelder_mead(fn, z0, steps)
        total_it += it
        if best is None or f < best[0]:
            best = (f, z, conv)
    f, z, conv = best
    mode = "symmetric" if symmetric else "free"
    if f >= _PENALTY:
        return OptimizationResult(
            c_s=c_s, mode=mode, theta_s=math.nan, theta_m=math.nan, c_m=c_m,
            xi_g=math.inf, r_over_gamma_m=math.nan, converged=False,
            iterations=total_it, feasible=False,
        )
    th_s = z[0]
    th_m = z[0] if symmetric else z[1]
    xi = objective(th_s, th_m, lcm, c_s, ctx)
    h = ctx.hybrid(c_s, c_m, th_s, th_m)
    return OptimizationResult(
        c_s=c_s, mode=mode, theta_s=th_s, theta_m=th_m, c_m=c_m, xi_g=xi,
        r_over_gamma_m=-2.0 * math.sqrt(1.0 - ctx.epsilon) * unidirectional_rate(h)
        / effective_linewidth(h.mech),
        converged=conv, iterations=total_it, feasible=True,
    )


def heatmap_cs_cm(cs_grid, cm_grid, ctx: OptimizationContext, threads: int = 1) -> list[HeatmapCell]:
    """Angle-optimized xi_g over a (C_S, C_M) grid, free and symmetric modes."""
    cs_grid = list(cs_grid)
    cm_grid = list(cm_grid)
    if any(c <= 0 for c in cs_grid + cm_grid):
        raise ValueError("grids must be positive")
    tasks = [(ctx, c_s, c_m) for c_s in cs_grid for c_m in cm_grid]
    if threads == 1:
        return [_heatmap_cell(t) for t in tasks]
    workers = threads if threads > 0 else None
    with ProcessPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(_heatmap_cell, tasks, chunksize=8))


@dataclass(frozen=True)
class AsymptoticReferences:
    """Large-C_S closed-form references evaluated at one operating point."""

    scaling_asym: float      # sqrt([1 + r + 1/(2 n_S + 1)] / (2 C_S)), eps = 0
    scaling_sym: float       # sqrt(2 (1 + r) / C_S), eps = 0
    floor_free: float        # sqrt(eps / (4 - 3 eps))
    floor_sym: float         # sqrt(eps) (1 + eps/16)
    c_m_opt: float           # sqrt(1 - eps) C_S / r
    sin_2theta_opt: float    # symmetric-mode optimal angle relation


def asymptotic_references(c_s: float, r: float, n_bar_s: float, epsilon: float) -> AsymptoticReferences:
    if c_s <= 0 or not 0 <= epsilon < 1:
        raise ValueError("need c_s > 0 and 0 <= epsilon < 1")
    se = math.sqrt(1.0 - epsilon)
    return AsymptoticReferences(
        scaling_asym=math.sqrt((1.0 + r + 1.0 / (2.0 * n_bar_s + 1.0)) / (2.0 * c_s)),
        scaling_sym=math.sqrt(2.0 * (1.0 + r) / c_s),
        floor_free=math.sqrt(epsilon / (4.0 - 3.0 * epsilon)),
        floor_sym=math.sqrt(epsilon) * (1.0 + epsilon / 16.0),
        c_m_opt=se * c_s / r,
        sin_2theta_opt=(4.0 * (1.0 - epsilon) / (se + 1.0) ** 2)
        * (1.0 - 2.0 * (se + r) / ((se + 1.0) * c_s)),
    )


def xi_symmetric_largecs(theta: float, c_s: float, c_m: float, r: float, epsilon: float) -> float:
    """Large-C_S symmetric-coupling (R = 0) closed form for xi_g at theta != pi/4."""
    cos2 = math.cos(2.0 * theta)
    tan2 = math.tan(2.0 * theta)
    one_m = 1.0 - epsilon
    return (
        -(1.0 / cos2) * (1.0 + 2.0 * (one_m + r) / (c_s * one_m + c_m * r))
        + tan2 * 4.0 * c_m * c_s * r * one_m
        / ((c_m * r + c_s * one_m) * (c_m * r + c_s))
    )


def optimize_cm_conditional_qnd(
    c_s: float, ctx: OptimizationContext
) -> tuple[float, float]:
    """Optimal C_M and xi_g of the conditional QND scheme via the hot-bath closed form.

    One-dimensional simplex search over log10 C_M at theta_S = theta_M = pi/4.
    """

    from .unconditional import physicality_min_eig

    def fn(z):
        c_m = 10.0 ** z[0]
        if c_m < 1e-2:
            return _PENALTY
        try:
            h = ctx.hybrid(c_s, c_m, math.pi / 4, math.pi / 4)
            state = conditional_analytic_qnd(h)
        except ValueError:
            return _PENALTY
        # the hot-bath closed form loses validity at small C_M, where it emits
        # unphysical covariances; accept it only where the state is physical
        import numpy as np

        if physicality_min_eig(state.sigma) < -1e-6 * float(np.trace(state.sigma)):
            return _PENALTY
        xi = state.xi_g
        if not math.isfinite(xi) or xi <= 0.0:
            return _PENALTY
        return xi

    seeds = sorted(((fn([l]), [l]) for l in _logcm_seeds()), key=lambda t: t[0])
    best = None
    for _, z0 in seeds[:3]:
        z, f, _, _ = nelder_mead(fn, z0, [0.2])
        if best is None or f < best[0]:
            best = (f, z)
    f, z = best
    return 10.0 ** z[0], f
