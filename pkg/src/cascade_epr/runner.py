"""Command implementations shared by the CLI and the HTTP service.

Every command maps a validated parameter dict (see ``config``) to a
``TableResult``: column names, data rows (floats, strings or None) and a
metadata map echoing the resolved configuration plus derived rates.  Rows are
emitted in grid order regardless of any parallelism, so output is
deterministic byte for byte.
"""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

from . import __version__
from .config import GridSpec, validate_params
from .conditional import riccati_steady_state
from .model import (
    HybridParams,
    derived_rates,
    hybrid_from_cooperativities,
    stability,
)
from .optimize import (
    OptimizationContext,
    heatmap_cs_cm,
    optimize_cm_conditional_qnd,
    optimize_point,
    sweep_cs,
)
from .physmap import (
    CavityParams,
    cascade_phase_choice,
    sideband_rates_from_cavity,
    spring_shift_fixed_point,
)
from .sensing import (
    SensingParams,
    enhancement_ratio,
    hybrid_h_coefficients,
    noise_spectrum_hybrid,
    noise_spectrum_mech,
    sql_benchmark,
)
from .unconditional import covariance_analytic, epr_variance_min_g

__all__ = ["TableResult", "run_command"]


@dataclass(frozen=True)
class TableResult:
    command: str
    columns: list
    rows: list
    meta: dict


def _meta(command: str, params: dict, extra: dict | None = None) -> dict:
    """Echo the resolved (post-ingestion, angular-unit) configuration."""
    meta = {"tool": f"cascade-epr {__version__}", "command": command}
    for key in sorted(params):
        val = params[key]
        name = key.replace("_hz", "_rad_s")
        if isinstance(val, GridSpec):
            meta[name] = f"{val.start:.12g}:{val.stop:.12g}:{val.count}:{val.scale}"
        elif isinstance(val, tuple):
            meta[name] = ",".join(str(v) for v in val)
        elif isinstance(val, float):
            meta[name] = f"{val:.12g}"
        else:
            meta[name] = str(val)
    if extra:
        for key in sorted(extra):
            meta[key] = extra[key]
    return meta


def _context(params: dict) -> OptimizationContext:
    return OptimizationContext(
        gamma_s0=params["gamma_s0_hz"],
        n_bar_s=params["n_bar_s"],
        gamma_m0=params["gamma_m0_hz"],
        n_bar_m=params["n_bar_m"],
        epsilon=params["epsilon"],
    )


def _derived_meta(ctx: OptimizationContext) -> dict:
    return {
        "gamma_tilde_s0_rad_s": f"{ctx.gt_s0:.12g}",
        "gamma_tilde_m0_rad_s": f"{ctx.gt_m0:.12g}",
        "r": f"{ctx.r:.12g}",
    }


def _hybrid(params: dict) -> HybridParams:
    return hybrid_from_cooperativities(
        params["gamma_s0_hz"], params["n_bar_s"], params["c_s"], params["theta_s_rad"],
        params["gamma_m0_hz"], params["n_bar_m"], params["c_m"], params["theta_m_rad"],
        params["epsilon"],
    )


def run_steady(params: dict, threads: int = 1) -> TableResult:
    h = _hybrid(params)
    g_s, g_m, stable = stability(h)
    rates = derived_rates(h)
    columns = [
        "C_S", "C_M", "theta_S", "theta_M", "epsilon", "gamma_S", "gamma_M",
        "R", "g_weight", "var_XS", "var_XM", "sigma_XS_XM", "xi_g",
        "g_opt", "xi_min", "stable",
    ]
    if stable:
        state = covariance_analytic(h)
        ming = epr_variance_min_g(state)
        row = [
            params["c_s"], params["c_m"], params["theta_s_rad"], params["theta_m_rad"],
            params["epsilon"], g_s, g_m, rates.R, rates.g,
            state.var_xs, state.var_xm, float(state.sigma[0, 2]), state.xi_g,
            ming.g_opt, ming.xi_min, 1.0,
        ]
    else:
        row = [
            params["c_s"], params["c_m"], params["theta_s_rad"], params["theta_m_rad"],
            params["epsilon"], g_s, g_m, rates.R, rates.g,
            None, None, None, None, None, None, 0.0,
        ]
    ctx = _context(params)
    return TableResult("steady", columns, [row], _meta("steady", params, _derived_meta(ctx)))


def run_sweep(params: dict, threads: int = 1) -> TableResult:
    ctx = _context(params)
    grid = params["cs_grid"].values()
    rows_out = []
    sweep = sweep_cs(grid, ctx, modes=params["modes"],
                     conditional=params["conditional"], threads=threads)
    for row in sweep:
        res = row.result
        rows_out.append([
            res.c_s, res.mode, res.theta_s, res.theta_m, res.c_m, res.xi_g,
            res.r_over_gamma_m, row.conditional_xi_g, row.rel_improvement,
        ])
    columns = ["C_S", "mode", "theta_S", "theta_M", "C_M", "xi_g",
               "R_over_gammaM", "conditional_xi_g", "rel_improvement"]
    return TableResult("sweep", columns, rows_out, _meta("sweep", params, _derived_meta(ctx)))


def run_heatmap(params: dict, threads: int = 1) -> TableResult:
    ctx = _context(params)
    cs_vals = params["cs_grid"].values()
    cm_vals = params["cm_grid"].values()
    cells = heatmap_cs_cm(cs_vals, cm_vals, ctx, threads=threads)
    # free-mode optimal-C_M ridge per C_S row
    ridge = {}
    for cell in cells:
        cur = ridge.get(cell.c_s)
        if cell.free.feasible and (cur is None or cell.free.xi_g < cur[1]):
            ridge[cell.c_s] = (cell.c_m, cell.free.xi_g)
    rows = []
    for cell in cells:
        is_ridge = 1.0 if (cell.c_s in ridge and ridge[cell.c_s][0] == cell.c_m) else 0.0
        rows.append([
            cell.c_s, cell.c_m,
            cell.free.theta_s, cell.free.theta_m, cell.free.xi_g,
            cell.symmetric.theta_s, cell.symmetric.xi_g,
            is_ridge,
            1.0 if cell.free.feasible else 0.0,
            1.0 if cell.symmetric.feasible else 0.0,
        ])
    columns = ["C_S", "C_M", "theta_S_free", "theta_M_free", "xi_g_free",
               "theta_sym", "xi_g_sym", "ridge", "feasible_free", "feasible_sym"]
    return TableResult("heatmap", columns, rows, _meta("heatmap", params, _derived_meta(ctx)))


def run_optimize(params: dict, threads: int = 1) -> TableResult:
    ctx = _context(params)
    c_s = params["c_s"]
    mode = params["mode"]
    columns = ["C_S", "mode", "theta_S", "theta_M", "C_M", "xi_g",
               "R_over_gammaM", "conditional_xi_g", "rel_improvement",
               "converged", "iterations"]
    if mode == "cond_qnd":
        c_m, xi = optimize_cm_conditional_qnd(c_s, ctx)
        row = [c_s, mode, math.pi / 4, math.pi / 4, c_m, xi, 0.0, xi, None, 1.0, 0.0]
        return TableResult("optimize", columns, [row],
                           _meta("optimize", params, _derived_meta(ctx)))
    res = optimize_point(c_s, ctx, constraint=mode)
    cond_xi = None
    rel = None
    if params["conditional"] and res.feasible:
        h = ctx.hybrid(res.c_s, res.c_m, res.theta_s, res.theta_m)
        cond_xi = riccati_steady_state(h, which="general").xi_g
        rel = (res.xi_g - cond_xi) / res.xi_g
    row = [res.c_s, res.mode, res.theta_s, res.theta_m, res.c_m, res.xi_g,
           res.r_over_gamma_m, cond_xi, rel,
           1.0 if res.converged else 0.0, float(res.iterations)]
    return TableResult("optimize", columns, [row], _meta("optimize", params, _derived_meta(ctx)))


def run_spectrum(params: dict, threads: int = 1) -> TableResult:
    h = _hybrid(params)
    sparams = SensingParams(hybrid=h, Omega_M=params["omega_m_hz"],
                            gamma_sig=params["omega_m_hz"] * 1e-3)
    omegas = params["omega_grid_hz"].values()
    extra = {}
    if params["spectrum_kind"] == "mech":
        spec = noise_spectrum_mech(sparams, omegas)
    else:
        spec = noise_spectrum_hybrid(sparams, omegas)
        h1, h2, h3, h4 = hybrid_h_coefficients(h)
        extra = {"h1": f"{h1:.12g}", "h2": f"{h2:.12g}",
                 "h3": f"{h3:.12g}", "h4": f"{h4:.12g}"}
    ctx = _context(params)
    extra.update(_derived_meta(ctx))
    rows = [[float(om), float(val)] for om, val in zip(spec.omegas, spec.values)]
    return TableResult("spectrum", ["Omega_rad_s", "N"], rows,
                       _meta("spectrum", params, extra))


def _sense_point(args):
    ctx, c_s, omega_m, gamma_sig, sql = args
    res = optimize_point(c_s, ctx, constraint="free")
    if not res.feasible:
        return [c_s, None, None, None, None, None, sql.V_M, None]
    h = ctx.hybrid(c_s, res.c_m, res.theta_s, res.theta_m)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        sp = SensingParams(hybrid=h, Omega_M=omega_m, gamma_sig=gamma_sig)
        ratio = enhancement_ratio(sp, sql)
    return [c_s, res.xi_g, res.theta_s, res.theta_m, res.c_m,
            ratio * sql.V_M, sql.V_M, ratio]


def run_sense(params: dict, threads: int = 1) -> TableResult:
    if params["epsilon"] != 0.0:
        raise ValueError("sense requires epsilon = 0 (lossless hybrid noise model)")
    ctx = _context(params)
    omega_m = params["omega_m_hz"]
    gamma_sig = params["gamma_sig_hz"]
    sql = sql_benchmark(ctx.gamma_m0, ctx.n_bar_m, gamma_sig, omega_m)
    grid = params["cs_grid"].values()
    tasks = [(ctx, c_s, omega_m, gamma_sig, sql) for c_s in grid]
    if threads == 1:
        rows = [_sense_point(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=threads if threads > 0 else None) as ex:
            rows = list(ex.map(_sense_point, tasks))
    columns = ["C_S", "xi_g", "theta_S", "theta_M", "C_M", "V_H", "V_M", "ratio"]
    extra = _derived_meta(ctx)
    extra.update({
        "sql_c_m_opt": f"{sql.c_m_opt:.12g}",
        "sql_theta_m_opt": f"{sql.theta_m_opt:.12g}",
    })
    return TableResult("sense", columns, rows, _meta("sense", params, extra))


def run_physmap(params: dict, threads: int = 1) -> TableResult:
    cavity = CavityParams(
        kappa=params["kappa_hz"],
        Delta=params["delta_hz"],
        g_om=params["g_om_hz"],
        Omega_M_bare=params["omega_m_bare_hz"],
    )
    omega_m = spring_shift_fixed_point(cavity)
    mapping = sideband_rates_from_cavity(cavity, omega_m)
    phi = cascade_phase_choice(mapping.theta_plus, mapping.theta_minus)
    columns = ["Omega_M_rad_s", "Gamma_MB_rad_s", "Gamma_MP_rad_s", "theta_M",
               "theta_plus", "theta_minus", "phi", "optical_broadening_rad_s",
               "spring_shift_rad_s"]
    row = [mapping.Omega_M, mapping.Gamma_MB, mapping.Gamma_MP, mapping.theta_M,
           mapping.theta_plus, mapping.theta_minus, phi,
           mapping.optical_broadening, mapping.Omega_M - cavity.Omega_M_bare]
    return TableResult("physmap", columns, [row], _meta("physmap", params))


_RUNNERS = {
    "steady": run_steady,
    "sweep": run_sweep,
    "heatmap": run_heatmap,
    "optimize": run_optimize,
    "spectrum": run_spectrum,
    "sense": run_sense,
    "physmap": run_physmap,
}


def run_command(command: str, params: dict, threads: int = 1, validated: bool = True) -> TableResult:
    """Dispatch one command; ``params`` must come from ``validate_params`` unless
    ``validated`` is False, in which case validation happens here."""
    if not validated:
        params = validate_params(command, params)
    if command not in _RUNNERS:
        raise ValueError(f"unknown command {command!r}")
    return _RUNNERS[command](params, threads=threads)
