"""Pydantic request/response models for the HTTP service.

Field names and units match the config-file keys one to one: ``_hz`` rates are
plain Hz (scaled to angular units on ingestion by the shared validator), grids
are ``start:stop:count:{lin|log}`` strings.
"""

from __future__ import annotations

from pydantic import BaseModel, Field

__all__ = [
    "SteadyRequest",
    "SweepRequest",
    "HeatmapRequest",
    "OptimizeRequest",
    "SpectrumRequest",
    "SenseRequest",
    "PhysmapRequest",
    "TableResponse",
    "REQUEST_MODELS",
]


class _Base(BaseModel):
    threads: int = Field(default=1, description="worker processes (0 = auto)")


class _Phys(_Base):
    gamma_s0_hz: float = Field(gt=0, description="spin intrinsic linewidth, Hz")
    n_bar_s: float = Field(ge=0, description="spin thermal occupancy")
    gamma_m0_hz: float = Field(gt=0, description="mechanical intrinsic linewidth, Hz")
    n_bar_m: float = Field(ge=0, description="mechanical thermal occupancy")
    epsilon: float = Field(ge=0, le=1, description="transmission power loss")


class SteadyRequest(_Phys):
    c_s: float = Field(ge=0)
    c_m: float = Field(ge=0)
    theta_s_rad: float
    theta_m_rad: float


class SweepRequest(_Phys):
    cs_grid: str = Field(description="C_S grid, start:stop:count:{lin|log}")
    modes: str | None = Field(default=None, description="comma list: free,symmetric")
    conditional: bool | None = None


class HeatmapRequest(_Phys):
    cs_grid: str
    cm_grid: str


class OptimizeRequest(_Phys):
    c_s: float = Field(gt=0)
    mode: str | None = Field(default=None, description="free, symmetric or cond_qnd")
    conditional: bool | None = None


class SpectrumRequest(_Phys):
    c_s: float = Field(ge=0)
    c_m: float = Field(ge=0)
    theta_s_rad: float
    theta_m_rad: float
    omega_grid_hz: str
    spectrum_kind: str = Field(description="mech or hybrid")
    omega_m_hz: float | None = Field(default=None, gt=0)


class SenseRequest(_Phys):
    cs_grid: str
    gamma_sig_hz: float = Field(gt=0)
    omega_m_hz: float | None = Field(default=None, gt=0)


class PhysmapRequest(_Base):
    kappa_hz: float = Field(gt=0)
    delta_hz: float
    g_om_hz: float = Field(ge=0)
    omega_m_bare_hz: float = Field(gt=0)


class TableResponse(BaseModel):
    command: str
    columns: list[str]
    rows: list[list[float | str | None]]
    meta: dict[str, str]


REQUEST_MODELS = {
    "steady": SteadyRequest,
    "sweep": SweepRequest,
    "heatmap": HeatmapRequest,
    "optimize": OptimizeRequest,
    "spectrum": SpectrumRequest,
    "sense": SenseRequest,
    "physmap": PhysmapRequest,
}
