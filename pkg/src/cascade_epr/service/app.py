"""FastAPI service exposing every command as a POST endpoint.

The service wraps the same runner the CLI uses; one endpoint per command under
``/v1``, with request bodies mirroring the config-file keys.  Start it with

    uvicorn cascade_epr.service.app:app --host 0.0.0.0 --port 8000

Long sweeps run synchronously in the request (the workloads are desk-scale);
``threads`` in the request body parallelizes grid cells server-side.
"""

from __future__ import annotations

import math

from fastapi import FastAPI, HTTPException

from .. import __version__
from ..config import ConfigError, validate_params
from ..runner import run_command
from .schemas import (
    HeatmapRequest,
    OptimizeRequest,
    PhysmapRequest,
    SenseRequest,
    SpectrumRequest,
    SteadyRequest,
    SweepRequest,
    TableResponse,
)

app = FastAPI(
    title="cascade-epr",
    version=__version__,
    description="Steady-state EPR entanglement and force sensing for a cascaded "
    "spin-mechanics hybrid system.",
)


def _json_safe(value):
    """Map non-finite floats to the tokens the CSV writer also uses."""
    if isinstance(value, float):
        if math.isnan(value):
            return None
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
    return value


def _execute(command: str, request) -> TableResponse:
    raw = request.model_dump(exclude_none=True)
    threads = raw.pop("threads", 1)
    try:
        params = validate_params(command, raw)
    except ConfigError as err:
        raise HTTPException(status_code=422, detail=str(err)) from err
    try:
        table = run_command(command, params, threads=threads)
    except Exception as err:
        raise HTTPException(
            status_code=400, detail=f"{type(err).__name__}: {err}"
        ) from err
    return TableResponse(
        command=table.command,
        columns=table.columns,
        rows=[[_json_safe(v) for v in row] for row in table.rows],
        meta=table.meta,
    )


@app.get("/v1/health")
def health() -> dict:
    return {"status": "ok", "version": __version__}


@app.post("/v1/steady", response_model=TableResponse)
def steady(request: SteadyRequest) -> TableResponse:
    return _execute("steady", request)


@app.post("/v1/sweep", response_model=TableResponse)
def sweep(request: SweepRequest) -> TableResponse:
    return _execute("sweep", request)


@app.post("/v1/heatmap", response_model=TableResponse)
def heatmap(request: HeatmapRequest) -> TableResponse:
    return _execute("heatmap", request)


@app.post("/v1/optimize", response_model=TableResponse)
def optimize(request: OptimizeRequest) -> TableResponse:
    return _execute("optimize", request)


@app.post("/v1/spectrum", response_model=TableResponse)
def spectrum(request: SpectrumRequest) -> TableResponse:
    return _execute("spectrum", request)


@app.post("/v1/sense", response_model=TableResponse)
def sense(request: SenseRequest) -> TableResponse:
    return _execute("sense", request)


@app.post("/v1/physmap", response_model=TableResponse)
def physmap(request: PhysmapRequest) -> TableResponse:
    return _execute("physmap", request)
