"""FastAPI service exposing the engine's operations."""

from __future__ import annotations

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from .. import __version__
from ..errors import ConfigError, InvalidInputError, PanelFormatError, StatArbError
from . import ops
from .schemas import (
    BacktestRequest,
    BacktestResponse,
    ErrorBody,
    FeaturesRequest,
    FeaturesResponse,
    HealthResponse,
    ReportRequest,
    ReportResponse,
    SynthRequest,
    SynthResponse,
)

_CLIENT_ERRORS = (ConfigError, InvalidInputError, PanelFormatError)


def create_app() -> FastAPI:
    app = FastAPI(title="statarb", version=__version__)

    @app.exception_handler(StatArbError)
    async def _statarb_error(request: Request, exc: StatArbError) -> JSONResponse:
        status = 400 if isinstance(exc, _CLIENT_ERRORS) else 500
        body = ErrorBody(
            error_type=type(exc).__name__,
            message=str(exc),
            problems=getattr(exc, "problems", None),
        )
        return JSONResponse(status_code=status, content=body.model_dump())

    @app.get("/health", response_model=HealthResponse)
    def health() -> HealthResponse:
        return HealthResponse(status="ok", version=__version__)

    @app.post("/synth", response_model=SynthResponse)
    def synth(req: SynthRequest) -> SynthResponse:
        return ops.run_synth(req)

    @app.post("/features", response_model=FeaturesResponse)
    def features(req: FeaturesRequest) -> FeaturesResponse:
        return ops.run_features(req)

    @app.post("/backtest", response_model=BacktestResponse)
    def backtest(req: BacktestRequest) -> BacktestResponse:
        return ops.run_backtest_op(req)

    @app.post("/report", response_model=ReportResponse)
    def report(req: ReportRequest) -> ReportResponse:
        return ops.run_report(req)

    return app


app = create_app()
