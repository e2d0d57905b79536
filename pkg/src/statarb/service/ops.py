"""Operation handlers shared by the HTTP service and the local CLI path."""

from __future__ import annotations

import os

import numpy as np
import pandas as pd

from ..backtest import report_from_dir, run_backtest
from ..market_data import build_exposures, load_panel, synth_generate, write_panel
from .schemas import (
    BacktestRequest,
    BacktestResponse,
    FeaturesRequest,
    FeaturesResponse,
    ReportRequest,
    ReportResponse,
    SynthRequest,
    SynthResponse,
)

_FLOAT_FMT = "%.12g"


def run_synth(req: SynthRequest) -> SynthResponse:
    """Generate a synthetic market and write it in the CSV panel schema."""
    cfg = req.synth.to_config()
    raw, exposures, f_path = synth_generate(cfg)
    os.makedirs(req.out_dir, exist_ok=True)
    assets_csv = os.path.join(req.out_dir, "assets.csv")
    index_csv = os.path.join(req.out_dir, "index.csv")
    write_panel(raw, assets_csv, index_csv)

    exposures_csv = factors_csv = None
    if req.write_exposures:
        exposures_csv = os.path.join(req.out_dir, "exposures.csv")
        _write_exposures_csv(exposures, exposures_csv)
    if req.write_factors:
        factors_csv = os.path.join(req.out_dir, "factors.csv")
        cols = {"date": raw.dates.strftime("%Y-%m-%d")}
        for j in range(cfg.n_factors):
            cols[f"f_x{j}"] = f_path[:, j]
        pd.DataFrame(cols).to_csv(factors_csv, index=False, float_format=_FLOAT_FMT)

    return SynthResponse(
        assets_csv=assets_csv,
        index_csv=index_csv,
        exposures_csv=exposures_csv,
        factors_csv=factors_csv,
        days=raw.n_days,
        assets=raw.n_assets,
    )


def _write_exposures_csv(exposures, path) -> None:
    t_len = len(exposures.dates)
    n = len(exposures.assets)
    names = sorted(exposures.values)
    cols = {
        "date": np.repeat(exposures.dates.strftime("%Y-%m-%d"), n),
        "asset_id": np.tile(exposures.assets, t_len),
    }
    for name in names:
        cols[name] = exposures.values[name].ravel()
    pd.DataFrame(cols).to_csv(path, index=False, float_format=_FLOAT_FMT)


def run_features(req: FeaturesRequest) -> FeaturesResponse:
    """Compute the five risk factors from a CSV panel."""
    raw = load_panel(req.assets_csv, req.index_csv)
    exposures = build_exposures(raw)
    out_dir = os.path.dirname(req.out_csv)
    if out_dir:
        os.makedirs(out_dir, exist_ok=True)
    _write_exposures_csv(exposures, req.out_csv)
    return FeaturesResponse(
        exposures_csv=req.out_csv,
        rows=raw.n_days * raw.n_assets,
        days=raw.n_days,
        assets=raw.n_assets,
    )


def run_backtest_op(req: BacktestRequest) -> BacktestResponse:
    report = run_backtest(req.to_run_config())
    return BacktestResponse(
        out_dir=report.out_dir, summary=report.summary, files=report.files
    )


def run_report(req: ReportRequest) -> ReportResponse:
    result = report_from_dir(req.run_dir)
    return ReportResponse(
        consistent=result["consistent"],
        max_rel_diff=result["max_rel_diff"],
        points=result["points"],
    )
