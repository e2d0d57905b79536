"""Pydantic request/response models for the HTTP service.

These mirror the run configuration one-to-one so the CLI can build a request
from flags/INI and either execute it locally or POST it unchanged.
"""

from __future__ import annotations

from typing import Dict, List, Literal, Optional, Tuple

from pydantic import BaseModel, Field

from ..config import DEFAULT_THRESHOLDS, RunConfig
from ..market_data import DEFAULT_MODEL_FACTORS, SynthConfig


class SynthSpec(BaseModel):
    n_assets: int = 100
    n_factors: int = 4
    days: int = 1000
    factor_process: Literal["random_walk", "ar1"] = "random_walk"
    phi: float = 0.0
    sigma_f: float = 0.001
    sigma_r: float = 0.02
    exposure_persistence: float = 0.99
    seed: int = 0
    market_vol: float = 0.0
    beta_low: float = 1.0
    beta_high: float = 1.0
    mispricing_half_life: float = 5.0
    mispricing_scale: float = 0.0
    rf_annual: float = 0.0
    unit_exposures: bool = False
    start_date: str = "2000-01-03"

    def to_config(self) -> SynthConfig:
        return SynthConfig(**self.model_dump())

    @classmethod
    def from_config(cls, cfg: SynthConfig) -> "SynthSpec":
        return cls(
            n_assets=cfg.n_assets,
            n_factors=cfg.n_factors,
            days=cfg.days,
            factor_process=cfg.factor_process,
            phi=cfg.phi,
            sigma_f=cfg.sigma_f,
            sigma_r=cfg.sigma_r,
            exposure_persistence=cfg.exposure_persistence,
            seed=cfg.seed,
            market_vol=cfg.market_vol,
            beta_low=cfg.beta_low,
            beta_high=cfg.beta_high,
            mispricing_half_life=cfg.mispricing_half_life,
            mispricing_scale=cfg.mispricing_scale,
            rf_annual=cfg.rf_annual,
            unit_exposures=cfg.unit_exposures,
            start_date=cfg.start_date,
        )


class SynthRequest(BaseModel):
    synth: SynthSpec = Field(default_factory=SynthSpec)
    out_dir: str
    write_exposures: bool = True
    write_factors: bool = True


class SynthResponse(BaseModel):
    assets_csv: str
    index_csv: str
    exposures_csv: Optional[str] = None
    factors_csv: Optional[str] = None
    days: int
    assets: int


class FeaturesRequest(BaseModel):
    assets_csv: str
    index_csv: str
    out_csv: str


class FeaturesResponse(BaseModel):
    exposures_csv: str
    rows: int
    days: int
    assets: int


class BacktestRequest(BaseModel):
    source: Literal["synth", "csv"] = "synth"
    assets_csv: Optional[str] = None
    index_csv: Optional[str] = None
    top_n: int = 2000
    factor_names: List[str] = Field(default_factory=lambda: list(DEFAULT_MODEL_FACTORS))
    synth: SynthSpec = Field(default_factory=SynthSpec)
    modes: List[Literal["KF", "UKF", "OLS", "BENCH"]] = Field(
        default_factory=lambda: ["KF", "UKF", "OLS", "BENCH"]
    )
    transition: Literal["neural", "identity"] = "neural"
    psi_window: int = 20
    d_window: int = 20
    neural_lags: int = 10
    neural_epochs: int = 500
    standardize: bool = True
    add_intercept: bool = False
    cold_start_days: int = 21
    prior_var: float = 1.0
    ws_list: List[int] = Field(default_factory=lambda: [5, 10])
    thresholds: List[Tuple[float, float]] = Field(
        default_factory=lambda: [tuple(p) for p in DEFAULT_THRESHOLDS]
    )
    z_window: int = 60
    tc_bps_list: List[float] = Field(default_factory=lambda: [5.0])
    hedge: bool = True
    hedge_rf_financing: bool = True
    index_tc_bps: float = 0.0
    blend: bool = False
    blend_window_years: int = 10
    out_dir: str = "runs/latest"
    seed: int = 0
    emit_signals: bool = False
    emit_diagnostics: bool = False

    def to_run_config(self) -> RunConfig:
        return RunConfig(
            source=self.source,
            assets_csv=self.assets_csv,
            index_csv=self.index_csv,
            top_n=self.top_n,
            factor_names=tuple(self.factor_names),
            synth=self.synth.to_config(),
            modes=tuple(self.modes),
            transition=self.transition,
            psi_window=self.psi_window,
            d_window=self.d_window,
            neural_lags=self.neural_lags,
            neural_epochs=self.neural_epochs,
            standardize=self.standardize,
            add_intercept=self.add_intercept,
            cold_start_days=self.cold_start_days,
            prior_var=self.prior_var,
            ws_list=tuple(self.ws_list),
            thresholds=tuple(tuple(p) for p in self.thresholds),
            z_window=self.z_window,
            tc_bps_list=tuple(self.tc_bps_list),
            hedge=self.hedge,
            hedge_rf_financing=self.hedge_rf_financing,
            index_tc_bps=self.index_tc_bps,
            blend=self.blend,
            blend_window_years=self.blend_window_years,
            out_dir=self.out_dir,
            seed=self.seed,
            emit_signals=self.emit_signals,
            emit_diagnostics=self.emit_diagnostics,
        )

    @classmethod
    def from_run_config(cls, cfg: RunConfig) -> "BacktestRequest":
        return cls(
            source=cfg.source,
            assets_csv=cfg.assets_csv,
            index_csv=cfg.index_csv,
            top_n=cfg.top_n,
            factor_names=list(cfg.factor_names),
            synth=SynthSpec.from_config(cfg.synth),
            modes=list(cfg.modes),
            transition=cfg.transition,
            psi_window=cfg.psi_window,
            d_window=cfg.d_window,
            neural_lags=cfg.neural_lags,
            neural_epochs=cfg.neural_epochs,
            standardize=cfg.standardize,
            add_intercept=cfg.add_intercept,
            cold_start_days=cfg.cold_start_days,
            prior_var=cfg.prior_var,
            ws_list=list(cfg.ws_list),
            thresholds=[tuple(p) for p in cfg.thresholds],
            z_window=cfg.z_window,
            tc_bps_list=list(cfg.tc_bps_list),
            hedge=cfg.hedge,
            hedge_rf_financing=cfg.hedge_rf_financing,
            index_tc_bps=cfg.index_tc_bps,
            blend=cfg.blend,
            blend_window_years=cfg.blend_window_years,
            out_dir=cfg.out_dir,
            seed=cfg.seed,
            emit_signals=cfg.emit_signals,
            emit_diagnostics=cfg.emit_diagnostics,
        )


class BacktestResponse(BaseModel):
    out_dir: str
    summary: Dict
    files: List[str]


class ReportRequest(BaseModel):
    run_dir: str


class ReportResponse(BaseModel):
    consistent: bool
    max_rel_diff: float
    points: Dict


class ErrorBody(BaseModel):
    error_type: str
    message: str
    problems: Optional[List[str]] = None


class HealthResponse(BaseModel):
    status: str
    version: str
