"""Run configuration: INI file parsing, CLI overrides, exhaustive validation.

All defaults mirror the production settings: 5 bps costs, WS in {5, 10},
threshold pairs from the low-L/high-S clusters, 20-day state-noise window,
10-lag neural transition, 60-day Z-score window.
"""

from __future__ import annotations

import configparser
import os
from dataclasses import dataclass, field, fields
from typing import List, Optional, Tuple

from .errors import ConfigError
from .factor_engine import EngineOptions
from .market_data import DEFAULT_MODEL_FACTORS, SynthConfig

ALL_MODES = ("KF", "UKF", "OLS", "BENCH")
DEFAULT_THRESHOLDS = ((0.5, 2.0), (1.0, 1.5), (1.5, 2.0))


@dataclass
class RunConfig:
    # data
    source: str = "synth"  # "synth" | "csv"
    assets_csv: Optional[str] = None
    index_csv: Optional[str] = None
    top_n: int = 2000
    factor_names: Tuple[str, ...] = DEFAULT_MODEL_FACTORS
    synth: SynthConfig = field(default_factory=SynthConfig)
    # model
    modes: Tuple[str, ...] = ("KF", "UKF", "OLS", "BENCH")
    transition: str = "neural"
    psi_window: int = 20
    d_window: int = 20
    neural_lags: int = 10
    neural_epochs: int = 500
    standardize: bool = True
    add_intercept: bool = False
    cold_start_days: int = 21
    prior_var: float = 1.0
    # strategy
    ws_list: Tuple[int, ...] = (5, 10)
    thresholds: Tuple[Tuple[float, float], ...] = DEFAULT_THRESHOLDS
    z_window: int = 60
    # costs / portfolio
    tc_bps_list: Tuple[float, ...] = (5.0,)
    hedge: bool = True
    hedge_rf_financing: bool = True
    index_tc_bps: float = 0.0
    blend: bool = False
    blend_window_years: int = 10
    # output / run
    out_dir: str = "runs/latest"
    seed: int = 0
    emit_signals: bool = False
    emit_diagnostics: bool = False

    def engine_options(self) -> EngineOptions:
        return EngineOptions(
            standardize=self.standardize,
            add_intercept=self.add_intercept,
            psi_window=self.psi_window,
            d_window=self.d_window,
            cold_start_days=self.cold_start_days,
            prior_var=self.prior_var,
            transition=self.transition,
            neural_lags=self.neural_lags,
            neural_epochs=self.neural_epochs,
            seed=self.seed,
        )

    def validate(self) -> List[str]:
        """Every problem found, not just the first."""
        problems: List[str] = []
        if self.source not in ("synth", "csv"):
            problems.append(f"data source must be 'synth' or 'csv', got {self.source!r}")
        if self.source == "csv":
            for label, path in (("assets_csv", self.assets_csv), ("index_csv", self.index_csv)):
                if not path:
                    problems.append(f"{label} is required for csv source")
                elif not os.path.exists(path):
                    problems.append(f"{label} path does not exist: {path}")
        bad_modes = [m for m in self.modes if m not in ALL_MODES]
        if bad_modes:
            problems.append(f"unknown mode(s) {bad_modes}; valid: {list(ALL_MODES)}")
        if not self.modes:
            problems.append("modes must be non-empty")
        if not self.ws_list:
            problems.append("ws grid must be non-empty")
        if any(ws < 1 for ws in self.ws_list):
            problems.append("ws values must be >= 1")
        if not self.thresholds:
            problems.append("threshold grid must be non-empty")
        for pair in self.thresholds:
            if len(pair) != 2 or pair[0] <= 0 or pair[1] <= 0:
                problems.append(f"bad threshold pair {pair}; need positive L/S")
        if self.z_window < 5:
            problems.append("z_window must be >= 5")
        if not self.tc_bps_list:
            problems.append("tc_bps grid must be non-empty")
        if any(tc < 0 for tc in self.tc_bps_list):
            problems.append("tc_bps values must be >= 0")
        if self.transition not in ("neural", "identity"):
            problems.append(f"transition must be 'neural' or 'identity', got {self.transition!r}")
        if self.top_n < 1:
            problems.append("top_n must be >= 1")
        if self.psi_window < 2 or self.d_window < 1:
            problems.append("psi_window must be >= 2 and d_window >= 1")
        if self.neural_lags < 1 or self.neural_epochs < 1:
            problems.append("neural_lags and neural_epochs must be >= 1")
        if not self.out_dir:
            problems.append("out_dir must be set")
        return problems

    def validated(self) -> "RunConfig":
        problems = self.validate()
        if problems:
            raise ConfigError(problems)
        return self


def _parse_bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _parse_list(text: str, cast):
    return tuple(cast(part.strip()) for part in text.split(",") if part.strip())


def _parse_thresholds(text: str) -> Tuple[Tuple[float, float], ...]:
    pairs = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        left, _, right = part.partition("/")
        pairs.append((float(left), float(right)))
    return tuple(pairs)


def load_config(path: Optional[str] = None, overrides: Optional[dict] = None) -> RunConfig:
    """Build a RunConfig from an INI file plus flat override values.

    Unknown sections/keys are reported via ConfigError; overrides use the
    dataclass field names.
    """
    cfg = RunConfig()
    problems: List[str] = []
    if path:
        if not os.path.exists(path):
            raise ConfigError([f"config file not found: {path}"])
        parser = configparser.ConfigParser()
        try:
            parser.read(path)
        except configparser.Error as exc:
            raise ConfigError([f"config parse error: {exc}"]) from exc

        def get(section, key, cast, default):
            if parser.has_option(section, key):
                raw = parser.get(section, key)
                try:
                    return cast(raw)
                except (ValueError, TypeError) as exc:
                    problems.append(f"[{section}] {key}: {exc}")
            return default

        cfg.source = get("data", "source", str, cfg.source).strip()
        cfg.assets_csv = get("data", "assets_csv", str, cfg.assets_csv) or None
        cfg.index_csv = get("data", "index_csv", str, cfg.index_csv) or None
        cfg.top_n = get("data", "top_n", int, cfg.top_n)
        factors = get("data", "factors", lambda s: _parse_list(s, str), None)
        if factors:
            cfg.factor_names = factors

        if parser.has_section("synth"):
            synth_kwargs = {}
            casts = {
                "n_assets": int, "n_factors": int, "days": int,
                "factor_process": str, "phi": float, "sigma_f": float,
                "sigma_r": float, "exposure_persistence": float, "seed": int,
                "market_vol": float, "beta_low": float, "beta_high": float,
                "mispricing_half_life": float, "mispricing_scale": float,
                "rf_annual": float, "unit_exposures": _parse_bool,
                "start_date": str,
            }
            for key in parser.options("synth"):
                if key not in casts:
                    problems.append(f"[synth] unknown key {key!r}")
                    continue
                try:
                    synth_kwargs[key] = casts[key](parser.get("synth", key))
                except ValueError as exc:
                    problems.append(f"[synth] {key}: {exc}")
            if not problems:
                try:
                    cfg.synth = SynthConfig(**synth_kwargs)
                except Exception as exc:
                    problems.append(f"[synth] {exc}")

        cfg.modes = get("model", "modes", lambda s: _parse_list(s, lambda x: x.upper()), cfg.modes)
        cfg.transition = get("model", "transition", str, cfg.transition).strip()
        cfg.psi_window = get("model", "psi_window", int, cfg.psi_window)
        cfg.d_window = get("model", "d_window", int, cfg.d_window)
        cfg.neural_lags = get("model", "neural_lags", int, cfg.neural_lags)
        cfg.neural_epochs = get("model", "neural_epochs", int, cfg.neural_epochs)
        cfg.standardize = get("model", "standardize", _parse_bool, cfg.standardize)
        cfg.add_intercept = get("model", "add_intercept", _parse_bool, cfg.add_intercept)
        cfg.cold_start_days = get("model", "cold_start_days", int, cfg.cold_start_days)
        cfg.prior_var = get("model", "prior_var", float, cfg.prior_var)

        cfg.ws_list = get("strategy", "ws", lambda s: _parse_list(s, int), cfg.ws_list)
        cfg.thresholds = get("strategy", "thresholds", _parse_thresholds, cfg.thresholds)
        cfg.z_window = get("strategy", "z_window", int, cfg.z_window)

        cfg.tc_bps_list = get("costs", "tc_bps", lambda s: _parse_list(s, float), cfg.tc_bps_list)
        cfg.hedge = get("portfolio", "hedge", _parse_bool, cfg.hedge)
        cfg.hedge_rf_financing = get(
            "portfolio", "hedge_rf_financing", _parse_bool, cfg.hedge_rf_financing
        )
        cfg.index_tc_bps = get("portfolio", "index_tc_bps", float, cfg.index_tc_bps)
        cfg.blend = get("portfolio", "blend", _parse_bool, cfg.blend)
        cfg.blend_window_years = get("portfolio", "blend_window_years", int, cfg.blend_window_years)

        cfg.out_dir = get("output", "out_dir", str, cfg.out_dir).strip()
        cfg.emit_signals = get("output", "emit_signals", _parse_bool, cfg.emit_signals)
        cfg.emit_diagnostics = get("output", "emit_diagnostics", _parse_bool, cfg.emit_diagnostics)
        cfg.seed = get("run", "seed", int, cfg.seed)

    if problems:
        raise ConfigError(problems)

    if overrides:
        valid = {f.name for f in fields(RunConfig)}
        for key, value in overrides.items():
            if value is None:
                continue
            if key not in valid:
                raise ConfigError([f"unknown config override {key!r}"])
            setattr(cfg, key, value)
    return cfg


def config_as_dict(cfg: RunConfig) -> dict:
    """JSON-ready echo of the configuration (for the summary header)."""
    synth = {
        "n_assets": cfg.synth.n_assets,
        "n_factors": cfg.synth.n_factors,
        "days": cfg.synth.days,
        "factor_process": cfg.synth.factor_process,
        "phi": cfg.synth.phi,
        "sigma_f": cfg.synth.sigma_f,
        "sigma_r": cfg.synth.sigma_r,
        "exposure_persistence": cfg.synth.exposure_persistence,
        "seed": cfg.synth.seed,
        "market_vol": cfg.synth.market_vol,
        "beta_low": cfg.synth.beta_low,
        "beta_high": cfg.synth.beta_high,
        "mispricing_half_life": cfg.synth.mispricing_half_life,
        "mispricing_scale": cfg.synth.mispricing_scale,
        "rf_annual": cfg.synth.rf_annual,
        "unit_exposures": cfg.synth.unit_exposures,
        "start_date": cfg.synth.start_date,
    }
    return {
        "source": cfg.source,
        "assets_csv": cfg.assets_csv,
        "index_csv": cfg.index_csv,
        "top_n": cfg.top_n,
        "factor_names": list(cfg.factor_names),
        "synth": synth if cfg.source == "synth" else None,
        "modes": list(cfg.modes),
        "transition": cfg.transition,
        "psi_window": cfg.psi_window,
        "d_window": cfg.d_window,
        "neural_lags": cfg.neural_lags,
        "neural_epochs": cfg.neural_epochs,
        "standardize": cfg.standardize,
        "add_intercept": cfg.add_intercept,
        "cold_start_days": cfg.cold_start_days,
        "prior_var": cfg.prior_var,
        "ws_list": list(cfg.ws_list),
        "thresholds": [list(p) for p in cfg.thresholds],
        "z_window": cfg.z_window,
        "tc_bps_list": list(cfg.tc_bps_list),
        "hedge": cfg.hedge,
        "hedge_rf_financing": cfg.hedge_rf_financing,
        "index_tc_bps": cfg.index_tc_bps,
        "blend": cfg.blend,
        "blend_window_years": cfg.blend_window_years,
        "seed": cfg.seed,
    }
