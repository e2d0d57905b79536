"""End-to-end orchestration: panel -> engines -> signals -> ledgers -> reports.

Emits, per grid point, the accounting ledger CSV and a plot-ready series CSV
(equity, drawdown, invested fraction, trades); per mode, Sharpe-percentile
tables by (transaction cost, window size); and a single versioned summary.json
whose every number is recomputable from the emitted CSVs. Fully deterministic
for a fixed configuration and seed.
"""

from __future__ import annotations

import json
import os
import time
from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

import numpy as np
import pandas as pd

from .analytics import PerfSummary, percentile_table, perf_summary, sharpe_annual
from .config import RunConfig, config_as_dict
from .errors import StatArbError
from .factor_engine import EngineResult, engine_sweep
from .market_data import (
    build_exposures,
    build_factor_panel,
    load_panel,
    synth_factor_panel,
)
from .portfolio import Ledger, blend_series, build_ledger
from .strategy import StrategyParams, signal_frames

SUMMARY_SCHEMA_VERSION = 1
FLOAT_FMT = "%.12g"


@dataclass(frozen=True)
class GridPoint:
    mode: str
    ws: int
    long_z: float
    short_z: float
    tc_bps: float

    @property
    def point_id(self) -> str:
        return (
            f"{self.mode.lower()}_ws{self.ws}_L{self.long_z:g}"
            f"_S{self.short_z:g}_tc{self.tc_bps:g}"
        )

    @property
    def signal_id(self) -> str:
        return f"{self.mode.lower()}_ws{self.ws}_L{self.long_z:g}_S{self.short_z:g}"


@dataclass
class BacktestReport:
    out_dir: str
    summary: dict
    files: List[str]

    def to_json(self) -> str:
        return json.dumps(self.summary, sort_keys=True, indent=2)


def _build_panel(cfg: RunConfig):
    if cfg.source == "synth":
        return synth_factor_panel(cfg.synth)[0]
    raw = load_panel(cfg.assets_csv, cfg.index_csv)
    exposures = build_exposures(raw)
    return build_factor_panel(raw, exposures, factor_names=cfg.factor_names, top_n=cfg.top_n)


def _write_series_csv(path, dates, ledger: Ledger, invested_frac, drawdown) -> None:
    frame = pd.DataFrame(
        {
            "date": dates.strftime("%Y-%m-%d"),
            "net_excess": ledger.net_excess,
            "equity": np.cumprod(1.0 + ledger.net_excess),
            "drawdown": drawdown,
            "invested_frac": invested_frac,
            "trades": ledger.trades,
            "turnover": ledger.turnover,
        }
    )
    frame.to_csv(path, index=False, float_format=FLOAT_FMT)


def _write_diag_csv(path, result: EngineResult, factor_names) -> None:
    cols = {"date": result.dates.strftime("%Y-%m-%d")}
    for i, name in enumerate(factor_names):
        cols[f"f_ols_{name}"] = result.f_ols[:, i]
    for i, name in enumerate(factor_names):
        cols[f"f_filt_{name}"] = result.f_filt[:, i]
    for i, name in enumerate(factor_names):
        cols[f"f_pred_{name}"] = result.f_pred[:, i]
    cols["cov_trace"] = result.cov_trace
    for i, name in enumerate(factor_names):
        cols[f"psi_{name}"] = result.psi[:, i]
    pd.DataFrame(cols).to_csv(path, index=False, float_format=FLOAT_FMT)


def _write_signals_csv(path, panel, spread_mat, z, positions) -> None:
    t_len, n = positions.shape
    take = positions != 0
    take |= np.isfinite(z) & (np.abs(z) > 0)
    rows = np.nonzero(take)
    frame = pd.DataFrame(
        {
            "date": panel.dates[rows[0]].strftime("%Y-%m-%d"),
            "asset_id": panel.assets[rows[1]],
            "spread": spread_mat[rows],
            "z": z[rows],
            "position": positions[rows],
        }
    )
    frame.to_csv(path, index=False, float_format=FLOAT_FMT)


def run_backtest(cfg: RunConfig) -> BacktestReport:
    """Execute the full grid and emit all declared artifacts."""
    cfg.validated()
    started = time.time()
    out_dir = cfg.out_dir
    os.makedirs(out_dir, exist_ok=True)

    panel = _build_panel(cfg)
    universe_size = panel.universe.sum(axis=1).astype(float)
    index_excess = panel.index_excess()
    years = panel.dates.year.to_numpy()

    engine_modes = [m for m in cfg.modes if m != "BENCH"]
    engines: Dict[str, EngineResult] = {}
    for mode in engine_modes:
        engines[mode] = engine_sweep(panel, mode, cfg.engine_options())

    files: List[str] = []
    results: Dict[str, dict] = {}
    annual_rows: List[dict] = []
    sharpes_by_mode: Dict[str, Dict[Tuple[float, int], List[float]]] = {
        m: {} for m in cfg.modes
    }

    if cfg.emit_diagnostics:
        for mode in engine_modes:
            path = os.path.join(out_dir, f"diagnostics_{mode.lower()}.csv")
            _write_diag_csv(path, engines[mode], panel.factor_names)
            files.append(path)

    for mode in cfg.modes:
        r_filt = engines[mode].r_filt if mode != "BENCH" else None
        signal_mode = "benchmark" if mode == "BENCH" else "model"
        for ws in cfg.ws_list:
            for long_z, short_z in cfg.thresholds:
                params = StrategyParams(
                    ws=ws, long_entry=long_z, short_entry=short_z, z_window=cfg.z_window
                )
                spread_mat, z, positions = signal_frames(panel, r_filt, params, signal_mode)
                invested = (positions != 0).sum(axis=1).astype(float)
                with np.errstate(invalid="ignore", divide="ignore"):
                    invested_frac = np.where(universe_size > 0, invested / universe_size, 0.0)

                if cfg.emit_signals:
                    sig_point = GridPoint(mode, ws, long_z, short_z, cfg.tc_bps_list[0])
                    path = os.path.join(out_dir, f"signals_{sig_point.signal_id}.csv")
                    _write_signals_csv(path, panel, spread_mat, z, positions)
                    files.append(path)

                for tc in cfg.tc_bps_list:
                    point = GridPoint(mode, ws, long_z, short_z, tc)
                    ledger = build_ledger(
                        panel,
                        positions,
                        tc_bps=tc,
                        hedge=cfg.hedge,
                        hedge_rf_financing=cfg.hedge_rf_financing,
                        index_tc_bps=cfg.index_tc_bps,
                    )
                    perf = perf_summary(
                        panel.dates,
                        ledger.net_excess,
                        ledger.trades,
                        ledger.turnover,
                        invested,
                        universe_size,
                    )
                    ledger_path = os.path.join(out_dir, f"ledger_{point.point_id}.csv")
                    ledger.to_csv(ledger_path)
                    series_path = os.path.join(out_dir, f"series_{point.point_id}.csv")
                    _write_series_csv(
                        series_path, panel.dates, ledger, invested_frac, perf.drawdown_series
                    )
                    files.extend([ledger_path, series_path])

                    entry = {
                        "mode": mode,
                        "ws": ws,
                        "long_z": long_z,
                        "short_z": short_z,
                        "tc_bps": tc,
                        "perf": perf.as_dict(),
                        "files": {
                            "ledger": os.path.basename(ledger_path),
                            "series": os.path.basename(series_path),
                        },
                    }

                    if cfg.blend:
                        blended, weights = blend_series(
                            ledger.net_excess,
                            index_excess,
                            years,
                            window_years=cfg.blend_window_years,
                        )
                        blend_perf = perf_summary(
                            panel.dates, blended, ledger.trades, ledger.turnover,
                            invested, universe_size,
                        )
                        blend_path = os.path.join(out_dir, f"blend_{point.point_id}.csv")
                        pd.DataFrame(
                            {
                                "date": panel.dates.strftime("%Y-%m-%d"),
                                "blended_excess": blended,
                                "weight_long_only": [
                                    weights[y][0] for y in years
                                ],
                                "weight_long_short": [
                                    weights[y][1] for y in years
                                ],
                            }
                        ).to_csv(blend_path, index=False, float_format=FLOAT_FMT)
                        files.append(blend_path)
                        entry["blend"] = {
                            "perf": blend_perf.as_dict(),
                            "weights_by_year": {
                                str(y): list(weights[y]) for y in sorted(weights)
                            },
                            "file": os.path.basename(blend_path),
                        }

                    results[point.point_id] = entry

                    bucket = sharpes_by_mode[mode].setdefault((tc, ws), [])
                    for ys in perf.years:
                        annual_rows.append(
                            {
                                "mode": mode,
                                "ws": ws,
                                "long_z": long_z,
                                "short_z": short_z,
                                "tc_bps": tc,
                                "year": ys.year,
                                "sharpe": np.nan if ys.sharpe is None else ys.sharpe,
                                "flagged": ys.flagged,
                            }
                        )
                        if ys.sharpe is not None and not np.isnan(ys.sharpe):
                            bucket.append(ys.sharpe)

    annual_path = os.path.join(out_dir, "annual_sharpes.csv")
    pd.DataFrame(annual_rows).to_csv(annual_path, index=False, float_format=FLOAT_FMT)
    files.append(annual_path)

    table_files = {}
    for mode in cfg.modes:
        frame, text = percentile_table(sharpes_by_mode[mode])
        csv_path = os.path.join(out_dir, f"percentiles_{mode.lower()}.csv")
        txt_path = os.path.join(out_dir, f"percentiles_{mode.lower()}.txt")
        frame.to_csv(csv_path, float_format=FLOAT_FMT)
        with open(txt_path, "w") as fh:
            fh.write(text + "\n")
        files.extend([csv_path, txt_path])
        table_files[mode] = os.path.basename(csv_path)

    summary = {
        "schema_version": SUMMARY_SCHEMA_VERSION,
        "config": config_as_dict(cfg),
        "panel": {
            "days": int(panel.n_days),
            "assets": int(panel.n_assets),
            "factors": list(panel.factor_names),
            "first_date": str(panel.dates[0].date()),
            "last_date": str(panel.dates[-1].date()),
        },
        "results": results,
        "percentile_tables": table_files,
        "annual_sharpes_file": os.path.basename(annual_path),
        "elapsed_seconds": round(time.time() - started, 3),
    }
    report = BacktestReport(out_dir=out_dir, summary=summary, files=files)
    summary_path = os.path.join(out_dir, "summary.json")
    stable = dict(summary)
    stable.pop("elapsed_seconds")  # keep summary.json byte-stable across runs
    with open(summary_path, "w") as fh:
        fh.write(json.dumps(stable, sort_keys=True, indent=2) + "\n")
    report.files.append(summary_path)
    return report


def _recompute_point(run_dir: str, entry: dict) -> dict:
    ledger = pd.read_csv(os.path.join(run_dir, entry["files"]["ledger"]))
    series = pd.read_csv(os.path.join(run_dir, entry["files"]["series"]))
    dates = pd.DatetimeIndex(pd.to_datetime(ledger["date"]))
    ones = np.ones(len(dates))
    perf = perf_summary(
        dates,
        ledger["net_excess"].to_numpy(),
        series["trades"].to_numpy(),
        series["turnover"].to_numpy(),
        series["invested_frac"].to_numpy(),
        ones,  # invested_frac is already a fraction
    )
    return perf.as_dict()


def _dict_max_diff(a, b) -> float:
    """Largest absolute numeric discrepancy between two JSON-ready dicts."""
    if isinstance(a, dict) and isinstance(b, dict):
        keys = set(a) | set(b)
        return max((_dict_max_diff(a.get(k), b.get(k)) for k in keys), default=0.0)
    if isinstance(a, (list, tuple)) and isinstance(b, (list, tuple)):
        if len(a) != len(b):
            return np.inf
        return max((_dict_max_diff(x, y) for x, y in zip(a, b)), default=0.0)
    if isinstance(a, (int, float)) and isinstance(b, (int, float)):
        if isinstance(a, bool) or isinstance(b, bool):
            return 0.0 if a == b else np.inf
        scale = max(1.0, abs(a), abs(b))
        return abs(a - b) / scale
    return 0.0 if a == b else np.inf


def report_from_dir(run_dir: str) -> dict:
    """Recompute every summary number from the emitted CSVs and compare.

    Returns {"points": {...}, "max_rel_diff": float, "consistent": bool};
    the self-consistency gate for a finished run directory.
    """
    summary_path = os.path.join(run_dir, "summary.json")
    if not os.path.exists(summary_path):
        raise StatArbError(f"no summary.json in {run_dir}")
    with open(summary_path) as fh:
        summary = json.load(fh)
    points = {}
    worst = 0.0
    for point_id, entry in summary["results"].items():
        recomputed = _recompute_point(run_dir, entry)
        points[point_id] = recomputed
        worst = max(worst, _dict_max_diff(entry["perf"], recomputed))
    return {
        "points": points,
        "max_rel_diff": worst,
        "consistent": bool(worst < 1e-8),
    }


def write_error_report(out_dir: str, exc: Exception) -> str:
    """Machine-readable failure report; returns the path written."""
    os.makedirs(out_dir, exist_ok=True)
    payload = {
        "error_type": type(exc).__name__,
        "message": str(exc),
        "problems": getattr(exc, "problems", None),
    }
    path = os.path.join(out_dir, "error.json")
    with open(path, "w") as fh:
        fh.write(json.dumps(payload, sort_keys=True, indent=2) + "\n")
    return path
