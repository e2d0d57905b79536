"""Performance statistics over finished ledgers."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from .errors import InvalidInputError

TRADING_DAYS = 252
STD_FLOOR = 1e-12
MIN_YEAR_OBS = 60
PERCENTILES = (25, 50, 75)


def sharpe_annual(daily_excess: np.ndarray) -> float:
    """Annualized Sharpe: mean/std of daily excess returns times sqrt(252).

    Returns NaN for degenerate series (std at the floor), as with a constant
    positive return.
    """
    x = np.asarray(daily_excess, dtype=float)
    x = x[np.isfinite(x)]
    if x.size == 0:
        return np.nan
    std = x.std(ddof=1) if x.size > 1 else 0.0
    if std < STD_FLOOR:
        return np.nan
    return float(x.mean() / std * np.sqrt(TRADING_DAYS))


def rolling_drawdown(net_excess: np.ndarray, window: int = TRADING_DAYS):
    """Drawdown of the compounded equity curve from its trailing-window peak.

    Returns (drawdown series, max drawdown), max drawdown being the most
    negative value. Equity starts at 1.0 and never resets.
    """
    net = np.asarray(net_excess, dtype=float)
    if net.ndim != 1:
        raise InvalidInputError("net_excess must be 1-d")
    equity = np.cumprod(1.0 + net)
    peaks = pd.Series(equity).rolling(window, min_periods=1).max().to_numpy()
    dd = equity / peaks - 1.0
    max_dd = float(dd.min()) if dd.size else 0.0
    return dd, max_dd


@dataclass
class YearStats:
    year: int
    sharpe: Optional[float]
    n_obs: int
    flagged: bool  # under 60 observations
    max_drawdown: float
    trades: float
    mean_turnover: float
    invested_frac: float

    def as_dict(self) -> dict:
        return {
            "year": self.year,
            "sharpe": None if self.sharpe is None or np.isnan(self.sharpe) else self.sharpe,
            "n_obs": self.n_obs,
            "flagged": self.flagged,
            "max_drawdown": self.max_drawdown,
            "trades": self.trades,
            "mean_turnover": self.mean_turnover,
            "invested_frac": self.invested_frac,
        }


@dataclass
class PerfSummary:
    years: List[YearStats]
    mean_annual_sharpe: Optional[float]
    pooled_sharpe: Optional[float]
    max_drawdown: float
    total_trades: float
    mean_turnover: float
    mean_invested_frac: float
    drawdown_series: np.ndarray = field(repr=False, default=None)

    def as_dict(self) -> dict:
        def clean(v):
            return None if v is None or (isinstance(v, float) and np.isnan(v)) else v

        return {
            "mean_annual_sharpe": clean(self.mean_annual_sharpe),
            "pooled_sharpe": clean(self.pooled_sharpe),
            "max_drawdown": self.max_drawdown,
            "total_trades": self.total_trades,
            "mean_turnover": self.mean_turnover,
            "mean_invested_frac": self.mean_invested_frac,
            "years": [y.as_dict() for y in self.years],
        }


def perf_summary(
    dates: pd.DatetimeIndex,
    net_excess: np.ndarray,
    trades: np.ndarray,
    turnover: np.ndarray,
    invested: np.ndarray,
    universe_size: np.ndarray,
) -> PerfSummary:
    """Per-year and aggregate statistics for one strategy configuration."""
    net = np.asarray(net_excess, dtype=float)
    years_arr = dates.year.to_numpy()
    dd, max_dd = rolling_drawdown(net)
    with np.errstate(invalid="ignore", divide="ignore"):
        frac = np.where(universe_size > 0, invested / universe_size, 0.0)

    stats: List[YearStats] = []
    for year in sorted(set(years_arr.tolist())):
        mask = years_arr == year
        n_obs = int(mask.sum())
        stats.append(
            YearStats(
                year=int(year),
                sharpe=sharpe_annual(net[mask]),
                n_obs=n_obs,
                flagged=n_obs < MIN_YEAR_OBS,
                max_drawdown=float(dd[mask].min()),
                trades=float(trades[mask].sum()),
                mean_turnover=float(turnover[mask].mean()),
                invested_frac=float(frac[mask].mean()),
            )
        )
    annual = [s.sharpe for s in stats if s.sharpe is not None and not np.isnan(s.sharpe)]
    return PerfSummary(
        years=stats,
        mean_annual_sharpe=float(np.mean(annual)) if annual else None,
        pooled_sharpe=sharpe_annual(net),
        max_drawdown=max_dd,
        total_trades=float(trades.sum()),
        mean_turnover=float(turnover.mean()),
        mean_invested_frac=float(frac.mean()),
        drawdown_series=dd,
    )


def percentile_table(
    sharpes_by_group: Dict[Tuple[float, int], Sequence[float]],
    percentiles: Sequence[int] = PERCENTILES,
):
    """Sharpe percentiles by (transaction cost, window size).

    Returns (DataFrame indexed by (ws, percentile) with one column per TC
    level, aligned-text rendering). Percentiles use linear interpolation.
    """
    tcs = sorted({tc for tc, _ in sharpes_by_group})
    wss = sorted({ws for _, ws in sharpes_by_group})
    rows = []
    index = []
    for ws in wss:
        for p in percentiles:
            row = []
            for tc in tcs:
                values = np.asarray(sharpes_by_group.get((tc, ws), []), dtype=float)
                values = values[np.isfinite(values)]
                row.append(float(np.percentile(values, p)) if values.size else np.nan)
            rows.append(row)
            index.append((ws, f"{p}th"))
    frame = pd.DataFrame(
        rows,
        index=pd.MultiIndex.from_tuples(index, names=["ws", "percentile"]),
        columns=[f"tc_{tc:g}bps" for tc in tcs],
    )

    lines = ["Sharpe ratio percentiles by transaction cost (bps)"]
    header = " " * 12 + "".join(f"{tc:>8g}" for tc in tcs)
    lines.append(header)
    for ws in wss:
        for i, p in enumerate(percentiles):
            label = f"WS {ws:<3}" if i == 0 else " " * 6
            cells = frame.loc[(ws, f"{p}th")].to_numpy()
            body = "".join("     nan" if np.isnan(c) else f"{c:8.2f}" for c in cells)
            lines.append(f"{label}{p:>4}th{body}")
    return frame, "\n".join(lines)
