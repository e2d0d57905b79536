"""Portfolio accounting: excess returns with transaction costs, beta hedging,
and the blended long-only/long-short allocation.

Conventions: unit notional per position; trades execute at the close, so the
capital base of a period is the notional held during it, falling back to the
end-of-day notional on entry-from-flat days (the only convention that charges
entry costs without dividing by zero). dt = 1/252.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, Optional, Tuple

import numpy as np
import pandas as pd

from .errors import InvalidInputError
from .market_data import FactorPanel

DT = 1.0 / 252.0
VAR_FLOOR = 1e-12

LEDGER_COLUMNS = [
    "date",
    "l",
    "s",
    "pi",
    "gross",
    "cost",
    "hedge_pnl",
    "net_excess",
    "beta_port",
    "P",
]


def period_return(
    positions: np.ndarray,
    position_changes: np.ndarray,
    asset_returns: np.ndarray,
    rf_annual: float,
    dt: float = DT,
    tc_bps: float = 5.0,
) -> Tuple[float, float, float, Dict[str, float]]:
    """Unhedged excess return of one period.

    `positions` are held through the period; `position_changes` are the trades
    executed at its closing mark. Long legs contribute (R - rf dt), short legs
    (-R - rf dt) plus the risk-free credit on short proceeds; costs are
    tc_bps/1e4 per unit traded. Returns (gross, cost, net_excess, components).
    """
    pos = np.asarray(positions, dtype=float)
    delta = np.asarray(position_changes, dtype=float)
    rets = np.asarray(asset_returns, dtype=float)
    if pos.shape != rets.shape or pos.shape != delta.shape:
        raise InvalidInputError("positions/changes/returns shapes differ")
    held = pos != 0
    if held.any() and not np.all(np.isfinite(rets[held])):
        raise InvalidInputError("non-finite return for a held position")
    if not np.isfinite(rf_annual):
        raise InvalidInputError("non-finite risk-free rate")

    longs = pos > 0
    shorts = pos < 0
    l_count = float(np.abs(pos[longs]).sum())
    s_count = float(np.abs(pos[shorts]).sum())
    pi_held = max(l_count, s_count)

    end = pos + delta
    pi_end = max(np.abs(end[end > 0]).sum(initial=0.0), np.abs(end[end < 0]).sum(initial=0.0))
    base = pi_held if pi_held > 0 else pi_end

    trades = float(np.abs(delta).sum())
    if base == 0.0:
        zero = {"long_pnl": 0.0, "short_pnl": 0.0, "short_proceeds": 0.0, "base": 0.0,
                "trades": trades}
        return 0.0, 0.0, 0.0, zero

    rf_dt = rf_annual * dt
    long_pnl = float(np.sum(pos[longs] * rets[longs] - np.abs(pos[longs]) * rf_dt)) if longs.any() else 0.0
    short_pnl = float(np.sum(pos[shorts] * rets[shorts] - np.abs(pos[shorts]) * rf_dt)) if shorts.any() else 0.0
    proceeds = rf_dt * s_count
    gross = (long_pnl + short_pnl + proceeds) / base
    cost = (tc_bps / 1e4) * trades / base
    net = gross - cost
    components = {
        "long_pnl": long_pnl,
        "short_pnl": short_pnl,
        "short_proceeds": proceeds,
        "base": base,
        "trades": trades,
    }
    return gross, cost, net, components


def portfolio_beta(positions: np.ndarray, betas: np.ndarray, pi: float) -> float:
    """Weighted-average market beta of the book: beta . positions / Pi."""
    if pi <= 0:
        return 0.0
    pos = np.asarray(positions, dtype=float)
    b = np.nan_to_num(np.asarray(betas, dtype=float))
    return float(b @ pos) / pi


def hedge_notional(beta_port: float, pi: float) -> float:
    """Index position offsetting the book's beta: P = -beta_port * Pi."""
    return -beta_port * pi


@dataclass
class Ledger:
    """Daily accounting record for one strategy configuration."""

    dates: pd.DatetimeIndex
    l: np.ndarray  # end-of-day long count
    s: np.ndarray  # end-of-day short count
    pi: np.ndarray  # max(l, s) end-of-day
    gross: np.ndarray
    cost: np.ndarray
    hedge_pnl: np.ndarray
    net_excess: np.ndarray
    beta_port: np.ndarray  # recomputed at the close
    hedge: np.ndarray  # P established at the close
    trades: np.ndarray
    turnover: np.ndarray

    def frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            {
                "date": self.dates.strftime("%Y-%m-%d"),
                "l": self.l,
                "s": self.s,
                "pi": self.pi,
                "gross": self.gross,
                "cost": self.cost,
                "hedge_pnl": self.hedge_pnl,
                "net_excess": self.net_excess,
                "beta_port": self.beta_port,
                "P": self.hedge,
            },
            columns=LEDGER_COLUMNS,
        )

    def to_csv(self, path) -> None:
        self.frame().to_csv(path, index=False, float_format="%.12g")


def build_ledger(
    panel: FactorPanel,
    positions: np.ndarray,
    tc_bps: float = 5.0,
    hedge: bool = True,
    hedge_rf_financing: bool = True,
    index_tc_bps: float = 0.0,
    dt: float = DT,
) -> Ledger:
    """Sequential fold of positions into the daily accounting ledger.

    Row k covers [k-1, k]: P&L accrues on the positions held through the
    period, trades executed at close k are charged that day, and the hedge
    established at close k-1 earns the index return (financed at rf by
    default).
    """
    t_len, n = positions.shape
    if (t_len, n) != (panel.n_days, panel.n_assets):
        raise InvalidInputError("positions shape must match the panel")
    pos = positions.astype(float)
    rets = panel.total_return
    rf_daily_rate = panel.rf_annual.copy()
    rf_daily_rate[1:] = panel.rf_annual[:-1]

    l_end = (pos > 0).sum(axis=1).astype(float)
    s_end = (pos < 0).sum(axis=1).astype(float)
    pi_end = np.maximum(l_end, s_end)

    beta_close = np.zeros(t_len)
    hedge_close = np.zeros(t_len)
    if hedge:
        for k in range(t_len):
            if pi_end[k] > 0:
                beta_close[k] = portfolio_beta(pos[k], panel.betas[k], pi_end[k])
                hedge_close[k] = hedge_notional(beta_close[k], pi_end[k])

    gross = np.zeros(t_len)
    cost = np.zeros(t_len)
    hedge_pnl = np.zeros(t_len)
    net = np.zeros(t_len)
    trades = np.zeros(t_len)
    turnover = np.zeros(t_len)

    rf_dt_all = rf_daily_rate * dt
    index_excess = panel.index_return - rf_dt_all if hedge_rf_financing else panel.index_return

    prev = np.zeros(n)
    prev_hedge = 0.0
    for k in range(t_len):
        held = prev
        delta = pos[k] - held
        g, c, _, comp = period_return(
            held, delta, np.nan_to_num(rets[k]), rf_daily_rate[k], dt=dt, tc_bps=tc_bps
        )
        base = comp["base"]
        h = 0.0
        if hedge and base > 0:
            h = prev_hedge * index_excess[k] / base
            if index_tc_bps > 0:
                c += (index_tc_bps / 1e4) * abs(hedge_close[k] - prev_hedge) / base
        gross[k] = g
        cost[k] = c
        hedge_pnl[k] = h
        net[k] = g - c + h
        trades[k] = comp["trades"]
        turnover[k] = comp["trades"] / base if base > 0 else 0.0
        prev = pos[k]
        prev_hedge = hedge_close[k]

    return Ledger(
        dates=panel.dates,
        l=l_end,
        s=s_end,
        pi=pi_end,
        gross=gross,
        cost=cost,
        hedge_pnl=hedge_pnl,
        net_excess=net,
        beta_port=beta_close,
        hedge=hedge_close,
        trades=trades,
        turnover=turnover,
    )


def blended_weights(
    mu_l: float, var_l: float, mu_ls: float, var_ls: float
) -> Tuple[float, float]:
    """Sharpe-maximizing capital split: w_i proportional to mu_i / sigma_i^2.

    Degenerate rule: equal weights when the score sum vanishes.
    """
    if var_l <= 0 or var_ls <= 0:
        raise InvalidInputError("variances must be strictly positive")
    s_l = mu_l / var_l
    s_ls = mu_ls / var_ls
    total = s_l + s_ls
    if abs(total) < 1e-300:
        return 0.5, 0.5
    return s_l / total, s_ls / total


def blend_series(
    strategy_net: np.ndarray,
    index_excess: np.ndarray,
    years: np.ndarray,
    window_years: int = 10,
) -> Tuple[np.ndarray, Dict[int, Tuple[float, float]]]:
    """Annually re-weighted blend of the long-only and long-short streams.

    The first year uses equal weights; later years use means/variances of
    daily returns over up to `window_years` prior years.
    """
    ls = np.asarray(strategy_net, dtype=float)
    lo = np.asarray(index_excess, dtype=float)
    yrs = np.asarray(years)
    if ls.shape != lo.shape or ls.shape != yrs.shape:
        raise InvalidInputError("series/years shapes differ")
    blended = np.zeros_like(ls)
    weights: Dict[int, Tuple[float, float]] = {}
    unique_years = sorted(set(yrs.tolist()))
    for i, year in enumerate(unique_years):
        mask = yrs == year
        if i == 0:
            w = (0.5, 0.5)
        else:
            lookback = [y for y in unique_years[max(0, i - window_years) : i]]
            hist = np.isin(yrs, lookback)
            mu_l, var_l = float(lo[hist].mean()), max(float(lo[hist].var(ddof=1)), VAR_FLOOR)
            mu_ls, var_ls = float(ls[hist].mean()), max(float(ls[hist].var(ddof=1)), VAR_FLOOR)
            w = blended_weights(mu_l, var_l, mu_ls, var_ls)
        weights[int(year)] = w
        blended[mask] = w[0] * lo[mask] + w[1] * ls[mask]
    return blended, weights
