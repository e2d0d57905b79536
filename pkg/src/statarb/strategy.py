"""Trade signal generation from filtered-return deviations.

Spread = rolling sum of realized minus filtered returns; its trailing Z-score
drives a per-asset long/short state machine with exit at the zero crossing,
forced close-out on the last trading day of the year and on delisting.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import pandas as pd

from .errors import InvalidInputError
from .market_data import FactorPanel

BENCHMARK_WINDOW = 10
STD_FLOOR = 1e-8

LONG, SHORT, FLAT = 1, -1, 0


@dataclass(frozen=True)
class StrategyParams:
    """Entry thresholds and windows for the mean-reversion rule.

    The Z-score normalization window is the one setting with no counterpart in
    the strategy description; the trailing 60-day default is a stated choice,
    not a sourced value.
    """

    ws: int = 5
    long_entry: float = 1.5  # enter long when z <= -long_entry
    short_entry: float = 2.0  # enter short when z >= +short_entry
    z_window: int = 60

    def __post_init__(self):
        if self.ws < 1:
            raise InvalidInputError("ws must be >= 1")
        if self.long_entry <= 0 or self.short_entry <= 0:
            raise InvalidInputError("entry thresholds must be > 0")
        if self.z_window < 5:
            raise InvalidInputError("z_window must be >= 5")

    def label(self) -> str:
        return f"ws{self.ws}_L{self.long_entry:g}_S{self.short_entry:g}"


def spread(returns: np.ndarray, filtered_returns: np.ndarray, ws: int) -> np.ndarray:
    """Rolling ws-day sum of (returns - filtered_returns); NaN until complete."""
    r = np.asarray(returns, dtype=float)
    rf = np.asarray(filtered_returns, dtype=float)
    if r.shape != rf.shape:
        raise InvalidInputError("returns and filtered_returns shapes differ")
    dev = pd.DataFrame(r - rf)
    return dev.rolling(ws, min_periods=ws).sum().to_numpy()


def zscore(spread_series: np.ndarray, z_window: int) -> np.ndarray:
    """Z-score against the trailing window, excluding the current observation.

    The trailing standard deviation is floored at 1e-8; undefined (NaN) until
    z_window prior spreads exist.
    """
    s = pd.DataFrame(np.asarray(spread_series, dtype=float))
    trailing = s.shift(1).rolling(z_window, min_periods=z_window)
    mean = trailing.mean()
    std = trailing.std(ddof=1).clip(lower=STD_FLOOR)
    return ((s - mean) / std).to_numpy()


def step_position(
    side: int,
    z: float,
    is_last_trading_day_of_year: bool,
    delists_next: bool,
    params: StrategyParams,
) -> int:
    """One transition of the per-asset position state machine.

    Priority: delisting close-out, then year-end close-out (both block entry),
    then entry if flat, then zero-crossing exits. A same-day close is never
    followed by a same-day re-entry.
    """
    if delists_next or is_last_trading_day_of_year:
        return FLAT
    if np.isnan(z):
        return side
    if side == FLAT:
        if z <= -params.long_entry:
            return LONG
        if z >= params.short_entry:
            return SHORT
        return FLAT
    if side == LONG:
        return FLAT if z >= 0.0 else LONG
    return FLAT if z <= 0.0 else SHORT


def benchmark_spread(total_returns: np.ndarray, window: int = BENCHMARK_WINDOW) -> np.ndarray:
    """Reversal benchmark: rolling sums against their cross-sectional mean."""
    sums = pd.DataFrame(np.asarray(total_returns, dtype=float)).rolling(
        window, min_periods=window
    ).sum()
    mean = sums.mean(axis=1, skipna=True)
    return sums.sub(mean, axis=0).to_numpy()


def year_end_flags(dates: pd.DatetimeIndex) -> np.ndarray:
    """True on the last trading date of each calendar year present in the panel."""
    years = dates.year.to_numpy()
    flags = np.zeros(len(dates), dtype=bool)
    if len(dates) == 0:
        return flags
    flags[:-1] = years[:-1] != years[1:]
    flags[-1] = True  # end of data closes the book
    return flags


def signal_frames(
    panel: FactorPanel,
    r_filt: np.ndarray,
    params: StrategyParams,
    mode: str = "model",
):
    """(spread, z, positions) for one configuration; used by run_signals and
    by the optional signals CSV emission."""
    if mode not in ("model", "benchmark"):
        raise InvalidInputError(f"unknown signal mode {mode!r}")
    t_len, n = panel.n_days, panel.n_assets
    if mode == "benchmark":
        spread_mat = benchmark_spread(panel.total_return, params.ws)
    else:
        if r_filt is None or r_filt.shape != (t_len, n):
            raise InvalidInputError("r_filt shape must match the panel")
        spread_mat = spread(panel.excess_returns(), r_filt, params.ws)
    z = zscore(spread_mat, params.z_window)
    positions = _sweep_positions(panel, z, params)
    return spread_mat, z, positions


def run_signals(
    panel: FactorPanel,
    r_filt: np.ndarray,
    params: StrategyParams,
    mode: str = "model",
) -> np.ndarray:
    """Full-panel sweep producing the T x n position matrix in {-1, 0, +1}.

    `mode="model"` trades the excess-return deviation from the filter;
    `mode="benchmark"` trades the cross-sectional reversal spread (window =
    params.ws) and never reads exposures or filter output.
    """
    _, _, positions = signal_frames(panel, r_filt, params, mode)
    return positions


def _sweep_positions(panel: FactorPanel, z: np.ndarray, params: StrategyParams) -> np.ndarray:
    t_len, n = panel.n_days, panel.n_assets
    last_day = year_end_flags(panel.dates)
    positions = np.zeros((t_len, n), dtype=np.int8)
    state = np.zeros(n, dtype=np.int8)
    neg_l, pos_s = -params.long_entry, params.short_entry

    for k in range(t_len):
        zk = z[k]
        defined = np.isfinite(zk)
        close_all = panel.delist_next[k] | last_day[k]

        exit_long = (state == LONG) & defined & (zk >= 0.0)
        exit_short = (state == SHORT) & defined & (zk <= 0.0)
        enter_long = (state == FLAT) & defined & (zk <= neg_l) & ~close_all
        enter_short = (state == FLAT) & defined & (zk >= pos_s) & ~close_all

        state = state.copy()
        state[close_all | exit_long | exit_short] = FLAT
        state[enter_long] = LONG
        state[enter_short] = SHORT
        positions[k] = state

    return positions
