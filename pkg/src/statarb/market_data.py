"""Panel ingestion, factor-exposure construction and the synthetic market generator.

CSV schemas (version 1):
  assets file: date,asset_id,close,shares,total_return,eps,listed
  index file:  date,index_total_return,risk_free_annual

Dates are ISO (YYYY-MM-DD); eps may be empty; listed is 0/1. The index file
defines the master trading calendar.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field
from typing import Dict, Optional, Tuple

import numpy as np
import pandas as pd

from .errors import InvalidInputError, PanelFormatError

SCHEMA_VERSION = "1"
ASSET_COLUMNS = ["date", "asset_id", "close", "shares", "total_return", "eps", "listed"]
INDEX_COLUMNS = ["date", "index_total_return", "risk_free_annual"]

BETA_VOL_WINDOW = 504
MOMENTUM_LOOKBACK = 252
MOMENTUM_SKIP = 21
MOMENTUM_MIN_HISTORY = 273
TRADING_DAYS_PER_YEAR = 252


@dataclass
class RawPanel:
    """Aligned daily panel of raw per-asset series plus the index/rf series."""

    dates: pd.DatetimeIndex
    assets: np.ndarray  # asset ids, sorted
    close: np.ndarray  # (T, n)
    shares: np.ndarray  # (T, n)
    total_return: np.ndarray  # (T, n)
    eps: np.ndarray  # (T, n), NaN when unavailable
    listed: np.ndarray  # (T, n) bool
    index_total_return: np.ndarray  # (T,)
    risk_free_annual: np.ndarray  # (T,)

    @property
    def n_days(self) -> int:
        return len(self.dates)

    @property
    def n_assets(self) -> int:
        return len(self.assets)


@dataclass
class ExposureSet:
    """Raw (pre-standardization) factor values and their coverage flags."""

    dates: pd.DatetimeIndex
    assets: np.ndarray
    values: Dict[str, np.ndarray]  # name -> (T, n); NaN where not covered


@dataclass
class FactorPanel:
    """Everything the engine and strategy consume, date/asset aligned."""

    dates: pd.DatetimeIndex
    assets: np.ndarray
    total_return: np.ndarray  # (T, n)
    exposures: np.ndarray  # (T, n, m) raw factor values
    factor_names: Tuple[str, ...]
    betas: np.ndarray  # (T, n) market betas for hedging
    listed: np.ndarray  # (T, n) bool
    universe: np.ndarray  # (T, n) bool
    delist_next: np.ndarray  # (T, n) bool: last priced day for the asset
    index_return: np.ndarray  # (T,)
    rf_annual: np.ndarray  # (T,)

    @property
    def n_days(self) -> int:
        return len(self.dates)

    @property
    def n_assets(self) -> int:
        return len(self.assets)

    @property
    def n_factors(self) -> int:
        return len(self.factor_names)

    def rf_daily(self) -> np.ndarray:
        """Per-period risk-free rate, using the period-start annualized rate."""
        rf = np.empty_like(self.rf_annual)
        rf[0] = self.rf_annual[0]
        rf[1:] = self.rf_annual[:-1]
        return rf / TRADING_DAYS_PER_YEAR

    def excess_returns(self) -> np.ndarray:
        return self.total_return - self.rf_daily()[:, None]

    def index_excess(self) -> np.ndarray:
        return self.index_return - self.rf_daily()


# ---------------------------------------------------------------------------
# CSV ingestion
# ---------------------------------------------------------------------------

def _read_csv_str(path) -> pd.DataFrame:
    try:
        return pd.read_csv(path, dtype=str, keep_default_na=False)
    except Exception as exc:
        raise PanelFormatError(f"{path}: cannot parse CSV ({exc})") from exc


def _require_columns(frame: pd.DataFrame, columns, path) -> None:
    missing = [c for c in columns if c not in frame.columns]
    if missing:
        raise PanelFormatError(f"{path}: missing required column(s) {missing}")


def _parse_float_column(frame, column, path, allow_blank=False) -> np.ndarray:
    raw = frame[column]
    blank = raw.str.strip() == ""
    out = pd.to_numeric(raw.where(~blank, other="nan"), errors="coerce").to_numpy(float)
    bad = np.isnan(out) & ~blank.to_numpy()
    bad &= raw.str.strip().str.lower().to_numpy() != "nan"
    if bad.any():
        line = int(np.flatnonzero(bad)[0]) + 2  # header is line 1
        raise PanelFormatError(f"{path}: unparseable {column!r} value at line {line}")
    if not allow_blank and blank.any():
        line = int(np.flatnonzero(blank.to_numpy())[0]) + 2
        raise PanelFormatError(f"{path}: blank {column!r} value at line {line}")
    return out


def _parse_dates(frame, path) -> pd.DatetimeIndex:
    parsed = pd.to_datetime(frame["date"], format="%Y-%m-%d", errors="coerce")
    bad = parsed.isna()
    if bad.any():
        line = int(np.flatnonzero(bad.to_numpy())[0]) + 2
        raise PanelFormatError(f"{path}: unparseable date at line {line}")
    return pd.DatetimeIndex(parsed)


def load_panel(assets_csv, index_csv, schema_version: str = SCHEMA_VERSION) -> RawPanel:
    """Load and validate the two-file CSV panel into an aligned RawPanel."""
    if schema_version != SCHEMA_VERSION:
        raise PanelFormatError(f"unsupported schema version {schema_version!r}")

    idx_frame = _read_csv_str(index_csv)
    _require_columns(idx_frame, INDEX_COLUMNS, index_csv)
    idx_dates = _parse_dates(idx_frame, index_csv)
    if len(idx_dates) == 0:
        raise PanelFormatError(f"{index_csv}: empty index file")
    if not idx_dates.is_monotonic_increasing or idx_dates.has_duplicates:
        raise PanelFormatError(f"{index_csv}: dates must be strictly increasing")
    index_ret = _parse_float_column(idx_frame, "index_total_return", index_csv)
    rf = _parse_float_column(idx_frame, "risk_free_annual", index_csv)
    if not np.all(np.isfinite(index_ret)) or not np.all(np.isfinite(rf)):
        raise PanelFormatError(f"{index_csv}: non-finite index/risk-free values")

    frame = _read_csv_str(assets_csv)
    _require_columns(frame, ASSET_COLUMNS, assets_csv)
    dates = _parse_dates(frame, assets_csv)
    asset_ids = frame["asset_id"].to_numpy()
    if (frame["asset_id"].str.strip() == "").any():
        line = int(np.flatnonzero((frame["asset_id"].str.strip() == "").to_numpy())[0]) + 2
        raise PanelFormatError(f"{assets_csv}: blank asset_id at line {line}")

    keys = pd.MultiIndex.from_arrays([asset_ids, dates])
    dup = keys.duplicated(keep=False)
    if dup.any():
        first = int(np.flatnonzero(dup)[0])
        raise PanelFormatError(
            f"{assets_csv}: duplicate (asset_id, date) key "
            f"({asset_ids[first]}, {dates[first].date()}) at line {first + 2}"
        )

    close = _parse_float_column(frame, "close", assets_csv)
    shares = _parse_float_column(frame, "shares", assets_csv)
    tot = _parse_float_column(frame, "total_return", assets_csv)
    eps = _parse_float_column(frame, "eps", assets_csv, allow_blank=True)
    listed_raw = frame["listed"].str.strip().str.lower()
    ok = listed_raw.isin(["0", "1", "true", "false"])
    if not ok.all():
        line = int(np.flatnonzero(~ok.to_numpy())[0]) + 2
        raise PanelFormatError(f"{assets_csv}: unparseable 'listed' value at line {line}")
    listed = listed_raw.isin(["1", "true"]).to_numpy()

    if np.any(close[np.isfinite(close)] <= 0):
        line = int(np.flatnonzero(np.isfinite(close) & (close <= 0))[0]) + 2
        raise PanelFormatError(f"{assets_csv}: non-positive close price at line {line}")
    if not np.all(np.isfinite(tot)):
        line = int(np.flatnonzero(~np.isfinite(tot))[0]) + 2
        raise PanelFormatError(f"{assets_csv}: non-finite total_return at line {line}")

    date_pos = idx_dates.get_indexer(dates)
    if (date_pos < 0).any():
        line = int(np.flatnonzero(date_pos < 0)[0]) + 2
        raise PanelFormatError(
            f"{assets_csv}: date at line {line} not present in the index calendar"
        )

    assets = np.array(sorted(set(asset_ids.tolist())))
    asset_pos = {a: j for j, a in enumerate(assets)}
    t_len, n = len(idx_dates), len(assets)

    def grid(fill=np.nan):
        return np.full((t_len, n), fill)

    g_close, g_shares, g_tot, g_eps = grid(), grid(), grid(), grid()
    g_listed = np.zeros((t_len, n), dtype=bool)
    cols = np.fromiter((asset_pos[a] for a in asset_ids), dtype=int, count=len(asset_ids))
    g_close[date_pos, cols] = close
    g_shares[date_pos, cols] = shares
    g_tot[date_pos, cols] = tot
    g_eps[date_pos, cols] = eps
    g_listed[date_pos, cols] = listed

    return RawPanel(
        dates=idx_dates,
        assets=assets,
        close=g_close,
        shares=g_shares,
        total_return=g_tot,
        eps=g_eps,
        listed=g_listed,
        index_total_return=index_ret,
        risk_free_annual=rf,
    )


def _fmt(x: float) -> str:
    return "" if not np.isfinite(x) else format(x, ".12g")


def write_panel(panel: RawPanel, assets_csv, index_csv) -> None:
    """Write a RawPanel back to the two-file CSV schema (12 significant digits)."""
    with open(index_csv, "w") as fh:
        fh.write(",".join(INDEX_COLUMNS) + "\n")
        for k, date in enumerate(panel.dates):
            fh.write(
                f"{date.date()},{_fmt(panel.index_total_return[k])},"
                f"{_fmt(panel.risk_free_annual[k])}\n"
            )
    with open(assets_csv, "w") as fh:
        fh.write(",".join(ASSET_COLUMNS) + "\n")
        for j, asset in enumerate(panel.assets):
            for k, date in enumerate(panel.dates):
                if not panel.listed[k, j] and not np.isfinite(panel.close[k, j]):
                    continue  # asset-day absent from the panel
                fh.write(
                    f"{date.date()},{asset},{_fmt(panel.close[k, j])},"
                    f"{_fmt(panel.shares[k, j])},{_fmt(panel.total_return[k, j])},"
                    f"{_fmt(panel.eps[k, j])},{1 if panel.listed[k, j] else 0}\n"
                )


# ---------------------------------------------------------------------------
# Feature construction
# ---------------------------------------------------------------------------

def compute_beta_vol(asset_excess, index_excess, window: int = BETA_VOL_WINDOW):
    """Trailing-window regression of asset on index excess returns.

    Returns (beta, volatility) where beta is the slope and volatility the mean
    squared residual; (nan, nan) when fewer than `window` paired observations
    exist.
    """
    y = np.asarray(asset_excess, dtype=float)
    x = np.asarray(index_excess, dtype=float)
    if y.shape != x.shape:
        raise InvalidInputError("asset and index series must be the same length")
    pair = np.isfinite(y) & np.isfinite(x)
    if pair.sum() < window:
        return np.nan, np.nan
    yy = y[pair][-window:]
    xx = x[pair][-window:]
    xc = xx - xx.mean()
    yc = yy - yy.mean()
    sxx = float(xc @ xc)
    if sxx <= 0:
        return np.nan, np.nan
    beta = float(xc @ yc) / sxx
    resid = yc - beta * xc
    vol = float(resid @ resid) / window
    return beta, vol


def _rolling_sum(a: np.ndarray, window: int) -> np.ndarray:
    """Trailing-window sums along axis 0 (NaN before the window fills)."""
    cs = np.cumsum(a, axis=0, dtype=float)
    out = np.full_like(cs, np.nan, dtype=float)
    out[window - 1 :] = cs[window - 1 :] - np.concatenate(
        [np.zeros((1,) + cs.shape[1:]), cs[:-window]], axis=0
    )
    return out


def rolling_beta_vol(asset_excess: np.ndarray, index_excess: np.ndarray, window: int = BETA_VOL_WINDOW):
    """Vectorized trailing-window beta/volatility over a (T, n) return matrix.

    A value is produced only where the trailing `window` days are all observed
    for the asset.
    """
    y = np.asarray(asset_excess, dtype=float)
    x = np.asarray(index_excess, dtype=float)[:, None]
    valid = np.isfinite(y)
    y0 = np.where(valid, y, 0.0)
    v = valid.astype(float)

    cnt = _rolling_sum(v, window)
    sx = _rolling_sum(v * x, window)
    sy = _rolling_sum(y0, window)
    sxx = _rolling_sum(v * x * x, window)
    sxy = _rolling_sum(y0 * x, window)
    syy = _rolling_sum(y0 * y0, window)

    full = cnt == window
    with np.errstate(invalid="ignore", divide="ignore"):
        sxx_c = sxx - sx * sx / window
        sxy_c = sxy - sx * sy / window
        syy_c = syy - sy * sy / window
        beta = np.where(full & (sxx_c > 0), sxy_c / sxx_c, np.nan)
        sse = syy_c - beta * sxy_c
        vol = np.where(np.isfinite(beta), np.maximum(sse, 0.0) / window, np.nan)
    return beta, vol


def compute_momentum(total_returns, at: Optional[int] = None):
    """Compounded return over trading days [k-252, k-21).

    With `at` given, returns the scalar momentum at that index; otherwise the
    full series (NaN where the window is incomplete or has missing returns).
    """
    r = np.asarray(total_returns, dtype=float)
    single = r.ndim == 1
    mat = r[:, None] if single else r
    t_len = mat.shape[0]
    valid = np.isfinite(mat)
    logs = np.where(valid, np.log1p(np.where(valid, mat, 0.0)), 0.0)
    span = MOMENTUM_LOOKBACK - MOMENTUM_SKIP  # 231 trading days

    cs = np.concatenate([np.zeros((1, mat.shape[1])), np.cumsum(logs, axis=0)], axis=0)
    cnt = np.concatenate([np.zeros((1, mat.shape[1])), np.cumsum(valid, axis=0)], axis=0)
    out = np.full_like(mat, np.nan, dtype=float)
    ks = np.arange(t_len)
    ok = ks >= MOMENTUM_LOOKBACK
    lo = ks[ok] - MOMENTUM_LOOKBACK
    hi = ks[ok] - MOMENTUM_SKIP
    sums = cs[hi] - cs[lo]
    counts = cnt[hi] - cnt[lo]
    vals = np.expm1(sums)
    vals[counts != span] = np.nan
    out[ok] = vals

    result = out[:, 0] if single else out
    if at is not None:
        return result[at] if single else result[at, :]
    return result


def compute_size(price, shares):
    """Market capitalization: close price times shares outstanding."""
    return np.asarray(price, dtype=float) * np.asarray(shares, dtype=float)


def select_universe(panel: RawPanel, n_top: int, date) -> np.ndarray:
    """Top-N asset ids by size at a date among listed assets, ties by id."""
    k = panel.dates.get_indexer([pd.Timestamp(date)])[0]
    if k < 0:
        raise InvalidInputError(f"date {date} not in panel calendar")
    size = compute_size(panel.close[k], panel.shares[k])
    eligible = panel.listed[k] & np.isfinite(size)
    idx = np.flatnonzero(eligible)
    if idx.size == 0:
        return np.array([], dtype=panel.assets.dtype)
    order = np.lexsort((panel.assets[idx], -size[idx]))
    return panel.assets[idx[order[:n_top]]]


def _history_days(listed: np.ndarray) -> np.ndarray:
    """Running count of observed days per asset since its first listed day."""
    return np.cumsum(listed, axis=0)


def build_exposures(raw: RawPanel) -> ExposureSet:
    """The five risk factors (beta, volatility, momentum, size, value).

    Beta/volatility require 504 days of history, momentum 273; value is the
    trailing earnings yield (eps / price) where eps is available.
    """
    rf_daily = np.empty_like(raw.risk_free_annual)
    rf_daily[0] = raw.risk_free_annual[0]
    rf_daily[1:] = raw.risk_free_annual[:-1]
    rf_daily = rf_daily / TRADING_DAYS_PER_YEAR

    asset_excess = raw.total_return - rf_daily[:, None]
    asset_excess = np.where(raw.listed, asset_excess, np.nan)
    index_excess = raw.index_total_return - rf_daily

    beta, vol = rolling_beta_vol(asset_excess, index_excess)
    history = _history_days(raw.listed)
    cov_bv = history >= BETA_VOL_WINDOW
    beta = np.where(cov_bv, beta, np.nan)
    vol = np.where(cov_bv, vol, np.nan)

    returns = np.where(raw.listed, raw.total_return, np.nan)
    mom = compute_momentum(returns)
    mom = np.where(history >= MOMENTUM_MIN_HISTORY, mom, np.nan)

    size = compute_size(raw.close, raw.shares)
    size = np.where(raw.listed & (size > 0), size, np.nan)

    with np.errstate(invalid="ignore", divide="ignore"):
        value = np.where(
            raw.listed & np.isfinite(raw.eps) & np.isfinite(raw.close),
            raw.eps / raw.close,
            np.nan,
        )

    return ExposureSet(
        dates=raw.dates,
        assets=raw.assets,
        values={
            "beta": beta,
            "volatility": vol,
            "momentum": mom,
            "size": size,
            "value": value,
        },
    )


DEFAULT_MODEL_FACTORS = ("size", "volatility", "momentum", "value")


def build_factor_panel(
    raw: RawPanel,
    exposures: ExposureSet,
    factor_names=DEFAULT_MODEL_FACTORS,
    top_n: int = 2000,
) -> FactorPanel:
    """Assemble the aligned panel the engine consumes.

    Market beta is reserved for hedging and never priced into the exposure
    tensor. Universe membership is top-N by size among listed assets per day.
    """
    t_len, n = raw.n_days, raw.n_assets
    missing = [f for f in factor_names if f not in exposures.values]
    if missing:
        raise InvalidInputError(f"exposure set lacks factor(s) {missing}")

    x = np.stack([exposures.values[f] for f in factor_names], axis=2)

    size = compute_size(raw.close, raw.shares)
    eligible = raw.listed & np.isfinite(size)
    universe = np.zeros((t_len, n), dtype=bool)
    for k in range(t_len):
        idx = np.flatnonzero(eligible[k])
        if idx.size == 0:
            continue
        if idx.size <= top_n:
            universe[k, idx] = True
        else:
            order = np.lexsort((raw.assets[idx], -size[k, idx]))
            universe[k, idx[order[:top_n]]] = True

    delist_next = np.zeros((t_len, n), dtype=bool)
    if t_len > 1:
        priced_next = np.isfinite(raw.close[1:])
        delist_next[:-1] = raw.listed[:-1] & ~priced_next

    betas = exposures.values.get("beta")
    if betas is None:
        betas = np.full((t_len, n), np.nan)

    returns = np.where(raw.listed, raw.total_return, np.nan)

    return FactorPanel(
        dates=raw.dates,
        assets=raw.assets,
        total_return=returns,
        exposures=x,
        factor_names=tuple(factor_names),
        betas=betas,
        listed=raw.listed,
        universe=universe,
        delist_next=delist_next,
        index_return=raw.index_total_return,
        rf_annual=raw.risk_free_annual,
    )


# ---------------------------------------------------------------------------
# Synthetic market generator
# ---------------------------------------------------------------------------

@dataclass
class SynthConfig:
    """Configuration of the synthetic market used for verification runs.

    Returns follow r_{k+1} = X_k f_k + beta * mkt_{k+1} + du_{k+1} + eps, with
    f a random walk or AR(1), exposures slowly mixing AR(1) per asset, an
    optional heterogeneous-beta market component and an optional OU-reverting
    price dislocation u (injected through its increments du).
    """

    n_assets: int = 100
    n_factors: int = 4
    days: int = 1000
    factor_process: str = "random_walk"  # or "ar1"
    phi: float = 0.0
    sigma_f: float = 0.001
    sigma_r: float = 0.02
    exposure_persistence: float = 0.99
    seed: int = 0
    market_vol: float = 0.0  # daily std of the common market return
    beta_low: float = 1.0
    beta_high: float = 1.0
    mispricing_half_life: float = 5.0  # trading days
    mispricing_scale: float = 0.0  # stationary std of u, in units of sigma_r
    rf_annual: float = 0.0
    unit_exposures: bool = False
    start_date: str = "2000-01-03"

    def __post_init__(self):
        problems = []
        if self.n_assets < 1:
            problems.append("n_assets must be >= 1")
        if self.n_factors < 1:
            problems.append("n_factors must be >= 1")
        if self.days < 2:
            problems.append("days must be >= 2")
        if self.factor_process not in ("random_walk", "ar1"):
            problems.append(f"unknown factor_process {self.factor_process!r}")
        if not 0.0 <= self.phi < 1.0:
            problems.append("phi must satisfy 0 <= phi < 1")
        if self.sigma_f <= 0:
            problems.append("sigma_f must be > 0")
        if self.sigma_r < 0:
            problems.append("sigma_r must be >= 0")
        if not 0.0 <= self.exposure_persistence < 1.0:
            problems.append("exposure_persistence must satisfy 0 <= rho < 1")
        if self.market_vol < 0:
            problems.append("market_vol must be >= 0")
        if self.beta_high < self.beta_low:
            problems.append("beta_high must be >= beta_low")
        if self.mispricing_half_life <= 0:
            problems.append("mispricing_half_life must be > 0")
        if self.mispricing_scale < 0:
            problems.append("mispricing_scale must be >= 0")
        if problems:
            raise InvalidInputError("; ".join(problems))


def synth_generate(cfg: SynthConfig):
    """Generate (RawPanel, ExposureSet, true factor path), deterministic per seed."""
    rng = np.random.default_rng(cfg.seed)
    t_len, n, m = cfg.days, cfg.n_assets, cfg.n_factors

    f = np.zeros((t_len, m))
    shocks = rng.normal(0.0, cfg.sigma_f, (t_len - 1, m))
    for k in range(1, t_len):
        if cfg.factor_process == "random_walk":
            f[k] = f[k - 1] + shocks[k - 1]
        else:
            f[k] = cfg.phi * f[k - 1] + shocks[k - 1]

    if cfg.unit_exposures:
        x = np.ones((t_len, n, m))
    else:
        rho = cfg.exposure_persistence
        x = np.empty((t_len, n, m))
        x[0] = rng.standard_normal((n, m))
        innov = rng.standard_normal((t_len - 1, n, m)) * np.sqrt(1.0 - rho * rho)
        for k in range(1, t_len):
            x[k] = rho * x[k - 1] + innov[k - 1]

    betas = (
        rng.uniform(cfg.beta_low, cfg.beta_high, n)
        if cfg.beta_high > cfg.beta_low
        else np.full(n, cfg.beta_low)
    )
    mkt = rng.normal(0.0, cfg.market_vol, t_len) if cfg.market_vol > 0 else np.zeros(t_len)
    mkt[0] = 0.0

    if cfg.mispricing_scale > 0:
        s = cfg.mispricing_scale * cfg.sigma_r
        rho_u = 0.5 ** (1.0 / cfg.mispricing_half_life)
        u = np.empty((t_len, n))
        u[0] = rng.normal(0.0, s, n)
        u_innov = rng.normal(0.0, s * np.sqrt(1.0 - rho_u * rho_u), (t_len - 1, n))
        for k in range(1, t_len):
            u[k] = rho_u * u[k - 1] + u_innov[k - 1]
        du = np.vstack([np.zeros((1, n)), np.diff(u, axis=0)])
    else:
        du = np.zeros((t_len, n))

    eps = rng.normal(0.0, cfg.sigma_r, (t_len, n)) if cfg.sigma_r > 0 else np.zeros((t_len, n))
    returns = np.zeros((t_len, n))
    for k in range(1, t_len):
        returns[k] = x[k - 1] @ f[k - 1] + betas * mkt[k] + du[k] + eps[k]

    index_ret = returns.mean(axis=1)

    close0 = 100.0 * np.exp(rng.normal(0.0, 0.5, n))
    close = close0 * np.cumprod(1.0 + returns, axis=0)
    shares = np.round(1e6 * np.exp(rng.normal(0.0, 1.0, n)))
    shares_grid = np.tile(shares, (t_len, 1))
    eps_grid = np.tile(0.05 * close0, (t_len, 1))
    listed = np.ones((t_len, n), dtype=bool)

    dates = pd.bdate_range(start=cfg.start_date, periods=t_len)
    assets = np.array([f"SYN{j:04d}" for j in range(n)])

    raw = RawPanel(
        dates=dates,
        assets=assets,
        close=close,
        shares=shares_grid,
        total_return=returns,
        eps=eps_grid,
        listed=listed,
        index_total_return=index_ret,
        risk_free_annual=np.full(t_len, cfg.rf_annual),
    )
    values = {f"x{j}": x[:, :, j].copy() for j in range(m)}
    values["beta"] = np.tile(betas, (t_len, 1))
    exposures = ExposureSet(dates=dates, assets=assets, values=values)
    return raw, exposures, f


def synth_factor_panel(cfg: SynthConfig):
    """Convenience: generate and assemble the FactorPanel plus the true f path."""
    raw, exposures, f = synth_generate(cfg)
    names = tuple(f"x{j}" for j in range(cfg.n_factors))
    panel = build_factor_panel(raw, exposures, factor_names=names, top_n=cfg.n_assets)
    return panel, f
