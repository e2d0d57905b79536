import numpy as np
import pandas as pd
import pytest

from statarb.errors import InvalidInputError
from statarb.market_data import FactorPanel, SynthConfig, synth_factor_panel
from statarb.strategy import (
    StrategyParams,
    benchmark_spread,
    run_signals,
    spread,
    step_position,
    year_end_flags,
    zscore,
)


def make_panel(returns, dates=None, delist_next=None):
    r = np.asarray(returns, dtype=float)
    t_len, n = r.shape
    if dates is None:
        dates = pd.bdate_range("2020-01-06", periods=t_len)
    return FactorPanel(
        dates=dates,
        assets=np.array([f"A{j}" for j in range(n)]),
        total_return=r,
        exposures=np.full((t_len, n, 1), np.nan),
        factor_names=("x0",),
        betas=np.ones((t_len, n)),
        listed=np.ones((t_len, n), dtype=bool),
        universe=np.ones((t_len, n), dtype=bool),
        delist_next=(
            delist_next if delist_next is not None else np.zeros((t_len, n), dtype=bool)
        ),
        index_return=np.zeros(t_len),
        rf_annual=np.zeros(t_len),
    )


# ---------------------------------------------------------------------------
# spread / zscore
# ---------------------------------------------------------------------------

def test_spread_zero_when_filtered_equals_realized(rng):
    r = rng.normal(0, 0.01, (50, 3))
    out = spread(r, r, 5)
    assert np.nanmax(np.abs(out)) == 0.0


def test_spread_ws1_is_daily_deviation(rng):
    r = rng.normal(0, 0.01, (20, 2))
    f = rng.normal(0, 0.01, (20, 2))
    np.testing.assert_allclose(spread(r, f, 1), r - f)


def test_spread_matches_windowed_sum_oracle(rng):
    r = rng.normal(0, 0.01, (60, 2))
    f = rng.normal(0, 0.01, (60, 2))
    out = spread(r, f, 7)
    for k in range(6, 60):
        oracle = np.sum(r[k - 6 : k + 1] - f[k - 6 : k + 1], axis=0)
        np.testing.assert_allclose(out[k], oracle, atol=1e-12)
    assert np.all(np.isnan(out[:6]))


def test_zscore_constant_spread_is_zero():
    s = np.full((40, 1), 0.3)
    z = zscore(s, 10)
    assert np.nanmax(np.abs(z)) == 0.0


def test_zscore_definitional_unit_case(rng):
    s = rng.normal(0, 1.0, (30, 1))
    window = s[19:29, 0]
    s[29, 0] = window.mean() + window.std(ddof=1)
    z = zscore(s, 10)
    assert z[29, 0] == pytest.approx(1.0, abs=1e-9)


def test_zscore_matches_bruteforce_oracle(rng):
    s = rng.normal(0, 1.0, (80, 2))
    z = zscore(s, 15)
    for k in range(15, 80):
        window = s[k - 15 : k]
        mean = window.mean(axis=0)
        std = np.maximum(window.std(axis=0, ddof=1), 1e-8)
        np.testing.assert_allclose(z[k], (s[k] - mean) / std, atol=1e-10)
    assert np.all(np.isnan(z[:15]))


# ---------------------------------------------------------------------------
# state machine
# ---------------------------------------------------------------------------

PARAMS = StrategyParams(ws=5, long_entry=1.0, short_entry=1.0, z_window=60)


def test_enter_long_below_threshold():
    assert step_position(0, -1.2, False, False, PARAMS) == 1


def test_exit_long_on_zero_crossing():
    assert step_position(1, 0.01, False, False, PARAMS) == 0


def test_year_end_closeout_beats_exit_rule():
    assert step_position(-1, -3.0, True, False, PARAMS) == 0


def test_delisting_closes_and_blocks():
    assert step_position(1, -5.0, False, True, PARAMS) == 0
    assert step_position(0, -5.0, False, True, PARAMS) == 0


def test_undefined_z_holds_state():
    assert step_position(1, np.nan, False, False, PARAMS) == 1
    assert step_position(0, np.nan, False, False, PARAMS) == 0


def test_params_validation():
    with pytest.raises(InvalidInputError):
        StrategyParams(ws=0)
    with pytest.raises(InvalidInputError):
        StrategyParams(long_entry=-1.0)
    with pytest.raises(InvalidInputError):
        StrategyParams(z_window=2)


# ---------------------------------------------------------------------------
# benchmark spread
# ---------------------------------------------------------------------------

def test_benchmark_identical_assets_is_zero(rng):
    col = rng.normal(0, 0.01, 40)
    r = np.tile(col[:, None], (1, 4))
    b = benchmark_spread(r, 10)
    assert np.nanmax(np.abs(b)) < 1e-15


def test_benchmark_symmetric_pair():
    x = 0.004
    r = np.column_stack([np.full(30, x), np.full(30, -x)])
    b = benchmark_spread(r, 10)
    np.testing.assert_allclose(b[9:, 0], 10 * x, atol=1e-12)
    np.testing.assert_allclose(b[9:, 1], -10 * x, atol=1e-12)


def test_benchmark_cross_sectional_mean_is_zero(rng):
    r = rng.normal(0, 0.02, (60, 7))
    b = benchmark_spread(r, 10)
    means = np.nanmean(b[9:], axis=1)
    np.testing.assert_allclose(means, 0.0, atol=1e-12)


# ---------------------------------------------------------------------------
# run_signals
# ---------------------------------------------------------------------------

def test_run_signals_all_flat_when_filtered_matches(rng):
    r = rng.normal(0, 0.01, (120, 3))
    panel = make_panel(r)
    positions = run_signals(panel, r, StrategyParams(ws=5, z_window=20))
    assert np.all(positions == 0)


def test_run_signals_single_round_trip():
    t_len = 26
    d = np.zeros((t_len, 1))
    d[:24, 0] = 0.01 * (-1.0) ** np.arange(24)
    d[24, 0] = -0.06  # deep negative deviation -> long entry
    d[25, 0] = 0.06  # snaps back through zero -> exit
    panel = make_panel(d)
    params = StrategyParams(ws=1, long_entry=1.5, short_entry=2.0, z_window=20)
    positions = run_signals(panel, np.zeros_like(d), params)
    assert positions[24, 0] == 1
    assert positions[25, 0] == 0
    assert np.count_nonzero(positions) == 1  # exactly one round trip


def test_run_signals_truncation_no_lookahead(rng):
    cfg = SynthConfig(n_assets=15, n_factors=2, days=200, seed=21,
                      mispricing_scale=2.0)
    panel, _ = synth_factor_panel(cfg)
    r_filt = np.zeros((panel.n_days, panel.n_assets))
    params = StrategyParams(ws=5, z_window=20)
    full = run_signals(panel, r_filt, params)
    cut = 150
    import dataclasses

    part_panel = dataclasses.replace(
        panel,
        dates=panel.dates[:cut],
        total_return=panel.total_return[:cut],
        exposures=panel.exposures[:cut],
        betas=panel.betas[:cut],
        listed=panel.listed[:cut],
        universe=panel.universe[:cut],
        delist_next=panel.delist_next[:cut],
        index_return=panel.index_return[:cut],
        rf_annual=panel.rf_annual[:cut],
    )
    part = run_signals(part_panel, r_filt[:cut], params)
    # the truncation boundary day may differ (it becomes a forced close-out)
    np.testing.assert_array_equal(full[: cut - 1], part[: cut - 1])


def test_positions_valid_values_and_no_direct_flips(rng):
    cfg = SynthConfig(n_assets=10, n_factors=2, days=300, seed=2, mispricing_scale=2.0)
    panel, _ = synth_factor_panel(cfg)
    positions = run_signals(panel, np.zeros((300, 10)), StrategyParams(ws=2, z_window=10))
    assert set(np.unique(positions)).issubset({-1, 0, 1})
    diffs = np.abs(np.diff(positions.astype(int), axis=0))
    assert diffs.max() <= 1  # never long -> short in one step


def test_no_position_survives_year_boundary():
    dates = pd.bdate_range("2020-11-02", periods=120)  # spans a year end
    rng = np.random.default_rng(3)
    r = rng.normal(0, 0.02, (120, 6))
    panel = make_panel(r, dates=dates)
    positions = run_signals(
        panel, np.zeros_like(r), StrategyParams(ws=1, long_entry=0.5,
                                                short_entry=0.5, z_window=10)
    )
    assert np.count_nonzero(positions) > 0  # the rule actually trades here
    flags = year_end_flags(dates)
    assert np.all(positions[flags] == 0)


def test_infinite_thresholds_never_trade(rng):
    cfg = SynthConfig(n_assets=8, n_factors=2, days=200, seed=5, mispricing_scale=2.0)
    panel, _ = synth_factor_panel(cfg)
    params = StrategyParams(ws=5, long_entry=1e12, short_entry=1e12, z_window=20)
    positions = run_signals(panel, np.zeros((200, 8)), params)
    assert np.all(positions == 0)


def test_benchmark_mode_ignores_exposures_and_filter(rng):
    r = rng.normal(0, 0.02, (150, 5))
    panel = make_panel(r)  # exposures are all-NaN
    params = StrategyParams(ws=10, long_entry=1.0, short_entry=1.0, z_window=20)
    positions = run_signals(panel, None, params, mode="benchmark")
    assert set(np.unique(positions)).issubset({-1, 0, 1})


def test_delisting_forces_close():
    t_len = 40
    d = np.zeros((t_len, 1))
    d[:30, 0] = 0.01 * (-1.0) ** np.arange(30)
    d[30:35, 0] = -0.06  # stays depressed: position would stay long
    d[35:, 0] = np.nan  # no data after the delisting
    delist = np.zeros((t_len, 1), dtype=bool)
    delist[34, 0] = True
    panel = make_panel(d, delist_next=delist)
    params = StrategyParams(ws=1, long_entry=1.5, short_entry=2.0, z_window=20)
    positions = run_signals(panel, np.zeros_like(d), params)
    assert positions[33, 0] == 1
    assert np.all(positions[34:, 0] == 0)  # closed at delisting, never re-entered
