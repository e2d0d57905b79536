import numpy as np
import pandas as pd
import pytest

from statarb.errors import InvalidInputError, PanelFormatError
from statarb.market_data import (
    RawPanel,
    SynthConfig,
    build_exposures,
    build_factor_panel,
    compute_beta_vol,
    compute_momentum,
    compute_size,
    load_panel,
    rolling_beta_vol,
    select_universe,
    synth_generate,
    write_panel,
)

ASSET_HEADER = "date,asset_id,close,shares,total_return,eps,listed\n"
INDEX_HEADER = "date,index_total_return,risk_free_annual\n"


def _write(tmp_path, assets_text, index_text):
    a = tmp_path / "assets.csv"
    i = tmp_path / "index.csv"
    a.write_text(assets_text)
    i.write_text(index_text)
    return a, i


def _small_files(tmp_path):
    assets = ASSET_HEADER + "".join(
        f"{d},{aid},100,1000000,0.01,2.5,1\n"
        for aid in ("AAA", "BBB")
        for d in ("2020-01-01", "2020-01-02", "2020-01-03")
    )
    index = INDEX_HEADER + "".join(
        f"{d},0.005,0.02\n" for d in ("2020-01-01", "2020-01-02", "2020-01-03")
    )
    return _write(tmp_path, assets, index)


# ---------------------------------------------------------------------------
# load / write
# ---------------------------------------------------------------------------

def test_load_panel_well_formed(tmp_path):
    a, i = _small_files(tmp_path)
    panel = load_panel(a, i)
    assert panel.n_days == 3 and panel.n_assets == 2
    assert panel.listed.sum() == 6
    assert np.all(panel.total_return == 0.01)


def test_load_panel_duplicate_key(tmp_path):
    assets = ASSET_HEADER + (
        "2020-01-01,AAA,100,1,0.0,,1\n"
        "2020-01-01,AAA,101,1,0.0,,1\n"
    )
    index = INDEX_HEADER + "2020-01-01,0.0,0.0\n"
    a, i = _write(tmp_path, assets, index)
    with pytest.raises(PanelFormatError, match=r"AAA.*2020-01-01"):
        load_panel(a, i)


def test_load_panel_missing_column(tmp_path):
    assets = "date,asset_id,close,shares,total_return,eps\n2020-01-01,AAA,1,1,0,\n"
    index = INDEX_HEADER + "2020-01-01,0.0,0.0\n"
    a, i = _write(tmp_path, assets, index)
    with pytest.raises(PanelFormatError, match="listed"):
        load_panel(a, i)


def test_load_panel_unparseable_row_reports_line(tmp_path):
    assets = ASSET_HEADER + (
        "2020-01-01,AAA,100,1,0.0,,1\n"
        "2020-01-02,AAA,oops,1,0.0,,1\n"
    )
    index = INDEX_HEADER + "2020-01-01,0.0,0.0\n2020-01-02,0.0,0.0\n"
    a, i = _write(tmp_path, assets, index)
    with pytest.raises(PanelFormatError, match="line 3"):
        load_panel(a, i)


def test_panel_round_trip(tmp_path):
    raw, _, _ = synth_generate(SynthConfig(n_assets=4, n_factors=2, days=30, seed=5))
    a1, i1 = tmp_path / "a1.csv", tmp_path / "i1.csv"
    write_panel(raw, a1, i1)
    loaded = load_panel(a1, i1)
    a2, i2 = tmp_path / "a2.csv", tmp_path / "i2.csv"
    write_panel(loaded, a2, i2)
    assert a1.read_bytes() == a2.read_bytes()
    assert i1.read_bytes() == i2.read_bytes()
    np.testing.assert_allclose(loaded.total_return, raw.total_return, rtol=1e-11)
    np.testing.assert_allclose(loaded.close, raw.close, rtol=1e-11)


# ---------------------------------------------------------------------------
# features
# ---------------------------------------------------------------------------

def test_beta_vol_identical_series(rng):
    idx = rng.normal(0, 0.01, 600)
    beta, vol = compute_beta_vol(idx, idx)
    assert beta == pytest.approx(1.0)
    assert vol == pytest.approx(0.0, abs=1e-20)


def test_beta_vol_negative_scaling(rng):
    idx = rng.normal(0, 0.01, 600)
    beta, vol = compute_beta_vol(-2.0 * idx, idx)
    assert beta == pytest.approx(-2.0)
    assert vol == pytest.approx(0.0, abs=1e-20)


def test_beta_vol_noisy_regression():
    # slope s.e. = sigma_eps / (sigma_idx * sqrt(n)) ~= 0.015, so +-0.05 is ~3.4 s.e.
    betas, vols = [], []
    for seed in range(20):
        rng = np.random.default_rng(seed)
        idx = rng.normal(0, 0.03, 504)
        asset = 0.8 * idx + rng.normal(0, 0.01, 504)  # sigma^2 = 1e-4
        b, v = compute_beta_vol(asset, idx)
        betas.append(b)
        vols.append(v)
    assert np.all(np.abs(np.array(betas) - 0.8) < 0.05)
    assert np.all(np.abs(np.array(vols) - 1e-4) < 3e-5)


def test_beta_vol_insufficient_history():
    assert compute_beta_vol(np.zeros(100), np.zeros(100)) == (pytest.approx(np.nan, nan_ok=True),) * 2


def test_rolling_beta_vol_matches_pointwise(rng):
    t_len, n = 600, 3
    idx = rng.normal(0, 0.01, t_len)
    assets = np.outer(idx, rng.uniform(0.5, 1.5, n)) + rng.normal(0, 0.005, (t_len, n))
    beta, vol = rolling_beta_vol(assets, idx, window=504)
    for k in (503, 550, 599):
        for j in range(n):
            b, v = compute_beta_vol(assets[: k + 1, j], idx[: k + 1], window=504)
            assert beta[k, j] == pytest.approx(b)
            assert vol[k, j] == pytest.approx(v)
    assert np.all(np.isnan(beta[:503]))


def test_momentum_zero_returns():
    r = np.zeros(300)
    assert compute_momentum(r, at=280) == pytest.approx(0.0)


def test_momentum_constant_returns():
    r = np.full(400, 0.001)
    expected = (1.001) ** 231 - 1
    assert compute_momentum(r, at=300) == pytest.approx(expected, rel=1e-12)


def test_momentum_matches_product_oracle(rng):
    r = rng.normal(0, 0.02, 400)
    series = compute_momentum(r)
    for k in (252, 300, 399):
        window = r[k - 252 : k - 21]
        assert len(window) == 231
        oracle = np.prod(1.0 + window) - 1.0
        assert series[k] == pytest.approx(oracle, rel=1e-12, abs=1e-12)
    assert np.all(np.isnan(series[:252]))


def test_compute_size():
    assert compute_size(10.0, 1e6) == pytest.approx(1e7)
    assert compute_size(0.5, 2e6) == pytest.approx(1e6)


# ---------------------------------------------------------------------------
# universe selection
# ---------------------------------------------------------------------------

def _tiny_panel(sizes, ids=None):
    n = len(sizes)
    ids = np.array(ids if ids is not None else [f"A{j}" for j in range(n)])
    dates = pd.DatetimeIndex([pd.Timestamp("2020-01-01")])
    close = np.array([[float(s) for s in sizes]])
    shares = np.ones((1, n))
    return RawPanel(
        dates=dates,
        assets=ids,
        close=close,
        shares=shares,
        total_return=np.zeros((1, n)),
        eps=np.full((1, n), np.nan),
        listed=np.ones((1, n), dtype=bool),
        index_total_return=np.zeros(1),
        risk_free_annual=np.zeros(1),
    )


def test_universe_all_when_n_large():
    panel = _tiny_panel([3, 1, 2])
    out = select_universe(panel, 10, "2020-01-01")
    assert set(out) == {"A0", "A1", "A2"}


def test_universe_argmax_when_n_one():
    panel = _tiny_panel([3, 10, 2])
    assert list(select_universe(panel, 1, "2020-01-01")) == ["A1"]


def test_universe_tie_breaks_lexicographically():
    panel = _tiny_panel([5, 5, 1], ids=["ZZZ", "AAA", "MMM"])
    assert list(select_universe(panel, 1, "2020-01-01")) == ["AAA"]


# ---------------------------------------------------------------------------
# synthetic generator
# ---------------------------------------------------------------------------

def test_synth_noiseless_single_factor_returns_equal_f():
    cfg = SynthConfig(
        n_assets=5, n_factors=1, days=50, sigma_r=0.0, unit_exposures=True, seed=1
    )
    raw, _, f = synth_generate(cfg)
    for k in range(1, 50):
        np.testing.assert_allclose(raw.total_return[k], f[k - 1, 0], atol=1e-15)


def test_synth_deterministic_per_seed():
    cfg = SynthConfig(n_assets=10, n_factors=2, days=60, seed=9)
    a = synth_generate(cfg)
    b = synth_generate(cfg)
    np.testing.assert_array_equal(a[0].total_return, b[0].total_return)
    np.testing.assert_array_equal(a[2], b[2])


def test_synth_residual_covariance():
    cfg = SynthConfig(n_assets=8, n_factors=2, days=2000, sigma_r=0.02, seed=3)
    raw, exposures, f = synth_generate(cfg)
    x = np.stack([exposures.values[f"x{j}"] for j in range(2)], axis=2)
    resid = np.empty((cfg.days - 1, cfg.n_assets))
    for k in range(1, cfg.days):
        resid[k - 1] = raw.total_return[k] - x[k - 1] @ f[k - 1]
    cov = np.cov(resid.T)
    np.testing.assert_allclose(np.diag(cov), 0.02**2, rtol=0.2)
    # off-diagonal correlations obey the 3/sqrt(T) law-of-large-numbers bound
    corr = cov / np.sqrt(np.outer(np.diag(cov), np.diag(cov)))
    off_corr = corr[~np.eye(cfg.n_assets, dtype=bool)]
    assert np.max(np.abs(off_corr)) < 3.0 / np.sqrt(cfg.days)


def test_synth_config_validation():
    with pytest.raises(InvalidInputError):
        SynthConfig(sigma_f=0.0)
    with pytest.raises(InvalidInputError):
        SynthConfig(phi=1.5)
    SynthConfig(sigma_r=0.0)  # allowed: exact noiseless panels


# ---------------------------------------------------------------------------
# no-lookahead / coverage invariants
# ---------------------------------------------------------------------------

def _truncate_raw(raw, k):
    return RawPanel(
        dates=raw.dates[:k],
        assets=raw.assets,
        close=raw.close[:k],
        shares=raw.shares[:k],
        total_return=raw.total_return[:k],
        eps=raw.eps[:k],
        listed=raw.listed[:k],
        index_total_return=raw.index_total_return[:k],
        risk_free_annual=raw.risk_free_annual[:k],
    )


def test_features_no_lookahead():
    raw, _, _ = synth_generate(SynthConfig(n_assets=6, n_factors=2, days=620, seed=12))
    full = build_exposures(raw)
    cut = 560
    part = build_exposures(_truncate_raw(raw, cut))
    for name in ("beta", "volatility", "momentum", "size", "value"):
        np.testing.assert_array_equal(
            np.nan_to_num(full.values[name][:cut], nan=-9e9),
            np.nan_to_num(part.values[name], nan=-9e9),
        )


def test_beta_coverage_monotone_while_listed():
    raw, _, _ = synth_generate(SynthConfig(n_assets=4, n_factors=2, days=700, seed=4))
    exposures = build_exposures(raw)
    beta = exposures.values["beta"]
    for j in range(4):
        covered = np.isfinite(beta[:, j])
        first = np.argmax(covered)
        assert covered[first:].all()


def _truncate_exposures(exposures, k):
    from statarb.market_data import ExposureSet

    return ExposureSet(
        dates=exposures.dates[:k],
        assets=exposures.assets,
        values={name: arr[:k] for name, arr in exposures.values.items()},
    )


def test_universe_no_lookahead():
    raw, exposures, _ = synth_generate(SynthConfig(n_assets=20, n_factors=2, days=80, seed=8))
    names = ("x0", "x1")
    full = build_factor_panel(raw, exposures, factor_names=names, top_n=10)
    part = build_factor_panel(
        _truncate_raw(raw, 60),
        _truncate_exposures(exposures, 60),
        factor_names=names,
        top_n=10,
    )
    np.testing.assert_array_equal(full.universe[:60], part.universe)
