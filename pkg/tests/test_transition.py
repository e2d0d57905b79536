import numpy as np
import pytest

from statarb.errors import InsufficientHistoryError, InvalidInputError
from statarb.filters import GaussianBelief, kf_predict, sigma_points
from statarb.transition import (
    NeuralARModel,
    aleatoric_psi,
    companion_wrap,
    identity_transition,
    neural_fit,
    neural_predict,
    rolling_state_cov,
)


# ---------------------------------------------------------------------------
# identity / rolling state covariance
# ---------------------------------------------------------------------------

def test_identity_transition():
    np.testing.assert_array_equal(identity_transition(np.array([0.1, -0.2])), [0.1, -0.2])
    np.testing.assert_array_equal(identity_transition(np.zeros(3)), np.zeros(3))


def test_identity_with_kf_predict_grows_by_psi(rng):
    psi = np.diag([0.1, 0.2])
    belief = GaussianBelief(rng.standard_normal(2), np.eye(2))
    out = kf_predict(belief, np.eye(2), psi)
    np.testing.assert_allclose(out.mean, belief.mean)
    np.testing.assert_allclose(out.cov, belief.cov + psi)


def test_rolling_state_cov_constant_history_floors():
    hist = np.ones((30, 2))
    cov = rolling_state_cov(hist, window=20)
    np.testing.assert_allclose(np.diag(cov), 1e-12)
    assert cov[0, 1] == 0.0


def test_rolling_state_cov_alternating_signs():
    # +/-1 alternating history -> increments +/-2; sample variance of the
    # trailing 20 increments is 4*n/(n-1) with n=20 and mean 0
    hist = np.array([(-1.0) ** k for k in range(40)])
    cov = rolling_state_cov(hist, window=20)
    inc = np.diff(hist)[-20:]
    expected = np.var(inc, ddof=1)
    assert cov[0, 0] == pytest.approx(expected)
    assert expected == pytest.approx(4 * 20 / 19)


def test_rolling_state_cov_diagonal_by_construction(rng):
    hist = rng.standard_normal((50, 2))
    cov = rolling_state_cov(hist, window=20)
    assert cov[0, 1] == 0.0 and cov[1, 0] == 0.0


def test_rolling_state_cov_insufficient_history():
    with pytest.raises(InsufficientHistoryError):
        rolling_state_cov(np.ones((1, 2)), window=20)


def test_rolling_state_cov_matches_direct_variance(rng):
    hist = rng.standard_normal(100)
    cov = rolling_state_cov(hist, window=20)
    inc = np.diff(hist)[-20:]
    assert cov[0, 0] == pytest.approx(np.var(inc, ddof=1))


# ---------------------------------------------------------------------------
# neural transition
# ---------------------------------------------------------------------------

@pytest.fixture(scope="module")
def zero_series_model():
    return neural_fit(np.zeros(200), lags=10, epochs=200, seed=3)


def test_neural_fit_zero_series(zero_series_model):
    model = zero_series_model
    mean, var = neural_predict(model, np.zeros(10))
    assert abs(mean) < 1e-6
    assert 0 < var < 1e-9  # scale floor keeps the variance tiny
    losses = np.asarray(model.loss_history)
    assert losses[-1] < losses[0]
    assert np.mean(np.diff(losses)) < 0


def test_neural_fit_decaying_ar1_prediction():
    # deterministic f_k = 0.9 f_{k-1}: hold out the last 20%, evaluate RMSE
    series = 0.9 ** np.arange(2000.0)
    split = int(len(series) * 0.8)
    model = neural_fit(series[:split], lags=10, epochs=300, seed=11)
    errs = []
    for k in range(split, len(series)):
        window = series[k - 10 : k][::-1]
        mean, _ = neural_predict(model, window)
        errs.append(mean - series[k])
    rmse = float(np.sqrt(np.mean(np.square(errs))))
    assert rmse < 0.05 * np.std(series)


def test_neural_fit_white_noise_variance():
    rng = np.random.default_rng(5)
    series = rng.normal(0.0, 0.02, 1500)
    split = int(len(series) * 0.8)
    model = neural_fit(series[:split], lags=10, epochs=300, seed=5)
    variances = []
    for k in range(split, len(series)):
        _, var = neural_predict(model, series[k - 10 : k][::-1])
        variances.append(var)
    ratio = np.mean(variances) / np.var(series)
    assert 0.5 < ratio < 2.0


def test_neural_fit_reproducible_and_serializable():
    rng = np.random.default_rng(9)
    series = rng.normal(0.0, 1.0, 300)
    a = neural_fit(series, lags=10, epochs=100, seed=42)
    b = neural_fit(series, lags=10, epochs=100, seed=42)
    np.testing.assert_array_equal(a.w1, b.w1)
    np.testing.assert_array_equal(a.w2, b.w2)

    restored = NeuralARModel.from_json(a.to_json())
    window = series[-10:][::-1]
    np.testing.assert_allclose(neural_predict(a, window), neural_predict(restored, window))


def test_neural_fit_too_short():
    with pytest.raises(InsufficientHistoryError):
        neural_fit(np.zeros(10), lags=10)


def test_neural_predict_rejects_nonfinite(zero_series_model):
    with pytest.raises(InvalidInputError):
        neural_predict(zero_series_model, [np.nan] * 10)


# ---------------------------------------------------------------------------
# companion form / aleatoric process noise
# ---------------------------------------------------------------------------

def _constant_zero_model(lags=3):
    return NeuralARModel(
        lags=lags,
        w1=np.zeros((lags, 4)),
        b1=np.zeros(4),
        w2=np.zeros((4, 2)),
        b2=np.zeros(2),
        x_loc=0.0,
        x_scale=1.0,
    )


def test_companion_shift_structure():
    state_map, noise_col = companion_wrap(_constant_zero_model(lags=3))
    out = state_map(np.array([5.0, 7.0, 9.0]))
    np.testing.assert_allclose(out, [0.0, 5.0, 7.0])
    np.testing.assert_array_equal(noise_col, [1.0, 0.0, 0.0])


def test_companion_lag_copies_exact(rng):
    series = rng.normal(0.0, 1.0, 200)
    model = neural_fit(series, lags=5, epochs=50, seed=1)
    state_map, _ = companion_wrap(model)
    x = rng.standard_normal(5)
    out = state_map(x)
    np.testing.assert_array_equal(out[1:], x[:-1])


def test_companion_ukf_tracks_ar1_factor():
    # synthetic AR(1) factor observed with noise; companion UKF should track
    # with RMSE below the measurement-noise std
    from statarb.filters import ukf_step

    rng = np.random.default_rng(17)
    t_len, lags = 600, 4
    phi, sig_f, sig_y = 0.9, 0.3, 0.5
    f_path = np.zeros(t_len)
    for k in range(1, t_len):
        f_path[k] = phi * f_path[k - 1] + rng.normal(0.0, sig_f)
    y_obs = f_path + rng.normal(0.0, sig_y, t_len)

    model = neural_fit(f_path[:300], lags=lags, epochs=300, seed=2)
    state_map, _ = companion_wrap(model)
    g = lambda x: x[:1]
    belief = GaussianBelief(np.zeros(lags), np.eye(lags))
    omega = np.array([[sig_y**2]])
    errs = []
    for k in range(300, t_len):
        ss = sigma_points(belief, (1.0, 2.0, 2.0))
        psi_val = aleatoric_psi(model, ss.points, ss.wm)
        psi = np.zeros((lags, lags))
        psi[0, 0] = psi_val
        belief, _, _ = ukf_step(
            belief, [y_obs[k]], state_map, g, psi, omega, scaling=(1.0, 2.0, 2.0)
        )
        errs.append(belief.mean[0] - f_path[k])
    rmse = float(np.sqrt(np.mean(np.square(errs))))
    assert rmse < sig_y


def test_aleatoric_psi_constant_variance(rng):
    model = neural_fit(rng.normal(0, 1, 200), lags=3, epochs=50, seed=0)
    windows = np.tile(np.array([0.1, 0.2, 0.3]), (7, 1))
    wm = np.full(7, 1.0 / 7)
    _, var = model.predict_batch(windows[:1])
    assert aleatoric_psi(model, windows, wm) == pytest.approx(var[0])


def test_aleatoric_psi_degenerate_weights(rng):
    model = neural_fit(rng.normal(0, 1, 200), lags=3, epochs=50, seed=0)
    windows = rng.standard_normal((5, 3))
    wm = np.array([1.0, 0.0, 0.0, 0.0, 0.0])
    _, variances = model.predict_batch(windows)
    assert aleatoric_psi(model, windows, wm) == pytest.approx(variances[0])


def test_aleatoric_psi_convexity(rng):
    # alpha=1, kappa=2 keeps every mean weight nonnegative
    model = neural_fit(rng.normal(0, 1, 300), lags=4, epochs=50, seed=0)
    belief = GaussianBelief(rng.standard_normal(4), np.eye(4) * 0.1)
    ss = sigma_points(belief, (1.0, 2.0, 2.0))
    assert np.all(ss.wm >= 0)
    _, variances = model.predict_batch(ss.points)
    value = aleatoric_psi(model, ss.points, ss.wm)
    assert variances.min() - 1e-12 <= value <= variances.max() + 1e-12
