"""Online estimation of latent factor premia over a cross-sectional factor model.

Daily loop: estimate the premium vector by cross-sectional OLS, update a
Kalman/unscented filter with the realized cross-section, form the filtered
return r_filt_k = X_k f^(filt)_{k-1}, then predict forward. Measurement timing
follows the model's pairing of r_k with X_{k-1}; nothing at date k reads data
dated after k.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np
from scipy.linalg import qr

from .errors import InvalidInputError, SingularDesignError
from .filters import (
    DEFAULT_SCALING,
    GaussianBelief,
    kf_predict,
    kf_update_diag,
    sigma_points,
    unscented_transform,
)
from .market_data import FactorPanel
from .transition import VARIANCE_FLOOR, NeuralARModel, neural_fit, rolling_state_cov

OLS_RCOND_MIN = 1e-10
OBS_VAR_FLOOR = 1e-10
# fallback observation variance if no asset has two residuals yet
OBS_VAR_DEFAULT = 1e-4

MODES = ("KF", "UKF", "OLS")


@dataclass(frozen=True)
class FactorEstimate:
    """A premium-vector estimate and, for OLS, its cross-sectional residuals."""

    f_hat: np.ndarray
    residuals: Optional[np.ndarray]
    source: str  # OLS | KF-filter | UKF-filter | KF-predict | UKF-predict


@dataclass
class FactorObservation:
    """One day's inputs: date-k exposures and the return realized over [k-1, k].

    The model pairs r_k with X_{k-1}; the engine holds yesterday's exposures in
    its state, so each observation carries only same-dated data.
    """

    k: int
    exposures: np.ndarray  # (n, m) raw values, NaN outside coverage
    returns_excess: np.ndarray  # (n,) excess returns over [k-1, k]
    in_universe: np.ndarray  # (n,) bool


@dataclass
class EngineOptions:
    standardize: bool = True
    winsor_z: float = 3.0
    add_intercept: bool = False
    psi_window: int = 20
    d_window: int = 20
    cold_start_days: int = 21
    prior_mean: float = 0.0
    prior_var: float = 1.0
    transition: str = "neural"  # UKF transition: "neural" or "identity"
    neural_lags: int = 10
    neural_epochs: int = 500
    ukf_scaling: Tuple[float, float, float] = DEFAULT_SCALING
    seed: int = 0
    log_size_column: str = "size"
    d_scale: float = 1.0  # diagnostic multiplier on the measurement noise


def standardize_exposures(x: np.ndarray, log_columns=(), winsor_z: float = 3.0) -> np.ndarray:
    """Cross-sectional standardization: winsorize at +-winsor_z MAD-based z, then z-score.

    `log_columns` are log-transformed first (market cap is power-law distributed
    and would saturate the winsorization otherwise). Output columns have mean 0
    and population std 1.
    """
    out = np.array(x, dtype=float)
    if out.ndim != 2:
        raise InvalidInputError("exposure matrix must be 2-d")
    for j in log_columns:
        col = out[:, j]
        if np.any(col <= 0):
            raise InvalidInputError(f"log-transform column {j} has non-positive values")
        out[:, j] = np.log(col)
    med = np.median(out, axis=0)
    mad = np.median(np.abs(out - med), axis=0)
    scale = np.maximum(1.4826 * mad, 1e-12)
    z = np.clip((out - med) / scale, -winsor_z, winsor_z)
    mean = z.mean(axis=0)
    std = np.maximum(z.std(axis=0), 1e-12)
    return (z - mean) / std


def cross_sectional_ols(x: np.ndarray, r: np.ndarray) -> FactorEstimate:
    """Least-squares premium estimate from one day's cross-section.

    Raises SingularDesignError naming the collinear columns when X'X is
    numerically rank deficient.
    """
    x = np.asarray(x, dtype=float)
    r = np.asarray(r, dtype=float)
    if x.ndim != 2 or r.ndim != 1 or x.shape[0] != r.shape[0]:
        raise InvalidInputError("design/returns shapes inconsistent")
    n, m = x.shape
    if n < m:
        raise InvalidInputError(f"underdetermined design: {n} observations, {m} factors")

    sv = np.linalg.svd(x, compute_uv=False)
    rcond_xtx = (sv.min() / sv.max()) ** 2 if sv.max() > 0 else 0.0
    if rcond_xtx < OLS_RCOND_MIN:
        _, rr, piv = qr(x, mode="economic", pivoting=True)
        diag = np.abs(np.diag(rr))
        rank = int(np.sum(diag > diag.max() * 1e-10)) if diag.max() > 0 else 0
        bad = sorted(int(c) for c in piv[rank:])
        raise SingularDesignError(
            f"rank-deficient design (rcond {rcond_xtx:.2e}); collinear columns {bad}",
            columns=bad,
        )
    f_hat, *_ = np.linalg.lstsq(x, r, rcond=None)
    residuals = r - x @ f_hat
    return FactorEstimate(f_hat=f_hat, residuals=residuals, source="OLS")


def estimate_obs_cov(residual_history: np.ndarray, window: int = 20) -> np.ndarray:
    """Per-asset residual variances over the trailing window (diagonal of D).

    Assets with fewer than two residual observations receive the
    cross-sectional median variance; everything is floored at 1e-10.
    """
    hist = np.asarray(residual_history, dtype=float)
    if hist.ndim == 1:
        hist = hist[:, None]
    tail = hist[-window:]
    finite = np.isfinite(tail)
    counts = finite.sum(axis=0)
    var = np.full(tail.shape[1], np.nan)
    enough = counts >= 2
    if enough.any():
        with np.errstate(invalid="ignore"):
            sub = np.where(finite, tail, np.nan)
            var[enough] = np.nanvar(sub[:, enough], axis=0, ddof=1)
    fallback = np.nanmedian(var[enough]) if enough.any() else OBS_VAR_DEFAULT
    var[~enough] = fallback
    return np.maximum(var, OBS_VAR_FLOOR)


@dataclass
class ModelRunState:
    """Mutable per-run filter state (one mode, one panel)."""

    mode: str
    n_factors: int
    options: EngineOptions
    belief: Optional[GaussianBelief] = None
    f_ols_history: List[np.ndarray] = field(default_factory=list)
    d_buffer: deque = field(default_factory=deque)
    prev_x: Optional[np.ndarray] = None  # standardized X_{k-1}
    prev_valid: Optional[np.ndarray] = None
    models: List[Optional[NeuralARModel]] = field(default_factory=list)
    ols_days: int = 0

    @property
    def lag_order(self) -> int:
        if self.mode == "UKF" and self.options.transition == "neural":
            return self.options.neural_lags
        return 1

    @property
    def state_dim(self) -> int:
        return self.n_factors * self.lag_order


def _selector(m: int, lag_order: int) -> np.ndarray:
    sel = np.zeros((m, m * lag_order))
    for j in range(m):
        sel[j, j * lag_order] = 1.0
    return sel


class FactorEngine:
    """Drives ModelRunState through daily FactorObservations for one mode."""

    def __init__(self, n_assets: int, n_factors: int, mode: str, options: Optional[EngineOptions] = None):
        if mode not in MODES:
            raise InvalidInputError(f"mode must be one of {MODES}, got {mode!r}")
        self.n_assets = n_assets
        self.n_factors = n_factors
        self.options = options or EngineOptions()
        self.state = ModelRunState(mode=mode, n_factors=n_factors, options=self.options)
        self.state.d_buffer = deque(maxlen=self.options.d_window)
        self.state.models = [None] * n_factors
        self._selector = _selector(n_factors, self.state.lag_order)
        self._log_cols: Tuple[int, ...] = ()
        self.last_psi: Optional[np.ndarray] = None

    def set_log_columns(self, cols) -> None:
        self._log_cols = tuple(cols)

    # -- helpers -----------------------------------------------------------

    def _standardized(self, exposures: np.ndarray, valid: np.ndarray) -> Optional[np.ndarray]:
        if valid.sum() == 0:
            return None
        x = exposures[valid]
        if self.options.standardize:
            x = standardize_exposures(x, log_columns=self._log_cols, winsor_z=self.options.winsor_z)
        if self.options.add_intercept:
            x = np.hstack([np.ones((x.shape[0], 1)), x])
        return x

    @property
    def _design_cols(self) -> int:
        return self.n_factors + (1 if self.options.add_intercept else 0)

    def _premium_of(self, coeffs: np.ndarray) -> np.ndarray:
        return coeffs[1:] if self.options.add_intercept else coeffs

    def _psi_diag(self) -> np.ndarray:
        hist = np.vstack(self.state.f_ols_history[-(self.options.psi_window + 1) :])
        return np.diag(rolling_state_cov(hist, window=self.options.psi_window))

    def _init_belief(self) -> GaussianBelief:
        dim = self.state.state_dim
        return GaussianBelief(
            np.full(dim, self.options.prior_mean),
            np.eye(dim) * self.options.prior_var,
        )

    def _predict(self, belief: GaussianBelief) -> Tuple[GaussianBelief, np.ndarray]:
        """One transition step; returns (predicted belief, per-factor psi diagonal)."""
        m = self.n_factors
        if self.state.mode == "KF":
            psi = self._psi_diag()
            return kf_predict(belief, np.eye(m), np.diag(psi)), psi

        lag = self.state.lag_order
        ss = sigma_points(belief, self.options.ukf_scaling)
        pts = ss.points
        new_pts = np.empty_like(pts)
        psi_full = np.zeros(self.state.state_dim)
        psi_rolling = self._psi_diag()
        for j in range(m):
            block = slice(j * lag, (j + 1) * lag)
            windows = pts[:, block]
            model = self.state.models[j]
            if model is not None:
                means, variances = model.predict_batch(windows)
                noise = max(float(ss.wm @ variances), VARIANCE_FLOOR)
            else:
                means = windows[:, 0]
                noise = float(psi_rolling[j])
            if lag > 1:
                new_pts[:, block.start + 1 : block.stop] = windows[:, :-1]
            new_pts[:, block.start] = means
            psi_full[block.start] = noise
        predicted = unscented_transform(new_pts, ss.wm, ss.wc, np.diag(psi_full))
        return predicted, psi_full[:: lag].copy()

    def refit_transition(self, year_seed: int) -> None:
        """Annual neural refit on the expanding OLS premium history."""
        if self.state.mode != "UKF" or self.options.transition != "neural":
            return
        if not self.state.f_ols_history:
            return
        hist = np.vstack(self.state.f_ols_history)
        lags = self.options.neural_lags
        if hist.shape[0] <= lags + 1:
            return
        for j in range(self.n_factors):
            seed = int(
                np.random.SeedSequence((self.options.seed, j, year_seed)).generate_state(1)[0]
            )
            self.state.models[j] = neural_fit(
                hist[:, j],
                lags=lags,
                epochs=self.options.neural_epochs,
                seed=seed,
            )

    # -- the daily step ----------------------------------------------------

    def step(self, obs: FactorObservation) -> Tuple[np.ndarray, Dict[str, Optional[FactorEstimate]]]:
        """Advance one day; returns (r_filt row, estimates dict).

        Ordering: OLS on (X_{k-1}, r_k) -> filter measurement update ->
        r_filt_k = X_k f_filt_{k-1} -> predict with the current Psi estimate ->
        roll the Psi/D buffers.
        """
        st = self.state
        opts = self.options
        n = self.n_assets
        r_filt = np.full(n, np.nan)
        estimates: Dict[str, Optional[FactorEstimate]] = {
            "ols": None,
            "filtered": None,
            "predicted": None,
        }

        valid_x_k = obs.in_universe & np.all(np.isfinite(obs.exposures), axis=1)
        x_k = self._standardized(obs.exposures, valid_x_k)

        pair_valid = None
        if st.prev_x is not None:
            pair_valid = st.prev_valid & np.isfinite(obs.returns_excess)

        ols_est = None
        resid_row = np.full(n, np.nan)
        if pair_valid is not None and pair_valid.sum() > self._design_cols:
            rows = pair_valid[st.prev_valid]  # prev_x rows to keep
            design = st.prev_x[rows]
            y = obs.returns_excess[pair_valid]
            try:
                ols_est = cross_sectional_ols(design, y)
            except SingularDesignError:
                ols_est = None
            if ols_est is not None:
                resid_row[pair_valid] = ols_est.residuals
                estimates["ols"] = FactorEstimate(
                    f_hat=self._premium_of(ols_est.f_hat),
                    residuals=ols_est.residuals,
                    source="OLS",
                )

        filtering = (
            st.mode in ("KF", "UKF")
            and st.ols_days >= opts.cold_start_days
            and ols_est is not None
        )

        if filtering:
            if st.belief is None:
                # the configured prior acts as the first predictive belief
                st.belief = self._init_belief()
            rows = pair_valid[st.prev_valid]
            design = st.prev_x[rows]
            y = obs.returns_excess[pair_valid]
            if opts.add_intercept:
                # the intercept is an observable per-day nuisance; remove the
                # OLS estimate of it and filter only the factor block
                design = design[:, 1:]
                y = y - ols_est.f_hat[0]
            b = design @ self._selector
            d_diag = estimate_obs_cov(self._d_matrix(), window=opts.d_window)[pair_valid]
            st.belief, _ = kf_update_diag(st.belief, y, b, opts.d_scale * d_diag)
            f_filt = self._selector @ st.belief.mean
            estimates["filtered"] = FactorEstimate(
                f_hat=f_filt, residuals=None, source=f"{st.mode}-filter"
            )
        elif ols_est is not None:
            f_filt = self._premium_of(ols_est.f_hat)
        else:
            f_filt = None

        if f_filt is not None and x_k is not None:
            design_k = x_k[:, 1:] if opts.add_intercept else x_k
            r_filt[valid_x_k] = design_k @ f_filt
        elif x_k is not None and st.prev_x is not None and st.ols_days > 0:
            # mid-run skip day: no update, flat filtered return
            r_filt[valid_x_k] = 0.0

        if filtering:
            st.belief, psi_diag = self._predict(st.belief)
            estimates["predicted"] = FactorEstimate(
                f_hat=self._selector @ st.belief.mean,
                residuals=None,
                source=f"{st.mode}-predict",
            )
            self.last_psi = psi_diag

        # buffers roll only after the predict has consumed the prior estimates
        if ols_est is not None:
            st.f_ols_history.append(self._premium_of(ols_est.f_hat))
            st.ols_days += 1
            st.d_buffer.append(resid_row)

        st.prev_x = x_k
        st.prev_valid = valid_x_k
        return r_filt, estimates

    def _d_matrix(self) -> np.ndarray:
        if not self.state.d_buffer:
            return np.full((1, self.n_assets), np.nan)
        return np.vstack(self.state.d_buffer)


@dataclass
class EngineResult:
    """Per-day engine outputs for one (panel, mode) run."""

    mode: str
    dates: "np.ndarray"
    r_filt: np.ndarray  # (T, n)
    f_ols: np.ndarray  # (T, m)
    f_filt: np.ndarray  # (T, m)
    f_pred: np.ndarray  # (T, m)
    cov_trace: np.ndarray  # (T,)
    psi: np.ndarray  # (T, m)


def engine_sweep(
    panel: FactorPanel,
    mode: str,
    options: Optional[EngineOptions] = None,
) -> EngineResult:
    """Run the engine over a full panel for one mode (KF, UKF or OLS)."""
    options = options or EngineOptions()
    t_len, n, m = panel.n_days, panel.n_assets, panel.n_factors
    engine = FactorEngine(n, m, mode, options)
    if options.standardize and options.log_size_column in panel.factor_names:
        engine.set_log_columns([panel.factor_names.index(options.log_size_column)])

    excess = panel.excess_returns()
    years = panel.dates.year.to_numpy()

    r_filt = np.full((t_len, n), np.nan)
    f_ols = np.full((t_len, m), np.nan)
    f_filt = np.full((t_len, m), np.nan)
    f_pred = np.full((t_len, m), np.nan)
    cov_trace = np.full(t_len, np.nan)
    psi = np.full((t_len, m), np.nan)

    for k in range(t_len):
        if k > 0 and years[k] != years[k - 1]:
            engine.refit_transition(int(years[k]))
        obs = FactorObservation(
            k=k,
            exposures=panel.exposures[k],
            returns_excess=excess[k],
            in_universe=panel.universe[k],
        )
        row, estimates = engine.step(obs)
        r_filt[k] = row
        if estimates["ols"] is not None:
            f_ols[k] = estimates["ols"].f_hat
        if estimates["filtered"] is not None:
            f_filt[k] = estimates["filtered"].f_hat
        if estimates["predicted"] is not None:
            f_pred[k] = estimates["predicted"].f_hat
            psi[k] = engine.last_psi
        if engine.state.belief is not None:
            cov_trace[k] = float(np.trace(engine.state.belief.cov))

    return EngineResult(
        mode=mode,
        dates=panel.dates,
        r_filt=r_filt,
        f_ols=f_ols,
        f_filt=f_filt,
        f_pred=f_pred,
        cov_trace=cov_trace,
        psi=psi,
    )
