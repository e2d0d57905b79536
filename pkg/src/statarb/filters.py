"""Gaussian state estimation: linear Kalman filter, the unscented transform and the UKF.

All operations are pure functions of their inputs; beliefs and systems are
immutable values. Covariances are re-symmetrized after every update so that
drift stays bounded over long daily runs.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Sequence, Tuple

import numpy as np
from scipy.linalg import cho_factor, cho_solve, cholesky, LinAlgError

from .errors import InvalidInputError, NumericalError

# Wan / van der Merwe defaults: (alpha, beta, kappa).
DEFAULT_SCALING = (1e-3, 2.0, 0.0)

# Reciprocal-condition guard for innovation solves.
RCOND_MIN = 1e-12

# One-shot jitter added to a covariance whose Cholesky factorization fails.
JITTER = 1e-10


def symmetrize(a: np.ndarray) -> np.ndarray:
    """(C + C^T) / 2."""
    return (a + a.T) / 2.0


def _as_vector(x, name: str) -> np.ndarray:
    v = np.asarray(x, dtype=float)
    if v.ndim == 0:
        v = v.reshape(1)
    if v.ndim != 1:
        raise InvalidInputError(f"{name} must be a vector, got shape {v.shape}")
    return v


def _as_matrix(x, name: str) -> np.ndarray:
    m = np.asarray(x, dtype=float)
    if m.ndim == 0:
        m = m.reshape(1, 1)
    if m.ndim != 2:
        raise InvalidInputError(f"{name} must be a matrix, got shape {m.shape}")
    return m


def _rcond_spd(s: np.ndarray) -> float:
    """Reciprocal condition number of a symmetric matrix via eigenvalues."""
    w = np.abs(np.linalg.eigvalsh(s))
    top = w.max()
    if top == 0.0:
        return 0.0
    return float(w.min() / top)


def _spd_factor(s: np.ndarray, context: str):
    """Cholesky factor of an SPD matrix, guarding the conditioning threshold."""
    if _rcond_spd(s) < RCOND_MIN:
        raise NumericalError(
            f"{context}: reciprocal condition below {RCOND_MIN:g}; matrix is "
            "numerically singular"
        )
    try:
        return cho_factor(s, lower=True)
    except LinAlgError as exc:  # pragma: no cover - guarded by rcond check
        raise NumericalError(f"{context}: Cholesky factorization failed") from exc


@dataclass(frozen=True)
class GaussianBelief:
    """Gaussian belief over a latent state: mean vector and covariance matrix."""

    mean: np.ndarray
    cov: np.ndarray

    def __post_init__(self):
        mean = _as_vector(self.mean, "mean")
        cov = _as_matrix(self.cov, "cov")
        if cov.shape != (mean.shape[0], mean.shape[0]):
            raise InvalidInputError(
                f"cov shape {cov.shape} inconsistent with mean dim {mean.shape[0]}"
            )
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", symmetrize(cov))

    @property
    def dim(self) -> int:
        return self.mean.shape[0]


@dataclass(frozen=True)
class LinearSystem:
    """Time-invariant linear state-space system (A, B, Psi, Omega)."""

    A: np.ndarray
    B: np.ndarray
    Psi: np.ndarray
    Omega: np.ndarray

    def __post_init__(self):
        a = _as_matrix(self.A, "A")
        b = _as_matrix(self.B, "B")
        psi = _as_matrix(self.Psi, "Psi")
        omega = _as_matrix(self.Omega, "Omega")
        n_state = a.shape[0]
        if a.shape != (n_state, n_state):
            raise InvalidInputError("A must be square")
        if b.shape[1] != n_state:
            raise InvalidInputError("B column count must match state dimension")
        if psi.shape != (n_state, n_state):
            raise InvalidInputError("Psi shape must match state dimension")
        n_meas = b.shape[0]
        if omega.shape != (n_meas, n_meas):
            raise InvalidInputError("Omega shape must match measurement dimension")
        object.__setattr__(self, "A", a)
        object.__setattr__(self, "B", b)
        object.__setattr__(self, "Psi", symmetrize(psi))
        object.__setattr__(self, "Omega", symmetrize(omega))

    @property
    def state_dim(self) -> int:
        return self.A.shape[0]

    @property
    def meas_dim(self) -> int:
        return self.B.shape[0]


@dataclass(frozen=True)
class SigmaSet:
    """2N+1 sigma points with their mean/covariance weights.

    `scaling` stores (alpha, beta, kappa, lambda).
    """

    points: np.ndarray
    wm: np.ndarray
    wc: np.ndarray
    scaling: Tuple[float, float, float, float]


@dataclass(frozen=True)
class GainBundle:
    """Kalman gain and the measurement-space statistics behind it.

    `innovation_mean` is the predicted measurement mean (y-hat).
    """

    gain: np.ndarray
    innovation_mean: np.ndarray
    innovation_cov: np.ndarray
    cross_cov: np.ndarray


def kf_predict(belief: GaussianBelief, A, Psi) -> GaussianBelief:
    """Linear predict: mean -> A mean, cov -> A cov A^T + Psi."""
    a = _as_matrix(A, "A")
    psi = _as_matrix(Psi, "Psi")
    n = belief.dim
    if a.shape != (n, n) or psi.shape != (n, n):
        raise InvalidInputError(
            f"A/Psi shapes {a.shape}/{psi.shape} inconsistent with state dim {n}"
        )
    mean = a @ belief.mean
    cov = symmetrize(a @ belief.cov @ a.T + psi)
    return GaussianBelief(mean, cov)


def kf_update(pred: GaussianBelief, y, B, Omega) -> Tuple[GaussianBelief, GainBundle]:
    """Linear measurement update against y = B x + noise(Omega).

    The innovation covariance is solved via SPD Cholesky factorization with a
    reciprocal-condition guard; no explicit matrix inverse is formed.
    """
    b = _as_matrix(B, "B")
    omega = _as_matrix(Omega, "Omega")
    yv = _as_vector(y, "y")
    n = pred.dim
    if b.shape[1] != n:
        raise InvalidInputError(f"B column count {b.shape[1]} != state dim {n}")
    n_meas = b.shape[0]
    if yv.shape[0] != n_meas or omega.shape != (n_meas, n_meas):
        raise InvalidInputError("y/Omega dimensions inconsistent with B")

    cross = pred.cov @ b.T
    s = symmetrize(b @ cross + omega)
    factor = _spd_factor(s, "kf_update innovation covariance")
    # G = cov B^T S^-1  =>  G^T = S^-1 B cov
    gain = cho_solve(factor, cross.T).T
    y_hat = b @ pred.mean
    mean = pred.mean + gain @ (yv - y_hat)
    cov = symmetrize((np.eye(n) - gain @ b) @ pred.cov)
    bundle = GainBundle(gain=gain, innovation_mean=y_hat, innovation_cov=s, cross_cov=cross)
    return GaussianBelief(mean, cov), bundle


def kf_update_diag(pred: GaussianBelief, y, B, omega_diag) -> Tuple[GaussianBelief, np.ndarray]:
    """Measurement update specialized for diagonal noise and many measurements.

    Information-form update: with W = B^T D^-1 B the posterior precision is
    cov^-1 + W, so only state-dimension SPD solves are needed. Equal to
    `kf_update` with Omega = diag(omega_diag) in exact arithmetic. Returns the
    posterior belief and the N x n gain matrix.
    """
    b = _as_matrix(B, "B")
    yv = _as_vector(y, "y")
    d = _as_vector(omega_diag, "omega_diag")
    n = pred.dim
    if b.shape[1] != n or yv.shape[0] != b.shape[0] or d.shape[0] != b.shape[0]:
        raise InvalidInputError("dimension mismatch in kf_update_diag")
    if np.any(d <= 0):
        raise InvalidInputError("omega_diag entries must be strictly positive")

    bt_dinv = b.T / d  # N x n
    w = bt_dinv @ b
    cov = pred.cov
    try:
        cov_factor = cho_factor(cov, lower=True)
    except LinAlgError:
        cov = symmetrize(cov + JITTER * np.eye(n))
        cov_factor = cho_factor(cov, lower=True)
    prec = cho_solve(cov_factor, np.eye(n))
    j = symmetrize(prec + w)
    factor = _spd_factor(j, "kf_update_diag posterior precision")
    post_cov = symmetrize(cho_solve(factor, np.eye(n)))
    gain = post_cov @ bt_dinv
    mean = pred.mean + gain @ (yv - b @ pred.mean)
    return GaussianBelief(mean, post_cov), gain


def sigma_points(belief: GaussianBelief, scaling: Sequence[float] = DEFAULT_SCALING) -> SigmaSet:
    """Symmetric sigma points about the belief mean, with Wan/van der Merwe weights."""
    alpha, beta, kappa = (float(v) for v in scaling)
    n = belief.dim
    lam = alpha * alpha * (n + kappa) - n
    c = n + lam
    if c <= 0:
        raise InvalidInputError(f"scaling {scaling} gives non-positive N + lambda")

    cov = belief.cov
    try:
        root = cholesky(c * cov, lower=True)
    except LinAlgError:
        try:
            root = cholesky(c * symmetrize(cov + JITTER * np.eye(n)), lower=True)
        except LinAlgError as exc:
            raise NumericalError(
                "sigma_points: covariance not positive definite after jitter"
            ) from exc

    points = np.empty((2 * n + 1, n))
    points[0] = belief.mean
    points[1 : n + 1] = belief.mean + root.T
    points[n + 1 :] = belief.mean - root.T

    wi = 1.0 / (2.0 * c)
    wm = np.full(2 * n + 1, wi)
    wc = wm.copy()
    # lam/c == 1 - 2N*wi; the subtraction form keeps sum(wm) == 1 exactly even
    # when alpha is tiny and the center weight is huge.
    wm[0] = 1.0 - 2.0 * n * wi
    wc[0] = wm[0] + (1.0 - alpha * alpha + beta)
    return SigmaSet(points=points, wm=wm, wc=wc, scaling=(alpha, beta, kappa, lam))


def unscented_transform(
    transformed_points: np.ndarray,
    wm: np.ndarray,
    wc: np.ndarray,
    additive_noise: Optional[np.ndarray] = None,
) -> GaussianBelief:
    """Weighted mean/covariance of transformed sigma points, plus additive noise."""
    pts = np.asarray(transformed_points, dtype=float)
    if pts.ndim == 1:
        pts = pts[:, None]
    if pts.shape[0] != wm.shape[0] or pts.shape[0] != wc.shape[0]:
        raise InvalidInputError("weights length must match point count")
    mean = wm @ pts
    dev = pts - mean
    cov = dev.T @ (wc[:, None] * dev)
    if additive_noise is not None:
        noise = _as_matrix(additive_noise, "additive_noise")
        if noise.shape != cov.shape:
            raise InvalidInputError("additive_noise shape mismatch")
        cov = cov + noise
    return GaussianBelief(mean, symmetrize(cov))


def _apply_map(fn: Callable[[np.ndarray], np.ndarray], points: np.ndarray) -> np.ndarray:
    out = [np.atleast_1d(np.asarray(fn(p), dtype=float)) for p in points]
    return np.vstack(out)


def ukf_step(
    belief: GaussianBelief,
    y,
    f: Callable[[np.ndarray], np.ndarray],
    g: Callable[[np.ndarray], np.ndarray],
    Psi,
    Omega,
    scaling: Sequence[float] = DEFAULT_SCALING,
    propagate_sigma_points: bool = False,
) -> Tuple[GaussianBelief, GaussianBelief, GainBundle]:
    """One predict-then-update unscented cycle against measurement y.

    By default sigma points are redrawn from the predicted belief before the
    measurement stage; `propagate_sigma_points=True` instead pushes the
    transition-stage points straight through g (the literal recursion, which
    omits the process noise from the measurement-stage spread).
    """
    psi = _as_matrix(Psi, "Psi")
    omega = _as_matrix(Omega, "Omega")
    yv = _as_vector(y, "y")

    ss = sigma_points(belief, scaling)
    propagated = _apply_map(f, ss.points)
    if propagated.shape[1] != belief.dim:
        raise InvalidInputError("state map must preserve state dimension")
    predicted = unscented_transform(propagated, ss.wm, ss.wc, psi)

    if propagate_sigma_points:
        base_points, wm, wc = propagated, ss.wm, ss.wc
    else:
        ss2 = sigma_points(predicted, scaling)
        base_points, wm, wc = ss2.points, ss2.wm, ss2.wc

    meas_points = _apply_map(g, base_points)
    if meas_points.shape[1] != yv.shape[0]:
        raise InvalidInputError("measurement map output dim != measurement dim")

    y_hat = wm @ meas_points
    dz = meas_points - y_hat
    dx = base_points - predicted.mean
    p_y = symmetrize(dz.T @ (wc[:, None] * dz) + omega)
    p_xy = dx.T @ (wc[:, None] * dz)

    factor = _spd_factor(p_y, "ukf_step innovation covariance")
    # G = P_xy P_y^-1  =>  G^T = P_y^-1 P_xy^T
    gain = cho_solve(factor, p_xy.T).T
    mean = predicted.mean + gain @ (yv - y_hat)
    cov = symmetrize(predicted.cov - gain @ p_y @ gain.T)
    filtered = GaussianBelief(mean, cov)
    bundle = GainBundle(gain=gain, innovation_mean=y_hat, innovation_cov=p_y, cross_cov=p_xy)
    return filtered, predicted, bundle
