"""Nonlinear least squares for the two content-model families.

Fits ``y = alpha * x**beta + gamma`` (accuracy vs QP) and ``y = a * exp(b x)``
(QP vs rate) with a Levenberg-Marquardt style damped Gauss-Newton iteration
and analytic Jacobians. The exponential amplitude stays positive by fitting
log(a). Initial guesses come from the data when not supplied: the accuracy
ceiling from max(y) and the remaining parameters from log-linear regression.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .content import CategoryAccuracyModel, VideoRateModel
from .errors import DomainError

_MAX_ITER = 500
_COST_TOL = 1e-14


@dataclass(frozen=True)
class FitResult:
    parameters: tuple[float, ...]
    rmse: float
    iterations: int
    converged: bool


def _as_samples(samples) -> tuple[np.ndarray, np.ndarray]:
    arr = np.asarray(samples, dtype=float)
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise DomainError(
            f"samples must be an (n, 2) array of x, y pairs, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise DomainError("samples must be finite")
    x, y = arr[:, 0], arr[:, 1]
    if np.any(x < 0):
        raise DomainError("sample x values must be nonnegative")
    return x, y


def _levenberg(predict_jac, theta: np.ndarray, y: np.ndarray):
    """Damped Gauss-Newton loop. predict_jac(theta) -> (yhat, J)."""
    lam = 1e-3
    yhat, jac = predict_jac(theta)
    residual = y - yhat
    cost = float(residual @ residual)
    iterations = 0
    converged = False
    for iterations in range(1, _MAX_ITER + 1):
        jtj = jac.T @ jac
        jtr = jac.T @ residual
        damped = jtj + lam * np.diag(np.clip(np.diag(jtj), 1e-300, None))
        try:
            step = np.linalg.solve(damped, jtr)
        except np.linalg.LinAlgError as err:
            raise DomainError(f"normal equations are singular: {err}") from err
        candidate = theta + step
        yhat_new, jac_new = predict_jac(candidate)
        residual_new = y - yhat_new
        cost_new = float(residual_new @ residual_new)
        if math.isfinite(cost_new) and cost_new <= cost:
            improvement = cost - cost_new
            theta, yhat, jac, residual, cost = (
                candidate, yhat_new, jac_new, residual_new, cost_new)
            lam = max(lam / 3.0, 1e-12)
            if improvement <= _COST_TOL * max(cost, 1e-30):
                converged = True
                break
        else:
            lam *= 10.0
            if lam > 1e12:
                break
    return theta, cost, iterations, converged


def _heuristic_accuracy_init(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    gamma0 = float(y.max())
    drop = gamma0 - y
    mask = (drop > 0) & (x > 0)
    if mask.sum() >= 2:
        slope, intercept = np.polyfit(np.log(x[mask]), np.log(drop[mask]), 1)
        beta0 = float(slope)
        alpha0 = -math.exp(float(intercept))
    else:
        beta0, alpha0 = 2.0, -1e-6  # flat data: start near the zero-loss curve
    return np.array([alpha0, beta0, gamma0])


def fit_accuracy_model(samples, init=None) -> FitResult:
    """Fit alpha * x**beta + gamma to (QP, accuracy) samples.

    init, when given, is (alpha, beta, gamma). Needs at least 3 samples and at
    least two distinct x values.
    """
    x, y = _as_samples(samples)
    if x.size < 3:
        raise DomainError(f"need at least 3 samples, got {x.size}")
    if np.unique(x).size < 2:
        raise DomainError("all x values coincide; the model is unidentifiable")
    theta0 = (np.asarray(init, dtype=float) if init is not None
              else _heuristic_accuracy_init(x, y))
    if theta0.shape != (3,):
        raise DomainError(f"init must have 3 entries, got {theta0.shape}")

    logx = np.where(x > 0, np.log(np.where(x > 0, x, 1.0)), 0.0)

    def predict_jac(theta):
        alpha, beta, gamma = theta
        with np.errstate(over="ignore", invalid="ignore"):
            powx = np.where(x > 0, x ** beta, 0.0 if beta > 0 else 1.0)
            yhat = alpha * powx + gamma
            jac = np.column_stack([powx, alpha * powx * logx, np.ones_like(x)])
        return yhat, jac

    theta, cost, iterations, converged = _levenberg(predict_jac, theta0, y)
    return FitResult(
        parameters=tuple(float(v) for v in theta),
        rmse=math.sqrt(cost / x.size),
        iterations=iterations,
        converged=converged,
    )


def fit_rate_model(samples, init=None) -> FitResult:
    """Fit a * exp(b x) to (rate, QP) samples, with a > 0 by construction.

    init, when given, is (a, b) with a > 0. Needs at least 2 samples with two
    distinct x values, and strictly positive y (the amplitude is fitted in
    log space).
    """
    x, y = _as_samples(samples)
    if x.size < 2:
        raise DomainError(f"need at least 2 samples, got {x.size}")
    if np.unique(x).size < 2:
        raise DomainError("all x values coincide; the model is unidentifiable")
    if np.any(y <= 0):
        raise DomainError("y must be positive to fit a positive exponential")
    if init is not None:
        a0, b0 = (float(v) for v in init)
        if a0 <= 0:
            raise DomainError(f"init amplitude must be positive, got {a0}")
        theta0 = np.array([math.log(a0), b0])
    else:
        slope, intercept = np.polyfit(x, np.log(y), 1)
        theta0 = np.array([float(intercept), float(slope)])

    def predict_jac(theta):
        log_a, b = theta
        with np.errstate(over="ignore"):
            yhat = np.exp(log_a + b * x)
        jac = np.column_stack([yhat, x * yhat])
        return yhat, jac

    theta, cost, iterations, converged = _levenberg(predict_jac, theta0, y)
    return FitResult(
        parameters=(math.exp(float(theta[0])), float(theta[1])),
        rmse=math.sqrt(cost / x.size),
        iterations=iterations,
        converged=converged,
    )


def rmse(samples, model) -> float:
    """Root-mean-square residual of a model over (x, y) samples.

    ``model`` may be a CategoryAccuracyModel or a 3-tuple (power curve), a
    VideoRateModel or a 2-tuple (exponential), or any callable x -> yhat.
    """
    x, y = _as_samples(samples)
    if callable(model):
        yhat = np.array([float(model(v)) for v in x])
    elif isinstance(model, CategoryAccuracyModel):
        yhat = model.alpha * x ** model.beta + model.gamma
    elif isinstance(model, VideoRateModel):
        yhat = model.a * np.exp(model.b * x)
    else:
        params = tuple(float(v) for v in model)
        if len(params) == 3:
            alpha, beta, gamma = params
            yhat = alpha * x ** beta + gamma
        elif len(params) == 2:
            a, b = params
            yhat = a * np.exp(b * x)
        else:
            raise DomainError(
                f"model must have 2 or 3 parameters, got {len(params)}")
    return float(np.sqrt(np.mean((y - yhat) ** 2)))
