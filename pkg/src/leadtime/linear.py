"""First-order linear models: OLS, lasso, ridge, and elastic net.

OLS and ridge solve their normal equations in closed form.  Lasso and
elastic net run cyclic coordinate descent with soft-threshold updates over a
precomputed Gram matrix.  The elastic-net penalty is
``lam * (alpha * sum|w| + (1 - alpha) * sum w^2)`` with no extra 1/2 factor,
and the squared-error term carries no 1/n.

By default the bias is left unpenalized (the model is fitted on centered
data and the intercept recovered afterwards); ``penalize_bias=True`` instead
includes the intercept in the penalty sums.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from . import kernels

DEFAULT_TOL = 1e-6
DEFAULT_MAX_SWEEPS = 10_000
_JITTER = 1e-10


class NotStandardizedWarning(UserWarning):
    """Fitting on visibly unstandardized data; results may converge slowly."""


def warn_if_unstandardized(X: np.ndarray, context: str) -> None:
    """Warn when non-binary columns are far from mean 0 / std 1."""
    mean = X.mean(axis=0)
    std = X.std(axis=0)
    binary = np.all((X == 0.0) | (X == 1.0), axis=0)
    off = ~binary & ((np.abs(mean) > 0.1) | (np.abs(std - 1.0) > 0.1))
    if off.any():
        warnings.warn(
            f"{context}: {int(off.sum())} column(s) look unstandardized",
            NotStandardizedWarning,
            stacklevel=3,
        )


@dataclass(frozen=True)
class LinearModel:
    weights: np.ndarray
    bias: float
    family: str  # "ols" | "ridge" | "lasso" | "elastic_net"
    lam: float = 0.0
    alpha: float | None = None
    penalize_bias: bool = False

    def __post_init__(self) -> None:
        if (self.alpha is not None) != (self.family == "elastic_net"):
            raise ValueError("alpha is present iff family is elastic_net")

    def to_json_dict(self) -> dict:
        return {
            "weights": self.weights.tolist(),
            "bias": self.bias,
            "family": self.family,
            "lam": self.lam,
            "alpha": self.alpha,
            "penalize_bias": self.penalize_bias,
        }

    @classmethod
    def from_json_dict(cls, payload: dict) -> "LinearModel":
        return cls(
            weights=np.asarray(payload["weights"], dtype=np.float64),
            bias=float(payload["bias"]),
            family=payload["family"],
            lam=float(payload["lam"]),
            alpha=payload["alpha"],
            penalize_bias=bool(payload["penalize_bias"]),
        )


@dataclass(frozen=True)
class FitDiagnostics:
    iterations: int
    final_objective: float
    converged: bool
    max_change: float
    jittered: bool = False
    objective_history: tuple[float, ...] = ()


def predict(model: LinearModel, X: np.ndarray) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != model.weights.shape[0]:
        raise ValueError(
            f"design width {X.shape[1] if X.ndim == 2 else '?'} does not match "
            f"{model.weights.shape[0]} weights"
        )
    return X @ model.weights + model.bias


def _solve_maybe_jitter(A: np.ndarray, b: np.ndarray) -> tuple[np.ndarray, bool]:
    """Solve the normal equations A x = b for a PSD Gram matrix A.

    Cholesky doubles as the singularity detector (one-hot designs are often
    exactly collinear with the intercept); on failure a 1e-10 diagonal
    jitter restores definiteness and the fit is flagged.
    """
    try:
        np.linalg.cholesky(A)
        return np.linalg.solve(A, b), False
    except np.linalg.LinAlgError:
        jittered = A + _JITTER * np.eye(A.shape[0])
        return np.linalg.solve(jittered, b), True


def _sse(X: np.ndarray, y: np.ndarray, w: np.ndarray, b: float) -> float:
    r = X @ w + b - y
    return float(r @ r)


def fit_ols(X: np.ndarray, y: np.ndarray) -> tuple[LinearModel, FitDiagnostics]:
    """Least squares via normal equations on the bias-augmented design."""
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] == 0:
        raise ValueError("fit_ols needs at least one row")
    Z = np.column_stack([np.ones(X.shape[0]), X])
    theta, jittered = _solve_maybe_jitter(Z.T @ Z, Z.T @ y)
    model = LinearModel(weights=theta[1:], bias=float(theta[0]), family="ols")
    diag = FitDiagnostics(
        iterations=1,
        final_objective=_sse(X, y, model.weights, model.bias),
        converged=True,
        max_change=0.0,
        jittered=jittered,
    )
    return model, diag


def fit_ridge(
    X: np.ndarray, y: np.ndarray, lam: float, penalize_bias: bool = False
) -> LinearModel:
    """Closed-form ridge: SSE + lam * sum of squared coefficients."""
    if lam < 0:
        raise ValueError("lam must be nonnegative")
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if X.shape[0] == 0:
        raise ValueError("fit_ridge needs at least one row")
    d = X.shape[1]
    if penalize_bias:
        Z = np.column_stack([np.ones(X.shape[0]), X])
        theta, _ = _solve_maybe_jitter(Z.T @ Z + lam * np.eye(d + 1), Z.T @ y)
        weights, bias = theta[1:], float(theta[0])
    else:
        mx = X.mean(axis=0)
        my = float(y.mean())
        Xc = X - mx
        yc = y - my
        weights, _ = _solve_maybe_jitter(Xc.T @ Xc + lam * np.eye(d), Xc.T @ yc)
        bias = my - float(mx @ weights)
    return LinearModel(
        weights=weights,
        bias=bias,
        family="ridge",
        lam=float(lam),
        penalize_bias=penalize_bias,
    )


def _cd_objective(
    G: np.ndarray, c: np.ndarray, yty: float, w: np.ndarray, l1: float, l2: float
) -> float:
    sse = float(w @ G @ w - 2.0 * (c @ w) + yty)
    return sse + l1 * float(np.sum(np.abs(w))) + l2 * float(w @ w)


def _fit_coordinate_descent(
    X: np.ndarray,
    y: np.ndarray,
    lam: float,
    alpha: float,
    family: str,
    penalize_bias: bool,
    tol: float,
    max_sweeps: int,
) -> tuple[LinearModel, FitDiagnostics]:
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.float64)
    if X.shape[0] == 0:
        raise ValueError("coordinate descent needs at least one row")
    warn_if_unstandardized(X, f"fit_{family}")
    l1 = lam * alpha
    l2 = lam * (1.0 - alpha)

    if penalize_bias:
        Z = np.column_stack([np.ones(X.shape[0]), X])
        target = y
    else:
        mx = X.mean(axis=0)
        my = float(y.mean())
        Z = np.ascontiguousarray(X - mx)
        target = y - my

    G = np.ascontiguousarray(Z.T @ Z)
    c = np.ascontiguousarray(Z.T @ target)
    yty = float(target @ target)
    w = np.zeros(Z.shape[1], dtype=np.float64)

    history = [_cd_objective(G, c, yty, w, l1, l2)]
    converged = False
    max_change = 0.0
    sweeps = 0
    for sweeps in range(1, max_sweeps + 1):
        max_change = kernels.cd_sweep(G, c, w, l1 / 2.0, l2)
        history.append(_cd_objective(G, c, yty, w, l1, l2))
        if max_change < tol:
            converged = True
            break

    if penalize_bias:
        weights, bias = w[1:].copy(), float(w[0])
    else:
        weights, bias = w, my - float(mx @ w)

    model = LinearModel(
        weights=weights,
        bias=bias,
        family=family,
        lam=float(lam),
        alpha=float(alpha) if family == "elastic_net" else None,
        penalize_bias=penalize_bias,
    )
    diag = FitDiagnostics(
        iterations=sweeps,
        final_objective=history[-1],
        converged=converged,
        max_change=max_change,
        objective_history=tuple(history),
    )
    return model, diag


def fit_lasso(
    X: np.ndarray,
    y: np.ndarray,
    lam: float,
    penalize_bias: bool = False,
    tol: float = DEFAULT_TOL,
    max_sweeps: int = DEFAULT_MAX_SWEEPS,
) -> tuple[LinearModel, FitDiagnostics]:
    """L1-penalized least squares by cyclic coordinate descent."""
    if lam < 0:
        raise ValueError("lam must be nonnegative")
    return _fit_coordinate_descent(
        X, y, lam, 1.0, "lasso", penalize_bias, tol, max_sweeps
    )


def fit_elastic_net(
    X: np.ndarray,
    y: np.ndarray,
    lam: float,
    alpha: float,
    penalize_bias: bool = False,
    tol: float = DEFAULT_TOL,
    max_sweeps: int = DEFAULT_MAX_SWEEPS,
) -> tuple[LinearModel, FitDiagnostics]:
    """Convex combination of the L1 and L2 penalties, as printed: alpha
    weights the absolute-value sum and (1 - alpha) the squared sum."""
    if lam < 0:
        raise ValueError("lam must be nonnegative")
    if not 0.0 <= alpha <= 1.0:
        raise ValueError("alpha must be in [0, 1]")
    return _fit_coordinate_descent(
        X, y, lam, alpha, "elastic_net", penalize_bias, tol, max_sweeps
    )
