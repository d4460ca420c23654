"""Multiple multivariate least squares with an intercept, and summed MSPE scoring."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import linalg

COND_EPS = 1e-12
RIDGE_SCALE = 1e-8


class RegressionError(ValueError):
    pass


@dataclass(frozen=True)
class Estimator:
    """Coefficients for ``Y ~ [1, X] @ beta``; row 0 of ``beta`` is the intercept."""

    beta: np.ndarray  # [(p + 1), q]
    predictor_vars: list = field(default_factory=list)
    response_vars: list = field(default_factory=list)
    regularized: bool = False

    def __post_init__(self):
        if self.predictor_vars and len(self.predictor_vars) + 1 != self.beta.shape[0]:
            raise RegressionError("beta rows must equal len(predictor_vars) + 1")
        if self.response_vars and len(self.response_vars) != self.beta.shape[1]:
            raise RegressionError("beta columns must equal len(response_vars)")
        if set(self.predictor_vars) & set(self.response_vars):
            raise RegressionError("predictor and response variables overlap")

    @property
    def p(self) -> int:
        return self.beta.shape[0] - 1

    @property
    def q(self) -> int:
        return self.beta.shape[1]


def _augment(X: np.ndarray) -> np.ndarray:
    return np.hstack([np.ones((X.shape[0], 1)), X])


def _as_matrix(a, name: str) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    if a.ndim == 1:
        a = a[:, None]
    if a.ndim != 2:
        raise RegressionError(f"{name} must be a 2-D matrix")
    if not np.all(np.isfinite(a)):
        raise RegressionError(f"{name} contains non-finite entries")
    return a


def fit_least_squares(Xdat, Ydat, predictor_vars=None, response_vars=None) -> Estimator:
    """Least-squares coefficients of ``Ydat`` on ``Xdat`` plus an intercept column.

    The normal equations are solved by Cholesky.  When the Gram matrix is
    singular or its condition number exceeds ``1 / COND_EPS``, a ridge term
    ``RIDGE_SCALE * trace(G) / dim(G)`` is added and the result is flagged
    ``regularized``.
    """
    X = _as_matrix(Xdat, "Xdat")
    Y = _as_matrix(Ydat, "Ydat")
    if X.shape[0] == 0:
        raise RegressionError("need at least one sample")
    if X.shape[0] != Y.shape[0]:
        raise RegressionError("Xdat and Ydat sample counts differ")
    if X.shape[1] < 1 or Y.shape[1] < 1:
        raise RegressionError("need at least one predictor and one response")

    Xa = _augment(X)
    G = Xa.T @ Xa
    rhs = Xa.T @ Y
    regularized = False
    with np.errstate(all="ignore"):
        cond = np.linalg.cond(G)
    if not np.isfinite(cond) or cond > 1.0 / COND_EPS:
        lam = RIDGE_SCALE * np.trace(G) / G.shape[0]
        G = G + lam * np.eye(G.shape[0])
        regularized = True
    try:
        beta = linalg.cho_solve(linalg.cho_factor(G), rhs)
    except linalg.LinAlgError:
        beta = np.linalg.lstsq(G, rhs, rcond=None)[0]
        regularized = True
    return Estimator(
        beta,
        list(predictor_vars) if predictor_vars is not None else [],
        list(response_vars) if response_vars is not None else [],
        regularized,
    )


def predict(est: Estimator, Xdat) -> np.ndarray:
    X = _as_matrix(Xdat, "Xdat")
    if X.shape[1] != est.p:
        raise RegressionError(f"expected {est.p} predictor columns, got {X.shape[1]}")
    return _augment(X) @ est.beta


def mspe_sum(Ypred, Ydat) -> float:
    """Sum over response columns of the per-column mean squared difference."""
    Yp = np.asarray(Ypred, dtype=float)
    Yd = np.asarray(Ydat, dtype=float)
    if Yp.shape != Yd.shape:
        raise RegressionError(f"shape mismatch {Yp.shape} vs {Yd.shape}")
    if Yp.ndim == 1:
        Yp, Yd = Yp[:, None], Yd[:, None]
    if Yp.shape[0] < 1:
        raise RegressionError("need at least one sample")
    return float(np.mean((Yp - Yd) ** 2, axis=0).sum())


def intercept_only_mspe(Ydat) -> float:
    """Summed MSPE of predicting every column by its own mean."""
    Y = _as_matrix(Ydat, "Ydat")
    return float(np.var(Y, axis=0).sum())


class ScatterScorer:
    """Summed training MSPE of intercept regressions, via the centered scatter matrix.

    For a predictor set ``X`` the summed MSPE over ``V \\ X`` equals the trace
    of the residual covariance of all columns given ``X`` (predictors leave
    zero residual).  Adding one predictor ``c`` lowers it by
    ``||R[:, c]||^2 / R[c, c]``, so a whole greedy round costs one pass over
    the residual covariance ``R``.
    """

    def __init__(self, data: np.ndarray):
        data = np.asarray(data, dtype=float)
        centered = data - data.mean(axis=0)
        self.scatter = centered.T @ centered / data.shape[0]
        self.base = float(np.trace(self.scatter))

    def residual(self, chosen) -> np.ndarray:
        R = self.scatter.copy()
        for c in chosen:
            R = self.condition(R, c)
        return R

    def condition(self, R: np.ndarray, c: int) -> np.ndarray:
        rcc = R[c, c]
        if rcc <= self._floor(c):
            return R
        col = R[:, c].copy()
        return R - np.outer(col, col) / rcc

    def gains(self, R: np.ndarray) -> np.ndarray:
        diag = np.diag(R).copy()
        ok = diag > self._floor(slice(None))
        out = np.zeros_like(diag)
        out[ok] = (R[:, ok] ** 2).sum(axis=0) / diag[ok]
        return out

    def error(self, chosen) -> float:
        return float(np.trace(self.residual(chosen)))

    def _floor(self, idx):
        return 1e-12 * np.maximum(np.diag(self.scatter)[idx], 1e-300)
