"""Closed-form quasi maximum likelihood estimation of the NAR model.

The Gaussian quasi log likelihood conditional on the covariates is

    L(theta) = -(1/NT) sum_{i,t} (y_it - x_{i,t-1}' theta)^2,

which is maximized by the least-squares solution of the normal equations.
Parameters are ordered ``(beta0, beta1, beta2, gamma_1..gamma_m)``.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import linalg

from .errors import DomainError, SingularityError
from .nar_model import Panel
from .network import WeightMatrix

CONDITION_LIMIT = 1e12
EIGEN_FLOOR = 1e-12


@dataclass
class EstimationResult:
    theta_hat: np.ndarray
    sigma2_hat: float
    sigma_hat_matrix: np.ndarray
    lambda_min: float
    nt: int
    condition: float

    @property
    def k(self) -> int:
        return self.theta_hat.shape[0]

    def standard_errors(self) -> np.ndarray:
        """Wald standard errors ``sigma_hat * sqrt(diag(Sigma_hat^{-1}) / NT)``."""
        inv_diag = np.diag(linalg.cho_solve(linalg.cho_factor(self.sigma_hat_matrix), np.eye(self.k)))
        return np.sqrt(self.sigma2_hat * inv_diag / self.nt)

    def to_dict(self) -> dict:
        return {
            "theta_hat": self.theta_hat.tolist(),
            "sigma2_hat": self.sigma2_hat,
            "sigma_hat_matrix": self.sigma_hat_matrix.tolist(),
            "lambda_min": self.lambda_min,
            "condition": self.condition,
            "nt": self.nt,
        }


def _check_theta(panel: Panel, theta) -> np.ndarray:
    theta = np.asarray(theta, dtype=float)
    if theta.shape != (panel.m + 3,):
        raise DomainError(f"theta must have length m + 3 = {panel.m + 3}, got shape {theta.shape}")
    return theta


def residuals(panel: Panel, w: WeightMatrix, theta) -> np.ndarray:
    theta = _check_theta(panel, theta)
    return panel.responses - panel.regressors(w) @ theta


def log_likelihood(panel: Panel, w: WeightMatrix, theta) -> float:
    r = residuals(panel, w, theta)
    return -float(np.sum(r**2)) / r.size


def score(panel: Panel, w: WeightMatrix, theta) -> np.ndarray:
    """Gradient of :func:`log_likelihood`: ``(2/NT) sum r_it x_{i,t-1}``."""
    r = residuals(panel, w, theta)
    x = panel.regressors(w)
    return 2.0 * np.einsum("it,itk->k", r, x) / r.size


def hessian(panel: Panel, w: WeightMatrix) -> np.ndarray:
    """``-(2/NT) sum x_{i,t-1} x_{i,t-1}'`` (constant in theta)."""
    x = panel.regressors(w).reshape(-1, panel.m + 3)
    return -2.0 * (x.T @ x) / x.shape[0]


def sigma_hat_matrix(panel: Panel, w: WeightMatrix) -> np.ndarray:
    """Sample Gram ``(1/NT) sum x_{i,t-1} x_{i,t-1}'`` assembled by blocks.

    Block order follows the regressor layout: constant, network lag
    ``(W y)_{i,t-1}``, own lag ``y_{i,t-1}`` and covariates ``Z_i``.
    """
    if w.N != panel.N:
        raise DomainError(f"weight matrix has {w.N} nodes, panel has {panel.N}")
    N, T, m = panel.N, panel.T, panel.m
    lag = panel.y[:, :-1]
    net = w.matrix @ lag
    Z = panel.Z
    nt = N * T
    k = m + 3
    s = np.empty((k, k))
    s[0, 0] = 1.0
    s[0, 1] = s[1, 0] = net.sum() / nt
    s[0, 2] = s[2, 0] = lag.sum() / nt
    s[1, 1] = np.sum(net * net) / nt
    s[1, 2] = s[2, 1] = np.sum(net * lag) / nt
    s[2, 2] = np.sum(lag * lag) / nt
    if m:
        # Z_i is constant over t, so time sums factor out
        s[0, 3:] = s[3:, 0] = T * Z.sum(axis=0) / nt
        s[1, 3:] = s[3:, 1] = net.sum(axis=1) @ Z / nt
        s[2, 3:] = s[3:, 2] = lag.sum(axis=1) @ Z / nt
        s[3:, 3:] = T * (Z.T @ Z) / nt
    return s


def sigma2_hat(panel: Panel, w: WeightMatrix, theta_hat) -> float:
    return -log_likelihood(panel, w, theta_hat)


def min_eigenvalue(matrix) -> float:
    """Smallest eigenvalue of a symmetric matrix (dense solver)."""
    a = np.asarray(matrix, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DomainError("expected a square matrix")
    if np.max(np.abs(a - a.T), initial=0.0) > 1e-10:
        raise DomainError("matrix is not symmetric within 1e-10")
    return float(linalg.eigh(a, eigvals_only=True, subset_by_index=[0, 0])[0])


def symmetric_sqrt(matrix, floor: float = EIGEN_FLOOR) -> np.ndarray:
    """Spectral square root of a symmetric positive definite matrix."""
    a = np.asarray(matrix, dtype=float)
    vals, vecs = linalg.eigh(0.5 * (a + a.T))
    if vals[0] < floor:
        raise DomainError(f"matrix is not positive definite (smallest eigenvalue {vals[0]:.3e})")
    return (vecs * np.sqrt(vals)) @ vecs.T


def qmle(panel: Panel, w: Optional[WeightMatrix] = None) -> EstimationResult:
    """Closed-form QMLE via a Cholesky solve of the normal equations.

    Raises :class:`SingularityError` when the Gram matrix is singular or its
    condition number exceeds ``1e12``.
    """
    w = panel.weights if w is None else w
    if w is None:
        raise DomainError("qmle needs a weight matrix")
    s = sigma_hat_matrix(panel, w)
    nt = panel.N * panel.T
    x = panel.regressors(w)
    xty = np.einsum("itk,it->k", x, panel.responses) / nt
    if not np.all(np.isfinite(s)):
        raise SingularityError("Gram matrix has non-finite entries")
    vals = linalg.eigh(s, eigvals_only=True)
    cond = float(vals[-1] / vals[0]) if vals[0] > 0 else float("inf")
    if not cond <= CONDITION_LIMIT:
        raise SingularityError("Gram matrix is singular or ill-conditioned", cond)
    try:
        factor = linalg.cho_factor(s)
    except linalg.LinAlgError:
        raise SingularityError("Gram matrix is not positive definite", cond) from None
    theta = linalg.cho_solve(factor, xty)
    s2 = sigma2_hat(panel, w, theta)
    return EstimationResult(theta, s2, s, float(vals[0]), nt, cond)


def standardized_statistic(result: EstimationResult, theta0) -> np.ndarray:
    """``sqrt(NT) * Sigma_hat^{1/2} (theta_hat - theta0) / sigma_hat``."""
    theta0 = np.asarray(theta0, dtype=float)
    if theta0.shape != result.theta_hat.shape:
        raise DomainError("theta0 has the wrong length")
    if not result.lambda_min > 0:
        raise DomainError("Sigma_hat is not positive definite")
    if not result.sigma2_hat > 0:
        raise DomainError("sigma2_hat is zero; the statistic is undefined")
    root = symmetric_sqrt(result.sigma_hat_matrix)
    return np.sqrt(result.nt) * root @ (result.theta_hat - theta0) / np.sqrt(result.sigma2_hat)
