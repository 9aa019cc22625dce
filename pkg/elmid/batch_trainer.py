import logging
from dataclasses import dataclass

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve

from .elm_model import OutputWeights, RandomProjection, hidden_output_batch
from .utilities import NumericError, as_matrix

logger = logging.getLogger(__name__)

DEFAULT_LAMBDA = 1e6


@dataclass(frozen=True)
class DesignMatrices:
    """
    Hidden-layer output matrix H and the matching targets Y.

    Attributes:
        H (np.ndarray): N x hidden_dim.
        Y (np.ndarray): N x output_dim.
    """

    H: np.ndarray
    Y: np.ndarray

    def __post_init__(self) -> None:
        H = as_matrix(self.H, "H")
        Y = as_matrix(self.Y, "Y", shape=(H.shape[0], None))
        if H.shape[0] < 1:
            raise ValueError("Design matrices need at least one row")
        object.__setattr__(self, "H", H)
        object.__setattr__(self, "Y", Y)

    @property
    def n_samples(self) -> int:
        """Number of regression rows."""
        return self.H.shape[0]


def build_hidden_matrix(proj: RandomProjection, X) -> np.ndarray:
    """
    Stack hidden_output of every row of X.

    Args:
        proj (RandomProjection): The input layer.
        X (array_like): N x input_dim features.

    Returns:
        np.ndarray: H, N x hidden_dim.
    """
    return hidden_output_batch(proj, X)


def check_lambda(lam: float) -> float:
    lam = float(lam)
    if not np.isfinite(lam) or lam <= 0.0:
        raise ValueError(f"lambda must be positive and finite, got {lam}")
    return lam


def regularized_gram(H: np.ndarray, lam: float) -> np.ndarray:
    """K = I/lambda + H^T H."""
    return np.eye(H.shape[1]) / lam + H.T @ H


def ridge_solve(d: DesignMatrices, lam: float = DEFAULT_LAMBDA) -> OutputWeights:
    """
    Solve W = (I/lambda + H^T H)^{-1} H^T Y with a Cholesky factorization.

    The 1/lambda weighting means a large lambda is close to plain least squares and
    a small lambda shrinks W toward zero.

    Args:
        d (DesignMatrices): The design.
        lam (float): Regularization coefficient, strictly positive.

    Returns:
        OutputWeights: The regularized least-squares output layer.
    """
    lam = check_lambda(lam)
    K = regularized_gram(d.H, lam)
    try:
        factor = cho_factor(K, lower=False, check_finite=False)
    except LinAlgError as exc:
        raise NumericError(f"Cholesky factorization of the regularized Gram matrix failed: {exc}") from exc
    W = cho_solve(factor, d.H.T @ d.Y, check_finite=False)
    if not np.all(np.isfinite(W)):
        raise NumericError("Ridge solution is not finite")
    logger.debug("Ridge solve on %d samples, lambda=%g", d.n_samples, lam)
    return OutputWeights(W)


def ridge_objective(d: DesignMatrices, w: OutputWeights, lam: float) -> float:
    """Objective minimized by ridge_solve: ||HW - Y||^2 + ||W||^2 / lambda."""
    residual = d.H @ w.values - d.Y
    return float(np.sum(residual**2) + np.sum(w.values**2) / check_lambda(lam))


def normal_equation_residual(d: DesignMatrices, w: OutputWeights, lam: float) -> float:
    """Frobenius norm of (I/lambda + H^T H) W - H^T Y."""
    K = regularized_gram(d.H, check_lambda(lam))
    return float(np.linalg.norm(K @ w.values - d.H.T @ d.Y))
