"""
Continuous-time ELM state estimator with Lyapunov-derived weight adaptation.

The estimator runs the parametric model

    dz_hat/dt = A z_hat + W_hat^T phi
    dW_hat/dt = gain * phi e^T,   e = z - z_hat

where A is Hurwitz and phi is the hidden-layer output of the shared random projection
evaluated on the measured state and input. Along trajectories of a plant that is itself
an ELM model, V = 1/2 e^T e + 1/(2 gain) tr(W_tilde^T W_tilde) does not increase.
"""

import logging
import math
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
from scipy.linalg import eigvals, eigvalsh

from .elm_model import OutputWeights, RandomProjection, hidden_output
from .utilities import DivergenceError, as_matrix, as_vector, check_positive_step, runge_kutta_4

logger = logging.getLogger(__name__)


class DesignMatrix:
    """The Hurwitz matrix A of the estimator error dynamics."""

    def __init__(self, A) -> None:
        """
        Initializes a DesignMatrix after checking that A is Hurwitz.

        Args:
            A (array_like): Square matrix whose eigenvalues all have negative real part.

        Returns:
            None
        """
        A = np.array(as_matrix(A, "A"), copy=True)
        if A.shape[0] != A.shape[1] or A.shape[0] < 1:
            raise ValueError(f"A must be square and non-empty, got shape {A.shape}")
        for eigenvalue in eigvals(A):
            if not eigenvalue.real < 0.0:
                raise ValueError(
                    f"A is not Hurwitz: eigenvalue {eigenvalue.real:.6g}{eigenvalue.imag:+.6g}j "
                    "has non-negative real part"
                )
        A.setflags(write=False)
        self._A = A
        self._mu = float(np.max(eigvalsh(0.5 * (A + A.T))))

    @classmethod
    def diagonal(cls, *entries: float) -> "DesignMatrix":
        return cls(np.diag(entries))

    @property
    def matrix(self) -> np.ndarray:
        """Read-only copy of A."""
        return self._A

    @property
    def dim(self) -> int:
        """State dimension."""
        return self._A.shape[0]

    @property
    def symmetric_part_max_eigenvalue(self) -> float:
        """Largest eigenvalue of (A + A^T)/2; e^T A e <= mu ||e||^2."""
        return self._mu

    def __repr__(self) -> str:
        return f"DesignMatrix({self._A.tolist()})"


@dataclass(frozen=True)
class EstimatorState:
    """
    Estimator state at time t.

    Attributes:
        z_hat (np.ndarray): Estimated normalized state, length n.
        W_hat (np.ndarray): Estimated output layer, hidden_dim x n.
        t (float): Time.
    """

    z_hat: np.ndarray
    W_hat: np.ndarray
    t: float = 0.0

    def __post_init__(self) -> None:
        z_hat = np.array(as_vector(self.z_hat, "z_hat"), copy=True)
        W_hat = np.array(as_matrix(self.W_hat, "W_hat", shape=(None, z_hat.shape[0])), copy=True)
        z_hat.setflags(write=False)
        W_hat.setflags(write=False)
        object.__setattr__(self, "z_hat", z_hat)
        object.__setattr__(self, "W_hat", W_hat)
        object.__setattr__(self, "t", float(self.t))


@dataclass(frozen=True)
class StabilityBound:
    """Error-norm radius gamma = xi / |mu| outside which V strictly decreases."""

    xi: float
    gamma: float


def _as_design_matrix(A) -> DesignMatrix:
    return A if isinstance(A, DesignMatrix) else DesignMatrix(A)


def new_estimator(A, proj: RandomProjection, W0: OutputWeights, z0) -> EstimatorState:
    """
    Create the estimator state at t = 0.

    Args:
        A (DesignMatrix or array_like): Hurwitz design matrix.
        proj (RandomProjection): Shared input layer.
        W0 (OutputWeights): Initial output layer, hidden_dim x n.
        z0 (array_like): Initial state estimate, length n.

    Returns:
        EstimatorState: z_hat = z0, W_hat = W0, t = 0.
    """
    A = _as_design_matrix(A)
    z0 = as_vector(z0, "z0", size=A.dim)
    if W0.hidden_dim != proj.hidden_dim or W0.output_dim != A.dim:
        raise ValueError(
            f"W0 must be {proj.hidden_dim}x{A.dim}, got {W0.hidden_dim}x{W0.output_dim}"
        )
    return EstimatorState(z0, W0.values, 0.0)


def _rhs(
    A: np.ndarray,
    z_hat: np.ndarray,
    W_hat: np.ndarray,
    z_meas: np.ndarray,
    phi: np.ndarray,
    gain: float,
    dead_zone: Optional[float],
) -> Tuple[np.ndarray, np.ndarray]:
    e = z_meas - z_hat
    dz_hat = A @ z_hat + W_hat.T @ phi
    if dead_zone is not None and math.sqrt(float(e @ e)) <= dead_zone:
        return dz_hat, np.zeros_like(W_hat)
    return dz_hat, gain * np.outer(phi, e)


def derivatives(
    s: EstimatorState,
    z_meas,
    phi,
    A,
    gain: float = 1.0,
    dead_zone: Optional[float] = None,
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Right-hand side of the coupled estimator ODE.

    Args:
        s (EstimatorState): Current state.
        z_meas (array_like): Measured normalized state z.
        phi (array_like): Hidden-layer output.
        A (DesignMatrix or array_like): Hurwitz design matrix.
        gain (float): Adaptation gain; 1 reproduces dW_hat/dt = phi e^T.
        dead_zone (Optional[float]): Adaptation is frozen while ||e|| <= dead_zone.

    Returns:
        Tuple[np.ndarray, np.ndarray]: (dz_hat, dW_hat).
    """
    A = _as_design_matrix(A)
    n = s.z_hat.shape[0]
    if A.dim != n:
        raise ValueError(f"A is {A.dim}x{A.dim} but the state has length {n}")
    z_meas = as_vector(z_meas, "z_meas", size=n)
    phi = as_vector(phi, "phi", size=s.W_hat.shape[0])
    return _rhs(A.matrix, s.z_hat, s.W_hat, z_meas, phi, float(gain), dead_zone)


def _advance(
    s: EstimatorState,
    A: np.ndarray,
    z_meas: np.ndarray,
    phi: np.ndarray,
    dt: float,
    gain: float,
    dead_zone: Optional[float],
    order: int,
) -> EstimatorState:
    n = s.z_hat.shape[0]
    W_shape = s.W_hat.shape

    def packed(_t: float, y: np.ndarray) -> np.ndarray:
        dz, dW = _rhs(A, y[:n], y[n:].reshape(W_shape), z_meas, phi, gain, dead_zone)
        return np.concatenate((dz, dW.ravel()))

    y = np.concatenate((s.z_hat, s.W_hat.ravel()))
    if order == 4:
        y_next = runge_kutta_4(packed, s.t, y, dt)
    else:
        y_next = y + dt * packed(s.t, y)

    t_next = s.t + dt
    if not np.all(np.isfinite(y_next)):
        raise DivergenceError("Estimator diverged", t_next, float(np.linalg.norm(y_next[:n])))
    return EstimatorState(y_next[:n], y_next[n:].reshape(W_shape), t_next)


def step(
    s: EstimatorState,
    z_meas,
    x_model_input,
    dt: float,
    A,
    proj: RandomProjection,
    gain: float = 1.0,
    dead_zone: Optional[float] = None,
) -> EstimatorState:
    """
    Advance the estimator by one RK4 step.

    The measurement and phi(x_model_input) are held constant over the step.

    Args:
        s (EstimatorState): Current state.
        z_meas (array_like): Measured normalized state at s.t.
        x_model_input (array_like): Feature vector fed to the projection.
        dt (float): Step size.
        A (DesignMatrix or array_like): Hurwitz design matrix.
        proj (RandomProjection): Shared input layer.
        gain (float): Adaptation gain.
        dead_zone (Optional[float]): Dead-zone radius on ||e||.

    Returns:
        EstimatorState: The state at s.t + dt.
    """
    A = _as_design_matrix(A)
    dt = check_positive_step(dt)
    z_meas = as_vector(z_meas, "z_meas", size=A.dim)
    phi = hidden_output(proj, x_model_input)
    return _advance(s, A.matrix, z_meas, phi, dt, float(gain), dead_zone, order=4)


def euler_step(
    s: EstimatorState,
    z_meas,
    x_model_input,
    dt: float,
    A,
    proj: RandomProjection,
    gain: float = 1.0,
    dead_zone: Optional[float] = None,
) -> EstimatorState:
    """Forward-Euler counterpart of step."""
    A = _as_design_matrix(A)
    dt = check_positive_step(dt)
    z_meas = as_vector(z_meas, "z_meas", size=A.dim)
    phi = hidden_output(proj, x_model_input)
    return _advance(s, A.matrix, z_meas, phi, dt, float(gain), dead_zone, order=1)


def stability_threshold(A, xi: float) -> StabilityBound:
    """
    Radius of the error ball outside which the Lyapunov function strictly decreases.

    Args:
        A (DesignMatrix or array_like): Hurwitz design matrix.
        xi (float): Bound on the model approximation error, >= 0.

    Returns:
        StabilityBound: gamma = xi / |mu|, mu the largest eigenvalue of (A + A^T)/2.
        When mu >= 0 (possible for non-normal A) and xi > 0 no finite radius exists and gamma is inf.
    """
    A = _as_design_matrix(A)
    xi = float(xi)
    if not xi >= 0.0:
        raise ValueError(f"xi must be >= 0, got {xi}")
    mu = A.symmetric_part_max_eigenvalue
    if xi == 0.0:
        return StabilityBound(xi, 0.0)
    if mu >= 0.0:
        return StabilityBound(xi, math.inf)
    return StabilityBound(xi, xi / abs(mu))


def lyapunov_value(e, W_tilde, gain: float = 1.0) -> float:
    """
    V = 1/2 e^T e + 1/(2 gain) tr(W_tilde^T W_tilde).

    Args:
        e (array_like): State estimation error.
        W_tilde (array_like): Parameter error W* - W_hat.
        gain (float): Adaptation gain the estimator runs with.

    Returns:
        float: The non-negative Lyapunov value.
    """
    e = np.asarray(e, dtype=np.float64)
    W_tilde = np.asarray(W_tilde, dtype=np.float64)
    return 0.5 * float(np.sum(e * e)) + 0.5 * float(np.sum(W_tilde * W_tilde)) / float(gain)


class LyapunovElm:
    """Stateful Lyapunov ELM estimator."""

    def __init__(
        self,
        A,
        projection: RandomProjection,
        W0: OutputWeights,
        z0,
        gain: float = 1.0,
        dead_zone: Optional[float] = None,
    ) -> None:
        """
        Initializes a LyapunovElm at t = 0.

        Args:
            A (DesignMatrix or array_like): Hurwitz design matrix.
            projection (RandomProjection): Shared input layer.
            W0 (OutputWeights): Initial output layer.
            z0 (array_like): Initial normalized state estimate.
            gain (float): Adaptation gain.
            dead_zone (Optional[float]): Freeze adaptation while ||e|| is at most this radius.

        Returns:
            None
        """
        self._A = _as_design_matrix(A)
        self._projection = projection
        self._gain = float(gain)
        if not self._gain > 0.0:
            raise ValueError(f"Adaptation gain must be positive, got {gain}")
        self._dead_zone = dead_zone
        self._state = new_estimator(self._A, projection, W0, z0)

    @property
    def state(self) -> EstimatorState:
        """Current estimator state."""
        return self._state

    @property
    def A(self) -> DesignMatrix:
        """The design matrix."""
        return self._A

    @property
    def projection(self) -> RandomProjection:
        """The shared input layer."""
        return self._projection

    @property
    def gain(self) -> float:
        """Adaptation gain."""
        return self._gain

    def step(self, z_meas, x_model_input, dt: float) -> EstimatorState:
        """Advance by dt with RK4 and return the new state."""
        self._state = step(
            self._state, z_meas, x_model_input, dt, self._A, self._projection, self._gain, self._dead_zone
        )
        return self._state
