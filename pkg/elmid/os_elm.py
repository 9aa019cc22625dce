import logging
from collections import deque
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve, solve

from .batch_trainer import DEFAULT_LAMBDA, check_lambda, regularized_gram
from .elm_model import OutputWeights, RandomProjection, hidden_output
from .utilities import NumericDriftError, NumericError, as_matrix, as_vector

logger = logging.getLogger(__name__)

SYMMETRY_TOLERANCE = 1e-6


@dataclass(frozen=True)
class OnlineState:
    """
    Recursive least-squares state of the online-sequential ELM.

    Attributes:
        W (OutputWeights): Current output layer.
        P (np.ndarray): Inverse of the accumulated regularized Gram matrix, hidden_dim x hidden_dim.
    """

    W: OutputWeights
    P: np.ndarray

    def __post_init__(self) -> None:
        P = np.array(as_matrix(self.P, "P", shape=(self.W.hidden_dim, self.W.hidden_dim)), copy=True)
        P.setflags(write=False)
        object.__setattr__(self, "P", P)

    @classmethod
    def from_prior(cls, W0: OutputWeights, lam: float = DEFAULT_LAMBDA) -> "OnlineState":
        """
        Start the recursion from a given W0 with P0 = lambda * I.

        This is init_online with an empty seed batch: the state then tracks the ridge
        solution pulled toward W0 instead of toward zero.
        """
        lam = check_lambda(lam)
        return cls(W0, lam * np.eye(W0.hidden_dim))

    @property
    def hidden_dim(self) -> int:
        """Number of hidden neurons."""
        return self.W.hidden_dim

    @property
    def output_dim(self) -> int:
        """Number of outputs."""
        return self.W.output_dim


class NarxWindow:
    """Lagged-regressor window turning a sampled input/output stream into regression pairs."""

    def __init__(self, n_u: int, n_y: int, u_dim: int, y_dim: int) -> None:
        """
        Initializes an empty NarxWindow.

        Args:
            n_u (int): Number of past inputs in each feature.
            n_y (int): Number of past outputs in each feature.
            u_dim (int): Dimension of each input sample (0 for autonomous systems).
            y_dim (int): Dimension of each output sample.

        Returns:
            None
        """
        if n_u < 1 or n_y < 1:
            raise ValueError(f"NARX orders must be >= 1, got n_u={n_u}, n_y={n_y}")
        if u_dim < 0 or y_dim < 1:
            raise ValueError(f"Invalid signal dimensions u_dim={u_dim}, y_dim={y_dim}")
        self._n_u = int(n_u)
        self._n_y = int(n_y)
        self._u_dim = int(u_dim)
        self._y_dim = int(y_dim)
        self._u_history: deque = deque(maxlen=self._n_u)
        self._y_history: deque = deque(maxlen=self._n_y)

    @property
    def n_u(self) -> int:
        """Input lag order."""
        return self._n_u

    @property
    def n_y(self) -> int:
        """Output lag order."""
        return self._n_y

    @property
    def u_dim(self) -> int:
        """Dimension of each input sample."""
        return self._u_dim

    @property
    def y_dim(self) -> int:
        """Dimension of each output sample."""
        return self._y_dim

    @property
    def feature_dim(self) -> int:
        """Length of the regressor vector."""
        return self._u_dim * self._n_u + self._y_dim * self._n_y

    @property
    def is_full(self) -> bool:
        """True once enough samples are buffered to form a regressor."""
        return len(self._u_history) == self._n_u and len(self._y_history) == self._n_y

    def push(self, u_k, y_k) -> Optional[Tuple[np.ndarray, np.ndarray]]:
        """
        Add the samples of time k.

        Args:
            u_k (array_like): Input at time k.
            y_k (array_like): Output at time k.

        Returns:
            Optional[Tuple[np.ndarray, np.ndarray]]: The feature
            [u(k-1), .., u(k-n_u), y(k-1), .., y(k-n_y)] and the target y(k), or None
            while the histories are still filling.
        """
        u_k = np.asarray(u_k, dtype=np.float64).reshape(-1)
        y_k = np.asarray(y_k, dtype=np.float64).reshape(-1)
        if u_k.shape[0] != self._u_dim or y_k.shape[0] != self._y_dim:
            raise ValueError(
                f"Expected u of length {self._u_dim} and y of length {self._y_dim}, "
                f"got {u_k.shape[0]} and {y_k.shape[0]}"
            )

        pair = None
        if self.is_full:
            # deques hold oldest..newest; the feature lists newest first
            x = np.concatenate(list(reversed(self._u_history)) + list(reversed(self._y_history)))
            pair = (x, y_k.copy())

        self._u_history.append(u_k)
        self._y_history.append(y_k)
        return pair


def narx_push(w: NarxWindow, u_k, y_k) -> Optional[Tuple[np.ndarray, np.ndarray]]:
    """Functional form of NarxWindow.push."""
    return w.push(u_k, y_k)


def narx_pairs(U, Y, n_u: int = 1, n_y: int = 1) -> Tuple[np.ndarray, np.ndarray]:
    """
    Build all regression pairs from sampled series.

    Args:
        U (array_like): N x u_dim inputs (u_dim may be 0).
        Y (array_like): N x y_dim outputs.
        n_u (int): Input lag order.
        n_y (int): Output lag order.

    Returns:
        Tuple[np.ndarray, np.ndarray]: Features (N - max(n_u, n_y)) x feature_dim and matching targets.
    """
    U = np.asarray(U, dtype=np.float64)
    Y = np.asarray(Y, dtype=np.float64)
    if U.ndim == 1:
        U = U.reshape(-1, 1)
    if Y.ndim == 1:
        Y = Y.reshape(-1, 1)
    if U.shape[0] != Y.shape[0]:
        raise ValueError(f"U and Y must have the same number of samples, got {U.shape[0]} and {Y.shape[0]}")

    window = NarxWindow(n_u, n_y, U.shape[1], Y.shape[1])
    features: List[np.ndarray] = []
    targets: List[np.ndarray] = []
    for u_k, y_k in zip(U, Y):
        pair = window.push(u_k, y_k)
        if pair is not None:
            features.append(pair[0])
            targets.append(pair[1])
    if not features:
        return np.empty((0, window.feature_dim)), np.empty((0, Y.shape[1]))
    return np.vstack(features), np.vstack(targets)


def init_online(H0, Y0, lam: float = DEFAULT_LAMBDA) -> OnlineState:
    """
    Initialize the recursion from a seed batch.

    K0 = I/lambda + H0^T H0, W0 = K0^{-1} H0^T Y0, P0 = K0^{-1}.

    Args:
        H0 (array_like): n0 x hidden_dim hidden outputs.
        Y0 (array_like): n0 x output_dim targets.
        lam (float): Regularization coefficient.

    Returns:
        OnlineState: The initial state.
    """
    H0 = as_matrix(H0, "H0")
    Y0 = as_matrix(Y0, "Y0", shape=(H0.shape[0], None))
    if H0.shape[0] < 1:
        raise ValueError("init_online needs at least one sample")
    lam = check_lambda(lam)

    K0 = regularized_gram(H0, lam)
    try:
        factor = cho_factor(K0, check_finite=False)
    except LinAlgError as exc:
        raise NumericError(f"Initial Gram matrix is not positive definite: {exc}") from exc
    P0 = cho_solve(factor, np.eye(K0.shape[0]), check_finite=False)
    W0 = cho_solve(factor, H0.T @ Y0, check_finite=False)
    logger.debug("Online ELM initialized from %d samples", H0.shape[0])
    return OnlineState(OutputWeights(W0), 0.5 * (P0 + P0.T))


def online_update(s: OnlineState, H1, Y1) -> OnlineState:
    """
    Fold k new rows into the recursive least-squares state.

    P_{k+1} = P_k - P_k H^T (I + H P_k H^T)^{-1} H P_k
    W_{k+1} = W_k + P_{k+1} H^T (Y - H W_k)

    Args:
        s (OnlineState): Current state.
        H1 (array_like): k x hidden_dim hidden outputs.
        Y1 (array_like): k x output_dim targets.

    Returns:
        OnlineState: The updated state, P re-symmetrized.
    """
    H1 = as_matrix(H1, "H1", shape=(None, s.hidden_dim))
    Y1 = as_matrix(Y1, "Y1", shape=(H1.shape[0], s.output_dim))
    if H1.shape[0] < 1:
        raise ValueError("online_update needs at least one row")
    return _update(s.P, s.W.values, H1, Y1)


def _update(P: np.ndarray, W: np.ndarray, H1: np.ndarray, Y1: np.ndarray) -> OnlineState:
    PHt = P @ H1.T
    if H1.shape[0] == 1:
        gain = PHt / (1.0 + float(H1[0] @ PHt[:, 0]))
    else:
        S = np.eye(H1.shape[0]) + H1 @ PHt
        try:
            gain = solve(S, PHt.T, assume_a="pos", check_finite=False).T
        except LinAlgError as exc:
            raise NumericError(f"Innovation covariance is singular: {exc}") from exc
    P_next = P - gain @ PHt.T
    W_next = W + P_next @ H1.T @ (Y1 - H1 @ W)

    if not (np.all(np.isfinite(P_next)) and np.all(np.isfinite(W_next))):
        raise NumericError("Online update produced non-finite values")

    scale = max(float(np.max(np.abs(P_next))), np.finfo(float).tiny)
    asymmetry = float(np.max(np.abs(P_next - P_next.T))) / scale
    P_next = 0.5 * (P_next + P_next.T)
    state = OnlineState(OutputWeights(W_next), P_next)
    if asymmetry > SYMMETRY_TOLERANCE:
        raise NumericDriftError(f"P lost symmetry: relative asymmetry {asymmetry:.3g}", asymmetry, state)
    return state


class OnlineElm:
    """
    Online-sequential ELM identifier in series-parallel form.

    Each observed sample produces an a priori one-step-ahead prediction of the output
    from the lagged measurements, and then updates the output weights with it.
    """

    def __init__(
        self,
        projection: RandomProjection,
        state: OnlineState,
        n_u: int = 1,
        n_y: int = 1,
        u_dim: int = 1,
        y_dim: int = 1,
        lam: float = DEFAULT_LAMBDA,
        init_samples: int = 0,
    ) -> None:
        """
        Initializes an OnlineElm with its NARX window.

        Args:
            projection (RandomProjection): Shared input layer; its input_dim must equal the NARX feature length.
            state (OnlineState): Initial recursion state.
            n_u (int): Input lag order.
            n_y (int): Output lag order.
            u_dim (int): Input dimension.
            y_dim (int): Output dimension.
            lam (float): Regularization used when a seed batch is collected.
            init_samples (int): When positive, the first init_samples pairs are collected and the
                state is replaced by init_online on them; predictions before that use `state`.

        Returns:
            None
        """
        self._window = NarxWindow(n_u, n_y, u_dim, y_dim)
        if projection.input_dim != self._window.feature_dim:
            raise ValueError(
                f"Projection expects {projection.input_dim} inputs, NARX features have {self._window.feature_dim}"
            )
        if state.hidden_dim != projection.hidden_dim or state.output_dim != y_dim:
            raise ValueError("Online state dimensions do not match the projection and output dimension")
        self._projection = projection
        self._state = state
        self._lam = check_lambda(lam)
        self._init_samples = int(init_samples)
        self._seed_rows: List[np.ndarray] = []
        self._seed_targets: List[np.ndarray] = []

    @property
    def state(self) -> OnlineState:
        """Current recursion state."""
        return self._state

    @property
    def projection(self) -> RandomProjection:
        """The shared input layer."""
        return self._projection

    def predict(self, x) -> np.ndarray:
        """One-step-ahead prediction for a NARX feature vector."""
        return hidden_output(self._projection, x) @ self._state.W.values

    def partial_fit(self, x, target) -> None:
        """Update the output weights with one regression pair."""
        phi = hidden_output(self._projection, x)
        target = as_vector(target, "target", size=self._state.output_dim)
        self._fit_phi(phi, target)

    def observe(self, u_k, y_k) -> Optional[np.ndarray]:
        """
        Consume the samples of time k.

        Returns:
            Optional[np.ndarray]: The prediction of y(k) made before learning from it, or None
            while the NARX window is filling.
        """
        pair = self._window.push(u_k, y_k)
        if pair is None:
            return None
        x, target = pair
        phi = hidden_output(self._projection, x)
        prediction = phi @ self._state.W.values
        self._fit_phi(phi, target)
        return prediction

    def _fit_phi(self, phi: np.ndarray, target: np.ndarray) -> None:
        if len(self._seed_rows) < self._init_samples:
            self._seed_rows.append(phi)
            self._seed_targets.append(target)
            if len(self._seed_rows) == self._init_samples:
                self._state = init_online(np.vstack(self._seed_rows), np.vstack(self._seed_targets), self._lam)
            return
        self._state = _update(self._state.P, self._state.W.values, phi.reshape(1, -1), target.reshape(1, -1))
