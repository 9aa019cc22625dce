import enum
import logging
from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from .utilities import as_matrix, as_vector

logger = logging.getLogger(__name__)

# Upper limit on hidden_dim * input_dim for a single projection.
MAX_PROJECTION_ENTRIES = 2**31 - 1


class Activation(enum.Enum):
    """Hidden-layer activation functions."""

    SIGMOID = "sigmoid"


def activation_apply(v, activation: Activation = Activation.SIGMOID):
    """
    Apply the hidden-layer activation element-wise.

    Args:
        v (float or np.ndarray): Pre-activation value(s).
        activation (Activation): Activation to apply.

    Returns:
        float or np.ndarray: 1 / (1 + exp(-v)) for the sigmoid, saturating without overflow.
    """
    if activation is Activation.SIGMOID:
        return expit(v)
    raise ValueError(f"Unsupported activation: {activation}")


class RandomProjection:
    """The frozen, randomly assigned input layer of an ELM model."""

    def __init__(
        self, weights, biases, activation: Activation = Activation.SIGMOID, seed: int = 0
    ) -> None:
        """
        Initializes a RandomProjection and freezes its arrays.

        Args:
            weights (np.ndarray): Input weights, hidden_dim x input_dim.
            biases (np.ndarray): Hidden biases, length hidden_dim.
            activation (Activation): Hidden-layer activation.
            seed (int): Seed the entries were drawn from (informational).

        Returns:
            None
        """
        weights = np.array(as_matrix(weights, "weights"), copy=True)
        biases = np.array(as_vector(biases, "biases", size=weights.shape[0]), copy=True)
        if weights.shape[0] < 1 or weights.shape[1] < 1:
            raise ValueError(f"Projection dimensions must be positive, got {weights.shape}")
        weights.setflags(write=False)
        biases.setflags(write=False)

        self._weights = weights
        self._biases = biases
        self._activation = Activation(activation)
        self._seed = int(seed)

    @property
    def weights(self) -> np.ndarray:
        """Read-only input weights, hidden_dim x input_dim."""
        return self._weights

    @property
    def biases(self) -> np.ndarray:
        """Read-only hidden biases."""
        return self._biases

    @property
    def activation(self) -> Activation:
        """Hidden-layer activation."""
        return self._activation

    @property
    def seed(self) -> int:
        """Seed the entries were drawn from."""
        return self._seed

    @property
    def input_dim(self) -> int:
        """Length of the feature vector."""
        return self._weights.shape[1]

    @property
    def hidden_dim(self) -> int:
        """Number of hidden neurons."""
        return self._weights.shape[0]

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, RandomProjection):
            return NotImplemented
        return (
            self._activation is other._activation
            and np.array_equal(self._weights, other._weights)
            and np.array_equal(self._biases, other._biases)
        )

    def __repr__(self) -> str:
        return (
            f"RandomProjection(input_dim={self.input_dim}, hidden_dim={self.hidden_dim}, "
            f"activation={self._activation.value}, seed={self._seed})"
        )


@dataclass(frozen=True)
class OutputWeights:
    """The trained output layer W, hidden_dim x output_dim."""

    values: np.ndarray

    def __post_init__(self) -> None:
        values = np.array(as_matrix(self.values, "output weights"), copy=True)
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @classmethod
    def zeros(cls, hidden_dim: int, output_dim: int) -> "OutputWeights":
        return cls(np.zeros((hidden_dim, output_dim)))

    @property
    def hidden_dim(self) -> int:
        """Number of hidden neurons (rows)."""
        return self.values.shape[0]

    @property
    def output_dim(self) -> int:
        """Number of model outputs (columns)."""
        return self.values.shape[1]


@dataclass(frozen=True)
class NormalizationBounds:
    """
    Per-dimension a priori limits mapped onto [-1, +1].

    Attributes:
        lower (np.ndarray): Value mapped to -1 in every dimension.
        upper (np.ndarray): Value mapped to +1 in every dimension.
    """

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self) -> None:
        lower = np.array(as_vector(self.lower, "lower bound"), copy=True)
        upper = np.array(as_vector(self.upper, "upper bound", size=lower.shape[0]), copy=True)
        if np.any(lower >= upper):
            raise ValueError(f"Degenerate normalization bounds: lower={lower.tolist()} upper={upper.tolist()}")
        lower.setflags(write=False)
        upper.setflags(write=False)
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)

    @classmethod
    def symmetric(cls, dim: int, half_range: float = 1.0) -> "NormalizationBounds":
        return cls(np.full(dim, -half_range), np.full(dim, half_range))

    @property
    def dim(self) -> int:
        """Number of bounded dimensions."""
        return self.lower.shape[0]

    @property
    def midpoint(self) -> np.ndarray:
        """Value mapped to 0 in every dimension."""
        return 0.5 * (self.lower + self.upper)

    @property
    def half_range(self) -> np.ndarray:
        """Half the width of every dimension."""
        return 0.5 * (self.upper - self.lower)


def init_random_projection(input_dim: int, hidden_dim: int, seed: int) -> RandomProjection:
    """
    Draw a reproducible random projection.

    Weights and biases are i.i.d. uniform on [-1, 1], drawn from numpy's PCG64 bit generator
    seeded with `seed`: weights first in row-major order, then biases.

    Args:
        input_dim (int): Length of the feature vector x.
        hidden_dim (int): Number of hidden neurons.
        seed (int): Non-negative generator seed.

    Returns:
        RandomProjection: The frozen projection with sigmoid activation.
    """
    input_dim = int(input_dim)
    hidden_dim = int(hidden_dim)
    if input_dim < 1 or hidden_dim < 1:
        raise ValueError(f"Dimensions must be >= 1, got input_dim={input_dim}, hidden_dim={hidden_dim}")
    if input_dim * hidden_dim > MAX_PROJECTION_ENTRIES:
        raise ValueError(f"Projection of {hidden_dim}x{input_dim} entries is too large")
    if int(seed) < 0:
        raise ValueError(f"Seed must be unsigned, got {seed}")

    rng = np.random.Generator(np.random.PCG64(int(seed)))
    weights = rng.uniform(-1.0, 1.0, size=(hidden_dim, input_dim))
    biases = rng.uniform(-1.0, 1.0, size=hidden_dim)
    logger.debug("Random projection %dx%d drawn with seed %d", hidden_dim, input_dim, seed)
    return RandomProjection(weights, biases, Activation.SIGMOID, seed)


def hidden_output(proj: RandomProjection, x) -> np.ndarray:
    """
    Compute the hidden-layer output phi = g(W_r x + b_r) for one feature vector.

    Args:
        proj (RandomProjection): The input layer.
        x (array_like): Feature vector of length proj.input_dim.

    Returns:
        np.ndarray: phi, length proj.hidden_dim, entries in (0, 1).
    """
    x = as_vector(x, "x", size=proj.input_dim)
    return activation_apply(proj.weights @ x + proj.biases, proj.activation)


def hidden_output_batch(proj: RandomProjection, X) -> np.ndarray:
    """Row-wise hidden_output for an N x input_dim matrix."""
    X = as_matrix(X, "X", shape=(None, proj.input_dim))
    return activation_apply(X @ proj.weights.T + proj.biases, proj.activation)


def predict(proj: RandomProjection, w: OutputWeights, x) -> np.ndarray:
    """
    Evaluate the ELM model y_hat = phi^T W.

    Args:
        proj (RandomProjection): The input layer.
        w (OutputWeights): The output layer.
        x (array_like): Feature vector.

    Returns:
        np.ndarray: Prediction of length w.output_dim.
    """
    if w.hidden_dim != proj.hidden_dim:
        raise ValueError(f"Output weights have {w.hidden_dim} rows, projection has {proj.hidden_dim} neurons")
    return hidden_output(proj, x) @ w.values


def predict_batch(proj: RandomProjection, w: OutputWeights, X) -> np.ndarray:
    """Row-wise predict for an N x input_dim matrix; returns N x output_dim."""
    if w.hidden_dim != proj.hidden_dim:
        raise ValueError(f"Output weights have {w.hidden_dim} rows, projection has {proj.hidden_dim} neurons")
    return hidden_output_batch(proj, X) @ w.values


def _check_last_dim(x: np.ndarray, b: NormalizationBounds) -> None:
    if x.ndim == 0 or x.shape[-1] != b.dim:
        raise ValueError(f"Expected trailing dimension {b.dim}, got shape {x.shape}")


def normalize(x, b: NormalizationBounds) -> np.ndarray:
    """
    Map values affinely from [lower, upper] to [-1, +1] per dimension.

    Works on a single vector or on an N x d series. Values outside the bounds map outside [-1, 1].
    """
    x = np.asarray(x, dtype=np.float64)
    _check_last_dim(x, b)
    return (x - b.midpoint) / b.half_range


def denormalize(x_bar, b: NormalizationBounds) -> np.ndarray:
    """Exact inverse of normalize."""
    x_bar = np.asarray(x_bar, dtype=np.float64)
    _check_last_dim(x_bar, b)
    return x_bar * b.half_range + b.midpoint
