from typing import Callable, Optional, Tuple

import numpy as np


class ElmidError(Exception):
    """Base class for every error raised by the package."""


class NumericError(ElmidError):
    """A linear-algebra or integration step failed numerically."""


class NumericDriftError(NumericError):
    """The recursive covariance lost its symmetry beyond tolerance."""

    def __init__(self, message: str, asymmetry: float, state: object = None) -> None:
        """
        Initializes the error with the measured asymmetry.

        Args:
            message (str): Description of the drift.
            asymmetry (float): The relative asymmetry that was measured.
            state (object): The re-symmetrized state, kept so a caller can continue from it.

        Returns:
            None
        """
        super().__init__(message)
        self.asymmetry: float = asymmetry
        self.state = state


class DivergenceError(NumericError):
    """An integrated trajectory stopped being finite."""

    def __init__(self, message: str, t: float, norm: float) -> None:
        """
        Initializes the error with where and how the trajectory blew up.

        Args:
            message (str): Description of the failure.
            t (float): Simulation time at which the blow-up was detected.
            norm (float): Norm of the offending state (may be inf or nan).

        Returns:
            None
        """
        super().__init__(f"{message} (t={t:.6g}, norm={norm:.6g})")
        self.t: float = t
        self.norm: float = norm


class ConfigError(ElmidError, ValueError):
    """The experiment configuration is inconsistent or unreadable."""


class OutputError(ElmidError, OSError):
    """Writing or reading a result file failed."""


def as_vector(value, name: str, size: Optional[int] = None) -> np.ndarray:
    """
    Convert a value to a finite one-dimensional float64 array.

    Args:
        value (array_like): The value to convert.
        name (str): Name used in error messages.
        size (Optional[int]): Required length, if any.

    Returns:
        np.ndarray: The converted vector.
    """
    array = np.asarray(value, dtype=np.float64)
    if array.ndim == 0:
        array = array.reshape(1)
    if array.ndim != 1:
        raise ValueError(f"{name} must be a vector, got shape {array.shape}")
    if size is not None and array.shape[0] != size:
        raise ValueError(f"{name} must have length {size}, got {array.shape[0]}")
    if not np.all(np.isfinite(array)):
        raise ValueError(f"{name} contains non-finite entries")
    return array


def as_matrix(value, name: str, shape: Tuple[Optional[int], Optional[int]] = (None, None)) -> np.ndarray:
    """
    Convert a value to a finite two-dimensional float64 array.

    Args:
        value (array_like): The value to convert.
        name (str): Name used in error messages.
        shape (Tuple[Optional[int], Optional[int]]): Required rows and columns; None leaves a side free.

    Returns:
        np.ndarray: The converted matrix.
    """
    array = np.asarray(value, dtype=np.float64)
    if array.ndim != 2:
        raise ValueError(f"{name} must be a matrix, got shape {array.shape}")
    rows, cols = shape
    if rows is not None and array.shape[0] != rows:
        raise ValueError(f"{name} must have {rows} rows, got {array.shape[0]}")
    if cols is not None and array.shape[1] != cols:
        raise ValueError(f"{name} must have {cols} columns, got {array.shape[1]}")
    if not np.all(np.isfinite(array)):
        raise ValueError(f"{name} contains non-finite entries")
    return array


def runge_kutta_4(
    derivative: Callable[[float, np.ndarray], np.ndarray], t: float, y: np.ndarray, dt: float
) -> np.ndarray:
    """
    Advance y' = derivative(t, y) by one classical fourth-order Runge-Kutta step.

    Args:
        derivative (Callable): Right-hand side evaluated as derivative(t, y).
        t (float): Time at the start of the step.
        y (np.ndarray): State at the start of the step.
        dt (float): Step size, strictly positive.

    Returns:
        np.ndarray: State at t + dt.
    """
    half = 0.5 * dt
    k1 = derivative(t, y)
    k2 = derivative(t + half, y + half * k1)
    k3 = derivative(t + half, y + half * k2)
    k4 = derivative(t + dt, y + dt * k3)
    return y + (dt / 6.0) * (k1 + 2.0 * (k2 + k3) + k4)


def check_positive_step(dt: float) -> float:
    dt = float(dt)
    if not np.isfinite(dt) or dt <= 0.0:
        raise ValueError(f"dt must be a positive finite number, got {dt}")
    return dt
