import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Dict, Optional, Tuple

import numpy as np

from .elm_model import NormalizationBounds, OutputWeights, RandomProjection, hidden_output
from .utilities import DivergenceError, as_matrix, as_vector, check_positive_step, runge_kutta_4

logger = logging.getLogger(__name__)

Derivative = Callable[[np.ndarray, np.ndarray, float], np.ndarray]


@dataclass(frozen=True)
class DcMotorParams:
    """Constants of the nonlinear DC motor x' = f(x) + g(x) u."""

    c1: float = 60.0
    c2: float = 0.5
    c3: float = 40.0
    c4: float = 6.0
    c5: float = 40000.0


@dataclass(frozen=True)
class LorentzParams:
    """Parameters of the Lorentz oscillator; all must be positive."""

    sigma: float = 10.0
    r: float = 28.0
    b: float = 8.0 / 3.0

    def __post_init__(self) -> None:
        if not (self.sigma > 0 and self.r > 0 and self.b > 0):
            raise ValueError(f"Lorentz parameters must be positive, got {self}")


@dataclass(frozen=True)
class PlantDefinition:
    """
    A continuous-time plant z' = f(z, u, t) with its a priori operating limits.

    Attributes:
        name (str): Registry name.
        state_dim (int): Dimension of z.
        input_dim (int): Dimension of u (0 when there is no excitation input).
        derivative (Callable): f(state, input, time) -> state derivative.
        state_bounds (NormalizationBounds): Limits mapped onto [-1, 1] for the ELM.
        input_bounds (Optional[NormalizationBounds]): Physical input limits, None when input_dim == 0.
        initial_state (np.ndarray): Default z(0).
    """

    name: str
    state_dim: int
    input_dim: int
    derivative: Derivative = field(repr=False)
    state_bounds: NormalizationBounds
    input_bounds: Optional[NormalizationBounds]
    initial_state: np.ndarray

    def __post_init__(self) -> None:
        if self.state_bounds.dim != self.state_dim:
            raise ValueError("State bounds do not match the state dimension")
        if self.input_dim > 0 and (self.input_bounds is None or self.input_bounds.dim != self.input_dim):
            raise ValueError("Input bounds do not match the input dimension")
        object.__setattr__(self, "initial_state", as_vector(self.initial_state, "initial_state", self.state_dim))


def dc_motor_derivative(x, u, p: DcMotorParams = DcMotorParams()) -> np.ndarray:
    """
    DC motor right-hand side.

    Args:
        x (array_like): State [x1, x2].
        u (float or array_like): Scalar input.
        p (DcMotorParams): Plant constants.

    Returns:
        np.ndarray: [-c1 x1 + c3 - c2 x2 u, -c4 x2 - c5 x1 u].
    """
    x1, x2 = float(x[0]), float(x[1])
    u = float(np.asarray(u, dtype=np.float64).reshape(-1)[0])
    return np.array([-p.c1 * x1 + p.c3 - p.c2 * x2 * u, -p.c4 * x2 - p.c5 * x1 * u])


def lorentz_derivative(s, p: LorentzParams = LorentzParams()) -> np.ndarray:
    """Lorentz right-hand side [sigma (y - x), r x - y - x z, x y - b z]."""
    x, y, z = float(s[0]), float(s[1]), float(s[2])
    return np.array([p.sigma * (y - x), p.r * x - y - x * z, x * y - p.b * z])


def dc_motor_plant(params: DcMotorParams = DcMotorParams()) -> PlantDefinition:
    # |u| <= 0.1 keeps the open loop stable (x1 gain -c1 + c2 c5 u^2 / c4 < 0)
    return PlantDefinition(
        name="dc_motor",
        state_dim=2,
        input_dim=1,
        derivative=lambda x, u, t: dc_motor_derivative(x, u, params),
        state_bounds=NormalizationBounds([0.0, -1500.0], [1.5, 1500.0]),
        input_bounds=NormalizationBounds([-0.1], [0.1]),
        initial_state=np.zeros(2),
    )


def lorentz_plant(params: LorentzParams = LorentzParams()) -> PlantDefinition:
    return PlantDefinition(
        name="lorentz",
        state_dim=3,
        input_dim=0,
        derivative=lambda s, u, t: lorentz_derivative(s, params),
        state_bounds=NormalizationBounds([-25.0, -25.0, 0.0], [25.0, 25.0, 50.0]),
        input_bounds=None,
        initial_state=np.ones(3),
    )


def disturbance(t: float, dim: int, xi: float, omega: float = 1.0) -> np.ndarray:
    """Bounded disturbance of constant norm xi rotating in the first two coordinates."""
    d = np.zeros(dim)
    if xi == 0.0:
        return d
    if dim == 1:
        d[0] = xi * math.cos(omega * t)
    else:
        d[0] = xi * math.cos(omega * t)
        d[1] = xi * math.sin(omega * t)
    return d


def synthetic_elm_plant(
    projection: RandomProjection,
    W_star: OutputWeights,
    A,
    xi: float = 0.0,
    omega: float = 1.0,
) -> PlantDefinition:
    """
    A plant whose dynamics are exactly an ELM model: z' = A z + W*^T phi([u, z]) + d(t).

    The state already lives in normalized coordinates, so the bounds are [-1, 1].

    Args:
        projection (RandomProjection): Input layer; input_dim = input_dim of u + state dimension.
        W_star (OutputWeights): True output layer, hidden_dim x n.
        A (array_like): Hurwitz matrix of the plant (the same A the estimator uses).
        xi (float): Norm of the injected disturbance d(t); 0 gives exact ELM dynamics.
        omega (float): Angular rate of the disturbance direction.

    Returns:
        PlantDefinition: The synthetic plant.
    """
    A = as_matrix(A, "A")
    n = A.shape[0]
    if W_star.output_dim != n or W_star.hidden_dim != projection.hidden_dim:
        raise ValueError("W_star does not match the projection and A")
    m = projection.input_dim - n
    if m < 0:
        raise ValueError(f"Projection input_dim {projection.input_dim} is smaller than the state dimension {n}")
    W = W_star.values

    def derivative(z: np.ndarray, u: np.ndarray, t: float) -> np.ndarray:
        x = np.concatenate((np.asarray(u, dtype=np.float64).reshape(-1), z))
        return A @ z + W.T @ hidden_output(projection, x) + disturbance(t, n, xi, omega)

    return PlantDefinition(
        name="synthetic_elm",
        state_dim=n,
        input_dim=m,
        derivative=derivative,
        state_bounds=NormalizationBounds.symmetric(n),
        input_bounds=NormalizationBounds.symmetric(m) if m > 0 else None,
        initial_state=np.zeros(n),
    )


PLANTS: Dict[str, Callable[[], PlantDefinition]] = {
    "dc_motor": dc_motor_plant,
    "lorentz": lorentz_plant,
}


def get_plant(name: str) -> PlantDefinition:
    try:
        return PLANTS[name]()
    except KeyError:
        raise ValueError(f"Unknown plant {name!r}; expected one of {sorted(PLANTS)}") from None


def rk4_step(plant: PlantDefinition, x, u, t: float, dt: float) -> np.ndarray:
    """
    One classical Runge-Kutta step with the input held constant.

    Args:
        plant (PlantDefinition): The plant.
        x (array_like): State at t.
        u (array_like): Input applied over [t, t + dt].
        t (float): Current time.
        dt (float): Step size.

    Returns:
        np.ndarray: State at t + dt.
    """
    dt = check_positive_step(dt)
    x = np.asarray(x, dtype=np.float64)
    u = np.asarray(u, dtype=np.float64).reshape(-1)
    x_next = runge_kutta_4(lambda tau, y: plant.derivative(y, u, tau), t, x, dt)
    if not np.all(np.isfinite(x_next)):
        raise DivergenceError(f"Plant {plant.name} diverged", t + dt, float(np.linalg.norm(x_next)))
    return x_next


def simulate(plant: PlantDefinition, x0, u_series, dt: float, t0: float = 0.0) -> np.ndarray:
    """
    Integrate a whole trajectory with zero-order-hold inputs.

    Args:
        plant (PlantDefinition): The plant.
        x0 (array_like): Initial state.
        u_series (array_like): N x input_dim inputs; row k is held on [t_k, t_k+1).
        dt (float): Step size.
        t0 (float): Initial time.

    Returns:
        np.ndarray: (N + 1) x state_dim states at t0, t0 + dt, ..., t0 + N dt.
    """
    x = as_vector(x0, "x0", size=plant.state_dim)
    u_series = np.asarray(u_series, dtype=np.float64)
    if u_series.ndim == 1:
        if plant.input_dim != 1:
            raise ValueError(f"Plant {plant.name} needs an N x {plant.input_dim} input matrix")
        u_series = u_series.reshape(-1, 1)
    if u_series.ndim != 2 or u_series.shape[1] != plant.input_dim:
        raise ValueError(f"Inputs must be N x {plant.input_dim}, got shape {u_series.shape}")
    n_steps = u_series.shape[0]

    states = np.empty((n_steps + 1, plant.state_dim))
    states[0] = x
    for k in range(n_steps):
        x = rk4_step(plant, x, u_series[k], t0 + k * dt, dt)
        states[k + 1] = x
    return states


def time_grid(duration: float, dt: float) -> Tuple[int, np.ndarray]:
    """Number of steps and the sample times 0, dt, ..., n_steps dt."""
    dt = check_positive_step(dt)
    n_steps = int(round(duration / dt))
    if n_steps < 1:
        raise ValueError(f"duration {duration} is shorter than one step of {dt}")
    return n_steps, np.arange(n_steps + 1) * dt
