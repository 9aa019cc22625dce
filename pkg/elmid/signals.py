import logging
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

logger = logging.getLogger(__name__)

# Sub-stream identifiers used by derive_seed.
STREAM_PROJECTION = 0
STREAM_PRMS = 1
STREAM_NOISE = 2
STREAM_SYNTHETIC = 3


def derive_seed(seed: int, stream: int) -> int:
    """Independent, reproducible 32-bit seed for one named sub-stream of an experiment seed."""
    return int(np.random.SeedSequence([int(seed), int(stream)]).generate_state(1)[0])


@dataclass(frozen=True)
class PrmsConfig:
    """
    Pseudo-random multilevel sequence settings.

    Attributes:
        levels (int): Number of equispaced amplitude levels, >= 2.
        low (float): Lowest level.
        high (float): Highest level.
        hold_min (float): Shortest hold time, >= dt.
        hold_max (float): Longest hold time.
        seed (int): Generator seed.
        duration (float): Signal length in time units.
        dt (float): Sample time.
    """

    levels: int = 5
    low: float = -1.0
    high: float = 1.0
    hold_min: float = 0.05
    hold_max: float = 0.5
    seed: int = 0
    duration: float = 10.0
    dt: float = 1e-4

    def __post_init__(self) -> None:
        if self.levels < 2:
            raise ValueError(f"PRMS needs at least 2 levels, got {self.levels}")
        if not self.low < self.high:
            raise ValueError(f"PRMS amplitude range is empty: [{self.low}, {self.high}]")
        if not self.dt > 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if not self.duration > 0:
            raise ValueError(f"duration must be positive, got {self.duration}")
        if self.hold_min < self.dt or self.hold_max < self.hold_min:
            raise ValueError(f"Invalid hold range [{self.hold_min}, {self.hold_max}] for dt={self.dt}")

    @property
    def n_samples(self) -> int:
        """Number of samples in the generated signal."""
        return max(1, int(round(self.duration / self.dt)))


@dataclass(frozen=True)
class NoiseConfig:
    """Gaussian measurement noise: per-dimension standard deviation in normalized units."""

    sigma: Union[float, Sequence[float]] = 0.01
    seed: int = 0

    def __post_init__(self) -> None:
        sigma = np.atleast_1d(np.asarray(self.sigma, dtype=np.float64))
        if sigma.ndim != 1 or not np.all(np.isfinite(sigma)) or np.any(sigma < 0):
            raise ValueError(f"Noise sigma must be finite and >= 0, got {self.sigma}")
        object.__setattr__(self, "sigma", tuple(float(v) for v in sigma))


def prms_levels(c: PrmsConfig) -> np.ndarray:
    return np.linspace(c.low, c.high, c.levels)


def prms_generate(c: PrmsConfig) -> np.ndarray:
    """
    Generate a piecewise-constant multilevel excitation.

    Each segment draws its level uniformly from prms_levels(c) and its hold time uniformly
    from [hold_min, hold_max], rounded to whole samples. The final segment is cut at the
    end of the signal.

    Args:
        c (PrmsConfig): Signal settings.

    Returns:
        np.ndarray: c.n_samples values.
    """
    rng = np.random.Generator(np.random.PCG64(int(c.seed)))
    alphabet = prms_levels(c)
    n = c.n_samples
    signal = np.empty(n)
    position = 0
    while position < n:
        level = alphabet[rng.integers(c.levels)]
        hold = max(1, int(round(rng.uniform(c.hold_min, c.hold_max) / c.dt)))
        signal[position : position + hold] = level
        position += hold
    return signal


def add_noise(signal, n: NoiseConfig) -> np.ndarray:
    """
    Add zero-mean Gaussian noise with per-column standard deviation.

    Args:
        signal (array_like): N x d clean signal.
        n (NoiseConfig): Noise settings; a single sigma applies to every column.

    Returns:
        np.ndarray: The noisy N x d signal.
    """
    signal = np.asarray(signal, dtype=np.float64)
    if signal.ndim != 2:
        raise ValueError(f"Signal must be N x d, got shape {signal.shape}")
    sigma = np.asarray(n.sigma)
    if sigma.shape[0] not in (1, signal.shape[1]):
        raise ValueError(f"Noise sigma has {sigma.shape[0]} entries for a signal of {signal.shape[1]} columns")
    rng = np.random.Generator(np.random.PCG64(int(n.seed)))
    return signal + rng.standard_normal(signal.shape) * sigma
