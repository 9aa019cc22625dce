import csv
import dataclasses
import hashlib
import json
import logging
import math
import pathlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np

from .batch_trainer import DEFAULT_LAMBDA
from .elm_model import (
    NormalizationBounds,
    OutputWeights,
    RandomProjection,
    denormalize,
    init_random_projection,
    normalize,
)
from .lyapunov_estimator import DesignMatrix, LyapunovElm, stability_threshold
from .os_elm import OnlineElm, OnlineState
from .plants import PlantDefinition, get_plant, simulate, synthetic_elm_plant, time_grid
from .signals import (
    STREAM_NOISE,
    STREAM_PRMS,
    STREAM_PROJECTION,
    STREAM_SYNTHETIC,
    NoiseConfig,
    PrmsConfig,
    add_noise,
    derive_seed,
    prms_generate,
)
from .utilities import ConfigError, DivergenceError, NumericError, OutputError

logger = logging.getLogger(__name__)

LYAPUNOV_ELM = "lyapunov_elm"
ONLINE_ELM = "online_elm"
METHODS: Tuple[str, ...] = (LYAPUNOV_ELM, ONLINE_ELM)

# Per-plant defaults for the fields left as None in ExperimentConfig.
PLANT_DEFAULTS: Dict[str, Dict[str, Any]] = {
    "dc_motor": {
        "A": ((-50.0, 0.0), (0.0, -50.0)),
        "hidden_dim": 8,
        "duration": 10.0,
        "adaptation_gain": 1e5,
    },
    "lorentz": {
        "A": ((-60.0, 0.0, 0.0), (0.0, -60.0, 0.0), (0.0, 0.0, -120.0)),
        "hidden_dim": 12,
        "duration": 20.0,
        "adaptation_gain": 1e5,
    },
    "synthetic_elm": {
        "A": ((-50.0, 0.0), (0.0, -50.0)),
        "hidden_dim": 8,
        "duration": 10.0,
        "adaptation_gain": 1e4,
    },
}
RESOLVED_FIELDS: Tuple[str, ...] = ("A", "hidden_dim", "duration", "adaptation_gain")
SYNTHETIC_INPUT_DIM = 1

PAPER_SEEDS: Tuple[int, ...] = tuple(range(10))
DEFAULT_NOISE_SIGMA = 0.01
CLEAN_CASE = "normalized RMSE"
NOISY_CASE = "normalized RMSE (with noise)"

# Keys accepted in a config file; "lambda" is a reserved word in Python.
CONFIG_FILE_KEYS: Dict[str, str] = {
    "lambda": "lam",
}


@dataclass(frozen=True)
class ExperimentConfig:
    """
    Declarative description of one identification run.

    Fields left as None take the plant's documented default when the config is resolved.
    """

    plant: str = "dc_motor"
    seed: int = 0
    dt: float = 1e-4
    duration: Optional[float] = None
    hidden_dim: Optional[int] = None
    lam: float = DEFAULT_LAMBDA
    A: Optional[Tuple[Tuple[float, ...], ...]] = None
    methods: Tuple[str, ...] = METHODS
    noise_sigma: float = 0.0
    adaptation_gain: Optional[float] = None
    dead_zone: bool = False
    xi: float = 0.0
    prms_levels: int = 5
    prms_low: float = -1.0
    prms_high: float = 1.0
    prms_hold_min: float = 0.05
    prms_hold_max: float = 0.5
    initial_state: Optional[Tuple[float, ...]] = None
    state_lower: Optional[Tuple[float, ...]] = None
    state_upper: Optional[Tuple[float, ...]] = None
    input_lower: Optional[Tuple[float, ...]] = None
    input_upper: Optional[Tuple[float, ...]] = None
    online_init_samples: int = 0
    online_sample_period: float = 0.05
    synthetic_weight_scale: float = 20.0
    weight_log_points: int = 2000
    out: Optional[str] = None

    def __post_init__(self) -> None:
        for name in ("initial_state", "state_lower", "state_upper", "input_lower", "input_upper"):
            value = getattr(self, name)
            if value is not None:
                object.__setattr__(self, name, tuple(float(v) for v in value))
        if self.A is not None:
            object.__setattr__(self, "A", tuple(tuple(float(v) for v in row) for row in self.A))
        if isinstance(self.methods, str):
            object.__setattr__(self, "methods", (self.methods,))
        object.__setattr__(self, "methods", tuple(self.methods))

        if self.plant not in PLANT_DEFAULTS:
            raise ConfigError(f"Unknown plant {self.plant!r}; expected one of {sorted(PLANT_DEFAULTS)}")
        unknown = [m for m in self.methods if m not in METHODS]
        if unknown:
            raise ConfigError(f"Unknown methods {unknown}; expected a subset of {list(METHODS)}")
        if len(set(self.methods)) != len(self.methods):
            raise ConfigError(f"Duplicate methods in {list(self.methods)}")
        if int(self.seed) < 0:
            raise ConfigError(f"seed must be >= 0, got {self.seed}")
        if not (math.isfinite(self.dt) and self.dt > 0):
            raise ConfigError(f"dt must be positive, got {self.dt}")
        if self.duration is not None and not self.duration > 0:
            raise ConfigError(f"duration must be positive, got {self.duration}")
        if self.hidden_dim is not None and self.hidden_dim < 1:
            raise ConfigError(f"hidden_dim must be >= 1, got {self.hidden_dim}")
        if not (math.isfinite(self.lam) and self.lam > 0):
            raise ConfigError(f"lambda must be positive and finite, got {self.lam}")
        if not self.noise_sigma >= 0:
            raise ConfigError(f"noise_sigma must be >= 0, got {self.noise_sigma}")
        if self.adaptation_gain is not None and not self.adaptation_gain > 0:
            raise ConfigError(f"adaptation_gain must be positive, got {self.adaptation_gain}")
        if not self.xi >= 0:
            raise ConfigError(f"xi must be >= 0, got {self.xi}")
        if self.prms_levels < 2:
            raise ConfigError(f"prms_levels must be >= 2, got {self.prms_levels}")
        if not self.prms_low < self.prms_high:
            raise ConfigError(f"prms_low must be below prms_high, got [{self.prms_low}, {self.prms_high}]")
        if not self.prms_hold_min >= self.dt:
            raise ConfigError(f"prms_hold_min {self.prms_hold_min} is shorter than dt {self.dt}")
        if not self.prms_hold_max >= self.prms_hold_min:
            raise ConfigError(f"prms_hold_max {self.prms_hold_max} is below prms_hold_min {self.prms_hold_min}")
        if not self.online_sample_period >= self.dt:
            raise ConfigError(f"online_sample_period {self.online_sample_period} is shorter than dt {self.dt}")
        if self.online_init_samples < 0:
            raise ConfigError(f"online_init_samples must be >= 0, got {self.online_init_samples}")
        if self.weight_log_points < 1:
            raise ConfigError(f"weight_log_points must be >= 1, got {self.weight_log_points}")

    @classmethod
    def for_plant(cls, plant: str, **overrides: Any) -> "ExperimentConfig":
        """Fully resolved defaults for a plant, with keyword overrides."""
        return cls(plant=plant, **overrides).resolve()

    def resolve(self) -> "ExperimentConfig":
        """Fill plant defaults and check that every dimension agrees with the plant."""
        defaults = PLANT_DEFAULTS[self.plant]
        resolved = dataclasses.replace(
            self,
            **{name: defaults[name] for name in RESOLVED_FIELDS if getattr(self, name) is None},
        )
        if resolved.duration < resolved.dt:
            raise ConfigError(f"duration {resolved.duration} is shorter than one step of {resolved.dt}")
        n = len(resolved.A)
        if any(len(row) != n for row in resolved.A):
            raise ConfigError(f"A must be square, got {resolved.A}")
        state_dim = n if self.plant == "synthetic_elm" else get_plant(self.plant).state_dim
        if n != state_dim:
            raise ConfigError(f"A is {n}x{n} but plant {self.plant} has {state_dim} states")
        for name in ("initial_state", "state_lower", "state_upper"):
            value = getattr(resolved, name)
            if value is not None and len(value) != state_dim:
                raise ConfigError(f"{name} must have {state_dim} entries, got {len(value)}")
        if (resolved.state_lower is None) != (resolved.state_upper is None):
            raise ConfigError("state_lower and state_upper must be given together")
        if (resolved.input_lower is None) != (resolved.input_upper is None):
            raise ConfigError("input_lower and input_upper must be given together")
        try:
            DesignMatrix(resolved.A)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        return resolved

    def to_dict(self) -> Dict[str, Any]:
        data = dataclasses.asdict(self)
        data["lambda"] = data.pop("lam")
        return data


def config_hash(c: ExperimentConfig) -> str:
    """SHA-256 of the canonical JSON form of the config."""
    canonical = json.dumps(c.to_dict(), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def config_from_dict(data: Dict[str, Any]) -> ExperimentConfig:
    """Build a config from a flat key-value mapping such as a parsed config file."""
    if not isinstance(data, dict):
        raise ConfigError("A config document must be a flat key-value object")
    known = {f.name for f in dataclasses.fields(ExperimentConfig)}
    kwargs: Dict[str, Any] = {}
    for key, value in data.items():
        name = CONFIG_FILE_KEYS.get(key, key)
        if name not in known or name == "lam" and key != "lambda":
            raise ConfigError(f"Unknown config key {key!r}")
        kwargs[name] = value
    try:
        return ExperimentConfig(**kwargs)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"Invalid config: {exc}") from exc


def load_config(path: Union[str, pathlib.Path]) -> ExperimentConfig:
    """
    Read a flat JSON config document.

    Args:
        path (Union[str, pathlib.Path]): The config file.

    Returns:
        ExperimentConfig: The parsed, unresolved config.
    """
    path = pathlib.Path(path)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise ConfigError(f"Could not read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"Config {path} is not valid JSON: {exc}") from exc
    return config_from_dict(data)


def apply_overrides(c: ExperimentConfig, **overrides: Any) -> ExperimentConfig:
    """Replace the fields whose override is not None."""
    changes = {key: value for key, value in overrides.items() if value is not None}
    if not changes:
        return c
    try:
        return dataclasses.replace(c, **changes)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"Invalid override: {exc}") from exc


@dataclass(frozen=True)
class ExperimentResult:
    """
    Logged time series and scores of one run.

    Attributes:
        config (ExperimentConfig): The resolved config.
        time (np.ndarray): Sample times, length N + 1.
        true_states (np.ndarray): Clean plant states in physical units, (N + 1) x n.
        estimates (Dict[str, np.ndarray]): Per-method state estimates in physical units.
        weight_times (np.ndarray): Times at which output weights were logged.
        weights (Dict[str, np.ndarray]): Per-method flattened output weights at weight_times.
        rmse (Dict[str, float]): Per-method normalized RMSE (inf when the method diverged).
        diverged (Dict[str, bool]): Per-method divergence flag.
        bounds (NormalizationBounds): State bounds used for normalization.
        metadata (Dict[str, Any]): Seeds and config hash.
    """

    config: ExperimentConfig
    time: np.ndarray
    true_states: np.ndarray
    estimates: Dict[str, np.ndarray]
    weight_times: np.ndarray
    weights: Dict[str, np.ndarray]
    rmse: Dict[str, float]
    diverged: Dict[str, bool]
    bounds: NormalizationBounds
    metadata: Dict[str, Any] = field(default_factory=dict)

    @property
    def methods(self) -> Tuple[str, ...]:
        """Methods that produced an estimate, in run order."""
        return tuple(self.estimates)

    @property
    def any_diverged(self) -> bool:
        """True when any method diverged."""
        return any(self.diverged.values())

    @property
    def noisy(self) -> bool:
        """True for runs with measurement noise."""
        return self.config.noise_sigma > 0

    def errors(self, method: str) -> np.ndarray:
        """True minus estimated states for one method."""
        return self.true_states - self.estimates[method]


def normalized_rmse(truth, estimate, bounds: NormalizationBounds) -> float:
    """
    RMSE per state dimension in [-1, 1]-normalized coordinates, averaged over dimensions.

    Args:
        truth (array_like): N x d reference series in physical units.
        estimate (array_like): N x d estimated series in physical units.
        bounds (NormalizationBounds): Normalization bounds of the d dimensions.

    Returns:
        float: The normalized RMSE, >= 0.
    """
    truth = np.asarray(truth, dtype=np.float64)
    estimate = np.asarray(estimate, dtype=np.float64)
    if truth.ndim == 1:
        truth = truth.reshape(-1, 1) if bounds.dim == 1 else truth.reshape(1, -1)
    if estimate.ndim == 1:
        estimate = estimate.reshape(-1, 1) if bounds.dim == 1 else estimate.reshape(1, -1)
    if truth.shape != estimate.shape:
        raise ValueError(f"Series shapes differ: {truth.shape} vs {estimate.shape}")
    if truth.shape[0] < 1:
        raise ValueError("Series must contain at least one sample")
    error = normalize(truth, bounds) - normalize(estimate, bounds)
    per_dimension = np.sqrt(np.mean(error**2, axis=0))
    return float(np.mean(per_dimension))


def sample_stride(c: ExperimentConfig) -> int:
    """Integration steps per online-ELM sample: online_sample_period rounded to whole steps."""
    return max(1, int(round(c.online_sample_period / c.dt)))


def weight_log_indices(n_steps: int, points: int) -> np.ndarray:
    """At most `points` sample indices spread evenly over 0..n_steps, both ends included."""
    count = min(points, n_steps + 1)
    return np.unique(np.round(np.linspace(0, n_steps, count)).astype(int))


def _build_plant(c: ExperimentConfig, projection: RandomProjection) -> PlantDefinition:
    if c.plant == "synthetic_elm":
        n = len(c.A)
        rng = np.random.Generator(np.random.PCG64(derive_seed(c.seed, STREAM_SYNTHETIC)))
        W_star = OutputWeights(c.synthetic_weight_scale * rng.uniform(-1.0, 1.0, size=(c.hidden_dim, n)))
        plant = synthetic_elm_plant(projection, W_star, np.array(c.A), xi=c.xi)
    else:
        plant = get_plant(c.plant)

    changes: Dict[str, Any] = {}
    try:
        if c.state_lower is not None:
            changes["state_bounds"] = NormalizationBounds(c.state_lower, c.state_upper)
        if c.input_lower is not None:
            if plant.input_dim == 0:
                raise ConfigError(f"Plant {plant.name} has no input to bound")
            changes["input_bounds"] = NormalizationBounds(c.input_lower, c.input_upper)
        if c.initial_state is not None:
            changes["initial_state"] = np.array(c.initial_state)
        return dataclasses.replace(plant, **changes) if changes else plant
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _plant_input_dim(c: ExperimentConfig) -> int:
    return SYNTHETIC_INPUT_DIM if c.plant == "synthetic_elm" else get_plant(c.plant).input_dim


def _excitation(c: ExperimentConfig, input_dim: int, n_samples: int) -> np.ndarray:
    """Normalized PRMS inputs, n_samples x input_dim; one independent sequence per input."""
    columns = []
    for j in range(input_dim):
        prms = PrmsConfig(
            levels=c.prms_levels,
            low=c.prms_low,
            high=c.prms_high,
            hold_min=c.prms_hold_min,
            hold_max=c.prms_hold_max,
            seed=derive_seed(derive_seed(c.seed, STREAM_PRMS), j),
            duration=n_samples * c.dt,
            dt=c.dt,
        )
        signal = prms_generate(prms)
        if signal.shape[0] < n_samples:
            signal = np.concatenate((signal, np.full(n_samples - signal.shape[0], signal[-1])))
        columns.append(signal[:n_samples])
    if not columns:
        return np.empty((n_samples, 0))
    return np.column_stack(columns)


def _run_lyapunov(
    c: ExperimentConfig,
    A: DesignMatrix,
    projection: RandomProjection,
    W0: OutputWeights,
    u_norm: np.ndarray,
    z_meas: np.ndarray,
    log_rows: Dict[int, int],
) -> Tuple[np.ndarray, np.ndarray, bool]:
    n_steps = z_meas.shape[0] - 1
    estimates = np.full_like(z_meas, np.nan)
    weights = np.full((len(log_rows), W0.values.size), np.nan)
    dead_zone = stability_threshold(A, c.xi).gamma if c.dead_zone else None

    estimator = LyapunovElm(A, projection, W0, z_meas[0], c.adaptation_gain, dead_zone)
    estimates[0] = estimator.state.z_hat
    if 0 in log_rows:
        weights[log_rows[0]] = estimator.state.W_hat.ravel()
    for k in range(n_steps):
        x = np.concatenate((u_norm[k], z_meas[k]))
        try:
            state = estimator.step(z_meas[k], x, c.dt)
        except DivergenceError as exc:
            logger.warning("Lyapunov ELM diverged: %s", exc)
            return estimates, weights, True
        estimates[k + 1] = state.z_hat
        row = log_rows.get(k + 1)
        if row is not None:
            weights[row] = state.W_hat.ravel()
    return estimates, weights, False


def _run_online(
    c: ExperimentConfig,
    projection: RandomProjection,
    W0: OutputWeights,
    u_norm: np.ndarray,
    z_meas: np.ndarray,
    log_rows: Dict[int, int],
    stride: int,
) -> Tuple[np.ndarray, np.ndarray, bool]:
    n_steps = z_meas.shape[0] - 1
    estimates = np.full_like(z_meas, np.nan)
    weights = np.full((len(log_rows), W0.values.size), np.nan)

    learner = OnlineElm(
        projection,
        OnlineState.from_prior(W0, c.lam),
        n_u=1,
        n_y=1,
        u_dim=u_norm.shape[1],
        y_dim=z_meas.shape[1],
        lam=c.lam,
        init_samples=c.online_init_samples,
    )
    # no prediction exists before the first lagged pair; start from the measurement
    current = z_meas[0]
    for k in range(n_steps + 1):
        if k % stride == 0:
            try:
                prediction = learner.observe(u_norm[k], z_meas[k])
            except NumericError as exc:
                logger.warning("Online ELM failed numerically: %s", exc)
                return estimates, weights, True
            if prediction is not None:
                current = prediction
        # held between samples
        estimates[k] = current
        row = log_rows.get(k)
        if row is not None:
            weights[row] = learner.state.W.values.ravel()
    return estimates, weights, False


def run_experiment(c: ExperimentConfig) -> ExperimentResult:
    """
    Simulate a plant and identify it with every configured method.

    Both methods share the random projection, the initial output layer W0 = 0 and the
    noisy, normalized measurement stream. The Lyapunov ELM integrates its estimator
    continuously; the online ELM samples the measurements every online_sample_period,
    predicts each sample one step ahead from the previous one before learning from it, and
    holds its prediction between samples. Every method is scored at the online sample instants.

    Args:
        c (ExperimentConfig): The run description.

    Returns:
        ExperimentResult: The logged series and normalized RMSE per method.
    """
    c = c.resolve()
    n_steps, time = time_grid(c.duration, c.dt)
    input_dim = _plant_input_dim(c)
    state_dim = len(c.A)

    projection_seed = derive_seed(c.seed, STREAM_PROJECTION)
    projection = init_random_projection(input_dim + state_dim, c.hidden_dim, projection_seed)
    plant = _build_plant(c, projection)
    A = DesignMatrix(c.A)

    logger.info(
        "Running %s: %d steps of %g, hidden_dim=%d, noise_sigma=%g, methods=%s",
        plant.name,
        n_steps,
        c.dt,
        c.hidden_dim,
        c.noise_sigma,
        list(c.methods),
    )

    u_norm = _excitation(c, plant.input_dim, n_steps + 1)
    u_phys = denormalize(u_norm, plant.input_bounds) if plant.input_dim > 0 else u_norm
    true_states = simulate(plant, plant.initial_state, u_phys[:n_steps], c.dt)

    noise_seed = derive_seed(c.seed, STREAM_NOISE)
    z_true = normalize(true_states, plant.state_bounds)
    z_meas = add_noise(z_true, NoiseConfig(c.noise_sigma, noise_seed))

    W0 = OutputWeights.zeros(c.hidden_dim, state_dim)
    log_indices = weight_log_indices(n_steps, c.weight_log_points)
    log_rows = {int(k): i for i, k in enumerate(log_indices)}
    stride = sample_stride(c)
    scored = np.arange(0, n_steps + 1, stride)

    estimates: Dict[str, np.ndarray] = {}
    weights: Dict[str, np.ndarray] = {}
    rmse: Dict[str, float] = {}
    diverged: Dict[str, bool] = {}
    if not c.methods:
        logger.warning("No estimation method configured; only true states are logged")
    for method in c.methods:
        if method == LYAPUNOV_ELM:
            estimate, weight_log, failed = _run_lyapunov(c, A, projection, W0, u_norm, z_meas, log_rows)
        else:
            estimate, weight_log, failed = _run_online(c, projection, W0, u_norm, z_meas, log_rows, stride)
        estimates[method] = denormalize(estimate, plant.state_bounds)
        weights[method] = weight_log
        diverged[method] = failed
        if failed:
            rmse[method] = math.inf
        else:
            rmse[method] = normalized_rmse(true_states[scored], estimates[method][scored], plant.state_bounds)
        logger.info("%s on %s: normalized RMSE %.4f", method, plant.name, rmse[method])

    metadata = {
        "seed": int(c.seed),
        "projection_seed": projection_seed,
        "prms_seed": derive_seed(c.seed, STREAM_PRMS),
        "noise_seed": noise_seed,
        "config_hash": config_hash(c),
        "n_steps": n_steps,
        "sample_stride": stride,
    }
    return ExperimentResult(
        config=c,
        time=time,
        true_states=true_states,
        estimates=estimates,
        weight_times=time[log_indices],
        weights=weights,
        rmse=rmse,
        diverged=diverged,
        bounds=plant.state_bounds,
        metadata=metadata,
    )


def run_many(configs: Sequence[ExperimentConfig], workers: int = 1) -> List[ExperimentResult]:
    """Run independent experiments, in worker processes when workers > 1. Order is preserved."""
    if workers <= 1 or len(configs) <= 1:
        return [run_experiment(c) for c in configs]
    with ProcessPoolExecutor(max_workers=workers) as executor:
        return list(executor.map(run_experiment, configs))


def csv_header(r: ExperimentResult) -> List[str]:
    n = r.true_states.shape[1]
    header = ["t"] + [f"z{i + 1}" for i in range(n)]
    for method in r.methods:
        header += [f"zhat_{method}_{i + 1}" for i in range(n)]
    for method in r.methods:
        header += [f"e_{method}_{i + 1}" for i in range(n)]
    return header


def _write_table(path: Union[str, pathlib.Path], header: Sequence[str], data: np.ndarray) -> None:
    path = pathlib.Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", encoding="utf-8", newline="") as file:
            np.savetxt(file, data, delimiter=",", fmt="%.17g", header=",".join(header), comments="")
    except OSError as exc:
        raise OutputError(f"Could not write {path}: {exc}") from exc


def export_csv(r: ExperimentResult, path: Union[str, pathlib.Path]) -> None:
    """
    Write the time series of a run as UTF-8 CSV.

    Columns: t, z1..zn, zhat_<method>_1..n for every method, then e_<method>_1..n
    (true minus estimate) for every method. Values use 17 significant digits.
    """
    columns = [r.time.reshape(-1, 1), r.true_states]
    columns += [r.estimates[m] for m in r.methods]
    columns += [r.errors(m) for m in r.methods]
    _write_table(path, csv_header(r), np.hstack(columns))


def export_weights_csv(r: ExperimentResult, path: Union[str, pathlib.Path]) -> None:
    """Write the subsampled output-weight trajectories: t, w_<method>_<row>_<col>..."""
    n = r.true_states.shape[1]
    header = ["t"]
    columns = [r.weight_times.reshape(-1, 1)]
    for method in r.methods:
        hidden_dim = r.weights[method].shape[1] // n
        header += [f"w_{method}_{i + 1}_{j + 1}" for i in range(hidden_dim) for j in range(n)]
        columns.append(r.weights[method])
    _write_table(path, header, np.hstack(columns))


def load_csv(path: Union[str, pathlib.Path]) -> Tuple[List[str], np.ndarray]:
    """Read a file written by export_csv: the header names and the data matrix."""
    path = pathlib.Path(path)
    try:
        with open(path, encoding="utf-8") as file:
            header = file.readline().strip().split(",")
            data = np.loadtxt(file, delimiter=",", ndmin=2)
    except OSError as exc:
        raise OutputError(f"Could not read {path}: {exc}") from exc
    return header, data


def format_table(headers: Sequence[str], rows: Sequence[Sequence[Any]]) -> str:
    """Align a list of rows under headers, columns separated by ' | '."""
    widths = [max(len(str(item)) for item in column) for column in zip(*([headers] + list(rows)))]
    lines = [" | ".join(f"{str(h):<{w}}" for h, w in zip(headers, widths)), "-+-".join("-" * w for w in widths)]
    for row in rows:
        lines.append(" | ".join(f"{str(item):<{w}}" for item, w in zip(row, widths)))
    return "\n".join(lines)


def _cell(values: List[float]) -> str:
    if not values:
        return "-"
    if len(values) == 1:
        return f"{values[0]:.4f}"
    return f"{np.mean(values):.4f} ± {np.std(values):.4f}"


def summary_table(results: Sequence[ExperimentResult], title: Optional[str] = None) -> str:
    """
    Lay out normalized RMSE as case x method, clean and noisy cases as rows.

    Several results in the same cell (different seeds) are shown as mean ± std.
    """
    methods: List[str] = []
    for r in results:
        methods += [m for m in r.methods if m not in methods]

    cases = [
        case for case, noisy in ((CLEAN_CASE, False), (NOISY_CASE, True)) if any(r.noisy == noisy for r in results)
    ]
    lines = [title] if title else []
    if not methods:
        rows = [[case, f"{sum(r.noisy == (case == NOISY_CASE) for r in results)} run(s)"] for case in cases]
        lines.append(format_table(["", "truth only"], rows or [["-", "0 run(s)"]]))
        lines.append("warning: no estimation method was run; only true states were logged")
        return "\n".join(lines)

    rows = []
    for case in cases:
        noisy = case == NOISY_CASE
        rows.append([case] + [_cell([r.rmse[m] for r in results if r.noisy == noisy and m in r.rmse]) for m in methods])
    lines.append(format_table([""] + methods, rows))
    return "\n".join(lines)


def paper_table_rows(results: Iterable[ExperimentResult]) -> List[Dict[str, Any]]:
    """
    Aggregate results into one row per (plant, case, method).

    Each row carries the mean and standard deviation of the normalized RMSE over seeds and,
    for the Lyapunov ELM, the number of seeds in which it beat the online ELM.
    """
    groups: Dict[Tuple[str, str], List[ExperimentResult]] = {}
    for r in results:
        key = (r.config.plant, NOISY_CASE if r.noisy else CLEAN_CASE)
        groups.setdefault(key, []).append(r)

    rows = []
    for (plant, case), group in groups.items():
        for method in METHODS:
            values = [r.rmse[method] for r in group if method in r.rmse]
            if not values:
                continue
            row = {
                "plant": plant,
                "case": case,
                "method": method,
                "mean": float(np.mean(values)),
                "std": float(np.std(values)),
                "runs": len(values),
                "wins": "",
            }
            if method == LYAPUNOV_ELM:
                row["wins"] = sum(
                    1 for r in group if ONLINE_ELM in r.rmse and r.rmse[LYAPUNOV_ELM] < r.rmse[ONLINE_ELM]
                )
            rows.append(row)
    return rows


def run_file_name(r: ExperimentResult) -> str:
    case = "noisy" if r.noisy else "clean"
    return f"{r.config.plant}_{case}_seed{r.config.seed}.csv"


def reproduce_paper_tables(
    out_dir: Union[str, pathlib.Path],
    seeds: Sequence[int] = PAPER_SEEDS,
    workers: int = 1,
    noise_sigma: float = DEFAULT_NOISE_SIGMA,
    **overrides: Any,
) -> Tuple[List[ExperimentResult], str]:
    """
    Run the DC motor and Lorentz benchmarks, clean and noisy, over a set of seeds.

    Writes one CSV per run and paper_tables.csv (mean, std and Lyapunov wins per cell) into out_dir.
    Keyword overrides (for example a shorter duration) apply to every run.

    Returns:
        Tuple[List[ExperimentResult], str]: The results and the printable summary tables.
    """
    out_dir = pathlib.Path(out_dir)
    configs = [
        ExperimentConfig(plant=plant, seed=seed, noise_sigma=sigma, **overrides)
        for plant in ("dc_motor", "lorentz")
        for sigma in (0.0, noise_sigma)
        for seed in seeds
    ]
    results = run_many(configs, workers)
    for r in results:
        export_csv(r, out_dir / run_file_name(r))

    rows = paper_table_rows(results)
    header = ["plant", "case", "method", "mean", "std", "runs", "wins"]
    path = out_dir / "paper_tables.csv"
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        with open(path, "w", encoding="utf-8", newline="") as file:
            writer = csv.writer(file, lineterminator="\n")
            writer.writerow(header)
            for row in rows:
                writer.writerow([f"{row[key]:.17g}" if key in ("mean", "std") else row[key] for key in header])
    except OSError as exc:
        raise OutputError(f"Could not write {path}: {exc}") from exc

    tables = []
    for plant, title in (("dc_motor", "DC motor"), ("lorentz", "Lorentz oscillator")):
        group = [r for r in results if r.config.plant == plant]
        if group:
            tables.append(summary_table(group, title=f"{title} ({len(seeds)} seeds)"))
    return results, "\n\n".join(tables)
