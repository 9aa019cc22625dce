import math

import numpy as np
import pytest

from elmid.elm_model import OutputWeights, hidden_output, init_random_projection
from elmid.lyapunov_estimator import (
    DesignMatrix,
    EstimatorState,
    LyapunovElm,
    derivatives,
    euler_step,
    lyapunov_value,
    new_estimator,
    stability_threshold,
    step,
)
from elmid.plants import synthetic_elm_plant
from elmid.signals import PrmsConfig, prms_generate
from elmid.utilities import DivergenceError, runge_kutta_4


def test_default_design_matrix_is_accepted():
    A = DesignMatrix.diagonal(-50.0, -50.0)
    assert A.dim == 2
    assert A.symmetric_part_max_eigenvalue == -50.0


def test_unstable_design_matrix_reports_eigenvalue():
    with pytest.raises(ValueError, match=r"eigenvalue 1\+0j"):
        DesignMatrix(np.diag([1.0, -50.0]))


def test_imaginary_spectrum_is_rejected():
    with pytest.raises(ValueError, match="not Hurwitz"):
        DesignMatrix([[0.0, 1.0], [-1.0, 0.0]])


def test_non_square_design_matrix():
    with pytest.raises(ValueError):
        DesignMatrix(np.ones((2, 3)))


def test_design_matrix_is_read_only():
    A = DesignMatrix.diagonal(-1.0)
    with pytest.raises(ValueError):
        A.matrix[0, 0] = 1.0


def test_new_estimator_starts_at_zero_time(projection):
    s = new_estimator(DesignMatrix.diagonal(-1.0, -2.0), projection, OutputWeights.zeros(8, 2), [0.1, 0.2])

    assert s.t == 0.0
    np.testing.assert_array_equal(s.z_hat, [0.1, 0.2])
    np.testing.assert_array_equal(s.W_hat, np.zeros((8, 2)))


def test_new_estimator_rejects_mismatched_weights(projection):
    with pytest.raises(ValueError):
        new_estimator(DesignMatrix.diagonal(-1.0, -2.0), projection, OutputWeights.zeros(8, 3), [0.0, 0.0])


def test_zero_error_stops_adaptation(rng):
    s = EstimatorState(z_hat=[0.3, -0.2], W_hat=rng.normal(size=(8, 2)))

    _, dW = derivatives(s, [0.3, -0.2], rng.uniform(size=8), np.diag([-50.0, -50.0]))

    np.testing.assert_array_equal(dW, np.zeros((8, 2)))


def test_derivatives_from_zero_state(rng):
    s = EstimatorState(z_hat=np.zeros(2), W_hat=np.zeros((8, 2)))
    phi = rng.uniform(size=8)
    z_meas = np.array([0.4, -0.7])

    dz, dW = derivatives(s, z_meas, phi, np.diag([-50.0, -50.0]))

    np.testing.assert_array_equal(dz, np.zeros(2))
    np.testing.assert_array_equal(dW, np.outer(phi, z_meas))


def test_outer_product_with_half_activations(zero_projection):
    s = EstimatorState(z_hat=np.zeros(2), W_hat=np.zeros((4, 2)))
    phi = hidden_output(zero_projection, [0.0, 0.0])

    _, dW = derivatives(s, [1.0, 2.0], phi, np.diag([-1.0, -1.0]))

    for row in dW:
        np.testing.assert_array_equal(row, [0.5, 1.0])


def test_weight_derivative_has_rank_one(rng):
    s = EstimatorState(z_hat=rng.normal(size=3), W_hat=rng.normal(size=(12, 3)))

    _, dW = derivatives(s, rng.normal(size=3), rng.uniform(size=12), np.diag([-60.0, -60.0, -120.0]), gain=5.0)

    assert np.linalg.matrix_rank(dW) <= 1


def test_gain_scales_adaptation(rng):
    s = EstimatorState(z_hat=np.zeros(2), W_hat=np.zeros((8, 2)))
    phi = rng.uniform(size=8)

    _, unit = derivatives(s, [1.0, 1.0], phi, np.diag([-1.0, -1.0]))
    _, scaled = derivatives(s, [1.0, 1.0], phi, np.diag([-1.0, -1.0]), gain=3.0)

    np.testing.assert_allclose(scaled, 3.0 * unit, rtol=1e-15)


def test_dead_zone_freezes_small_errors(rng):
    s = EstimatorState(z_hat=np.zeros(2), W_hat=np.zeros((8, 2)))
    phi = rng.uniform(size=8)

    _, inside = derivatives(s, [0.003, 0.004], phi, np.diag([-1.0, -1.0]), dead_zone=0.005)
    _, outside = derivatives(s, [0.03, 0.04], phi, np.diag([-1.0, -1.0]), dead_zone=0.005)

    np.testing.assert_array_equal(inside, np.zeros((8, 2)))
    assert np.any(outside != 0)


def test_derivatives_dimension_mismatch(rng):
    s = EstimatorState(z_hat=np.zeros(2), W_hat=np.zeros((8, 2)))
    with pytest.raises(ValueError):
        derivatives(s, [1.0, 2.0, 3.0], rng.uniform(size=8), np.diag([-1.0, -1.0]))
    with pytest.raises(ValueError):
        derivatives(s, [1.0, 2.0], rng.uniform(size=7), np.diag([-1.0, -1.0]))


def test_equilibrium_is_a_fixed_point(projection, rng):
    A = DesignMatrix.diagonal(-50.0, -20.0)
    x = [0.1, -0.3, 0.5]
    W_hat = rng.normal(size=(8, 2))
    z_eq = -np.linalg.solve(A.matrix, W_hat.T @ hidden_output(projection, x))
    s = EstimatorState(z_eq, W_hat)

    s_next = step(s, z_eq, x, 1e-4, A, projection)

    np.testing.assert_allclose(s_next.z_hat, z_eq, rtol=0, atol=1e-12)
    np.testing.assert_allclose(s_next.W_hat, W_hat, rtol=0, atol=1e-12)
    assert s_next.t == pytest.approx(1e-4)


def _integrate(stepper, s, z_meas, x, A, proj, dt, t_end):
    for _ in range(int(round(t_end / dt))):
        s = stepper(s, z_meas, x, dt, A, proj)
    return s


def _error(s, reference):
    return np.linalg.norm(s.z_hat - reference.z_hat) + np.linalg.norm(s.W_hat - reference.W_hat)


def test_step_is_fourth_order(projection):
    A = DesignMatrix.diagonal(-2.0, -2.0)
    s0 = EstimatorState(np.zeros(2), np.zeros((8, 2)))
    z_meas = [0.8, -0.6]
    x = [0.2, 0.1, -0.4]

    reference = _integrate(step, s0, z_meas, x, A, projection, 1e-3, 1.0)
    coarse = _error(_integrate(step, s0, z_meas, x, A, projection, 0.1, 1.0), reference)
    fine = _error(_integrate(step, s0, z_meas, x, A, projection, 0.05, 1.0), reference)

    assert 12.0 < coarse / fine < 21.0


def test_rk4_tracks_reference_tighter_than_euler(projection):
    A = DesignMatrix.diagonal(-50.0, -50.0)
    s0 = EstimatorState(np.zeros(2), np.zeros((8, 2)))
    z_meas = [0.5, -0.5]
    x = [0.3, 0.0, 0.0]

    reference = _integrate(step, s0, z_meas, x, A, projection, 1e-5, 0.1)
    rk4 = _error(_integrate(step, s0, z_meas, x, A, projection, 1e-3, 0.1), reference)
    euler = _error(_integrate(euler_step, s0, z_meas, x, A, projection, 1e-3, 0.1), reference)

    assert np.isfinite(euler)
    assert rk4 < 0.01 * euler


def test_small_step_matches_derivatives(projection, rng):
    A = DesignMatrix.diagonal(-50.0, -50.0)
    s = EstimatorState(rng.normal(size=2) * 0.1, rng.normal(size=(8, 2)) * 0.1)
    z_meas = [0.2, 0.1]
    x = [0.0, 0.2, 0.1]
    dt = 1e-6

    s_next = step(s, z_meas, x, dt, A, projection)
    dz, dW = derivatives(s, z_meas, hidden_output(projection, x), A)

    np.testing.assert_allclose((s_next.z_hat - s.z_hat) / dt, dz, rtol=1e-3, atol=1e-7)
    np.testing.assert_allclose((s_next.W_hat - s.W_hat) / dt, dW, rtol=1e-3, atol=1e-7)


@pytest.mark.parametrize("dt", [0.0, -1e-4, float("nan")])
def test_step_rejects_bad_dt(projection, dt):
    s = EstimatorState(np.zeros(2), np.zeros((8, 2)))
    with pytest.raises(ValueError):
        step(s, [0.0, 0.0], [0.0, 0.0, 0.0], dt, np.diag([-1.0, -1.0]), projection)


def test_blow_up_raises_divergence(projection):
    s = EstimatorState(np.zeros(2), np.zeros((8, 2)))
    with np.errstate(over="ignore", invalid="ignore"):
        with pytest.raises(DivergenceError) as info:
            step(s, [1e300, 1e300], [0.0, 0.0, 0.0], 1.0, np.diag([-1.0, -1.0]), projection, gain=1e300)
    assert info.value.t == 1.0


def test_stability_threshold_examples():
    assert stability_threshold(np.diag([-50.0, -50.0]), 0.0).gamma == 0.0
    assert stability_threshold(np.diag([-50.0, -50.0]), 1.0).gamma == pytest.approx(0.02)
    assert stability_threshold(np.diag([-60.0, -60.0, -120.0]), 6.0).gamma == pytest.approx(0.1)


def test_stability_threshold_uses_symmetric_part():
    A = np.array([[-2.0, 1.0], [0.0, -3.0]])
    mu = np.max(np.linalg.eigvalsh(0.5 * (A + A.T)))

    bound = stability_threshold(A, 0.5)

    assert bound.gamma == pytest.approx(0.5 / abs(mu))


def test_stability_threshold_without_finite_radius():
    # Hurwitz but with an indefinite symmetric part
    A = np.array([[-1.0, 10.0], [0.0, -1.0]])
    assert math.isinf(stability_threshold(A, 1.0).gamma)


def test_stability_threshold_rejects_negative_xi():
    with pytest.raises(ValueError):
        stability_threshold(np.diag([-1.0]), -0.1)


@pytest.mark.parametrize(
    "e, W_tilde, expected",
    [
        (np.zeros(2), np.zeros((2, 2)), 0.0),
        ([3.0, 4.0], np.zeros((2, 2)), 12.5),
        (np.zeros(2), np.ones((2, 2)), 2.0),
    ],
)
def test_lyapunov_value_examples(e, W_tilde, expected):
    assert lyapunov_value(e, W_tilde) == expected


def test_lyapunov_value_with_gain():
    assert lyapunov_value(np.zeros(2), np.ones((2, 2)), gain=4.0) == 0.5


def test_lyapunov_elm_keeps_state(projection):
    model = LyapunovElm(np.diag([-50.0, -50.0]), projection, OutputWeights.zeros(8, 2), [0.0, 0.0], gain=2.0)

    model.step([0.1, 0.1], [0.1, 0.1, 0.1], 1e-3)
    state = model.step([0.1, 0.1], [0.1, 0.1, 0.1], 1e-3)

    assert state is model.state
    assert state.t == pytest.approx(2e-3)
    assert model.gain == 2.0
    assert np.any(state.W_hat != 0)


def test_lyapunov_elm_rejects_non_positive_gain(projection):
    with pytest.raises(ValueError):
        LyapunovElm(np.diag([-1.0, -1.0]), projection, OutputWeights.zeros(8, 2), [0.0, 0.0], gain=0.0)


def _synthetic_truth_run(seed, xi=0.0, gain=200.0, dt=2e-3, duration=4.0, hold_from=None):
    """Integrate a plant that is itself an ELM model jointly with the estimator."""
    A = DesignMatrix.diagonal(-50.0, -50.0)
    proj = init_random_projection(3, 8, seed)
    W_star = 0.25 * np.random.default_rng(seed + 1000).uniform(-1.0, 1.0, size=(8, 2))
    plant = synthetic_elm_plant(proj, OutputWeights(W_star), A.matrix, xi=xi)
    u = prms_generate(PrmsConfig(seed=seed, duration=duration, dt=dt))
    if hold_from is not None:
        k_hold = int(round(hold_from / dt))
        u[k_hold:] = u[k_hold - 1]

    def rhs(t, y, u_k):
        z, z_hat, W_hat = y[:2], y[2:4], y[4:].reshape(8, 2)
        phi = hidden_output(proj, np.concatenate(([u_k], z)))
        dz_hat, dW = derivatives(EstimatorState(z_hat, W_hat, t), z, phi, A, gain)
        return np.concatenate((plant.derivative(z, [u_k], t), dz_hat, dW.ravel()))

    y = np.zeros(4 + 16)
    errors = []
    values = []
    for k in range(u.shape[0]):
        e = y[:2] - y[2:4]
        errors.append(np.linalg.norm(e))
        values.append(lyapunov_value(e, W_star - y[4:].reshape(8, 2), gain))
        y = runge_kutta_4(lambda tau, v: rhs(tau, v, u[k]), k * dt, y, dt)
    e = y[:2] - y[2:4]
    errors.append(np.linalg.norm(e))
    values.append(lyapunov_value(e, W_star - y[4:].reshape(8, 2), gain))
    return np.array(errors), np.array(values), stability_threshold(A, xi).gamma


@pytest.mark.parametrize("seed", range(10))
def test_lyapunov_function_never_increases(seed):
    errors, values, _ = _synthetic_truth_run(seed, hold_from=3.0)

    increments = np.diff(values)
    assert np.all(increments <= 1e-6 * values[:-1])
    assert values[-1] < values[0]
    assert errors[-1] < 1e-3


def test_error_settles_inside_stability_radius():
    errors, _, gamma = _synthetic_truth_run(seed=0, xi=0.5)

    assert gamma == pytest.approx(0.01)
    steady = errors[errors.shape[0] // 2 :]
    assert np.mean(steady > gamma) < 0.05
