import numpy as np
import pytest

from elmid.batch_trainer import DesignMatrices, ridge_solve
from elmid.elm_model import OutputWeights, hidden_output_batch, init_random_projection
from elmid.os_elm import (
    NarxWindow,
    OnlineElm,
    OnlineState,
    init_online,
    narx_pairs,
    narx_push,
    online_update,
)
from elmid.utilities import NumericDriftError


def test_single_sample_initialization():
    s = init_online(np.array([[1.0]]), np.array([[2.0]]), lam=1.0)

    assert s.W.values[0, 0] == pytest.approx(1.0)
    assert s.P[0, 0] == pytest.approx(0.5)


def test_update_of_one_by_one_example():
    s = init_online(np.array([[1.0]]), np.array([[2.0]]), lam=1.0)

    s = online_update(s, np.array([[1.0]]), np.array([[2.0]]))

    assert s.P[0, 0] == pytest.approx(1.0 / 3.0, rel=1e-14)
    assert s.W.values[0, 0] == pytest.approx(4.0 / 3.0, rel=1e-14)


def test_from_prior_keeps_prior_weights():
    W0 = OutputWeights(np.full((3, 1), 0.2))

    s = OnlineState.from_prior(W0, lam=5.0)

    np.testing.assert_array_equal(s.W.values, W0.values)
    np.testing.assert_array_equal(s.P, 5.0 * np.eye(3))


@pytest.mark.parametrize("split", range(20))
def test_recursion_matches_batch_solution(split):
    rng = np.random.default_rng(1000 + split)
    n, n0, lam = 120, 10 + split, 1e4
    H = rng.uniform(0, 1, size=(n, 8))
    Y = rng.normal(size=(n, 2))
    # random chunk sizes for the rest of the stream
    cuts = np.sort(rng.choice(np.arange(n0 + 1, n), size=6, replace=False))

    s = init_online(H[:n0], Y[:n0], lam)
    for start, stop in zip(np.concatenate(([n0], cuts)), np.concatenate((cuts, [n]))):
        s = online_update(s, H[start:stop], Y[start:stop])

    batch = ridge_solve(DesignMatrices(H, Y), lam)
    np.testing.assert_allclose(s.W.values, batch.values, rtol=1e-8, atol=1e-8)


def test_row_by_row_matches_block_update(rng):
    H = rng.uniform(size=(30, 5))
    Y = rng.normal(size=(30, 1))
    start = init_online(H[:10], Y[:10], 100.0)

    block = online_update(start, H[10:], Y[10:])
    rows = start
    for k in range(10, 30):
        rows = online_update(rows, H[k : k + 1], Y[k : k + 1])

    np.testing.assert_allclose(rows.W.values, block.W.values, rtol=1e-9, atol=1e-10)
    np.testing.assert_allclose(rows.P, block.P, rtol=1e-9, atol=1e-10)


def test_update_order_does_not_change_final_weights(rng):
    H = rng.uniform(size=(30, 5))
    Y = rng.normal(size=(30, 2))
    start = init_online(H[:10], Y[:10], 100.0)

    forward = start
    shuffled = start
    for k in range(10, 30):
        forward = online_update(forward, H[k : k + 1], Y[k : k + 1])
    for k in 10 + rng.permutation(20):
        shuffled = online_update(shuffled, H[k : k + 1], Y[k : k + 1])

    difference = np.linalg.norm(shuffled.W.values - forward.W.values)
    assert difference <= 1e-8 * np.linalg.norm(forward.W.values)


def test_prior_start_matches_ridge_toward_zero_prior(rng):
    H = rng.uniform(size=(40, 6))
    Y = rng.normal(size=(40, 1))

    s = OnlineState.from_prior(OutputWeights.zeros(6, 1), lam=1e3)
    s = online_update(s, H, Y)

    np.testing.assert_allclose(s.W.values, ridge_solve(DesignMatrices(H, Y), 1e3).values, rtol=1e-8, atol=1e-9)


def test_p_stays_symmetric_positive_definite(rng):
    s = init_online(rng.uniform(size=(10, 6)), rng.normal(size=(10, 1)), 1e3)
    for _ in range(200):
        s = online_update(s, rng.uniform(size=(1, 6)), rng.normal(size=(1, 1)))
        np.testing.assert_array_equal(s.P, s.P.T)
    assert np.all(np.linalg.eigvalsh(s.P) > 0)


def test_update_rejects_wrong_width(rng):
    s = init_online(rng.uniform(size=(4, 3)), rng.normal(size=(4, 1)))
    with pytest.raises(ValueError):
        online_update(s, rng.uniform(size=(2, 4)), rng.normal(size=(2, 1)))


def test_drift_is_reported_with_state():
    P = np.array([[1.0, 0.0], [0.5, 1.0]])
    s = OnlineState(OutputWeights.zeros(2, 1), P)

    with pytest.raises(NumericDriftError) as info:
        online_update(s, np.array([[1.0, 0.0]]), np.array([[1.0]]))

    assert info.value.asymmetry > 1e-6
    np.testing.assert_array_equal(info.value.state.P, info.value.state.P.T)


def test_window_emits_newest_first_features():
    w = NarxWindow(n_u=2, n_y=2, u_dim=1, y_dim=1)

    assert narx_push(w, [1.0], [10.0]) is None
    assert narx_push(w, [2.0], [20.0]) is None
    x, target = narx_push(w, [3.0], [30.0])

    np.testing.assert_array_equal(x, [2.0, 1.0, 20.0, 10.0])
    np.testing.assert_array_equal(target, [30.0])
    assert w.is_full


def test_window_for_autonomous_system():
    w = NarxWindow(n_u=1, n_y=1, u_dim=0, y_dim=3)

    assert w.push([], [1.0, 2.0, 3.0]) is None
    x, target = w.push([], [4.0, 5.0, 6.0])

    np.testing.assert_array_equal(x, [1.0, 2.0, 3.0])
    np.testing.assert_array_equal(target, [4.0, 5.0, 6.0])
    assert w.feature_dim == 3


def test_window_rejects_wrong_sample_size():
    w = NarxWindow(1, 1, 1, 1)
    with pytest.raises(ValueError):
        w.push([1.0, 2.0], [0.0])


@pytest.mark.parametrize("n_u, n_y", [(0, 1), (1, 0)])
def test_window_rejects_zero_orders(n_u, n_y):
    with pytest.raises(ValueError):
        NarxWindow(n_u, n_y, 1, 1)


def test_narx_pairs_counts_and_alignment():
    U = np.arange(10.0)
    Y = 100.0 + np.arange(10.0)

    X, T = narx_pairs(U, Y, n_u=3, n_y=1)

    assert X.shape == (7, 4)
    np.testing.assert_array_equal(X[0], [2.0, 1.0, 0.0, 102.0])
    np.testing.assert_array_equal(T[:, 0], Y[3:])


def test_narx_pairs_too_short_series():
    X, T = narx_pairs(np.zeros(2), np.zeros(2), n_u=3, n_y=3)
    assert X.shape == (0, 6)
    assert T.shape == (0, 1)


def test_online_elm_learns_linear_map():
    proj = init_random_projection(2, 20, 3)
    model = OnlineElm(proj, OnlineState.from_prior(OutputWeights.zeros(20, 1), 1e6), n_u=1, n_y=1)
    rng = np.random.default_rng(5)

    y = 0.0
    errors = []
    magnitudes = []
    for _ in range(1500):
        u = rng.uniform(-1, 1)
        y_next = 0.5 * y + 0.3 * u
        prediction = model.observe([u], [y])
        if prediction is not None:
            errors.append(abs(prediction[0] - y))
            magnitudes.append(abs(y))
        y = y_next

    assert np.mean(errors[-200:]) < 0.05 * np.mean(magnitudes)


def test_online_elm_seed_batch_switches_to_init_online(rng):
    proj = init_random_projection(2, 5, 0)
    model = OnlineElm(proj, OnlineState.from_prior(OutputWeights.zeros(5, 1)), init_samples=8, lam=1e2)
    X = rng.uniform(-1, 1, size=(8, 2))
    T = rng.normal(size=(8, 1))

    for x, t in zip(X, T):
        model.partial_fit(x, t)

    reference = init_online(hidden_output_batch(proj, X), T, 1e2)
    np.testing.assert_allclose(model.state.W.values, reference.W.values, rtol=1e-12)


def test_online_elm_rejects_mismatched_projection():
    proj = init_random_projection(3, 5, 0)
    with pytest.raises(ValueError):
        OnlineElm(proj, OnlineState.from_prior(OutputWeights.zeros(5, 1)), n_u=1, n_y=1)


def test_identity_initialization(rng):
    Y0 = rng.normal(size=(4, 1))
    s = init_online(np.eye(4), Y0, lam=1e12)
    np.testing.assert_allclose(s.W.values, Y0, rtol=1e-6)


def test_initialization_matches_ridge(rng):
    H0 = rng.uniform(size=(30, 8))
    Y0 = rng.normal(size=(30, 1))

    s = init_online(H0, Y0, lam=1e6)

    np.testing.assert_allclose(s.W.values, ridge_solve(DesignMatrices(H0, Y0), 1e6).values, rtol=1e-10)
    assert np.all(np.linalg.eigvalsh(s.P) > 0)


def test_zero_row_leaves_state_unchanged(rng):
    s = init_online(rng.uniform(size=(10, 4)), rng.normal(size=(10, 1)), 1e3)

    updated = online_update(s, np.zeros((1, 4)), np.array([[5.0]]))

    np.testing.assert_array_equal(updated.W.values, s.W.values)
    np.testing.assert_array_equal(updated.P, s.P)


def test_zero_innovation_keeps_weights(rng):
    s = init_online(rng.uniform(size=(10, 4)), rng.normal(size=(10, 1)), 1e3)
    h = rng.uniform(size=(1, 4))

    updated = online_update(s, h, h @ s.W.values)

    np.testing.assert_allclose(updated.W.values, s.W.values, rtol=0, atol=1e-14)
    assert not np.allclose(updated.P, s.P)


def test_sixty_sample_stream_matches_batch(rng):
    H = rng.uniform(size=(60, 8))
    Y = rng.normal(size=(60, 1))

    s = init_online(H[:10], Y[:10], 1e6)
    for k in range(10, 60):
        s = online_update(s, H[k : k + 1], Y[k : k + 1])

    np.testing.assert_allclose(s.W.values, ridge_solve(DesignMatrices(H, Y), 1e6).values, rtol=1e-8, atol=1e-9)


def test_first_pair_of_unit_window():
    w = NarxWindow(1, 1, 1, 1)
    assert w.push([0.5], [1.5]) is None
    x, target = w.push([0.7], [2.5])
    np.testing.assert_array_equal(x, [0.5, 1.5])
    np.testing.assert_array_equal(target, [2.5])


def test_hand_unrolled_window_trace():
    w = NarxWindow(n_u=2, n_y=1, u_dim=1, y_dim=1)
    w.push([1.0], [10.0])
    w.push([2.0], [20.0])
    x, target = w.push([3.0], [30.0])
    np.testing.assert_array_equal(x, [2.0, 1.0, 20.0])
    np.testing.assert_array_equal(target, [30.0])


@pytest.mark.parametrize("n_u, n_y", [(1, 1), (2, 5), (4, 2)])
def test_pair_count(n_u, n_y):
    X, _ = narx_pairs(np.zeros((25, 1)), np.zeros((25, 2)), n_u, n_y)
    assert X.shape[0] == 25 - max(n_u, n_y)
