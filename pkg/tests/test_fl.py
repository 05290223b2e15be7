import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from evops.fl import (
    DimensionMismatch,
    DPConfig,
    EmptyRound,
    FLCoordinator,
    ModelUpdate,
    RoundState,
    aggregate,
    clip_update,
)


def upd(vec, n=1, cid="c", rnd=0):
    return ModelUpdate(weight_delta=np.asarray(vec, dtype=float),
                       num_samples=n, client_id=cid, round_index=rnd)


def test_clip_scales_onto_ball():
    u = upd([6.0, 8.0])  # norm 10
    out = clip_update(u, 2.0)
    assert np.linalg.norm(out.weight_delta) == pytest.approx(2.0)
    np.testing.assert_allclose(out.weight_delta, np.array([6.0, 8.0]) / 5.0)


def test_clip_noop_within_norm():
    u = upd([0.6, 0.8])
    out = clip_update(u, 2.0)
    np.testing.assert_array_equal(out.weight_delta, u.weight_delta)


def test_clip_zero_vector():
    out = clip_update(upd([0.0, 0.0, 0.0]), 1.0)
    np.testing.assert_array_equal(out.weight_delta, np.zeros(3))


@given(st.lists(st.floats(-1e3, 1e3), min_size=1, max_size=16),
       st.floats(0.01, 100.0))
def test_clip_idempotent(vec, c):
    once = clip_update(upd(vec), c)
    twice = clip_update(once, c)
    np.testing.assert_array_equal(once.weight_delta, twice.weight_delta)


def test_aggregate_symmetric_deltas_cancel():
    d = np.array([0.3, -0.2, 0.5])
    state = RoundState(round_index=0, global_weights=np.ones(3),
                       received=[upd(d, n=4, cid="a"), upd(-d, n=4, cid="b")])
    new = aggregate(state, DPConfig(clip_norm=10.0, noise_sigma=0.0))
    np.testing.assert_allclose(new, np.ones(3), atol=1e-15)


def test_aggregate_single_client_adds_delta():
    d = np.array([0.1, 0.2])
    state = RoundState(round_index=0, global_weights=np.zeros(2), received=[upd(d)])
    new = aggregate(state, DPConfig(clip_norm=5.0, noise_sigma=0.0))
    np.testing.assert_allclose(new, d, atol=1e-15)
    assert state.status == "aggregated"


def test_fedavg_recovery_exact_weighted_mean():
    rng = np.random.default_rng(0)
    deltas = [rng.normal(size=20) for _ in range(5)]
    samples = [3, 7, 1, 9, 4]
    state = RoundState(round_index=0, global_weights=np.zeros(20),
                       received=[upd(d, n=s, cid=str(i))
                                 for i, (d, s) in enumerate(zip(deltas, samples))])
    new = aggregate(state, DPConfig(clip_norm=np.inf, noise_sigma=0.0))
    expected = np.average(np.stack(deltas), axis=0, weights=samples)
    np.testing.assert_allclose(new, expected, atol=1e-12)


def test_noise_std_scaling_monte_carlo():
    # per-coordinate noise std must track sigma/n_clients within 5%
    sigma, n_clients, dim, reps = 0.1, 4, 4, 10_000
    deltas = [np.zeros(dim) for _ in range(n_clients)]
    samples = []
    for r in range(reps):
        state = RoundState(round_index=r, global_weights=np.zeros(dim),
                           received=[upd(d, cid=str(i)) for i, d in enumerate(deltas)])
        new = aggregate(state, DPConfig(clip_norm=1.0, noise_sigma=sigma, seed=123))
        samples.append(new)
    noise = np.stack(samples).ravel()
    assert np.std(noise) == pytest.approx(sigma / n_clients, rel=0.05)


def test_seeded_determinism():
    d = np.array([0.5, -0.5])

    def run():
        state = RoundState(round_index=3, global_weights=np.zeros(2),
                           received=[upd(d, cid="a"), upd(-d, cid="b")])
        return aggregate(state, DPConfig(clip_norm=1.0, noise_sigma=0.2, seed=7))

    np.testing.assert_array_equal(run(), run())


def test_dimension_mismatch():
    state = RoundState(round_index=0, global_weights=np.zeros(3),
                       received=[upd([1.0, 2.0])])
    with pytest.raises(DimensionMismatch):
        aggregate(state, DPConfig())


def test_empty_round_rejected():
    state = RoundState(round_index=0, global_weights=np.zeros(3))
    with pytest.raises(EmptyRound):
        aggregate(state, DPConfig())


def make_client(delta, n=1):
    def client(global_weights):
        return ModelUpdate(weight_delta=np.asarray(delta, float), num_samples=n,
                           client_id="x")
    return client


def test_run_round_no_clients():
    coord = FLCoordinator(np.zeros(2))
    with pytest.raises(EmptyRound):
        coord.run_round([])


def test_run_round_identical_clients_equal_single_delta():
    d = np.array([0.2, 0.1, -0.3])
    coord = FLCoordinator(np.zeros(3), dp=DPConfig(clip_norm=10.0, noise_sigma=0.0))
    state = coord.run_round([make_client(d)] * 3)
    assert len(state.received) == 3
    np.testing.assert_allclose(coord.global_weights, d, atol=1e-15)


def test_run_round_survivors_proceed_and_failures_recorded():
    d = np.array([1.0, 1.0])

    def broken(global_weights):
        raise RuntimeError("shard corrupted")

    coord = FLCoordinator(np.zeros(2), dp=DPConfig(clip_norm=np.inf, noise_sigma=0.0))
    state = coord.run_round([make_client(d), broken])
    assert len(state.received) == 1
    assert len(state.failures) == 1 and "shard corrupted" in next(iter(state.failures.values()))
    np.testing.assert_allclose(coord.global_weights, d)


def test_run_round_all_failed_raises():
    def broken(global_weights):
        raise RuntimeError("nope")

    coord = FLCoordinator(np.zeros(2))
    with pytest.raises(EmptyRound):
        coord.run_round([broken, broken])


def test_round_index_increments():
    coord = FLCoordinator(np.zeros(2), dp=DPConfig(noise_sigma=0.0))
    coord.run_round([make_client([0.1, 0.1])])
    coord.run_round([make_client([0.1, 0.1])])
    assert coord.round_index == 2
    assert [s.round_index for s in coord.history] == [0, 1]


@settings(max_examples=20, deadline=None)
@given(st.integers(1, 5), st.integers(0, 2**31 - 1))
def test_sigma_zero_infinite_clip_is_fedavg(n_clients, seed):
    rng = np.random.default_rng(seed)
    deltas = rng.normal(size=(n_clients, 8))
    weights = rng.integers(1, 50, size=n_clients)
    state = RoundState(round_index=0, global_weights=rng.normal(size=8),
                       received=[upd(deltas[i], n=int(weights[i]), cid=str(i))
                                 for i in range(n_clients)])
    new = aggregate(state, DPConfig(clip_norm=np.inf, noise_sigma=0.0))
    expected = state.global_weights + np.average(deltas, axis=0, weights=weights)
    np.testing.assert_allclose(new, expected, atol=1e-12)
