import math

import numpy as np
import pytest

from semr import kernels
from semr._backend import NUMBA_AVAILABLE
from semr.environment import build_environment
from semr.errors import HorizonTooSmall
from semr.montecarlo import run_replications
from semr.numkit import RngStream
from semr.policies import (GREEDY, LCB, UNIFORM, LcbState, epsilon_greedy, lcb_index, log_inverse_delta,
                           oracle, run_episode, select_arm, update)

ALL_POLICIES = [LCB, UNIFORM, GREEDY, epsilon_greedy(0.2), oracle(), oracle(2)]
BACKENDS = ["numpy"] + (["numba"] if NUMBA_AVAILABLE else [])


def _state(k=2, d=1, gamma=1.0, n=100, ddof=0):
    return LcbState(k=k, d=d, gamma=gamma, horizon=n, log2d=log_inverse_delta(n, d), ddof=ddof)


def test_lcb_index_unpulled():
    assert lcb_index(_state(), 0) == -math.inf


def test_lcb_index_arithmetic():
    s = _state(gamma=1.0)
    s.counts[0] = 8
    s.tr_hat[0] = 5.0
    delta = 2.0 * math.exp(-8.0)
    assert lcb_index(s, 0, delta=delta) == pytest.approx(5.0 - math.sqrt(8.0), rel=1e-12)
    assert lcb_index(s, 0, delta=delta) == pytest.approx(2.1716, abs=1e-4)


def test_lcb_index_monotone_in_delta():
    s = _state()
    s.counts[0] = 4
    s.tr_hat[0] = 1.0
    values = [lcb_index(s, 0, delta=10.0 ** -p) for p in range(1, 300, 20)]
    assert all(a > b for a, b in zip(values, values[1:]))


def test_log_inverse_delta_schedule():
    assert log_inverse_delta(100, 1) == pytest.approx(2 * math.log(100))
    assert log_inverse_delta(100, 4) == pytest.approx(9 * math.log(100))
    s = _state(n=100)
    assert s.delta == pytest.approx(2.0 / 100 ** 2)


def test_select_examples():
    assert select_arm(LCB, _state(k=3)) == 0
    s = _state()
    for arm, x in [(0, 0.0), (0, 2.0), (1, 1.0), (1, 2.0)]:
        update(GREEDY, s, arm, [x])
    s.tr_hat[:] = [2.0, 1.5]
    assert select_arm(GREEDY, s) == 1
    for _ in range(5):
        assert select_arm(oracle(0), s) == 0
    with pytest.raises(ValueError):
        select_arm(oracle(), s)


def test_epsilon_greedy_exploration_map():
    s = _state(k=4)
    for arm in range(4):
        update(GREEDY, s, arm, [0.0])
    p = epsilon_greedy(0.4)
    assert [select_arm(p, s, u=u) for u in (0.0, 0.11, 0.21, 0.39)] == [0, 1, 2, 3]
    assert select_arm(p, s, u=0.5) == 0


def test_update_examples():
    s = _state()
    update(LCB, s, 0, [0.0])
    assert s.tr_hat[0] == 0.0
    update(LCB, s, 0, [2.0])
    assert s.tr_hat[0] == 1.0
    s = _state(ddof=1)
    update(LCB, s, 0, [0.0])
    assert s.tr_hat[0] == 0.0
    update(LCB, s, 0, [2.0])
    assert s.tr_hat[0] == 2.0


@pytest.mark.parametrize("policy", [LCB, UNIFORM, GREEDY, epsilon_greedy(0.3), oracle()])
def test_single_arm_takes_everything(policy):
    env = build_environment(0.0, [1.0], 1.0)
    assert run_episode(env, policy, 37, RngStream(1)).counts.tolist() == [37]


def test_oracle_counts(five_arms):
    ep = run_episode(five_arms, oracle(), 50, RngStream(1))
    assert ep.counts.tolist() == [50, 0, 0, 0, 0]


def test_horizon_too_small(five_arms):
    with pytest.raises(HorizonTooSmall):
        run_episode(five_arms, LCB, 0, RngStream(0))


@pytest.mark.parametrize("policy", ALL_POLICIES, ids=lambda p: p.name)
def test_episode_determinism(five_arms, policy):
    a = run_episode(five_arms, policy, 60, RngStream(9, 4))
    b = run_episode(five_arms, policy, 60, RngStream(9, 4))
    assert [(h.round, h.arm) for h in a.history] == [(h.round, h.arm) for h in b.history]
    assert all(np.array_equal(x.sample, y.sample) for x, y in zip(a.history, b.history))
    assert a.counts.sum() == 60


@pytest.mark.parametrize("backend", BACKENDS)
@pytest.mark.parametrize("policy", ALL_POLICIES, ids=lambda p: p.name)
@pytest.mark.parametrize("ddof", [0, 1])
def test_reference_episode_matches_batch_kernel(five_arms, policy, backend, ddof):
    n, R, seed = 80, 12, 31
    batch = run_replications(five_arms, policy, n, R, seed, workers=1, ddof=ddof, backend=backend)
    for r in range(R):
        ep = run_episode(five_arms, policy, n, RngStream(seed, r), ddof=ddof)
        assert ep.counts.tolist() == batch.counts[r].tolist()
        np.testing.assert_allclose(ep.theta_hat, batch.estimate_errors[r] + five_arms.theta, rtol=1e-10, atol=1e-12)


def test_reference_matches_kernel_multivariate():
    env = build_environment([1.0, -1.0], [np.eye(2), np.diag([0.5, 2.0]), [[1.0, 0.3], [0.3, 0.5]]], 3.0)
    for backend in BACKENDS:
        batch = run_replications(env, LCB, 64, 6, 5, backend=backend)
        for r in range(6):
            assert run_episode(env, LCB, 64, RngStream(5, r)).counts.tolist() == batch.counts[r].tolist()


@pytest.mark.parametrize("policy", ALL_POLICIES, ids=lambda p: p.name)
def test_estimator_is_unbiased(five_arms, policy):
    n, R = 100, 10_000
    batch = run_replications(five_arms, policy, n, R, 77)
    bias = np.linalg.norm(batch.estimate_errors.mean(axis=0))
    assert bias <= 4 * math.sqrt(5.0 / (n * R))


def test_symmetric_arms_split_evenly():
    env = build_environment(0.0, [1.0, 1.0], 1.0)
    batch = run_replications(env, LCB, 10_000, 500, 2024)
    share = batch.mean_counts[0] / 10_000
    assert 0.40 <= share <= 0.60


def test_numpy_and_numba_kernels_agree(five_arms):
    if not NUMBA_AVAILABLE:
        pytest.skip("numba not installed")
    rng = np.random.default_rng(0)
    z = rng.standard_normal((16, 200, 1))
    u = rng.random((16, 200))
    for code in range(5):
        args = dict(gamma=5.0, log2d=log_inverse_delta(200, 1), eps=0.25, target=2)
        a = kernels.simulate_block(code, 200, five_arms.theta, five_arms.chols, z, u, backend="numba", **args)
        b = kernels.simulate_block(code, 200, five_arms.theta, five_arms.chols, z, u, backend="numpy", **args)
        np.testing.assert_array_equal(a[0], b[0])
        np.testing.assert_allclose(a[1], b[1], rtol=1e-12, atol=1e-12)
        np.testing.assert_allclose(a[2], b[2], rtol=1e-12, atol=1e-12)


def test_workers_do_not_change_results(five_arms):
    a = run_replications(five_arms, LCB, 300, 600, 8, workers=1)
    b = run_replications(five_arms, LCB, 300, 600, 8, workers=8)
    np.testing.assert_array_equal(a.counts, b.counts)
    np.testing.assert_array_equal(a.devsum, b.devsum)
    np.testing.assert_array_equal(a.sqdev, b.sqdev)
