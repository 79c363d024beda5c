import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from semr import bounds
from semr.environment import build_environment, gap_profile
from semr.errors import ZeroGap
from semr.montecarlo import run_replications
from semr.numkit import RngStream
from semr.policies import LCB


def test_concentration_bound_example():
    assert bounds.concentration_bound(9, 1.0, 1.0, 1.0) == pytest.approx(2 * math.exp(-1), rel=1e-15)
    assert bounds.concentration_bound(9, 1.0, 2.0, 1.0) == pytest.approx(0.7358, abs=1e-4)


def test_concentration_bound_decreasing_in_m():
    values = [bounds.concentration_bound(m, 0.5, 1.7, 1.0) for m in range(2, 200)]
    assert all(a > b for a, b in zip(values, values[1:]))


def test_far_tails_vanish():
    cells = bounds.concentration_sweep(np.eye(2), [30, 100], [10.0], 10_000, RngStream(1))
    assert all(c.empirical_tail == 0.0 for c in cells)


def test_trace_deviations_centered():
    dev = bounds.trace_deviations(np.diag([1.0, 4.0]), 20, 40_000, RngStream(6))
    assert abs(dev.mean()) <= 4 * dev.std() / math.sqrt(dev.size)


def test_default_epsilons_reach_linear_regime():
    eps = bounds.default_epsilons(np.eye(4))
    assert eps[:4] == [0.25, 0.5, 1.0, 2.0]
    assert eps[-1] > 2.0


def test_constants():
    assert bounds.alpha(1) == 2 and bounds.alpha(3) == 4 and bounds.alpha(5) == 16
    assert bounds.c_constant(1) == pytest.approx(1 / (1 + math.sqrt(2)))
    assert bounds.c_d(1.0, 1) == pytest.approx(8 * (1 + math.sqrt(2)) ** 2)
    assert bounds.c_d(1.0, 1) == pytest.approx(46.63, abs=0.01)
    assert bounds.c_constant(3) == pytest.approx(1 / 3)
    assert bounds.c_d(2.0, 3) == pytest.approx(72 * 4.0)


@pytest.mark.parametrize("d", range(1, 12))
def test_c_at_most_inverse_dimension(d):
    assert bounds.c_constant(d) <= 1.0 / d + 1e-15


@settings(max_examples=200, deadline=None)
@given(st.integers(1, 6), st.floats(0.01, 10.0), st.floats(0.0, 1.0), st.integers(2, 10**7))
def test_eta_not_below_c_gap(d, gamma, gap_fraction, n):
    # arm 0 has trace 0; arm 1 sits inside the Frobenius ball
    var = max(gap_fraction * gamma / math.sqrt(d), 1e-6)
    env = build_environment(np.zeros(d), [np.zeros((d, d)), var * np.eye(d)], gamma)
    profile = gap_profile(env)
    (cert,) = bounds.certificate(env, profile, n, [n, 0])
    c = bounds.c_constant(d)
    assert cert.eta >= c * cert.gap * (1 - 1e-12)
    assert cert.eta > 0


def test_certificate_skips_and_rejects_optimal_arm(five_arms):
    profile = gap_profile(five_arms)
    certs = bounds.certificate(five_arms, profile, 1000, [1000, 0, 0, 0, 0])
    assert [c.arm for c in certs] == [1, 2, 3, 4]
    with pytest.raises(ZeroGap):
        bounds.certificate(five_arms, profile, 1000, [1000, 0, 0, 0, 0], arms=[0])


def test_certificate_monte_carlo():
    env = build_environment(0.0, [1.0, 4.0], 4.0)
    n = 10_000
    batch = run_replications(env, LCB, n, 500, 99)
    se = batch.counts.std(axis=0, ddof=1) / math.sqrt(500)
    (cert,) = bounds.certificate(env, gap_profile(env), n, batch.mean_counts, se)
    assert cert.predicted_bound == pytest.approx(bounds.c_d(4.0, 1) * math.log(n) / 9 + 5)
    assert cert.passed
    assert cert.empirical_mean < 0.5 * cert.predicted_bound


def test_regret_threshold_bound_single_arm():
    env = build_environment(0.0, [1.0], 1.0)
    value = bounds.regret_threshold_bound(env, gap_profile(env), 100)
    assert value > 0
    assert value == pytest.approx(4 * (1 + math.sqrt(2)) * math.sqrt(2 * math.log(100)) / 1000)


def test_regret_threshold_bound_order(five_arms):
    profile = gap_profile(five_arms)
    scaled = [bounds.regret_threshold_bound(five_arms, profile, n) * n ** 1.5 / math.sqrt(math.log(n))
              for n in (10**4, 10**6, 10**8, 10**10)]
    assert all(a > b for a, b in zip(scaled, scaled[1:]))
    assert scaled[-1] == pytest.approx(scaled[-2], rel=1e-3)
