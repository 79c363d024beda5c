"""Empirical checks of the upper-bound machinery.

* ``concentration_sweep``: tail of the unbiased covariance-trace estimator
  against ``2 exp(-(m-1)/8 * min(eps^2, eps ||S||_F / ||S||_2))``.
* ``certificate``: per-arm pull-count bound ``C_d log(n) / gap^2 + 5`` for the
  LCB rule with the default confidence schedule.
* ``regret_threshold_bound``: the closed-form regret envelope of order
  ``n^{-3/2} sqrt(log n)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import numkit
from .environment import EnvironmentSpec, GapProfile
from .errors import ZeroGap
from .numkit import RngStream

BASE_EPSILONS = (0.25, 0.5, 1.0, 2.0)
# the extra grid value sits this far past ||S||_F / ||S||_2 to hit the linear branch
LINEAR_REGIME_FACTOR = 1.5
_CHUNK_ELEMENTS = 1 << 21


@dataclass(frozen=True)
class ConcentrationTrial:
    m: int
    epsilon: float
    trials: int
    empirical_tail: float
    bound: float
    frobenius: float
    spectral: float

    @property
    def se(self) -> float:
        p = self.empirical_tail
        return math.sqrt(p * (1.0 - p) / self.trials)

    @property
    def linear_regime(self) -> bool:
        return self.epsilon > self.frobenius / self.spectral

    @property
    def passed(self) -> bool:
        return self.empirical_tail <= self.bound + 3.0 * self.se


def concentration_bound(m: int, epsilon: float, frobenius: float, spectral: float) -> float:
    rate = min(epsilon ** 2, epsilon * frobenius / spectral)
    return 2.0 * math.exp(-(m - 1) / 8.0 * rate)


def default_epsilons(sigma) -> list:
    ratio = numkit.frobenius_norm(sigma) / numkit.spectral_norm(sigma)
    return [*BASE_EPSILONS, LINEAR_REGIME_FACTOR * ratio]


def trace_deviations(sigma, m: int, trials: int, rng: RngStream) -> np.ndarray:
    """``Tr(S) - Tr(S_hat)`` for ``trials`` samples of size ``m``, S_hat with 1/(m-1)."""
    sigma = numkit.as_square(sigma)
    d = sigma.shape[0]
    L = numkit.cholesky(sigma)
    out = np.empty(trials)
    chunk = max(1, _CHUNK_ELEMENTS // (m * d))
    for start in range(0, trials, chunk):
        stop = min(trials, start + chunk)
        x = rng.standard_normal((stop - start, m, d)) @ L.T
        centered = x - x.mean(axis=1, keepdims=True)
        out[start:stop] = np.einsum("tsj,tsj->t", centered, centered) / (m - 1)
    return np.trace(sigma) - out


def concentration_sweep(sigma, m_grid, eps_grid, trials: int, rng: RngStream) -> list:
    """One :class:`ConcentrationTrial` per (m, epsilon) cell.

    A single set of ``trials`` deviations per m serves every epsilon.
    """
    if min(m_grid) < 2:
        raise ValueError("sample size m must be at least 2")
    sigma = numkit.as_square(sigma)
    frob = numkit.frobenius_norm(sigma)
    spectral = numkit.spectral_norm(sigma)
    cells = []
    for m in m_grid:
        dev = np.abs(trace_deviations(sigma, int(m), trials, rng))
        for eps in eps_grid:
            cells.append(ConcentrationTrial(
                m=int(m), epsilon=float(eps), trials=trials,
                empirical_tail=float(np.mean(dev > eps * frob)),
                bound=concentration_bound(int(m), float(eps), frob, spectral),
                frobenius=frob, spectral=spectral))
    return cells


def alpha(d: int) -> int:
    return max(2, (d - 1) ** 2)


def c_constant(d: int) -> float:
    return 1.0 / (1.0 + math.sqrt(alpha(d)))


def c_d(gamma: float, d: int) -> float:
    return 8.0 * gamma ** 2 * (1.0 + math.sqrt(alpha(d))) ** 2


@dataclass(frozen=True)
class BoundCertificate:
    arm: int
    gap: float
    alpha: int
    c: float
    u: int
    eta: float
    c_d: float
    # u + n (n delta + 2 exp(-log(2/delta) c^2 / (1-c)^2)), before simplification
    pre_substitution_bound: float
    predicted_bound: float
    empirical_mean: float
    empirical_se: float

    @property
    def passed(self) -> bool:
        return self.empirical_mean <= self.predicted_bound + 3.0 * self.empirical_se


def certificate(env: EnvironmentSpec, profile: GapProfile, n: int, mean_counts, se=None, arms=None) -> list:
    """Pull-count certificates for the suboptimal arms of an LCB run at horizon ``n``.

    ``arms`` defaults to every arm with a positive gap; asking for a zero-gap
    arm raises :class:`ZeroGap`.
    """
    d = env.d
    a = alpha(d)
    c = c_constant(d)
    cd = c_d(env.gamma, d)
    log2d = a * math.log(n)
    delta = 2.0 * math.exp(-log2d)
    if se is None:
        se = np.zeros(env.k)
    if arms is None:
        arms = [i for i in range(env.k) if profile.gaps[i] > 0]
    certs = []
    for i in arms:
        gap = float(profile.gaps[i])
        if gap <= 0:
            raise ZeroGap(f"arm {i} has zero gap; its count bound is infinite")
        u = math.ceil(8.0 * env.gamma ** 2 * log2d / ((1.0 - c) ** 2 * gap ** 2)) + 1
        eta = gap - env.gamma * math.sqrt(8.0 * log2d / (u - 1))
        tail = n * delta + 2.0 * math.exp(-log2d * c ** 2 / (1.0 - c) ** 2)
        certs.append(BoundCertificate(
            arm=i, gap=gap, alpha=a, c=c, u=u, eta=eta, c_d=cd,
            pre_substitution_bound=u + n * tail,
            predicted_bound=cd * math.log(n) / gap ** 2 + 5.0,
            empirical_mean=float(mean_counts[i]),
            empirical_se=float(se[i])))
    return certs


def regret_threshold_bound(env: EnvironmentSpec, profile: GapProfile, n: int) -> float:
    k, d = env.k, env.d
    first = 5.0 * float(np.sum(profile.gaps)) / n ** 2
    second = 4.0 * env.gamma * (1.0 + math.sqrt(alpha(d))) * math.sqrt(2.0 * k * math.log(n)) / n ** 1.5
    return first + second
