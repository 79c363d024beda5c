"""Gaussian multi-source environments: k arms sharing a mean, differing in covariance."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import numkit
from .errors import DimensionMismatch, GammaViolated, NotPsd, Singular


@dataclass(frozen=True)
class EnvironmentSpec:
    theta: np.ndarray
    covariances: tuple
    gamma: float
    chols: np.ndarray = field(repr=False)

    @property
    def k(self) -> int:
        return len(self.covariances)

    @property
    def d(self) -> int:
        return self.theta.shape[0]

    @property
    def traces(self) -> np.ndarray:
        return np.array([np.trace(s) for s in self.covariances])

    def sample_from_noise(self, arm: int, z) -> np.ndarray:
        return numkit.affine_normal(self.theta, self.chols[arm], z)

    def with_covariance(self, arm: int, cov) -> "EnvironmentSpec":
        covs = list(self.covariances)
        covs[arm] = cov
        return build_environment(self.theta, covs, self.gamma)


@dataclass(frozen=True)
class GapProfile:
    best_arm: int
    optimal_trace: float
    gaps: np.ndarray
    fisher_traces: np.ndarray
    # argmax Tr(Sigma_i^{-1}); can differ from best_arm when d > 1
    fisher_best_arm: int

    @property
    def consistent(self) -> bool:
        return self.best_arm == self.fisher_best_arm


@dataclass(frozen=True)
class PullRecord:
    round: int
    arm: int
    sample: np.ndarray


def build_environment(theta, covariances, gamma: float) -> EnvironmentSpec:
    """Validate arms against the Frobenius bound and cache Cholesky factors.

    ``theta`` may be a scalar for d = 1; covariances may be scalars (variances)
    or d x d matrices.
    """
    theta = np.atleast_1d(np.asarray(theta, dtype=float)).copy()
    d = theta.shape[0]
    if len(covariances) == 0:
        raise DimensionMismatch("at least one arm is required")
    if not gamma > 0:
        raise ValueError("gamma must be positive")
    covs = []
    chols = np.zeros((len(covariances), d, d))
    for i, c in enumerate(covariances):
        m = numkit.as_square(c)
        if m.shape != (d, d):
            raise DimensionMismatch(f"arm {i}: covariance is {m.shape}, expected {(d, d)}")
        try:
            chols[i] = numkit.cholesky(m)
        except NotPsd as exc:
            raise NotPsd(str(exc), arm=i) from None
        norm = numkit.frobenius_norm(m)
        if norm > gamma:
            raise GammaViolated(i, norm, gamma)
        m = m.copy()
        m.flags.writeable = False
        covs.append(m)
    theta.flags.writeable = False
    chols.flags.writeable = False
    return EnvironmentSpec(theta=theta, covariances=tuple(covs), gamma=float(gamma), chols=chols)


def isotropic_environment(theta, variances, gamma: float, d: int | None = None) -> EnvironmentSpec:
    """Arms with covariance v_i * I; both best-arm definitions agree for this family."""
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    if d is not None and theta.shape[0] == 1 and d > 1:
        theta = np.full(d, theta[0])
    dim = theta.shape[0]
    return build_environment(theta, [v * np.eye(dim) for v in variances], gamma)


def pull(env: EnvironmentSpec, arm: int, rng: numkit.RngStream) -> np.ndarray:
    if not 0 <= arm < env.k:
        raise IndexError(f"arm {arm} out of range for k={env.k}")
    return env.sample_from_noise(arm, rng.standard_normal(env.d))


def fisher_info(env: EnvironmentSpec, arm: int) -> np.ndarray:
    """Fisher information of the mean for arm ``arm``: the inverse covariance."""
    cov = env.covariances[arm]
    L = env.chols[arm]
    if np.any(np.diag(L) <= 0.0):
        raise Singular(f"arm {arm}: covariance is singular")
    try:
        inv_l = np.linalg.solve(L, np.eye(env.d))
    except np.linalg.LinAlgError as exc:
        raise Singular(f"arm {arm}: {exc}") from None
    info = inv_l.T @ inv_l
    if not np.all(np.isfinite(info)):
        raise Singular(f"arm {arm}: covariance inverse is not finite (cond={np.linalg.cond(cov):.3g})")
    return 0.5 * (info + info.T)


def gap_profile(env: EnvironmentSpec) -> GapProfile:
    traces = env.traces
    best = int(np.argmin(traces))  # argmin returns the lowest index on ties
    fisher_traces = np.full(env.k, np.inf)
    for i in range(env.k):
        try:
            fisher_traces[i] = np.trace(fisher_info(env, i))
        except Singular:
            pass
    gaps = traces - traces[best]
    return GapProfile(
        best_arm=best,
        optimal_trace=float(traces[best]),
        gaps=gaps,
        fisher_traces=fisher_traces,
        fisher_best_arm=int(np.argmax(fisher_traces)),
    )
