"""Two-environment lower-bound construction for scalar Gaussian arms.

Variances are called ``var*`` throughout; the Fisher information of the mean
for an arm with variance ``v`` is ``1/v``. The base environment has one strong
arm (variance ``sigma1``) and ``k-1`` identical weaker arms; the perturbed
environment makes the policy's least-pulled weak arm ``h`` strictly best, with
the information gap ``lam`` in both directions.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .environment import EnvironmentSpec, build_environment
from .errors import GammaViolated, LambdaTooLarge, NonPositiveVariance
from .montecarlo import ReplicationBatch, run_replications
from .policies import Policy
from .regret import summarize

_4E = 4.0 * math.e


def kl_same_mean_gaussian(var1: float, var2: float) -> float:
    """KL(N(mu, var1) || N(mu, var2))."""
    if not (var1 > 0 and var2 > 0):
        raise NonPositiveVariance(f"variances must be positive, got {var1}, {var2}")
    r = var1 / var2
    return 0.5 * (r - 1.0 - math.log(r))


@dataclass(frozen=True)
class LowerBoundPair:
    n: int
    k: int
    gamma: float
    var_strong: float  # sigma_1
    var_weak: float  # sigma_c, arms 2..k of the base environment
    var_perturbed: float  # sigma**, arm h of the perturbed environment
    weak_arm: int
    lam: float
    lipschitz: float  # L = 1/gamma^2
    info_variance: float  # Fisher information in the variance parameter at sigma_1
    c1: float
    c2: float
    c3: float
    kl_bound: float  # info_variance * (sigma** - sigma_1)^2
    theta: float = 0.0

    @property
    def info_strong(self) -> float:
        return 1.0 / self.var_strong

    def base(self) -> EnvironmentSpec:
        return build_environment(self.theta, [self.var_strong] + [self.var_weak] * (self.k - 1), self.gamma)

    def perturbed(self, weak_arm: int | None = None) -> EnvironmentSpec:
        h = self.weak_arm if weak_arm is None else weak_arm
        variances = [self.var_strong] + [self.var_weak] * (self.k - 1)
        variances[h] = self.var_perturbed
        return build_environment(self.theta, variances, self.gamma)

    def with_weak_arm(self, h: int) -> "LowerBoundPair":
        if not 1 <= h < self.k:
            raise ValueError(f"weak arm must be one of 1..{self.k - 1}, got {h}")
        return replace(self, weak_arm=h)

    @property
    def threshold(self) -> float:
        return self.c2 * math.sqrt(self.n)

    @property
    def floor(self) -> float:
        return self.c3 * self.n ** -1.5


def pair_constants(k: int, sigma1: float, gamma: float) -> dict:
    """Constants of the construction that do not depend on the horizon."""
    lip = 1.0 / gamma ** 2
    info_var = 1.0 / (2.0 * sigma1 ** 2)
    c1 = info_var / lip ** 2
    info1 = 1.0 / sigma1
    return {
        "lipschitz": lip,
        "info_variance": info_var,
        "c1": c1,
        "c2": math.sqrt((k - 1) / c1) / _4E,
        "c3": lip * math.sqrt(k - 1) / (_4E * math.sqrt(info_var) * info1 ** 2),
    }


def build_pair(n: int, k: int, sigma1: float, gamma: float, theta: float = 0.0) -> LowerBoundPair:
    if k < 2:
        raise ValueError("the construction needs k >= 2")
    if sigma1 > gamma:
        raise GammaViolated(0, sigma1, gamma)
    const = pair_constants(k, sigma1, gamma)
    lam = math.sqrt((k - 1) / (n * const["c1"]))
    info1 = 1.0 / sigma1
    if lam >= info1:
        raise LambdaTooLarge(f"lambda={lam:.4g} leaves no room below 1/sigma1={info1:.4g}")
    var_weak = 1.0 / (info1 - lam)
    if var_weak > gamma:
        raise GammaViolated(1, var_weak, gamma)
    var_pert = 1.0 / (info1 + lam)
    return LowerBoundPair(
        n=n, k=k, gamma=gamma, var_strong=sigma1, var_weak=var_weak, var_perturbed=var_pert,
        weak_arm=1, lam=lam, theta=theta,
        kl_bound=const["info_variance"] * (var_pert - sigma1) ** 2, **const)


def _variances(env: EnvironmentSpec) -> np.ndarray:
    if env.d != 1:
        raise ValueError("the lower-bound construction is scalar only")
    return np.array([c[0, 0] for c in env.covariances])


def weak_arm_from_counts(mean_counts) -> int:
    return 1 + int(np.argmin(np.asarray(mean_counts)[1:]))


def find_weak_arm(policy: Policy, env: EnvironmentSpec, n: int, replications: int, seed: int,
                  workers: int | None = None) -> int:
    """Suboptimal arm the policy pulls least on average (ties to the lowest index)."""
    if env.k < 2:
        raise ValueError("need at least two arms")
    batch = run_replications(env, policy, n, replications, seed, workers=workers)
    return weak_arm_from_counts(batch.mean_counts)


def information_regret(env: EnvironmentSpec, counts) -> np.ndarray:
    """Per-replication ``sum_i T_i (I* - I_i)``, the additive information shortfall."""
    info = 1.0 / _variances(env)
    return np.asarray(counts, dtype=float) @ (info.max() - info)


def bh_inequality_check(p: float, q: float, kl: float, se: float = 0.0) -> bool:
    """``P(A) + Q(A^c) >= exp(-KL)/2``, with ``3 se`` slack for estimated probabilities."""
    return p + q >= 0.5 * math.exp(-kl) - 3.0 * se


@dataclass(frozen=True)
class LowerBoundVerdict:
    policy: str
    n: int
    k: int
    weak_arm: int
    weak_arm_mean: float
    weak_arm_se: float
    r_minus_base: float
    r_minus_perturbed: float
    r_minus_base_se: float
    r_minus_perturbed_se: float
    threshold: float
    c2: float
    c3: float
    floor: float
    r_info_base: float
    r_info_perturbed: float
    r_estimator_base: float
    r_estimator_perturbed: float
    r_estimator_base_se: float
    r_estimator_perturbed_se: float
    bh_p: float
    bh_q: float
    bh_kl: float
    bh_se: float
    lipschitz: float
    info_variance: float

    @property
    def total(self) -> float:
        return self.r_minus_base + self.r_minus_perturbed

    @property
    def se(self) -> float:
        return math.hypot(self.r_minus_base_se, self.r_minus_perturbed_se)

    @property
    def passed(self) -> bool:
        return self.total >= self.threshold - 3.0 * self.se

    @property
    def weak_arm_ok(self) -> bool:
        return self.weak_arm_mean <= self.n / (self.k - 1) + 3.0 * self.weak_arm_se

    @property
    def bh_passed(self) -> bool:
        return bh_inequality_check(self.bh_p, self.bh_q, self.bh_kl, self.bh_se)

    @property
    def realized_r_info(self) -> float:
        return max(self.r_info_base, self.r_info_perturbed)

    @property
    def floor_passed(self) -> bool:
        return self.realized_r_info >= self.floor


def verdict(policy: Policy, pair: LowerBoundPair, n: int, replications: int, seed: int,
            workers: int | None = None) -> LowerBoundVerdict:
    """Run ``policy`` on both environments and compare the summed shortfall with ``C2 sqrt(n)``.

    Base runs use streams ``0..R-1`` and perturbed runs ``R..2R-1``, so the two
    estimates are independent.
    """
    if pair.n != n:
        raise ValueError(f"pair was built for n={pair.n}, not {n}")
    R = replications
    base_env = pair.base()
    base = run_replications(base_env, policy, n, R, seed, workers=workers)
    h = weak_arm_from_counts(base.mean_counts)
    pert_env = pair.perturbed(h)
    pert = run_replications(pert_env, policy, n, R, seed, workers=workers, first_stream=R)

    r_base = information_regret(base_env, base.counts)
    r_pert = information_regret(pert_env, pert.counts)
    rep_base = summarize(base_env, base.counts, base.squared_errors, n)
    rep_pert = summarize(pert_env, pert.counts, pert.squared_errors, n)

    p = float(np.mean(base.counts[:, 0] <= n / 2))
    q = float(np.mean(pert.counts[:, 0] > n / 2))
    kl = float(base.mean_counts[h]) * kl_same_mean_gaussian(pair.var_weak, pair.var_perturbed)
    root = math.sqrt(R)
    return LowerBoundVerdict(
        policy=policy.name, n=n, k=pair.k, weak_arm=h,
        weak_arm_mean=float(base.mean_counts[h]),
        weak_arm_se=float(base.counts[:, h].std(ddof=1) / root),
        r_minus_base=float(r_base.mean()), r_minus_perturbed=float(r_pert.mean()),
        r_minus_base_se=float(r_base.std(ddof=1) / root),
        r_minus_perturbed_se=float(r_pert.std(ddof=1) / root),
        threshold=pair.threshold, c2=pair.c2, c3=pair.c3, floor=pair.floor,
        r_info_base=rep_base.r_info, r_info_perturbed=rep_pert.r_info,
        r_estimator_base=rep_base.r_estimator, r_estimator_perturbed=rep_pert.r_estimator,
        r_estimator_base_se=rep_base.r_estimator_se, r_estimator_perturbed_se=rep_pert.r_estimator_se,
        bh_p=p, bh_q=q, bh_kl=kl, bh_se=math.sqrt((p * (1 - p) + q * (1 - q)) / R),
        lipschitz=pair.lipschitz, info_variance=pair.info_variance)


def r_i_floor(result: LowerBoundVerdict, info_strong: float) -> float:
    """Certified floor ``C3 n^{-3/2}`` on the larger information regret of the pair."""
    c3 = result.lipschitz * math.sqrt(result.k - 1) / (_4E * math.sqrt(result.info_variance) * info_strong ** 2)
    return c3 * result.n ** -1.5


@dataclass(frozen=True)
class DivergenceCheck:
    analytic: float
    monte_carlo: float
    monte_carlo_se: float
    arm: int

    @property
    def relative_error(self) -> float:
        if self.analytic == 0.0:
            return 0.0 if self.monte_carlo == 0.0 else math.inf
        return abs(self.monte_carlo - self.analytic) / abs(self.analytic)


def divergence_from_batch(batch: ReplicationBatch, var_base: float, var_alt: float, arm: int) -> DivergenceCheck:
    """Analytic ``E[T_h] KL`` versus the average log-likelihood ratio of arm-``arm`` samples."""
    pulls = batch.counts[:, arm].astype(float)
    sq = batch.sqdev[:, arm]
    # sum over pulls of log p_base(x) - log p_alt(x), with x - theta deviations
    llr = 0.5 * pulls * math.log(var_alt / var_base) - 0.5 * sq * (1.0 / var_base - 1.0 / var_alt)
    return DivergenceCheck(
        analytic=float(pulls.mean()) * kl_same_mean_gaussian(var_base, var_alt),
        monte_carlo=float(llr.mean()),
        monte_carlo_se=float(llr.std(ddof=1) / math.sqrt(len(llr))) if len(llr) > 1 else 0.0,
        arm=arm)


def divergence_decomposition_check(policy: Policy, env: EnvironmentSpec, env_alt: EnvironmentSpec,
                                   n: int, replications: int, seed: int,
                                   workers: int | None = None) -> DivergenceCheck:
    """KL between the trajectory laws of ``env`` and ``env_alt`` under ``policy``.

    The environments may differ in at most one arm.
    """
    var_a, var_b = _variances(env), _variances(env_alt)
    if var_a.shape != var_b.shape:
        raise ValueError("environments have different numbers of arms")
    differing = np.flatnonzero(var_a != var_b)
    if differing.size > 1:
        raise ValueError(f"environments differ in arms {differing.tolist()}; expected at most one")
    batch = run_replications(env, policy, n, replications, seed, workers=workers)
    arm = int(differing[0]) if differing.size else 0
    return divergence_from_batch(batch, float(var_a[arm]), float(var_b[arm]), arm)
