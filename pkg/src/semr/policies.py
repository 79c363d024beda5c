"""Arm-selection policies: the lower-confidence-bound rule plus baselines.

Arms are 0-indexed. The reference implementation here keeps the full history
and a full streaming covariance per arm; the batch kernels in
:mod:`semr.kernels` implement the same decisions without the bookkeeping.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .environment import EnvironmentSpec, PullRecord, gap_profile
from .errors import HorizonTooSmall
from .numkit import RngStream, StreamingCovariance


class PolicyKind(enum.Enum):
    LCB = "lcb"
    UNIFORM = "uniform"
    GREEDY = "greedy"
    EPSILON_GREEDY = "epsilon-greedy"
    ORACLE = "oracle"


_KERNEL_CODES = {
    PolicyKind.LCB: kernels.LCB,
    PolicyKind.UNIFORM: kernels.UNIFORM,
    PolicyKind.GREEDY: kernels.GREEDY,
    PolicyKind.EPSILON_GREEDY: kernels.EPSILON_GREEDY,
    PolicyKind.ORACLE: kernels.ORACLE,
}


@dataclass(frozen=True)
class Policy:
    kind: PolicyKind
    epsilon: float = 0.0
    # Oracle arm; None means "best arm of whatever environment it runs on"
    target: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "kind", PolicyKind(self.kind))
        if not 0.0 <= self.epsilon <= 1.0:
            raise ValueError(f"epsilon must lie in [0, 1], got {self.epsilon}")

    @property
    def name(self) -> str:
        if self.kind is PolicyKind.EPSILON_GREEDY:
            return f"{self.kind.value}({self.epsilon:g})"
        if self.kind is PolicyKind.ORACLE and self.target is not None:
            return f"{self.kind.value}({self.target})"
        return self.kind.value

    @property
    def kernel_code(self) -> int:
        return _KERNEL_CODES[self.kind]

    @property
    def needs_uniforms(self) -> bool:
        return self.kind is PolicyKind.EPSILON_GREEDY

    def resolve_target(self, env: EnvironmentSpec) -> int:
        if self.target is not None:
            return self.target
        return gap_profile(env).best_arm


LCB = Policy(PolicyKind.LCB)
UNIFORM = Policy(PolicyKind.UNIFORM)
GREEDY = Policy(PolicyKind.GREEDY)


def epsilon_greedy(epsilon: float) -> Policy:
    return Policy(PolicyKind.EPSILON_GREEDY, epsilon=epsilon)


def oracle(target: int | None = None) -> Policy:
    return Policy(PolicyKind.ORACLE, target=target)


def log_inverse_delta(n: int, d: int) -> float:
    """log(2/delta) for delta = 2 / n**max((d-1)**2, 2), computed without overflow."""
    return max((d - 1) ** 2, 2) * math.log(n)


def confidence_width(gamma: float, log2d: float, pulls: int) -> float:
    return gamma * math.sqrt(8.0 * log2d / pulls)


@dataclass
class LcbState:
    k: int
    d: int
    gamma: float
    horizon: int
    log2d: float
    ddof: int = 0
    t: int = 0
    counts: np.ndarray = field(init=False)
    accumulators: list = field(init=False)
    tr_hat: np.ndarray = field(init=False)

    def __post_init__(self):
        if self.ddof not in (0, 1):
            raise ValueError("ddof must be 0 (divide by T) or 1 (divide by T-1)")
        self.counts = np.zeros(self.k, dtype=np.int64)
        self.accumulators = [StreamingCovariance(self.d) for _ in range(self.k)]
        self.tr_hat = np.zeros(self.k)

    @classmethod
    def for_environment(cls, env: EnvironmentSpec, n: int, ddof: int = 0) -> "LcbState":
        return cls(k=env.k, d=env.d, gamma=env.gamma, horizon=n,
                   log2d=log_inverse_delta(n, env.d), ddof=ddof)

    @property
    def delta(self) -> float:
        return 2.0 * math.exp(-self.log2d)


def lcb_index(state: LcbState, arm: int, delta: float | None = None) -> float:
    """Lower confidence bound on the covariance trace of ``arm``; -inf if unpulled."""
    pulls = int(state.counts[arm])
    if pulls == 0:
        return -math.inf
    log2d = state.log2d if delta is None else math.log(2.0 / delta)
    return float(state.tr_hat[arm]) - confidence_width(state.gamma, log2d, pulls)


def select_arm(policy: Policy, state: LcbState, rng: RngStream | None = None, *, u: float | None = None) -> int:
    """Next arm to pull. Ties go to the lowest index.

    Epsilon-greedy reads one uniform ``u`` (drawn from ``rng`` when not given);
    exploration picks arm ``floor(u / epsilon * k)``.
    """
    kind = policy.kind
    if kind is PolicyKind.LCB:
        indices = [lcb_index(state, i) for i in range(state.k)]
        return int(np.argmin(indices))
    if kind is PolicyKind.UNIFORM:
        return state.t % state.k
    if kind is PolicyKind.ORACLE:
        if policy.target is None:
            raise ValueError("oracle policy needs a target arm; use Policy.resolve_target")
        return policy.target
    if kind is PolicyKind.EPSILON_GREEDY:
        if u is None:
            if rng is None:
                raise ValueError("epsilon-greedy needs an rng or a uniform draw")
            u = float(rng.random(1)[0])
        if u < policy.epsilon:
            return min(int(u / policy.epsilon * state.k), state.k - 1)
    unpulled = np.flatnonzero(state.counts == 0)
    if unpulled.size:
        return int(unpulled[0])
    return int(np.argmin(state.tr_hat))


def update(policy: Policy, state: LcbState, arm: int, sample) -> LcbState:
    acc = state.accumulators[arm].update(sample)
    state.counts[arm] += 1
    state.t += 1
    state.tr_hat[arm] = acc.trace(ddof=state.ddof)
    return state


def draw_noise(rng: RngStream, n: int, d: int, policy: Policy):
    """All randomness one episode consumes: (n, d) normals, then n uniforms if needed."""
    z = rng.standard_normal((n, d))
    u = rng.random(n) if policy.needs_uniforms else None
    return z, u


@dataclass
class Episode:
    history: list
    counts: np.ndarray
    theta_hat: np.ndarray


def run_episode(env: EnvironmentSpec, policy: Policy, n: int, rng: RngStream, ddof: int = 0) -> Episode:
    """Play one episode of ``n`` rounds; the estimate is the mean of all samples."""
    if n < 1:
        raise HorizonTooSmall(f"horizon must be >= 1, got {n}")
    if policy.kind is PolicyKind.ORACLE:
        policy = oracle(policy.resolve_target(env))
    state = LcbState.for_environment(env, n, ddof=ddof)
    z, u = draw_noise(rng, n, env.d, policy)
    history = []
    total = np.zeros(env.d)
    for t in range(n):
        arm = select_arm(policy, state, u=None if u is None else u[t])
        x = env.sample_from_noise(arm, z[t])
        update(policy, state, arm, x)
        total += x
        history.append(PullRecord(round=t + 1, arm=arm, sample=x))
    return Episode(history=history, counts=state.counts.copy(), theta_hat=total / n)
