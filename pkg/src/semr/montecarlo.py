"""Seeded, parallel Monte-Carlo replication of episodes.

Replication ``r`` always draws from ``RngStream(seed, first_stream + r)``, so
the output does not depend on the number of workers or on block boundaries.
"""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import kernels
from .environment import EnvironmentSpec
from .errors import HorizonTooSmall
from .numkit import RngStream
from .policies import Policy, PolicyKind, draw_noise, log_inverse_delta

# upper bound on pre-drawn normals held per block
_BLOCK_ELEMENTS = 1 << 22


@dataclass
class ReplicationBatch:
    n: int
    counts: np.ndarray  # (R, k) final pull counts
    devsum: np.ndarray  # (R, d) sum_t (X_t - theta)
    sqdev: np.ndarray  # (R, k) per-arm sum of ||X_t - theta||^2

    @property
    def replications(self) -> int:
        return self.counts.shape[0]

    @property
    def estimate_errors(self) -> np.ndarray:
        """theta_hat - theta for every replication."""
        return self.devsum / self.n

    @property
    def squared_errors(self) -> np.ndarray:
        err = self.estimate_errors
        return np.einsum("rj,rj->r", err, err)

    @property
    def mean_counts(self) -> np.ndarray:
        return self.counts.mean(axis=0)


def default_workers() -> int:
    value = os.environ.get("SEMR_WORKERS")
    return max(1, int(value)) if value else 1


def _block_size(n: int, d: int) -> int:
    return max(1, min(256, _BLOCK_ELEMENTS // max(1, n * d)))


def run_replications(env: EnvironmentSpec, policy: Policy, n: int, replications: int, seed: int,
                     *, workers: int | None = None, ddof: int = 0, first_stream: int = 0,
                     backend: str | None = None) -> ReplicationBatch:
    if n < 1:
        raise HorizonTooSmall(f"horizon must be >= 1, got {n}")
    if replications < 1:
        raise ValueError("need at least one replication")
    workers = default_workers() if workers is None else max(1, int(workers))
    target = policy.resolve_target(env) if policy.kind is PolicyKind.ORACLE else 0
    log2d = log_inverse_delta(n, env.d)
    size = _block_size(n, env.d)
    starts = list(range(0, replications, size))

    def run_block(start):
        stop = min(start + size, replications)
        z = np.empty((stop - start, n, env.d))
        u = np.empty((stop - start, n)) if policy.needs_uniforms else None
        for j, r in enumerate(range(start, stop)):
            zr, ur = draw_noise(RngStream(seed, first_stream + r), n, env.d, policy)
            z[j] = zr
            if u is not None:
                u[j] = ur
        return kernels.simulate_block(
            policy.kernel_code, n, env.theta, env.chols, z, u,
            gamma=env.gamma, log2d=log2d, ddof=ddof, eps=policy.epsilon,
            target=target, backend=backend)

    if workers == 1 or len(starts) == 1:
        parts = [run_block(s) for s in starts]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(run_block, starts))
    counts, devsum, sqdev = (np.concatenate(p) for p in zip(*parts))
    return ReplicationBatch(n=n, counts=counts, devsum=devsum, sqdev=sqdev)
