"""Batch episode simulation: the hot loop of every experiment.

Two interchangeable implementations of one contract:

* ``_simulate_block_numba``: plain loops, one replication at a time, compiled
  with numba.
* ``_simulate_block_numpy``: loops over rounds only, vectorised across the
  replications of a block.

Both consume pre-drawn noise (``z`` standard normals and ``u`` uniforms, one
row per replication) so a replication's trajectory depends only on its own
random stream. Per replication they return the final pull counts, the sum of
deviations ``sum_t (X_t - theta)`` and the per-arm sums of ``||X_t - theta||^2``.
"""
from __future__ import annotations

import math

import numpy as np

from . import _backend

LCB, UNIFORM, GREEDY, EPSILON_GREEDY, ORACLE = range(5)


@_backend.njit
def _simulate_block_numba(code, n, theta, chols, z, u, gamma, log2d, ddof, eps, target):
    B = z.shape[0]
    k = chols.shape[0]
    d = theta.shape[0]
    counts = np.zeros((B, k), dtype=np.int64)
    devsum = np.zeros((B, d))
    sqdev = np.zeros((B, k))

    mean = np.empty((k, d))
    m2 = np.empty((k, d))
    tr_hat = np.empty(k)
    index = np.empty(k)
    x = np.empty(d)

    for b in range(B):
        mean[:, :] = 0.0
        m2[:, :] = 0.0
        tr_hat[:] = 0.0
        index[:] = -np.inf
        cnt = counts[b]
        for t in range(n):
            # ---- select
            if code == LCB:
                arm = 0
                best = index[0]
                for i in range(1, k):
                    if index[i] < best:
                        best = index[i]
                        arm = i
            elif code == UNIFORM:
                arm = t % k
            elif code == ORACLE:
                arm = target
            else:
                if code == EPSILON_GREEDY and u[b, t] < eps:
                    arm = int(u[b, t] / eps * k)
                    if arm >= k:
                        arm = k - 1
                else:
                    arm = -1
                    for i in range(k):
                        if cnt[i] == 0:
                            arm = i
                            break
                    if arm < 0:
                        arm = 0
                        best = tr_hat[0]
                        for i in range(1, k):
                            if tr_hat[i] < best:
                                best = tr_hat[i]
                                arm = i
            # ---- sample X_t = theta + L z_t
            sq = 0.0
            for j in range(d):
                acc = 0.0
                for l in range(j + 1):
                    acc += chols[arm, j, l] * z[b, t, l]
                x[j] = theta[j] + acc
                devsum[b, j] += acc
                sq += acc * acc
            sqdev[b, arm] += sq
            # ---- update (Welford on the diagonal of the scatter)
            c = cnt[arm] + 1
            cnt[arm] = c
            s = 0.0
            for j in range(d):
                delta = x[j] - mean[arm, j]
                mean[arm, j] += delta / c
                m2[arm, j] += delta * (x[j] - mean[arm, j])
                s += m2[arm, j]
            denom = c - ddof
            tr_hat[arm] = s / denom if denom > 0 else 0.0
            index[arm] = tr_hat[arm] - gamma * math.sqrt(8.0 * log2d / c)
    return counts, devsum, sqdev


def _simulate_block_numpy(code, n, theta, chols, z, u, gamma, log2d, ddof, eps, target):
    B = z.shape[0]
    k = chols.shape[0]
    d = theta.shape[0]
    rows = np.arange(B)
    counts = np.zeros((B, k), dtype=np.int64)
    devsum = np.zeros((B, d))
    sqdev = np.zeros((B, k))
    mean = np.zeros((B, k, d))
    m2 = np.zeros((B, k, d))
    tr_hat = np.zeros((B, k))
    index = np.full((B, k), -np.inf)
    scalar = d == 1
    if scalar:
        scale = chols[:, 0, 0]

    for t in range(n):
        if code == LCB:
            arm = index.argmin(axis=1)
        elif code == UNIFORM:
            arm = np.full(B, t % k)
        elif code == ORACLE:
            arm = np.full(B, target)
        else:
            unpulled = counts == 0
            arm = np.where(unpulled.any(axis=1), unpulled.argmax(axis=1), tr_hat.argmin(axis=1))
            if code == EPSILON_GREEDY:
                ut = u[:, t]
                explore = ut < eps
                if explore.any():
                    rand_arm = np.minimum((ut[explore] / eps * k).astype(np.int64), k - 1)
                    arm = arm.copy()
                    arm[explore] = rand_arm

        if scalar:
            dev = (scale[arm] * z[:, t, 0])[:, None]
        else:
            dev = np.einsum("bjl,bl->bj", chols[arm], z[:, t, :])
        x = theta + dev
        devsum += dev
        sqdev[rows, arm] += (dev * dev).sum(axis=1)

        c = counts[rows, arm] + 1
        counts[rows, arm] = c
        mu = mean[rows, arm]
        delta = x - mu
        mu = mu + delta / c[:, None]
        mean[rows, arm] = mu
        s2 = m2[rows, arm] + delta * (x - mu)
        m2[rows, arm] = s2
        denom = c - ddof
        tr = np.where(denom > 0, s2.sum(axis=1) / np.maximum(denom, 1), 0.0)
        tr_hat[rows, arm] = tr
        if code == LCB:
            index[rows, arm] = tr - gamma * np.sqrt(8.0 * log2d / c)
    return counts, devsum, sqdev


def simulate_block(code, n, theta, chols, z, u=None, *, gamma=1.0, log2d=1.0,
                   ddof=0, eps=0.0, target=0, backend=None):
    """Run ``z.shape[0]`` independent episodes of horizon ``n``.

    ``z`` has shape (B, n, d); ``u`` (B, n) is only read by epsilon-greedy.
    """
    theta = np.ascontiguousarray(theta, dtype=np.float64)
    chols = np.ascontiguousarray(chols, dtype=np.float64)
    z = np.ascontiguousarray(z, dtype=np.float64)
    if u is None:
        u = np.zeros((z.shape[0], n))
    u = np.ascontiguousarray(u, dtype=np.float64)
    args = (int(code), int(n), theta, chols, z, u, float(gamma), float(log2d),
            int(ddof), float(eps), int(target))
    if _backend.resolve(backend) == "numba":
        return _simulate_block_numba(*args)
    return _simulate_block_numpy(*args)
