"""Regret of the final estimate and its two decompositions.

For Gaussian arms and the plain sample mean, the expected squared error is
``sum_i Tr(Sigma_i) E[T_i] / n**2``, so the regret can be read off the pull
counts alone (``count_based_regret``). That form is far less noisy than the
direct squared-error estimate (``mse_based_regret``) and is the primary one;
the latter is kept as an independent cross-check.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .environment import EnvironmentSpec, GapProfile, fisher_info, gap_profile
from .errors import CountMismatch, Singular

_NAN = float("nan")


@dataclass(frozen=True)
class RegretReport:
    n: int
    replications: int
    count_based_regret: float
    mse_based_regret: float
    # second decomposition: information shortfall + estimator inefficiency
    r_info: float
    r_estimator: float
    # first decomposition
    dec1_estimator_term: float
    dec1_second_term: float
    mean_counts: tuple
    count_based_se: float = _NAN
    mse_based_se: float = _NAN
    r_info_se: float = _NAN
    r_estimator_se: float = _NAN

    def to_dict(self) -> dict:
        out = asdict(self)
        out["mean_counts"] = list(self.mean_counts)
        return out


def _gaps(profile) -> np.ndarray:
    if isinstance(profile, GapProfile):
        return np.asarray(profile.gaps, dtype=float)
    return np.asarray(profile, dtype=float)


def _check_counts(mean_counts, n, tol=1e-9):
    total = float(np.sum(mean_counts))
    if abs(total - n) > tol * max(1.0, n):
        raise CountMismatch(f"counts sum to {total}, expected {n}")


def count_based_regret(profile, mean_counts, n: int) -> float:
    """``sum_i gap_i * E[T_i(n)] / n**2``."""
    mean_counts = np.asarray(mean_counts, dtype=float)
    _check_counts(mean_counts, n)
    return float(np.dot(_gaps(profile), mean_counts)) / n ** 2


def mse_based_regret(theta_hats, theta, optimal_trace: float, n: int):
    """Empirical ``E||theta_hat - theta||^2 - Tr(Sigma*)/n`` and its standard error."""
    theta_hats = np.asarray(theta_hats, dtype=float)
    if theta_hats.ndim == 1:
        theta_hats = theta_hats[:, None]
    err = theta_hats - np.atleast_1d(np.asarray(theta, dtype=float))
    return _mse_from_squared(np.einsum("rj,rj->r", err, err), optimal_trace, n)


def _mse_from_squared(sq_errors, optimal_trace, n):
    sq_errors = np.asarray(sq_errors, dtype=float)
    if sq_errors.shape[0] < 2:
        raise ValueError("need at least two replications")
    mse = float(sq_errors.mean())
    se = float(sq_errors.std(ddof=1) / math.sqrt(sq_errors.shape[0]))
    return mse - optimal_trace / n, se


def _aggregate_information(fisher_infos, mean_counts):
    total = sum(c * np.asarray(info, dtype=float) for c, info in zip(mean_counts, fisher_infos))
    try:
        inv = np.linalg.inv(np.atleast_2d(total))
    except np.linalg.LinAlgError as exc:
        raise Singular(f"aggregated Fisher information is singular: {exc}") from None
    if not np.all(np.isfinite(inv)):
        raise Singular("aggregated Fisher information is singular")
    return inv


def decomposition_report(profile: GapProfile, fisher_infos, mean_counts, mse: float, n: int,
                         replications: int = 0) -> RegretReport:
    """Point estimates of every regret field from averaged counts and the empirical MSE.

    ``fisher_infos`` are the per-arm inverse covariances. The first
    decomposition prices each pull at Tr(Sigma_i), which is Gaussian-specific.
    """
    mean_counts = np.asarray(mean_counts, dtype=float)
    _check_counts(mean_counts, n)
    inv_total = _aggregate_information(fisher_infos, mean_counts)
    # Tr((n I*)^{-1}) = Tr(Sigma*)/n for Gaussian arms
    cr_value = profile.optimal_trace / n
    info_term = float(np.trace(inv_total))
    cov_traces = profile.gaps + profile.optimal_trace
    pulled_trace = float(np.dot(mean_counts, cov_traces)) / n ** 2
    return RegretReport(
        n=n,
        replications=replications,
        count_based_regret=count_based_regret(profile, mean_counts, n),
        mse_based_regret=mse - profile.optimal_trace / n,
        r_info=info_term - cr_value,
        r_estimator=mse - info_term,
        dec1_estimator_term=mse - pulled_trace,
        dec1_second_term=pulled_trace - profile.optimal_trace / n,
        mean_counts=tuple(float(c) for c in mean_counts),
    )


def summarize(env: EnvironmentSpec, counts, sq_errors, n: int) -> RegretReport:
    """Full report with standard errors from per-replication counts and squared errors.

    Errors for the information terms use the delta method on the mean counts.
    """
    counts = np.asarray(counts, dtype=float)
    sq_errors = np.asarray(sq_errors, dtype=float)
    R = counts.shape[0]
    if R < 2:
        raise ValueError("need at least two replications")
    profile = gap_profile(env)
    infos = [fisher_info(env, i) for i in range(env.k)]
    mean_counts = counts.mean(axis=0)
    point = decomposition_report(profile, infos, mean_counts, float(sq_errors.mean()), n, R)

    root = math.sqrt(R)
    per_rep = counts @ profile.gaps / n ** 2
    inv_total = _aggregate_information(infos, mean_counts)
    grad = np.array([-np.trace(inv_total @ info @ inv_total) for info in infos])
    lin = (counts - mean_counts) @ grad
    return RegretReport(**{
        **point.__dict__,
        "count_based_se": float(per_rep.std(ddof=1) / root),
        "mse_based_se": float(sq_errors.std(ddof=1) / root),
        "r_info_se": float(lin.std(ddof=1) / root),
        "r_estimator_se": float((sq_errors - lin).std(ddof=1) / root),
    })


def summarize_batch(env: EnvironmentSpec, batch) -> RegretReport:
    return summarize(env, batch.counts, batch.squared_errors, batch.n)
