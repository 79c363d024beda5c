"""Least-squares fits of log regret against log horizon."""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from ..errors import NonPositiveRegret

CORRECTIONS = ("none", "sqrtlog")


@dataclass(frozen=True)
class SlopeFit:
    log_n: tuple
    log_regret: tuple
    slope: float
    intercept: float
    slope_se: float
    correction: str = "none"
    dropped: tuple = ()

    def to_dict(self) -> dict:
        return {
            "slope": self.slope, "intercept": self.intercept, "slope_se": self.slope_se,
            "correction": self.correction, "points": len(self.log_n),
            "dropped_n": list(self.dropped),
        }


def _points(rows, column):
    out = []
    for row in rows:
        if isinstance(row, dict):
            out.append((float(row["n"]), float(row[column])))
        else:
            n, value = row
            out.append((float(n), float(value)))
    return out


def fit_slope(rows, correction: str = "none", column: str = "count_based_regret") -> SlopeFit:
    """Fit ``log regret = slope * log n + intercept``.

    With ``correction="sqrtlog"`` the response is ``log regret - 0.5 log log n``,
    which removes a ``sqrt(log n)`` factor from the growth rate. Rows are dicts
    with ``n`` and ``column`` or plain ``(n, regret)`` pairs. Non-positive
    regrets are dropped with a warning; fewer than three usable points is an
    error.
    """
    if correction not in CORRECTIONS:
        raise ValueError(f"correction must be one of {CORRECTIONS}")
    pts = _points(rows, column)
    kept = [(n, r) for n, r in pts if r > 0]
    dropped = tuple(int(n) for n, r in pts if not r > 0)
    if dropped:
        if len(kept) < 3:
            raise NonPositiveRegret(f"non-positive regret at n={list(dropped)}; fewer than 3 points remain")
        warnings.warn(f"dropping non-positive regret at n={list(dropped)}", stacklevel=2)
    if len(kept) < 3:
        raise ValueError(f"need at least 3 grid points, got {len(kept)}")
    n = np.array([p[0] for p in kept])
    x = np.log(n)
    y = np.log([p[1] for p in kept])
    if correction == "sqrtlog":
        y = y - 0.5 * np.log(x)
    xm, ym = x.mean(), y.mean()
    sxx = np.sum((x - xm) ** 2)
    slope = float(np.sum((x - xm) * (y - ym)) / sxx)
    intercept = float(ym - slope * xm)
    resid = y - (intercept + slope * x)
    dof = len(x) - 2
    slope_se = math.sqrt(float(np.sum(resid ** 2)) / dof / sxx) if dof > 0 else math.nan
    return SlopeFit(log_n=tuple(x.tolist()), log_regret=tuple(y.tolist()), slope=slope,
                    intercept=intercept, slope_se=slope_se, correction=correction, dropped=dropped)
