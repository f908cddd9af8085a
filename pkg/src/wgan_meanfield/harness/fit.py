"""Least-squares power-law fits on log-log axes."""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np


@dataclass(frozen=True)
class RateFit:
    xs: tuple[float, ...]
    ys: tuple[float, ...]
    slope: float
    intercept: float
    r_squared: float
    slope_stderr: float

    def to_dict(self) -> dict:
        d = asdict(self)
        d["xs"] = list(self.xs)
        d["ys"] = list(self.ys)
        return d


def fit_rate(xs, ys) -> RateFit:
    """Fit ``log y = intercept + slope * log x`` by ordinary least squares.

    ``slope_stderr`` is the usual OLS standard error (zero for an exact fit
    or when only two distinct points enter the regression).
    """
    x = np.asarray(xs, dtype=float)
    y = np.asarray(ys, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError("xs and ys must be 1-d arrays of equal length")
    if len(x) < 3:
        raise ValueError("need at least 3 points for a rate fit")
    if np.any(x <= 0) or np.any(y <= 0) or not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
        raise ValueError("rate fits need finite positive values")
    lx, ly = np.log(x), np.log(y)
    mx, my = lx.mean(), ly.mean()
    sxx = np.sum((lx - mx) ** 2)
    if sxx == 0:
        raise ValueError("xs must not all be equal")
    slope = np.sum((lx - mx) * (ly - my)) / sxx
    intercept = my - slope * mx
    resid = ly - (intercept + slope * lx)
    ss_res = float(np.sum(resid**2))
    ss_tot = float(np.sum((ly - my) ** 2))
    r2 = 1.0 if ss_tot == 0 else 1.0 - ss_res / ss_tot
    stderr = float(np.sqrt(ss_res / (len(x) - 2) / sxx))
    return RateFit(tuple(map(float, x)), tuple(map(float, y)), float(slope), float(intercept), float(r2), stderr)
