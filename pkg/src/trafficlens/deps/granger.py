"""Pairwise Granger causality via nested-OLS F-tests.

Restricted model regresses y on its own L lags; the unrestricted model adds
L lags of x. F = ((RSS_r - RSS_u) / L) / (RSS_u / (n - 2L - 1)) with n the
usable row count, referred to an F(L, n - 2L - 1) distribution. L is picked
by information criterion on the unrestricted model (BIC by default, which
keeps the white-noise rejection rate at the nominal 5%).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import stats


class UntestableError(ValueError):
    """Regression is rank-deficient (e.g. a constant series)."""


@dataclass(frozen=True)
class CausalityResult:
    cause: str
    effect: str
    lag: int
    f_value: float
    dof: tuple[int, int]
    p_value: float

    @property
    def displayable(self) -> bool:
        return self.p_value < 0.05

    def display(self) -> str:
        """Render like ``F[6,268]=16.2, p=0.001``."""
        p = f"p={self.p_value:.3f}" if self.p_value >= 0.0005 else "p<0.001"
        return f"F[{self.dof[0]},{self.dof[1]}]={self.f_value:.1f}, {p}"

    def to_dict(self) -> dict:
        return {
            "cause": self.cause,
            "effect": self.effect,
            "lag": self.lag,
            "f_value": self.f_value,
            "dof": list(self.dof),
            "p_value": self.p_value,
            "display": self.display(),
        }


def _design(y: np.ndarray, x: np.ndarray, lag: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Build restricted/unrestricted design matrices for one lag order."""
    n = len(y)
    rows = n - lag
    xr = np.ones((rows, 1 + lag))
    xu = np.ones((rows, 1 + 2 * lag))
    for k in range(1, lag + 1):
        xr[:, k] = y[lag - k : n - k]
        xu[:, k] = y[lag - k : n - k]
        xu[:, lag + k] = x[lag - k : n - k]
    return xr, xu, y[lag:]


def _rss(design: np.ndarray, target: np.ndarray) -> float:
    beta, _, rank, _ = np.linalg.lstsq(design, target, rcond=None)
    if rank < design.shape[1]:
        raise UntestableError("rank-deficient regressors (constant or collinear series)")
    resid = target - design @ beta
    return float(resid @ resid)


def granger_test(
    x: np.ndarray,
    y: np.ndarray,
    max_lag: int = 12,
    cause: str = "x",
    effect: str = "y",
    ic: str = "bic",
) -> CausalityResult:
    """Test whether past x improves prediction of y beyond y's own past."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError("series must be 1-d and equal length")
    if len(y) <= 3 * max_lag:
        raise ValueError(f"need more than {3 * max_lag} points, got {len(y)}")
    if ic not in ("aic", "bic"):
        raise ValueError(f"unknown information criterion {ic!r}")

    best_lag, best_ic = 1, np.inf
    for lag in range(1, max_lag + 1):
        _, xu, target = _design(y, x, lag)
        rss_u = _rss(xu, target)
        n = len(target)
        k = 1 + 2 * lag
        penalty = 2.0 * k if ic == "aic" else k * np.log(n)
        crit = n * np.log(max(rss_u, 1e-300) / n) + penalty
        if crit < best_ic:
            best_ic, best_lag = crit, lag

    lag = best_lag
    xr, xu, target = _design(y, x, lag)
    rss_r = _rss(xr, target)
    rss_u = _rss(xu, target)
    n = len(target)
    dof2 = n - 2 * lag - 1
    f = max(0.0, ((rss_r - rss_u) / lag) / (rss_u / dof2))
    p = float(stats.f.sf(f, lag, dof2))
    return CausalityResult(cause=cause, effect=effect, lag=lag, f_value=f, dof=(lag, dof2), p_value=p)


def causality_scan(
    target: str,
    candidates: list[str],
    series: dict[str, np.ndarray],
    max_lag: int = 12,
) -> list[CausalityResult]:
    """Test candidate -> target for each candidate, keep p < 0.05, sort by F desc.

    Untestable candidates (constant series) are skipped.
    """
    if not candidates:
        raise ValueError("candidates must be non-empty")
    results = []
    y = series[target]
    for cand in candidates:
        if cand == target:
            continue
        try:
            r = granger_test(series[cand], y, max_lag=max_lag, cause=cand, effect=target)
        except UntestableError:
            continue
        if r.displayable:
            results.append(r)
    results.sort(key=lambda r: (-r.f_value, r.cause))
    return results
