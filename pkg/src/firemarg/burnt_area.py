"""Semi-parametric distribution for burnt-area proportions.

The model glues three pieces along the sample: an atom at zero with
mass z, the empirical CDF of positive values up to a threshold u, and a
generalized Pareto tail above u:

    F(0)           = z
    F(x), 0<x<=u   = ((1 - lam - z) / F*(u)) * F*(x) + z
    F(x), x>u      = 1 - lam * (1 - H_u(x))

where lam = 1 - k2 is the exceedance probability, F* the ECDF of the
positive part, and H_u the GPD CDF of excesses. When the zero mass
already reaches the k2 level the threshold degenerates to 0 and the
fully empirical CDF is used instead.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize

from .errors import DataError, GpdFitError

MIN_EXCEED = 10
XI_LO, XI_HI = -1.0, 5.0
XI_EXP_EPS = 1e-8
MAX_ITER = 500


@dataclass(frozen=True)
class GpdParams:
    sigma: float
    xi: float
    threshold: float = 0.0

    def __post_init__(self):
        if not (np.isfinite(self.sigma) and self.sigma > 0):
            raise DataError(f"sigma must be finite positive, got {self.sigma}")
        if not np.isfinite(self.xi):
            raise DataError("xi must be finite")
        if self.threshold < 0:
            raise DataError("threshold must be nonnegative")

    @property
    def upper_endpoint(self) -> float:
        """Supremum of the support (finite only for xi < 0)."""
        if self.xi < 0:
            return self.threshold - self.sigma / self.xi
        return math.inf


def gpd_cdf(params: GpdParams, x):
    """GPD CDF H_u(x) = 1 - [1 + xi*(x-u)/sigma]_+^(-1/xi) for x >= u.

    |xi| below 1e-8 is routed to the exponential limit branch.
    """
    x = np.asarray(x, dtype=float)
    scalar = x.ndim == 0
    x = np.atleast_1d(x)
    if np.any(x < params.threshold):
        raise DataError("gpd_cdf requires x >= threshold")
    t = (x - params.threshold) / params.sigma
    if abs(params.xi) < XI_EXP_EPS:
        out = -np.expm1(-t)
    else:
        arg = 1.0 + params.xi * t
        out = np.where(arg > 0.0, 1.0 - np.power(np.maximum(arg, 1e-300), -1.0 / params.xi), 1.0)
    out = np.clip(out, 0.0, 1.0)
    return float(out[0]) if scalar else out


def _gpd_neg_loglik(theta, excess):
    log_sigma, xi = theta
    if not XI_LO < xi <= XI_HI:
        return np.inf
    sigma = np.exp(log_sigma)
    if not np.isfinite(sigma) or sigma <= 0:
        return np.inf
    t = excess / sigma
    if abs(xi) < XI_EXP_EPS:
        return excess.size * log_sigma + float(np.sum(t))
    arg = 1.0 + xi * t
    if np.any(arg <= 0.0):
        return np.inf
    return excess.size * log_sigma + (1.0 + 1.0 / xi) * float(np.sum(np.log(arg)))


def _pwm_start(excess):
    """Probability-weighted-moments estimate, clipped into the search box."""
    y = np.sort(excess)
    n = y.size
    a0 = y.mean()
    p = (np.arange(1, n + 1) - 0.35) / n
    a1 = float(np.sum(y * (1.0 - p))) / n
    denom = a0 - 2.0 * a1
    if denom <= 0:
        xi0, sigma0 = 0.0, a0
    else:
        xi0 = 2.0 - a0 / denom
        sigma0 = 2.0 * a0 * a1 / denom
    xi0 = float(np.clip(xi0, XI_LO + 0.05, XI_HI))
    sigma0 = max(sigma0, 1e-12)
    if xi0 < 0:
        # start must satisfy the support constraint 1 + xi*y/sigma > 0
        sigma0 = max(sigma0, -xi0 * y[-1] * 1.0001)
    return np.array([np.log(sigma0), xi0])


def fit_gpd(values, threshold: float, min_exceed: int = MIN_EXCEED) -> GpdParams:
    """MLE of (sigma, xi) on exceedances of the threshold.

    values must all lie strictly above the threshold. Raises GpdFitError
    when there are too few values or they are all identical; callers
    treat that as the signal to fall back to an empirical CDF.
    """
    values = np.asarray(values, dtype=float)
    if values.size < min_exceed:
        raise GpdFitError(f"need at least {min_exceed} exceedances, got {values.size}")
    if np.any(values <= threshold):
        raise DataError("exceedances must lie strictly above the threshold")
    excess = values - threshold
    if np.ptp(excess) == 0.0:
        raise GpdFitError("degenerate sample: all exceedances equal")

    theta0 = _pwm_start(excess)
    f0 = _gpd_neg_loglik(theta0, excess)
    res = minimize(
        _gpd_neg_loglik, theta0, args=(excess,), method="Nelder-Mead",
        options={"maxiter": MAX_ITER, "xatol": 1e-6,
                 "fatol": 1e-8 * max(1.0, abs(f0))})
    if not res.success or not np.isfinite(res.fun) or res.fun > f0:
        raise GpdFitError("optimizer did not converge")
    return GpdParams(sigma=float(np.exp(res.x[0])), xi=float(res.x[1]),
                     threshold=float(threshold))


@dataclass(frozen=True)
class BaMixture:
    """Fitted zero/bulk/tail mixture (kind "mixture") or its fully
    empirical fallback (kind "empirical")."""

    kind: str
    sample_size: int
    z: float
    u: float
    lam: float
    sample: np.ndarray            # full sorted sample (empirical CDF base)
    positives: np.ndarray | None = None   # sorted positive part (F*)
    gpd: GpdParams | None = None
    fallback_reason: str | None = None

    def _bulk_ecdf(self, x):
        return np.searchsorted(self.positives, x, side="right") / self.positives.size

    def cdf(self, x):
        """Model CDF at x >= 0 (scalar or array)."""
        x = np.asarray(x, dtype=float)
        scalar = x.ndim == 0
        x = np.atleast_1d(x)
        if np.any(x < 0):
            raise DataError("burnt-area proportions are nonnegative")
        if self.kind == "empirical":
            out = np.searchsorted(self.sample, x, side="right") / self.sample.size
            return float(out[0]) if scalar else out

        out = np.empty(x.shape)
        zero = x == 0.0
        bulk = (x > 0.0) & (x <= self.u)
        tail = x > self.u
        out[zero] = self.z
        if np.any(bulk):
            f_u = self._bulk_ecdf(self.u)
            out[bulk] = (1.0 - self.lam - self.z) / f_u * self._bulk_ecdf(x[bulk]) + self.z
        if np.any(tail):
            out[tail] = 1.0 - self.lam * (1.0 - gpd_cdf(self.gpd, x[tail]))
        out = np.clip(out, 0.0, 1.0)
        return float(out[0]) if scalar else out


def threshold_order_statistic(sorted_sample: np.ndarray, k2: float) -> float:
    """Left-continuous inverse-ECDF quantile: order statistic ceil(k2*n)."""
    n = sorted_sample.size
    idx = math.ceil(k2 * n - 1e-12)
    idx = min(max(idx, 1), n)
    return float(sorted_sample[idx - 1])


def fit_mixture(sample, k2: float, min_exceed: int = MIN_EXCEED) -> BaMixture:
    """Fit the zero/bulk/GPD mixture at non-exceedance level k2.

    Falls back to the full-sample empirical CDF when the zero mass
    reaches k2 (threshold degenerates to 0), when fewer than min_exceed
    values lie strictly above the threshold, or when the tail fit fails.
    """
    sample = np.asarray(sample, dtype=float)
    if sample.size == 0:
        raise DataError("sample must be nonempty")
    if np.any(sample < 0) or np.any(sample > 1) or np.any(~np.isfinite(sample)):
        raise DataError("burnt-area proportions must lie in [0, 1]")
    if not 0.0 < k2 < 1.0:
        raise DataError(f"k2 must lie in (0,1), got {k2}")

    srt = np.sort(sample)
    n = srt.size
    z = float(np.count_nonzero(srt == 0.0)) / n
    lam = 1.0 - k2
    u = threshold_order_statistic(srt, k2)

    def empirical(reason):
        return BaMixture(kind="empirical", sample_size=n, z=z, u=u, lam=lam,
                         sample=srt, fallback_reason=reason)

    # u == 0 exactly when the zero count reaches the k2 order statistic
    if u <= 0.0:
        return empirical("zero mass at or above the k2 level")
    exceed = srt[srt > u]
    if exceed.size < min_exceed:
        return empirical("too few exceedances")
    try:
        gpd = fit_gpd(exceed, threshold=u, min_exceed=min_exceed)
    except GpdFitError as exc:
        return empirical(str(exc))
    positives = srt[srt > 0.0]
    return BaMixture(kind="mixture", sample_size=n, z=z, u=u, lam=lam,
                     sample=srt, positives=positives, gpd=gpd)


def sample_gpd(params: GpdParams, n: int, rng) -> np.ndarray:
    """Inverse-CDF draws of exceedance values (threshold + excess)."""
    v = rng.random(n)
    if abs(params.xi) < XI_EXP_EPS:
        excess = -params.sigma * np.log1p(-v)
    else:
        excess = params.sigma / params.xi * ((1.0 - v) ** (-params.xi) - 1.0)
    return params.threshold + excess
