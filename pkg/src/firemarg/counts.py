"""Zero-inflated negative binomial model for wildfire counts.

The pmf mixes a point mass at zero (weight pi) with a negative binomial
parameterized by mean mu and dispersion r:

    pmf(0) = pi + (1 - pi) * g(0)
    pmf(j) = (1 - pi) * g(j),  j >= 1
    g(j)   = Gamma(j + r) / (Gamma(r) j!) * (r/(r+mu))^r * (mu/(r+mu))^j

Everything is computed in log space. Fitting maximizes the likelihood
over (logit pi, log mu, log r) with a derivative-free simplex; small or
degenerate samples fall back to the empirical CDF.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize
from scipy.special import expit, gammaln, log_expit

from .errors import DataError

MIN_FIT = 10
MAX_ITER = 500
REL_LL_TOL = 1e-8

_PARAM_CLIP = (1e-3, 1e3)


@dataclass(frozen=True)
class ZinbParams:
    pi: float
    mu: float
    r: float

    def __post_init__(self):
        if not 0.0 <= self.pi <= 1.0:
            raise DataError(f"pi must lie in [0,1], got {self.pi}")
        if not (np.isfinite(self.mu) and self.mu > 0):
            raise DataError(f"mu must be finite positive, got {self.mu}")
        if not (np.isfinite(self.r) and self.r > 0):
            raise DataError(f"r must be finite positive, got {self.r}")


def _nb_log_pmf(j, mu: float, r: float):
    """log of the negative binomial pmf g(j) at integer j >= 0."""
    j = np.asarray(j, dtype=float)
    log_p = np.log(r) - np.log(r + mu)
    log_q = np.log(mu) - np.log(r + mu)
    return gammaln(j + r) - gammaln(r) - gammaln(j + 1.0) + r * log_p + j * log_q


def zinb_log_pmf(params: ZinbParams, j):
    """Log pmf at integer support points j (scalar or array)."""
    j = np.asarray(j)
    if np.any(j < 0) or np.any(j != np.floor(j)):
        raise DataError("support points must be nonnegative integers")
    log_g = _nb_log_pmf(j, params.mu, params.r)
    with np.errstate(divide="ignore"):
        log_pi = np.log(params.pi)
        log_1mpi = np.log1p(-params.pi)
    out = log_1mpi + log_g
    zero = np.asarray(j) == 0
    if np.any(zero):
        out = np.where(zero, np.logaddexp(log_pi, log_1mpi + log_g), out)
    return out


def zinb_pmf(params: ZinbParams, j):
    # extreme parameters can push the log above 0 through rounding
    return np.exp(np.minimum(zinb_log_pmf(params, j), 0.0))


def zinb_cdf(params: ZinbParams, u):
    """CDF at real thresholds u: sum of the pmf over j <= floor(u).

    Vectorized over u. Negative thresholds give 0. The summation stops
    once a geometric bound on the remaining tail mass drops below 1e-13,
    so very large u cost nothing extra.
    """
    u = np.asarray(u, dtype=float)
    scalar = u.ndim == 0
    u = np.atleast_1d(u)
    if np.any(np.isnan(u)):
        raise DataError("thresholds must not be NaN")
    kmax_arr = np.floor(u[u >= 0])
    out = np.zeros(u.shape)
    if kmax_arr.size == 0:
        return float(out[0]) if scalar else out
    kmax = int(kmax_arr.max())

    q = params.mu / (params.r + params.mu)
    # past the cap, pmf(j+1)/pmf(j) = q*(j+r)/(j+1) <= bound < 1 for j large
    cap = kmax
    if kmax > 256:
        j0 = 256
        while True:
            bound = q * max(1.0, (j0 + params.r) / (j0 + 1.0))
            if bound < 1.0:
                # tail beyond j0 <= pmf(j0) * bound / (1 - bound)
                tail = zinb_pmf(params, j0) * bound / (1.0 - bound)
                if tail < 1e-13:
                    cap = min(kmax, j0)
                    break
            if j0 >= kmax:
                cap = kmax
                break
            j0 = min(2 * j0, kmax)

    grid = np.arange(cap + 1)
    cum = np.cumsum(zinb_pmf(params, grid))
    k = np.floor(np.clip(u, -1.0, None)).astype(int)
    valid = k >= 0
    out[valid] = cum[np.minimum(k[valid], cap)]
    np.clip(out, 0.0, 1.0, out=out)
    return float(out[0]) if scalar else out


@dataclass(frozen=True)
class CountModel:
    """Fitted predictive distribution for counts.

    kind is "zinb" or "empirical"; empirical keeps the sorted sample and
    serves the step CDF. fallback_reason says why the parametric fit was
    skipped or rejected.
    """

    kind: str
    sample_size: int
    params: ZinbParams | None = None
    sample: np.ndarray | None = None
    loglik: float | None = None
    converged: bool = False
    fallback_reason: str | None = None

    def cdf(self, u):
        if self.kind == "zinb":
            return zinb_cdf(self.params, u)
        u = np.asarray(u, dtype=float)
        out = np.searchsorted(self.sample, u, side="right") / self.sample.size
        return float(out) if out.ndim == 0 else out


def _zinb_neg_loglik(theta, values, counts):
    pi_logit, log_mu, log_r = theta
    mu = np.exp(np.clip(log_mu, -700, 700))
    r = np.exp(np.clip(log_r, -700, 700))
    if not (np.isfinite(mu) and np.isfinite(r)) or mu <= 0 or r <= 0:
        return np.inf
    log_pi = log_expit(pi_logit)
    log_1mpi = log_expit(-pi_logit)
    log_g = _nb_log_pmf(values, mu, r)
    log_pmf = log_1mpi + log_g
    if values[0] == 0:
        log_pmf[0] = np.logaddexp(log_pi, log_1mpi + log_g[0])
    total = float(np.dot(counts, log_pmf))
    return np.inf if not np.isfinite(total) else -total


def _moment_start(values, counts):
    n = counts.sum()
    mean = float(np.dot(counts, values)) / n
    var = float(np.dot(counts, (values - mean) ** 2)) / n
    pos = values > 0
    n_pos = counts[pos].sum()
    mu0 = float(np.dot(counts[pos], values[pos])) / n_pos if n_pos else 1.0
    if var > mean > 0:
        r0 = mean ** 2 / (var - mean)
    else:
        r0 = _PARAM_CLIP[1]
    mu0 = float(np.clip(mu0, *_PARAM_CLIP))
    r0 = float(np.clip(r0, *_PARAM_CLIP))
    # zero fraction in excess of what the NB component explains
    g0 = np.exp(r0 * (np.log(r0) - np.log(r0 + mu0)))
    zero_frac = counts[values == 0].sum() / n if 0 in values else 0.0
    pi0 = (zero_frac - g0) / (1.0 - g0) if g0 < 1.0 else 0.5
    pi0 = float(np.clip(pi0, 1e-3, 1.0 - 1e-3))
    return np.array([np.log(pi0 / (1.0 - pi0)), np.log(mu0), np.log(r0)])


def fit_zinb(sample, min_fit: int = MIN_FIT) -> CountModel:
    """Maximum-likelihood ZINB fit with empirical fallback.

    Falls back when the sample has fewer than min_fit values, is all
    zeros, or the optimizer does not converge. The fit is deterministic:
    one moment-based start, no restarts.
    """
    sample = np.asarray(sample, dtype=float)
    if sample.size == 0:
        raise DataError("sample must be nonempty")
    if np.any(sample < 0) or np.any(sample != np.floor(sample)):
        raise DataError("counts must be nonnegative integers")
    sorted_sample = np.sort(sample)
    n = sample.size

    def empirical(reason):
        return CountModel(kind="empirical", sample_size=n,
                          sample=sorted_sample, fallback_reason=reason)

    if n < min_fit:
        return empirical("too few values")
    if sorted_sample[-1] == 0:
        return empirical("all zero")

    values, counts = np.unique(sample, return_counts=True)
    theta0 = _moment_start(values, counts)
    f0 = _zinb_neg_loglik(theta0, values, counts)
    res = minimize(
        _zinb_neg_loglik, theta0, args=(values, counts), method="Nelder-Mead",
        options={"maxiter": MAX_ITER, "xatol": 1e-6,
                 "fatol": REL_LL_TOL * max(1.0, abs(f0))})
    if not res.success or not np.isfinite(res.fun) or res.fun > f0:
        return empirical("optimizer did not converge")
    params = ZinbParams(pi=float(expit(res.x[0])),
                        mu=float(np.exp(res.x[1])),
                        r=float(np.exp(res.x[2])))
    return CountModel(kind="zinb", sample_size=n, params=params,
                      loglik=-float(res.fun), converged=True)


def sample_zinb(params: ZinbParams, n: int, rng) -> np.ndarray:
    """Draw n counts from the model (for simulation tests and synthesis)."""
    zeros = rng.random(n) < params.pi
    p = params.r / (params.r + params.mu)
    draws = rng.negative_binomial(params.r, p, size=n)
    draws[zeros] = 0
    return draws
