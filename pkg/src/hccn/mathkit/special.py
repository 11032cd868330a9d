"""Special functions used by the analytic engines."""

from __future__ import annotations

import math

import numpy as np
from scipy import special as sps

from ..errors import NumericError, ParameterError


def _check_gamma(k, theta):
    if not (k > 0 and theta > 0):
        raise ParameterError(f"Gamma shape and scale must be > 0 (got k={k}, theta={theta})")


def gamma_ccdf(y, k, theta):
    """P[X > y] for X ~ Gamma(shape k, scale theta).

    Integer shapes use the finite Poisson sum, evaluated in the log domain;
    other shapes use the regularized upper incomplete gamma function.
    """
    _check_gamma(k, theta)
    y = np.asarray(y, dtype=float)
    if np.any(y < 0):
        raise ParameterError("gamma_ccdf needs y >= 0")
    if float(k).is_integer() and k <= 1000:
        out = _poisson_sum(y / theta, int(k))
    else:
        out = sps.gammaincc(k, y / theta)
    return out if out.ndim else float(out)


def _poisson_sum(x, k):
    # sum_{i<k} x^i e^-x / i!, each term formed as exp(i log x - x - log i!)
    x = np.asarray(x, dtype=float)
    i = np.arange(k, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        logx = np.log(x)[..., None]
        logt = i * logx - x[..., None] - sps.gammaln(i + 1)
    # x == 0 gives 0*log(0) = nan for i == 0; the i == 0 term is e^-x.
    logt[..., 0] = -x
    return np.exp(logt).sum(axis=-1)


def gamma_cdf(y, k, theta):
    _check_gamma(k, theta)
    y = np.asarray(y, dtype=float)
    out = sps.gammainc(k, np.maximum(y, 0.0) / theta)
    return out if out.ndim else float(out)


def gamma_pdf(y, k, theta):
    _check_gamma(k, theta)
    y = np.asarray(y, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        logp = (k - 1) * np.log(y) - y / theta - sps.gammaln(k) - k * math.log(theta)
        out = np.where(y > 0, np.exp(logp), 0.0)
    return out if out.ndim else float(out)


def nakagami_mean(m, omega):
    """Mean of Nakagami(m, omega): Gamma(m + 1/2)/Gamma(m) * sqrt(omega/m)."""
    if not (m > 0 and omega > 0):
        raise ParameterError("nakagami_mean needs m > 0 and omega > 0")
    return math.exp(math.lgamma(m + 0.5) - math.lgamma(m)) * math.sqrt(omega / m)


def gamma_ratio(a, b):
    """Gamma(a) / Gamma(b) via log-gamma."""
    return math.exp(math.lgamma(a) - math.lgamma(b))


def log_rising(x, n):
    """log of the rising factorial x (x+1) ... (x+n-1) = Gamma(x+n)/Gamma(x)."""
    return sps.gammaln(x + n) - sps.gammaln(x)


def bell_complete(x):
    """Complete exponential Bell polynomial B_n(x_1, ..., x_n), n = len(x).

    Uses B_{m+1} = sum_k C(m, k) B_{m-k} x_{k+1}. Arithmetic follows the input
    type, so integer inputs give exact integers.
    """
    x = list(x)
    b = [1]
    for m in range(len(x)):
        b.append(sum(math.comb(m, k) * b[m - k] * x[k] for k in range(m + 1)))
    return b[len(x)]


def log_bell_scaled(a):
    """log(B_n(a_1..a_n)/n!) for n = 0..len(a), for non-negative ``a``.

    With c_n = B_n/n! the recurrence becomes
    c_{n+1} = (1/(n+1)) sum_k c_{n-k} a_{k+1}/k!, a sum of non-negative
    terms, so it is carried out entirely in the log domain.
    """
    a = np.asarray(a, dtype=float)
    if np.any(a < 0):
        raise ValueError("log_bell_scaled needs non-negative arguments")
    n = len(a)
    with np.errstate(divide="ignore"):
        la = np.log(a) - sps.gammaln(np.arange(1, n + 1))  # log(a_{k+1}/k!)
    logc = np.full(n + 1, -np.inf)
    logc[0] = 0.0
    for m in range(n):
        terms = logc[m::-1] + la[: m + 1]
        logc[m + 1] = sps.logsumexp(terms) - math.log(m + 1)
    return logc


def gauss_2f1(a, b, c, z, *, tol=1e-15, max_terms=200000):
    """Gauss hypergeometric 2F1(a, b; c; z) for real z < 1.

    Direct series for |z| <= 0.5. For z < -0.5 the Pfaff transformation
    2F1(a,b;c;z) = (1-z)^(-a) 2F1(a, c-b; c; z/(z-1)) maps onto (1/3, 1).
    """
    if c <= 0 and float(c).is_integer():
        raise ParameterError("gauss_2f1: c must not be a non-positive integer")
    z = float(z)
    if abs(z) <= 0.5:
        return _series_2f1(a, b, c, z, tol, max_terms)
    if z < -0.5:
        w = z / (z - 1.0)
        return (1.0 - z) ** (-a) * _series_2f1(a, c - b, c, w, tol, max_terms)
    raise ParameterError(f"gauss_2f1: z={z} outside supported region z <= 0.5")


def _series_2f1(a, b, c, z, tol, max_terms):
    term = 1.0
    total = 1.0
    comp = 0.0
    for n in range(max_terms):
        term *= (a + n) * (b + n) / ((c + n) * (n + 1)) * z
        # Kahan summation; slow tails near |z| -> 1 need many terms.
        y = term - comp
        t = total + y
        comp = (t - total) - y
        total = t
        if term == 0.0:
            return total
        if abs(term) <= tol * abs(total) and n > 2:
            # The remainder of a series with ratio r is bounded by |term| r/(1-r).
            ratio = abs((a + n + 1) * (b + n + 1) / ((c + n + 1) * (n + 2)) * z)
            if ratio < 1 and abs(term) * ratio / (1 - ratio) <= tol * abs(total):
                return total
    raise NumericError(f"gauss_2f1 series did not converge in {max_terms} terms (z={z})",
                       estimate=total)
