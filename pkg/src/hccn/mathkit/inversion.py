"""Numerical inversion of Laplace transforms along complex contours.

Two independent methods are provided: the fixed-Talbot contour of Abate and
Valko and the Euler-summed Bromwich series of Abate and Whitt. Talbot needs
``F`` on a contour that wraps the negative real axis, Euler only on a vertical
line with positive real part. Both accept vectors of evaluation times.
"""

from __future__ import annotations

import math
from functools import lru_cache

import numpy as np

from ..errors import InversionError

TALBOT_NODES = 48
EULER_TERMS = 16
# Second Euler setting, used to certify points where Talbot is rejected.
EULER_TERMS_ALT = 22
AGREEMENT = 1e-4


@lru_cache(maxsize=16)
def _talbot_contour(m: int):
    theta = np.arange(1, m) * math.pi / m
    cot = 1.0 / np.tan(theta)
    shape = theta * (cot + 1j)  # s_k / r
    sigma = theta + (theta * cot - 1.0) * cot
    return shape, 1.0 + 1j * sigma


@lru_cache(maxsize=16)
def _euler_weights(m: int):
    xi = np.empty(2 * m + 1)
    xi[0] = 0.5
    xi[1 : m + 1] = 1.0
    xi[2 * m] = 2.0**-m
    for k in range(1, m):
        xi[2 * m - k] = xi[2 * m - k + 1] + 2.0**-m * math.comb(m, k)
    k = np.arange(2 * m + 1)
    eta = (-1.0) ** k * xi
    beta = m * math.log(10.0) / 3.0 + 1j * math.pi * k
    return beta, eta


def talbot(F, t, nodes=TALBOT_NODES, log=False):
    """Fixed-Talbot inversion of ``F`` at times ``t > 0``.

    ``F`` is called once with an array of shape ``t.shape + (nodes,)``. With
    ``log=True`` it must return ``log F(s)``; the exponentials are then merged
    before evaluation, which keeps delayed or rapidly growing transforms finite
    on the left part of the contour.
    """
    t = np.asarray(t, dtype=float)
    if np.any(t <= 0):
        raise ValueError("talbot needs t > 0")
    r = 2.0 * nodes / (5.0 * t)
    shape, dweight = _talbot_contour(nodes)
    s = np.concatenate(
        [r[..., None].astype(complex), r[..., None] * shape], axis=-1
    )
    vals = np.asarray(F(s), dtype=complex)
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        if not log:
            vals = np.log(vals)
        expo = np.exp(t[..., None] * s + vals)
        head = 0.5 * expo[..., 0].real
        tail = (expo[..., 1:] * dweight).real.sum(axis=-1)
        return (r / nodes) * (head + tail)


def euler(F, t, terms=EULER_TERMS, log=False):
    """Abate-Whitt Euler inversion of ``F`` at times ``t > 0``."""
    t = np.asarray(t, dtype=float)
    if np.any(t <= 0):
        raise ValueError("euler needs t > 0")
    beta, eta = _euler_weights(terms)
    s = beta / t[..., None]
    vals = np.asarray(F(s), dtype=complex)
    if log:
        vals = np.exp(vals)
    return 10.0 ** (terms / 3.0) / t * (eta * vals.real).sum(axis=-1)


def inverse_laplace_cdf(F, x, *, log=False, nodes=TALBOT_NODES, terms=EULER_TERMS,
                        alt_terms=EULER_TERMS_ALT, agreement=AGREEMENT, cross_check=True):
    """CDF values from ``F(s) = L_X(s)/s`` at points ``x > 0``.

    ``log=True`` means ``F`` returns ``log(L_X(s)/s)`` (see :func:`talbot`).
    Talbot is the primary method and is accepted where Euler agrees with it to
    within ``agreement``. Where it does not (a transform whose continuation
    grows fast near the negative axis defeats the Talbot contour), Euler is
    used instead, certified by a second Euler setting with ``alt_terms``.
    :class:`InversionError` is raised when neither certificate holds.
    Results are clamped to [0, 1].
    """
    x = np.asarray(x, dtype=float)
    scalar = x.ndim == 0
    x = np.atleast_1d(x)
    out = talbot(F, x, nodes, log=log)
    if cross_check:
        other = euler(F, x, terms, log=log)
        gap = np.abs(out - other)
        bad = ~(gap <= agreement)
        if np.any(bad):
            alt = euler(F, x[bad], alt_terms, log=log)
            gap2 = np.abs(alt - other[bad])
            if not np.all(gap2 <= agreement):
                j = int(np.argmax(np.where(np.isfinite(gap2), gap2, np.inf)))
                xb = x[bad][j]
                raise InversionError(
                    f"inverse_laplace_cdf: inversion not certified at x={xb:.6g} "
                    f"(Euler settings differ by {gap2[j]:.3g})",
                    estimate=float(other[bad][j]), error=float(gap2[j]))
            out = np.where(bad, other, out)
    elif not np.all(np.isfinite(out)):
        raise InversionError("inverse_laplace_cdf: non-finite Talbot result")
    out = np.clip(out, 0.0, 1.0)
    return float(out[0]) if scalar else out
