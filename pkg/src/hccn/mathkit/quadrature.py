"""Adaptive Gauss-Kronrod quadrature and fixed Gauss-Legendre rules."""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from ..errors import QuadratureError

# 15-point Kronrod extension of the 7-point Gauss rule (QUADPACK qk15).
_XGK = np.array([
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
])
_WGK = np.array([
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
])
_WG = np.array([
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
])

_NODES = np.concatenate([-_XGK[:-1], _XGK[::-1]])
_KWEIGHTS = np.concatenate([_WGK[:-1], _WGK[::-1]])
# Gauss nodes are the odd-indexed Kronrod nodes (x = xgk[1], xgk[3], ...).
_GWEIGHTS = np.zeros(15)
_GWEIGHTS[[1, 3, 5]] = _WG[:3]
_GWEIGHTS[7] = _WG[3]
_GWEIGHTS[[9, 11, 13]] = _WG[2::-1]


@dataclass(frozen=True)
class QuadResult:
    value: float
    error: float
    panels: int


def _panel(f, a, b):
    half = 0.5 * (b - a)
    mid = 0.5 * (a + b)
    x = mid + half * _NODES
    y = np.asarray(f(x), dtype=float)
    if y.shape != x.shape:
        y = np.broadcast_to(y, x.shape)
    kron = half * float(np.dot(_KWEIGHTS, y))
    gauss = half * float(np.dot(_GWEIGHTS, y))
    return kron, abs(kron - gauss), bool(np.all(np.isfinite(y)))


def integrate(f, a, b, tol=1e-10, *, rel_tol=0.0, singular_exponent=None,
              max_panels=2000, full_output=False):
    """Integrate ``f`` over ``[a, b]`` with globally adaptive GK15.

    ``f`` must accept a numpy array of abscissae. The endpoint ``a`` is never
    evaluated, so integrable singularities there are fine; when the leading
    behaviour ``f ~ (x - a)**p`` is known, pass ``singular_exponent=p`` and the
    integral is mapped through ``x = a + (b - a) t**(1/(1+p))`` which removes it.

    Stops when the summed panel error is below ``max(tol, rel_tol*|I|)``.
    Raises :class:`QuadratureError` (carrying the best estimate) otherwise.
    """
    a = float(a)
    b = float(b)
    if not a < b:
        if a == b:
            res = QuadResult(0.0, 0.0, 0)
            return res if full_output else 0.0
        raise ValueError(f"integrate needs a < b (got a={a}, b={b})")

    g = f
    lo, hi = a, b
    if singular_exponent is not None:
        p = float(singular_exponent)
        if not p > -1:
            raise ValueError("singular_exponent must be > -1 for an integrable endpoint")
        q = 1.0 / (1.0 + p)
        width = b - a

        def g(t):
            x = a + width * t**q
            return np.asarray(f(x), dtype=float) * (width * q) * t ** (q - 1.0)

        lo, hi = 0.0, 1.0

    val, err, ok = _panel(g, lo, hi)
    heap = [(-err, lo, hi, val, ok)]
    total, total_err = val, err
    n = 1
    while True:
        target = max(tol, rel_tol * abs(total))
        if total_err <= target and all(item[4] for item in heap):
            break
        if n >= max_panels:
            raise QuadratureError(
                f"integrate: no convergence after {n} panels on [{a}, {b}] "
                f"(estimate {total:.6g}, error {total_err:.3g})",
                estimate=total, error=total_err)
        neg_err, x0, x1, v, _ = heapq.heappop(heap)
        xm = 0.5 * (x0 + x1)
        if not (x0 < xm < x1):
            raise QuadratureError(
                f"integrate: panel collapsed near x={xm} (estimate {total:.6g})",
                estimate=total, error=total_err)
        v1, e1, ok1 = _panel(g, x0, xm)
        v2, e2, ok2 = _panel(g, xm, x1)
        total += v1 + v2 - v
        total_err += e1 + e2 + neg_err
        heapq.heappush(heap, (-e1, x0, xm, v1, ok1))
        heapq.heappush(heap, (-e2, xm, x1, v2, ok2))
        n += 1
    if not math.isfinite(total):
        raise QuadratureError("integrate: non-finite result", estimate=total, error=total_err)
    # Re-sum from the panels to shed accumulated rounding in the running total.
    total = math.fsum(item[3] for item in heap)
    total_err = math.fsum(-item[0] for item in heap)
    if full_output:
        return QuadResult(total, total_err, len(heap))
    return total


@lru_cache(maxsize=64)
def gauss_legendre(n: int):
    """Nodes and weights of the n-point Gauss-Legendre rule on [-1, 1]."""
    x, w = np.polynomial.legendre.leggauss(n)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def gl_nodes(a, b, n):
    """Gauss-Legendre abscissae and weights mapped to ``[a, b]``."""
    x, w = gauss_legendre(n)
    half = 0.5 * (b - a)
    return 0.5 * (a + b) + half * x, half * w


def composite_gl(edges, n):
    """Composite Gauss-Legendre rule over consecutive ``edges``.

    Returns flat arrays of abscissae and weights.
    """
    edges = np.asarray(edges, dtype=float)
    x, w = gauss_legendre(n)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    xs = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    ws = (half[:, None] * w[None, :]).ravel()
    return xs, ws
