"""Analytic coverage probability of the typical UE.

Per serving distance d00 the matched-Gamma serving power turns coverage into a
finite sum of Laplace-transform derivatives (small shape) or into the CDF of
the BS interference evaluated by numerical Laplace inversion (large shape).
The distance is then averaged against the nearest-BS density on the disk.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize
from scipy import special as sps

from .errors import IllConditionedError, NumericError, ParameterError
from .mathkit import (
    composite_gl, gamma_pdf, gl_nodes, integrate, inverse_laplace_cdf, log_bell_scaled,
)
from .moments import ApAggregates, MatchedGamma, SignalModel, ap_aggregates, matched_s0
from .params import DerivedParams, NetworkParams, check, derive

K_SWITCH = 40.0
DISTANCE_NODES = 64
# Bell partial sums are sums of non-negative terms; anything this large is garbage.
ILL_CONDITIONED = 10.0
# Absolute error target of the per-distance large-k convolution.
LARGE_K_TOL = 1e-6


class InterCellLaplace:
    """Exponent of the Laplace transform of inter-cell BS interference.

    ``exponent(c, d00) = 2 pi lambda_B * int_{d00}^{R} [(1 + c r^-alpha1)^-phi - 1] r dr``

    where ``c`` is the transform variable times the per-unit-gain power of an
    interfering cell. Coverage and rate share one instance so both evaluate the
    same numbers.
    """

    def __init__(self, lambda_B: float, alpha1: float, phi: float, radius: float,
                 panel_width: float = 0.5, panel_nodes: int = 16):
        self.lambda_B = lambda_B
        self.alpha1 = alpha1
        self.phi = phi
        self.radius = radius
        self.panel_width = panel_width
        self.panel_nodes = panel_nodes

    def integrand(self, r, c):
        return ((1.0 + c * r ** (-self.alpha1)) ** (-self.phi) - 1.0) * r

    def exponent(self, c: float, d00: float, rel_tol: float = 1e-9) -> float:
        """Adaptive-quadrature evaluation for one real ``c >= 0``."""
        if not 0 < d00 <= self.radius:
            raise ParameterError(f"d00 must lie in (0, R] (got {d00})")
        if c == 0 or d00 == self.radius or self.lambda_B == 0:
            return 0.0
        # Integrate in log r: the kernel turns over at r ~ c^(1/alpha1).
        a1, phi = self.alpha1, self.phi

        def f(u):
            r = np.exp(u)
            return np.expm1(-phi * np.log1p(c * r ** (-a1))) * r * r

        val = integrate(f, math.log(d00), math.log(self.radius), tol=1e-300,
                        rel_tol=rel_tol)
        return 2.0 * math.pi * self.lambda_B * val

    def exponent_many(self, c, d00: float):
        """Vectorised evaluation for an array of (possibly complex) ``c``.

        In u = log r the integrand has a pole at u_p - i eps/alpha1, with
        u_p = log|c|/alpha1 and eps = pi - |arg c|, which sits close to the real
        axis for inversion nodes near the negative real c axis. The map
        u = u_p + rho sinh(v) with rho the pole distance moves it to Im v = -pi/2
        for every node, so a uniform composite Gauss-Legendre rule in v works.
        """
        c = np.asarray(c)
        cplx = np.iscomplexobj(c)
        if self.lambda_B == 0 or d00 >= self.radius:
            return np.zeros(c.shape, dtype=complex if cplx else float)
        flat = c.ravel()
        lo, hi = math.log(d00), math.log(self.radius)
        with np.errstate(divide="ignore"):
            u_p = np.log(np.abs(flat)) / self.alpha1
        eps = math.pi - np.abs(np.angle(flat))
        centre = np.clip(u_p, lo, hi)
        rho = np.hypot(u_p - centre, eps / self.alpha1)
        rho = np.clip(np.nan_to_num(rho, posinf=1.0), 1e-12, 1.0)
        v_lo = np.arcsinh((lo - centre) / rho)
        v_hi = np.arcsinh((hi - centre) / rho)
        # Nodes close to the cut need many more panels; bucket by a power of two
        # so the rest do not pay for them.
        need = np.maximum(2, np.ceil((v_hi - v_lo) / self.panel_width))
        bucket = 2 ** np.ceil(np.log2(need)).astype(int)
        out = np.zeros(flat.shape, dtype=complex if cplx else float)
        for panels in np.unique(bucket):
            sel = bucket == panels
            t, w = composite_gl(np.linspace(0.0, 1.0, int(panels) + 1), self.panel_nodes)
            vals = self._kernel(flat[sel], u_p[sel], eps[sel], centre[sel], rho[sel],
                                v_lo[sel], v_hi[sel], t, cplx)
            out[sel] = vals @ w
        out = 2.0 * math.pi * self.lambda_B * out.reshape(c.shape)
        return out if cplx else out.real

    def _kernel(self, c, u_p, eps, centre, rho, v_lo, v_hi, t, cplx):
        v = v_lo[:, None] + (v_hi - v_lo)[:, None] * t
        offset = rho[:, None] * np.sinh(v)
        u = centre[:, None] + offset
        jac = (v_hi - v_lo)[:, None] * rho[:, None] * np.cosh(v)
        if cplx:
            # 1 + c e^{-alpha1 u} = 1 + e^{z}, z = alpha1 (u_p - u) + i arg c. Near the
            # cut 1 + e^{z} = -expm1(z -+ i pi) keeps its relative accuracy.
            with np.errstate(invalid="ignore"):
                du = (u_p - centre)[:, None] - offset
            psi = np.angle(c)[:, None]
            z = self.alpha1 * du + 1j * psi
            near_cut = np.abs(psi) > 0.5 * math.pi
            shifted = self.alpha1 * du - 1j * np.sign(psi) * eps[:, None]
            one_plus_x = np.where(near_cut, -np.expm1(shifted), 1.0 + np.exp(z))
            log_term = np.log(one_plus_x)
        else:
            log_term = np.log1p(c[:, None] * np.exp(-self.alpha1 * u))
        return np.expm1(-self.phi * log_term) * np.exp(2.0 * u) * jac


def nearest_bs_pdf(r, p: NetworkParams):
    """Density of the distance to the nearest BS, normalised to the disk."""
    r = np.asarray(r, dtype=float)
    if np.any((r < 0) | (r > p.radius)):
        raise ParameterError("nearest_bs_pdf: r must lie in [0, R]")
    lam = p.lambda_B
    p_area = -math.expm1(-lam * math.pi * p.radius**2)
    out = 2.0 * lam * math.pi * r * np.exp(-lam * math.pi * r * r) / p_area
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class CoverageContext:
    params: NetworkParams
    derived: DerivedParams
    T: float
    ap: ApAggregates
    signal: SignalModel
    intercell: InterCellLaplace
    k_switch: float = K_SWITCH
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    @classmethod
    def build(cls, p: NetworkParams, T: float, *, k_switch: float = K_SWITCH,
              ap: ApAggregates | None = None) -> "CoverageContext":
        """``T`` is the linear SINR threshold. ``ap`` overrides the AP means."""
        check(p, allow_no_aps=True)
        if not T > 0:
            raise ParameterError(f"SINR threshold must be > 0 (got {T})")
        d = derive(p)
        ap = ap_aggregates(p, d) if ap is None else ap
        sig = SignalModel.from_params(p, d, L_A=ap.L_A)
        ic = InterCellLaplace(p.lambda_B, p.alpha1, d.mean_ues_per_bs, p.radius)
        return cls(p, d, T, ap, sig, ic, k_switch)

    @property
    def I_e(self) -> float:
        return self.ap.I_e

    @property
    def phi(self) -> float:
        return self.derived.mean_ues_per_bs

    def matched(self, d00: float) -> MatchedGamma:
        key = ("s0", float(d00))
        if key not in self._cache:
            self._cache[key] = matched_s0(d00, self.signal)
        return self._cache[key]

    def T_theta(self, d00: float) -> float:
        """Threshold-scaled per-unit-gain BS power, T rho_B beta0 / theta_S0."""
        return self.T * self.derived.rho_B * self.derived.beta0 / self.matched(d00).theta


def laplace_y_ib0(s, d00, ctx: CoverageContext):
    a = ctx.T_theta(d00) * d00 ** (-ctx.params.alpha1)
    return (1.0 + np.asarray(s) * a) ** (1.0 - ctx.phi)


def laplace_y_ib(s, d00, ctx: CoverageContext):
    s = np.asarray(s, dtype=float)
    tt = ctx.T_theta(d00)
    if s.ndim == 0:
        return math.exp(ctx.intercell.exponent(float(s) * tt, d00))
    return np.exp(ctx.intercell.exponent_many(s * tt, d00))


def g_value(s: float, d00: float, ctx: CoverageContext) -> float:
    """g(s) = log of the transform whose derivatives give the coverage terms."""
    th = ctx.matched(d00).theta
    tt = ctx.T_theta(d00)
    a = tt * d00 ** (-ctx.params.alpha1)
    return (-s * ctx.T * ctx.I_e / th + (1.0 - ctx.phi) * math.log1p(s * a)
            + ctx.intercell.exponent(s * tt, d00))


def intra_cell_derivative(i: int, a: float, phi: float) -> float:
    """i-th derivative at s = 1 of (1 - phi) log(1 + s a)."""
    return (-1.0) ** (i - 1) * (1.0 - phi) * math.factorial(i - 1) * (a / (1.0 + a)) ** i


def _d3_derivative_magnitude(i: int, d00: float, ctx: CoverageContext) -> float:
    """|d^i D3/ds^i| at s = 1 (the sign is (-1)^i)."""
    ic = ctx.intercell
    if ic.lambda_B == 0 or d00 >= ic.radius:
        return 0.0
    tt = ctx.T_theta(d00)
    phi, a1 = ctx.phi, ic.alpha1
    log_poch = float(sps.gammaln(phi + i) - sps.gammaln(phi))

    def f(u):
        x = tt * np.exp(-a1 * u)
        return np.exp(log_poch + i * np.log(x) - (phi + i) * np.log1p(x) + 2.0 * u)

    val = integrate(f, math.log(d00), math.log(ic.radius), tol=1e-300, rel_tol=1e-10)
    return 2.0 * math.pi * ic.lambda_B * val


def g_derivative_magnitudes(n: int, d00: float, ctx: CoverageContext) -> np.ndarray:
    """|g^(i)(1)| for i = 1..n; every derivative has sign (-1)^i."""
    th = ctx.matched(d00).theta
    a = ctx.T_theta(d00) * d00 ** (-ctx.params.alpha1)
    out = np.empty(n)
    for i in range(1, n + 1):
        d2 = abs(intra_cell_derivative(i, a, ctx.phi))
        out[i - 1] = d2 + _d3_derivative_magnitude(i, d00, ctx)
    if n:
        out[0] += ctx.T * ctx.I_e / th
    return out


def g_derivatives(n: int, d00: float, ctx: CoverageContext) -> np.ndarray:
    """[d^i g / ds^i] at s = 1 for i = 1..n."""
    if n < 1:
        raise ParameterError("g_derivatives needs n >= 1")
    mags = g_derivative_magnitudes(n, d00, ctx)
    return mags * (-1.0) ** np.arange(1, n + 1)


def _bell_terms(d00: float, ctx: CoverageContext, n_terms: int) -> np.ndarray:
    """Terms ((-1)^i / i!) d^i/ds^i exp(g) at s = 1, i = 0..n_terms-1.

    Each equals exp(g(1)) B_i(|g'|, ..., |g^(i)|)/i! >= 0.
    """
    g1 = g_value(1.0, d00, ctx)
    mags = g_derivative_magnitudes(max(n_terms - 1, 0), d00, ctx)
    logc = log_bell_scaled(mags)
    return np.exp(g1 + logc[:n_terms])


def coverage_at_distance_bell(d00: float, ctx: CoverageContext, k_int: int) -> float:
    """Coverage given d00 for an integer serving-power shape ``k_int``."""
    if k_int < 0 or int(k_int) != k_int:
        raise ParameterError("k_int must be a non-negative integer")
    if k_int == 0:
        return 0.0
    terms = _bell_terms(d00, ctx, int(k_int))
    partial = np.cumsum(terms)
    if not np.all(np.isfinite(partial)) or np.max(np.abs(partial)) > ILL_CONDITIONED:
        raise IllConditionedError(
            f"Bell series ill-conditioned at d00={d00:.6g} (max partial sum "
            f"{np.max(np.abs(partial)):.3g})")
    return float(min(max(partial[-1], 0.0), 1.0))


def _ib_cdf(x, d00: float, ctx: CoverageContext):
    """CDF of the inter-cell interference power (watts) at ``x > 0``."""
    scale = ctx.derived.rho_B * ctx.derived.beta0
    ic = ctx.intercell

    def log_f(s):
        return ic.exponent_many(s * scale, d00) - np.log(s)

    return inverse_laplace_cdf(log_f, x, log=True)


def coverage_large_k(d00: float, ctx: CoverageContext) -> float:
    """Coverage given d00 with the serving power frozen at its mean."""
    mg = ctx.matched(d00)
    margin = mg.mean / ctx.T - ctx.ap.I_A_bar - ctx.derived.sigma2
    if margin <= 0:
        return 0.0
    shape = ctx.phi - 1.0
    if shape <= 0:
        return float(_ib_cdf(margin, d00, ctx))
    scale = float(ctx.derived.rho_B * ctx.signal.beta00(d00))
    # I_B0 mass beyond y_hi is below 1e-13, so the integral stops there.
    y_hi = min(margin, scale * float(sps.gammainccinv(shape, 1e-13)))
    floor = margin * 1e-14

    # Integrate the I_B0 density against F_IB(margin - y) directly in y.
    def f(y):
        return gamma_pdf(y, shape, scale) * _ib_cdf(np.maximum(margin - y, floor), d00, ctx)

    singular = None if float(shape).is_integer() else shape - 1.0
    val = integrate(f, 0.0, y_hi, tol=LARGE_K_TOL, rel_tol=0.0, singular_exponent=singular)
    return float(min(max(val, 0.0), 1.0))


def coverage_at_distance_detail(d00: float, ctx: CoverageContext):
    """(coverage, k_S0, path) where path is ``"bell"`` or ``"large-k"``."""
    if ctx.derived.rho_B == 0:
        # Serving power is the constant L_A^2 and there is no BS interference.
        return (1.0 if ctx.ap.L_A**2 > ctx.T * ctx.I_e else 0.0), math.inf, "deterministic"
    k = ctx.matched(d00).k
    if k >= ctx.k_switch:
        return coverage_large_k(d00, ctx), k, "large-k"
    lo, hi = math.floor(k), math.ceil(k)
    try:
        terms = _bell_terms(d00, ctx, hi) if hi > 0 else np.zeros(0)
        partial = np.concatenate([[0.0], np.cumsum(terms)])
        if not np.all(np.isfinite(partial)) or np.max(np.abs(partial)) > ILL_CONDITIONED:
            raise IllConditionedError(f"Bell series ill-conditioned at d00={d00:.6g}")
    except IllConditionedError:
        return coverage_large_k(d00, ctx), k, "large-k"
    if lo == hi:
        p = partial[hi]
    else:
        p = (hi - k) * partial[lo] + (k - lo) * partial[hi]
    return float(min(max(p, 0.0), 1.0)), k, "bell"


def coverage_at_distance(d00: float, ctx: CoverageContext) -> float:
    return coverage_at_distance_detail(d00, ctx)[0]


@dataclass(frozen=True)
class CoverageResult:
    value: float
    k_min: float
    k_max: float
    paths: tuple


def switch_distance(ctx: CoverageContext) -> float | None:
    """Serving distance where k_S0 crosses ``k_switch`` (None if it never does)."""
    R = ctx.params.radius
    lo = R * 1e-6

    def f(r):
        return ctx.matched(r).k - ctx.k_switch

    try:
        flo, fhi = f(lo), f(R)
    except NumericError:
        return None
    if flo * fhi >= 0:
        return None
    return float(optimize.brentq(f, lo, R, xtol=1e-9, rtol=1e-12))


def coverage_detail(ctx: CoverageContext, nodes: int = DISTANCE_NODES) -> CoverageResult:
    """Coverage averaged over the nearest-BS distance.

    Gauss-Legendre in d00, split where the evaluation path switches so the
    rule never straddles that discontinuity.
    """
    R = ctx.params.radius
    edges = [0.0, R]
    if ctx.derived.rho_B > 0:
        r_sw = switch_distance(ctx)
        if r_sw is not None:
            edges = [0.0, r_sw, R]
    total = 0.0
    ks, paths = [], set()
    for a, b in zip(edges[:-1], edges[1:]):
        r, w = gl_nodes(a, b, nodes)
        pdf = nearest_bs_pdf(r, ctx.params)
        vals = []
        for ri in r:
            pc, k, path = coverage_at_distance_detail(float(ri), ctx)
            vals.append(pc)
            ks.append(k)
            paths.add(path)
        total += math.fsum(np.asarray(vals) * pdf * w)
    return CoverageResult(
        value=float(min(max(total, 0.0), 1.0)),
        k_min=float(min(ks)), k_max=float(max(ks)), paths=tuple(sorted(paths)),
    )


def coverage(ctx: CoverageContext) -> float:
    return coverage_detail(ctx).value


def coverage_probability(p: NetworkParams, T: float, **kwargs) -> float:
    """Convenience wrapper: coverage for params ``p`` at linear threshold ``T``."""
    return coverage(CoverageContext.build(p, T, **kwargs))
