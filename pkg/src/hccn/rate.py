"""Analytic ergodic rate E[ln(1 + SINR)] of the typical UE (nats/s/Hz).

Uses ln(1 + S/I) = int_0^inf (e^{-sI} - e^{-s(S+I)})/s ds with the AP terms at
their means, so per serving distance

    R(d00) = int_0^inf e^{-s I_e}/s * L_IB(s) [L_IB0(s) - L_SI(s)] ds

where S_I = S0 + I_B0 is replaced by its moment-matched Gamma law.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize
from scipy import special as sps

from .coverage import InterCellLaplace, nearest_bs_pdf
from .errors import ParameterError
from .mathkit import composite_gl, gauss_2f1, gl_nodes
from .moments import ApAggregates, MatchedGamma, SignalModel, ap_aggregates, matched_si, s0_moments
from .params import DerivedParams, NetworkParams, check, derive

DISTANCE_NODES = 64
TAIL_TOL = 1e-8
HEAD_TOL = 1e-6
PANEL_NODES = 16


@dataclass(frozen=True)
class RateContext:
    params: NetworkParams
    derived: DerivedParams
    ap: ApAggregates
    signal: SignalModel
    intercell: InterCellLaplace
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    @classmethod
    def build(cls, p: NetworkParams, *, ap: ApAggregates | None = None) -> "RateContext":
        check(p, allow_no_aps=True)
        d = derive(p)
        ap = ap_aggregates(p, d) if ap is None else ap
        sig = SignalModel.from_params(p, d, L_A=ap.L_A)
        ic = InterCellLaplace(p.lambda_B, p.alpha1, d.mean_ues_per_bs, p.radius)
        return cls(p, d, ap, sig, ic)

    @property
    def I_e(self) -> float:
        return self.ap.I_e

    def matched_si(self, d00: float) -> MatchedGamma:
        key = ("si", float(d00))
        if key not in self._cache:
            self._cache[key] = matched_si(d00, self.signal)
        return self._cache[key]


def laplace_ib(s, d00, ctx: RateContext):
    c = np.asarray(s, dtype=float) * ctx.derived.rho_B * ctx.derived.beta0
    return np.exp(ctx.intercell.exponent_many(c, d00))


def intercell_exponent_2f1(s: float, d00: float, ctx: RateContext) -> float:
    """log L_IB(s) through the hypergeometric antiderivative.

    r^2/2 * 2F1(-2/alpha1, phi; 1 - 2/alpha1; -c r^-alpha1) is an antiderivative
    of r (1 + c r^-alpha1)^-phi; independent of the quadrature route.
    """
    a1 = ctx.params.alpha1
    phi = ctx.derived.mean_ues_per_bs
    c = s * ctx.derived.rho_B * ctx.derived.beta0
    delta = 2.0 / a1

    def G(r):
        return 0.5 * r * r * (gauss_2f1(-delta, phi, 1.0 - delta, -c * r ** (-a1)) - 1.0)

    return 2.0 * math.pi * ctx.params.lambda_B * (G(ctx.params.radius) - G(d00))


def laplace_ib0(s, d00, ctx: RateContext):
    b = ctx.derived.rho_B * ctx.signal.beta00(d00)
    return (1.0 + np.asarray(s, dtype=float) * b) ** (1.0 - ctx.derived.mean_ues_per_bs)


def _log_laplace_si(s, d00, ctx: RateContext):
    s = np.asarray(s, dtype=float)
    if ctx.derived.rho_B == 0:
        # No BS power: S_I is the constant L_A^2.
        return -s * ctx.ap.L_A**2
    mg = ctx.matched_si(d00)
    return -mg.k * np.log1p(s * mg.theta)


def laplace_si(s, d00, ctx: RateContext):
    return np.exp(_log_laplace_si(s, d00, ctx))


def _signal_gap(s, d00, ctx: RateContext):
    """L_IB0(s) - L_SI(s), formed from the log ratio to keep small-s digits."""
    s = np.asarray(s, dtype=float)
    b = ctx.derived.rho_B * ctx.signal.beta00(d00)
    log_ib0 = (1.0 - ctx.derived.mean_ues_per_bs) * np.log1p(s * b)
    return -np.exp(log_ib0) * np.expm1(_log_laplace_si(s, d00, ctx) - log_ib0)


def s_range(d00: float, ctx: RateContext) -> tuple[float, float]:
    """Integration window [s_lo, s_max] for the rate integral.

    Beyond s_max the integrand is below e^{-s I_e}/s, whose tail integral
    E1(s_max I_e) is under TAIL_TOL. Below s_lo the integrand equals E[S0] to
    relative O(s E[S0]), so that piece is added in closed form.
    """
    x = optimize.brentq(lambda v: sps.exp1(v) - TAIL_TOL, 1e-3, 50.0)
    if ctx.I_e <= 0:
        raise ParameterError("rate needs I_e > 0 (noise power must be positive)")
    s_max = x / ctx.I_e
    m1 = s0_moments(d00, ctx.signal)[0]
    s_lo = HEAD_TOL * s_max
    if m1 > 0:
        s_lo = min(s_lo, HEAD_TOL / m1)
    return s_lo, s_max


def rate_at_distance(d00: float, ctx: RateContext) -> float:
    if not 0 < d00 <= ctx.params.radius:
        raise ParameterError(f"d00 must lie in (0, R] (got {d00})")
    if ctx.derived.rho_B == 0 and ctx.ap.L_A == 0:
        return 0.0
    s_lo, s_max = s_range(d00, ctx)
    m1 = s0_moments(d00, ctx.signal)[0]
    # Geometric panels, one per e-fold; in log s the integrand is smooth.
    lo, hi = math.log(s_lo), math.log(s_max)
    panels = max(4, math.ceil(hi - lo))
    u, w = composite_gl(np.linspace(lo, hi, panels + 1), PANEL_NODES)
    s = np.exp(u)
    vals = np.exp(-s * ctx.I_e) * laplace_ib(s, d00, ctx) * _signal_gap(s, d00, ctx)
    return float(m1 * s_lo + math.fsum(vals * w))


@dataclass(frozen=True)
class RateResult:
    value: float
    k_min: float
    k_max: float


def rate_detail(ctx: RateContext, nodes: int = DISTANCE_NODES) -> RateResult:
    R = ctx.params.radius
    r, w = gl_nodes(0.0, R, nodes)
    pdf = nearest_bs_pdf(r, ctx.params)
    vals = np.array([rate_at_distance(float(ri), ctx) for ri in r])
    if ctx.derived.rho_B > 0:
        ks = [ctx.matched_si(float(ri)).k for ri in r]
    else:
        ks = [math.inf]
    return RateResult(float(math.fsum(vals * pdf * w)), float(min(ks)), float(max(ks)))


def rate(ctx: RateContext) -> float:
    return rate_detail(ctx).value


def ergodic_rate(p: NetworkParams, **kwargs) -> float:
    return rate(RateContext.build(p, **kwargs))
