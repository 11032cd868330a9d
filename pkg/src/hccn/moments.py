"""Mean AP terms, serving-signal moments and Gamma moment matching."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateDistributionError, ParameterError
from .mathkit import gamma_ratio
from .params import DerivedParams, NetworkParams, derive


@dataclass(frozen=True)
class MatchedGamma:
    k: float
    theta: float

    @property
    def mean(self) -> float:
        return self.k * self.theta

    @property
    def variance(self) -> float:
        return self.k * self.theta**2


@dataclass(frozen=True)
class ApAggregates:
    """Mean amplitude of the AP signal sum, mean AP interference, and I_A + noise."""

    L_A: float
    I_A_bar: float
    I_e: float


def mean_ap_signal(d: DerivedParams, p: NetworkParams) -> float:
    """Mean coherent AP amplitude sqrt(rho_A) * E[sum_j ||g_j0||] (sqrt-watts).

    Campbell's theorem over the disk with the Nakagami mean of each
    ``||g_j0||``; finite only for ``alpha2 < 4``.
    """
    if not p.alpha2 < 4:
        raise ParameterError(f"mean_ap_signal needs alpha2 < 4 (got {p.alpha2})")
    if p.lambda_A == 0 or d.rho_A == 0:
        return 0.0
    return (
        4.0 * math.pi * math.sqrt(d.rho_A) * p.lambda_A * math.sqrt(d.delta0)
        / (4.0 - p.alpha2)
        * gamma_ratio(p.N_A + 0.5, p.N_A)
        * (d.area / math.pi) ** (1.0 - p.alpha2 / 4.0)
    )


def mean_ap_interference(d: DerivedParams, p: NetworkParams) -> float:
    """Mean power leaked by AP beams aimed at the other UEs (watts)."""
    if not p.alpha2 < 2:
        raise ParameterError(f"mean_ap_interference needs alpha2 < 2 (got {p.alpha2})")
    others = p.lambda_U * d.area - 1.0
    if others < 0:
        raise ParameterError("mean_ap_interference needs lambda_U * area >= 1")
    return (
        2.0 * math.pi * d.rho_A * p.lambda_A * d.delta0 * others
        / (2.0 - p.alpha2)
        * (d.area / math.pi) ** (1.0 - p.alpha2 / 2.0)
    )


def ap_aggregates(p: NetworkParams, d: DerivedParams | None = None) -> ApAggregates:
    d = derive(p) if d is None else d
    ia = mean_ap_interference(d, p)
    return ApAggregates(L_A=mean_ap_signal(d, p), I_A_bar=ia, I_e=ia + d.sigma2)


@dataclass(frozen=True)
class SignalModel:
    """Per-distance inputs of the serving-signal moments.

    ``phi`` is the mean number of UEs per BS (real valued).
    """

    rho_B: float
    beta0: float
    alpha1: float
    N_B: int
    L_A: float
    phi: float

    @classmethod
    def from_params(cls, p: NetworkParams, d: DerivedParams | None = None,
                    L_A: float | None = None) -> "SignalModel":
        d = derive(p) if d is None else d
        if L_A is None:
            L_A = mean_ap_signal(d, p)
        return cls(rho_B=d.rho_B, beta0=d.beta0, alpha1=p.alpha1, N_B=p.N_B,
                   L_A=L_A, phi=d.mean_ues_per_bs)

    def beta00(self, d00):
        d00 = np.asarray(d00, dtype=float)
        if np.any(d00 <= 0):
            raise ParameterError("serving distance d00 must be > 0")
        return self.beta0 * d00 ** (-self.alpha1)


def _ret(x):
    return float(x) if np.ndim(x) == 0 else x


def s0_moments(d00, ctx: SignalModel):
    """(E[S0], E[S0^2]) of the serving power (sqrt(rho_B)||h00|| + L_A)^2."""
    b = ctx.beta00(d00)
    rb, L, N = ctx.rho_B, ctx.L_A, ctx.N_B
    g1 = gamma_ratio(N + 0.5, N)
    g3 = gamma_ratio(N + 1.5, N)
    amp = np.sqrt(rb * b)
    m1 = rb * b * N + 2.0 * amp * L * g1 + L**2
    m2 = (
        (rb * b) ** 2 * N * (N + 1)
        + 4.0 * amp**3 * L * g3
        + 6.0 * rb * b * L**2 * N
        + 4.0 * amp * L**3 * g1
        + L**4
    )
    return _ret(m1), _ret(m2)


def si_moments(d00, ctx: SignalModel):
    """(E[S_I], E[S_I^2]) of S_I = S0 + I_B0, including their correlation via h00."""
    b = ctx.beta00(d00)
    rb, L, N, phi = ctx.rho_B, ctx.L_A, ctx.N_B, ctx.phi
    g1 = gamma_ratio(N + 0.5, N)
    g3 = gamma_ratio(N + 1.5, N)
    amp = np.sqrt(rb * b)
    m1 = rb * b * (N + phi - 1.0) + 2.0 * amp * L * g1 + L**2
    m2 = (
        (rb * b) ** 2 * ((N + phi) ** 2 + phi - N - 2.0)
        + 4.0 * amp**3 * L * g3 * (1.0 + (phi - 1.0) / N)
        + rb * b * L**2 * (6.0 * N + 2.0 * phi - 2.0)
        + 4.0 * amp * L**3 * g1
        + L**4
    )
    return _ret(m1), _ret(m2)


def s0_variance(d00, ctx: SignalModel):
    """Var[S0] assembled from central moments, free of E[S0^2] - E[S0]^2 cancellation."""
    amp = np.sqrt(ctx.rho_B * ctx.beta00(d00))
    L, N = ctx.L_A, ctx.N_B
    g1 = gamma_ratio(N + 0.5, N)
    # Var(X^2) + 4L^2 Var(X) + 4L Cov(X^2, X) for the Nakagami amplitude X,
    # using Gamma(N+3/2)/Gamma(N) = (N + 1/2) Gamma(N+1/2)/Gamma(N).
    var_x = amp**2 * (N - g1**2)
    return _ret(amp**4 * N + 4.0 * L**2 * var_x + 2.0 * L * amp**3 * g1)


def si_variance(d00, ctx: SignalModel):
    """Var[S_I] = Var[S0] + Var[I_B0] + 2 Cov[S0, I_B0]."""
    amp = np.sqrt(ctx.rho_B * ctx.beta00(d00))
    L, N, phi = ctx.L_A, ctx.N_B, ctx.phi
    g1 = gamma_ratio(N + 0.5, N)
    extra = (phi - 1.0) * (3.0 * amp**4 + 2.0 * amp**3 * L * g1 / N)
    return _ret(s0_variance(d00, ctx) + extra)


def matched_s0(d00, ctx: SignalModel) -> MatchedGamma:
    return match_moments(s0_moments(d00, ctx)[0], s0_variance(d00, ctx))


def matched_si(d00, ctx: SignalModel) -> MatchedGamma:
    return match_moments(si_moments(d00, ctx)[0], si_variance(d00, ctx))


def match_moments(mean, variance) -> MatchedGamma:
    """Gamma(k, theta) with the given mean and variance."""
    if not (mean > 0 and variance > 0):
        raise DegenerateDistributionError(
            f"match_moments: degenerate moments (mean={mean!r}, variance={variance!r})")
    return MatchedGamma(k=mean**2 / variance, theta=variance / mean)


def match_gamma(mean, second_moment) -> MatchedGamma:
    """Gamma(k, theta) with the given first two raw moments."""
    var = second_moment - mean**2
    # Variance below rounding level of the second moment means a constant.
    if not (mean > 0 and var > 1e-13 * abs(second_moment)):
        raise DegenerateDistributionError(
            f"match_gamma: degenerate moments (mean={mean!r}, variance={var!r})")
    return MatchedGamma(k=mean**2 / var, theta=var / mean)
