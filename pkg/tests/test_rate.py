import dataclasses
import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate as si
from scipy import special as sps

from hccn import mcsim
from hccn.moments import ApAggregates
from hccn.params import NetworkParams, derive
from hccn.rate import (
    RateContext, intercell_exponent_2f1, laplace_ib, laplace_ib0, laplace_si, rate,
    rate_at_distance, rate_detail, s_range,
)


@pytest.fixture(scope="module")
def rctx():
    return RateContext.build(NetworkParams.defaults())


def _variant(ctx, **derived_changes):
    derived = dataclasses.replace(ctx.derived, **derived_changes)
    signal = dataclasses.replace(ctx.signal, rho_B=derived.rho_B, phi=derived.mean_ues_per_bs)
    return dataclasses.replace(ctx, derived=derived, signal=signal, _cache={})


def test_trivial_transform_values(rctx):
    assert laplace_ib(0.0, 100.0, rctx) == 1.0
    assert laplace_ib(1e9, rctx.params.radius, rctx) == 1.0
    assert laplace_ib0(0.0, 100.0, rctx) == 1.0
    assert laplace_si(0.0, 100.0, rctx) == 1.0
    one = _variant(rctx, mean_ues_per_bs=1.0)
    assert laplace_ib0(5e9, 100.0, one) == 1.0


def test_si_transform_exact_gamma_case():
    p = NetworkParams.defaults(lambda_A_per_km2=0.0, lambda_U_per_km2=40.000001)
    ctx = RateContext.build(p)
    ctx = dataclasses.replace(ctx, signal=dataclasses.replace(ctx.signal, phi=1.0), _cache={})
    d00 = 90.0
    b = ctx.derived.rho_B * float(ctx.signal.beta00(d00))
    s = np.logspace(-2, 3, 11) / b
    assert np.allclose(laplace_si(s, d00, ctx), (1 + s * b) ** (-p.N_B), rtol=1e-12)


def test_hypergeometric_cross_check(rctx):
    rng = np.random.default_rng(20)
    for _ in range(20):
        d00 = float(rng.uniform(5.0, 480.0))
        s = float(10 ** rng.uniform(5, 11))
        quad = float(np.log(laplace_ib(s, d00, rctx)))
        assert intercell_exponent_2f1(s, d00, rctx) == pytest.approx(quad, rel=1e-6)


def test_intra_cell_transform_against_draws(rctx):
    rng = np.random.default_rng(6)
    for d00 in (50.0, 150.0):
        b = rctx.derived.rho_B * float(rctx.signal.beta00(d00))
        ib0 = rng.gamma(rctx.derived.mean_ues_per_bs - 1.0, b, 1_000_000)
        for s in (0.3 / b, 1.0 / b, 3.0 / b):
            assert laplace_ib0(s, d00, rctx) == pytest.approx(np.mean(np.exp(-s * ib0)), rel=5e-3)


def test_si_transform_against_correlated_draws(rctx):
    rng = np.random.default_rng(7)
    n, N = 400_000, rctx.params.N_B
    z = lambda *shape: (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / math.sqrt(2)  # noqa: E731
    for d00 in (60.0, 200.0):
        b = rctx.derived.rho_B * float(rctx.signal.beta00(d00))
        h = z(n, N)
        s0 = (np.sqrt(b) * np.linalg.norm(h, axis=1) + rctx.ap.L_A) ** 2
        beams = z(n, 2, N)
        beams /= np.linalg.norm(beams, axis=-1, keepdims=True)
        ib0 = b * (np.abs(np.einsum("nk,nbk->nb", h.conj(), beams)) ** 2).sum(axis=1)
        m = float(np.mean(s0 + ib0))
        for s in (0.1 / m, 1.0 / m, 4.0 / m):
            assert laplace_si(s, d00, rctx) == pytest.approx(np.mean(np.exp(-s * (s0 + ib0))), rel=2e-2)


@settings(max_examples=60, deadline=None)
@given(d00=st.floats(1.0, 500.0), logs=st.floats(-2.0, 14.0))
def test_transform_ordering(rctx, d00, logs):
    s = 10.0**logs
    l_si = laplace_si(s, d00, rctx)
    l_ib0 = laplace_ib0(s, d00, rctx)
    assert 0.0 <= l_si <= l_ib0 <= 1.0
    if s * rctx.matched_si(d00).mean < 500.0:  # strictly positive unless it underflows
        assert l_si > 0.0


def test_integration_window(rctx):
    s_lo, s_max = s_range(100.0, rctx)
    assert 0 < s_lo < s_max
    assert sps.exp1(s_max * rctx.I_e) <= 1e-8 * (1 + 1e-9)


def _reference_rate_at_distance(d00, ctx):
    def f(u):
        s = math.exp(u)
        l_ib = math.exp(intercell_exponent_2f1(s, d00, ctx))
        return math.exp(-s * ctx.I_e) * l_ib * (laplace_ib0(s, d00, ctx) - laplace_si(s, d00, ctx))

    s_lo, s_max = s_range(d00, ctx)
    lo, hi = math.log(s_lo) - 10.0, math.log(s_max) + 3.0
    edges = np.linspace(lo, hi, 40)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", si.IntegrationWarning)
        return sum(si.quad(f, a, b, epsabs=0, epsrel=1e-10, limit=200)[0]
                   for a, b in zip(edges[:-1], edges[1:]))


@pytest.mark.parametrize("d00", [20.0, 100.0, 350.0])
def test_rate_at_distance_against_independent_quadrature(rctx, d00):
    assert rate_at_distance(d00, rctx) == pytest.approx(_reference_rate_at_distance(d00, rctx), rel=1e-6)


def test_no_bs_power_closed_form(rctx):
    ctx = _variant(rctx, rho_B=0.0)
    L, I_e = rctx.ap.L_A, rctx.I_e
    assert rate_at_distance(100.0, ctx) == pytest.approx(math.log1p(L * L / I_e), rel=1e-7)


def test_no_signal_gives_zero_rate(rctx):
    ctx = dataclasses.replace(_variant(rctx, rho_B=0.0),
                              ap=ApAggregates(L_A=0.0, I_A_bar=rctx.ap.I_A_bar, I_e=rctx.I_e))
    assert rate_at_distance(100.0, ctx) == 0.0


def test_huge_noise_kills_rate():
    p = NetworkParams.defaults(snr_ref_dB=-60.0)
    assert rate(RateContext.build(p)) < 1e-6


def test_rate_non_increasing_in_noise():
    vals = [rate(RateContext.build(NetworkParams.defaults(snr_ref_dB=v))) for v in (160, 130, 110, 90)]
    assert all(b <= a for a, b in zip(vals, vals[1:]))


def test_rate_non_increasing_in_ue_density():
    vals = [rate(RateContext.build(NetworkParams.defaults(lambda_U_per_km2=v))) for v in (60, 120, 240)]
    assert all(b <= a for a, b in zip(vals, vals[1:]))


def test_rate_detail_reports_shape_range(rctx):
    res = rate_detail(rctx)
    assert res.value > 0
    assert 0 < res.k_min <= res.k_max


def test_rate_versus_serving_distance(rctx):
    grid = np.linspace(20.0, 480.0, 10)
    vals = [rate_at_distance(float(d), rctx) for d in grid]
    assert all(v >= 0 for v in vals)
    rises = [(a, b) for a, b, va, vb in zip(grid, grid[1:], vals, vals[1:]) if vb > va]
    if rises:
        # Only the serving-BS gain falls with d00; with the AP signal present the
        # balance against intra-cell leakage can tilt, so this is reported, not asserted.
        warnings.warn(f"rate_at_distance rises with d00 between {rises}")


@pytest.mark.slow
def test_rate_at_distance_against_conditioned_deployments(rctx):
    batch = mcsim.simulate(rctx.params, 10_000, 4, serving_distance=100.0)
    mc = float(np.mean(np.log1p(batch.S0 / (batch.I_B0 + batch.I_B + rctx.I_e))))
    assert rate_at_distance(100.0, rctx) == pytest.approx(mc, rel=0.05)
