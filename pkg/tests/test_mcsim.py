import math

import numpy as np
import pytest
from scipy import stats

from hccn import mcsim
from hccn.errors import NoServingBSError, ParameterError
from hccn.mathkit import gamma_ccdf
from hccn.mcsim import Deployment, Estimate, associate, realize_sinr, sample_deployment, trial_rng
from hccn.params import NetworkParams, derive


def test_point_counts_have_poisson_means(defaults):
    d = derive(defaults)
    rng = np.random.default_rng(1)
    deps = [sample_deployment(defaults, d, rng) for _ in range(10_000)]
    n_bs = np.array([len(x.bs) for x in deps])
    assert n_bs.mean() == pytest.approx(40e-6 * d.area, rel=0.01)
    assert n_bs.var() == pytest.approx(n_bs.mean(), rel=0.05)
    n_ap = np.array([len(x.ap) for x in deps])
    assert n_ap.mean() == pytest.approx(200e-6 * d.area, rel=0.01)
    # UE 0 is one of the drawn UEs, so the UE count keeps mean lambda_U * area.
    n_ue = np.array([len(x.ue) for x in deps])
    assert n_ue.mean() == pytest.approx(120e-6 * d.area, rel=0.01)


def test_points_are_uniform_in_the_disk(defaults):
    d = derive(defaults)
    rng = np.random.default_rng(2)
    pts = np.vstack([sample_deployment(defaults, d, rng).ap for _ in range(300)])
    r2 = (pts**2).sum(axis=1) / defaults.radius**2
    assert np.all(r2 <= 1.0)
    assert stats.kstest(r2, "uniform").pvalue > 0.01
    ang = (np.arctan2(pts[:, 1], pts[:, 0]) + math.pi) / (2 * math.pi)
    assert stats.kstest(ang, "uniform").pvalue > 0.01


def test_quadrant_counts_are_independent_poisson(defaults):
    d = derive(defaults)
    rng = np.random.default_rng(3)
    counts = []
    for _ in range(2000):
        bs = sample_deployment(defaults, d, rng).bs
        q = (bs[:, 0] > 0).astype(int) * 2 + (bs[:, 1] > 0)
        counts.append(np.bincount(q, minlength=4))
    counts = np.array(counts)
    mean = 40e-6 * d.area / 4
    assert counts.mean() == pytest.approx(mean, rel=0.02)
    # Index of dispersion near 1 and no correlation between quadrants.
    assert counts.var(axis=0).mean() / counts.mean() == pytest.approx(1.0, abs=0.1)
    corr = np.corrcoef(counts.T)[np.triu_indices(4, 1)]
    assert np.all(np.abs(corr) < 0.1)


def test_ripley_k_consistent_with_complete_spatial_randomness(defaults):
    # Compare K at a few radii against an envelope from independent uniform samples.
    d = derive(defaults)
    rng = np.random.default_rng(4)
    R = defaults.radius
    radii = np.array([25.0, 50.0, 100.0])

    def k_stat(pts):
        inner = np.hypot(pts[:, 0], pts[:, 1]) < R - radii[-1]
        dist = np.hypot(*(pts[inner, None, :] - pts[None, :, :]).transpose(2, 0, 1))
        lam = len(pts) / d.area
        return np.array([(np.sum(dist < r) - inner.sum()) / max(inner.sum(), 1) / lam for r in radii])

    sample = np.mean([k_stat(sample_deployment(defaults, d, rng).ap) for _ in range(100)], axis=0)
    envelope = []
    for _ in range(99):
        ks = []
        for _ in range(100):
            n = rng.poisson(200e-6 * d.area)
            r = R * np.sqrt(rng.random(n))
            a = rng.random(n) * 2 * math.pi
            ks.append(k_stat(np.column_stack([r * np.cos(a), r * np.sin(a)])))
        envelope.append(np.mean(ks, axis=0))
    envelope = np.array(envelope)
    lo, hi = np.quantile(envelope, [0.005, 0.995], axis=0)
    assert np.all((sample >= lo) & (sample <= hi))
    assert sample == pytest.approx(math.pi * radii**2, rel=0.05)


def test_association_ties_go_to_lowest_index():
    bs = np.array([[10.0, 0.0], [-10.0, 0.0], [0.0, 10.0]])
    ue = np.array([[0.0, 0.0], [9.0, 1.0], [-3.0, 0.0]])
    assert list(associate(bs, ue)) == [0, 0, 1]
    assert list(associate(np.zeros((0, 2)), ue)) == [-1, -1, -1]


def test_same_seed_same_deployment(defaults):
    d = derive(defaults)
    a = sample_deployment(defaults, d, trial_rng(9, 3))
    b = sample_deployment(defaults, d, trial_rng(9, 3))
    assert np.array_equal(a.bs, b.bs) and np.array_equal(a.ue, b.ue)
    c = sample_deployment(defaults, d, trial_rng(9, 4))
    assert not np.array_equal(a.bs, c.bs)
    with pytest.raises(ParameterError):
        trial_rng(-1, 0)


def test_small_scale_entries_have_unit_power():
    z = mcsim._cn(np.random.default_rng(0), (200_000,))
    assert np.mean(np.abs(z) ** 2) == pytest.approx(1.0, abs=0.01)
    assert abs(np.mean(z)) < 0.01


def test_results_independent_of_thread_count(defaults):
    a = mcsim.simulate(defaults, 64, 5, threads=1)
    b = mcsim.simulate(defaults, 64, 5, threads=4)
    c = mcsim.simulate(defaults, 64, 5, threads=16)
    for name in ("S0", "I_B0", "I_B", "I_A", "I_exact", "serving_distance"):
        assert np.array_equal(getattr(a, name), getattr(b, name))
        assert np.array_equal(getattr(a, name), getattr(c, name))
    assert a.coverage(1.0) == c.coverage(1.0)


def test_env_var_sets_worker_count(monkeypatch):
    monkeypatch.setenv("HCCN_THREADS", "3")
    assert mcsim.worker_count() == 3
    assert mcsim.worker_count(7) == 7


def _lone_bs(dist):
    return Deployment(bs=np.array([[dist, 0.0]]), ap=np.zeros((0, 2)), ue=np.zeros((1, 2)),
                      assoc=np.array([0]))


def test_single_bs_signal_is_gamma(defaults):
    d = derive(defaults)
    dep = _lone_bs(80.0)
    rng = np.random.default_rng(6)
    s0 = np.array([realize_sinr(dep, defaults, d, rng).S0 for _ in range(100_000)])
    scale = d.rho_B * d.beta0 * 80.0 ** (-defaults.alpha1)
    assert stats.kstest(s0, "gamma", args=(defaults.N_B, 0, scale)).statistic <= 0.02


def test_no_aps_means_no_ap_interference():
    p = NetworkParams.defaults(lambda_A_per_km2=0.0)
    batch = mcsim.simulate(p, 50, 1)
    assert np.all(batch.I_A == 0.0)
    d = derive(p)
    dep = sample_deployment(p, d, 3)
    assert mcsim.ap_terms(dep, p, d, 3) == (0.0, 0.0)


def test_powers_non_negative_and_finite(defaults):
    batch = mcsim.simulate(defaults, 200, 2)
    for arr in (batch.S0, batch.I_B0, batch.I_B, batch.I_A, batch.I_exact):
        assert np.all(arr >= 0) and np.all(np.isfinite(arr))
    assert np.all(np.isfinite(batch.sinr_exact)) and np.all(np.isfinite(batch.sinr_approx))


@pytest.mark.slow
def test_cross_terms_vanish_on_average(defaults):
    batch = mcsim.simulate(defaults, 10_000, 8)
    gap = Estimate.from_values(batch.I_exact - (batch.I_B0 + batch.I_B + batch.I_A), 8)
    assert abs(gap.mean) <= gap.ci_half_width


def test_missing_bs_is_reported(defaults):
    d = derive(defaults)
    empty = Deployment(bs=np.zeros((0, 2)), ap=np.zeros((0, 2)), ue=np.zeros((1, 2)),
                       assoc=np.array([-1]))
    with pytest.raises(NoServingBSError):
        realize_sinr(empty, defaults, d, 0)
    with pytest.raises(NoServingBSError):
        empty.serving_distance
    zero = defaults.replace(lambda_B=0.0)
    assert len(sample_deployment(zero, d, 0).bs) == 0


def test_empty_deployments_are_redrawn_and_counted():
    p = NetworkParams.defaults(lambda_B_per_km2=1.0)
    batch = mcsim.simulate(p, 200, 3)
    # P(no BS) = exp(-pi/4) per draw, so about 0.84 redraws per trial on average.
    assert 100 < batch.resampled < 260
    assert batch.coverage(1.0).resampled == batch.resampled
    assert np.all(batch.serving_distance > 0)


def test_estimate_confidence_interval():
    vals = np.array([0.0, 1.0, 1.0, 0.0, 1.0])
    e = Estimate.from_values(vals, seed=3)
    assert e.mean == pytest.approx(0.6)
    assert e.ci_half_width == pytest.approx(1.96 * np.std(vals, ddof=1) / math.sqrt(5))
    assert (e.trials, e.seed) == (5, 3)
    with pytest.raises(ParameterError):
        Estimate.from_values([], 0)


def test_zero_threshold_covers_everyone(defaults):
    e = mcsim.estimate_coverage(defaults, 0.0, 100, 0)
    assert e.mean == 1.0 and e.ci_half_width == 0.0
    assert e.secondary.mean == 1.0


def test_noise_limited_coverage_is_gamma_ccdf():
    p = NetworkParams.defaults(lambda_A_per_km2=0.0, snr_ref_dB=0.0)
    d = derive(p)
    dist = 100.0
    scale = d.rho_B * d.beta0 * dist ** (-p.alpha1)
    T = p.N_B * scale / d.sigma2
    e = mcsim.estimate_coverage(p, T, 4000, 1, serving_distance=dist)
    expect = gamma_ccdf(T * d.sigma2 / scale, p.N_B, 1.0)
    assert abs(e.mean - expect) <= e.ci_half_width + 1e-3


def test_rate_estimate_is_non_negative(defaults):
    e = mcsim.estimate_rate(defaults, 100, 4)
    assert e.mean > 0 and e.secondary.mean > 0


def test_ap_terms_without_aps_are_zero():
    p = NetworkParams.defaults(lambda_A_per_km2=0.0)
    sig, ia = mcsim.estimate_ap_terms(p, 100, 0)
    assert (sig.mean, sig.ci_half_width, ia.mean, ia.ci_half_width) == (0.0, 0.0, 0.0, 0.0)


def test_ap_signal_grows_with_antennas():
    means = [mcsim.estimate_ap_terms(NetworkParams.defaults(N_A=n, alpha2=1.2, lambda_U_per_km2=40.0),
                                     400, 0)[0].mean for n in (1, 2, 4)]
    assert means[0] < means[1] < means[2]


def test_ap_interference_linear_in_power_and_ci_shrinks():
    p0 = NetworkParams.defaults(P_A_dBm=0.0)
    p2 = NetworkParams.defaults(P_A_dBm=20.0)
    a = mcsim.estimate_ap_terms(p0, 200, 1)[1]
    b = mcsim.estimate_ap_terms(p2, 200, 1)[1]
    assert b.mean == pytest.approx(100 * a.mean, rel=1e-12)
    big = mcsim.estimate_ap_terms(p0, 3200, 1)[1]
    ratio = (big.ci_half_width / big.mean) / (a.ci_half_width / a.mean)
    assert ratio == pytest.approx(0.25, rel=0.5)


def test_power_per_cell_matches_bs_budget(defaults):
    d = derive(defaults)
    assert d.rho_B * d.mean_ues_per_bs == pytest.approx(defaults.P_B, rel=1e-12)
