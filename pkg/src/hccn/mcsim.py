"""Monte Carlo ground truth: PPP deployments, explicit antenna channels and
conjugate beamforming at the BSs and APs.

Every trial draws from its own counter-based Philox stream keyed by the master
seed, so results do not depend on trial order or on the number of threads.
Powers are expectations over unit-variance data symbols given the channels.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import NoServingBSError, ParameterError
from .params import DerivedParams, NetworkParams, check, derive

Z95 = 1.96
MAX_RESAMPLES = 10_000


def trial_rng(seed: int, trial: int) -> np.random.Generator:
    """Independent generator for one trial: Philox keyed by ``seed``, the
    trial index in the high counter word."""
    if seed < 0 or trial < 0:
        raise ParameterError("seed and trial index must be non-negative")
    bitgen = np.random.Philox(key=seed, counter=[0, 0, 0, trial])
    return np.random.Generator(bitgen)


def worker_count(threads: int | None = None) -> int:
    if threads is None:
        env = os.environ.get("HCCN_THREADS")
        threads = int(env) if env else (os.cpu_count() or 1)
    return max(1, int(threads))


@dataclass(frozen=True)
class Deployment:
    """Node positions (m) in the disk. UE 0, the typical UE, sits at the origin.

    ``assoc[i]`` is the index of the BS nearest to UE i.
    """

    bs: np.ndarray
    ap: np.ndarray
    ue: np.ndarray
    assoc: np.ndarray

    @property
    def serving_distance(self) -> float:
        if len(self.bs) == 0:
            raise NoServingBSError("deployment has no BS")
        return float(np.hypot(*self.bs[self.assoc[0]]))


def _uniform_annulus(rng, n, r_in, r_out):
    u = rng.random(n)
    r = np.sqrt(r_in**2 + (r_out**2 - r_in**2) * u)
    ang = rng.random(n) * (2.0 * math.pi)
    return np.column_stack([r * np.cos(ang), r * np.sin(ang)])


def associate(bs: np.ndarray, ue: np.ndarray) -> np.ndarray:
    """Nearest-BS index per UE, ties to the lowest index; -1 when there is no BS."""
    if len(bs) == 0:
        return np.full(len(ue), -1, dtype=np.int64)
    d2 = ((ue[:, None, :] - bs[None, :, :]) ** 2).sum(axis=-1)
    return np.argmin(d2, axis=1)


def sample_deployment(p: NetworkParams, d: DerivedParams, rng, *,
                      serving_distance: float | None = None,
                      ap_exclusion: float = 0.0) -> Deployment:
    """Draw BS, AP and UE processes on the disk.

    ``rng`` is a Generator or an integer seed. With ``serving_distance`` the
    draw is conditioned on the nearest BS being exactly that far: BS 0 sits at
    that distance and the rest form a PPP on the annulus beyond it.
    ``ap_exclusion`` removes APs closer than that radius to the origin.
    """
    if not isinstance(rng, np.random.Generator):
        rng = np.random.default_rng(rng)
    R = p.radius
    if serving_distance is None:
        n_b = rng.poisson(p.lambda_B * d.area)
        bs = _uniform_annulus(rng, n_b, 0.0, R)
    else:
        if not 0 < serving_distance <= R:
            raise ParameterError(f"serving_distance must lie in (0, R] (got {serving_distance})")
        n_b = rng.poisson(p.lambda_B * math.pi * (R**2 - serving_distance**2))
        ang = rng.random() * (2.0 * math.pi)
        first = np.array([[serving_distance * math.cos(ang), serving_distance * math.sin(ang)]])
        bs = np.vstack([first, _uniform_annulus(rng, n_b, serving_distance, R)])
    if not 0 <= ap_exclusion < R:
        raise ParameterError("ap_exclusion must lie in [0, R)")
    n_a = rng.poisson(p.lambda_A * math.pi * (R**2 - ap_exclusion**2))
    ap = _uniform_annulus(rng, n_a, ap_exclusion, R)
    # The UE count includes UE 0, so the mean UE number is lambda_U * area as in
    # the definition of eta_A; one of the drawn UEs is the typical one.
    n_u = rng.poisson(p.lambda_U * d.area)
    ue = np.vstack([np.zeros((1, 2)), _uniform_annulus(rng, max(n_u - 1, 0), 0.0, R)])
    return Deployment(bs=bs, ap=ap, ue=ue, assoc=associate(bs, ue))


@dataclass(frozen=True)
class SinrSample:
    S0: float
    I_B0: float
    I_B: float
    I_A: float
    I_exact: float
    sigma2: float

    @property
    def sinr_approx(self) -> float:
        return self.S0 / (self.I_B0 + self.I_B + self.I_A + self.sigma2)

    @property
    def sinr_exact(self) -> float:
        return self.S0 / (self.I_exact + self.sigma2)


def _cn(rng, shape):
    """Standard circularly-symmetric complex Gaussian entries."""
    z = rng.standard_normal(shape + (2,))
    return (z[..., 0] + 1j * z[..., 1]) * math.sqrt(0.5)


def _unit(v):
    return v / np.linalg.norm(v, axis=-1, keepdims=True)


def realize_sinr(dep: Deployment, p: NetworkParams, d: DerivedParams, rng) -> SinrSample:
    """Draw every antenna channel and form the received powers at UE 0."""
    if len(dep.bs) == 0:
        raise NoServingBSError("no serving BS: the deployment contains no BS")
    if not isinstance(rng, np.random.Generator):
        rng = np.random.default_rng(rng)
    ue, bs, ap, assoc = dep.ue, dep.bs, dep.ap, dep.assoc
    b0 = assoc[0]
    others = slice(1, None)

    # BS side: channels from every BS to UE 0, and the beam direction of each
    # UE's own serving BS (independent of the channel to UE 0 unless it is UE 0).
    d_b0 = np.hypot(bs[:, 0], bs[:, 1])
    h0 = _cn(rng, (len(bs), p.N_B)) * np.sqrt(d.beta0 * d_b0 ** (-p.alpha1))[:, None]
    beams = _unit(_cn(rng, (len(ue) - 1, p.N_B)))
    amp_b = math.sqrt(d.rho_B) * np.einsum("ik,ik->i", h0[assoc[others]].conj(), beams)
    pow_b = np.abs(amp_b) ** 2
    same_cell = assoc[others] == b0
    I_B0 = math.fsum(pow_b[same_cell])
    I_B = math.fsum(pow_b[~same_cell])
    s_b = math.sqrt(d.rho_B) * float(np.linalg.norm(h0[b0]))

    # AP side: every AP beams to every UE.
    if len(ap) and d.rho_A > 0:
        l_a0 = np.hypot(ap[:, 0], ap[:, 1])
        g0 = _cn(rng, (len(ap), p.N_A)) * np.sqrt(d.delta0 * l_a0 ** (-p.alpha2))[:, None]
        ap_beams = _unit(_cn(rng, (len(ap), len(ue) - 1, p.N_A)))
        proj = np.einsum("jk,jik->ji", g0.conj(), ap_beams)
        I_A = d.rho_A * float(np.sum(np.abs(proj) ** 2))
        amp_a = math.sqrt(d.rho_A) * proj.sum(axis=0)
        s_a = math.sqrt(d.rho_A) * math.fsum(np.linalg.norm(g0, axis=1))
    else:
        I_A, s_a = 0.0, 0.0
        amp_a = np.zeros(len(ue) - 1, dtype=complex)

    I_exact = math.fsum(np.abs(amp_b + amp_a) ** 2)
    return SinrSample(S0=(s_b + s_a) ** 2, I_B0=I_B0, I_B=I_B, I_A=I_A,
                      I_exact=I_exact, sigma2=d.sigma2)


def ap_terms(dep: Deployment, p: NetworkParams, d: DerivedParams, rng) -> tuple[float, float]:
    """(sqrt(rho_A) sum_j ||g_j0||, I_A) for one deployment."""
    if not isinstance(rng, np.random.Generator):
        rng = np.random.default_rng(rng)
    if len(dep.ap) == 0 or d.rho_A == 0:
        return 0.0, 0.0
    l = np.hypot(dep.ap[:, 0], dep.ap[:, 1])
    g0 = _cn(rng, (len(dep.ap), p.N_A)) * np.sqrt(d.delta0 * l ** (-p.alpha2))[:, None]
    beams = _unit(_cn(rng, (len(dep.ap), len(dep.ue) - 1, p.N_A)))
    proj = np.einsum("jk,jik->ji", g0.conj(), beams)
    signal = math.sqrt(d.rho_A) * math.fsum(np.linalg.norm(g0, axis=1))
    return signal, d.rho_A * float(np.sum(np.abs(proj) ** 2))


@dataclass(frozen=True)
class Estimate:
    mean: float
    ci_half_width: float
    trials: int
    seed: int
    resampled: int = 0
    secondary: "Estimate | None" = None

    @classmethod
    def from_values(cls, values, seed: int, resampled: int = 0, secondary=None) -> "Estimate":
        values = np.asarray(values, dtype=float)
        n = len(values)
        if n == 0:
            raise ParameterError("an estimate needs at least one trial")
        mean = math.fsum(values) / n
        std = math.sqrt(math.fsum((values - mean) ** 2) / (n - 1)) if n > 1 else 0.0
        return cls(mean, Z95 * std / math.sqrt(n), n, seed, resampled, secondary)


@dataclass(frozen=True)
class SampleBatch:
    """Per-trial powers, indexed by trial number."""

    S0: np.ndarray
    I_B0: np.ndarray
    I_B: np.ndarray
    I_A: np.ndarray
    I_exact: np.ndarray
    serving_distance: np.ndarray
    sigma2: float
    seed: int
    resampled: int

    @property
    def trials(self) -> int:
        return len(self.S0)

    @property
    def sinr_approx(self) -> np.ndarray:
        return self.S0 / (self.I_B0 + self.I_B + self.I_A + self.sigma2)

    @property
    def sinr_exact(self) -> np.ndarray:
        return self.S0 / (self.I_exact + self.sigma2)

    def coverage(self, T: float) -> Estimate:
        """Fraction with sinr_approx > T; ``secondary`` uses sinr_exact."""
        exact = Estimate.from_values(self.sinr_exact > T, self.seed, self.resampled)
        return Estimate.from_values(self.sinr_approx > T, self.seed, self.resampled, exact)

    def rate(self) -> Estimate:
        exact = Estimate.from_values(np.log1p(self.sinr_exact), self.seed, self.resampled)
        return Estimate.from_values(np.log1p(self.sinr_approx), self.seed, self.resampled, exact)


def _map_trials(fn, trials: int, threads: int | None):
    """Run ``fn(trial)`` for every trial; results come back in trial order."""
    workers = worker_count(threads)
    if workers == 1 or trials < 2:
        return [fn(t) for t in range(trials)]
    chunk = max(1, math.ceil(trials / (4 * workers)))
    blocks = [range(s, min(s + chunk, trials)) for s in range(0, trials, chunk)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        parts = list(pool.map(lambda blk: [fn(t) for t in blk], blocks))
    return [r for part in parts for r in part]


def simulate(p: NetworkParams, trials: int, seed: int, *, threads: int | None = None,
             serving_distance: float | None = None, ap_exclusion: float = 0.0) -> SampleBatch:
    """Draw ``trials`` independent snapshots. Deployments without a BS are redrawn
    from the same trial stream and counted in ``resampled``."""
    check(p, allow_no_aps=True)
    if trials < 1:
        raise ParameterError("trials must be >= 1")
    d = derive(p)

    def one(t):
        rng = trial_rng(seed, t)
        for extra in range(MAX_RESAMPLES):
            dep = sample_deployment(p, d, rng, serving_distance=serving_distance,
                                    ap_exclusion=ap_exclusion)
            if len(dep.bs):
                return realize_sinr(dep, p, d, rng), dep.serving_distance, extra
        raise NoServingBSError(f"trial {t}: no BS after {MAX_RESAMPLES} redraws")

    rows = _map_trials(one, trials, threads)
    col = lambda name: np.array([getattr(r[0], name) for r in rows])  # noqa: E731
    return SampleBatch(
        S0=col("S0"), I_B0=col("I_B0"), I_B=col("I_B"), I_A=col("I_A"),
        I_exact=col("I_exact"), serving_distance=np.array([r[1] for r in rows]),
        sigma2=d.sigma2, seed=seed, resampled=sum(r[2] for r in rows),
    )


def estimate_coverage(p: NetworkParams, T: float, trials: int, seed: int, **kwargs) -> Estimate:
    """MC coverage at linear threshold ``T``. Extra keywords go to :func:`simulate`."""
    return simulate(p, trials, seed, **kwargs).coverage(T)


def estimate_rate(p: NetworkParams, trials: int, seed: int, **kwargs) -> Estimate:
    return simulate(p, trials, seed, **kwargs).rate()


def estimate_ap_terms(p: NetworkParams, trials: int, seed: int, *,
                      threads: int | None = None) -> tuple[Estimate, Estimate]:
    """Estimates of the coherent AP amplitude sqrt(rho_A) sum_j ||g_j0|| and of I_A."""
    check(p, allow_no_aps=True, require_cells=False)
    d = derive(p)

    def one(t):
        rng = trial_rng(seed, t)
        return ap_terms(sample_deployment(p, d, rng), p, d, rng)

    rows = _map_trials(one, trials, threads)
    sig = Estimate.from_values([r[0] for r in rows], seed)
    ia = Estimate.from_values([r[1] for r in rows], seed)
    return sig, ia
