"""Network parameters, unit conversion and derived scalars.

Everything inside the package is SI: metres, nodes per square metre, watts.
Configuration files use the customary units (per km², dBm, GHz) and are
converted once in :meth:`NetworkParams.from_config`.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, replace
from pathlib import Path

from .errors import ParameterError

SPEED_OF_LIGHT = 3.0e8
PER_KM2 = 1e-6

CONFIG_KEYS = (
    "lambda_B_per_km2",
    "lambda_A_per_km2",
    "lambda_U_per_km2",
    "alpha1",
    "alpha2",
    "P_B_dBm",
    "P_A_dBm",
    "snr_ref_dB",
    "N_B",
    "N_A",
    "freq_GHz",
    "radius_m",
)

DEFAULT_CONFIG = {
    "lambda_B_per_km2": 40.0,
    "lambda_A_per_km2": 200.0,
    "lambda_U_per_km2": 120.0,
    "alpha1": 2.8,
    "alpha2": 1.5,
    "P_B_dBm": 50.0,
    "P_A_dBm": 10.0,
    "snr_ref_dB": 130.0,
    "N_B": 8,
    "N_A": 2,
    "freq_GHz": 3.5,
    "radius_m": 500.0,
}


def dbm_to_watts(dbm: float) -> float:
    return 10.0 ** ((dbm - 30.0) / 10.0)


def watts_to_dbm(watts: float) -> float:
    if watts <= 0:
        return -math.inf
    return 10.0 * math.log10(watts) + 30.0


def db_to_linear(db: float) -> float:
    return 10.0 ** (db / 10.0)


@dataclass(frozen=True)
class NetworkParams:
    """Scalar network description in SI units.

    Densities are per m², powers in watts, ``radius`` in metres and ``freq``
    in Hz. ``snr_ref_db`` is the ratio P_B / noise power in dB.
    """

    lambda_B: float
    lambda_A: float
    lambda_U: float
    alpha1: float
    alpha2: float
    P_B: float
    P_A: float
    snr_ref_db: float
    N_B: int
    N_A: int
    radius: float
    freq: float

    @classmethod
    def from_config(cls, cfg: dict) -> "NetworkParams":
        missing = [k for k in CONFIG_KEYS if k not in cfg]
        unknown = [k for k in cfg if k not in CONFIG_KEYS]
        problems = [f"missing config key {k!r}" for k in missing]
        problems += [f"unknown config key {k!r}" for k in unknown]
        if problems:
            raise ParameterError(problems)
        return cls(
            lambda_B=float(cfg["lambda_B_per_km2"]) * PER_KM2,
            lambda_A=float(cfg["lambda_A_per_km2"]) * PER_KM2,
            lambda_U=float(cfg["lambda_U_per_km2"]) * PER_KM2,
            alpha1=float(cfg["alpha1"]),
            alpha2=float(cfg["alpha2"]),
            P_B=dbm_to_watts(float(cfg["P_B_dBm"])),
            P_A=dbm_to_watts(float(cfg["P_A_dBm"])),
            snr_ref_db=float(cfg["snr_ref_dB"]),
            N_B=int(cfg["N_B"]),
            N_A=int(cfg["N_A"]),
            radius=float(cfg["radius_m"]),
            freq=float(cfg["freq_GHz"]) * 1e9,
        )

    @classmethod
    def defaults(cls, **overrides) -> "NetworkParams":
        """Default operating point, with optional config-unit overrides."""
        cfg = dict(DEFAULT_CONFIG)
        cfg.update(overrides)
        return cls.from_config(cfg)

    def to_config(self) -> dict:
        return {
            "lambda_B_per_km2": self.lambda_B / PER_KM2,
            "lambda_A_per_km2": self.lambda_A / PER_KM2,
            "lambda_U_per_km2": self.lambda_U / PER_KM2,
            "alpha1": self.alpha1,
            "alpha2": self.alpha2,
            "P_B_dBm": watts_to_dbm(self.P_B),
            "P_A_dBm": watts_to_dbm(self.P_A),
            "snr_ref_dB": self.snr_ref_db,
            "N_B": self.N_B,
            "N_A": self.N_A,
            "freq_GHz": self.freq / 1e9,
            "radius_m": self.radius,
        }

    def replace(self, **changes) -> "NetworkParams":
        return replace(self, **changes)


@dataclass(frozen=True)
class DerivedParams:
    area: float
    radius: float
    eta_B: float
    eta_A: float
    mean_ues_per_bs: float
    rho_B: float
    rho_A: float
    sigma2: float
    beta0: float
    delta0: float

    def as_dict(self) -> dict:
        return asdict(self)


def load_config(path) -> NetworkParams:
    with open(Path(path), encoding="utf-8") as fh:
        cfg = json.load(fh)
    return NetworkParams.from_config(cfg)


def validate(p: NetworkParams, allow_no_aps: bool = False,
             require_cells: bool = True) -> list[str]:
    """Return every violated parameter constraint; empty means valid.

    ``allow_no_aps`` relaxes ``lambda_A`` and ``P_A`` to ``>= 0`` so the
    engines can evaluate the cellular-only limit. ``require_cells=False``
    drops the UE-per-cell constraint, which only the BS-side terms need.
    """
    out = []
    for name in ("lambda_B", "lambda_A", "lambda_U", "P_B", "P_A", "radius", "freq"):
        v = getattr(p, name)
        if allow_no_aps and name in ("lambda_A", "P_A"):
            if not (math.isfinite(v) and v >= 0):
                out.append(f"{name} must be >= 0 (got {v!r})")
        elif not (math.isfinite(v) and v > 0):
            out.append(f"{name} must be > 0 (got {v!r})")
    for name in ("N_B", "N_A"):
        v = getattr(p, name)
        if int(v) != v or v < 1:
            out.append(f"{name} must be an integer >= 1 (got {v!r})")
    if not math.isfinite(p.snr_ref_db):
        out.append(f"snr_ref_db must be finite (got {p.snr_ref_db!r})")
    if not p.alpha1 > 2:
        out.append(f"alpha1 must be > 2 (got {p.alpha1!r})")
    if not p.alpha2 < 2:
        out.append(f"alpha2 must be < 2 (mean AP interference diverges) (got {p.alpha2!r})")
    if not p.alpha2 > 0:
        out.append(f"alpha2 must be > 0 (got {p.alpha2!r})")
    if require_cells and not p.lambda_U > p.lambda_B:
        out.append("lambda_U must exceed lambda_B")
    return out


def advisories(p: NetworkParams) -> list[str]:
    """Soft checks that do not block evaluation."""
    notes = []
    if not p.P_B > p.P_A:
        notes.append("P_B <= P_A: base stations are assumed to outpower access points")
    return notes


def check(p: NetworkParams, allow_no_aps: bool = False,
          require_cells: bool = True) -> NetworkParams:
    problems = validate(p, allow_no_aps=allow_no_aps, require_cells=require_cells)
    if problems:
        raise ParameterError(problems)
    return p


def derive(p: NetworkParams) -> DerivedParams:
    area = math.pi * p.radius**2
    gain = (SPEED_OF_LIGHT / (4.0 * math.pi * p.freq)) ** 2
    eta_B = p.lambda_B / p.lambda_U
    eta_A = 1.0 / (p.lambda_U * area)
    return DerivedParams(
        area=area,
        radius=p.radius,
        eta_B=eta_B,
        eta_A=eta_A,
        mean_ues_per_bs=p.lambda_U / p.lambda_B,
        rho_B=p.P_B * eta_B,
        rho_A=p.P_A * eta_A,
        sigma2=p.P_B / db_to_linear(p.snr_ref_db),
        beta0=gain,
        delta0=gain,
    )
