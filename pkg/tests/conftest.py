import math

import numpy as np
import pytest

from hccn.params import NetworkParams


@pytest.fixture
def defaults():
    return NetworkParams.defaults()


def model_draws(ctx, d00, n, seed=0):
    """Sample (S0, I_B0, I_B) from the analytic model itself, given d00.

    S0 keeps its exact (non-Gamma) law; I_B0 is Gamma(phi - 1) and every
    interfering BS is Gamma(phi) with uniform positions on the annulus.
    """
    p, d = ctx.params, ctx.derived
    rng = np.random.default_rng(seed)
    rb = d.rho_B * ctx.signal.beta00(d00)
    s0 = (np.sqrt(rb * rng.gamma(p.N_B, 1.0, n)) + ctx.signal.L_A) ** 2
    ib0 = rng.gamma(ctx.phi - 1.0, rb, n) if ctx.phi > 1 else np.zeros(n)
    R = p.radius
    cnt = rng.poisson(p.lambda_B * math.pi * (R * R - d00 * d00), n)
    r = np.sqrt(d00**2 + (R * R - d00 * d00) * rng.random(cnt.sum()))
    pw = rng.gamma(ctx.phi, 1.0, cnt.sum()) * d.rho_B * d.beta0 * r ** (-p.alpha1)
    ib = np.bincount(np.repeat(np.arange(n), cnt), weights=pw, minlength=n)
    return s0, ib0, ib


ACCEPTANCE_LINES: list[str] = []


def record_acceptance(number: int, title: str, ok: bool, detail: str) -> None:
    """Log one PASS/FAIL line for the terminal summary, then fail the test if needed."""
    line = f"[{number}] {'PASS' if ok else 'FAIL'} {title}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
