"""Tests for the Prufer phase/radius recursion and the second-order
expansion diagnostics."""

import cmath
import math

import numpy as np
import pytest

from szegolab.prufer import (
    default_decorrelation_time,
    expansion_diagnostics,
    init,
    run,
    step,
    zeta_trace,
)
from szegolab.sampling import preset
from szegolab.szego_cocycle import SpectralPoint, polynomials
from szegolab.torus_dynamics import CAT_MAP, TorusPoint
from szegolab.verblunsky import VerblunskyConfig, coefficient

from helpers import free_config, random_config, random_eta


def _cfg(lam, x=0.8, y=2.1, alpha="alpha0"):
    base = TorusPoint.from_radians(x, y)
    return VerblunskyConfig(lam=lam, base=base, autom=CAT_MAP, alpha=preset(alpha))


# ---------------------------------------------------------------------------
# single steps


def test_initial_state():
    s = SpectralPoint(1.2)
    st = init(s)
    assert st.log_r == 0.0
    assert st.theta == 0.0
    assert st.zeta == s.z
    assert st.n == 0


def test_free_step_rotates_zeta_only():
    s = SpectralPoint(0.7)
    st = step(init(s), 0.0, s)
    assert st.log_r == 0.0
    assert st.theta == 0.0
    assert st.zeta == pytest.approx(s.z**2, abs=1e-15)
    assert st.n == 1


def test_step_rejects_disk_boundary():
    s = SpectralPoint(0.5)
    with pytest.raises(ValueError):
        step(init(s), 1.0, s)


def test_one_step_matches_first_polynomial():
    rng = np.random.default_rng(3)
    for _ in range(5):
        cfg = random_config(rng)
        eta = random_eta(rng)
        s = SpectralPoint(eta)
        a = coefficient(cfg, 0)
        st = step(init(s), a, s)
        phi1 = (s.z - np.conj(a)) / math.sqrt(1.0 - abs(a) ** 2)
        assert math.exp(st.log_r) == pytest.approx(abs(phi1), rel=1e-14)
        theta1 = cmath.phase(phi1 * cmath.exp(-1j * eta))
        assert st.theta == pytest.approx(theta1, abs=1e-14)
        assert st.zeta == pytest.approx(cmath.exp(1j * (2 * eta + 2 * st.theta)), abs=1e-14)


# ---------------------------------------------------------------------------
# runs and traces


def test_radius_matches_polynomial_recursion():
    rng = np.random.default_rng(7)
    for n_steps in (2000, 10_000):
        cfg = random_config(rng)
        s = SpectralPoint(random_eta(rng))
        got = run(cfg, s, n_steps).final.log_r
        want = polynomials(cfg, s, n_steps).log_abs_phi()
        assert got == pytest.approx(want, rel=1e-8, abs=1e-10)


def test_free_run_keeps_zero_radius():
    tr = run(free_config(), SpectralPoint(1.0), 500)
    assert tr.final.log_r == 0.0
    assert np.all(tr.log_r == 0.0)


@pytest.mark.parametrize("n_steps,thin", [(10, 1), (10, 3), (9, 3), (7, 10), (0, 4)])
def test_trace_length(n_steps, thin):
    rng = np.random.default_rng(11)
    cfg = random_config(rng)
    tr = run(cfg, SpectralPoint(1.3), n_steps, thin=thin)
    assert len(tr.log_r) == n_steps // thin + 1
    assert list(tr.steps) == [i * thin for i in range(n_steps // thin + 1)]
    assert tr.final.n == n_steps


def test_run_validation():
    rng = np.random.default_rng(13)
    cfg = random_config(rng)
    with pytest.raises(ValueError):
        run(cfg, SpectralPoint(1.0), -1)
    with pytest.raises(ValueError):
        run(cfg, SpectralPoint(1.0), 10, thin=0)


def test_zeta_trace_matches_run():
    rng = np.random.default_rng(17)
    cfg = random_config(rng)
    s = SpectralPoint(random_eta(rng))
    N = 200
    zetas, log_r = zeta_trace(cfg, s, N)
    tr = run(cfg, s, N)
    assert len(zetas) == N
    assert np.allclose(zetas, tr.zeta[:N], atol=1e-12)
    assert log_r == pytest.approx(tr.final.log_r, rel=1e-12, abs=1e-12)


def test_zeta_stays_on_circle():
    rng = np.random.default_rng(19)
    cfg = random_config(rng)
    tr = run(cfg, SpectralPoint(random_eta(rng)), 2000)
    assert np.max(np.abs(np.abs(tr.zeta) - 1.0)) <= 1e-12


def test_zeta_phase_identity():
    # zeta_n = exp(i((n+1) eta + 2 theta_n)) propagates exactly through the
    # recursion, so the two integrations only drift by rounding
    cfg = _cfg(0.3)
    eta = 1.5708
    tr = run(cfg, SpectralPoint(eta), 10_000)
    expect = np.exp(1j * ((tr.steps + 1) * eta + 2.0 * tr.theta))
    assert np.max(np.abs(tr.zeta - expect)) <= 1e-9


def test_phase_increments_below_pi():
    rng = np.random.default_rng(23)
    cfg = random_config(rng)
    tr = run(cfg, SpectralPoint(random_eta(rng)), 5000)
    assert np.max(np.abs(np.diff(tr.theta))) < math.pi


# ---------------------------------------------------------------------------
# expansion diagnostics


def test_default_decorrelation_time():
    assert default_decorrelation_time(_cfg(0.1)) == 3
    assert default_decorrelation_time(_cfg(0.05)) == 4
    assert default_decorrelation_time(_cfg(0.5)) == 1


def test_diagnostics_validation():
    cfg = _cfg(0.1)
    s = SpectralPoint(1.5708)
    with pytest.raises(ValueError):
        expansion_diagnostics(cfg, s, 100, T=0)
    with pytest.raises(ValueError):
        expansion_diagnostics(cfg, s, 100, T=100)


def test_second_order_residual_small():
    lam = 0.1
    d = expansion_diagnostics(_cfg(lam), SpectralPoint(1.5708), 100_000)
    assert d.T == 3
    assert d.residual_123 <= 5.0 * lam**3
    assert d.residual_456 <= 5.0 * lam**3 * math.log(1.0 / lam) ** 2


def test_leading_term_matches_mean_square():
    # I1 estimates (lam^2 / 2) <|F|^2> = lam^2 / 4 for the two-frequency
    # preset; the sampler variance of |F|^2 is 1/8 and orbit correlations of
    # cos(x - y) vanish at every lag, so a plain 3 sigma band applies
    lam = 0.3
    N = 100_000
    d = expansion_diagnostics(_cfg(lam), SpectralPoint(1.5708), N)
    sigma = (lam**2 / 2.0) * math.sqrt(0.125) / math.sqrt(N)
    assert abs(d.I1 - lam**2 / 4.0) <= 3.0 * sigma


def test_residual_scales_like_coupling_cubed():
    rng = np.random.default_rng(np.random.SeedSequence(7))
    base = TorusPoint.random(rng)
    lams = (0.2, 0.1, 0.05)
    logs = []
    for lam in lams:
        cfg = VerblunskyConfig(lam=lam, base=base, autom=CAT_MAP, alpha=preset("alpha0"))
        d = expansion_diagnostics(cfg, SpectralPoint(1.5708), 100_000)
        logs.append(math.log(d.residual_123))
    slope = np.polyfit(np.log(lams), logs, 1)[0]
    assert slope >= 2.5


def test_free_diagnostics_vanish():
    d = expansion_diagnostics(free_config(), SpectralPoint(1.0), 1000, T=2)
    assert d.lhs == 0.0
    assert d.residual_123 <= 1e-200
    assert d.residual_456 <= 1e-200


def test_csv_row_field_count():
    d = expansion_diagnostics(_cfg(0.2), SpectralPoint(1.1), 500, T=2)
    header_fields = d.CSV_HEADER.split(",")
    row_fields = d.csv_row().split(",")
    assert len(row_fields) == len(header_fields) == 11
