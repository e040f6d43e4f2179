"""Coefficient sequences sampled along torus orbits."""

import math
from fractions import Fraction

import numpy as np
import pytest

from helpers import random_config
from szegolab.sampling import preset
from szegolab.torus_dynamics import CAT_MAP, TorusPoint
from szegolab.verblunsky import (
    VerblunskyConfig,
    coefficient,
    iter_blocks,
    rho,
    sampled_values_blocks,
    sequence,
)

ALPHA0 = preset("alpha0")


def fixed_point_config(lam=0.1):
    return VerblunskyConfig(
        lam=lam, base=TorusPoint.from_turns(0, 0), autom=CAT_MAP, alpha=ALPHA0
    )


def test_fixed_point_coefficients_constant():
    cfg = fixed_point_config(0.1)
    for n in (0, 1, 5, 40):
        assert coefficient(cfg, n) == pytest.approx(0.1, abs=1e-15)


def test_period_three_zeros():
    cfg = VerblunskyConfig(
        lam=0.2,
        base=TorusPoint.from_turns(Fraction(1, 2), 0),
        autom=CAT_MAP,
        alpha=ALPHA0,
    )
    # the orbit visits (pi,0), (0,pi), (pi,pi); alpha0 vanishes at the
    # first two and equals -1 at the third
    assert coefficient(cfg, 0) == pytest.approx(0.0, abs=1e-15)
    assert coefficient(cfg, 1) == pytest.approx(0.0, abs=1e-15)
    assert coefficient(cfg, 2) == pytest.approx(-0.2, abs=1e-15)


def test_sign_flip():
    cfg = fixed_point_config(0.3)
    flipped = cfg.flipped()
    assert flipped.sign == -1
    for n in range(4):
        assert coefficient(flipped, n) == pytest.approx(-coefficient(cfg, n))
        assert rho(flipped, n) == pytest.approx(rho(cfg, n))
    assert flipped.flipped().sign == 1


def test_negative_index_rejected():
    with pytest.raises(ValueError):
        coefficient(fixed_point_config(), -1)


def test_coupling_validation():
    with pytest.raises(ValueError):
        VerblunskyConfig(
            lam=1.0, base=TorusPoint.from_radians(0, 0), autom=CAT_MAP, alpha=ALPHA0
        )
    with pytest.raises(ValueError):
        VerblunskyConfig(
            lam=-0.1, base=TorusPoint.from_radians(0, 0), autom=CAT_MAP, alpha=ALPHA0
        )
    with pytest.raises(ValueError):
        VerblunskyConfig(
            lam=0.1,
            base=TorusPoint.from_radians(0, 0),
            autom=CAT_MAP,
            alpha=ALPHA0,
            sign=2,
        )


def test_rho_examples():
    cfg = fixed_point_config(0.1)
    assert rho(cfg, 0) == pytest.approx(math.sqrt(0.99), abs=1e-15)
    zero = VerblunskyConfig(
        lam=0.2,
        base=TorusPoint.from_turns(Fraction(1, 2), 0),
        autom=CAT_MAP,
        alpha=ALPHA0,
    )
    assert rho(zero, 0) == pytest.approx(1.0, abs=1e-15)


def test_pythagorean_identity():
    rng = np.random.default_rng(31)
    for _ in range(5):
        cfg = random_config(rng)
        alphas, rhos = sequence(cfg, 2000)
        assert np.max(np.abs(np.abs(alphas) ** 2 + rhos**2 - 1.0)) <= 1e-15


def test_sequence_matches_pointwise():
    # comparison indices stay small: the orbit is chaotic, so any one-ulp
    # difference between the batch and pointwise coordinate paths would be
    # amplified by rho^n
    rng = np.random.default_rng(13)
    cfg = random_config(rng)
    alphas, rhos = sequence(cfg, 50)
    assert len(alphas) == len(rhos) == 50
    for n in (0, 1, 5, 9):
        assert alphas[n] == pytest.approx(coefficient(cfg, n), abs=1e-9)
        assert rhos[n] == pytest.approx(rho(cfg, n), abs=1e-9)


def test_flipped_sequence_negates_alpha_only():
    rng = np.random.default_rng(14)
    cfg = random_config(rng)
    a_plus, r_plus = sequence(cfg, 200)
    a_minus, r_minus = sequence(cfg.flipped(), 200)
    assert np.array_equal(a_minus, -a_plus)
    assert np.array_equal(r_minus, r_plus)


def test_sup_bound_strict():
    rng = np.random.default_rng(15)
    for _ in range(3):
        cfg = random_config(rng)
        alphas, _ = sequence(cfg, 100_000)
        assert np.max(np.abs(alphas)) <= cfg.lam * cfg.alpha.sup_bound


def test_orbit_mean_vanishes():
    rng = np.random.default_rng(16)
    cfg = VerblunskyConfig(
        lam=0.5, base=TorusPoint.random(rng), autom=CAT_MAP, alpha=ALPHA0
    )
    alphas, _ = sequence(cfg, 100_000)
    assert abs(np.mean(alphas)) / cfg.lam <= 0.05


def test_iter_blocks_concatenates_to_sequence():
    rng = np.random.default_rng(17)
    cfg = random_config(rng)
    alphas, _ = sequence(cfg, 70_000)
    streamed = np.concatenate(list(iter_blocks(cfg, 70_000)))
    assert np.array_equal(alphas, streamed)


def test_sampled_values_scale():
    rng = np.random.default_rng(18)
    cfg = random_config(rng)
    alphas, _ = sequence(cfg, 1000)
    values = np.concatenate(list(sampled_values_blocks(cfg, 1000)))
    assert np.max(np.abs(cfg.lam * values - alphas)) <= 1e-15
