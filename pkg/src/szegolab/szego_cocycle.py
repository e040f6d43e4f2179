"""Szego cocycle over the torus automorphism and Lyapunov exponents.

One step of the cocycle is the determinant-one matrix

    A(alpha, s) = (1 - |alpha|^2)^{-1/2} [[s, -conj(alpha)/s],
                                          [-alpha s, 1/s]]

with s a fixed square root of the spectral parameter z on the unit circle.
Products over the coefficient sequence are accumulated in scaled form
(matrix times exp(log_scale)) so runs of 10^7 steps neither overflow nor
lose the exponent. The same module carries the scalar recursion for the
orthogonal polynomials of the first and second kind, which gives an
independent route to the Lyapunov exponent and a cross-check identity
tying the product to the polynomials.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

from ._kernels import quad_block, transfer_block
from .verblunsky import VerblunskyConfig, iter_blocks

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class SpectralPoint:
    """Point z = e^{i eta} on the unit circle with a chosen square root.

    branch selects between the two square roots; the default is
    s = e^{i eta / 2}. Flipping the branch multiplies an N-step product by
    (-1)^N and is exposed for diagnostics only.
    """

    eta: float
    branch: int = 1

    def __post_init__(self):
        object.__setattr__(self, "eta", float(self.eta) % TWO_PI)
        if self.branch not in (1, -1):
            raise ValueError("branch must be +1 or -1")

    @property
    def z(self) -> complex:
        return cmath.exp(1j * self.eta)

    @property
    def sqrt_z(self) -> complex:
        return self.branch * cmath.exp(0.5j * self.eta)

    def phase_power(self, n: int) -> complex:
        """sqrt_z raised to the n-th power, evaluated stably for large n."""
        out = cmath.exp(0.5j * ((n * self.eta) % (2.0 * TWO_PI)))
        if self.branch == -1 and n % 2:
            out = -out
        return out


def step_matrix(alpha_n: complex, s: SpectralPoint) -> np.ndarray:
    """Single determinant-one cocycle step for one coefficient."""
    a = complex(alpha_n)
    if abs(a) >= 1.0:
        raise ValueError("coefficient must lie strictly inside the unit disk")
    r = math.sqrt(1.0 - abs(a) ** 2)
    sq = s.sqrt_z
    return np.array(
        [[sq / r, -np.conj(a) / (sq * r)], [-a * sq / r, 1.0 / (sq * r)]],
        dtype=np.complex128,
    )


@dataclass(frozen=True)
class ScaledProduct:
    """Product of cocycle steps stored as matrix * exp(log_scale).

    The stored matrix has max-entry modulus one by construction (the
    kernel renormalizes every step), so all the growth lives in log_scale.
    """

    matrix: np.ndarray
    log_scale: float
    steps: int

    def sigma_max(self) -> float:
        """Largest singular value of the stored matrix (closed form)."""
        m = self.matrix
        t = float(np.sum(np.abs(m) ** 2))
        d = abs(m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0]) ** 2
        disc = max(t * t - 4.0 * d, 0.0)
        return math.sqrt((t + math.sqrt(disc)) / 2.0)

    def log_norm(self) -> float:
        """log of the operator norm of the full product."""
        return self.log_scale + math.log(self.sigma_max())

    def log_abs_det(self) -> float:
        """log |det| of the full product; zero for determinant-one steps."""
        m = self.matrix
        return 2.0 * self.log_scale + math.log(
            abs(m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0])
        )

    def recover(self) -> np.ndarray:
        """Unscaled product matrix; overflows for long runs, test use only."""
        return self.matrix * math.exp(self.log_scale)


def transfer(cfg: VerblunskyConfig, s: SpectralPoint, N: int) -> ScaledProduct:
    """N-step cocycle product, later steps multiplying from the left."""
    if N < 0:
        raise ValueError("step count must be nonnegative")
    m00, m01, m10, m11 = 1.0 + 0j, 0j, 0j, 1.0 + 0j
    log_scale = 0.0
    sq = s.sqrt_z
    for alphas in iter_blocks(cfg, N):
        m00, m01, m10, m11, log_scale = transfer_block(
            alphas, sq, m00, m01, m10, m11, log_scale
        )
    matrix = np.array([[m00, m01], [m10, m11]], dtype=np.complex128)
    return ScaledProduct(matrix=matrix, log_scale=log_scale, steps=N)


@dataclass(frozen=True)
class PolynomialQuad:
    """First and second kind polynomials and their reversed partners at
    step n, stored as values times exp(log_r)."""

    phi: complex
    phi_star: complex
    psi: complex
    psi_star: complex
    log_r: float
    n: int

    def log_abs_phi(self) -> float:
        return self.log_r + math.log(abs(self.phi))

    def log_abs_psi(self) -> float:
        return self.log_r + math.log(abs(self.psi))


def polynomials(cfg: VerblunskyConfig, s: SpectralPoint, N: int) -> PolynomialQuad:
    """Run the scalar recursion for (phi, phi*, psi, psi*) up to step N.

    The second-kind pair evolves with the sign-flipped coefficients. All
    four values share one running scale factor exp(log_r).
    """
    if N < 0:
        raise ValueError("step count must be nonnegative")
    z = s.z
    phi, phi_s, psi, psi_s = 1.0 + 0j, 1.0 + 0j, 1.0 + 0j, 1.0 + 0j
    log_r = 0.0
    for alphas in iter_blocks(cfg, N):
        phi, phi_s, psi, psi_s, log_r = quad_block(
            alphas, z, phi, phi_s, psi, psi_s, log_r
        )
    return PolynomialQuad(
        phi=phi, phi_star=phi_s, psi=psi, psi_star=psi_s, log_r=log_r, n=N
    )


def transfer_identity_residual(cfg: VerblunskyConfig, s: SpectralPoint, N: int) -> float:
    """Relative Frobenius mismatch between the cocycle product and the
    polynomial combination

        M_N = s^{-N} / 2 * [[phi + psi, phi - psi],
                            [phi* - psi*, phi* + psi*]].

    The prefactor s^{-N} restores determinant one; without it the scalar
    side has determinant z^N.
    """
    prod = transfer(cfg, s, N)
    quad = polynomials(cfg, s, N)
    phase = s.phase_power(-N)
    combo = 0.5 * phase * np.array(
        [
            [quad.phi + quad.psi, quad.phi - quad.psi],
            [quad.phi_star - quad.psi_star, quad.phi_star + quad.psi_star],
        ],
        dtype=np.complex128,
    )
    scale = math.exp(quad.log_r - prod.log_scale)
    diff = prod.matrix - scale * combo
    return float(np.linalg.norm(diff) / np.linalg.norm(prod.matrix))


def lyapunov_poly(cfg: VerblunskyConfig, s: SpectralPoint, N: int) -> float:
    """Finite-volume Lyapunov exponent from the polynomial route,
    (1/2N) log(|phi_N|^2 + |psi_N|^2)."""
    if N <= 0:
        raise ValueError("need at least one step")
    quad = polynomials(cfg, s, N)
    inside = abs(quad.phi) ** 2 + abs(quad.psi) ** 2
    return (quad.log_r + 0.5 * math.log(inside)) / N


def lyapunov_norm(cfg: VerblunskyConfig, s: SpectralPoint, N: int) -> float:
    """Finite-volume Lyapunov exponent from the product operator norm."""
    if N <= 0:
        raise ValueError("need at least one step")
    return transfer(cfg, s, N).log_norm() / N
