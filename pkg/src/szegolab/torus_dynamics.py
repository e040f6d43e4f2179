"""Hyperbolic automorphisms of the two-torus and their orbits.

The torus is R^2 / (2 pi Z)^2. An automorphism is an integer matrix with
determinant one and trace of modulus larger than two, acting by matrix
multiplication modulo 2 pi. Points can carry exact rational coordinates
(in turns, i.e. fractions of 2 pi) so periodic orbits and group laws can be
checked without rounding.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from ._kernels import orbit_block

TWO_PI = 2.0 * math.pi

Entries = tuple[tuple[int, int], tuple[int, int]]


@dataclass(frozen=True)
class ToralAutomorphism:
    """Validated integer matrix together with its eigendata.

    rho is the eigenvalue of modulus larger than one, rho_minus the other
    one; v_plus and v_minus are unit eigenvectors for them.
    """

    entries: Entries
    rho: float
    rho_minus: float
    v_plus: tuple[float, float]
    v_minus: tuple[float, float]

    @property
    def expansion_rate(self) -> float:
        """Log of the expanding eigenvalue modulus, the orbit's growth rate."""
        return math.log(abs(self.rho))

    def inverse_entries(self) -> Entries:
        (a, b), (c, d) = self.entries
        return ((d, -b), (-c, a))


def _eigvec(entries: Entries, t: float) -> tuple[float, float]:
    (a, b), (c, d) = entries
    # Validation rules out b == 0 (that would force |trace| == 2).
    vx, vy = float(b), t - a
    norm = math.hypot(vx, vy)
    return (vx / norm, vy / norm)


def validate(matrix) -> ToralAutomorphism:
    """Check the hyperbolicity conditions and package the eigendata.

    Accepts a 2x2 nested sequence or a flat length-4 sequence of integers.
    Raises ValueError when the matrix is not integer, not of determinant
    one, or not hyperbolic.
    """
    flat = list(np.asarray(matrix).reshape(-1))
    if len(flat) != 4:
        raise ValueError("expected four integer entries")
    vals = []
    for v in flat:
        iv = int(v)
        if iv != v:
            raise ValueError(f"non-integer entry {v!r}")
        vals.append(iv)
    a, b, c, d = vals
    det = a * d - b * c
    if det != 1:
        raise ValueError(f"determinant must be 1, got {det}")
    tr = a + d
    if abs(tr) <= 2:
        raise ValueError(f"|trace| must exceed 2, got {tr}")
    entries = ((a, b), (c, d))
    disc = math.sqrt(tr * tr - 4.0)
    if tr > 0:
        rho = (tr + disc) / 2.0
    else:
        rho = (tr - disc) / 2.0
    rho_minus = 1.0 / rho
    return ToralAutomorphism(
        entries=entries,
        rho=rho,
        rho_minus=rho_minus,
        v_plus=_eigvec(entries, rho),
        v_minus=_eigvec(entries, rho_minus),
    )


CAT_MAP = validate([[2, 1], [1, 1]])


@dataclass(frozen=True)
class TorusPoint:
    """Point on the torus, radian coordinates in [0, 2 pi).

    x_turn/y_turn, when present, are exact coordinates as fractions of a
    full turn; the float fields are derived from them.
    """

    x: float
    y: float
    x_turn: Fraction | None = None
    y_turn: Fraction | None = None

    def __post_init__(self):
        object.__setattr__(self, "x", self.x % TWO_PI)
        object.__setattr__(self, "y", self.y % TWO_PI)

    @classmethod
    def from_radians(cls, x: float, y: float) -> "TorusPoint":
        return cls(x=float(x), y=float(y))

    @classmethod
    def from_turns(cls, x_turn, y_turn) -> "TorusPoint":
        fx = Fraction(x_turn) % 1
        fy = Fraction(y_turn) % 1
        return cls(x=TWO_PI * float(fx), y=TWO_PI * float(fy), x_turn=fx, y_turn=fy)

    @classmethod
    def random(cls, rng: np.random.Generator) -> "TorusPoint":
        x, y = rng.uniform(0.0, TWO_PI, size=2)
        return cls(x=float(x), y=float(y))

    @property
    def is_exact(self) -> bool:
        return self.x_turn is not None and self.y_turn is not None

    def same_turns(self, other: "TorusPoint") -> bool:
        if not (self.is_exact and other.is_exact):
            raise ValueError("both points need exact coordinates")
        return self.x_turn == other.x_turn and self.y_turn == other.y_turn


def matrix_power(entries: Entries, n: int) -> Entries:
    """Exact integer power of a determinant-one matrix; n may be negative."""
    if n < 0:
        (a, b), (c, d) = entries
        return matrix_power(((d, -b), (-c, a)), -n)
    result = ((1, 0), (0, 1))
    base = entries
    while n > 0:
        if n & 1:
            (a, b), (c, d) = result
            (e, f), (g, h) = base
            result = (
                (a * e + b * g, a * f + b * h),
                (c * e + d * g, c * f + d * h),
            )
        (e, f), (g, h) = base
        base = (
            (e * e + f * g, e * f + f * h),
            (g * e + h * g, g * f + h * h),
        )
        n >>= 1
    return result


def iterate(A: ToralAutomorphism, p: TorusPoint, n: int) -> TorusPoint:
    """Apply the automorphism n times (inverse for negative n).

    Exact points go through integer matrix powers acting on turn fractions.
    Float points are stepped one multiplication at a time, reducing modulo
    2 pi after each step.
    """
    if n == 0:
        return p
    if p.is_exact:
        (a, b), (c, d) = matrix_power(A.entries, n)
        fx = (a * p.x_turn + b * p.y_turn) % 1
        fy = (c * p.x_turn + d * p.y_turn) % 1
        return TorusPoint.from_turns(fx, fy)
    ent = A.entries if n > 0 else A.inverse_entries()
    (a, b), (c, d) = ent
    x, y = p.x, p.y
    for _ in range(abs(n)):
        x, y = (a * x + b * y) % TWO_PI, (c * x + d * y) % TWO_PI
    return TorusPoint.from_radians(x, y)


def orbit_arrays(A: ToralAutomorphism, p: TorusPoint, n: int) -> tuple[np.ndarray, np.ndarray]:
    """First n orbit points (starting at p itself) as coordinate arrays."""
    out_x = np.empty(n)
    out_y = np.empty(n)
    (a, b), (c, d) = A.entries
    orbit_block(float(a), float(b), float(c), float(d), p.x, p.y, out_x, out_y)
    return out_x, out_y


def orbit_blocks(A: ToralAutomorphism, p: TorusPoint, n: int, block: int = 1 << 16):
    """Yield the orbit of p in chunks of coordinate arrays, n points total."""
    (a, b), (c, d) = A.entries
    af, bf, cf, df = float(a), float(b), float(c), float(d)
    x, y = p.x, p.y
    done = 0
    while done < n:
        size = min(block, n - done)
        out_x = np.empty(size)
        out_y = np.empty(size)
        x, y = orbit_block(af, bf, cf, df, x, y, out_x, out_y)
        yield out_x, out_y
        done += size


FREQUENCY_POWER_CAP = 200


def frequency_pushforward(A: ToralAutomorphism, k: tuple[int, int], n: int) -> tuple[int, int]:
    """Image of an integer frequency vector under the transpose action,
    (A^T)^n k, computed in exact integer arithmetic.

    The power is capped at |n| <= 200; beyond that the entries are
    astronomically large and indicate a misuse upstream.
    """
    if abs(n) > FREQUENCY_POWER_CAP:
        raise ValueError(f"|n| <= {FREQUENCY_POWER_CAP} required, got {n}")
    k1, k2 = int(k[0]), int(k[1])
    (a, b), (c, d) = matrix_power(A.entries, n)
    # transpose of A^n acts on frequencies
    return (a * k1 + c * k2, b * k1 + d * k2)
