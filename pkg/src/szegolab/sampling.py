"""Sampling functions on the torus and their dynamical correlations.

The sampling function is a trigonometric polynomial with zero mean and
sup-norm bound below one. Because the automorphism permutes frequencies,
autocorrelations along the orbit reduce to finite exact sums, the
correlation sequence has compact support, and its Fourier transform (the
spectral function evaluated on the unit circle) is available in closed
form.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, NamedTuple

import numpy as np

from .torus_dynamics import ToralAutomorphism, TorusPoint, frequency_pushforward

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class TrigPolynomial:
    """Zero-mean trigonometric polynomial sum_k c_k exp(i k . p).

    coeffs maps integer frequency pairs to complex amplitudes. sup_bound is
    the triangle-inequality bound sum |c_k| and must not exceed one;
    grad_bound is sum |k|_2 |c_k|.
    """

    coeffs: Mapping[tuple[int, int], complex]
    sup_bound: float
    grad_bound: float

    @classmethod
    def from_coeffs(cls, coeffs: Mapping[tuple[int, int], complex]) -> "TrigPolynomial":
        clean: dict[tuple[int, int], complex] = {}
        for k, c in coeffs.items():
            k1, k2 = int(k[0]), int(k[1])
            c = complex(c)
            if not (math.isfinite(c.real) and math.isfinite(c.imag)):
                raise ValueError(f"non-finite coefficient at {k}")
            if c == 0:
                continue
            if (k1, k2) == (0, 0):
                raise ValueError("mean must vanish: coefficient at (0, 0)")
            clean[(k1, k2)] = clean.get((k1, k2), 0.0) + c
        clean = {k: c for k, c in clean.items() if c != 0}
        if not clean:
            raise ValueError("empty coefficient set")
        sup = sum(abs(c) for c in clean.values())
        if sup > 1.0 + 1e-12:
            raise ValueError(f"sup-norm bound {sup} exceeds 1")
        grad = sum(math.hypot(k[0], k[1]) * abs(c) for k, c in clean.items())
        return cls(coeffs=clean, sup_bound=sup, grad_bound=grad)

    def mean_square(self) -> float:
        """Spatial average of |value|^2 (Parseval)."""
        return sum(abs(c) ** 2 for c in self.coeffs.values())


PRESETS = {
    "alpha0": {(1, 0): 0.5, (0, 1): 0.5},
    "alpha1": {(1, 0): 0.5, (2, 1): 0.5},
}


def preset(name: str) -> TrigPolynomial:
    try:
        coeffs = PRESETS[name]
    except KeyError:
        raise ValueError(f"unknown preset {name!r}; choices: {sorted(PRESETS)}")
    return TrigPolynomial.from_coeffs(coeffs)


def evaluate(alpha: TrigPolynomial, p: TorusPoint) -> complex:
    """Value of the polynomial at one torus point."""
    out = 0.0 + 0.0j
    for (k1, k2), c in alpha.coeffs.items():
        out += c * complex(math.cos(k1 * p.x + k2 * p.y), math.sin(k1 * p.x + k2 * p.y))
    return out


def evaluate_many(alpha: TrigPolynomial, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Vectorized evaluation on coordinate arrays."""
    out = np.zeros(np.broadcast(x, y).shape, dtype=np.complex128)
    for (k1, k2), c in alpha.coeffs.items():
        out += c * np.exp(1j * (k1 * x + k2 * y))
    return out


def autocorrelation_exact(alpha: TrigPolynomial, A: ToralAutomorphism, n: int) -> complex:
    """<conj(alpha(p)) alpha(A^n p)> integrated over the torus.

    The automorphism maps the frequency k of alpha(A^n .) to (A^T)^n k, so
    the integral picks out coincidences with the original support and the
    sum is exact.
    """
    out = 0.0 + 0.0j
    for k, c in alpha.coeffs.items():
        kn = frequency_pushforward(A, k, n)
        base = alpha.coeffs.get(kn)
        if base is not None:
            # term <conj(c_kn e^{i kn p}) c_k e^{i kn p}> of <conj(alpha) alpha o A^n>
            out += np.conj(base) * c
    return complex(out)


class BirkhoffEstimate(NamedTuple):
    value: complex
    stderr: float


def autocorrelation_birkhoff(
    alpha: TrigPolynomial,
    A: ToralAutomorphism,
    n: int,
    samples: int,
    seed: int,
) -> BirkhoffEstimate:
    """Monte Carlo estimate of the autocorrelation over uniform points.

    Returns the sample mean of conj(alpha(p)) alpha(A^n p) and the standard
    error of that mean (combined over real and imaginary parts).
    """
    if samples < 2:
        raise ValueError("need at least 2 samples")
    rng = np.random.default_rng(seed)
    x = rng.uniform(0.0, TWO_PI, size=samples)
    y = rng.uniform(0.0, TWO_PI, size=samples)
    v0 = evaluate_many(alpha, x, y)
    (a, b), (c, d) = A.entries if n >= 0 else (
        A.inverse_entries()
    )
    for _ in range(abs(n)):
        x, y = (a * x + b * y) % TWO_PI, (c * x + d * y) % TWO_PI
    vn = evaluate_many(alpha, x, y)
    w = np.conj(v0) * vn
    mean = complex(w.mean())
    stderr = float(np.sqrt(np.mean(np.abs(w - mean) ** 2) / samples))
    return BirkhoffEstimate(mean, stderr)


def _dual_components(A: ToralAutomorphism, k: tuple[int, int]) -> tuple[float, float]:
    """Coordinates of the frequency k in the eigenbasis of the transpose.

    The transpose has the same eigenvalues; its eigenvector for rho is
    orthogonal to v_minus and vice versa, which gives the components by
    projection without solving a system.
    """
    vpx, vpy = A.v_plus
    vmx, vmy = A.v_minus
    # write k = c_plus u_plus + c_minus u_minus with u_plus _|_ v_minus
    up = np.array([vmy, -vmx])
    um = np.array([vpy, -vpx])
    kv = np.array([float(k[0]), float(k[1])])
    det = up[0] * um[1] - up[1] * um[0]
    c_plus = (kv[0] * um[1] - kv[1] * um[0]) / det
    c_minus = (up[0] * kv[1] - up[1] * kv[0]) / det
    return c_plus, c_minus


def correlation_cutoff(alpha: TrigPolynomial, A: ToralAutomorphism) -> int:
    """Smallest N_c with autocorrelation identically zero for |n| > N_c.

    A frequency pushed forward n times has norm at least
    |c_plus| rho^n - |c_minus|, so once that exceeds the support radius the
    correlation vanishes for good; the returned cutoff is then sharpened by
    direct evaluation below that bound.
    """
    support = list(alpha.coeffs)
    radius = max(math.hypot(k[0], k[1]) for k in support)
    log_rho = math.log(abs(A.rho))
    bound = 0
    for k in support:
        c_plus, c_minus = _dual_components(A, k)
        for grow, other in ((abs(c_plus), abs(c_minus)), (abs(c_minus), abs(c_plus))):
            # integer frequencies never sit on an eigendirection (the
            # eigenvalue is a quadratic irrational), so grow > 0
            n0 = math.ceil(math.log((radius + other + 1.0) / grow) / log_rho)
            bound = max(bound, n0)
    bound = max(bound, 1)
    if bound > 200:
        raise ValueError("support too spread out for a practical cutoff")
    cutoff = 0
    for n in range(1, bound + 1):
        if autocorrelation_exact(alpha, A, n) != 0 or autocorrelation_exact(alpha, A, -n) != 0:
            cutoff = n
    return cutoff


@dataclass(frozen=True)
class CorrelationSpectrum:
    """Two-sided correlation sequence and its trigonometric transform.

    correlations[i] holds the autocorrelation at lag i - cutoff for
    i = 0 .. 2 cutoff. Values at lags beyond the cutoff vanish exactly.
    """

    correlations: np.ndarray
    cutoff: int
    _cache: dict = field(default_factory=dict, compare=False, repr=False)

    @classmethod
    def build(cls, alpha: TrigPolynomial, A: ToralAutomorphism) -> "CorrelationSpectrum":
        nc = correlation_cutoff(alpha, A)
        corr = np.array(
            [autocorrelation_exact(alpha, A, n) for n in range(-nc, nc + 1)],
            dtype=np.complex128,
        )
        return cls(correlations=corr, cutoff=nc)

    def lag(self, n: int) -> complex:
        if abs(n) > self.cutoff:
            return 0.0 + 0.0j
        return complex(self.correlations[n + self.cutoff])

    def value(self, eta: float) -> float:
        """Spectral function at angle eta, sum_n e^{i n eta} corr(n)."""
        key = float(eta)
        hit = self._cache.get(key)
        if hit is not None:
            return hit
        n = np.arange(-self.cutoff, self.cutoff + 1)
        total = complex(np.sum(np.exp(1j * n * key) * self.correlations))
        if abs(total.imag) > 1e-10:
            raise ValueError(f"spectral function not real at eta={eta}: {total}")
        out = float(total.real)
        self._cache[key] = out
        return out


def spectral_function(
    alpha: TrigPolynomial,
    A: ToralAutomorphism,
    eta,
    spectrum: CorrelationSpectrum | None = None,
) -> float | np.ndarray:
    """Spectral function at one angle or an array of angles."""
    spec = spectrum if spectrum is not None else CorrelationSpectrum.build(alpha, A)
    if np.ndim(eta) == 0:
        return spec.value(float(eta))
    return np.array([spec.value(float(e)) for e in np.asarray(eta).ravel()]).reshape(
        np.shape(eta)
    )


def spectral_window(
    alpha: TrigPolynomial,
    A: ToralAutomorphism,
    delta: float,
    c: float,
    grid_step: float = 1e-3,
) -> list[tuple[float, float]]:
    """Subintervals of [delta, pi - delta] u [pi + delta, 2 pi - delta]
    where the spectral function exceeds c.

    Endpoints interior to the scan ranges are located by bisection to about
    1e-12; endpoints at the range boundary are kept as is.
    """
    if not (0.0 < delta < math.pi / 4):
        raise ValueError("delta must lie in (0, pi/4)")
    if c <= 0.0:
        raise ValueError("level c must be positive")
    spec = CorrelationSpectrum.build(alpha, A)

    def f(eta: float) -> float:
        return spec.value(eta) - c

    intervals: list[tuple[float, float]] = []
    for lo, hi in ((delta, math.pi - delta), (math.pi + delta, TWO_PI - delta)):
        npts = max(2, int(math.ceil((hi - lo) / grid_step)) + 1)
        grid = np.linspace(lo, hi, npts)
        vals = np.array([f(g) for g in grid])
        above = vals > 0.0
        start: float | None = None
        for i in range(npts):
            if above[i] and start is None:
                start = lo if i == 0 else _bisect(f, grid[i - 1], grid[i])
            elif not above[i] and start is not None:
                intervals.append((start, _bisect(f, grid[i - 1], grid[i])))
                start = None
        if start is not None:
            intervals.append((start, hi))
    return intervals


def _bisect(f, lo: float, hi: float, tol: float = 1e-12) -> float:
    flo = f(lo)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if hi - lo < tol:
            return mid
        fm = f(mid)
        if (flo <= 0.0) == (fm <= 0.0):
            lo, flo = mid, fm
        else:
            hi = mid
    return 0.5 * (lo + hi)
