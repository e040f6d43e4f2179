"""Hot loops for orbit generation and sequential recursions.

Every kernel is written so that it runs identically with or without numba:
the jit decorator is a no-op fallback when numba is unavailable. All kernels
carry explicit scalar state in and out so callers can stream long runs in
blocks without materializing the whole sequence.
"""

from __future__ import annotations

import math

import numpy as np

try:
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised only without numba
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]

        def wrap(f):
            return f

        return wrap


_TWO_PI = 2.0 * math.pi


@njit(cache=True)
def orbit_block(a00, a01, a10, a11, x, y, out_x, out_y):
    """Fill out_x/out_y with the orbit points starting at (x, y); return the
    point following the last recorded one (the carry for the next block)."""
    n = out_x.shape[0]
    for i in range(n):
        out_x[i] = x
        out_y[i] = y
        x, y = (a00 * x + a01 * y) % _TWO_PI, (a10 * x + a11 * y) % _TWO_PI
    return x, y


@njit(cache=True)
def transfer_block(alphas, s, m00, m01, m10, m11, log_scale):
    """Left-multiply the running product by the step matrix of each alpha.

    s is the square root of the spectral parameter. Renormalizes by the
    max-entry modulus every step, accumulating its log.
    """
    inv_s = 1.0 / s
    for k in range(alphas.shape[0]):
        a = alphas[k]
        rho = math.sqrt(1.0 - (a.real * a.real + a.imag * a.imag))
        b00 = s / rho
        b01 = -a.conjugate() * inv_s / rho
        b10 = -a * s / rho
        b11 = inv_s / rho
        n00 = b00 * m00 + b01 * m10
        n01 = b00 * m01 + b01 * m11
        n10 = b10 * m00 + b11 * m10
        n11 = b10 * m01 + b11 * m11
        mx = max(abs(n00), abs(n01), abs(n10), abs(n11))
        m00 = n00 / mx
        m01 = n01 / mx
        m10 = n10 / mx
        m11 = n11 / mx
        log_scale += math.log(mx)
    return m00, m01, m10, m11, log_scale


@njit(cache=True)
def quad_block(alphas, z, phi, phi_s, psi, psi_s, log_r):
    """Advance the four-polynomial recursion, jointly renormalized."""
    for k in range(alphas.shape[0]):
        a = alphas[k]
        rho = math.sqrt(1.0 - (a.real * a.real + a.imag * a.imag))
        ac = a.conjugate()
        n_phi = (z * phi - ac * phi_s) / rho
        n_phi_s = (phi_s - a * z * phi) / rho
        n_psi = (z * psi + ac * psi_s) / rho
        n_psi_s = (psi_s + a * z * psi) / rho
        mx = max(abs(n_phi), abs(n_phi_s), abs(n_psi), abs(n_psi_s))
        phi = n_phi / mx
        phi_s = n_phi_s / mx
        psi = n_psi / mx
        psi_s = n_psi_s / mx
        log_r += math.log(mx)
    return phi, phi_s, psi, psi_s, log_r


@njit(cache=True)
def prufer_block(alphas, z, log_r, theta, zeta, zeta_out):
    """Advance the Prufer recursion; records the pre-step zeta of every step
    into zeta_out when it is nonempty (len(alphas) entries)."""
    record = zeta_out.shape[0] > 0
    for k in range(alphas.shape[0]):
        a = alphas[k]
        if record:
            zeta_out[k] = zeta
        aa = a.real * a.real + a.imag * a.imag
        az = a * zeta
        hn = (1.0 + aa - 2.0 * az.real) / (1.0 - aa)
        log_r += 0.5 * math.log(hn)
        w = 1.0 - az
        # |alpha| < 1 forces Re(w) > 0, so the principal branch realizes
        # the |dtheta| < pi normalization directly.
        dtheta = -math.atan2(w.imag, w.real)
        theta += dtheta
        num = z * zeta * (1.0 + aa - 2.0 * az.real)
        den = w * w
        zeta = num / den
        zeta = zeta / abs(zeta)
    return log_r, theta, zeta


def warmup():
    """Trigger jit compilation of all kernels on tiny inputs."""
    ox = np.empty(4)
    oy = np.empty(4)
    orbit_block(2.0, 1.0, 1.0, 1.0, 0.3, 0.4, ox, oy)
    al = np.full(4, 0.05 + 0.02j, dtype=np.complex128)
    s = complex(math.cos(0.25), math.sin(0.25))
    transfer_block(al, s, 1.0 + 0j, 0j, 0j, 1.0 + 0j, 0.0)
    z = s * s
    quad_block(al, z, 1.0 + 0j, 1.0 + 0j, 1.0 + 0j, 1.0 + 0j, 0.0)
    prufer_block(al, z, 0.0, 0.0, z, np.empty(4, dtype=np.complex128))
