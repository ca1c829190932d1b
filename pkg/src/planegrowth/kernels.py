"""Closed-form kernels: Weierstrass primary factors, disc Green/Poisson.

The primary kernel of genus p is

    G_p(z) = log|1 - z| + Re sum_{k=1..p} z^k / k = log|E(z, p)|,

the log-modulus of the primary factor E(z, p).  For |z| < 1 it equals
the tail series -Re sum_{k>p} z^k / k.  Its cosine-Fourier coefficients
on circles have closed forms; the signs of the k > p branches here are
the quadrature-validated ones (the classical tables print them with the
opposite sign, which a direct integration refutes).
"""
from __future__ import annotations

import numpy as np
from scipy.integrate import quad

from .errors import ValidationError
from .numerics import reduce_to_principal

NEG_INF = float("-inf")


def primary_kernel(z, p: int) -> tuple[np.ndarray, np.ndarray]:
    """Primary factor and kernel: (E(z,p), G_p(z) = log|E|).

    z = 1 is allowed; there E = 0 and G carries the -inf marker so that
    quadratures can skip the point instead of failing.
    """
    if p < 0:
        raise ValidationError("genus p must be nonnegative")
    z = np.asarray(z, dtype=complex)
    poly = np.zeros(np.shape(z), dtype=complex)
    zk = np.ones(np.shape(z), dtype=complex)
    for k in range(1, p + 1):
        zk = zk * z
        poly = poly + zk / k
    E = (1.0 - z) * np.exp(poly)
    with np.errstate(divide="ignore"):
        G = np.log(np.abs(1.0 - z)) + poly.real
    if z.ndim == 0:
        return complex(E), float(G)
    return E, G


def primary_kernel_value(z, p: int):
    """G_p(z) alone, vectorized."""
    return primary_kernel(z, p)[1]


def primary_kernel_series(z, p: int, tol: float = 1e-16):
    """Tail-series evaluation -Re sum_{k>p} z^k/k, valid for |z| < 1.

    Independent of the closed form; used as its oracle on the unit disc.
    """
    z = np.asarray(z, dtype=complex)
    if np.any(np.abs(z) >= 1.0):
        raise ValidationError("series form needs |z| < 1")
    total = np.zeros(np.shape(z), dtype=complex)
    zk = z**p if p else np.ones(np.shape(z), dtype=complex)
    k = p
    while True:
        k += 1
        zk = zk * z
        term = zk / k
        total = total + term
        if np.max(np.abs(term)) < tol or k > 10_000:
            break
    out = -total.real
    if z.ndim == 0:
        return float(out)
    return out


def _envelope(z: np.ndarray, p: int) -> np.ndarray:
    """Three-regime comparison envelope for |G_p|: |z|^{p+1} inside,
    |z|^p (log|z| when p=0) outside, their min on the middle annulus."""
    r = np.abs(z)
    inner = r ** (p + 1)
    outer = np.log(np.maximum(r, np.e)) if p == 0 else r**p
    out = np.where(r <= 0.5, inner, np.where(r >= 2.0, outer, np.minimum(inner, np.maximum(outer, 1.0))))
    return np.maximum(out, 1e-300)


def kernel_envelope_check(
    p: int,
    r_max: float = 8.0,
    n_coarse: int = 48,
    margin: float = 0.1,
) -> tuple[float, bool]:
    """Fit the envelope constant A on a coarse polar grid, then verify it
    on a 4x finer grid (both grids keep |z - 1| >= margin).

    Returns (A, passed).
    """

    def grid(n: int) -> np.ndarray:
        radii = np.geomspace(1e-3, r_max, n)
        angles = np.arange(n) * (2 * np.pi / n) + np.pi / (3 * n)
        z = radii[:, None] * np.exp(1j * angles[None, :])
        return z[np.abs(z - 1.0) >= margin]

    z_c = grid(n_coarse)
    A = float(np.max(np.abs(primary_kernel_value(z_c, p)) / _envelope(z_c, p)))
    z_f = grid(4 * n_coarse)
    bound = np.abs(primary_kernel_value(z_f, p)) <= A * (1.0 + 1e-9) * _envelope(z_f, p)
    return A, bool(np.all(bound))


def circle_fourier_gp(m: int, r: float, p: int) -> float:
    """Cosine-Fourier coefficient of theta -> G_p(r e^{i theta}).

    Convention: a_0 = (1/2pi) \\oint G_p, a_m = (1/pi) \\oint G_p cos(m t) dt.
    Closed forms (r = 1 is the common limit of both branches):

        r <= 1:  0 for m <= p,           -(1/m) r^m      for m > p
        r >= 1:  log r for m = 0,
                 (r^m - r^-m)/m for 1 <= m <= p,
                 -(1/m) r^-m    for m > p

    The m > p signs are fixed by the quadrature oracle; the classical
    tables print them positive.
    """
    if m < 0:
        raise ValidationError("m must be nonnegative")
    if p < 0:
        raise ValidationError("p must be nonnegative")
    if r <= 0.0:
        raise ValidationError("r must be positive")
    if r <= 1.0:
        if m <= p:
            return 0.0
        return -(r**m) / m
    if m == 0:
        return float(np.log(r))
    if m <= p:
        return (r**m - r ** (-m)) / m
    return -(r ** (-m)) / m


def circle_fourier_gp_quadrature(m: int, r: float, p: int) -> float:
    """Adaptive-quadrature oracle for :func:`circle_fourier_gp` (r != 1)."""

    def integrand(theta: float) -> float:
        return primary_kernel_value(r * np.exp(1j * theta), p) * np.cos(m * theta)

    # integrable log singularity at theta=0 when r=1; callers keep r != 1
    val, _ = quad(integrand, 0.0, np.pi, limit=400, epsabs=1e-12, epsrel=1e-12)
    scale = 1.0 / np.pi if m == 0 else 2.0 / np.pi
    return scale * val  # even integrand: \oint = 2 * int_0^pi


def tilde_cos(rho: float, phi) -> np.ndarray | float:
    """cos(rho phi) on (-pi, pi], extended 2pi-periodically.

    For integer rho the continuation is seamless and equals cos(rho phi).
    """
    if rho <= 0.0:
        raise ValidationError("rho must be positive")
    phi0 = reduce_to_principal(phi)
    out = np.cos(rho * np.asarray(phi0))
    if np.ndim(phi) == 0:
        return float(out)
    return out


def green_disc(z, zeta, a: complex = 0.0, R: float = 1.0) -> float:
    """Green function of the disc {|w - a| < R} at (z, zeta).

    log( |zeta - z| R / (|zeta - a| |z - zeta*|) ) with zeta* the
    inversion of zeta in the boundary circle, written in the form
    |zeta - z| R / | (z-a) |zeta-a| - (zeta-a) R^2 / |zeta-a| | that
    stays stable as zeta -> a.  Nonpositive inside, 0 on the boundary.
    """
    z = complex(z)
    zeta = complex(zeta)
    a = complex(a)
    if abs(z - a) > R * (1 + 1e-12) or abs(zeta - a) > R * (1 + 1e-12):
        raise ValidationError("both points must lie in the closed disc")
    if z == zeta:
        return NEG_INF
    w = zeta - a
    u = z - a
    if w == 0.0:
        denom = R * R
    else:
        denom = abs(u * abs(w) - w * R * R / abs(w))
    return float(np.log(abs(zeta - z) * R / denom))


def poisson_disc(boundary: np.ndarray, z, a: complex = 0.0, R: float = 1.0) -> float:
    """Harmonic extension by the Poisson kernel from uniform boundary samples.

    boundary[k] are values at a + R e^{i psi_k}, psi_k = 2 pi k / n with
    n >= 64.  The trapezoid rule on the periodic grid integrates

        H(a + r e^{i phi}) = (1/2pi) \\oint f(psi) (R^2 - r^2) /
                             (R^2 - 2 R r cos(phi - psi) + r^2) dpsi.
    """
    boundary = np.asarray(boundary, dtype=float).ravel()
    n = boundary.size
    if n < 64:
        raise ValidationError(f"need >= 64 boundary samples, got {n}")
    z = complex(z)
    w = z - complex(a)
    r = abs(w)
    if r >= R:
        raise ValidationError("evaluation point must be strictly inside the disc")
    phi = np.angle(w) if r > 0 else 0.0
    psi = np.arange(n) * (2 * np.pi / n)
    kernel = (R * R - r * r) / (R * R - 2 * R * r * np.cos(phi - psi) + r * r)
    return float(np.mean(boundary * kernel))
