"""Canonical potentials, circle means, Nevanlinna characteristic, Jensen
verification, and the ray-zero indicator bound.

The canonical potential of a mass distribution mu of genus p is

    Pi(z, mu, p) = sum_j m_j G_p(z / z_j),

the log-modulus of a canonical Weierstrass product when the masses are
integers.  Everything here works on finite atom sets; tail behavior is
certified separately by :func:`tail_sup`.
"""
from __future__ import annotations

import numpy as np
from scipy.integrate import quad

from .errors import NumericError, ValidationError
from .fields import PlaneField
from .kernels import primary_kernel_value
from .measures import MassDistribution
from .numerics import angle_grid

_CHUNK = 262_144  # atoms*points per evaluation block


def canonical_potential(mu: MassDistribution, p: int) -> PlaneField:
    """The field z -> sum_j m_j G_p(z / z_j); -inf exactly at the atoms.

    An empty measure gives the zero field.  Pi(0) = 0 since G_p(0) = 0.
    """
    if p < 0:
        raise ValidationError("genus p must be nonnegative")
    points, masses = mu.points, mu.masses

    def fn(z: np.ndarray) -> np.ndarray:
        z = np.asarray(z, dtype=complex)
        if points.size == 0:
            return np.zeros(z.shape, dtype=float)
        flat = z.ravel()
        out = np.empty(flat.shape, dtype=float)
        step = max(_CHUNK // max(points.size, 1), 1)
        for i in range(0, flat.size, step):
            ratios = flat[i : i + step, None] / points[None, :]
            vals = primary_kernel_value(ratios, p)
            out[i : i + step] = (masses[None, :] * vals).sum(axis=1)
        return out.reshape(z.shape)

    return PlaneField(fn, label=f"Pi(mu,{p})")


def tail_sup(mu: MassDistribution, p: int, R: float, R0: float,
             grid_n: int = 24) -> float:
    """sup over |z| <= R0 of |sum over atoms beyond R of m_j G_p(z/z_j)|.

    For a measure of genus p this is nonincreasing in R, the finite
    certificate of locally uniform convergence of the potential.
    """
    if R <= 2.0 * R0:
        raise ValidationError("need R > 2*R0")
    far = MassDistribution(mu.points[mu.radii > R], mu.masses[mu.radii > R])
    if len(far) == 0:
        return 0.0
    field = canonical_potential(far, p)
    radii = np.linspace(R0 / grid_n, R0, grid_n)
    vals = field.on_polar(radii, angle_grid(2 * grid_n))
    return float(np.max(np.abs(vals)))


def circle_means(u: PlaneField, r: float, angular_n: int = 256,
                 max_excluded_frac: float = 0.05) -> tuple[float, float, float, int]:
    """(mean, T, M, excluded) of the field on the circle of radius r.

    mean is the trapezoid mean, T the positive-part mean (the Nevanlinna
    characteristic of a subharmonic field), M the grid maximum.  Grid
    points at -inf are excluded and counted; more than 5% excluded makes
    the quadrature unreliable and raises.
    """
    if angular_n < 64:
        raise ValidationError("angular grid must have at least 64 points")
    vals = np.asarray(u(r * np.exp(1j * angle_grid(angular_n))), dtype=float)
    finite = np.isfinite(vals)
    excluded = int(angular_n - np.count_nonzero(finite))
    if excluded > max_excluded_frac * angular_n:
        raise NumericError(
            f"{excluded}/{angular_n} grid points at -inf; quadrature unreliable"
        )
    good = vals[finite]
    mean = float(np.mean(good))
    T = float(np.mean(np.maximum(good, 0.0)))
    M = float(np.max(good))
    return mean, T, M, excluded


def jensen_residual(mu: MassDistribution, p: int, r: float,
                    angular_n: int = 2048) -> float:
    """Mean-value identity defect of the canonical potential.

    For u = Pi(., mu, p), harmonic near 0, the circle mean satisfies
    mean(r) - u(0) = N(r, mu) exactly; the residual returned here is the
    quadrature error of the left-hand side.  Atoms on the circle make
    the mean meaningless, so that case is rejected with a shift hint.
    """
    if len(mu) and np.any(np.abs(mu.radii - r) <= 1e-12 * r):
        raise ValidationError(
            f"atom on the circle |z| = {r}; shift r by a small amount"
        )
    if len(mu) == 0:
        return 0.0
    u = canonical_potential(mu, p)
    # Exclusion budget: the identity needs < 1 excluded point per 1024.
    mean, _, _, excluded = circle_means(u, r, angular_n,
                                        max_excluded_frac=1.0 / 1024.0)
    return float(mean - u(0.0) - mu.log_counting(r))


def goldberg_indicator_bound(rho: float, p: int, Delta: float, phi: float,
                             t_min: float = 1e-7, max_decades: int = 18) -> float:
    """Sharp bound on the indicator of products with zeros on one ray.

    For zero counting n(t) <= Delta t^rho concentrated on the positive
    ray, the indicator at direction phi is at most

        Delta * int_0^inf t^rho K(t, phi) dt,
        K(t, phi) = -[d/dt G_p^+(e^{i phi}/t)]^-,

    with G^+ = max(G, 0) and a^- = min(a, 0).  The integrand is computed
    by central differences (step 1e-5 t) and integrated decade by decade
    with adaptive quadrature, splitting at the kinks of G^+ and at the
    t = 1 region where the kernel's singularity approaches the contour
    as phi -> 0.
    """
    if rho <= 0.0 or abs(rho - round(rho)) < 1e-12:
        raise ValidationError("rho must be positive and non-integer")
    if p != int(np.floor(rho)):
        raise ValidationError("p must equal floor(rho)")
    if Delta < 0.0:
        raise ValidationError("Delta must be nonnegative")
    if Delta == 0.0:
        return 0.0
    w = np.exp(1j * phi)

    def g_plus(t: np.ndarray) -> np.ndarray:
        return np.maximum(primary_kernel_value(w / t, p), 0.0)

    def kernel(t: np.ndarray) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        h = 1e-5 * t
        deriv = (g_plus(t + h) - g_plus(t - h)) / (2.0 * h)
        return np.maximum(-deriv, 0.0)

    # locate sign changes of G_p along the ray; integration splits there
    probe = np.geomspace(t_min, 1e8, 4096)
    gv = primary_kernel_value(w / probe, p)
    kinks = probe[:-1][np.sign(gv[:-1]) * np.sign(gv[1:]) < 0]

    def segment(a: float, b: float) -> float:
        pts = sorted({a, b, *kinks[(kinks > a) & (kinks < b)],
                      *([1.0] if a < 1.0 < b else [])})
        total = 0.0
        for lo, hi in zip(pts[:-1], pts[1:]):
            # epsabs floor: the finite-difference kernel carries ~1e-10 noise
            val, _ = quad(lambda t: t**rho * kernel(np.asarray(t)), lo, hi,
                          limit=200, epsabs=1e-9, epsrel=1e-8)
            total += val
        return total

    total, a = 0.0, t_min
    for _ in range(max_decades):
        piece = segment(a, 10.0 * a)
        total += piece
        if a > 1.0 and abs(piece) <= 0.01 * abs(total):
            break
        a *= 10.0
    else:
        raise NumericError("indicator-bound integral did not settle")
    return Delta * total
