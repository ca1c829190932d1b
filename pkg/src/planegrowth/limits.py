"""Scaling transforms, limit-set sampling, densities, recurrence tests.

The scaling group P_t = t e^{i gamma log t} (a ray dilation for gamma = 0,
a logarithmic spiral otherwise) drives every asymptotic notion here: the
rescaled fields u_t(z) = u(P_t z) t^{-rho(t)}, the rescaled measures
mu_t(E) = t^{-rho(t)} mu(P_t E), sector densities, and the completely
regular growth (CRG) test h == h_lower.  Limit sets are always handled
through their t-sampled orbits on a shared log-uniform grid.
"""
from __future__ import annotations

import cmath

import numpy as np
from scipy.integrate import quad

from .errors import ValidationError
from .fields import PlaneField
from .indicators import DirectionFunction, indicator_pair
from .kernels import primary_kernel_value
from .measures import MassDistribution
from .numerics import reduce_to_principal, top_decade
from .scale import ProximateOrder


def spiral_map(t: float, gamma: float = 0.0) -> complex:
    """Multiplier of P_t: z -> t e^{i gamma log t} z."""
    if t <= 0.0:
        raise ValidationError("t must be positive")
    return t * cmath.exp(1j * gamma * np.log(t))


def scale_field(u: PlaneField, po: ProximateOrder, t: float,
                gamma: float = 0.0) -> PlaneField:
    """u_t(z) = u(P_t z) t^{-rho(t)}."""
    mult = spiral_map(t, gamma)
    weight = float(t ** (-po.rho_at(t)))
    return PlaneField(lambda z: u(np.asarray(z, dtype=complex) * mult) * weight,
                      label=f"({u.label})_t={t:g}")


def scale_measure(mu: MassDistribution, po: ProximateOrder, t: float,
                  gamma: float = 0.0) -> MassDistribution:
    """mu_t: atoms z_j -> P_t^{-1} z_j with masses m_j t^{-rho(t)} (m = 2)."""
    mult = spiral_map(t, gamma)
    weight = float(t ** (-po.rho_at(t)))
    return MassDistribution(mu.points / mult, mu.masses * weight)


def sector_density(
    mu: MassDistribution,
    po: ProximateOrder,
    alpha: float,
    beta: float,
    t_grid: np.ndarray,
    exists_tol: float = 0.05,
) -> tuple[float, float, bool]:
    """Upper/lower angular density of the sector over the top decade.

    Returns (upper, lower, exists) where upper/lower are the extrema of
    mu_t(unit sector) = t^{-rho(t)} mu(sector of radius t) over top-decade
    t, and existence means their gap is within exists_tol of the upper.
    """
    t_grid = np.asarray(t_grid, dtype=float)
    if np.log10(t_grid[-1] / t_grid[0]) < 2.0 - 1e-9:
        raise ValidationError("t_grid must span at least 2 decades")
    if not (beta > alpha):
        raise ValidationError("need beta > alpha")
    ts = t_grid[top_decade(t_grid)]
    vals = np.array(
        [mu.sector_mass(alpha, beta, t) * t ** (-po.rho_at(t)) for t in ts]
    )
    upper, lower = float(np.max(vals)), float(np.min(vals))
    exists = bool(upper - lower <= exists_tol * max(upper, 1e-300))
    return upper, lower, exists


def crg_test(
    u: PlaneField,
    po: ProximateOrder,
    t_grid: np.ndarray,
    phi_grid: np.ndarray | int = 256,
    tol: float = 0.05,
) -> bool:
    """Completely regular growth: indicator equals lower indicator.

    True iff max(h - h_lower) <= tol * scale(h) over unflagged directions.
    """
    h, h_low = indicator_pair(u, po, t_grid, phi_grid)
    ok = np.isfinite(h.values) & np.isfinite(h_low.values)
    if not np.any(ok):
        return False
    gap = float(np.max(h.values[ok] - h_low.values[ok]))
    return bool(gap <= tol * h.scale())


def periodic_extension(
    mu_star: MassDistribution,
    rho: float,
    T: float,
    k_range: tuple[int, int],
) -> MassDistribution:
    """Periodic (self-similar) measure sum_k of the T-dilates of mu_star.

    mu_star must live in the annulus [1, T); the extension places atoms
    at T^k z_j with masses T^(k rho) m_j for k in the inclusive range, so
    that rescaling by T maps the atom set onto itself exactly (up to the
    k-range boundary).
    """
    if T <= 1.0:
        raise ValidationError("period T must exceed 1")
    if rho <= 0.0:
        raise ValidationError("rho must be positive")
    if len(mu_star) == 0:
        raise ValidationError("mu_star must be nonempty")
    if np.any(mu_star.radii < 1.0) or np.any(mu_star.radii >= T):
        raise ValidationError("mu_star must live in the annulus [1, T)")
    k_lo, k_hi = k_range
    if k_hi < k_lo:
        raise ValidationError("empty k range")
    points, masses = [], []
    for k in range(k_lo, k_hi + 1):
        factor = T ** float(k)
        points.append(mu_star.points * factor)
        masses.append(mu_star.masses * factor**rho)
    return MassDistribution(np.concatenate(points), np.concatenate(masses))


def chain_recurrence_test(
    points: np.ndarray,
    flow,
    eps: float,
    s: int,
    horizon: int | None = None,
) -> tuple[bool, np.ndarray]:
    """(epsilon, s)-chain recurrence of a sampled discrete-time system.

    ``points`` is an (n, d) array (or (n,) complex) of states with the
    Euclidean metric; ``flow(i, k)`` returns the index of the state k
    steps after state i, defined for all k >= s up to ``horizon``
    (default 4s).  There is an edge i -> j when some k-step image of i
    lands within eps of j; chains concatenate edges, so the pair (i, j)
    is chain-connected iff j is reachable in the transitive closure.

    Returns (recurrent, reach) with reach[i, j] the per-pair verdict and
    recurrent true iff the graph is strongly connected.
    """
    pts = np.asarray(points)
    if pts.ndim == 1:
        pts = np.stack([pts.real, pts.imag], axis=1) if np.iscomplexobj(pts) \
            else pts[:, None]
    n = pts.shape[0]
    if n == 0:
        raise ValidationError("empty sample")
    if eps <= 0.0 or s < 1:
        raise ValidationError("need eps > 0 and s >= 1")
    horizon = 4 * s if horizon is None else horizon
    dist = np.linalg.norm(pts[:, None, :] - pts[None, :, :], axis=2)

    edge = np.zeros((n, n), dtype=bool)
    for i in range(n):
        for k in range(s, horizon + 1):
            j = int(flow(i, k))
            edge[i] |= dist[j] < eps
    reach = edge.copy()
    for _ in range(int(np.ceil(np.log2(max(n, 2))))):
        reach = reach | (reach @ reach)
    recurrent = bool(np.all(reach))
    return recurrent, reach


# ----------------------------------------------------------------------
# ray-system regularity via the log-variable Fourier transform


def _ray_kernel_scaled(t: float, gamma: float, rho: float, p: int) -> float:
    """G_p(e^(t - i gamma)) e^(-rho t), evaluated without overflow.

    For t > 0 the polynomial part is folded into exponentials of the
    (negative) exponents k - rho; for t < -1/2 the tail series of G_p is
    used, whose terms carry exponents (k - rho) t < 0 with no
    cancellation.  The middle zone evaluates the closed form directly.
    """
    if t >= 0.0:
        w = np.exp(-t + 1j * gamma)  # 1/z, |w| <= 1
        out = (t + np.log(abs(1.0 - w))) * np.exp(-rho * t)
        for k in range(1, p + 1):
            out += np.cos(k * gamma) * np.exp((k - rho) * t) / k
        return float(out)
    if t > -0.5:
        return float(primary_kernel_value(np.exp(t - 1j * gamma), p)
                     * np.exp(-rho * t))
    out, k = 0.0, p
    while True:
        k += 1
        term = np.cos(k * gamma) * np.exp((k - rho) * t) / k
        out -= term
        if np.exp((k - rho) * t) < 1e-22 or k > 2000:
            return float(out)


def ghat_transform(s: float, gamma: float, rho: float, p: int,
                   window: float | None = None) -> complex:
    """Fourier transform (in log radius) of the ray-restricted kernel.

    G(t) = G_p(e^(t - i gamma)) e^(-rho t) decays like e^(-kappa |t|)
    with kappa = min(rho - p, p + 1 - rho); the transform

        Ghat(s) = integral G(t) e^(-i s t) dt

    is computed by adaptive quadrature over [-L, L] with L sized so the
    neglected tails stay below 1e-8.  Requires non-integer rho.
    """
    if abs(rho - round(rho)) < 1e-9:
        raise ValidationError("rho must be non-integer")
    if p != int(np.floor(rho)):
        raise ValidationError("p must equal floor(rho)")
    gamma = float(reduce_to_principal(gamma))
    kappa = min(rho - p, p + 1 - rho)
    L = window if window is not None else min((40.0 + abs(np.log(kappa))) / kappa, 400.0)

    def integrand(t: float) -> complex:
        return _ray_kernel_scaled(t, gamma, rho, p) * np.exp(-1j * s * t)

    pts = [0.0] if abs(gamma) < 1e-12 else [-0.5, 0.0]
    re = quad(lambda t: integrand(t).real, -L, L, limit=400,
              points=pts, epsabs=1e-10, epsrel=1e-9, full_output=1)[0]
    im = quad(lambda t: integrand(t).imag, -L, L, limit=400,
              points=pts, epsabs=1e-10, epsrel=1e-9, full_output=1)[0]
    return complex(re, im)


def ghat_closed_form(s: float, gamma: float, rho: float) -> complex:
    """Advisory closed form pi cos((pi - |gamma|)(rho + is)) /
    ((rho + is) sin(pi (rho + is))); the quadrature is authoritative."""
    w = rho + 1j * s
    g = abs(float(reduce_to_principal(gamma)))
    return complex(np.pi * np.cos((np.pi - g) * w) / (w * np.sin(np.pi * w)))


def delange_offset_admissible(offset: float, rho: float, k_max: int = 64,
                              tol: float = 1e-9) -> bool:
    """Single-ray admissibility: offset != (1 - (2k+1)/(2 rho)) pi, k >= 1."""
    for k in range(1, k_max + 1):
        if abs(offset - (1.0 - (2 * k + 1) / (2.0 * rho)) * np.pi) < tol:
            return False
    return True


def ray_regularity_condition(
    theta_list,
    psi_list,
    rho: float,
    p: int,
    s_grid: np.ndarray | None = None,
    rank_tol: float = 1e-8,
) -> bool:
    """Does regular growth on the test rays pin down the zero rays?

    Zero rays theta_j, test rays psi_k.  The single-ray case follows the
    printed Delange rule on the raw angle difference; the general case
    demands full numerical rank of the transform matrix
    Ghat(s, theta_j - psi_k) at every sampled s.  Fewer test rays than
    zero rays can never reach full rank.
    """
    theta = np.atleast_1d(np.asarray(theta_list, dtype=float))
    psi = np.atleast_1d(np.asarray(psi_list, dtype=float))
    if theta.size == 0 or psi.size == 0:
        raise ValidationError("ray lists must be nonempty")
    if abs(rho - round(rho)) < 1e-9:
        raise ValidationError("rho must be non-integer")
    if psi.size < theta.size:
        return False
    if theta.size == 1 and psi.size == 1:
        return delange_offset_admissible(float(theta[0] - psi[0]), rho)
    if s_grid is None:
        s_grid = np.arange(0.0, 20.0 + 1e-9, 0.25)
    for s in np.asarray(s_grid, dtype=float):
        mat = np.empty((psi.size, theta.size), dtype=complex)
        for a in range(psi.size):
            for b in range(theta.size):
                mat[a, b] = ghat_transform(float(s), float(theta[b] - psi[a]), rho, p)
        sv = np.linalg.svd(mat, compute_uv=False)
        rank = int(np.sum(sv > rank_tol * max(sv[0], 1e-300)))
        if rank < theta.size:
            return False
    return True


# ----------------------------------------------------------------------
# weak-convergence probes: two fixed bumps supported in the annulus [1/2, 2]


def _radial_bump(z: np.ndarray) -> np.ndarray:
    r = np.abs(np.asarray(z, dtype=complex))
    s = (np.log(np.maximum(r, 1e-300)) - np.log(0.5)) / (2.0 * np.log(2.0))
    inside = (s > 0.0) & (s < 1.0)
    with np.errstate(divide="ignore", over="ignore"):
        val = np.where(inside,
                       np.exp(-1.0 / np.maximum(4.0 * s * (1.0 - s), 1e-300)), 0.0)
    return val


def test_bumps() -> list:
    """The toolkit's two weak-topology probe functions.

    Both are supported in the annulus 1/2 <= |z| <= 2: a radial bump and
    the same bump modulated by cos(arg z).
    """
    return [
        lambda z: _radial_bump(z),
        lambda z: _radial_bump(z) * (1.0 + np.cos(np.angle(np.asarray(z, dtype=complex)))) / 2.0,
    ]


def weak_field_distance(u: PlaneField, v: PlaneField, g,
                        n_r: int = 96, n_phi: int = 96) -> float:
    """| <u - v, g> | by log-polar quadrature over the bump's annulus."""
    r = np.geomspace(0.45, 2.25, n_r)
    ang = np.arange(n_phi) * (2 * np.pi / n_phi)
    z = r[:, None] * np.exp(1j * ang[None, :])
    du = np.asarray(u(z), dtype=float) - np.asarray(v(z), dtype=float)
    du = np.where(np.isfinite(du), du, 0.0)  # -inf markers are excluded points
    gz = np.asarray(g(z), dtype=float)
    # area element r dr dphi on the log grid: r^2 dlog(r) dphi
    dlog = np.log(r[1] / r[0])
    dphi = 2 * np.pi / n_phi
    return float(abs(np.sum(du * gz * (r**2)[:, None]) * dlog * dphi))


def weak_measure_distance(mu: MassDistribution, nu: MassDistribution, g) -> float:
    """| <mu - nu, g> | for atomic measures (exact pairing with the bump)."""
    total = 0.0
    if len(mu):
        total += np.sum(mu.masses * np.asarray(g(mu.points), dtype=float))
    if len(nu):
        total -= np.sum(nu.masses * np.asarray(g(nu.points), dtype=float))
    return float(abs(total))
