"""Construction of fields and integer zero sets with prescribed asymptotics.

The building blocks follow the standard gluing pipeline:

* a partition of unity in log radius with controlled derivative bounds,
* a convex majorant turning any decay rate into a smooth convex one,
* a radial "maximal mass density" field of zero type whose Laplacian
  dominates a prescribed decaying density (the subharmonicity repair),
* mollified gluing of a sequence of model fields along annuli
  (pseudo-trajectory), and
* discretization of a mass distribution into an integer zero set on
  factorially sparse annular sector cells.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InfeasibleError, NumericError, ValidationError
from .fields import PlaneField
from .indicators import DirectionFunction
from .kernels import primary_kernel_value
from .measures import MassDistribution
from .numerics import (TWO_PI, _bump01, angle_grid, smoothstep, smoothstep_d1,
                       smoothstep_d2, top_decade)
from .scale import ProximateOrder

# ----------------------------------------------------------------------
# partition of unity in log radius


class PartitionOfUnity:
    """Smooth partition psi_k of (0, inf) subordinate to annuli.

    Built from the C-infinity step B: with x = log r, x_k = log r_k and
    s_k = log sigma_k,

        beta_k(r) = B((x - (x_k - s_k)) / (2 s_k)),
        psi_0 = 1 - beta_1,   psi_k = beta_k - beta_{k+1}.

    Sequence constraints: r_0 = 1, r_k < r_k sigma_k < r_{k+1}/sigma_{k+1}
    < r_{k+1} for k >= 1, sigma_k increasing, and the plateau-gap ratio
    r_{k+1}/(sigma_{k+1} r_k sigma_k) nondecreasing.
    """

    def __init__(self, r_seq, sigma_seq):
        r = np.asarray(r_seq, dtype=float)
        sig = np.asarray(sigma_seq, dtype=float)
        if r.size != sig.size or r.size < 3:
            raise ValidationError("need equal-length sequences, at least 3 terms")
        if abs(r[0] - 1.0) > 1e-12:
            raise ValidationError("r_0 must equal 1")
        if np.any(sig[1:] <= 1.0):
            raise ValidationError("sigma_k must exceed 1 for k >= 1")
        for k in range(1, r.size - 1):
            if not (r[k] < r[k] * sig[k] < r[k + 1] / sig[k + 1] < r[k + 1]):
                raise ValidationError(
                    f"sequence constraint violated at index {k}: "
                    f"{r[k]} * {sig[k]} vs {r[k+1]} / {sig[k+1]}"
                )
        if np.any(np.diff(sig[1:]) < -1e-12):
            raise ValidationError("sigma_k must be nondecreasing")
        gaps = r[2:] / (sig[2:] * r[1:-1] * sig[1:-1])
        if np.any(np.diff(gaps) < -1e-9 * gaps[:-1]):
            raise ValidationError("plateau-gap ratio must be nondecreasing")
        self.r = r
        self.sigma = sig
        self.x = np.log(r)
        self.s = np.log(sig)

    @property
    def k_max(self) -> int:
        """Largest k with a fully defined window (needs beta_{k+1})."""
        return int(self.r.size - 2)

    def _beta_arg(self, k: int, x: np.ndarray) -> np.ndarray:
        return (x - (self.x[k] - self.s[k])) / (2.0 * self.s[k])

    def psi(self, k: int, r) -> np.ndarray | float:
        """psi_k evaluated at radius r (vectorized)."""
        if not (0 <= k <= self.k_max):
            raise ValidationError(f"k out of range [0, {self.k_max}]")
        x = np.log(np.asarray(r, dtype=float))
        b_next = np.asarray(smoothstep(self._beta_arg(k + 1, x)))
        if k == 0:
            out = 1.0 - b_next
        else:
            out = np.asarray(smoothstep(self._beta_arg(k, x))) - b_next
        if np.ndim(r) == 0:
            return float(out)
        return out

    def support(self, k: int) -> tuple[float, float]:
        lo = 0.0 if k == 0 else self.r[k] / self.sigma[k]
        return lo, self.r[k + 1] * self.sigma[k + 1]

    def plateau(self, k: int) -> tuple[float, float]:
        lo = 0.0 if k == 0 else self.r[k] * self.sigma[k]
        return lo, self.r[k + 1] / self.sigma[k + 1]

    def dlog(self, k: int, r) -> np.ndarray | float:
        """d psi_k / d log r  (= r psi_k')."""
        x = np.log(np.asarray(r, dtype=float))
        out = -np.asarray(smoothstep_d1(self._beta_arg(k + 1, x))) / (2 * self.s[k + 1])
        if k > 0:
            out = out + np.asarray(smoothstep_d1(self._beta_arg(k, x))) / (2 * self.s[k])
        if np.ndim(r) == 0:
            return float(out)
        return out

    def d2log(self, k: int, r) -> np.ndarray | float:
        """d^2 psi_k / d log r^2; note r^2 psi_k'' = d2log - dlog."""
        x = np.log(np.asarray(r, dtype=float))
        out = -np.asarray(smoothstep_d2(self._beta_arg(k + 1, x))) / (2 * self.s[k + 1]) ** 2
        if k > 0:
            out = out + np.asarray(smoothstep_d2(self._beta_arg(k, x))) / (2 * self.s[k]) ** 2
        if np.ndim(r) == 0:
            return float(out)
        return out

    def gamma_bound(self, k: int, probe_n: int = 4096) -> float:
        """gamma_k: a bound for max(|r psi_k'|, |r^2 psi_k''|), probed on a
        dense grid of each transition edge (with 1% probe headroom)."""
        lo, hi = self.support(k)
        lo = max(lo, self.r[k] / self.sigma[k] if k else self.r[1] / self.sigma[1] ** 3)
        grid = np.geomspace(lo * 0.999, hi * 1.001, probe_n)
        d1 = np.asarray(self.dlog(k, grid))
        d2 = np.asarray(self.d2log(k, grid)) - d1
        return 1.01 * float(max(np.max(np.abs(d1)), np.max(np.abs(d2))))


def partition_of_unity(r_seq, sigma_seq) -> PartitionOfUnity:
    """Validated partition of unity for the given sequences."""
    return PartitionOfUnity(r_seq, sigma_seq)


def packed_sequences(n_windows: int, sigma0: float = 0.04,
                     sigma_rate: float = 0.001, gap0: float = 0.01,
                     gap_rate: float = 0.0005) -> tuple[np.ndarray, np.ndarray]:
    """Slowly widening admissible sequences.

    Keeps many windows inside one decade (log-width per window about
    2 sigma0 + gap0), which is what lets a finite t-window sweep a whole
    model-field cycle of a prescribed limit set.
    """
    sig = np.exp(sigma0 + sigma_rate * np.arange(n_windows + 2))
    r = np.ones(n_windows + 2)
    for k in range(1, n_windows + 2):
        gap = np.exp(gap0 + gap_rate * (k - 1))
        r[k] = r[k - 1] * sig[k - 1] * sig[k] * gap
    return r, sig


# ----------------------------------------------------------------------
# convex majorization


class ConvexMajorant:
    """Smooth convex decreasing majorant k(s) of samples a(s) -> -inf.

    Construction: a*(s) = sup of a beyond s; the inverse staircase s(b)
    of b = -a*; a piecewise-linear convex increasing majorant s1(b) with
    slopes alpha_j = max(chord requirement, growth * alpha_{j-1});
    mollification s2 = s1 * bump (Jensen keeps s2 >= s1); finally
    k(s) = -s2^{-1}(s), extended linearly on the left.  Escalating
    slopes make |k'| -> 0 at the far end while k keeps falling.
    """

    def __init__(self, s_samples, a_samples, growth: float = 2.0,
                 b_step: float = 0.25, slope_floor: float = 1.0):
        s = np.asarray(s_samples, dtype=float)
        a = np.asarray(a_samples, dtype=float)
        if s.ndim != 1 or s.shape != a.shape or s.size < 8:
            raise ValidationError("need matching 1-d samples, at least 8")
        if np.any(np.diff(s) <= 0):
            raise ValidationError("s grid must be strictly increasing")
        n_tail = max(s.size // 10, 2)
        if np.max(a[-n_tail:]) > np.min(a[:n_tail]) - 1.0:
            raise ValidationError("a(s) does not tend downward on the window")

        a_star = np.maximum.accumulate(a[::-1])[::-1]
        b = -a_star
        b0 = float(b[0])
        w = float(b_step)
        mollify_h = 0.1 * w
        n_units = int(np.ceil((b[-1] - b0) / w)) + 2
        growth_w = growth**w  # slope doubling per unit of b, as in the
        # escalating staircase; refined intervals keep the majorant tight

        alphas = np.empty(n_units)
        knot_s = np.empty(n_units + 1)
        knot_s[0] = s[0] + mollify_h  # small strict-majorant offset
        prev = slope_floor
        for j in range(n_units):
            in_j = (b > b0 + j * w) & (b <= b0 + (j + 1) * w)
            chord = 0.0
            if np.any(in_j):
                chord = float(np.max((s[in_j] - knot_s[j]) / (b[in_j] - b0 - j * w)))
            alphas[j] = max(chord, growth_w * prev, slope_floor)
            prev = alphas[j]
            knot_s[j + 1] = knot_s[j] + w * alphas[j]

        # mollify the piecewise-linear s1 on a dense grid
        from .numerics import _GL_NODES, _GL_WEIGHTS  # noqa: PLC0415

        def s1(bq: np.ndarray) -> np.ndarray:
            bq = np.asarray(bq, dtype=float)
            j = np.clip(np.floor((bq - b0) / w).astype(int), 0, n_units - 1)
            base = knot_s[j] + alphas[j] * (bq - b0 - j * w)
            below = bq < b0  # corner-free continuation with the first slope
            return np.where(below, knot_s[0] + alphas[0] * (bq - b0), base)

        b_dense = np.linspace(b0 - 1.0, b0 + n_units * w, 8192)
        y = mollify_h * _GL_NODES  # nodes on [-h, h]
        wts = _bump01((_GL_NODES + 1.0) / 2.0)
        wts = wts / np.sum(wts * _GL_WEIGHTS)
        s2 = np.sum(_GL_WEIGHTS[None, :] * wts[None, :]
                    * s1(b_dense[:, None] - y[None, :]), axis=1)

        self._b_dense = b_dense
        self._s2 = s2
        self._left_slope = (s2[1] - s2[0]) / (b_dense[1] - b_dense[0])
        self._right_slope = (s2[-1] - s2[-2]) / (b_dense[-1] - b_dense[-2])
        self.window = (float(s[0]), float(s[-1]))

    def __call__(self, s) -> np.ndarray | float:
        s_arr = np.asarray(s, dtype=float)
        out = -np.interp(s_arr, self._s2, self._b_dense)
        lo, hi = self._s2[0], self._s2[-1]
        out = np.where(s_arr < lo,
                       -(self._b_dense[0] + (s_arr - lo) / self._left_slope), out)
        out = np.where(s_arr > hi,
                       -(self._b_dense[-1] + (s_arr - hi) / self._right_slope), out)
        if np.ndim(s) == 0:
            return float(out)
        return out

    def derivative(self, s, h: float = 1e-4) -> np.ndarray | float:
        return (self(np.asarray(s) + h) - self(np.asarray(s) - h)) / (2 * h)


def convex_majorant(s_samples, a_samples, growth: float = 2.0) -> ConvexMajorant:
    """Smooth convex decreasing majorant of the sampled decay curve."""
    return ConvexMajorant(s_samples, a_samples, growth=growth)


# ----------------------------------------------------------------------
# maximal mass density function


def max_density_function(
    gamma_fn,
    po: ProximateOrder,
    r_window: tuple[float, float] = (np.e, 1e6),
    grid_n: int = 512,
) -> tuple[PlaneField, dict]:
    """Radial field of zero type whose Laplacian dominates gamma(r) r^(rho(r)-2).

    Phi(z) = c exp(k(log|z|^2)) |z|^rho(|z|) with k the convex majorant
    of log gamma(e^(s/2)); the prefactor c is fitted so that the
    log-radial second difference satisfies Phi_xx >= gamma(r) r^rho(r)
    on the verification grid (equivalent to the Laplacian bound, since
    Delta Phi = Phi_xx / r^2 for radial fields in the plane).
    """
    r_lo, r_hi = r_window
    x_grid = np.linspace(np.log(r_lo), np.log(r_hi), grid_n)
    r_grid = np.exp(x_grid)
    gam = np.asarray(gamma_fn(r_grid), dtype=float)
    if np.any(gam <= 0.0):
        raise ValidationError("gamma must be positive on the window")
    if gam[-1] > gam[0]:
        raise ValidationError("gamma must decay over the window")

    s_grid = 2.0 * x_grid
    k = ConvexMajorant(s_grid, np.log(gam))

    def base(z: np.ndarray) -> np.ndarray:
        z = np.asarray(z, dtype=complex)
        r = np.abs(z)
        rp = np.maximum(r, 1e-300)
        return np.where(r > 0.0,
                        np.exp(np.asarray(k(np.log(rp**2))))
                        * np.asarray(po.V(rp)), 0.0)

    # fit c: second differences of Phi along log r must beat gamma * V
    h = x_grid[1] - x_grid[0]
    phi0 = np.asarray(base(np.exp(x_grid)), dtype=float)
    phi_p = np.asarray(base(np.exp(x_grid + h)), dtype=float)
    phi_m = np.asarray(base(np.exp(x_grid - h)), dtype=float)
    curv = (phi_p - 2 * phi0 + phi_m) / h**2
    target = gam * np.asarray(po.V(r_grid))
    bracket = curv / target
    worst = int(np.argmin(bracket))
    if bracket[worst] <= 0.0:
        raise InfeasibleError(
            f"positivity failed at r = {r_grid[worst]:.4g}; "
            "the window is too short for this gamma"
        )
    c = 1.02 / float(bracket[worst])
    info = {"c": c, "worst_radius": float(r_grid[worst]),
            "relative_margin": float(np.min(c * bracket - 1.0))}
    return PlaneField(lambda z: c * base(z), label="Phi"), info

# ----------------------------------------------------------------------
# pseudo-trajectories and mollified gluing


def check_model_field(v: PlaneField, rho: float, sigma: float,
                      probe_radii=None, probe_angles: int = 32) -> None:
    """Verify v(0) = 0 and v(z) <= sigma |z|^rho on a coarse grid."""
    if abs(v(0.0)) > 1e-9:
        raise ValidationError(f"model field must vanish at 0, got {v(0.0)!r}")
    radii = np.geomspace(1e-3, 1e3, 49) if probe_radii is None else probe_radii
    vals = v.on_polar(radii, angle_grid(probe_angles))
    bound = sigma * radii[:, None] ** rho
    if np.any(vals > bound * (1 + 1e-9) + 1e-12):
        raise ValidationError("model field exceeds sigma |z|^rho on the probe grid")


def dilate_field(v: PlaneField, rho: float, t: float) -> PlaneField:
    """Fixed-exponent dilation v_[t](z) = t^-rho v(t z)."""
    if t <= 0.0:
        raise ValidationError("t must be positive")
    w = t**-rho
    return PlaneField(lambda z: w * v(np.asarray(z, dtype=complex) * t),
                      label=f"({v.label})[{t:g}]")


def pseudo_trajectory(v_list, psi: PartitionOfUnity, t: float,
                      rho: float) -> PlaneField:
    """The blended model field v(.|t) = sum_j psi_j(t) (v_j)_[t].

    On a plateau of psi_j this is exactly the dilated single model; in
    the transition zones it is a two-term convex-ish blend.
    """
    if len(v_list) < psi.k_max + 1:
        raise ValidationError("need one model field per partition window")
    weights = [(j, float(psi.psi(j, t))) for j in range(psi.k_max + 1)]
    active = [(j, w) for j, w in weights if w > 1e-15]
    if not active:
        raise ValidationError(f"t = {t} outside the partition range")
    parts = [(w, dilate_field(v_list[j], rho, t)) for j, w in active]

    def fn(z: np.ndarray) -> np.ndarray:
        out = np.zeros(np.shape(z), dtype=float)
        for w, f in parts:
            out = out + w * f(z)
        return out

    return PlaneField(fn, label=f"pseudo(t={t:g})")


class DiscMollifier:
    """Quadrature mollifier R_eps v(x) = integral alpha_eps(x - y) v(y) dy.

    Nodes: Gauss-Legendre in the radial variable, uniform in angle, with
    discretely normalized weights (so constants are reproduced exactly).
    """

    def __init__(self, eps: float, n_rad: int = 12, n_ang: int = 16):
        if eps <= 0.0:
            raise ValidationError("eps must be positive")
        nodes, wts = np.polynomial.legendre.leggauss(n_rad)
        q = 0.5 * (nodes + 1.0)
        radial = _bump01((q + 1.0) / 2.0)  # bump profile alpha(q) on [0, 1]
        ang = angle_grid(n_ang)
        offs = (q[:, None] * np.exp(1j * ang)[None, :]).ravel() * eps
        w = (wts * radial * q)[:, None] * np.ones(n_ang)[None, :]
        self.eps = float(eps)
        self.offsets = offs
        self.weights = (w / np.sum(w)).ravel()

    def apply(self, v: PlaneField) -> PlaneField:
        offs, wts = self.offsets, self.weights

        def fn(z: np.ndarray) -> np.ndarray:
            z = np.asarray(z, dtype=complex)
            flat = z.ravel()
            out = np.empty(flat.size, dtype=float)
            step = max(262_144 // offs.size, 1)
            for i in range(0, flat.size, step):
                block = flat[i : i + step, None] - offs[None, :]
                out[i : i + step] = np.sum(wts[None, :] * v(block), axis=1)
            return out.reshape(z.shape)

        return PlaneField(fn, label=f"R_{self.eps:g}({v.label})")


def glue_asymptotic(
    v_list,
    psi: PartitionOfUnity,
    eps_list,
    po: ProximateOrder,
    repair: bool = True,
    verify_grid: tuple[int, int] = (192, 64),
) -> tuple[PlaneField, dict]:
    """Glue mollified model fields along the partition annuli.

    u(x) = sum_j psi_j(|x|) R_{eps_j}(v_j)(x) |x|^(rho(|x|) - rho),
    plus (when ``repair``) a radial correction Phi from
    :func:`max_density_function` sized so the discrete Laplacian of the
    sum is nonnegative on the verification grid; the correction has zero
    type, so it does not disturb the asymptotics.
    """
    k_max = psi.k_max
    eps = list(np.broadcast_to(np.asarray(eps_list, dtype=float), (k_max + 1,)))
    if len(v_list) < k_max + 1:
        raise ValidationError("need one model field per partition window")
    mollified = [DiscMollifier(e).apply(v) for e, v in zip(eps, v_list)]
    rho = po.rho

    def raw(z: np.ndarray) -> np.ndarray:
        z = np.asarray(z, dtype=complex)
        r = np.abs(z)
        out = np.zeros(np.shape(z), dtype=float)
        corr = np.zeros(np.shape(z), dtype=float)
        pos = r > 0.0
        rr = np.where(pos, r, 1.0)
        corr = np.where(pos, np.exp(np.log(rr) * (np.asarray(po.rho_at(rr)) - rho)), 1.0)
        for j in range(k_max + 1):
            lo, hi = psi.support(j)
            mask = (r > lo) & (r < hi)
            if not np.any(mask):
                continue
            w = np.asarray(psi.psi(j, np.where(mask, r, 1.0)))
            vals = np.zeros(np.shape(z), dtype=float)
            vals[mask] = mollified[j](z[mask])
            out = out + np.where(mask, w * vals, 0.0)
        return out * corr

    u_raw = PlaneField(raw, label="glued")
    info: dict = {"eps": [float(e) for e in eps]}
    if not repair:
        return u_raw, info

    # measure the discrete-Laplacian defect on a log-polar verification
    # grid; the window ends inside the last plateau (beyond it the
    # partition no longer sums to one and the field is not in contract)
    lo = psi.support(1)[0]
    hi = 0.9 * psi.plateau(k_max)[1]
    nx, nphi = verify_grid
    x = np.linspace(np.log(lo), np.log(hi), nx)
    hx = x[1] - x[0]
    ang = angle_grid(nphi)
    hphi = ang[1] - ang[0]
    vals = u_raw.on_polar(np.exp(x), ang)
    lap = ((np.roll(vals, -1, 0) - 2 * vals + np.roll(vals, 1, 0)) / hx**2
           + (np.roll(vals, -1, 1) - 2 * vals + np.roll(vals, 1, 1)) / hphi**2)
    lap[0, :] = lap[-1, :] = 0.0  # radial wrap-around rows are meaningless
    # discard the finite-difference truncation floor (scale h^2 times the
    # local field magnitude); a subharmonic input should not be "repaired"
    # for grid noise
    row_scale = np.max(np.abs(vals), axis=1)
    noise = 6.0 * (hx**2 + hphi**2) * row_scale * max(po.rho, 1.0) ** 4
    defect = np.maximum(np.maximum(-lap, 0.0).max(axis=1) - noise, 0.0)
    info["defect_max"] = float(defect.max())

    v_scale = np.asarray(po.V(np.exp(x)))
    need = defect / v_scale
    if float(np.max(need)) < 1e-12:
        info["phi"] = None
        return u_raw, info
    # Steepened decay envelope: gamma dominates the measured defect and
    # falls like e^(-lam x), so the majorant k inherits slope -lam/2 and
    # the correction keeps a positive curvature bracket (rho - lam)^2
    # while its type at the far end of the window stays small.
    lam = max(4.0, 2.0 * po.rho + 2.0)
    base_need = float(np.max(need)) * 1.5
    envelope = np.maximum(need * 1.5, base_need * np.exp(-lam * (x - x[0])))
    envelope = np.maximum.accumulate(envelope[::-1])[::-1]
    if envelope[-1] > 0.5 * envelope[0]:
        worst = int(np.argmax(need))
        raise NumericError(
            "Laplacian repair failed: defect does not decay "
            f"(worst cell at r = {np.exp(x[worst]):.4g})"
        )

    def gamma_fn(r: np.ndarray) -> np.ndarray:
        return np.interp(np.log(np.asarray(r, dtype=float)), x, envelope)

    phi_field, phi_info = max_density_function(gamma_fn, po,
                                               (float(np.exp(x[0])), float(np.exp(x[-1]))))
    info["phi"] = phi_info
    return u_raw + phi_field, info


def submean_fraction(u: PlaneField, radii, angles, probe_factor: float = 2.0,
                     probe_n: int = 16, tol: float = 1e-9) -> float:
    """Fraction of grid points satisfying the discrete sub-mean test.

    Compares u(z) with its mean on a circle of radius probe_factor times
    the local grid spacing; -inf centers pass vacuously (they are the
    markers the test must tolerate).
    """
    radii = np.asarray(radii, dtype=float)
    ang = np.asarray(angles, dtype=float)
    z = radii[:, None] * np.exp(1j * ang[None, :])
    dr = np.gradient(radii)[:, None] * np.ones_like(ang)[None, :]
    step = np.minimum(dr, radii[:, None] * (ang[1] - ang[0]))
    probe = probe_factor * step
    circle = np.exp(1j * angle_grid(probe_n))
    means = np.zeros(z.shape)
    for w in circle:
        means += u(z + probe * w)
    means /= probe_n
    center = u(z)
    scale = np.max(np.abs(center[np.isfinite(center)])) or 1.0
    ok = ~np.isfinite(center) | (center <= means + tol * scale)
    return float(np.mean(ok))


# ----------------------------------------------------------------------
# discretization of measures into integer zero sets


@dataclass(frozen=True)
class DiscretizationReport:
    cells: int
    occupied: int
    total_defect: float
    leftover_by_radius: tuple[tuple[float, float], ...] = field(repr=False)

    def defect_within(self, R: float) -> float:
        return float(sum(d for r, d in self.leftover_by_radius if r <= R))


def _nudged(edges: np.ndarray, taken: np.ndarray, tol: float) -> np.ndarray:
    """Shift any edge that collides with a value in ``taken``."""
    if taken.size == 0:
        return edges
    out = edges.copy()
    for i, e in enumerate(out):
        bump = tol
        while np.min(np.abs(taken - out[i])) < tol:
            out[i] = e + bump
            bump *= 2.0
    return out


def discretize_zeros(
    mu: MassDistribution, rho: float
) -> tuple[MassDistribution, DiscretizationReport]:
    """Concentrate mu into integer-mass atoms on annular sector cells.

    Annuli R_{j+1} = R_j (j+1)^(4/kappa) with kappa the distance of rho
    to the nearest integer; annulus j is cut by rings of fixed ratio
    (1+delta_j)/(1-delta_j) and by 2 pi / delta_j uniform rays, with
    delta_j = 1/(j+2).  Cell boundaries are nudged off atom coordinates.
    Each cell's mass moves to a representative point (geometric-mean
    radius, mass-weighted mean angle) and is floored to an integer; the
    sub-unit leftovers are reported per cell radius.
    """
    kappa = min(rho - np.floor(rho), np.floor(rho) + 1.0 - rho)
    if kappa < 1e-9:
        raise ValidationError("discretization requires non-integer rho")
    if len(mu) == 0:
        raise ValidationError("empty mass distribution")
    r_max = float(mu.radii[-1])
    atom_r = mu.radii
    atom_phi = np.mod(np.angle(mu.points), TWO_PI)

    # annulus boundaries (nudged off atom radii)
    R = [min(1.0, float(atom_r[0]) * 0.999)]
    j = 1
    while R[-1] < r_max:
        R.append(R[-1] * (j + 1) ** (4.0 / kappa))
        j += 1
    R = _nudged(np.asarray(R), atom_r, 1e-9 * max(r_max, 1.0))

    points, masses = [], []
    leftovers: list[tuple[float, float]] = []
    cells = occupied = 0
    for jj in range(len(R) - 1):
        delta = 1.0 / (jj + 3)  # delta_j for annulus index starting at 1
        sel = (atom_r >= R[jj]) & (atom_r < R[jj + 1])
        if not np.any(sel):
            continue
        q = (1.0 + delta) / (1.0 - delta)
        n_rings = max(int(np.ceil(np.log(R[jj + 1] / R[jj]) / np.log(q))), 1)
        rings = R[jj] * q ** np.arange(n_rings + 1)
        rings[-1] = R[jj + 1]
        rings = _nudged(rings, atom_r[sel], 1e-9 * R[jj])
        n_rays = max(int(np.floor(TWO_PI / delta)), 2)
        width = TWO_PI / n_rays
        rays = _nudged(np.arange(n_rays) * width, atom_phi[sel], 1e-12)

        rr, pp = atom_r[sel], atom_phi[sel]
        mm = mu.masses[sel]
        ring_idx = np.clip(np.searchsorted(rings, rr, side="right") - 1,
                           0, n_rings - 1)
        ray_idx = np.clip(np.searchsorted(rays, pp, side="right") - 1,
                          0, n_rays - 1)
        flat = ring_idx * n_rays + ray_idx
        order = np.argsort(flat, kind="stable")
        flat_sorted = flat[order]
        bounds = np.flatnonzero(np.diff(flat_sorted)) + 1
        groups = np.split(order, bounds)
        cells += n_rings * n_rays
        for g in groups:
            cell_mass = float(np.sum(mm[g]))
            ring_i, ray_i = divmod(int(flat[g[0]]), n_rays)
            rep_r = float(np.sqrt(rings[ring_i] * rings[ring_i + 1]))
            rep_phi = float(np.sum(mm[g] * pp[g]) / cell_mass)
            n_int = float(np.floor(cell_mass + 1e-9))
            occupied += 1
            if n_int > 0.0:
                points.append(rep_r * np.exp(1j * rep_phi))
                masses.append(n_int)
            leftovers.append((rep_r, cell_mass - n_int))

    report = DiscretizationReport(
        cells=cells,
        occupied=occupied,
        total_defect=float(sum(d for _, d in leftovers)),
        leftover_by_radius=tuple(sorted(leftovers)),
    )
    return MassDistribution(np.asarray(points, dtype=complex),
                            np.asarray(masses)), report


# ----------------------------------------------------------------------
# lower-indicator family


@dataclass(frozen=True)
class TrunkParams:
    K: float
    delta: float
    offset: float  # M_n + 1


def cut_trunk_field(theta: float, p: int, rho: float, delta: float,
                    K: float, lam: float) -> PlaneField:
    """W(z e^{-i theta}, K, delta, lam): the primary kernel scaled by delta,
    with its -inf trunk near z = e^{i theta} cut at the cone -lam + K|z-1|.

    lam = +inf keeps the raw trunk (the -inf-direction variant).
    """

    def fn(z: np.ndarray) -> np.ndarray:
        w = np.asarray(z, dtype=complex) * np.exp(-1j * theta)
        h = delta * primary_kernel_value(w, p)
        if np.isfinite(lam):
            near = np.abs(w - 1.0) < delta
            cone = -lam + K * np.abs(w - 1.0)
            h = np.where(near, np.maximum(h, cone), h)
        return h

    return PlaneField(fn, label=f"W(theta={theta:g})")


class LowerIndicatorFamily:
    """Fields v_(theta,n) pinning a prescribed lower indicator.

    Level n smooths the target g by the Fejer mean of order 4n plus a
    1/n offset (g_n decreases to g as n grows for continuous targets),
    then builds

        v_(theta,n)(z) = W(z e^(-i theta), K_n, delta_n, M_n + 1 - g_n(theta))
                         + (M_n + 1) |z|^rho,

    which satisfies the pin v_(phi,n)(e^(i phi)) = g_n(phi) exactly and
    the global bound v |z|^(-rho) <= A delta_n + M_n + 1.  Directions
    flagged -inf in the target use the uncut trunk (lam = inf).
    """

    def __init__(self, g: DirectionFunction, rho: float, n_levels: int = 3):
        if rho <= 0.0 or abs(rho - round(rho)) < 1e-12:
            raise ValidationError("rho must be positive non-integer")
        if n_levels < 1:
            raise ValidationError("need at least one smoothing level")
        self.g = g
        self.rho = float(rho)
        self.p = int(np.floor(rho))
        self.theta_grid = g.grid
        self.levels: list[tuple[np.ndarray, TrunkParams]] = []
        finite = np.isfinite(g.values)
        base = g.values.copy()
        if not np.all(finite):
            if not np.any(finite):
                raise ValidationError("target is -inf everywhere")
            base[~finite] = np.min(base[finite])
        for n in range(1, n_levels + 1):
            g_n = _fejer_smooth(base, 4 * n) + 1.0 / n
            step = TWO_PI / g.n
            slope = np.max(np.abs(np.diff(np.concatenate([g_n, g_n[:1]])))) / step
            K = 2.0 * slope + 2.0
            delta = self._fit_delta(K)
            offset = float(np.max(np.maximum(g_n, 0.0))) + 1.0
            self.levels.append((g_n, TrunkParams(K=K, delta=delta, offset=offset)))

    def _fit_delta(self, K: float) -> float:
        radii = np.geomspace(1e-3, 1e3, 120)
        probe = primary_kernel_value(
            radii[:, None] * np.exp(1j * angle_grid(64))[None, :], self.p
        ) / radii[:, None] ** self.rho
        delta = min(1.0 / (2.0 * K), 0.25)
        for _ in range(60):
            ring = 1.0 + delta * np.exp(1j * angle_grid(64))
            h_ring = primary_kernel_value(ring, self.p)
            off_disc = np.abs(radii[:, None] * np.exp(1j * angle_grid(64))[None, :]
                              - 1.0) >= delta
            cond_global = delta * np.min(probe[off_disc]) >= -0.25
            cond_ring = delta * np.min(h_ring) >= -0.25
            if cond_global and cond_ring:
                return float(delta)
            delta /= 2.0
        raise InfeasibleError("delta underflow; refine the target smoothing")

    def field(self, theta: float, level: int = 0) -> PlaneField:
        g_n, par = self.levels[level]
        g_val = float(np.interp(np.mod(theta, TWO_PI),
                                np.concatenate([self.theta_grid, [TWO_PI]]),
                                np.concatenate([g_n, g_n[:1]])))
        lam = par.offset - g_val
        if self.g.flagged is not None:
            idx = int(round(theta / (TWO_PI / self.g.n))) % self.g.n
            if self.g.flagged[idx]:
                lam = np.inf
        trunk = cut_trunk_field(theta, self.p, self.rho, par.delta, par.K, lam)
        rho = self.rho
        off = par.offset

        def fn(z: np.ndarray) -> np.ndarray:
            z = np.asarray(z, dtype=complex)
            return trunk(z) + off * np.abs(z) ** rho

        return PlaneField(fn, label=f"v(theta={theta:g},n={level + 1})")

    def pin_value(self, theta: float, level: int = 0) -> float:
        g_n, _ = self.levels[level]
        return float(np.interp(np.mod(theta, TWO_PI),
                               np.concatenate([self.theta_grid, [TWO_PI]]),
                               np.concatenate([g_n, g_n[:1]])))

    def family_min_profile(self, level: int = 0, tau_grid=None) -> np.ndarray:
        """min over theta on the grid and tau of v(tau e^{i phi}) tau^-rho,
        evaluated at the grid directions phi."""
        g_n, _ = self.levels[level]
        taus = np.geomspace(0.5, 2.0, 17) if tau_grid is None else tau_grid
        phi = self.theta_grid
        best = np.full(phi.size, np.inf)
        for k in range(phi.size):
            f = self.field(float(phi[k]), level)
            vals = f.on_polar(taus, phi) / taus[:, None] ** self.rho
            best = np.minimum(best, np.min(vals, axis=0))
        return best


def _fejer_smooth(values: np.ndarray, order: int) -> np.ndarray:
    """Fejer (triangular-window) smoothing on the circle via FFT."""
    n = values.size
    coeff = np.fft.rfft(values)
    k = np.arange(coeff.size)
    weight = np.maximum(1.0 - k / (order + 1.0), 0.0)
    return np.fft.irfft(coeff * weight, n=n)


def lower_indicator_family(g: DirectionFunction, rho: float,
                           n_levels: int = 3) -> LowerIndicatorFamily:
    """Family of fields whose lower envelope pins the target g."""
    return LowerIndicatorFamily(g, rho, n_levels)
