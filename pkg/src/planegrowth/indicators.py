"""Directional growth indicators and trigonometric convexity.

A direction function is a sampled 2pi-periodic function of the angle.
The indicator h and lower indicator h_lower of a field are directional
max/min of the rescaled family u(t e^{i phi}) t^{-rho(t)} over the top
decade of a log-uniform t-grid.  Indicators are rho-trigonometrically
convex (rho-t.c.): the operator T_rho = d^2/dphi^2 + rho^2 applied
weakly yields a nonnegative measure on the circle, and the fundamental
relation

    h(a) sin rho(b-f) + h(f) sin rho(a-b) + h(b) sin rho(f-a) >= 0

holds for every triple a < f < b spanning less than pi/rho.
"""
from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import InfeasibleError, NumericError, ValidationError
from .fields import PlaneField
from .kernels import tilde_cos
from .numerics import TWO_PI, angle_grid, top_decade
from .scale import ProximateOrder

_MIN_GRID = 64  # 64 admits coarse cross-check oracles; pipelines use >= 256


def _is_pow2(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class DirectionFunction:
    """Values on the uniform angle grid phi_i = 2 pi i / n, with the
    growth exponent rho they refer to.  Values may carry -inf markers."""

    values: np.ndarray
    rho: float
    flagged: np.ndarray | None = None  # directions where every sample hit -inf

    def __post_init__(self) -> None:
        vals = np.asarray(self.values, dtype=float).ravel()
        if not _is_pow2(vals.size) or vals.size < _MIN_GRID:
            raise ValidationError(
                f"grid size must be a power of two >= {_MIN_GRID}, got {vals.size}"
            )
        if np.any(np.isnan(vals)) or np.any(vals == np.inf):
            raise ValidationError("values must be finite or -inf")
        if self.rho <= 0.0:
            raise ValidationError("rho must be positive")
        object.__setattr__(self, "values", vals)
        if self.flagged is not None:
            flags = np.asarray(self.flagged, dtype=bool).ravel()
            if flags.size != vals.size:
                raise ValidationError("flag vector length mismatch")
            object.__setattr__(self, "flagged", flags)

    @property
    def n(self) -> int:
        return int(self.values.size)

    @property
    def grid(self) -> np.ndarray:
        return angle_grid(self.n)

    def scale(self) -> float:
        finite = self.values[np.isfinite(self.values)]
        if finite.size == 0:
            return 1.0
        return float(max(np.max(np.abs(finite)), 1e-12))

    def at(self, phi) -> np.ndarray | float:
        """Linear interpolation on the circle."""
        pos = np.mod(np.asarray(phi, dtype=float), TWO_PI) / (TWO_PI / self.n)
        i0 = np.floor(pos).astype(int) % self.n
        i1 = (i0 + 1) % self.n
        frac = pos - np.floor(pos)
        out = (1.0 - frac) * self.values[i0] + frac * self.values[i1]
        if np.ndim(phi) == 0:
            return float(out)
        return out

    def to_csv(self) -> str:
        lines = ["phi,value"]
        lines += [f"{p!r},{v!r}" for p, v in zip(self.grid, self.values)]
        return "\n".join(lines) + "\n"

    @staticmethod
    def from_profile(profile, rho: float, n: int = 256) -> "DirectionFunction":
        return DirectionFunction(np.asarray(profile(angle_grid(n)), dtype=float), rho)


@dataclass(frozen=True)
class CircleMeasure:
    """Signed measure on the circle: atoms plus a piecewise-constant
    density (per radian) on the cells of a uniform grid."""

    atoms: tuple[tuple[float, float], ...]
    density: np.ndarray

    def __post_init__(self) -> None:
        dens = np.asarray(self.density, dtype=float).ravel()
        if not np.all(np.isfinite(dens)):
            raise ValidationError("density must be finite")
        object.__setattr__(self, "density", dens)
        object.__setattr__(
            self,
            "atoms",
            tuple((float(np.mod(a, TWO_PI)), float(m)) for a, m in self.atoms),
        )

    @property
    def n(self) -> int:
        return int(self.density.size)

    def total_mass(self) -> float:
        cell = TWO_PI / self.n
        return float(sum(m for _, m in self.atoms) + np.sum(self.density) * cell)

    def total_variation(self) -> float:
        cell = TWO_PI / self.n
        return float(sum(abs(m) for _, m in self.atoms)
                     + np.sum(np.abs(self.density)) * cell)

    def fourier_moment(self, k: float) -> complex:
        """integral of e^{i k phi} ds, cells integrated exactly."""
        total = sum(m * np.exp(1j * k * a) for a, m in self.atoms)
        edges = np.arange(self.n + 1) * (TWO_PI / self.n)
        if k == 0:
            total += np.sum(self.density) * (TWO_PI / self.n)
        else:
            seg = (np.exp(1j * k * edges[1:]) - np.exp(1j * k * edges[:-1])) / (1j * k)
            total += np.sum(self.density * seg)
        return complex(total)

    def to_json(self) -> str:
        return json.dumps(
            {"atoms": [[a, m] for a, m in self.atoms],
             "density": [float(d) for d in self.density]}
        )

    @staticmethod
    def from_json(text: str) -> "CircleMeasure":
        try:
            payload = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"invalid JSON: {exc}") from exc
        try:
            atoms = tuple((float(a), float(m)) for a, m in payload["atoms"])
            density = np.asarray(payload["density"], dtype=float)
        except (KeyError, TypeError, ValueError) as exc:
            raise ValidationError("circle-measure JSON needs atoms+density") from exc
        return CircleMeasure(atoms, density)


# ----------------------------------------------------------------------
# indicator estimation


def indicator_pair(
    u: PlaneField,
    po: ProximateOrder,
    t_grid: np.ndarray,
    phi_grid: np.ndarray | int = 256,
) -> tuple[DirectionFunction, DirectionFunction]:
    """Directional max/min of u(t e^{i phi}) t^{-rho(t)} over the top decade.

    -inf samples never enter h; they enter h_lower only after a median-
    of-3 filter over adjacent radial samples (the sampling stand-in for
    the exceptional-set exclusion around zeros).  Directions where every
    sample is -inf are flagged.
    """
    t_grid = np.asarray(t_grid, dtype=float)
    if t_grid.size < 64 or np.log10(t_grid[-1] / t_grid[0]) < 2.0 - 1e-9:
        raise ValidationError("t_grid must be log-uniform, >=64 points over >=2 decades")
    angles = angle_grid(phi_grid) if isinstance(phi_grid, int) else np.asarray(phi_grid)
    sel = top_decade(t_grid)
    ts = t_grid[sel]
    weights = 1.0 / po.V(ts)
    vals = u.on_polar(ts, angles) * weights[:, None]

    with np.errstate(invalid="ignore"):
        h = np.max(np.where(np.isfinite(vals), vals, -np.inf), axis=0)
        flagged = ~np.any(np.isfinite(vals), axis=0)
        # median of 3 adjacent radial samples, then min over t; reflected
        # end padding so an isolated -inf at the window edge is filtered too
        padded = np.concatenate([vals[1:2], vals, vals[-2:-1]], axis=0)
        med3 = np.median(
            np.stack([padded[:-2], padded[1:-1], padded[2:]], axis=0), axis=0
        )
        h_low = np.min(med3, axis=0)
    h[flagged] = -np.inf
    rho = float(np.median(np.atleast_1d(po.rho_at(ts))))
    return (
        DirectionFunction(h, rho, flagged=flagged),
        DirectionFunction(h_low, rho, flagged=flagged),
    )


# ----------------------------------------------------------------------
# trigonometric convexity


def trig_interpolant(alpha: float, beta: float, h_a: float, h_b: float,
                     rho: float, phi) -> np.ndarray | float:
    """The rho-trigonometric interpolant through (alpha, h_a), (beta, h_b):

        Y(phi) = [h_a sin rho(beta-phi) + h_b sin rho(phi-alpha)]
                 / sin rho(beta-alpha),

    the unique solution of Y'' + rho^2 Y = 0 with those endpoint values.
    Requires 0 < beta - alpha < pi/rho and phi in [alpha, beta].
    """
    span = beta - alpha
    if not (0.0 < span < np.pi / rho):
        raise ValidationError(f"span {span} outside (0, pi/rho)")
    phi_arr = np.asarray(phi, dtype=float)
    if np.any(phi_arr < alpha - 1e-12) or np.any(phi_arr > beta + 1e-12):
        raise ValidationError("phi must lie in [alpha, beta]")
    out = (h_a * np.sin(rho * (beta - phi_arr)) + h_b * np.sin(rho * (phi_arr - alpha))) \
        / np.sin(rho * span)
    if np.ndim(phi) == 0:
        return float(out)
    return out


@dataclass(frozen=True)
class ConvexityReport:
    passed: bool
    worst_value: float
    worst_triple: tuple[float, float, float]
    tolerance: float


def trig_convexity_check(h: DirectionFunction, tol: float | None = None) -> ConvexityReport:
    """Test the fundamental relation on grid triples with span < pi/rho.

    For every admissible pair (alpha, beta) the midpoint triple is
    tested, plus all adjacent triples; this O(n^2) family detects both
    local concavity and long-span violations.  Default tolerance is
    1e-9 * scale(h); estimated indicators need a looser one.
    """
    vals, rho, n = h.values, h.rho, h.n
    if not np.all(np.isfinite(vals)):
        raise ValidationError("convexity check needs finite values")
    if tol is None:
        tol = 1e-9 * h.scale()
    step = TWO_PI / n
    max_span = min(int(np.floor(np.pi / rho / step)), n - 1)

    worst = np.inf
    worst_triple = (0.0, 0.0, 0.0)
    idx = np.arange(n)
    for s in range(2, max_span + 1):
        rolled = np.roll(vals, -s)
        for k in sorted({1, s // 2, s - 1}):
            mid = np.roll(vals, -k)
            rel = (vals * np.sin(rho * (s - k) * step)
                   + mid * np.sin(rho * (-s) * step)
                   + rolled * np.sin(rho * k * step))
            j = int(np.argmin(rel))
            if rel[j] < worst:
                worst = float(rel[j])
                worst_triple = (float(idx[j] * step),
                                float((idx[j] + k) % n * step),
                                float((idx[j] + s) % n * step))
    return ConvexityReport(bool(worst >= -tol), worst, worst_triple, float(tol))


def t_rho_measure(h: DirectionFunction, atom_factor: float = 5.0) -> CircleMeasure:
    """Weak T_rho h = h'' + rho^2 h as atoms plus piecewise density.

    Second differences estimate the density; a cell whose first-difference
    jump exceeds ``atom_factor`` times the median jump is recorded as an
    atom carrying that jump as mass, with the smooth part rho^2 h left in
    the density.  Non-t.c. inputs simply produce signed output.
    """
    vals, rho, n = h.values, h.rho, h.n
    if not np.all(np.isfinite(vals)):
        raise ValidationError("t_rho_measure needs finite values")
    step = TWO_PI / n
    jump = (np.roll(vals, -1) - 2.0 * vals + np.roll(vals, 1)) / step  # h' jump
    med = float(np.median(np.abs(jump)))
    is_atom = np.abs(jump) > atom_factor * max(med, 1e-14 * h.scale())
    density = jump / step + rho * rho * vals
    atoms = []
    for i in np.nonzero(is_atom)[0]:
        atoms.append((float(i * step), float(jump[i])))
        density[i] = rho * rho * vals[i]
    return CircleMeasure(tuple(atoms), density)


def _int_tilde_cos(rho: float, lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
    """Exact integral of tilde_cos(rho, theta) over [lo, hi].

    With F(theta) = sin(rho theta0)/rho for theta0 the reduction of
    theta into [-pi, pi), the integral is F(hi) - F(lo) plus a jump of
    2 sin(pi rho)/rho for every fold theta = pi (mod 2pi) crossed.
    """

    def fold_index(theta: np.ndarray) -> np.ndarray:
        return np.floor((theta + np.pi) / TWO_PI)

    def anti(theta: np.ndarray) -> np.ndarray:
        return np.sin(rho * (theta - TWO_PI * fold_index(theta))) / rho

    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    jump = 2.0 * np.sin(np.pi * rho) / rho
    return anti(hi) - anti(lo) + jump * (fold_index(hi) - fold_index(lo))


def reconstruct_tcf(s: CircleMeasure, rho: float, n: int = 256) -> DirectionFunction:
    """Rebuild the rho-t.c. function with T_rho h = s.

    Non-integer rho:  h(phi) = (1/(2 rho sin pi rho)) *
                      integral tilde_cos(rho, phi - psi - pi) ds(psi).
    Integer rho:      requires the orthogonality integral e^{i rho psi} ds = 0
                      (relative tolerance 1e-8); then
                      h(phi) = -(1/(2 pi rho)) *
                      integral per((phi-psi)) sin(rho (phi-psi)) ds(psi),
                      per(.) the 2pi-periodic extension of the identity
                      from [0, 2pi); the free harmonic term is fixed to 0.

    Cell densities are integrated in closed form, so piecewise-constant
    measures reconstruct to machine precision.
    """
    if rho <= 0.0:
        raise ValidationError("rho must be positive")
    integer = abs(rho - round(rho)) < 1e-12
    phi = angle_grid(n)
    cell = TWO_PI / s.n
    edges = np.arange(s.n) * cell

    if integer:
        moment = s.fourier_moment(round(rho))
        if abs(moment) > 1e-8 * max(s.total_variation(), 1e-12):
            raise InfeasibleError(
                "integer rho: measure violates the e^{i rho phi} orthogonality "
                f"condition (moment {moment:.3e})"
            )
        rho_i = int(round(rho))

        def kernel_atom(theta: np.ndarray) -> np.ndarray:
            per = np.mod(theta, TWO_PI)
            return -per * np.sin(rho_i * per) / (TWO_PI * rho_i)

        def kernel_cell(lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
            return _int_theta_sin(rho_i, lo, hi) * (-1.0 / (TWO_PI * rho_i))

    else:
        norm = 1.0 / (2.0 * rho * np.sin(np.pi * rho))

        def kernel_atom(theta: np.ndarray) -> np.ndarray:
            return norm * np.asarray(tilde_cos(rho, theta - np.pi))

        def kernel_cell(lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
            return norm * _int_tilde_cos(rho, lo - np.pi, hi - np.pi)

    out = np.zeros(n)
    for a, m in s.atoms:
        out += m * kernel_atom(phi - a)
    if np.any(s.density):
        # integrate kernel(phi - psi) over each cell [edge, edge+cell]
        lo = phi[:, None] - (edges[None, :] + cell)
        hi = phi[:, None] - edges[None, :]
        out += np.sum(s.density[None, :] * kernel_cell(lo, hi), axis=1)
    return DirectionFunction(out, rho)


def _int_theta_sin(rho_i: int, lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
    """Exact integral of per(theta) sin(rho theta) over [lo, hi], where
    per() is the 2pi-periodic extension of the identity from [0, 2pi)."""

    def anti(theta: np.ndarray) -> np.ndarray:
        k = np.floor(theta / TWO_PI)
        t0 = theta - TWO_PI * k
        # antiderivative of (t0 + 0) sin(rho theta): on each period
        # per(theta) = theta - 2 pi k, and sin(rho theta) has period 2pi
        prim = (-t0 * np.cos(rho_i * t0) / rho_i + np.sin(rho_i * t0) / rho_i**2)
        # accumulated value of full periods: each contributes -2pi/rho * 0
        full = k * (-TWO_PI / rho_i)  # integral of t sin over one period
        return prim + full

    return anti(np.asarray(hi, dtype=float)) - anti(np.asarray(lo, dtype=float))


# ----------------------------------------------------------------------
# maximal trigonometrically convex minorant


def max_tc_minorant(
    m: DirectionFunction,
    rho: float | None = None,
    max_sweeps: int = 10_000,
    tol: float = 1e-12,
    blowup_factor: float = 1e6,
) -> DirectionFunction | None:
    """Largest rho-t.c. function below m, or None when none exists.

    Iterates h <- min(h, Y) over every sub-span shorter than pi/rho,
    where Y is the trigonometric interpolant of the current endpoint
    values; sweeps run in increasing span length, then left endpoint.
    The iteration is monotone decreasing; divergence past
    -blowup_factor * scale(m) certifies there is no minorant (e.g. any
    m with negative mean for non-harmonic rho).
    """
    if rho is None:
        rho = m.rho
    vals = m.values.copy()
    if not np.all(np.isfinite(vals)):
        raise ValidationError("minorant needs finite input")
    n = m.n
    step = TWO_PI / n
    scale = m.scale()
    max_span = min(int(np.floor(np.pi / rho / step - 1e-9)), n - 1)
    if max_span < 2:
        raise ValidationError("grid too coarse for spans below pi/rho")

    sin_k = np.sin(rho * step * np.arange(n + 1))
    for sweep in range(max_sweeps):
        before = vals.copy()
        with np.errstate(over="ignore"):  # controlled divergence when no minorant
            for s in range(2, max_span + 1):
                # For fixed (s, k) the update i -> i+k is a rotation, so the
                # scatter-min collapses to a vectorized roll + minimum.
                right = np.roll(vals, -s)
                denom = sin_k[s]
                for k in range(1, s):
                    y = (vals * sin_k[s - k] + right * sin_k[k]) / denom
                    np.minimum(vals, np.roll(y, k), out=vals)
        if np.min(vals) < -blowup_factor * scale:
            return None
        change = float(np.max(np.abs(before - vals)))
        if change <= tol * scale:
            return DirectionFunction(vals, rho)
    raise NumericError(
        f"minorant sweep did not converge in {max_sweeps} sweeps "
        f"(last change {change:.3e})"
    )


def minimality_test(h: DirectionFunction, tol: float = 1e-9) -> bool:
    """Zero-width test of the conjugate diagram (rho = 1 geometry).

    The body with support function h is a segment or point iff its
    width h(phi) + h(phi + pi) vanishes in some direction.
    """
    if abs(h.rho - 1.0) > 1e-12:
        raise ValidationError("minimality test lives in the rho = 1 geometry")
    report = trig_convexity_check(h, tol=1e-6 * h.scale())
    if not report.passed:
        raise ValidationError("h is not trigonometrically convex")
    half = h.n // 2
    width = h.values + np.roll(h.values, half)
    return bool(np.min(width) <= tol * h.scale())
