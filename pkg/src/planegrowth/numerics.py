"""Shared numeric helpers: grids, angle reduction, smoothstep, windowed sums.

The toolkit replaces every limit at infinity by a finite-window surrogate.
The two conventions shared by all modules live here:

* log-uniform grids and "top decade" windows for limsup/liminf estimates,
* decade-windowed improper integrals with a 1% last-decade cutoff.
"""
from __future__ import annotations

from functools import lru_cache
from typing import Callable

import numpy as np

from .errors import NumericError, ValidationError

TWO_PI = 2.0 * np.pi


def log_grid(r_min: float, r_max: float, per_decade: int = 32) -> np.ndarray:
    """Log-uniform grid on [r_min, r_max] with ~per_decade points per decade."""
    if not (0.0 < r_min < r_max):
        raise ValidationError(f"need 0 < r_min < r_max, got [{r_min}, {r_max}]")
    decades = np.log10(r_max / r_min)
    n = max(int(np.ceil(decades * per_decade)) + 1, 8)
    return np.geomspace(r_min, r_max, n)


def top_decade(r: np.ndarray) -> np.ndarray:
    """Boolean mask selecting the last decade of a sorted radial grid."""
    r = np.asarray(r, dtype=float)
    return r >= r[-1] / 10.0


def angle_grid(n: int) -> np.ndarray:
    """Uniform angles [0, 2pi) with n points."""
    return np.arange(n) * (TWO_PI / n)


def reduce_to_principal(phi) -> np.ndarray | float:
    """Reduce angle(s) to the principal interval (-pi, pi]."""
    out = np.remainder(np.asarray(phi, dtype=float) + np.pi, TWO_PI) - np.pi
    out = np.where(out == -np.pi, np.pi, out)
    if np.ndim(phi) == 0:
        return float(out)
    return out


def windowed_improper_sum(
    f: Callable[[float, float], float],
    start: float,
    max_decades: int = 16,
    rel_cut: float = 0.01,
) -> float:
    """Decade-windowed surrogate for an improper integral from ``start``.

    ``f(a, b)`` must return the integral over [a, b].  Decades are added
    until the last one contributes less than ``rel_cut`` of the running
    total (in absolute value), the shared cutoff rule of the toolkit.
    """
    total = 0.0
    a = start
    for _ in range(max_decades):
        b = 10.0 * a
        piece = f(a, b)
        total += piece
        if abs(piece) <= rel_cut * max(abs(total), 1e-300):
            return total
        a = b
    raise NumericError(
        f"windowed integral did not settle after {max_decades} decades "
        f"(last decade {piece!r} of running total {total!r})"
    )


# --- C-infinity smoothstep built from the standard compactly supported bump.
#
# The bump exp(-1/(1-t^2)) on (-1, 1), rescaled to the unit interval, gives
# f(s) = exp(-1/(4 s (1-s))).  Its normalized primitive is a smoothstep that
# is identically 0 for y <= 0 and 1 for y >= 1 with all derivatives vanishing
# at the junctions.

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(64)


def _bump01(s: np.ndarray) -> np.ndarray:
    s = np.asarray(s, dtype=float)
    inside = (s > 0.0) & (s < 1.0)
    out = np.zeros_like(s)
    ss = np.clip(s, 1e-12, 1 - 1e-12)
    with np.errstate(over="ignore"):
        out = np.where(inside, np.exp(-1.0 / (4.0 * ss * (1.0 - ss))), 0.0)
    return out


@lru_cache(maxsize=1)
def _bump01_mass() -> float:
    x = 0.5 * (_GL_NODES + 1.0)
    return float(0.5 * np.sum(_GL_WEIGHTS * _bump01(x)))


def smoothstep(y) -> np.ndarray | float:
    """C-infinity step: 0 for y <= 0, 1 for y >= 1, strictly monotone between."""
    arr = np.atleast_1d(np.asarray(y, dtype=float))
    out = np.empty_like(arr)
    out[arr <= 0.0] = 0.0
    out[arr >= 1.0] = 1.0
    mid = (arr > 0.0) & (arr < 1.0)
    if np.any(mid):
        ym = arr[mid]
        # Gauss-Legendre on [0, y]; the integrand is smooth and flat at 0.
        nodes = 0.5 * ym[:, None] * (_GL_NODES[None, :] + 1.0)
        vals = _bump01(nodes)
        out[mid] = 0.5 * ym * np.sum(_GL_WEIGHTS[None, :] * vals, axis=1) / _bump01_mass()
    if np.ndim(y) == 0:
        return float(out[0])
    return out


def smoothstep_d1(y) -> np.ndarray | float:
    """First derivative of :func:`smoothstep`."""
    out = _bump01(np.asarray(y, dtype=float)) / _bump01_mass()
    if np.ndim(y) == 0:
        return float(out)
    return out


def smoothstep_d2(y) -> np.ndarray | float:
    """Second derivative of :func:`smoothstep`."""
    s = np.asarray(y, dtype=float)
    inside = (s > 0.0) & (s < 1.0)
    ss = np.clip(s, 1e-9, 1 - 1e-9)
    # d/ds of the exponent -1/(4 s (1-s))
    expd = (1.0 - 2.0 * ss) / (4.0 * ss**2 * (1.0 - ss) ** 2)
    out = np.where(inside, _bump01(ss) * expd / _bump01_mass(), 0.0)
    if np.ndim(y) == 0:
        return float(out)
    return out


def fit_envelope_constant(values: np.ndarray, envelope: np.ndarray) -> float:
    """Smallest A with values <= A * envelope on the grid (positive envelope)."""
    values = np.asarray(values, dtype=float)
    envelope = np.asarray(envelope, dtype=float)
    if np.any(envelope <= 0.0):
        raise ValidationError("envelope must be strictly positive on the grid")
    return float(np.max(values / envelope))
