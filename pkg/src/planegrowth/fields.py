"""Deterministic evaluators for scalar fields on the plane.

A :class:`PlaneField` wraps a vectorized function ``z -> real`` (log-moduli,
potentials, synthesized fields).  Values may be ``-inf`` at logarithmic
singularities; quadratures downstream treat those as excluded marker points,
never as errors.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np


@dataclass(frozen=True)
class PlaneField:
    """A real field on the plane, evaluated vectorized over complex arrays."""

    fn: Callable[[np.ndarray], np.ndarray]
    label: str = "field"

    def __call__(self, z) -> np.ndarray | float:
        z = np.asarray(z, dtype=complex)
        out = np.asarray(self.fn(z), dtype=float)
        if z.ndim == 0:
            return float(out)
        return out

    def on_polar(self, radii: np.ndarray, angles: np.ndarray) -> np.ndarray:
        """Values on the polar grid, shaped (len(radii), len(angles))."""
        radii = np.asarray(radii, dtype=float)
        angles = np.asarray(angles, dtype=float)
        z = radii[:, None] * np.exp(1j * angles[None, :])
        return self(z)

    def __add__(self, other: "PlaneField") -> "PlaneField":
        return PlaneField(
            lambda z: self(z) + other(z), f"({self.label}+{other.label})"
        )

    def __mul__(self, scalar: float) -> "PlaneField":
        return PlaneField(lambda z: scalar * self(z), f"{scalar}*{self.label}")

    __rmul__ = __mul__


def constant_field(value: float) -> PlaneField:
    return PlaneField(lambda z: np.full(np.shape(z), value, dtype=float), f"{value}")


def homogeneous_field(rho: float, profile: Callable[[np.ndarray], np.ndarray],
                      label: str = "homog") -> PlaneField:
    """r^rho * profile(phi); the profile must accept angle arrays."""

    def fn(z: np.ndarray) -> np.ndarray:
        r = np.abs(z)
        out = np.zeros(np.shape(z), dtype=float)
        pos = r > 0.0
        out = np.where(pos, r**rho * profile(np.angle(z)), 0.0)
        return out

    return PlaneField(fn, label)
