"""Finite weighted point sets in the punctured plane.

A :class:`MassDistribution` is the discrete stand-in for a Riesz mass
distribution: finitely many atoms with positive weights, none at the
origin.  Continuous measures enter the toolkit only after being sampled
into atoms.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError
from .numerics import reduce_to_principal


@dataclass(frozen=True)
class MassDistribution:
    """Atoms ``points[j]`` (complex, nonzero) with masses ``masses[j] >= 0``."""

    points: np.ndarray
    masses: np.ndarray
    _radii: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        points = np.asarray(self.points, dtype=complex).ravel()
        masses = np.asarray(self.masses, dtype=float).ravel()
        if points.shape != masses.shape:
            raise ValidationError(
                f"points/masses length mismatch: {points.shape} vs {masses.shape}"
            )
        if np.any(masses < 0.0):
            raise ValidationError("masses must be nonnegative")
        radii = np.abs(points)
        if points.size and np.any(radii == 0.0):
            raise ValidationError("atom at the origin is not allowed")
        order = np.argsort(radii, kind="stable")
        object.__setattr__(self, "points", points[order])
        object.__setattr__(self, "masses", masses[order])
        object.__setattr__(self, "_radii", radii[order])

    # -- basic queries -------------------------------------------------

    def __len__(self) -> int:
        return int(self.points.size)

    @property
    def radii(self) -> np.ndarray:
        """Atom moduli, sorted increasingly."""
        return self._radii

    def total_mass(self) -> float:
        return float(np.sum(self.masses))

    def counting(self, r) -> np.ndarray | float:
        """n(r): total mass within the closed disc of radius r."""
        r = np.asarray(r, dtype=float)
        csum = np.concatenate(([0.0], np.cumsum(self.masses)))
        idx = np.searchsorted(self._radii, r, side="right")
        out = csum[idx]
        if r.ndim == 0:
            return float(out)
        return out

    def log_counting(self, r: float) -> float:
        """N(r) = sum of m_j log(r / |z_j|) over atoms with |z_j| <= r."""
        inside = self._radii <= r
        if not np.any(inside):
            return 0.0
        return float(np.sum(self.masses[inside] * np.log(r / self._radii[inside])))

    def sector_mass(self, alpha: float, beta: float, r: float) -> float:
        """Mass of the sector {|z| <= r, arg z in [alpha, beta]} (mod 2pi).

        The angular interval is taken counterclockwise from alpha to beta;
        a full turn (beta - alpha >= 2pi) counts every direction once.
        """
        if beta - alpha >= 2.0 * np.pi:
            return float(self.counting(r))
        inside = self._radii <= r
        if not np.any(inside):
            return 0.0
        rel = np.mod(np.angle(self.points[inside]) - alpha, 2.0 * np.pi)
        width = np.mod(beta - alpha, 2.0 * np.pi)
        return float(np.sum(self.masses[inside][rel <= width]))

    def restricted(self, r_min: float, r_max: float) -> "MassDistribution":
        """Atoms with r_min <= |z| < r_max."""
        keep = (self._radii >= r_min) & (self._radii < r_max)
        return MassDistribution(self.points[keep], self.masses[keep])

    def merged(self, other: "MassDistribution") -> "MassDistribution":
        return MassDistribution(
            np.concatenate([self.points, other.points]),
            np.concatenate([self.masses, other.masses]),
        )

    # -- JSON schema: {"atoms":[{"re":..,"im":..,"mass":..}]} -----------

    def to_json(self) -> str:
        atoms = [
            {"re": float(z.real), "im": float(z.imag), "mass": float(m)}
            for z, m in zip(self.points, self.masses)
        ]
        return json.dumps({"atoms": atoms})

    @staticmethod
    def from_json(text: str) -> "MassDistribution":
        try:
            payload = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"invalid JSON: {exc}") from exc
        if not isinstance(payload, dict) or "atoms" not in payload:
            raise ValidationError('zero-set JSON must be {"atoms": [...]}')
        atoms = payload["atoms"]
        if not isinstance(atoms, list):
            raise ValidationError('"atoms" must be a list')
        points, masses = [], []
        for k, entry in enumerate(atoms):
            try:
                points.append(complex(float(entry["re"]), float(entry["im"])))
                masses.append(float(entry.get("mass", 1.0)))
            except (TypeError, KeyError, ValueError) as exc:
                raise ValidationError(f"bad atom entry #{k}: {entry!r}") from exc
        return MassDistribution(np.array(points, dtype=complex), np.array(masses))


def mass_distribution(points, masses=None) -> MassDistribution:
    """Convenience constructor; unit masses when ``masses`` is omitted."""
    points = np.asarray(points, dtype=complex)
    if masses is None:
        masses = np.ones(points.shape, dtype=float)
    return MassDistribution(points, np.asarray(masses, dtype=float))


def ray_zero_set(exponent: float, count: int, angle: float = 0.0) -> MassDistribution:
    """Unit atoms at j**exponent e^{i angle}, j = 1..count.

    The counting function is n(r) = floor(r**(1/exponent)); the standard
    regular test sets (j**2 for growth 1/2, j**(2/3) for growth 3/2, ...)
    come from here.
    """
    j = np.arange(1, count + 1, dtype=float)
    return mass_distribution(j**exponent * np.exp(1j * reduce_to_principal(angle)))
