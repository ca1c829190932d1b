"""Convex support-function geometry for exponential-system verdicts.

A convex body G is handled through its support function
h_G(phi) = max { Re(z e^{i phi}) : z in G } on a uniform angle grid.
Whether the conjugate diagram of a system fits inside G freely, with
sliding, or rigidly decides completeness, maximality, and extremal
overcompleteness; the fit is a small convex minimax over translations,
solved exactly (on the grid) as a linear program.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.optimize import linprog

from .errors import NumericError, ValidationError
from .indicators import DirectionFunction, max_tc_minorant, minimality_test, trig_convexity_check
from .numerics import TWO_PI, angle_grid

_GRID = 4096  # vertex directions are generically off-grid; the frame must
# be fine enough that the touch margin (step^2 scale) stays below the
# 1e-6 enclosure tolerance


class Enclosure(str, Enum):
    NOT_ENCLOSED = "not_enclosed"
    FREE = "free"
    SLIDING = "sliding"
    RIGID = "rigid"


@dataclass(frozen=True)
class SupportBody:
    """A convex body given by its support function on the angle grid."""

    h: DirectionFunction
    provenance: str = "generic"

    def __post_init__(self) -> None:
        # local curvature test (h'' + h >= 0 weakly); cheap and, for
        # 1-t.c. functions, equivalent to the full triple relation
        vals = self.h.values
        step = TWO_PI / self.h.n
        curv = (np.roll(vals, -1) - 2 * np.cos(step) * vals + np.roll(vals, 1))
        if np.min(curv) < -1e-7 * self.h.scale():
            raise ValidationError(
                "support function is not trigonometrically convex "
                f"(worst curvature {np.min(curv):.3e})"
            )
        width = vals + np.roll(vals, self.h.n // 2)
        if np.min(width) < -1e-9 * self.h.scale():
            raise ValidationError("support function has negative width")

    @property
    def values(self) -> np.ndarray:
        return self.h.values

    def mixed(self, other: "SupportBody", c: float) -> "SupportBody":
        """Support function of the Minkowski mix c G1 + (1-c) G2 (exact)."""
        if not (0.0 <= c <= 1.0):
            raise ValidationError("mix parameter must lie in [0, 1]")
        vals = c * self.values + (1.0 - c) * other.values
        return SupportBody(DirectionFunction(vals, 1.0),
                           provenance=f"mix({c:g})")

    def translated(self, shift: complex) -> "SupportBody":
        vals = self.values + np.real(shift * np.exp(1j * self.h.grid))
        return SupportBody(DirectionFunction(vals, 1.0),
                           provenance=f"{self.provenance}+shift")

    def scaled(self, lam: float) -> "SupportBody":
        if lam <= 0.0:
            raise ValidationError("scaling must be positive")
        return SupportBody(DirectionFunction(lam * self.values, 1.0),
                           provenance=f"{lam:g}*{self.provenance}")


def support_function(body, n: int = _GRID) -> SupportBody:
    """Support function of a polygon or named primitive.

    Accepts {"vertices": [[x, y], ...]}, {"disc": r} (optionally with
    "center": [x, y]), {"segment": [[x1, y1], [x2, y2]]}, or a plain
    sequence of vertices.  Exact at every grid angle.
    """
    phi = angle_grid(n)
    if isinstance(body, dict):
        if "vertices" in body:
            verts = np.asarray(body["vertices"], dtype=float)
        elif "disc" in body:
            r = float(body["disc"])
            if r < 0:
                raise ValidationError("disc radius must be nonnegative")
            cx, cy = body.get("center", (0.0, 0.0))
            center = complex(cx, cy)
            vals = r + np.real(center * np.exp(1j * phi))
            return SupportBody(DirectionFunction(vals, 1.0), provenance="disc")
        elif "segment" in body:
            verts = np.asarray(body["segment"], dtype=float)
        else:
            raise ValidationError(f"unknown body spec: {sorted(body)}")
    else:
        verts = np.asarray(body, dtype=float)
    if verts.ndim != 2 or verts.shape[1] != 2 or verts.shape[0] == 0:
        raise ValidationError("vertices must be a nonempty (k, 2) array")
    zs = verts[:, 0] + 1j * verts[:, 1]
    vals = np.max(np.real(zs[None, :] * np.exp(1j * phi)[:, None]), axis=1)
    return SupportBody(DirectionFunction(vals, 1.0), provenance="polygon")


@dataclass(frozen=True)
class EnclosureStatus:
    kind: Enclosure
    translation: complex
    margin: float

    def as_dict(self) -> dict:
        return {"kind": self.kind.value,
                "translation": [self.translation.real, self.translation.imag],
                "margin": self.margin}


def _min_excess(h1: np.ndarray, hg: np.ndarray, phi: np.ndarray) -> tuple[float, complex]:
    """Solve min over translations c of max over phi of
    h1(phi) + Re(c e^{i phi}) - hG(phi) exactly as an LP."""
    n = phi.size
    # variables (v, a, b): minimize v subject to
    # a cos(phi_i) - b sin(phi_i) - v <= hg_i - h1_i
    A = np.column_stack([-np.ones(n), np.cos(phi), -np.sin(phi)])
    res = linprog(c=[1.0, 0.0, 0.0], A_ub=A, b_ub=hg - h1,
                  bounds=[(None, None)] * 3, method="highs")
    if not res.success:
        raise NumericError(f"enclosure LP failed: {res.message}")
    v, a, b = res.x
    return float(v), complex(a, b)


def enclosure_classify(body: SupportBody, G: SupportBody,
                       tol: float | None = None) -> EnclosureStatus:
    """How the body fits in G under translation.

    v* = min_c max_phi [h1 + Re(c e^{i phi}) - h_G]; then
    v* > tol: not enclosed; v* < -tol: free (margin -v*); otherwise the
    optimal translation is probed in 16 directions at step 10 tol:
    any feasible neighbor means sliding, none means rigid.
    """
    if body.h.n != G.h.n:
        raise ValidationError("bodies must share the angle grid")
    phi = G.h.grid
    if tol is None:
        tol = 1e-6 * G.h.scale()
    v, c = _min_excess(body.values, G.values, phi)
    if v > tol:
        return EnclosureStatus(Enclosure.NOT_ENCLOSED, c, -v)
    if v < -tol:
        return EnclosureStatus(Enclosure.FREE, c, -v)
    probes = np.exp(1j * angle_grid(16))
    shift = 10.0 * tol
    cosg = np.exp(1j * phi)
    for w in probes:
        cc = c + shift * w
        excess = np.max(body.values + np.real(cc * cosg) - G.values)
        if excess <= tol:
            return EnclosureStatus(Enclosure.SLIDING, c, -v)
    return EnclosureStatus(Enclosure.RIGID, c, -v)


@dataclass(frozen=True)
class CompletenessVerdict:
    complete: bool
    maximal: bool
    extremely_overcomplete: bool
    statuses: tuple
    mix_kinds: tuple = ()

    def as_dict(self) -> dict:
        return {
            "complete": self.complete,
            "maximal": self.maximal,
            "extremely_overcomplete": self.extremely_overcomplete,
            "statuses": [s.as_dict() for s in self.statuses],
            "mix_kinds": [k.value for k in self.mix_kinds],
        }


def completeness_verdict(kind: str, bodies, G: SupportBody,
                         c_grid: np.ndarray | None = None) -> CompletenessVerdict:
    """Completeness verdict for a regular or indicator spectrum.

    Regular (one body B): the system is not complete iff B is freely
    enclosed in G; G is maximal iff B is enclosed but not freely;
    extremely overcomplete iff rigidly enclosed.

    Indicator (two bodies B1, B2): not complete iff both freely
    enclosed; maximal iff both enclosed and at least one not free;
    extremely overcomplete iff every Minkowski mix c B1 + (1-c) B2 over
    the c grid is rigidly enclosed.
    """
    if kind == "regular":
        (body,) = bodies
        st = enclosure_classify(body, G)
        return CompletenessVerdict(
            complete=st.kind != Enclosure.FREE,
            maximal=st.kind in (Enclosure.SLIDING, Enclosure.RIGID),
            extremely_overcomplete=st.kind == Enclosure.RIGID,
            statuses=(st,),
        )
    if kind != "indicator":
        raise ValidationError("kind must be 'regular' or 'indicator'")
    b1, b2 = bodies
    if c_grid is None:
        c_grid = np.linspace(0.0, 1.0, 11)
    c_grid = np.asarray(c_grid, dtype=float)
    if c_grid.size < 11:
        raise ValidationError("c grid needs at least 11 points")
    s1, s2 = enclosure_classify(b1, G), enclosure_classify(b2, G)
    enclosed = {Enclosure.FREE, Enclosure.SLIDING, Enclosure.RIGID}
    mix_kinds = tuple(
        enclosure_classify(b1.mixed(b2, float(c)), G).kind for c in c_grid
    )
    return CompletenessVerdict(
        complete=not (s1.kind == Enclosure.FREE and s2.kind == Enclosure.FREE),
        maximal=(s1.kind in enclosed and s2.kind in enclosed
                 and (s1.kind != Enclosure.FREE or s2.kind != Enclosure.FREE)),
        extremely_overcomplete=all(k == Enclosure.RIGID for k in mix_kinds),
        statuses=(s1, s2),
        mix_kinds=mix_kinds,
    )


def overcompleteness_test(h1: SupportBody, h2: SupportBody,
                          tangency_tol: float = 0.05) -> bool:
    """Extremal overcompleteness for G equal to the system's own diagram.

    With g = |h1 - h2| and I the longest arc where g > 0 (length d):
    true when d < pi; when d = pi (within one grid step) the verdict
    needs g to vanish with tangency at an endpoint of I, probed as the
    smallest difference-quotient ratio against the secant slope scale;
    otherwise false.
    """
    if h1.h.n != h2.h.n:
        raise ValidationError("bodies must share the angle grid")
    n = h1.h.n
    step = TWO_PI / n
    g = np.abs(h1.values - h2.values)
    scale = max(float(np.max(g)), 1e-300)
    pos = g > 1e-9 * scale
    if not np.any(pos):
        return True  # d = 0
    if np.all(pos):
        return False  # g > 0 everywhere: d = 2 pi
    # longest circular run of positive g
    idx = np.arange(n)
    runs = []
    start = None
    doubled = np.concatenate([pos, pos])
    for i, flag in enumerate(doubled):
        if flag and start is None:
            start = i
        elif not flag and start is not None:
            runs.append((start, i))
            start = None
        if i >= n and not flag:
            break
    lengths = [(b - a) for a, b in runs if a < n]
    best = max(range(len(lengths)), key=lambda q: lengths[q])
    d = lengths[best] * step
    if d < np.pi - step:
        return True
    if d > np.pi + step:
        return False
    a, b = runs[best]
    # endpoints of I sit at indices a-1 and b (the zeros framing the run);
    # the quotient probes points at distance k*step inside the interval
    secant = scale / (d / 2.0)
    quotients = []
    for k in (1, 2, 3):
        quotients.append(g[(a - 1 + k) % n] / (k * step))
        quotients.append(g[(b - k) % n] / (k * step))
    return bool(min(quotients) < tangency_tol * secant)


def spiral_spectral_value(P: float, grid_n: int = 512) -> tuple[float, float]:
    """Least growth exponent of the model spiral spectral problem.

    For the spiral of pitch P (slope angle alpha with tan(alpha) = 2 pi / P)
    the least admissible exponent is rho_min = 1 / (2 cos^2 alpha)
    = (1 + (2 pi / P)^2) / 2, with eigenfunction
    R(eta) = e^{(rho sin a) eta} sin((rho cos a) eta) vanishing at eta = 0
    and eta = 2 pi cos(alpha).  Returns (rho_min, residual) where the
    residual is the grid maximum of |R'' - 2 rho sin(a) R' + rho^2 R|
    (derivatives in closed form), normalized by the eigenfunction scale.
    """
    if P <= 0.0:
        raise ValidationError("pitch P must be positive")
    alpha = np.arctan(TWO_PI / P)
    sa, ca = np.sin(alpha), np.cos(alpha)
    rho = 0.5 * (1.0 + (TWO_PI / P) ** 2)
    eta = np.linspace(0.0, TWO_PI * ca, grid_n)
    e = np.exp(rho * sa * eta)
    w = rho * ca
    R = e * np.sin(w * eta)
    R1 = rho * sa * R + e * w * np.cos(w * eta)
    R2 = rho * sa * R1 + rho * sa * e * w * np.cos(w * eta) - e * w * w * np.sin(w * eta)
    resid = np.max(np.abs(R2 - 2.0 * rho * sa * R1 + rho * rho * R))
    scale = float(np.max(np.abs(R)))
    bc = max(abs(R[0]), abs(R[-1]))
    return float(rho), float(max(resid / max(scale, 1e-300), bc))


# ----------------------------------------------------------------------
# invariant-case pipeline for periodic spectra: the maximal t.c. minorant
# of h_G - h decides completeness via minimality of the result


def periodic_invariant_verdict(h: DirectionFunction, G: SupportBody) -> dict:
    """Documented pipeline: m = h_G - h, then the maximal
    trigonometrically convex minorant and the segment test."""
    if h.n != G.h.n:
        raise ValidationError("grids must agree")
    m = DirectionFunction(G.values - h.values, 1.0)
    minorant = max_tc_minorant(m, 1.0)
    if minorant is None:
        return {"exists": False, "complete": True, "maximal": False}
    minimal = minimality_test(minorant)
    return {"exists": True, "complete": minimal, "maximal": minimal,
            "minorant": minorant}


def body_from_json(text: str, n: int = _GRID) -> SupportBody:
    try:
        payload = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"invalid JSON: {exc}") from exc
    return support_function(payload, n)
