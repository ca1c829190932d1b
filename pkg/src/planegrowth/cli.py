"""Batch front end: analyze zero sets, synthesize targets, decide completeness.

Three subcommands, all file-in/files-out and deterministic for fixed
inputs and flags:

* ``analyze``  -- growth report, Jensen-identity residual table,
  indicator/lower-indicator CSV, sector densities, CRG verdict.
* ``synth``    -- synthesize a zero set realizing an indicator pair or a
  lower-indicator target, with a verification report.
* ``complete`` -- enclosure statuses, mix sweep, overcompleteness flag,
  spiral spectral values.

Exit codes: 0 success, 2 input error, 3 numeric failure, 4 infeasible
target.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .errors import InfeasibleError, NumericError, PlaneGrowthError, ValidationError
from .fields import PlaneField
from .indicators import (CircleMeasure, DirectionFunction, indicator_pair,
                         reconstruct_tcf, t_rho_measure, trig_convexity_check)
from .kernels import tilde_cos
from .limits import crg_test, sector_density
from .measures import MassDistribution, mass_distribution
from .numerics import angle_grid, log_grid
from .potentials import canonical_potential, jensen_residual
from .scale import constant_order, counting_series, exponent_and_genus, growth_scalars
from .synthesis import discretize_zeros, lower_indicator_family
from . import completeness as comp

EXIT_INPUT = 2
EXIT_NUMERIC = 3
EXIT_INFEASIBLE = 4


def _write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8", newline="\n")


def _report_json(payload: dict) -> str:
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"


def _csv(header: list[str], rows: list[list]) -> str:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(f"{x!r}" if isinstance(x, str) else f"{x:.12g}"
                              for x in row))
    return "\n".join(lines) + "\n"


# ----------------------------------------------------------------------
# analyze


def _avoid_atoms(radii: np.ndarray, mu: MassDistribution) -> np.ndarray:
    out = radii.copy()
    for i, r in enumerate(out):
        while len(mu) and np.min(np.abs(mu.radii - out[i])) < 1e-9 * r:
            out[i] *= 1.0 + 1e-6
    return out


def run_analyze(args) -> int:
    mu = MassDistribution.from_json(Path(args.input).read_text())
    if len(mu) == 0:
        raise ValidationError("empty zero set")
    out = Path(args.out)

    rho_mu, genus = exponent_and_genus(mu)
    series = counting_series(mu, pad_decade=False)
    po = constant_order(max(rho_mu, 0.05))
    growth = growth_scalars(series, po)

    u = canonical_potential(mu, genus)
    r_max = float(mu.radii[-1])

    jr_radii = _avoid_atoms(np.geomspace(max(mu.radii[0] * 2, 1.0),
                                         r_max * 1.5, 6), mu)
    jensen_rows = []
    for r in jr_radii:
        res = jensen_residual(mu, genus, float(r), angular_n=args.phi_grid * 8)
        jensen_rows.append([float(r), float(mu.log_counting(float(r))), res])

    # truncation-aware window: beyond r_max^(2/3) the missing tail of a
    # finite zero set distorts the rescaled values
    t_hi = max(r_max ** (2.0 / 3.0), mu.radii[0] * 10.0**args.t_decades * 1.5)
    t_grid = log_grid(t_hi / 10.0**args.t_decades, t_hi, args.t_per_decade)
    h, h_low = indicator_pair(u, po, t_grid, args.phi_grid)
    conv = trig_convexity_check(h, tol=0.05 * h.scale())
    crg = crg_test(u, po, t_grid, args.phi_grid)

    sector_rows = []
    for k in range(8):
        a, b = k * np.pi / 4, (k + 1) * np.pi / 4
        upper, lower, exists = sector_density(mu, po, a, b, t_grid)
        sector_rows.append([a, b, upper, lower, int(exists)])

    report = {
        "command": "analyze",
        "flags": {"phi_grid": args.phi_grid, "t_decades": args.t_decades,
                  "t_per_decade": args.t_per_decade, "seed": args.seed},
        "atoms": len(mu),
        "order": growth.order,
        "type_value": growth.type_value,
        "convergence_exponent": rho_mu,
        "genus": genus,
        "estimation_window": list(growth.window),
        "jensen_max_abs_residual": max(abs(r[2]) for r in jensen_rows),
        "indicator_trig_convex": bool(conv.passed),
        "crg": bool(crg),
    }
    _write(out / "report.json", _report_json(report))
    _write(out / "jensen.csv", _csv(["r", "N", "residual"], jensen_rows))
    _write(out / "indicator.csv",
           _csv(["phi", "h", "h_lower"],
                [[p, a, b] for p, a, b in zip(h.grid, h.values, h_low.values)]))
    _write(out / "sectors.csv",
           _csv(["alpha", "beta", "upper", "lower", "exists"], sector_rows))
    return 0


# ----------------------------------------------------------------------
# synth


def _profile_from_spec(spec, n: int, rho: float) -> DirectionFunction:
    if not isinstance(spec, dict):
        raise ValidationError("profile spec must be an object")
    kind = spec.get("type")
    phi = angle_grid(n)
    if kind == "constant":
        return DirectionFunction(np.full(n, float(spec["value"])), rho)
    if kind == "cos":
        return DirectionFunction(
            float(spec.get("amplitude", 1.0)) * np.cos(phi - float(spec.get("shift", 0.0))),
            rho)
    if kind == "tilde_cos":
        return DirectionFunction(
            float(spec.get("amplitude", 1.0))
            * np.asarray(tilde_cos(rho, phi - float(spec.get("shift", 0.0)) - np.pi)),
            rho)
    if kind == "values":
        vals = np.asarray(spec["values"], dtype=float)
        if vals.size != n:
            raise ValidationError(f"need {n} values, got {vals.size}")
        return DirectionFunction(vals, rho)
    raise ValidationError(f"unknown profile type {kind!r}")


def _measure_to_atoms(s: CircleMeasure, rho: float, r_lo: float, r_hi: float,
                      rings_per_decade: int = 24,
                      integer_masses: bool = True) -> MassDistribution:
    """Spread a circle measure into unit plane atoms.

    The homogeneous field r^rho h(phi) with T_rho h = s has Riesz mass
    dn = (s(dphi)/(2 pi rho)) d(r^rho); ring by ring, that mass stream
    is quantized into unit atoms with a single carried remainder (error
    diffusion), each atom placed at its source direction and the ring's
    geometric-mean radius.  The running total n(r) is exact to within
    one unit at every radius, which is what the potential cares about.
    """
    edges = np.geomspace(r_lo, r_hi, max(int(np.log10(r_hi / r_lo)
                                             * rings_per_decade), 2))
    cell = 2 * np.pi / s.n
    sources = [(a, m) for a, m in s.atoms if m > 0]
    sources += [((i + 0.5) * cell, float(d) * cell)
                for i, d in enumerate(s.density) if d > 0]
    if not sources:
        return mass_distribution(np.array([], dtype=complex), np.array([]))
    points, masses = [], []
    carry = 0.0
    for lo, hi in zip(edges[:-1], edges[1:]):
        ring_mass = (hi**rho - lo**rho) / (2.0 * np.pi * rho)
        rep_r = np.sqrt(lo * hi)
        for a, m in sources:
            if not integer_masses:
                points.append(rep_r * np.exp(1j * a))
                masses.append(m * ring_mass)
                continue
            carry += m * ring_mass
            if carry >= 1.0:
                emit = np.floor(carry)
                carry -= emit
                points.append(rep_r * np.exp(1j * a))
                masses.append(float(emit))
    if not points:
        return mass_distribution(np.array([], dtype=complex), np.array([]))
    return MassDistribution(np.asarray(points), np.asarray(masses))


def run_synth(args) -> int:
    spec = json.loads(Path(args.target).read_text())
    if not isinstance(spec, dict) or "kind" not in spec or "rho" not in spec:
        raise ValidationError("target must declare kind and rho")
    rho = float(spec["rho"])
    if rho <= 0:
        raise ValidationError("rho must be positive")
    out = Path(args.out)
    n = args.phi_grid
    po = constant_order(rho)
    integer_rho = abs(rho - round(rho)) < 1e-12

    if spec["kind"] == "indicator":
        h1 = _profile_from_spec(spec["h1"], n, rho)
        h2 = _profile_from_spec(spec.get("h2", spec["h1"]), n, rho)
        for tag, h in (("h1", h1), ("h2", h2)):
            rep = trig_convexity_check(h, tol=1e-6 * h.scale())
            if not rep.passed:
                raise InfeasibleError(f"{tag} is not {rho}-trigonometrically convex")
        if np.max(np.abs(h1.values - h2.values)) > 1e-12 * h1.scale() and integer_rho:
            raise InfeasibleError("two-indicator targets need non-integer rho")

        s1 = t_rho_measure(h1)
        harmonic = complex(0.0)
        if integer_rho:
            # split off the harmonic (exponential-factor) part; the grid
            # second-difference noise of a pure harmonic is O(step^2)
            rr = int(round(rho))
            coeff = np.fft.rfft(h1.values) / h1.n
            harmonic = 2.0 * complex(coeff[rr]) if rr < coeff.size else 0.0
            if s1.total_variation() < 1e-2 * max(h1.scale(), 1.0):
                zero_set = mass_distribution(np.array([], dtype=complex),
                                             np.array([]))
                achieved = h1.values  # purely harmonic target, exact
                report = {
                    "command": "synth", "kind": "indicator", "rho": rho,
                    "exponential_factor": [harmonic.real, -harmonic.imag],
                    "zeros": 0,
                    "achieved_sup_error": 0.0,
                }
                _write(out / "report.json", _report_json(report))
                _write(out / "zeros.json", zero_set.to_json())
                _write(out / "verification.csv",
                       _csv(["phi", "target", "achieved"],
                            [[p, t, a] for p, t, a in
                             zip(h1.grid, h1.values, achieved)]))
                return 0
            raise InfeasibleError(
                "integer-rho synthesis with a nontrivial measure is unsupported"
            )

        mix = spec.get("mix_cycle_logperiod", 0.0)
        r_lo, r_hi = 1.0, float(spec.get("r_max", 4.0e6))
        if np.max(np.abs(h1.values - h2.values)) <= 1e-12 * h1.scale():
            mu = _measure_to_atoms(s1, rho, r_lo, r_hi)
        else:
            s2 = t_rho_measure(h2)
            edges = np.geomspace(r_lo, r_hi, 64)
            pieces = []
            period = mix if mix > 0 else 4.6
            for lo, hi in zip(edges[:-1], edges[1:]):
                x = np.log(np.sqrt(lo * hi))
                c = abs((x % period) - period / 2) / (period / 2)
                s_mix = CircleMeasure(
                    tuple((a, c * m) for a, m in s1.atoms)
                    + tuple((a, (1 - c) * m) for a, m in s2.atoms),
                    c * s1.density + (1 - c) * s2.density)
                pieces.append(_measure_to_atoms(s_mix, rho, lo, hi, 24))
            mu = pieces[0]
            for piece in pieces[1:]:
                mu = mu.merged(piece)

        zero_set, disc_report = discretize_zeros(mu, rho)
        u = canonical_potential(zero_set, int(np.floor(rho)))
        t_hi = r_hi ** (2.0 / 3.0)  # truncation-aware verification window
        t_grid = log_grid(t_hi / 10.0**args.t_decades, t_hi, args.t_per_decade)
        h, h_low = indicator_pair(u, po, t_grid, n)
        target_hi = np.maximum(h1.values, h2.values)
        target_lo = np.minimum(h1.values, h2.values)
        sup_err = float(np.max(np.abs(h.values - target_hi))) / max(h1.scale(), 1e-12)
        report = {
            "command": "synth", "kind": "indicator", "rho": rho,
            "zeros": len(zero_set),
            "discretization_defect": disc_report.total_defect,
            "achieved_sup_error": sup_err,
            "crg": bool(crg_test(u, po, t_grid, n)),
        }
        _write(out / "report.json", _report_json(report))
        _write(out / "zeros.json", zero_set.to_json())
        _write(out / "verification.csv",
               _csv(["phi", "target_h", "target_h_lower", "achieved_h",
                     "achieved_h_lower"],
                    [[p, a, b, c, d] for p, a, b, c, d in
                     zip(h.grid, target_hi, target_lo, h.values, h_low.values)]))
        return 0

    if spec["kind"] == "lower":
        if integer_rho:
            raise InfeasibleError("lower-indicator synthesis needs non-integer rho")
        g = _profile_from_spec(spec["g"], n, rho)
        if "h" in spec:
            h_target = _profile_from_spec(spec["h"], n, rho)
            if np.any(g.values > h_target.values + 1e-12):
                raise InfeasibleError("target g exceeds the indicator target")
        fam = lower_indicator_family(g, rho, n_levels=int(spec.get("levels", 2)))
        pins = []
        for th in fam.theta_grid:
            f = fam.field(float(th), 0)
            pins.append([float(th), fam.pin_value(float(th), 0),
                         float(f(np.exp(1j * th)))])
        pin_err = max(abs(row[1] - row[2]) for row in pins)
        par = fam.levels[0][1]
        # realize the level-0 trunk masses as a zero set; the sub-unit
        # trunk mass delta is amplified to an integer-reachable scale and
        # the factor reported (the family itself is a field-level object)
        amp = float(np.ceil(2.0 / par.delta))
        s_trunk = CircleMeasure(tuple((float(th), amp * par.delta)
                                      for th in fam.theta_grid[:: max(g.n // 64, 1)]),
                                np.zeros(g.n))
        mu = _measure_to_atoms(s_trunk, rho, 1.0, float(spec.get("r_max", 1.0e3)))
        zero_set, disc_report = discretize_zeros(mu, rho)
        report = {
            "command": "synth", "kind": "lower", "rho": rho,
            "pin_max_error": pin_err,
            "trunk": {"K": par.K, "delta": par.delta, "offset": par.offset},
            "zeros": len(zero_set),
        }
        _write(out / "report.json", _report_json(report))
        _write(out / "zeros.json", zero_set.to_json())
        _write(out / "verification.csv",
               _csv(["theta", "pin_target", "pin_achieved"], pins))
        return 0

    raise ValidationError(f"unknown target kind {spec['kind']!r}")


# ----------------------------------------------------------------------
# complete


def run_complete(args) -> int:
    spec = json.loads(Path(args.bodies).read_text())
    if not isinstance(spec, dict) or "G" not in spec:
        raise ValidationError("bodies file must declare G")
    out = Path(args.out)
    G = comp.support_function(spec["G"])
    bodies = [comp.support_function(b) for b in spec.get("bodies", [])]
    kind = spec.get("kind", "indicator" if len(bodies) == 2 else "regular")

    payload: dict = {"command": "complete", "kind": kind}
    if bodies:
        verdict = comp.completeness_verdict(kind, tuple(bodies), G)
        payload["verdict"] = verdict.as_dict()
        if len(bodies) == 2:
            payload["overcomplete_own_diagram"] = comp.overcompleteness_test(
                bodies[0], bodies[1])
    payload["spiral"] = [
        {"P": float(P), **dict(zip(("rho_min", "residual"),
                                   comp.spiral_spectral_value(float(P))))}
        for P in spec.get("P_list", [])
    ]
    _write(out / "verdict.json", _report_json(payload))
    if bodies:
        rows = [[s.as_dict()["kind"], s.margin,
                 s.translation.real, s.translation.imag]
                for s in verdict.statuses]
        _write(out / "statuses.csv",
               _csv(["kind", "margin", "shift_re", "shift_im"], rows))
    return 0


# ----------------------------------------------------------------------


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="planegrowth",
        description="Growth analysis and synthesis for plane zero sets")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_shared(p):
        p.add_argument("--phi-grid", type=int, default=256, dest="phi_grid")
        p.add_argument("--t-decades", type=int, default=2, dest="t_decades")
        p.add_argument("--t-per-decade", type=int, default=32,
                       dest="t_per_decade")
        p.add_argument("--out", type=str, default="planegrowth_out")
        p.add_argument("--seed", type=int, default=42)

    p_an = sub.add_parser("analyze", help="analyze a zero-set JSON file")
    p_an.add_argument("input")
    add_shared(p_an)
    p_sy = sub.add_parser("synth", help="synthesize a zero set from a target")
    p_sy.add_argument("target")
    add_shared(p_sy)
    p_co = sub.add_parser("complete", help="completeness verdicts for bodies")
    p_co.add_argument("bodies")
    add_shared(p_co)

    args = parser.parse_args(argv)
    try:
        if args.command == "analyze":
            return run_analyze(args)
        if args.command == "synth":
            return run_synth(args)
        return run_complete(args)
    except (ValidationError, FileNotFoundError, json.JSONDecodeError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except InfeasibleError as exc:
        print(f"infeasible target: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (NumericError, PlaneGrowthError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
