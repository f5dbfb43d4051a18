"""Command-line interface: model parsing, analysis dispatch, result export.

Subcommands map one-to-one onto the library modules::

    roots      locate characteristic roots in a complex box
    crossing   single-delay crossing frequencies and critical delays
    fsc        frequency-sweeping curve samples
    nu         unstable-root count profile over a delay range
    puiseux    local expansion of a multiple characteristic root
    mid        maximal-multiplicity (or complex-pair) pole placement
    pendulum   delayed PD design with a triple real root
    resonator  delayed resonator absorber design
    export     plot-ready CSV data (root maps, curves, step functions)

Exit codes: 0 success, 2 invalid input, 3 numeric budget exhausted.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from fractions import Fraction

import numpy as np

from . import crossing as crossing_mod
from . import fsc as fsc_mod
from . import gallery, mid, puiseux
from .core import load_model
from .errors import (
    BudgetExhaustedError,
    NonIntegerWindingError,
    TDSpectralError,
    UnresolvedTangencyError,
    ValidationError,
)
from .rootfinder import ComplexBox, roots_in_box

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_BUDGET = 3


def _write(text: str, path: str | None) -> None:
    if path is None:
        sys.stdout.write(text)
        if not text.endswith("\n"):
            sys.stdout.write("\n")
    else:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)


def _json(payload) -> str:
    return json.dumps(payload, indent=2, sort_keys=True)


def _csv(rows: list[dict], columns: list[str]) -> str:
    import io

    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=columns, lineterminator="\n")
    writer.writeheader()
    writer.writerows(rows)
    return buf.getvalue()


def _emit(rows: list[dict], columns: list[str], fmt: str, path: str | None) -> None:
    if fmt == "csv":
        _write(_csv(rows, columns), path)
    else:
        _write(_json(rows), path)


# ---------------------------------------------------------------------------
# subcommand handlers
# ---------------------------------------------------------------------------


def _cmd_roots(args) -> int:
    qp = load_model(args.model)
    box = ComplexBox(*args.box)
    rng = np.random.default_rng(args.seed)
    clusters = roots_in_box(qp, args.tau, box, tol=args.residual_rtol, rng=rng)
    rows = [c.as_dict() for c in clusters]
    _emit(rows, ["re", "im", "multiplicity", "residual"], args.format, args.output)
    return EXIT_OK


def _cmd_crossing(args) -> int:
    qp = load_model(args.model)
    p0, p1 = crossing_mod.single_delay_parts(qp)
    rows = []
    for cf in crossing_mod.crossing_set(p0, p1):
        if cf.invariant:
            rows.append({"omega": cf.omega, "tau_star": "", "direction": "invariant"})
            continue
        tau_star = crossing_mod.minimal_delay(p0, p1, cf.omega) if cf.omega > 0 else 0.0
        if cf.degenerate:
            direction = "degenerate"
        else:
            try:
                direction = crossing_mod.crossing_direction_simple(
                    qp, cf.omega, tau_star).value
            except TDSpectralError:
                direction = "multiple-root"
        rows.append({"omega": cf.omega, "tau_star": tau_star, "direction": direction})
    _emit(rows, ["omega", "tau_star", "direction"], args.format, args.output)
    return EXIT_OK


def _fsc_rows(sw) -> list[dict]:
    rows = []
    mods = sw.moduli
    for b in range(sw.n_branches):
        for k, w in enumerate(sw.omega_grid):
            rows.append({"omega": float(w), "branch_id": b,
                         "modulus": float(mods[b, k])})
    return rows


def _cmd_fsc(args) -> int:
    qp = load_model(args.model)
    rng = (args.omega_min, args.omega_max) if args.omega_max is not None else None
    sw = fsc_mod.sweep(qp, rng, args.resolution)
    _emit(_fsc_rows(sw), ["omega", "branch_id", "modulus"], args.format, args.output)
    return EXIT_OK


def _cmd_nu(args) -> int:
    qp = load_model(args.model)
    prof = fsc_mod.nu_profile(qp, args.tau_max, validate=not args.no_validate)
    payload = {
        "tau_max": prof.tau_max,
        "breakpoints": [float(b) for b in prof.breakpoints],
        "counts": list(prof.counts),
        "stability_intervals": [[float(a), float(b)]
                                for a, b in prof.stability_intervals],
        "flags": prof.flags,
    }
    _write(_json(payload), args.output)
    return EXIT_OK


def _branch_payload(b) -> dict:
    out = {
        "exponent": str(b.exponent),
        "coeff_re": b.coeff.real if not b.invariant else 0.0,
        "coeff_im": b.coeff.imag if not b.invariant else 0.0,
        "direction": b.direction.value,
    }
    if b.second_coeff is not None:
        out["second_exponent"] = str(b.second_exponent)
        out["second_coeff_re"] = b.second_coeff.real
        out["second_coeff_im"] = b.second_coeff.imag
    return out


def _cmd_puiseux(args) -> int:
    qp = load_model(args.model)
    lam0 = complex(args.lambda0[0], args.lambda0[1])
    if args.tau2 is not None:
        te = puiseux.two_delay_expansion(qp, lam0, args.tau0, args.tau2)
        payload = {
            "multiplicity": te.table.m,
            "kappa": te.table.kappa,
            "diagram": [list(p) for p in te.diagram.points],
            "segments": [{"beta": str(s.beta), "m": s.m_seg} for s in te.segments],
            "branches": [{"exponent": str(b.exponent), "coeff_re": b.coeff.real,
                          "coeff_im": b.coeff.imag, "horizontal": b.horizontal}
                         for b in te.branches],
        }
        _write(_json(payload), args.output)
        return EXIT_OK
    exp = puiseux.expand_at(qp, lam0, args.tau0,
                            tau_sign=-1 if args.decreasing else 1)
    payload = {
        "multiplicity": exp.multiplicity,
        "kappa": exp.table.kappa,
        "diagram": [list(p) for p in exp.diagram.points],
        "segments": [{"beta": str(s.beta), "m": s.m_seg} for s in exp.segments],
        "branches": [_branch_payload(b) for b in exp.branches],
        "splitting": exp.splitting.value,
    }
    _write(_json(payload), args.output)
    return EXIT_OK


def _assignment_payload(asg, cert=None) -> dict:
    payload = {
        "n": asg.n, "m": asg.m,
        "lambda0_re": complex(asg.lam0).real,
        "lambda0_im": complex(asg.lam0).imag,
        "tau": asg.tau,
        "a": list(asg.a),
        "alpha": list(asg.alpha),
        "target_multiplicity": asg.target_multiplicity,
        "stable_predicate": bool(asg.stable_predicate),
    }
    if cert is not None:
        payload["certificate"] = {
            "passed": cert.passed, "method": cert.method,
            "margin": None if math.isnan(cert.margin) else cert.margin,
        }
    return payload


def _cmd_mid(args) -> int:
    if args.theta0:
        asg = mid.complex_pair_coefficients(args.lambda0, args.theta0, args.tau)
    else:
        asg = mid.max_multiplicity_coefficients(args.n, args.m, args.lambda0, args.tau)
    cert = mid.certify_dominance(asg) if not args.no_certify else None
    _write(_json(_assignment_payload(asg, cert)), args.output)
    return EXIT_OK


def _cmd_pendulum(args) -> int:
    design = mid.pendulum_pd_design(args.a0, args.tau)
    payload = {
        "a0": design.a0, "tau": design.tau,
        "b0": design.b0, "b1": design.b1,
        "lambda_plus": design.lam_plus, "lambda_minus": design.lam_minus,
        "tau_crit": design.tau_crit, "stable": design.stable,
    }
    _write(_json(payload), args.output)
    return EXIT_OK


def _cmd_resonator(args) -> int:
    design = mid.resonator_design(args.omega, args.k, args.ma, args.zeta, args.Omega)
    payload = {
        "omega": design.omega, "k": design.k, "tau": design.tau,
        "gain_position": design.gain_position,
        "gain_velocity": design.gain_velocity,
        "gain_delayed_velocity": design.gain_delayed_velocity,
    }
    _write(_json(payload), args.output)
    return EXIT_OK


def _sweep_rows(builder, values, box, rng) -> list[dict]:
    rows = []
    for v in values:
        qp = builder(float(v))
        for c in roots_in_box(qp, None, box, rng=rng):
            rows.append({"alpha": float(v), "re": c.center.real,
                         "im": c.center.imag, "multiplicity": c.multiplicity})
    return rows


def _cmd_export(args) -> int:
    rng = np.random.default_rng(args.seed)
    if args.kind == "scalar-root-map":
        values = np.linspace(args.param_min, args.param_max, args.steps)
        box = ComplexBox(-4.0, 2.5, -9.0, 9.0)
        rows = _sweep_rows(gallery.scalar_invariant_root, values, box, rng)
        _write(_csv(rows, ["alpha", "re", "im", "multiplicity"]), args.output)
        return EXIT_OK
    if args.kind == "pendulum-root-map":
        values = np.linspace(args.param_min, args.param_max, args.steps)
        box = ComplexBox(-4.0, 2.5, -9.0, 9.0)
        rows = _sweep_rows(gallery.pendulum_two_block_scaled, values, box, rng)
        _write(_csv(rows, ["alpha", "re", "im", "multiplicity"]), args.output)
        return EXIT_OK
    if args.kind == "fsc":
        qp = load_model(args.model)
        sw = fsc_mod.sweep(qp)
        _write(_csv(_fsc_rows(sw), ["omega", "branch_id", "modulus"]), args.output)
        return EXIT_OK
    if args.kind == "nu-steps":
        qp = load_model(args.model)
        prof = fsc_mod.nu_profile(qp, args.tau_max)
        edges = [0.0, *prof.breakpoints, prof.tau_max]
        rows = [{"tau_lo": float(edges[k]), "tau_hi": float(edges[k + 1]),
                 "nu": prof.counts[k]} for k in range(len(prof.counts))]
        _write(_csv(rows, ["tau_lo", "tau_hi", "nu"]), args.output)
        return EXIT_OK
    raise ValidationError(f"unknown export kind {args.kind!r}")


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tdspectral",
        description="Spectral analysis of retarded time-delay systems")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, model=True):
        if model:
            p.add_argument("model", help="JSON model file")
        p.add_argument("--format", choices=("json", "csv"), default="json")
        p.add_argument("--output", default=None, help="write to file instead of stdout")
        p.add_argument("--seed", type=int, default=0,
                       help="seed for contour jitter (reproducible runs)")

    p = sub.add_parser("roots", help="characteristic roots in a complex box")
    common(p)
    p.add_argument("--tau", type=float, default=None, help="delay (commensurate base)")
    p.add_argument("--box", type=float, nargs=4, required=True,
                   metavar=("RE_MIN", "RE_MAX", "IM_MIN", "IM_MAX"))
    p.add_argument("--residual-rtol", type=float, default=1e-10)
    p.set_defaults(func=_cmd_roots)

    p = sub.add_parser("crossing", help="crossing frequencies and critical delays")
    common(p)
    p.set_defaults(func=_cmd_crossing)

    p = sub.add_parser("fsc", help="frequency-sweeping curve samples")
    common(p)
    p.add_argument("--omega-min", type=float, default=0.0)
    p.add_argument("--omega-max", type=float, default=None)
    p.add_argument("--resolution", type=int, default=1200)
    p.set_defaults(func=_cmd_fsc)

    p = sub.add_parser("nu", help="unstable-root count profile")
    common(p)
    p.add_argument("--tau-max", type=float, required=True)
    p.add_argument("--no-validate", action="store_true",
                   help="skip the direct-count cross check")
    p.set_defaults(func=_cmd_nu)

    p = sub.add_parser("puiseux", help="expansion of a multiple root")
    common(p)
    p.add_argument("--lambda0", type=float, nargs=2, required=True,
                   metavar=("RE", "IM"))
    p.add_argument("--tau0", type=float, required=True)
    p.add_argument("--tau2", type=float, default=None,
                   help="second delay: run the two-delay expansion in the first")
    p.add_argument("--decreasing", action="store_true",
                   help="expand for delays decreasing from tau0")
    p.set_defaults(func=_cmd_puiseux)

    p = sub.add_parser("mid", help="maximal-multiplicity pole placement")
    common(p, model=False)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--m", type=int, default=None)
    p.add_argument("--lambda0", type=float, required=True)
    p.add_argument("--theta0", type=float, default=0.0,
                   help="nonzero: place a complex double pair (n=2, m=1)")
    p.add_argument("--tau", type=float, required=True)
    p.add_argument("--no-certify", action="store_true")
    p.set_defaults(func=_cmd_mid)

    p = sub.add_parser("pendulum", help="delayed PD triple-root design")
    common(p, model=False)
    p.add_argument("--a0", type=float, required=True)
    p.add_argument("--tau", type=float, required=True)
    p.set_defaults(func=_cmd_pendulum)

    p = sub.add_parser("resonator", help="delayed resonator absorber design")
    common(p, model=False)
    p.add_argument("--omega", type=float, required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--ma", type=float, required=True)
    p.add_argument("--zeta", type=float, required=True)
    p.add_argument("--Omega", type=float, required=True)
    p.set_defaults(func=_cmd_resonator)

    p = sub.add_parser("export", help="plot-ready CSV data")
    common(p, model=False)
    p.add_argument("--kind", required=True,
                   choices=("scalar-root-map", "pendulum-root-map", "fsc", "nu-steps"))
    p.add_argument("--model", default=None, help="model file (fsc / nu-steps kinds)")
    p.add_argument("--param-min", type=float, default=-2.0)
    p.add_argument("--param-max", type=float, default=0.0)
    p.add_argument("--steps", type=int, default=21)
    p.add_argument("--tau-max", type=float, default=5.0)
    p.set_defaults(func=_cmd_export)

    return parser


def run(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "mid" and not args.theta0 and args.m is None:
        parser.error("mid: --m is required unless --theta0 is given")
    if args.command == "mid" and args.theta0:
        args.n, args.m = 2, 1
    try:
        return args.func(args)
    except (BudgetExhaustedError, NonIntegerWindingError,
            UnresolvedTangencyError) as exc:
        print(f"error (numeric budget): {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except TDSpectralError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
