"""Command-line front end.

Verbs: list, check-params, verify, sharpness, minimize, hpw.  Reports go to
stdout as a table, CSV or JSON; diagnostics to stderr.  Exit codes:

    0   success, all assertions holding
    2   inequality violation beyond tolerance (residual < -tol*scale, or a
        sweep/scan quotient below the sharp constant)
    3   admissibility error (parameters or profile outside the allowed set)
    4   numeric failure (divergent tail, non-convergence, eigen stagnation)
    64  usage error (unknown verbs/flags, malformed specs or grids)

The environment variable HYPINEQ_THREADS caps row-level parallelism
(0 or unset: machine default); output is assembled in input order either
way, so identical invocations produce identical bytes.
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from . import catalog, sharpness
from .catalog import Params
from .errors import (AdmissibilityError, AssemblyError, EigenSolveError,
                     HypineqError, ProfileSpecError, QuadratureError,
                     SpecDocumentError)
from .geometry import euclidean, hyperbolic
from .profiles import critical_exponent, parse_profile_spec
from .reporting import to_csv, to_json, to_table

_USAGE_EXIT = 64

_CSV_DOC = """\
CSV columns by verb:
  list        id,tag,shape,model,family,sharp_constant
  check-params  inequality,admissible,violations
  verify      record,side,main,integrand,weight_power,coefficient,integral,value,quad_error
              (term rows, then one record=residual summary row)
  sharpness   shape,quotient,numerator,denominator,quad_error
  hpw         shape,quotient,numerator,denominator,quad_error
  minimize    delta,d_max,points,lambda_min,sensitivity_delta,sensitivity_lambda,sharp_constant

Grids (--eps, --a-grid) are comma lists or start:stop:count[:log] ranges.
Profiles: bump:seed=7 | gaussian:a=1.5 | hardy-conc:eps=0.1 |
rellich-conc:eps=0.1 | hardy-paper:eps=0.1,D=10 | rellich-paper:eps=0.1,D=10 |
grid:file=PATH (two-column text, d and value, strictly increasing d).
"""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(_USAGE_EXIT)


def _add_param_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--n", type=int, required=True, help="dimension (integer >= 2)")
    p.add_argument("--alpha", type=float, default=0.0, help="weight power (default 0)")
    p.add_argument("--p", type=float, default=2.0, help="Lebesgue exponent (default 2)")
    p.add_argument("--C", type=float, default=None, help="geometric constant (default n-1)")
    p.add_argument("--q", type=float, default=None, help="Sobolev remainder exponent")
    p.add_argument("--s", type=float, default=None, help="Hardy-Sobolev interpolation power in [0,2]")
    p.add_argument("--R", type=float, default=None, help="domain radius for remainder inequalities")
    p.add_argument("--c", type=float, default=None, help="user-supplied weighted-Sobolev constant")


def _add_common_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--model", choices=("hyperbolic", "euclidean"), default="hyperbolic")
    p.add_argument("--tol", type=float, default=1e-9, help="quadrature relative tolerance")
    p.add_argument("--residual-tol", type=float, default=1e-8,
                   help="violation threshold relative to the report scale")
    p.add_argument("--format", choices=("table", "csv", "json"), default="table")
    p.add_argument("--spec", default=None, metavar="PATH",
                   help="load a custom inequality document before running")


def _params(args) -> Params:
    return Params(n=args.n, alpha=args.alpha, p=args.p, C=args.C,
                  q=args.q, s=args.s, R=args.R, c=args.c)


def _model(args, n: int):
    return hyperbolic(n) if args.model == "hyperbolic" else euclidean(n)


def _load_spec(args) -> None:
    if getattr(args, "spec", None):
        with open(args.spec, "r", encoding="utf-8") as fh:
            catalog.load_custom(fh.read(), source=args.spec)


def parse_grid(text: str) -> list[float]:
    """Comma list, or start:stop:count[:log] range (inclusive endpoints)."""
    text = text.strip()
    if ":" in text:
        parts = text.split(":")
        if len(parts) not in (3, 4) or (len(parts) == 4 and parts[3] != "log"):
            raise ProfileSpecError(f"malformed grid {text!r}; expected start:stop:count[:log]")
        try:
            start, stop, count = float(parts[0]), float(parts[1]), int(parts[2])
        except ValueError:
            raise ProfileSpecError(f"malformed grid {text!r}") from None
        if count < 1:
            raise ProfileSpecError("grid count must be >= 1")
        if len(parts) == 4:
            return [float(v) for v in np.geomspace(start, stop, count)]
        return [float(v) for v in np.linspace(start, stop, count)]
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise ProfileSpecError(f"malformed grid {text!r}") from None


def _emit(args, payload: dict, header: list[str], rows: list[list], title: str) -> None:
    if args.format == "json":
        sys.stdout.write(to_json(payload))
    elif args.format == "csv":
        sys.stdout.write(to_csv(header, rows))
    else:
        sys.stdout.write(to_table(header, rows, title=title))


# ------------------------------------------------------------------- verbs

def _cmd_list(args) -> int:
    _load_spec(args)
    entries = catalog.entries()
    payload = {"command": "list", "entries": [
        {"id": e.id, "tag": e.tag, "shape": e.shape, "model": e.model,
         "family": e.sharpness_family, "sharp_constant": e.sharp_constant,
         "constraints": list(e.constraints)}
        for e in entries]}
    rows = [[e.id, e.tag, e.shape, e.model, e.sharpness_family or "-",
             e.sharp_constant or "-"] for e in entries]
    _emit(args, payload, ["id", "tag", "shape", "model", "family", "sharp_constant"],
          rows, title="registered inequalities")
    return 0


def _cmd_check_params(args) -> int:
    _load_spec(args)
    params = _params(args)
    ok, violations = catalog.admissible(args.ineq, params)
    payload = {"command": "check-params", "inequality": args.ineq,
               "params": params.to_dict(), "admissible": ok,
               "violations": violations}
    rows = [[args.ineq, ok, "; ".join(violations)]]
    _emit(args, payload, ["inequality", "admissible", "violations"], rows,
          title=f"parameter check for {args.ineq}")
    if not ok:
        print(f"inadmissible parameters for {args.ineq}: " + "; ".join(violations),
              file=sys.stderr)
        return 3
    return 0


def _resolve_profile(args, params: Params, model):
    spec = catalog.get(args.ineq)
    window = sharpness.battery_window(spec, params)
    base = None
    name = args.profile.split(":", 1)[0]
    if name.endswith("-conc"):
        built = catalog.build_terms(args.ineq, params, model)
        base = critical_exponent(built.main_rhs, params, model)
    return parse_profile_spec(args.profile, params=params, model=model,
                              exponent_base=base, window=window)


def _cmd_verify(args) -> int:
    _load_spec(args)
    params = _params(args)
    model = _model(args, params.n)
    phi = _resolve_profile(args, params, model)
    report = sharpness.residual(args.ineq, params, phi, model=model, tol=args.tol)
    ok = report.holds(args.residual_tol)
    payload = {"command": "verify", **report.to_dict(),
               "residual_tol": args.residual_tol, "status": "ok" if ok else "violated"}
    header = ["record", "side", "main", "integrand", "weight_power",
              "coefficient", "integral", "value", "quad_error"]
    rows = [["term", t.side, t.is_main, t.integrand, t.weight_power,
             t.coefficient, t.integral, t.value, t.quad_error]
            for t in report.terms]
    rows.append(["residual", "", "", "", "", "", "", report.residual,
                 report.combined_error])
    _emit(args, payload, header, rows,
          title=f"{report.inequality} on {report.profile} ({report.model}): "
                f"residual={report.residual!r} scale={report.scale!r}")
    if not ok:
        print(f"violation: residual {report.residual!r} < -{args.residual_tol} * scale "
              f"{report.scale!r}", file=sys.stderr)
        return 2
    return 0


def _sweep_rows(report) -> list[list]:
    return [[r.shape, r.quotient, r.numerator, r.denominator, r.quad_error]
            for r in report.rows]


def _quotients_hold(report, residual_tol: float) -> bool:
    sharp = report.sharp_constant
    if sharp is None:
        return True
    floor = sharp - residual_tol * max(1.0, abs(sharp))
    return all(r.quotient >= floor for r in report.rows)


def _cmd_sharpness(args) -> int:
    _load_spec(args)
    params = _params(args)
    model = _model(args, params.n)
    eps = parse_grid(args.eps)
    report = sharpness.sweep(args.ineq, params, eps, family=args.family,
                             model=model, tol=args.tol)
    payload = {"command": "sharpness", **report.to_dict()}
    _emit(args, payload,
          ["shape", "quotient", "numerator", "denominator", "quad_error"],
          _sweep_rows(report),
          title=f"{report.inequality} {report.family} sweep ({report.model}): "
                f"extrapolated={report.extrapolated_limit!r} sharp={report.sharp_constant!r}")
    if not _quotients_hold(report, args.residual_tol):
        print("violation: a sweep quotient fell below the sharp constant", file=sys.stderr)
        return 2
    return 0


def _cmd_hpw(args) -> int:
    _load_spec(args)
    params = _params(args)
    model = _model(args, params.n)
    grid = parse_grid(args.a_grid)
    report = sharpness.hpw_scan(params, grid, inequality_id=args.ineq,
                                model=model, tol=args.tol, refine=args.refine)
    payload = {"command": "hpw", **report.to_dict()}
    if args.fixed_point:
        fp = sharpness.solve_paper_alpha(params.n, convention=args.convention, tol=args.tol)
        payload["fixed_point"] = fp.to_dict()
    _emit(args, payload,
          ["shape", "quotient", "numerator", "denominator", "quad_error"],
          _sweep_rows(report),
          title=f"{report.inequality} gaussian scan ({report.model}): "
                f"min={report.min_quotient!r} at a={report.min_shape!r}, "
                f"sharp={report.sharp_constant!r}")
    if args.fixed_point and args.format == "table":
        fp = payload["fixed_point"]
        sys.stdout.write(
            f"fixed point ({fp['convention']}): converged={fp['converged']} "
            f"width={fp['width']!r} quotient={fp['quotient']!r} gap={fp['gap']!r}\n")
    if not _quotients_hold(report, args.residual_tol):
        print("violation: a scan quotient fell below the sharp constant", file=sys.stderr)
        return 2
    return 0


def _cmd_minimize(args) -> int:
    _load_spec(args)
    params = _params(args)
    model = _model(args, params.n)
    report = sharpness.minimize_discrete(
        args.ineq, params, grid=(args.delta, args.dmax, args.points),
        model=model, sensitivity=not args.no_sensitivity)
    payload = {"command": "minimize",
               **report.to_dict(include_eigenvector=not args.no_eigenvector)}
    rows = [[report.delta, report.d_max, report.points, report.lambda_min,
             report.sensitivity_delta, report.sensitivity_lambda,
             report.sharp_constant]]
    _emit(args, payload,
          ["delta", "d_max", "points", "lambda_min", "sensitivity_delta",
           "sensitivity_lambda", "sharp_constant"], rows,
          title=f"{report.inequality} discrete minimization ({report.model})")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="hypineq",
        description="Numerical verification lab for weighted Hardy, Rellich and "
                    "uncertainty-principle inequalities on the hyperbolic ball.",
        epilog=_CSV_DOC,
        formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="verb", required=True)

    p = sub.add_parser("list", help="name every registered inequality")
    p.add_argument("--format", choices=("table", "csv", "json"), default="table")
    p.add_argument("--spec", default=None)
    p.set_defaults(func=_cmd_list)

    p = sub.add_parser("check-params", help="evaluate admissibility constraints")
    p.add_argument("--ineq", required=True)
    _add_param_flags(p)
    _add_common_flags(p)
    p.set_defaults(func=_cmd_check_params)

    p = sub.add_parser("verify", help="residual of one inequality on one profile")
    p.add_argument("--ineq", required=True)
    p.add_argument("--profile", required=True, help="e.g. bump:seed=7 or gaussian:a=1.5")
    _add_param_flags(p)
    _add_common_flags(p)
    p.set_defaults(func=_cmd_verify)

    p = sub.add_parser("sharpness", help="extremal-family sweep toward the sharp constant")
    p.add_argument("--ineq", required=True)
    p.add_argument("--family", default="concentration",
                   help="concentration | paper | explicit kind name")
    p.add_argument("--eps", required=True, help="comma list or start:stop:count[:log]")
    _add_param_flags(p)
    _add_common_flags(p)
    p.set_defaults(func=_cmd_sharpness)

    p = sub.add_parser("hpw", help="Gaussian-width scan of an uncertainty inequality")
    p.add_argument("--ineq", default="hpw", help="hpw (default) or hpw-second-order")
    p.add_argument("--a-grid", required=True, dest="a_grid",
                   help="comma list or start:stop:count[:log]")
    p.add_argument("--refine", action=argparse.BooleanOptionalAction, default=True,
                   help="golden-section refinement of the grid minimum")
    p.add_argument("--fixed-point", action="store_true",
                   help="also run the self-consistent width iteration")
    p.add_argument("--convention", choices=("radial", "volume"), default="radial")
    _add_param_flags(p)
    _add_common_flags(p)
    p.set_defaults(func=_cmd_hpw)

    p = sub.add_parser("minimize", help="discrete Rayleigh-quotient minimization")
    p.add_argument("--ineq", required=True)
    p.add_argument("--delta", type=float, default=1e-3, help="inner cutoff (default 1e-3)")
    p.add_argument("--dmax", type=float, default=10.0, help="outer cutoff (default 10)")
    p.add_argument("--points", type=int, default=2000, help="grid points (default 2000)")
    p.add_argument("--no-sensitivity", action="store_true",
                   help="skip the delta/10 sensitivity rerun")
    p.add_argument("--no-eigenvector", action="store_true",
                   help="omit eigenvector samples from JSON output")
    _add_param_flags(p)
    _add_common_flags(p)
    p.set_defaults(func=_cmd_minimize)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except AdmissibilityError as exc:
        print(f"admissibility error: {exc}", file=sys.stderr)
        return 3
    except (QuadratureError, AssemblyError, EigenSolveError) as exc:
        print(f"numeric failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 4
    except (ProfileSpecError, SpecDocumentError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return _USAGE_EXIT
    except HypineqError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return _USAGE_EXIT


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
