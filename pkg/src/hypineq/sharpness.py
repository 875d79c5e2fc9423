"""Verification engines: residuals, Rayleigh quotients, sharpness sweeps,
Gaussian scans, the fixed-point width search, and discrete quotient
minimization via a generalized eigenproblem.

Everything here produces numerical evidence with error estimates, not
certified bounds.  Reported quantities follow the radial normalization of
:mod:`hypineq.catalog`, under which residual signs and all quotients agree
with the true n-dimensional functionals.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import catalog
from .catalog import BuiltInequality, BuiltTerm, Params
from .errors import AdmissibilityError, AssemblyError, EigenSolveError
from .geometry import ModelKind, SpaceModel, hyperbolic
from .profiles import (FamilyKind, FamilyOptions, RadialProfile,
                       critical_exponent, gaussian_profile, make_family,
                       seeded_bump)
from .quadrature import (DEFAULT_TOL, GaussianDecay, Integrand, QuadResult,
                         integrate, integrate_term)


def _thread_count() -> int:
    raw = os.environ.get("HYPINEQ_THREADS", "").strip()
    if raw:
        try:
            value = int(raw)
        except ValueError:
            raise ValueError(f"HYPINEQ_THREADS must be an integer, got {raw!r}") from None
        if value > 0:
            return value
    return os.cpu_count() or 1


def _map_ordered(fn, items):
    """Apply fn to items, possibly in a thread pool, preserving input order."""
    items = list(items)
    workers = min(_thread_count(), len(items))
    if workers <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


# ------------------------------------------------------------------ residual

@dataclass(frozen=True)
class TermValue:
    side: str
    is_main: bool
    integrand: str
    weight_power: float
    coefficient: float
    integral: float        # coefficient-free, outer power applied
    value: float           # coefficient * integral
    quad_error: float

    def to_dict(self) -> dict:
        return {"side": self.side, "main": self.is_main, "integrand": self.integrand,
                "weight_power": self.weight_power, "coefficient": self.coefficient,
                "integral": self.integral, "value": self.value,
                "quad_error": self.quad_error}


@dataclass(frozen=True)
class ResidualReport:
    inequality: str
    model: str
    params: Params
    profile: str
    shape: str
    terms: tuple[TermValue, ...]
    residual: float
    scale: float
    combined_error: float
    structural_remainder: bool

    @property
    def lhs_total(self) -> float:
        return sum(t.value for t in self.terms if t.side == "lhs")

    @property
    def rhs_total(self) -> float:
        return sum(t.value for t in self.terms if t.side == "rhs")

    @property
    def main_residual(self) -> float:
        """LHS minus the main RHS term only (remainders dropped)."""
        if self.shape == "product":
            return self.residual
        main = next(t.value for t in self.terms if t.is_main)
        return self.lhs_total - main

    @property
    def remainder_total(self) -> float:
        return sum(t.value for t in self.terms if t.side == "rhs" and not t.is_main)

    def holds(self, tol: float = 1e-8) -> bool:
        """The inequality under test: residual >= -tol * scale.

        Entries whose remainder constant is structural (user-supplied) are
        judged on the main sub-inequality plus remainder nonnegativity.
        """
        if self.structural_remainder:
            return (self.main_residual >= -tol * self.scale
                    and self.remainder_total >= -tol * self.scale)
        return self.residual >= -tol * self.scale

    def to_dict(self) -> dict:
        return {
            "inequality": self.inequality, "model": self.model,
            "params": self.params.to_dict(), "profile": self.profile,
            "shape": self.shape, "terms": [t.to_dict() for t in self.terms],
            "lhs_total": self.lhs_total, "rhs_total": self.rhs_total,
            "residual": self.residual, "scale": self.scale,
            "combined_error": self.combined_error,
            "main_residual": self.main_residual,
            "remainder_total": self.remainder_total,
            "structural_remainder": self.structural_remainder,
        }


def _term_values(built: BuiltInequality, phi: RadialProfile,
                 tol: float) -> list[tuple[BuiltTerm, QuadResult]]:
    return [(term, integrate_term(term, phi, built.params, built.model, tol=tol))
            for term in built.terms]


def residual(inequality_id: str, params: Params, phi: RadialProfile,
             model: SpaceModel | None = None, tol: float = DEFAULT_TOL) -> ResidualReport:
    """Evaluate every term and the inequality residual for one profile.

    Linear shape: residual = LHS - sum(RHS).  Product shape:
    residual = T1*T2 - const*T3^2.  ``scale`` is the largest term magnitude,
    the natural yardstick for "residual >= -tol*scale".
    """
    model = model or hyperbolic(params.n)
    built = catalog.build_terms(inequality_id, params, model)
    pairs = _term_values(built, phi, tol)

    terms = tuple(
        TermValue(side=t.side, is_main=t.is_main, integrand=t.integrand,
                  weight_power=t.weight_power, coefficient=t.coefficient,
                  integral=q.value, value=t.coefficient * q.value,
                  quad_error=t.coefficient * q.error_estimate)
        for t, q in pairs)

    if built.shape == "linear":
        lhs = sum(t.value for t in terms if t.side == "lhs")
        rhs = sum(t.value for t in terms if t.side == "rhs")
        res = lhs - rhs
        scale = max([abs(t.value) for t in terms] + [0.0])
        err = sum(t.quad_error for t in terms)
    else:
        f1, f2 = [t for t in terms if t.side == "lhs"]
        t3 = next(t for t in terms if t.side == "rhs")
        left = f1.value * f2.value
        right = t3.coefficient * t3.integral ** 2
        res = left - right
        scale = max(abs(left), abs(right))
        # t3.quad_error already carries the coefficient; d(c x^2) = 2 c x dx.
        err = (abs(f2.value) * f1.quad_error + abs(f1.value) * f2.quad_error
               + 2.0 * abs(t3.integral) * t3.quad_error)

    return ResidualReport(
        inequality=built.id, model=built.model.name, params=params,
        profile=phi.label, shape=built.shape, terms=terms, residual=res,
        scale=scale, combined_error=err,
        structural_remainder=built.structural_remainder)


def _quotient_parts(built: BuiltInequality, phi: RadialProfile,
                    tol: float) -> tuple[float, float, float]:
    """(numerator, denominator, combined relative error) of the quotient.

    Linear: LHS functional over the main RHS bare integral.  Product:
    T1*T2 over T3^2, all coefficient-free.
    """
    if built.shape == "linear":
        num = err_num = 0.0
        for term in built.lhs_terms:
            q = integrate_term(term, phi, built.params, built.model, tol=tol)
            num += term.coefficient * q.value
            err_num += term.coefficient * q.error_estimate
        qd = integrate_term(built.main_rhs, phi, built.params, built.model, tol=tol)
        den, err_den = qd.value, qd.error_estimate
    else:
        t1, t2 = built.lhs_terms
        q1 = integrate_term(t1, phi, built.params, built.model, tol=tol)
        q2 = integrate_term(t2, phi, built.params, built.model, tol=tol)
        q3 = integrate_term(built.main_rhs, phi, built.params, built.model, tol=tol)
        num = q1.value * q2.value
        err_num = abs(q2.value) * q1.error_estimate + abs(q1.value) * q2.error_estimate
        den = q3.value ** 2
        err_den = 2.0 * abs(q3.value) * q3.error_estimate
    rel = 0.0
    if num != 0.0:
        rel += err_num / abs(num)
    if den != 0.0:
        rel += err_den / abs(den)
    return num, den, rel


def rayleigh_quotient(inequality_id: str, params: Params, phi: RadialProfile,
                      model: SpaceModel | None = None,
                      tol: float = DEFAULT_TOL) -> float:
    """Quotient whose infimum over admissible profiles is the sharp constant.

    Degree-0 homogeneous in the profile.  Raises on a vanishing denominator.
    """
    model = model or hyperbolic(params.n)
    built = catalog.build_terms(inequality_id, params, model)
    num, den, _ = _quotient_parts(built, phi, tol)
    if den == 0.0:
        raise ZeroDivisionError(f"quotient denominator vanished for profile {phi.label!r}")
    return num / den


# -------------------------------------------------------------------- sweeps

@dataclass(frozen=True)
class SweepRow:
    shape: float
    quotient: float
    numerator: float
    denominator: float
    quad_error: float

    def to_dict(self) -> dict:
        return {"shape": self.shape, "quotient": self.quotient,
                "numerator": self.numerator, "denominator": self.denominator,
                "quad_error": self.quad_error}


@dataclass(frozen=True)
class SweepReport:
    inequality: str
    model: str
    params: Params
    family: str
    rows: tuple[SweepRow, ...]
    extrapolated_limit: float | None
    sharp_constant: float | None
    relative_gap: float | None
    min_shape: float | None = None
    min_quotient: float | None = None
    largest_shape_quotient: float | None = None
    refined_shape: float | None = None
    refined_quotient: float | None = None

    def to_dict(self) -> dict:
        out = {
            "inequality": self.inequality, "model": self.model,
            "params": self.params.to_dict(), "family": self.family,
            "rows": [r.to_dict() for r in self.rows],
            "extrapolated_limit": self.extrapolated_limit,
            "sharp_constant": self.sharp_constant,
            "relative_gap": self.relative_gap,
        }
        for key in ("min_shape", "min_quotient", "largest_shape_quotient",
                    "refined_shape", "refined_quotient"):
            value = getattr(self, key)
            if value is not None:
                out[key] = value
        return out


_CONC_KINDS = {"hardy-conc": FamilyKind.HARDY_CONCENTRATION,
               "rellich-conc": FamilyKind.RELLICH_CONCENTRATION}
_PAPER_OF = {"hardy-conc": FamilyKind.HARDY_PAPER,
             "rellich-conc": FamilyKind.RELLICH_PAPER}


def _resolve_family(spec_family: str | None, requested) -> FamilyKind:
    if isinstance(requested, FamilyKind):
        return requested
    name = (requested or "concentration").lower() if isinstance(requested, str) or requested is None else requested
    if name in ("concentration", "conc"):
        if spec_family not in _CONC_KINDS:
            raise AdmissibilityError(
                f"no concentration family is attached to this entry (family={spec_family!r})")
        return _CONC_KINDS[spec_family]
    if name == "paper":
        if spec_family not in _PAPER_OF:
            raise AdmissibilityError(
                f"no two-branch family is attached to this entry (family={spec_family!r})")
        return _PAPER_OF[spec_family]
    for kind in FamilyKind:
        if kind.value == name:
            return kind
    raise AdmissibilityError(f"unknown family {requested!r}")


def extrapolate_linear(shapes, quotients) -> float:
    """Richardson step: least-squares line Q = Q0 + c*eps through the last
    three rows; the intercept Q0 is the extrapolated limit."""
    k = min(3, len(shapes))
    if k == 1:
        return float(quotients[-1])
    coeffs = np.polyfit(np.asarray(shapes[-k:], dtype=float),
                        np.asarray(quotients[-k:], dtype=float), 1)
    return float(coeffs[1])


def sweep(inequality_id: str, params: Params, eps_list, family=None,
          model: SpaceModel | None = None, tol: float = DEFAULT_TOL,
          options: FamilyOptions = FamilyOptions()) -> SweepReport:
    """Quotients along a decreasing family parameter, with the limit
    extrapolated linearly from the last three rows.

    Concentration families take their base exponent from the main
    denominator term by local power counting, so the quotient approaches the
    entry's sharp constant as eps -> 0+.  Two-branch families left
    untruncated (options.cutoff_end=None) diverge against the hyperbolic
    volume; the resulting DivergentTail is propagated, not repaired.
    """
    eps = [float(e) for e in eps_list]
    decreasing = all(eps[i] > eps[i + 1] for i in range(len(eps) - 1))
    if not eps or min(eps) <= 0 or not decreasing:
        raise ValueError(f"eps list must be strictly decreasing and positive, got {eps}")
    model = model or hyperbolic(params.n)
    spec = catalog.get(inequality_id)
    if spec.shape == "product":
        raise AdmissibilityError(
            f"{inequality_id!r} is a product-shape inequality; use hpw_scan for Gaussian scans")
    built = catalog.build_terms(inequality_id, params, model)
    kind = _resolve_family(spec.sharpness_family, family)

    if kind in (FamilyKind.HARDY_CONCENTRATION, FamilyKind.RELLICH_CONCENTRATION) \
            and options.exponent_base is None:
        base = critical_exponent(built.main_rhs, params, model)
        options = FamilyOptions(**{**options.__dict__, "exponent_base": base})

    def row(e: float) -> SweepRow:
        phi = make_family(kind, e, params, options)
        num, den, rel = _quotient_parts(built, phi, tol)
        quotient = num / den
        return SweepRow(e, quotient, num, den, abs(quotient) * rel)

    rows = tuple(_map_ordered(row, eps))
    extrapolated = extrapolate_linear([r.shape for r in rows], [r.quotient for r in rows])
    sharp = built.sharp_constant
    gap = abs(extrapolated - sharp) / abs(sharp) if sharp else None
    return SweepReport(
        inequality=built.id, model=model.name, params=params, family=kind.value,
        rows=rows, extrapolated_limit=extrapolated, sharp_constant=sharp,
        relative_gap=gap)


def _golden_min(fn, lo: float, hi: float, iterations: int = 48) -> tuple[float, float]:
    """Golden-section minimum of fn over [lo, hi] (unimodal assumed)."""
    inv_phi = (math.sqrt(5.0) - 1.0) / 2.0
    x1 = hi - inv_phi * (hi - lo)
    x2 = lo + inv_phi * (hi - lo)
    f1, f2 = fn(x1), fn(x2)
    for _ in range(iterations):
        if f1 <= f2:
            hi, x2, f2 = x2, x1, f1
            x1 = hi - inv_phi * (hi - lo)
            f1 = fn(x1)
        else:
            lo, x1, f1 = x1, x2, f2
            x2 = lo + inv_phi * (hi - lo)
            f2 = fn(x2)
    return (x1, f1) if f1 <= f2 else (x2, f2)


def hpw_scan(params: Params, a_grid, inequality_id: str = "hpw",
             model: SpaceModel | None = None, tol: float = DEFAULT_TOL,
             amplitude: float = 1.0, refine: bool = True) -> SweepReport:
    """Gaussian-width scan of a product-shape (uncertainty) inequality.

    Reports the quotient per width, the grid minimum, the quotient at the
    largest width (whose limit is the flat-space constant), and optionally a
    golden-section refinement of the minimum in log-width.
    """
    widths = [float(a) for a in a_grid]
    if not widths or any(a <= 0 for a in widths):
        raise ValueError(f"width grid must be positive, got {widths}")
    model = model or hyperbolic(params.n)
    spec = catalog.get(inequality_id)
    if spec.shape != "product":
        raise AdmissibilityError(f"{inequality_id!r} is not a product-shape inequality")
    built = catalog.build_terms(inequality_id, params, model)

    def quotient(a: float) -> tuple[float, float]:
        phi = gaussian_profile(a, amplitude=amplitude)
        num, den, rel = _quotient_parts(built, phi, tol)
        return num / den, rel

    def row(a: float) -> SweepRow:
        phi = gaussian_profile(a, amplitude=amplitude)
        num, den, rel = _quotient_parts(built, phi, tol)
        q = num / den
        return SweepRow(a, q, num, den, abs(q) * rel)

    rows = tuple(_map_ordered(row, widths))
    best = min(range(len(rows)), key=lambda i: rows[i].quotient)
    min_shape, min_q = rows[best].shape, rows[best].quotient
    refined_shape = refined_q = None
    if refine and len(rows) >= 2:
        lo = rows[best - 1].shape if best > 0 else min_shape / 4.0
        hi = rows[best + 1].shape if best + 1 < len(rows) else min_shape * 4.0
        t, fq = _golden_min(lambda u: quotient(math.exp(u))[0], math.log(lo), math.log(hi))
        refined_shape, refined_q = math.exp(t), fq

    sharp = built.sharp_constant
    evidence = refined_q if refined_q is not None else min_q
    gap = abs(evidence - sharp) / abs(sharp) if sharp else None
    return SweepReport(
        inequality=built.id, model=model.name, params=params, family="gaussian",
        rows=rows, extrapolated_limit=evidence, sharp_constant=sharp,
        relative_gap=gap, min_shape=min_shape, min_quotient=min_q,
        largest_shape_quotient=rows[-1].quotient if widths == sorted(widths) else None,
        refined_shape=refined_shape, refined_quotient=refined_q)


# ------------------------------------------------------- fixed-point width

@dataclass(frozen=True)
class FixedPointReport:
    n: int
    convention: str
    converged: bool
    iterations: int
    width: float
    quotient: float
    gap: float
    history: tuple[float, ...]

    def to_dict(self) -> dict:
        return {"n": self.n, "convention": self.convention,
                "converged": self.converged, "iterations": self.iterations,
                "width": self.width, "quotient": self.quotient, "gap": self.gap,
                "history": list(self.history)}


def _gaussian_volume_integral(m: int, a: float, tol: float) -> float:
    """I_m(a) = int_0^inf exp(-a d^2) sinh^(m-1)(d) dd (sinh^0 == 1)."""
    if m < 1:
        raise ValueError(f"integral order must be >= 1, got {m}")

    def fn(d: float) -> float:
        e = math.exp(-a * d * d)
        if e == 0.0:
            return 0.0
        return e * math.sinh(d) ** (m - 1)

    result = integrate(Integrand(fn, tail=GaussianDecay(rate=a, growth=float(m))),
                       0.0, math.inf, tol=tol)
    return result.value


def solve_paper_alpha(n: int, convention: str = "radial", a0: float = 1.0,
                      max_iter: int = 200, fixed_tol: float = 1e-10,
                      cap: float = 1e8, tol: float = DEFAULT_TOL) -> FixedPointReport:
    """Fixed-point iteration for the self-consistent Gaussian width

        a = ((n-1)/(n-2)) * (n-1 + 2 pi * C_{n-2}(a)/C_n(a)).

    The constant in dimension n-2 is ambiguous; two documented conventions
    are implemented: 'radial' uses bare radial integrals I_m(a), 'volume'
    multiplies each by the area of its unit sphere.  No ground-truth width
    is asserted: if the iteration leaves [0, cap] or fails to settle within
    max_iter steps, divergence is reported and the quotient/gap are
    evaluated at the last bounded iterate.
    """
    if n <= 2:
        raise AdmissibilityError(f"the fixed-point formula needs n > 2, got {n}")
    if convention not in ("radial", "volume"):
        raise ValueError(f"convention must be 'radial' or 'volume', got {convention!r}")
    from .geometry import sphere_area

    def step(a: float) -> float:
        upper = _gaussian_volume_integral(n - 2, a, tol)
        lower = _gaussian_volume_integral(n, a, tol)
        ratio = upper / lower
        if convention == "volume":
            ratio *= sphere_area(n - 3) / sphere_area(n - 1)
        return ((n - 1) / (n - 2)) * ((n - 1) + 2.0 * math.pi * ratio)

    history = [float(a0)]
    a = float(a0)
    converged = False
    iterations = 0
    for iterations in range(1, max_iter + 1):
        nxt = step(a)
        history.append(nxt)
        if not math.isfinite(nxt) or nxt > cap or nxt <= 0:
            a = min(a, cap)
            break
        if abs(nxt - a) <= fixed_tol * max(1.0, abs(a)):
            a = nxt
            converged = True
            break
        a = nxt

    width = min(a, cap)
    params = Params(n=n)
    built = catalog.build_terms("hpw", params, hyperbolic(n))
    num, den, _ = _quotient_parts(built, gaussian_profile(width), tol)
    quotient = num / den
    gap = quotient - n * n / 4.0
    trail = tuple(history[:4] + history[-4:]) if len(history) > 8 else tuple(history)
    return FixedPointReport(n=n, convention=convention, converged=converged,
                            iterations=iterations, width=width,
                            quotient=quotient, gap=gap, history=trail)


# --------------------------------------------- discrete quotient minimization

@dataclass(frozen=True)
class MinimizeReport:
    inequality: str
    model: str
    params: Params
    delta: float
    d_max: float
    points: int
    lambda_min: float
    sharp_constant: float | None
    sensitivity_delta: float | None
    sensitivity_lambda: float | None
    nodes: tuple[float, ...] = field(repr=False, default=())
    eigenvector: tuple[float, ...] = field(repr=False, default=())

    def to_dict(self, include_eigenvector: bool = True) -> dict:
        out = {"inequality": self.inequality, "model": self.model,
               "params": self.params.to_dict(), "delta": self.delta,
               "d_max": self.d_max, "points": self.points,
               "lambda_min": self.lambda_min,
               "sharp_constant": self.sharp_constant,
               "sensitivity_delta": self.sensitivity_delta,
               "sensitivity_lambda": self.sensitivity_lambda}
        if include_eigenvector:
            out["nodes"] = list(self.nodes)
            out["eigenvector"] = list(self.eigenvector)
        return out


_GAUSS_T, _GAUSS_W = np.polynomial.legendre.leggauss(5)

_MASS_KIND_SHIFT = {"abs_phi_p": 0.0, "abs_phi_q": 0.0, "phi_sq": 0.0,
                    "d2_phi_sq": 2.0, "d4_phi_sq": 4.0}


def _radial_weight_array(d: np.ndarray, power: float, model: SpaceModel) -> np.ndarray:
    if model.kind is ModelKind.HYPERBOLIC:
        j = np.sinh(d) ** (model.n - 1)
    else:
        j = d ** (model.n - 1)
    return d ** power * j


def _form_weight_power(term: BuiltTerm) -> float:
    """Exponent of d in the quadratic form's scalar weight."""
    if term.exponent != 2.0:
        raise AdmissibilityError(
            f"the eigensolver needs quadratic forms (exponent 2), "
            f"got {term.integrand} with exponent {term.exponent:g}")
    if term.extra_weight != "none":
        raise AdmissibilityError("boundary-singular remainder terms have no eigensolver form")
    shift = _MASS_KIND_SHIFT.get(term.integrand, 0.0)
    return term.weight_power + shift


def assemble_first_order_form(nodes: np.ndarray, weight_power: float,
                              model: SpaceModel, gradient: bool):
    """P1 finite-element matrix of int w(d) u' v' dd (gradient=True) or
    int w(d) u v dd over hat functions on the node grid, Dirichlet ends.

    Returns a scipy CSR matrix over the interior nodes.
    """
    import scipy.sparse as sp

    x = np.asarray(nodes, dtype=float)
    h = np.diff(x)
    if np.any(h <= 0):
        raise AssemblyError("grid nodes must be strictly increasing")
    mid = x[:-1, None] + h[:, None] * (_GAUSS_T[None, :] + 1.0) / 2.0
    wq = _radial_weight_array(mid, weight_power, model) * _GAUSS_W[None, :] * h[:, None] / 2.0
    if not np.all(np.isfinite(wq)):
        raise AssemblyError("quadratic-form weight is not finite on the grid")

    m = len(x)
    diag = np.zeros(m)
    off = np.zeros(m - 1)
    if gradient:
        stiff = wq.sum(axis=1) / h ** 2  # element integral of w / h^2
        diag[:-1] += stiff
        diag[1:] += stiff
        off -= stiff
    else:
        t = (_GAUSS_T + 1.0) / 2.0
        phi0 = 1.0 - t
        phi1 = t
        m00 = (wq * phi0 * phi0).sum(axis=1)
        m01 = (wq * phi0 * phi1).sum(axis=1)
        m11 = (wq * phi1 * phi1).sum(axis=1)
        diag[:-1] += m00
        diag[1:] += m11
        off += m01
    full = sp.diags([off, diag, off], offsets=(-1, 0, 1), format="csr")
    return full[1:-1, 1:-1].tocsr()


def assemble_laplacian_form(nodes: np.ndarray, weight_power: float,
                            model: SpaceModel):
    """A = L^T W L for the form int w(d) (Lu)^2 dd, with L the second-order
    nonuniform central-difference radial Laplacian at the interior nodes and
    W the trapezoidal weight-measure diagonal."""
    import scipy.sparse as sp

    x = np.asarray(nodes, dtype=float)
    m = len(x)
    interior = np.arange(1, m - 1)
    hm = x[interior] - x[interior - 1]
    hp = x[interior + 1] - x[interior]
    c_m = 2.0 / (hm * (hm + hp))
    c_0 = -2.0 / (hm * hp)
    c_p = 2.0 / (hp * (hm + hp))
    g_m = -hp / (hm * (hm + hp))
    g_0 = (hp - hm) / (hm * hp)
    g_p = hm / (hp * (hm + hp))
    if model.kind is ModelKind.HYPERBOLIC:
        k = 1.0 / np.tanh(x[interior])
    else:
        k = 1.0 / x[interior]
    n1 = model.n - 1
    row_m = c_m + n1 * k * g_m
    row_0 = c_0 + n1 * k * g_0
    row_p = c_p + n1 * k * g_p

    ni = m - 2
    rows, cols, vals = [], [], []
    for idx in range(ni):
        rows.append(idx); cols.append(idx); vals.append(row_0[idx])
        if idx > 0:
            rows.append(idx); cols.append(idx - 1); vals.append(row_m[idx])
        if idx < ni - 1:
            rows.append(idx); cols.append(idx + 1); vals.append(row_p[idx])
    L = sp.csr_matrix((vals, (rows, cols)), shape=(ni, ni))
    omega = (x[interior + 1] - x[interior - 1]) / 2.0
    w = _radial_weight_array(x[interior], weight_power, model) * omega
    if not np.all(np.isfinite(w)) or np.any(w < 0):
        raise AssemblyError("Laplacian form weight is not finite nonnegative on the grid")
    W = sp.diags(w)
    return (L.T @ W @ L).tocsr()


def _assemble_form(term: BuiltTerm, nodes: np.ndarray, model: SpaceModel):
    power = _form_weight_power(term)
    if term.integrand in ("grad_p", "grad_sq"):
        return assemble_first_order_form(nodes, power, model, gradient=True)
    if term.integrand in _MASS_KIND_SHIFT:
        return assemble_first_order_form(nodes, power, model, gradient=False)
    if term.integrand == "laplacian_sq":
        return assemble_laplacian_form(nodes, power, model)
    raise AdmissibilityError(f"no discrete form for integrand {term.integrand!r}")


def _smallest_eigenpair(A, B):
    import scipy.linalg
    import scipy.sparse.linalg as spla

    ni = A.shape[0]
    if ni <= 64:
        values, vectors = scipy.linalg.eigh(A.toarray(), B.toarray())
        return float(values[0]), vectors[:, 0]
    try:
        values, vectors = spla.eigsh(A, k=1, M=B, sigma=0.0, which="LM")
    except spla.ArpackNoConvergence as exc:
        if len(exc.eigenvalues):
            raise EigenSolveError("shift-invert iteration stagnated",
                                  best=float(exc.eigenvalues[0])) from exc
        raise EigenSolveError("shift-invert iteration stagnated with no estimate") from exc
    return float(values[0]), vectors[:, 0]


def minimize_discrete(inequality_id: str, params: Params,
                      grid: tuple[float, float, int] = (1e-3, 10.0, 2000),
                      model: SpaceModel | None = None,
                      sensitivity: bool = True) -> MinimizeReport:
    """Smallest generalized eigenvalue of the quotient's discrete forms.

    The grid is log-spaced on [delta, d_max] with Dirichlet ends; first-order
    forms use piecewise-linear elements, the second-order left side uses
    central differences for L = d^2/dd^2 + (n-1) k(d) d/dd composed with the
    weight-measure diagonal.  The discrete minimum bounds the continuum
    infimum on [delta, d_max] from above and is nonincreasing under
    refinement; a rerun at delta/10 reports the inner cutoff's influence.
    """
    delta, d_max, points = float(grid[0]), float(grid[1]), int(grid[2])
    if delta <= 0 or d_max <= delta:
        raise ValueError(f"need 0 < delta < d_max, got ({delta}, {d_max})")
    if points < 3:
        raise ValueError(f"need at least 3 grid points, got {points}")
    model = model or hyperbolic(params.n)
    spec = catalog.get(inequality_id)
    if spec.shape != "linear":
        raise AdmissibilityError(
            f"{inequality_id!r} is a product-shape inequality, not a generalized "
            f"eigenproblem; use hpw_scan with golden-section refinement instead")
    built = catalog.build_terms(inequality_id, params, model)

    def solve(inner: float):
        nodes = np.geomspace(inner, d_max, points)
        A = _assemble_form(built.lhs_terms[0], nodes, model)
        B = _assemble_form(built.main_rhs, nodes, model)
        d = B.diagonal()
        if np.any(d <= 0) or abs(B - B.T).max() > 1e-12 * abs(B).max():
            raise AssemblyError("denominator form is not symmetric positive")
        lam, vec = _smallest_eigenpair(A, B)
        return nodes, lam, vec

    nodes, lam, vec = solve(delta)
    sens_delta = sens_lambda = None
    if sensitivity:
        sens_delta = delta / 10.0
        _, sens_lambda, _ = solve(sens_delta)

    full = np.zeros(len(nodes))
    full[1:-1] = vec
    peak = np.max(np.abs(full))
    if peak > 0:
        full = full / peak
    return MinimizeReport(
        inequality=built.id, model=model.name, params=params, delta=delta,
        d_max=d_max, points=points, lambda_min=lam,
        sharp_constant=built.sharp_constant,
        sensitivity_delta=sens_delta, sensitivity_lambda=sens_lambda,
        nodes=tuple(float(v) for v in nodes),
        eigenvector=tuple(float(v) for v in full))


# ------------------------------------------------------------ test batteries

def battery_window(spec, params: Params) -> tuple[float, float]:
    """Bump placement window keeping seeded profiles admissible for an entry:
    inside the domain radius when there is one, away from the origin always."""
    if spec.needs_domain_radius and params.R is not None:
        return (min(0.1, params.R / 10.0), float(params.R))
    return (0.25, 4.0)


def residual_battery(inequality_id: str, params: Params | None = None,
                     model: SpaceModel | None = None, seeds=range(20),
                     tol: float = DEFAULT_TOL) -> list[ResidualReport]:
    """Residual reports for a battery of seeded admissible bump profiles."""
    spec = catalog.get(inequality_id)
    if params is None:
        params = catalog.params_from_dict(spec.witness)
    model = model or hyperbolic(params.n)
    window = battery_window(spec, params)
    reports = []
    for seed in seeds:
        phi = seeded_bump(seed, window=window)
        reports.append(residual(inequality_id, params, phi, model=model, tol=tol))
    return reports
