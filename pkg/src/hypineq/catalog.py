"""Registry of the weighted inequalities as structured data.

Each entry describes one inequality: its functional terms (weighted radial
integrals), coefficient formulas, admissibility constraints, sharp constant
and the extremal family that attains it.  Formulas are stored as strings in
the grammar of :mod:`hypineq.expressions`, in terms of the parameter fields
``n, alpha, p, C, q, s, R, c`` plus the derived constant ``Sn`` (area of
the unit n-sphere in R^(n+1)).

Entries with a geometric-constant form use ``C`` (default n - 1), so the
same formula serves the hyperbolic model and the Euclidean oracle.  Entries
that only hold on the ball model are marked ``model='hyperbolic'``.

Linear entries read LHS >= sum of RHS terms; product entries read
T1 * T2 >= const * T3^2 with the two LHS terms as factors.  The first RHS
term of every entry is its *main* term, the one whose coefficient is the
(sharp) constant under study.

Radial normalization: term coefficients evaluated by :func:`build_terms`
include a factor |S^(n-1)|^(outer_power - 1).  Radial integrals omit the
sphere area (see :mod:`hypineq.geometry`); multiplying an outer-power-tau
term by that factor makes the assembled inequality exactly the true
n-dimensional one divided by the common factor |S^(n-1)|, so residual signs
and quotients are faithful even when outer powers or Lebesgue-measure terms
are mixed in.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from typing import Iterable

from . import expressions as ex
from .errors import AdmissibilityError, ExpressionError, SpecDocumentError
from .geometry import ModelKind, SpaceModel, sphere_area

PARAM_NAMES = ("n", "alpha", "p", "C", "q", "s", "R", "c")
ALLOWED_SYMBOLS = set(PARAM_NAMES) | {"Sn"}

INTEGRAND_NAMES = (
    "abs_phi_p",      # |phi|^p
    "abs_phi_q",      # |phi|^q (exponent may be any expression)
    "grad_p",         # |phi'|^p
    "grad_sq",        # |phi'|^2
    "laplacian_sq",   # |phi'' + (n-1) k(d) phi'|^2
    "phi_sq",         # phi^2
    "d2_phi_sq",      # d^2 phi^2
    "d4_phi_sq",      # d^4 phi^2
)
_DEFAULT_EXPONENT = {"abs_phi_p": "p", "grad_p": "p", "abs_phi_q": "q",
                     "grad_sq": "2", "phi_sq": "2", "laplacian_sq": "2",
                     "d2_phi_sq": "2", "d4_phi_sq": "2"}

EXTRA_WEIGHTS = ("none", "inv_log_sq", "inv_dist_to_R_sq")
MEASURES = ("riemannian", "lebesgue")


@dataclass(frozen=True)
class Params:
    """Parameter tuple governing an inequality instance.

    Only the fields referenced by the selected inequality are required;
    ``q, s, R, c`` default to unset.  ``C`` defaults to the model constant
    n - 1.
    """

    n: int
    alpha: float = 0.0
    p: float = 2.0
    C: float | None = None
    q: float | None = None
    s: float | None = None
    R: float | None = None
    c: float | None = None

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 2:
            raise ValueError(f"n must be an integer >= 2, got {self.n!r}")

    @property
    def C_value(self) -> float:
        return float(self.n - 1) if self.C is None else float(self.C)

    def env(self) -> dict[str, float]:
        out = {"n": float(self.n), "alpha": float(self.alpha), "p": float(self.p),
               "C": self.C_value, "Sn": sphere_area(int(self.n))}
        for name in ("q", "s", "R", "c"):
            value = getattr(self, name)
            if value is not None:
                out[name] = float(value)
        return out

    def to_dict(self) -> dict:
        out: dict = {"n": int(self.n), "alpha": self.alpha, "p": self.p}
        out["C"] = self.C_value
        for name in ("q", "s", "R", "c"):
            value = getattr(self, name)
            if value is not None:
                out[name] = value
        return out


@dataclass(frozen=True)
class IntegrandKind:
    name: str
    exponent: str | None = None  # expression; None means the kind's default

    def __post_init__(self):
        if self.name not in INTEGRAND_NAMES:
            raise SpecDocumentError(f"unknown integrand kind {self.name!r}")

    @property
    def exponent_expr(self) -> str:
        return self.exponent if self.exponent is not None else _DEFAULT_EXPONENT[self.name]

    def encode(self) -> str:
        if self.exponent is None:
            return self.name
        return f"{self.name}({self.exponent})"

    @classmethod
    def decode(cls, text: str) -> "IntegrandKind":
        text = text.strip()
        if "(" in text:
            name, _, rest = text.partition("(")
            if not rest.endswith(")"):
                raise SpecDocumentError(f"malformed integrand {text!r}")
            return cls(name.strip(), rest[:-1])
        return cls(text)


@dataclass(frozen=True)
class FunctionalTerm:
    """One weighted integral term: coefficient * (int d^a * extra * kind dmu)^outer."""

    side: str                     # 'lhs' | 'rhs'
    coefficient: str              # expression in the parameters
    weight_power: str             # power of d, expression
    integrand: IntegrandKind
    extra_weight: str = "none"    # 'none' | 'inv_log_sq' | 'inv_dist_to_R_sq'
    measure: str = "riemannian"
    outer_power: str = "1"

    def __post_init__(self):
        if self.side not in ("lhs", "rhs"):
            raise SpecDocumentError(f"term side must be 'lhs' or 'rhs', got {self.side!r}")
        if self.extra_weight not in EXTRA_WEIGHTS:
            raise SpecDocumentError(f"unknown extra weight {self.extra_weight!r}")
        if self.measure not in MEASURES:
            raise SpecDocumentError(f"unknown measure {self.measure!r}")


@dataclass(frozen=True)
class InequalitySpec:
    id: str
    tag: str                      # catalog label, e.g. "(2.4)"
    shape: str                    # 'linear' | 'product'
    model: str                    # 'hyperbolic' | 'any'
    terms: tuple[FunctionalTerm, ...]
    constraints: tuple[str, ...]
    sharp_constant: str | None
    sharpness_family: str | None  # 'hardy-conc' | 'rellich-conc' | 'gaussian' | None
    witness: dict = field(default_factory=dict)
    required: tuple[str, ...] = ()
    structural_remainder: bool = False
    note: str = ""

    def __post_init__(self):
        if self.shape not in ("linear", "product"):
            raise SpecDocumentError(f"shape must be 'linear' or 'product', got {self.shape!r}")
        if self.model not in ("hyperbolic", "any"):
            raise SpecDocumentError(f"model must be 'hyperbolic' or 'any', got {self.model!r}")
        lhs = [t for t in self.terms if t.side == "lhs"]
        rhs = [t for t in self.terms if t.side == "rhs"]
        if self.shape == "product" and (len(lhs) != 2 or len(rhs) != 1):
            raise SpecDocumentError("product shape needs exactly two LHS factors and one RHS term")
        if self.shape == "linear" and (len(lhs) != 1 or not rhs):
            raise SpecDocumentError("linear shape needs one LHS term and at least one RHS term")

    @property
    def lhs_terms(self) -> tuple[FunctionalTerm, ...]:
        return tuple(t for t in self.terms if t.side == "lhs")

    @property
    def rhs_terms(self) -> tuple[FunctionalTerm, ...]:
        return tuple(t for t in self.terms if t.side == "rhs")

    @property
    def main_rhs(self) -> FunctionalTerm:
        return self.rhs_terms[0]

    @property
    def needs_domain_radius(self) -> bool:
        return any(t.extra_weight != "none" for t in self.terms)


@dataclass(frozen=True)
class BuiltTerm:
    """A term with every formula evaluated for a concrete parameter set."""

    side: str
    is_main: bool
    coefficient: float            # includes the |S^(n-1)|^(outer-1) radial normalization
    weight_power: float
    integrand: str
    exponent: float
    extra_weight: str
    extra_radius: float | None
    measure: str
    outer_power: float


@dataclass(frozen=True)
class BuiltInequality:
    id: str
    tag: str
    shape: str
    params: Params
    model: SpaceModel
    terms: tuple[BuiltTerm, ...]
    sharp_constant: float | None
    structural_remainder: bool

    @property
    def lhs_terms(self):
        return tuple(t for t in self.terms if t.side == "lhs")

    @property
    def rhs_terms(self):
        return tuple(t for t in self.terms if t.side == "rhs")

    @property
    def main_rhs(self):
        return next(t for t in self.terms if t.is_main)


# --------------------------------------------------------------- the registry

def _hardy_lp() -> InequalitySpec:
    return InequalitySpec(
        id="hardy-lp", tag="(1.6)", shape="linear", model="any",
        terms=(
            FunctionalTerm("lhs", "1", "alpha", IntegrandKind("grad_p")),
            FunctionalTerm("rhs", "((C + 1 + alpha - p)/p)^p", "alpha - p", IntegrandKind("abs_phi_p")),
        ),
        constraints=("1 < p", "0 < C + 1 + alpha - p"),
        sharp_constant="((C + 1 + alpha - p)/p)^p",
        sharpness_family="hardy-conc",
        witness={"n": 3, "p": 2.0, "alpha": 0.0},
        note="weighted Lp Hardy inequality; flat n=3, p=2, alpha=0 is the classical constant 1/4",
    )


def _rellich_phi() -> InequalitySpec:
    return InequalitySpec(
        id="rellich-phi", tag="(1.7)", shape="linear", model="any",
        terms=(
            FunctionalTerm("lhs", "1", "alpha", IntegrandKind("laplacian_sq")),
            FunctionalTerm("rhs", "(C + alpha - 3)^2*(C - alpha + 1)^2/16", "alpha - 4", IntegrandKind("phi_sq")),
        ),
        constraints=("alpha < 2", "3 < C + alpha"),
        sharp_constant="(C + alpha - 3)^2*(C - alpha + 1)^2/16",
        sharpness_family=None,
        witness={"n": 5, "alpha": 0.0},
        note="second-order Rellich inequality against the mass term",
    )


def _hardy_poincare() -> InequalitySpec:
    return InequalitySpec(
        id="hardy-poincare", tag="(2.4)", shape="linear", model="any",
        terms=(
            FunctionalTerm("lhs", "1", "alpha + p", IntegrandKind("grad_p")),
            FunctionalTerm("rhs", "((C + alpha + 1)/p)^p", "alpha", IntegrandKind("abs_phi_p")),
        ),
        constraints=("1 < p", "-1 < C + alpha"),
        sharp_constant="((C + alpha + 1)/p)^p",
        sharpness_family="hardy-conc",
        witness={"n": 3, "p": 2.0, "alpha": 0.0},
        note="Hardy-Poincare form with the gradient weighted by d^(alpha+p); sharp on the ball model",
    )


def _hardy_improved_log() -> InequalitySpec:
    return InequalitySpec(
        id="hardy-improved-log", tag="(2.12)", shape="linear", model="any",
        terms=(
            FunctionalTerm("lhs", "1", "alpha", IntegrandKind("grad_sq")),
            FunctionalTerm("rhs", "((C + alpha - 1)/2)^2", "alpha - 2", IntegrandKind("phi_sq")),
            FunctionalTerm("rhs", "1/4", "alpha - 2", IntegrandKind("phi_sq"), extra_weight="inv_log_sq"),
        ),
        constraints=("0 < C + alpha - 1", "0 < R"),
        sharp_constant="((C + alpha - 1)/2)^2",
        sharpness_family="hardy-conc",
        witness={"n": 3, "alpha": 0.0, "R": 2.0},
        required=("R",),
        note="improved Hardy with the logarithmic remainder phi^2 / (d log(R/d))^2; support must stay inside d < R",
    )


def _hardy_improved_ball() -> InequalitySpec:
    return InequalitySpec(
        id="hardy-improved-ball", tag="(2.13)", shape="linear", model="any",
        terms=(
            FunctionalTerm("lhs", "1", "alpha", IntegrandKind("grad_sq")),
            FunctionalTerm("rhs", "((C + alpha - 1)/2)^2", "alpha - 2", IntegrandKind("phi_sq")),
            FunctionalTerm("rhs", "1/4", "alpha", IntegrandKind("phi_sq"), extra_weight="inv_dist_to_R_sq"),
        ),
        constraints=("0 < C + alpha - 1", "0 < R"),
        sharp_constant="((C + alpha - 1)/2)^2",
        sharpness_family="hardy-conc",
        witness={"n": 3, "alpha": 0.0, "R": 2.0},
        required=("R",),
        note="improved Hardy on the ball of radius R with the boundary remainder phi^2/(R-d)^2",
    )


def _hardy_sobolev() -> InequalitySpec:
    coeff = ("((n - 2)/2)^(s*(n - 2)/(n - s))"
             " * (n*(n - 2)/4*Sn^(2/n))^(n*(2 - s)/(2*(n - s)))")
    return InequalitySpec(
        id="hardy-sobolev", tag="(Cor 2.3)", shape="linear", model="hyperbolic",
        terms=(
            FunctionalTerm("lhs", "1", "0", IntegrandKind("grad_sq")),
            FunctionalTerm("rhs", coeff, "0 - s", IntegrandKind("abs_phi_q", "2*(n - s)/(n - 2)"),
                           outer_power="(n - 2)/(n - s)"),
        ),
        constraints=("3 <= n", "0 <= s <= 2"),
        sharp_constant=coeff,
        sharpness_family=None,
        witness={"n": 3, "s": 1.0},
        required=("s",),
        note="Hardy-Sobolev interpolation; s=0 is the Sobolev endpoint, s=2 the Hardy endpoint",
    )


def _hardy_sobolev_improved() -> InequalitySpec:
    return InequalitySpec(
        id="hardy-sobolev-improved", tag="(2.16)", shape="linear", model="hyperbolic",
        terms=(
            FunctionalTerm("lhs", "1", "alpha", IntegrandKind("grad_sq")),
            FunctionalTerm("rhs", "((n + alpha - 2)/2)^2", "alpha - 2", IntegrandKind("phi_sq")),
            FunctionalTerm("rhs", "2^(n - 2)/c^2*(Sn/2)^((q - 2)/q)",
                           "((2 - n)*(2 - q) + alpha*q)/2", IntegrandKind("abs_phi_q"),
                           measure="lebesgue", outer_power="2/q"),
        ),
        constraints=("2 < n", "0 < n + alpha - 2", "2 <= q", "0 < c"),
        sharp_constant="((n + alpha - 2)/2)^2",
        sharpness_family="hardy-conc",
        witness={"n": 3, "alpha": 0.0, "q": 2.5, "c": 1.0},
        required=("q", "c"),
        structural_remainder=True,
        note=("Hardy improved by a Lebesgue-measure Sobolev remainder; the additive constant "
              "depends on the unquantified weighted-Sobolev constant c, so only the main "
              "sub-inequality and remainder nonnegativity are verifiable"),
    )


def _rellich_grad() -> InequalitySpec:
    return InequalitySpec(
        id="rellich-grad", tag="(3.1)/(3.9)", shape="linear", model="any",
        terms=(
            FunctionalTerm("lhs", "1", "alpha", IntegrandKind("laplacian_sq")),
            FunctionalTerm("rhs", "(C + 1 - alpha)^2/4", "alpha - 2", IntegrandKind("grad_sq")),
        ),
        constraints=("(7 - C)/3 < alpha < 2",),
        sharp_constant="(C + 1 - alpha)^2/4",
        sharpness_family="rellich-conc",
        witness={"n": 5, "alpha": 1.5},
        note="Rellich-type bound of the weighted gradient by the Laplacian; sharp on the ball model",
    )


def _rellich_grad_improved_log() -> InequalitySpec:
    return InequalitySpec(
        id="rellich-grad-improved-log", tag="(3.11)", shape="linear", model="any",
        terms=(
            FunctionalTerm("lhs", "1", "alpha", IntegrandKind("laplacian_sq")),
            FunctionalTerm("rhs", "(C + 1 - alpha)^2/4", "alpha - 2", IntegrandKind("grad_sq")),
            FunctionalTerm("rhs", "(C + 1 - alpha)*(C + 3*alpha - 7)/16", "alpha - 4",
                           IntegrandKind("phi_sq"), extra_weight="inv_log_sq"),
        ),
        constraints=("(7 - C)/3 < alpha < 2", "0 < R"),
        sharp_constant="(C + 1 - alpha)^2/4",
        sharpness_family="rellich-conc",
        witness={"n": 5, "alpha": 1.5, "R": 2.0},
        required=("R",),
        note="improved Rellich with the logarithmic remainder",
    )


def _rellich_grad_improved_ball() -> InequalitySpec:
    return InequalitySpec(
        id="rellich-grad-improved-ball", tag="(3.12)", shape="linear", model="any",
        terms=(
            FunctionalTerm("lhs", "1", "alpha", IntegrandKind("laplacian_sq")),
            FunctionalTerm("rhs", "(C + 1 - alpha)^2/4", "alpha - 2", IntegrandKind("grad_sq")),
            FunctionalTerm("rhs", "(C + 1 - alpha)*(C + 3*alpha - 7)/16", "alpha - 2",
                           IntegrandKind("phi_sq"), extra_weight="inv_dist_to_R_sq"),
        ),
        constraints=("(7 - C)/3 < alpha < 2", "0 < R"),
        sharp_constant="(C + 1 - alpha)^2/4",
        sharpness_family="rellich-conc",
        witness={"n": 5, "alpha": 1.5, "R": 2.0},
        required=("R",),
        note="improved Rellich on the ball of radius R",
    )


def _rellich_sobolev() -> InequalitySpec:
    return InequalitySpec(
        id="rellich-sobolev", tag="(3.13)", shape="linear", model="hyperbolic",
        terms=(
            FunctionalTerm("lhs", "1", "alpha", IntegrandKind("laplacian_sq")),
            FunctionalTerm("rhs", "(n - alpha)^2/4", "alpha - 2", IntegrandKind("grad_sq")),
            FunctionalTerm("rhs", "(n - alpha)*(n + 3*alpha - 8)*2^(n - 2)/(4*c^2)*(Sn/2)^((q - 2)/q)",
                           "((n - 2)*(q - 2) + (alpha - 2)*q)/2", IntegrandKind("abs_phi_q"),
                           measure="lebesgue", outer_power="2/q"),
        ),
        constraints=("(8 - n)/3 < alpha < 2", "2 <= q", "0 < c"),
        sharp_constant="(n - alpha)^2/4",
        sharpness_family="rellich-conc",
        witness={"n": 5, "alpha": 1.5, "q": 2.5, "c": 1.0},
        required=("q", "c"),
        structural_remainder=True,
        note="Rellich improved by a Lebesgue-measure Sobolev remainder; same caveat as (2.16)",
    )


def _hpw() -> InequalitySpec:
    return InequalitySpec(
        id="hpw", tag="(4.1)/(4.3)", shape="product", model="any",
        terms=(
            FunctionalTerm("lhs", "1", "0", IntegrandKind("d2_phi_sq")),
            FunctionalTerm("lhs", "1", "0", IntegrandKind("grad_sq")),
            FunctionalTerm("rhs", "(C + 1)^2/4", "0", IntegrandKind("phi_sq")),
        ),
        constraints=("0 < C",),
        sharp_constant="(C + 1)^2/4",
        sharpness_family="gaussian",
        witness={"n": 3},
        note="uncertainty principle: position-weighted mass times gradient energy bounds the squared mass",
    )


def _hpw_second_order() -> InequalitySpec:
    return InequalitySpec(
        id="hpw-second-order", tag="(4.4)/(4.5)", shape="product", model="any",
        terms=(
            FunctionalTerm("lhs", "1", "0", IntegrandKind("d4_phi_sq")),
            FunctionalTerm("lhs", "1", "0", IntegrandKind("laplacian_sq")),
            FunctionalTerm("rhs", "(C + 1)^4/16", "0", IntegrandKind("phi_sq")),
        ),
        constraints=("1 < C", "(7 - C)/3 < alpha < 2"),
        sharp_constant="(C + 1)^4/16",
        sharpness_family="gaussian",
        witness={"n": 9, "alpha": 0.0},
        note="second-order uncertainty principle via the Rellich-type bound; alpha gates admissibility only",
    )


_BUILDERS = (
    _hardy_lp, _rellich_phi, _hardy_poincare, _hardy_improved_log,
    _hardy_improved_ball, _hardy_sobolev, _hardy_sobolev_improved,
    _rellich_grad, _rellich_grad_improved_log, _rellich_grad_improved_ball,
    _rellich_sobolev, _hpw, _hpw_second_order,
)

_REGISTRY: dict[str, InequalitySpec] = {}


def ids() -> tuple[str, ...]:
    return tuple(_REGISTRY)


def entries() -> tuple[InequalitySpec, ...]:
    return tuple(_REGISTRY.values())


def get(inequality_id: str) -> InequalitySpec:
    try:
        return _REGISTRY[inequality_id]
    except KeyError:
        known = ", ".join(_REGISTRY)
        raise AdmissibilityError(f"unknown inequality {inequality_id!r}; known: {known}") from None


def register(spec: InequalitySpec, overwrite: bool = False) -> InequalitySpec:
    """Add a spec to the registry.

    Loads must finish before concurrent query phases begin (single writer,
    then many readers).
    """
    _validate_spec(spec)
    if spec.id in _REGISTRY and not overwrite:
        raise SpecDocumentError(f"inequality id {spec.id!r} already registered")
    _REGISTRY[spec.id] = spec
    return spec


def _validate_spec(spec: InequalitySpec) -> None:
    for expr in [t.coefficient for t in spec.terms] + [t.weight_power for t in spec.terms] \
            + [t.outer_power for t in spec.terms] + [t.integrand.exponent_expr for t in spec.terms] \
            + list(spec.constraints) + ([spec.sharp_constant] if spec.sharp_constant else []):
        unknown = ex.symbols(expr) - ALLOWED_SYMBOLS
        if unknown:
            raise SpecDocumentError(f"unknown symbol(s) {sorted(unknown)} in {expr!r} of {spec.id!r}")
        # constraints must parse as comparisons, everything else as arithmetic
    for constraint in spec.constraints:
        if not isinstance(ex.parse(constraint), ex.Chain):
            raise SpecDocumentError(f"constraint {constraint!r} of {spec.id!r} is not a comparison")


# --------------------------------------------------------------- operations

def params_from_dict(values: dict) -> Params:
    known = {k: v for k, v in values.items() if k in PARAM_NAMES}
    if "n" not in known:
        raise AdmissibilityError("parameter 'n' is required")
    return Params(**known)


def admissible(inequality_id: str, params: Params) -> tuple[bool, list[str]]:
    """Evaluate every constraint; returns (ok, list of violated constraints)."""
    spec = get(inequality_id)
    env = params.env()
    violations: list[str] = []
    for name in spec.required:
        if name not in env:
            violations.append(f"parameter '{name}' must be set")
    for constraint in spec.constraints:
        try:
            ok = ex.evaluate_predicate(constraint, env)
        except ExpressionError as exc:
            violations.append(f"{constraint}  [{exc}]")
            continue
        if not ok:
            violations.append(constraint)
    return (not violations, violations)


def require_admissible(inequality_id: str, params: Params) -> None:
    ok, violations = admissible(inequality_id, params)
    if not ok:
        raise AdmissibilityError(
            f"parameters inadmissible for {inequality_id!r}: " + "; ".join(violations),
            violations=tuple(violations))


def sharp_constant(inequality_id: str, params: Params) -> float:
    """Evaluate the entry's sharp-constant formula.

    This is pure formula evaluation; admissibility is the caller's business
    (use :func:`admissible`).  Raises if the entry has no sharp constant or
    a referenced parameter is unset.
    """
    spec = get(inequality_id)
    if spec.sharp_constant is None:
        raise AdmissibilityError(f"{inequality_id!r} has no sharp-constant formula")
    return ex.evaluate(spec.sharp_constant, params.env())


def check_model(spec: InequalitySpec, model: SpaceModel) -> None:
    if spec.model == "hyperbolic" and model.kind is not ModelKind.HYPERBOLIC:
        raise AdmissibilityError(f"{spec.id!r} is only stated on the hyperbolic model")


def build_terms(inequality_id: str, params: Params, model: SpaceModel) -> BuiltInequality:
    """Evaluate every formula of an entry for concrete parameters.

    Coefficients pick up the radial normalization |S^(n-1)|^(outer-1); see
    the module docstring.
    """
    spec = get(inequality_id)
    if model.n != params.n:
        raise AdmissibilityError(f"model dimension {model.n} != parameter n = {params.n}")
    check_model(spec, model)
    require_admissible(inequality_id, params)
    env = params.env()
    area = sphere_area(params.n - 1)

    built: list[BuiltTerm] = []
    main_seen = False
    for term in spec.terms:
        outer = ex.evaluate(term.outer_power, env)
        coeff = ex.evaluate(term.coefficient, env) * area ** (outer - 1.0)
        if not math.isfinite(coeff) or coeff < 0:
            raise AdmissibilityError(
                f"coefficient {term.coefficient!r} of {inequality_id!r} is not finite nonnegative "
                f"at {params.to_dict()}")
        exponent = ex.evaluate(term.integrand.exponent_expr, env)
        is_main = term.side == "rhs" and not main_seen
        main_seen = main_seen or is_main
        built.append(BuiltTerm(
            side=term.side,
            is_main=is_main,
            coefficient=coeff,
            weight_power=ex.evaluate(term.weight_power, env),
            integrand=term.integrand.name,
            exponent=exponent,
            extra_weight=term.extra_weight,
            extra_radius=env.get("R") if term.extra_weight != "none" else None,
            measure=term.measure,
            outer_power=outer,
        ))
    sharp = ex.evaluate(spec.sharp_constant, env) if spec.sharp_constant else None
    return BuiltInequality(
        id=spec.id, tag=spec.tag, shape=spec.shape, params=params, model=model,
        terms=tuple(built), sharp_constant=sharp,
        structural_remainder=spec.structural_remainder)


# --------------------------------------------------- custom inequality files

_SCHEMA_KEYS = {"id", "shape", "model", "terms", "constraints", "sharp_constant", "sharpness_family"}
_TERM_KEYS = {"side", "coefficient", "weight_power", "extra_weight", "integrand", "measure", "outer_power"}


def serialize(spec: InequalitySpec) -> dict:
    """Schema document for a spec; load_custom(serialize(s)) == s."""
    return {
        "id": spec.id,
        "shape": spec.shape,
        "model": spec.model,
        "terms": [
            {
                "side": t.side,
                "coefficient": t.coefficient,
                "weight_power": t.weight_power,
                "extra_weight": t.extra_weight,
                "integrand": t.integrand.encode(),
                "measure": t.measure,
                "outer_power": t.outer_power,
            }
            for t in spec.terms
        ],
        "constraints": list(spec.constraints),
        "sharp_constant": spec.sharp_constant,
        "sharpness_family": spec.sharpness_family,
    }


def load_custom(document: str | dict, register_spec: bool = True,
                source: str = "<custom>") -> InequalitySpec:
    """Parse a custom inequality document and (by default) register it.

    The document is JSON with the fixed field names of :func:`serialize`.
    The first RHS term is taken as the main term.  Constraint and formula
    strings use the expression grammar; unknown symbols, integrand kinds or
    malformed expressions are rejected with positions.
    """
    if isinstance(document, str):
        try:
            data = json.loads(document)
        except json.JSONDecodeError as exc:
            raise SpecDocumentError(f"{source}: not valid JSON: {exc}") from None
    else:
        data = document
    if not isinstance(data, dict):
        raise SpecDocumentError(f"{source}: document must be a JSON object")
    missing = _SCHEMA_KEYS - set(data)
    if missing:
        raise SpecDocumentError(f"{source}: missing field(s) {sorted(missing)}")
    unknown = set(data) - _SCHEMA_KEYS - {"tag", "witness", "required", "note"}
    if unknown:
        raise SpecDocumentError(f"{source}: unknown field(s) {sorted(unknown)}")
    if not isinstance(data["terms"], list) or not data["terms"]:
        raise SpecDocumentError(f"{source}: 'terms' must be a nonempty list")

    terms = []
    for k, raw in enumerate(data["terms"]):
        if not isinstance(raw, dict):
            raise SpecDocumentError(f"{source}: term {k} must be an object")
        bad = set(raw) - _TERM_KEYS
        if bad:
            raise SpecDocumentError(f"{source}: term {k} has unknown field(s) {sorted(bad)}")
        lacking = _TERM_KEYS - set(raw)
        if lacking:
            raise SpecDocumentError(f"{source}: term {k} missing field(s) {sorted(lacking)}")
        extra = raw["extra_weight"]
        terms.append(FunctionalTerm(
            side=str(raw["side"]).lower(),
            coefficient=str(raw["coefficient"]),
            weight_power=str(raw["weight_power"]),
            integrand=IntegrandKind.decode(str(raw["integrand"])),
            extra_weight="none" if extra in (None, "none") else str(extra),
            measure=str(raw["measure"]).lower(),
            outer_power=str(raw["outer_power"]),
        ))
    constraints = data["constraints"]
    if not isinstance(constraints, list):
        raise SpecDocumentError(f"{source}: 'constraints' must be a list of strings")

    spec = InequalitySpec(
        id=str(data["id"]),
        tag=str(data.get("tag", "(custom)")),
        shape=str(data["shape"]).lower(),
        model=str(data["model"]).lower(),
        terms=tuple(terms),
        constraints=tuple(str(t) for t in constraints),
        sharp_constant=data["sharp_constant"],
        sharpness_family=data["sharpness_family"],
        witness=dict(data.get("witness", {})),
        required=tuple(data.get("required", ())),
        note=str(data.get("note", "")),
    )
    _validate_spec(spec)  # parses every expression, checks symbols
    if register_spec:
        register(spec, overwrite=False)
    return spec


# ----------------------------------------------------------- startup checks

def run_startup_checks() -> None:
    """Registry self-checks, run once at import.

    Asserts every built-in entry has a nonempty admissible set (its stored
    witness), and that the two printed forms of the improved-Sobolev
    remainder exponent are the same polynomial in (n, q, alpha).
    """
    for spec in _REGISTRY.values():
        witness = params_from_dict(spec.witness)
        ok, violations = admissible(spec.id, witness)
        if not ok:
            raise AssertionError(f"witness of {spec.id!r} is inadmissible: {violations}")
    variables = ("n", "q", "alpha")
    statement = ex.expand_polynomial("((2 - n)*(2 - q) + alpha*q)/2", variables)
    proof_form = ex.expand_polynomial("((n - 2)*(q - 2) + alpha*q)/2", variables)
    if statement != proof_form:
        raise AssertionError("the two printed forms of the improved-Sobolev remainder exponent differ")


for _builder in _BUILDERS:
    register(_builder())
run_startup_checks()
