"""Radial test functions: extremal families and generic profiles.

Every profile exposes its value and first two derivatives in the distance
variable d, its exact support, the local powers of (value, d1, d2) at the
origin, a tail classification, and the breakpoints where it is only
piecewise smooth.  Constructors:

    make_family      the named families (power-law extremal families with
                     and without origin concentration, Gaussians, seeded
                     bumps, sampled grids)
    bump_profile     an explicit bump exp(-1/(1-u^2)) at a given center/width
    grid_profile     a tabulated profile with finite-difference derivatives
    parse_profile_spec   the CLI's profile mini-language

The smooth cutoff used everywhere is a fixed quintic smoothstep
(6t^5 - 15t^4 + 10t^3), which is C^2 with analytic derivatives, so every
profile built here is reproducible bit for bit.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace
from typing import Callable

import numpy as np

from .catalog import BuiltTerm, FunctionalTerm, Params
from .errors import AdmissibilityError, ProfileSpecError
from .geometry import SpaceModel, hyperbolic


class FamilyKind(enum.Enum):
    HARDY_PAPER = "hardy-paper"
    HARDY_CONCENTRATION = "hardy-conc"
    RELLICH_PAPER = "rellich-paper"
    RELLICH_CONCENTRATION = "rellich-conc"
    GAUSSIAN = "gaussian"
    BUMP = "bump"
    GRID = "grid"


# ------------------------------------------------------------- tail classes

@dataclass(frozen=True)
class ProfileCompact:
    """The profile vanishes beyond d_max."""
    d_max: float


@dataclass(frozen=True)
class ProfileGaussian:
    """|profile| <= const * exp(-rate * d^2) for large d."""
    rate: float


@dataclass(frozen=True)
class ProfilePowerLaw:
    """profile ~ const * d^exponent as d -> infinity."""
    exponent: float


@dataclass(frozen=True)
class ReducedForm:
    """Stable factorization phi = d^power * factor(d) on (0, upto].

    The factor callables stay O(1) however small d gets, which lets the
    quadrature layer strip the known powers analytically instead of
    evaluating d^power at underflow/overflow range.  A None slot means that
    derivative vanishes identically on (0, upto].
    """

    upto: float
    value: tuple[float, Callable[[float], float]]
    d1: tuple[float, Callable[[float], float]] | None
    d2: tuple[float, Callable[[float], float]] | None


@dataclass(frozen=True)
class RadialProfile:
    """A radial test function with evaluators for value, phi' and phi''."""

    value: Callable[[float], float]
    d1: Callable[[float], float]
    d2: Callable[[float], float]
    support: tuple[float, float]          # (lo, hi); hi may be math.inf
    local_power_at_zero: float | None     # None when support starts above 0
    d1_power_at_zero: float | None        # math.inf marks "identically 0 near 0"
    d2_power_at_zero: float | None
    tail: object
    breakpoints: tuple[float, ...] = ()
    label: str = "profile"
    reduced: ReducedForm | None = None

    def __call__(self, d: float) -> float:
        return self.value(d)

    def scaled(self, factor: float) -> "RadialProfile":
        v, g, h = self.value, self.d1, self.d2
        return replace(self,
                       value=lambda d: factor * v(d),
                       d1=lambda d: factor * g(d),
                       d2=lambda d: factor * h(d),
                       label=f"{factor}*{self.label}")


def zero_profile() -> RadialProfile:
    z = lambda d: 0.0
    return RadialProfile(z, z, z, (0.0, 0.0), math.inf, math.inf, math.inf,
                         ProfileCompact(0.0), (), "zero")


# -------------------------------------------------------- quintic smoothstep

def _smoothstep(t: float) -> float:
    return t * t * t * (10.0 + t * (-15.0 + 6.0 * t))


def _smoothstep_d1(t: float) -> float:
    return 30.0 * (t * (1.0 - t)) ** 2


def _smoothstep_d2(t: float) -> float:
    return 60.0 * t * (2.0 * t - 1.0) * (t - 1.0)


def _cutoff(lo: float, hi: float):
    """C^2 cutoff: 1 below lo, 0 above hi, quintic smoothstep in between.

    Returns (value, d1, d2) callables.
    """
    width = hi - lo
    if width <= 0:
        raise ValueError("cutoff needs lo < hi")

    def value(d: float) -> float:
        if d <= lo:
            return 1.0
        if d >= hi:
            return 0.0
        return _smoothstep((hi - d) / width)

    def d1(d: float) -> float:
        if d <= lo or d >= hi:
            return 0.0
        return -_smoothstep_d1((hi - d) / width) / width

    def d2(d: float) -> float:
        if d <= lo or d >= hi:
            return 0.0
        return _smoothstep_d2((hi - d) / width) / width ** 2

    return value, d1, d2


# The inner cutoff eta: identically 1 on [0, 1/2], 0 beyond 1.
_ETA, _ETA1, _ETA2 = _cutoff(0.5, 1.0)


def _pure_power_reduced(s: float, upto: float) -> ReducedForm:
    """Reduced form of phi = d^s on (0, upto]: constant factors."""
    return ReducedForm(
        upto=upto,
        value=(s, lambda d: 1.0),
        d1=(s - 1.0, lambda d, _c=s: _c) if s != 0 else None,
        d2=(s - 2.0, lambda d, _c=s * (s - 1.0): _c) if s * (s - 1.0) != 0 else None,
    )


# ----------------------------------------------------------------- families

@dataclass(frozen=True)
class FamilyOptions:
    """Knobs for make_family.

    cutoff_end is the truncation point D of the outer d^(-m) branches
    (None keeps them untruncated, which diverges against the hyperbolic
    volume and is reported as such by the quadrature layer).
    exponent_base overrides the concentration families' base exponent;
    when unset it is derived from (params, denominator_weight) by local
    power counting.
    """

    cutoff_end: float | None = 10.0
    amplitude: float = 1.0
    seed: int = 0
    window: tuple[float, float] = (0.25, 4.0)
    exponent_base: float | None = None
    denominator_weight: float | None = None


def make_family(kind: FamilyKind, shape: float, params: Params,
                options: FamilyOptions = FamilyOptions()) -> RadialProfile:
    """Construct a member of a named family.

    ``shape`` is the family's own parameter: the exponent offset eps for the
    power-law families, the width a for Gaussians.  It is ignored by BUMP
    (use options.seed / options.window) and unsupported for GRID (use
    grid_profile).
    """
    if kind in (FamilyKind.HARDY_PAPER, FamilyKind.HARDY_CONCENTRATION,
                FamilyKind.RELLICH_PAPER, FamilyKind.RELLICH_CONCENTRATION,
                FamilyKind.GAUSSIAN):
        if not shape > 0:
            raise AdmissibilityError(f"family {kind.value} needs shape > 0, got {shape}")

    if kind is FamilyKind.GAUSSIAN:
        return gaussian_profile(shape, amplitude=options.amplitude)
    if kind is FamilyKind.BUMP:
        return seeded_bump(options.seed, window=options.window)
    if kind is FamilyKind.HARDY_CONCENTRATION:
        base = options.exponent_base
        if base is None:
            a_den = params.alpha if options.denominator_weight is None else options.denominator_weight
            base = -((params.n - 1) + a_den + 1) / params.p
        return concentration_profile(base + shape, label=f"hardy-conc:eps={shape:g}")
    if kind is FamilyKind.RELLICH_CONCENTRATION:
        base = options.exponent_base
        if base is None:
            a_den = (params.alpha - 2) if options.denominator_weight is None else options.denominator_weight
            base = 1.0 - ((params.n - 1) + a_den + 1) / 2.0
        return concentration_profile(base + shape, label=f"rellich-conc:eps={shape:g}")
    if kind is FamilyKind.HARDY_PAPER:
        m = (params.n + params.alpha) / params.p + shape
        return _two_branch_profile(m, inner="power", cutoff_end=options.cutoff_end,
                                   label=f"hardy-paper:eps={shape:g}")
    if kind is FamilyKind.RELLICH_PAPER:
        m = (params.n + params.alpha - 4) / 2 + shape
        return _two_branch_profile(m, inner="linear", cutoff_end=options.cutoff_end,
                                   label=f"rellich-paper:eps={shape:g}")
    raise ProfileSpecError(f"make_family does not build {kind!r}; use grid_profile for grids")


def concentration_profile(exponent: float, label: str | None = None) -> RadialProfile:
    """phi(d) = d^s * eta(d): mass concentrates at the origin as s decreases.

    eta is the fixed cutoff (1 on [0, 1/2], 0 beyond 1), so the support is
    (0, 1) and near the origin phi is the pure power d^s.
    """
    s = float(exponent)

    def value(d: float) -> float:
        if d <= 0.0 or d >= 1.0:
            return 0.0
        return d ** s * _ETA(d)

    def d1(d: float) -> float:
        if d <= 0.0 or d >= 1.0:
            return 0.0
        return s * d ** (s - 1) * _ETA(d) + d ** s * _ETA1(d)

    def d2(d: float) -> float:
        if d <= 0.0 or d >= 1.0:
            return 0.0
        return (s * (s - 1) * d ** (s - 2) * _ETA(d)
                + 2 * s * d ** (s - 1) * _ETA1(d)
                + d ** s * _ETA2(d))

    return RadialProfile(
        value, d1, d2,
        support=(0.0, 1.0),
        local_power_at_zero=s,
        d1_power_at_zero=(s - 1) if s != 0 else math.inf,
        d2_power_at_zero=(s - 2) if s * (s - 1) != 0 else math.inf,
        tail=ProfileCompact(1.0),
        breakpoints=(0.5, 1.0),
        label=label or f"conc:s={s:g}",
        reduced=_pure_power_reduced(s, 0.5),
    )


def _two_branch_profile(m: float, inner: str, cutoff_end: float | None,
                        label: str) -> RadialProfile:
    """The piecewise extremal families: an inner branch on [0, 1] matched at
    d = 1 to the outer branch d^(-m), optionally truncated on [D-1, D].

    inner='power' uses d^m (continuous, kinked derivative at 1);
    inner='linear' uses -m(d-1) + 1 (a C^1 match at 1).
    """
    if m <= 0:
        raise AdmissibilityError(f"two-branch family needs a positive exponent, got m = {m}")
    if cutoff_end is None:
        cut = lambda d: 1.0
        cut1 = cut2 = lambda d: 0.0
        hi: float = math.inf
        tail: object = ProfilePowerLaw(-m)
        breakpoints: tuple[float, ...] = (1.0,)
    else:
        if cutoff_end <= 2.0:
            raise AdmissibilityError(f"truncation end must exceed 2, got {cutoff_end}")
        cut, cut1, cut2 = _cutoff(cutoff_end - 1.0, cutoff_end)
        hi = cutoff_end
        tail = ProfileCompact(cutoff_end)
        breakpoints = (1.0, cutoff_end - 1.0, cutoff_end)

    def outer(d: float) -> tuple[float, float, float]:
        base = d ** (-m)
        b1 = -m * d ** (-m - 1)
        b2 = m * (m + 1) * d ** (-m - 2)
        h, h1, h2 = cut(d), cut1(d), cut2(d)
        return (base * h, b1 * h + base * h1, b2 * h + 2 * b1 * h1 + base * h2)

    if inner == "power":
        def value(d: float) -> float:
            if d <= 0.0 or d >= hi:
                return 0.0
            return d ** m if d <= 1.0 else outer(d)[0]

        def d1(d: float) -> float:
            if d <= 0.0 or d >= hi:
                return 0.0
            return m * d ** (m - 1) if d <= 1.0 else outer(d)[1]

        def d2(d: float) -> float:
            if d <= 0.0 or d >= hi:
                return 0.0
            return m * (m - 1) * d ** (m - 2) if d <= 1.0 else outer(d)[2]

        powers = (m,
                  (m - 1) if m != 0 else math.inf,
                  (m - 2) if m * (m - 1) != 0 else math.inf)
        reduced = _pure_power_reduced(m, 1.0)
    elif inner == "linear":
        def value(d: float) -> float:
            if d < 0.0 or d >= hi:
                return 0.0
            return (1.0 + m) - m * d if d <= 1.0 else outer(d)[0]

        def d1(d: float) -> float:
            if d < 0.0 or d >= hi:
                return 0.0
            return -m if d <= 1.0 else outer(d)[1]

        def d2(d: float) -> float:
            if d <= 1.0 or d >= hi:
                return 0.0
            return outer(d)[2]

        powers = (0.0, 0.0, math.inf)
        reduced = ReducedForm(
            upto=1.0,
            value=(0.0, lambda d, _m=m: (1.0 + _m) - _m * d),
            d1=(0.0, lambda d, _m=m: -_m),
            d2=None,
        )
    else:  # pragma: no cover
        raise ValueError(inner)

    return RadialProfile(
        value, d1, d2,
        support=(0.0, hi),
        local_power_at_zero=powers[0],
        d1_power_at_zero=powers[1],
        d2_power_at_zero=powers[2],
        tail=tail,
        breakpoints=breakpoints,
        label=label + ("" if cutoff_end is None else f",D={cutoff_end:g}"),
        reduced=reduced,
    )


def gaussian_profile(width: float, amplitude: float = 1.0) -> RadialProfile:
    """phi(d) = A exp(-a d^2); phi(0) = A, phi'(0) = 0, phi''(0) = -2aA."""
    if not width > 0:
        raise AdmissibilityError(f"gaussian width must be positive, got {width}")
    a, A = float(width), float(amplitude)

    def value(d: float) -> float:
        return A * math.exp(-a * d * d)

    def d1(d: float) -> float:
        return -2.0 * a * d * value(d)

    def d2(d: float) -> float:
        return (4.0 * a * a * d * d - 2.0 * a) * value(d)

    return RadialProfile(
        value, d1, d2,
        support=(0.0, math.inf),
        local_power_at_zero=0.0,
        d1_power_at_zero=1.0,
        d2_power_at_zero=0.0,
        tail=ProfileGaussian(a),
        breakpoints=(),
        label=f"gaussian:a={a:g}" + (f",A={A:g}" if A != 1.0 else ""),
    )


def bump_profile(center: float, width: float) -> RadialProfile:
    """exp(-1/(1 - u^2)) with u = (d - center)/width, supported on |u| < 1."""
    if width <= 0 or center - width < 0:
        raise AdmissibilityError(
            f"bump support [{center - width}, {center + width}] must sit inside d >= 0")
    c, w = float(center), float(width)

    def pieces(d: float) -> tuple[float, float, float]:
        u = (d - c) / w
        one = 1.0 - u * u
        if one <= 0.0:
            return 0.0, 0.0, 0.0
        f = math.exp(-1.0 / one)
        g = -2.0 * u / one ** 2          # d/du of the exponent's argument
        gp = -2.0 / one ** 2 - 8.0 * u * u / one ** 3
        return f, f * g / w, f * (g * g + gp) / w ** 2

    return RadialProfile(
        lambda d: pieces(d)[0],
        lambda d: pieces(d)[1],
        lambda d: pieces(d)[2],
        support=(c - w, c + w),
        local_power_at_zero=None if c - w > 0 else math.inf,
        d1_power_at_zero=None if c - w > 0 else math.inf,
        d2_power_at_zero=None if c - w > 0 else math.inf,
        tail=ProfileCompact(c + w),
        breakpoints=(),
        label=f"bump:c={c:g},w={w:g}",
    )


def seeded_bump(seed: int, window: tuple[float, float] = (0.25, 4.0)) -> RadialProfile:
    """A bump with (center, width) drawn reproducibly inside a window.

    Generator: numpy PCG64 seeded with ``seed``; center uniform over the
    middle 60% of the window, width uniform in [0.3, 0.95] of the largest
    width keeping the support strictly inside the window.  Same seed and
    window give bit-identical profiles.
    """
    lo, hi = window
    if not 0 <= lo < hi:
        raise AdmissibilityError(f"bump window must satisfy 0 <= lo < hi, got {window}")
    rng = np.random.Generator(np.random.PCG64(int(seed)))
    span = hi - lo
    center = lo + span * rng.uniform(0.2, 0.8)
    max_width = min(center - lo, hi - center)
    width = max_width * rng.uniform(0.3, 0.95)
    profile = bump_profile(center, width)
    return replace(profile, label=f"bump:seed={seed}({profile.label[5:]})")


# -------------------------------------------------------------- grid profiles

def _fd_weights(x: np.ndarray, x0: float, order: int) -> np.ndarray:
    """Finite-difference weights for the given derivative order at x0 on the
    stencil x (Fornberg's recursion)."""
    npts = len(x)
    weights = np.zeros((order + 1, npts))
    weights[0, 0] = 1.0
    c1 = 1.0
    c4 = x[0] - x0
    for i in range(1, npts):
        mn = min(i, order)
        c2 = 1.0
        c5 = c4
        c4 = x[i] - x0
        for j in range(i):
            c3 = x[i] - x[j]
            c2 *= c3
            if j == i - 1:
                for k in range(mn, 0, -1):
                    weights[k, i] = c1 * (k * weights[k - 1, i - 1] - c5 * weights[k, i - 1]) / c2
                weights[0, i] = -c1 * c5 * weights[0, i - 1] / c2
            for k in range(mn, 0, -1):
                weights[k, j] = ((x[i] - x0) * weights[k, j] - k * weights[k - 1, j]) / c3
            weights[0, j] = (x[i] - x0) * weights[0, j] / c3
        c1 = c2
    return weights[order]


def grid_profile(d: np.ndarray, v: np.ndarray, label: str = "grid") -> RadialProfile:
    """Profile through sampled (d, value) pairs with Dirichlet ends.

    Node derivatives come from nonuniform 5-point finite differences
    (fourth order in the value); between nodes a quintic Hermite matches
    value, d1 and d2 at both ends, so the evaluators are globally C^2.
    Endpoint values must already be 0.
    """
    from scipy.interpolate import BPoly

    d = np.asarray(d, dtype=float)
    v = np.asarray(v, dtype=float)
    if d.ndim != 1 or d.shape != v.shape:
        raise ProfileSpecError("grid data must be two equal-length 1-d arrays")
    if len(d) < 7:
        raise ProfileSpecError(f"grid profiles need at least 7 points, got {len(d)}")
    if not np.all(np.diff(d) > 0):
        raise ProfileSpecError("grid abscissae must be strictly increasing")
    if d[0] < 0:
        raise ProfileSpecError("grid abscissae must be nonnegative")
    if v[0] != 0.0 or v[-1] != 0.0:
        raise ProfileSpecError("grid endpoint values must be 0 (Dirichlet ends)")

    npts = len(d)
    p1 = np.empty(npts)
    p2 = np.empty(npts)
    for i in range(npts):
        j = min(max(i - 2, 0), npts - 5)
        stencil = d[j:j + 5]
        p1[i] = _fd_weights(stencil, d[i], 1) @ v[j:j + 5]
        p2[i] = _fd_weights(stencil, d[i], 2) @ v[j:j + 5]

    poly = BPoly.from_derivatives(d, np.column_stack([v, p1, p2]))
    dpoly = poly.derivative()
    ddpoly = dpoly.derivative()
    lo, hi = float(d[0]), float(d[-1])

    def _wrap(f):
        def call(x: float) -> float:
            if x < lo or x > hi:
                return 0.0
            return float(f(x))
        return call

    return RadialProfile(
        _wrap(poly), _wrap(dpoly), _wrap(ddpoly),
        support=(lo, hi),
        local_power_at_zero=None if lo > 0 else (1.0 if p1[0] != 0 else math.inf),
        d1_power_at_zero=None if lo > 0 else (0.0 if p1[0] != 0 else math.inf),
        d2_power_at_zero=None if lo > 0 else (0.0 if p2[0] != 0 else math.inf),
        tail=ProfileCompact(hi),
        breakpoints=tuple(float(x) for x in d[1:-1]),
        label=label,
    )


def grid_profile_from_file(path: str) -> RadialProfile:
    """Two-column text file: d and value, strictly increasing d."""
    try:
        data = np.loadtxt(path)
    except OSError as exc:
        raise ProfileSpecError(f"cannot read grid file {path!r}: {exc}") from None
    except ValueError as exc:
        raise ProfileSpecError(f"grid file {path!r} is not numeric two-column text: {exc}") from None
    if data.ndim != 2 or data.shape[1] != 2:
        raise ProfileSpecError(f"grid file {path!r} must have exactly two columns")
    return grid_profile(data[:, 0], data[:, 1], label=f"grid:file={path}")


# --------------------------------------------------------- critical exponent

_MASS_KINDS = {"abs_phi_p": 0.0, "abs_phi_q": 0.0, "phi_sq": 0.0,
               "d2_phi_sq": 2.0, "d4_phi_sq": 4.0}
_GRAD_KINDS = {"grad_p", "grad_sq"}


def critical_exponent(term: FunctionalTerm | BuiltTerm, params: Params,
                      model: SpaceModel) -> float:
    """The power s at which phi = d^s makes the term's integrand scale like
    d^(-1) at the origin (the logarithmic-divergence threshold).

    With volume power J0 = n - 1, weight power a and integrand exponent p:
    mass-type terms give s = -(J0 + a + 1)/p, gradient terms shift by +1,
    Laplacian terms by +2.  Terms carrying boundary-singular extra weights
    have no power rule here.
    """
    if isinstance(term, BuiltTerm):
        weight = term.weight_power
        exponent = term.exponent
        kind = term.integrand
        extra = term.extra_weight
    else:
        env = params.env()
        from . import expressions as ex
        weight = ex.evaluate(term.weight_power, env)
        exponent = ex.evaluate(term.integrand.exponent_expr, env)
        kind = term.integrand.name
        extra = term.extra_weight
    if extra != "none":
        raise AdmissibilityError(f"no critical-exponent rule for extra weight {extra!r}")
    j0 = model.n - 1
    if kind in _MASS_KINDS:
        return -(j0 + weight + _MASS_KINDS[kind] + 1.0) / exponent
    if kind in _GRAD_KINDS:
        return 1.0 - (j0 + weight + 1.0) / exponent
    if kind == "laplacian_sq":
        return 2.0 - (j0 + weight + 1.0) / 2.0
    raise AdmissibilityError(f"no critical-exponent rule for integrand {kind!r}")


# ------------------------------------------------------- profile spec strings

def parse_profile_spec(text: str, params: Params | None = None,
                       model: SpaceModel | None = None,
                       exponent_base: float | None = None,
                       window: tuple[float, float] | None = None) -> RadialProfile:
    """Build a profile from a CLI string.

    Formats: ``bump:seed=7``, ``gaussian:a=1.5``, ``hardy-conc:eps=0.1``,
    ``rellich-conc:eps=0.1``, ``hardy-paper:eps=0.1,D=10``,
    ``rellich-paper:eps=0.1,D=10``, ``grid:file=PATH``.
    """
    name, _, rest = text.partition(":")
    name = name.strip().lower()
    kv: dict[str, str] = {}
    if rest:
        for clause in rest.split(","):
            key, eq, value = clause.partition("=")
            if not eq:
                raise ProfileSpecError(f"malformed profile option {clause!r} in {text!r}")
            kv[key.strip()] = value.strip()

    def fnum(key: str, default: float | None = None) -> float:
        if key not in kv:
            if default is None:
                raise ProfileSpecError(f"profile {name!r} requires {key}=...")
            return default
        try:
            return float(kv[key])
        except ValueError:
            raise ProfileSpecError(f"profile option {key}={kv[key]!r} is not a number") from None

    if params is None:
        params = Params(n=3)
    if model is None:
        model = hyperbolic(params.n)

    if name == "bump":
        seed = int(fnum("seed", 0))
        return seeded_bump(seed, window=window or (0.25, 4.0))
    if name == "gaussian":
        return gaussian_profile(fnum("a"), amplitude=fnum("A", 1.0))
    if name in ("hardy-conc", "rellich-conc"):
        kind = FamilyKind.HARDY_CONCENTRATION if name == "hardy-conc" else FamilyKind.RELLICH_CONCENTRATION
        opts = FamilyOptions(exponent_base=exponent_base)
        return make_family(kind, fnum("eps"), params, opts)
    if name in ("hardy-paper", "rellich-paper"):
        kind = FamilyKind.HARDY_PAPER if name == "hardy-paper" else FamilyKind.RELLICH_PAPER
        d_end = kv.get("D", "10")
        cutoff_end = None if d_end.lower() in ("inf", "none") else float(d_end)
        return make_family(kind, fnum("eps"), params, FamilyOptions(cutoff_end=cutoff_end))
    if name == "grid":
        if "file" not in kv:
            raise ProfileSpecError("grid profiles need file=PATH")
        return grid_profile_from_file(kv["file"])
    raise ProfileSpecError(
        f"unknown profile kind {name!r}; expected bump, gaussian, hardy-conc, "
        f"rellich-conc, hardy-paper, rellich-paper or grid")
