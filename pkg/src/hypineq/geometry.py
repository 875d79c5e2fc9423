"""Radial geometry of the Poincare ball model and a Euclidean oracle model.

Everything is reduced to one dimension.  A radial function is a function of
the geodesic distance d from the origin, volume integrals of radial
functions become line integrals against a radial weight, and the
Laplace-Beltrami operator becomes phi'' + (n-1) k(d) phi'.  The two
built-in models are

    hyperbolic : unit ball with metric factor lambda(r) = 2/(1 - r^2),
                 d = 2 artanh(r), radial volume weight sinh^(n-1)(d),
                 k(d) = coth(d);
    euclidean  : flat R^n in polar form, weight d^(n-1), k(d) = 1/d.

Both models satisfy d * (Delta d) >= n - 1 away from the origin (with
equality in the flat case), which is the geometric constant C used by the
inequality catalog.

Normalization: the radial weights here deliberately omit the area of the
unit (n-1)-sphere, i.e. they integrate against the *normalized* sphere
measure.  Quotients of such integrals equal the true n-dimensional
quotients.  Terms raised to an outer power != 1 need the sphere factor
reinstated to represent the true integral; ``catalog.build_terms`` does
that at the coefficient level, never here.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Sequence


class ModelKind(Enum):
    HYPERBOLIC = "hyperbolic"
    EUCLIDEAN = "euclidean"


@dataclass(frozen=True)
class SpaceModel:
    """Radial model of the ambient space.

    ``C`` is the constant in the differential inequality d * (Delta d) >= C
    satisfied by the distance function; it equals n - 1 for both built-in
    models.
    """

    kind: ModelKind
    n: int

    def __post_init__(self):
        if self.n < 2:
            raise ValueError(f"dimension must be an integer >= 2, got {self.n!r}")

    @property
    def C(self) -> float:
        return float(self.n - 1)

    @property
    def name(self) -> str:
        return self.kind.value


def hyperbolic(n: int) -> SpaceModel:
    return SpaceModel(ModelKind.HYPERBOLIC, n)


def euclidean(n: int) -> SpaceModel:
    return SpaceModel(ModelKind.EUCLIDEAN, n)


@dataclass(frozen=True)
class RadialPoint:
    """A point on a radial ray: geodesic distance d and ball radius r.

    In the hyperbolic model the two coordinates are linked by r = tanh(d/2);
    the Euclidean model only uses d.
    """

    d: float
    r: float | None = None

    def __post_init__(self):
        if self.d < 0:
            raise ValueError(f"distance must be nonnegative, got {self.d}")
        if self.r is not None:
            if not 0.0 <= self.r < 1.0:
                raise ValueError(f"ball radius must lie in [0, 1), got {self.r}")
            if abs(self.r - math.tanh(self.d / 2)) > 1e-10 * (1 + self.r):
                raise ValueError("inconsistent pair: r != tanh(d/2)")

    @classmethod
    def from_radius(cls, r: float) -> "RadialPoint":
        return cls(d=dist_from_origin(r), r=r)

    @classmethod
    def from_dist(cls, d: float) -> "RadialPoint":
        return cls(d=d, r=radius_from_dist(d))


def conformal_factor(r: float) -> float:
    """Metric factor lambda(r) = 2/(1 - r^2) of the ball model.

    Strictly increasing on [0, 1) with lambda(0) = 2.
    """
    if not 0.0 <= r < 1.0:
        raise ValueError(f"ball radius must lie in [0, 1), got {r}")
    return 2.0 / ((1.0 - r) * (1.0 + r))


def conformal_factor_from_dist(d: float) -> float:
    """lambda(tanh(d/2)) = 2 cosh^2(d/2), evaluated directly in d.

    Stable for large d where the float radius tanh(d/2) saturates toward 1
    and 1 - r^2 loses all precision.
    """
    if d < 0:
        raise ValueError(f"distance must be nonnegative, got {d}")
    return 2.0 * math.cosh(d / 2) ** 2


def dist_from_origin(r: float) -> float:
    """Geodesic distance 2 artanh(r) = log((1+r)/(1-r)) from the origin."""
    if not 0.0 <= r < 1.0:
        raise ValueError(f"ball radius must lie in [0, 1), got {r}")
    # log1p on both halves keeps full relative accuracy for r near 0 and 1.
    return math.log1p(r) - math.log1p(-r)


def radius_from_dist(d: float) -> float:
    """Ball radius tanh(d/2) of the point at geodesic distance d."""
    if d < 0:
        raise ValueError(f"distance must be nonnegative, got {d}")
    return math.tanh(d / 2)


def hyperbolic_distance(x: Sequence[float], y: Sequence[float]) -> float:
    """Distance between two points of the ball model.

    arccosh(1 + 2|x-y|^2 / ((1-|x|^2)(1-|y|^2))); agrees with
    dist_from_origin(|x|) when y = 0.
    """
    if len(x) != len(y):
        raise ValueError("points must have the same dimension")
    xx = sum(t * t for t in x)
    yy = sum(t * t for t in y)
    if xx >= 1.0 or yy >= 1.0:
        raise ValueError("points must lie strictly inside the unit ball")
    dd = sum((a - b) ** 2 for a, b in zip(x, y))
    return math.acosh(1.0 + 2.0 * dd / ((1.0 - xx) * (1.0 - yy)))


def volume_weight(d: float, model: SpaceModel) -> float:
    """Radial volume density: sinh^(n-1)(d) hyperbolic, d^(n-1) Euclidean.

    Derivation for the ball model: with r = tanh(d/2) one has
    lambda(r) r = sinh(d) and dr/dd = 1/lambda, so
    lambda^n r^(n-1) dr = (lambda r)^(n-1) dd = sinh^(n-1)(d) dd
    per unit of normalized sphere measure.
    """
    if d < 0:
        raise ValueError(f"distance must be nonnegative, got {d}")
    if model.kind is ModelKind.HYPERBOLIC:
        return math.sinh(d) ** (model.n - 1)
    return d ** (model.n - 1)


def lebesgue_radial_factor(d: float, n: int) -> float:
    """Radial Lebesgue density of the ball in the distance variable.

    r^(n-1) dr/dd with r = tanh(d/2):  tanh^(n-1)(d/2) * (1 - tanh^2(d/2))/2.
    Antiderivative oracle: its integral over [0, D] equals r(D)^n / n.
    Hyperbolic model only (the flat model's Lebesgue and Riemannian measures
    coincide).
    """
    if d < 0:
        raise ValueError(f"distance must be nonnegative, got {d}")
    t = math.tanh(d / 2)
    return t ** (n - 1) * (1.0 - t * t) / 2.0


def laplacian_coefficient(d: float, model: SpaceModel) -> float:
    """Coefficient k(d) of the first-order term in the radial Laplacian.

    coth(d) for the hyperbolic model, 1/d for the Euclidean one.  Both obey
    k(d) >= 1/d on d > 0, with equality in the flat case.
    """
    if d <= 0:
        raise ValueError(f"k(d) is defined for d > 0 only, got {d}")
    if model.kind is ModelKind.HYPERBOLIC:
        return 1.0 / math.tanh(d)
    return 1.0 / d


def radial_laplacian(phi, d: float, model: SpaceModel) -> float:
    """Laplace-Beltrami operator on a radial profile at distance d > 0.

    phi''(d) + (n-1) k(d) phi'(d), where k is ``laplacian_coefficient``.
    Equivalently J^{-1} (J phi')' with J = ``volume_weight``, which is the
    identity the divergence-form self-test integrates by parts.
    """
    k = laplacian_coefficient(d, model)  # validates d > 0
    return phi.d2(d) + (model.n - 1) * k * phi.d1(d)


def sphere_area(m: int) -> float:
    """Surface area of the unit m-sphere embedded in R^(m+1).

    2 pi^((m+1)/2) / Gamma((m+1)/2); sphere_area(0) = 2 (two points).
    """
    if m < 0:
        raise ValueError(f"sphere dimension must be >= 0, got {m}")
    return 2.0 * math.pi ** ((m + 1) / 2) / math.gamma((m + 1) / 2)
