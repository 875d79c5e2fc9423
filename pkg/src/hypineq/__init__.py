"""hypineq: a numerical verification lab for weighted Hardy, Rellich and
uncertainty-principle inequalities, reduced to one-dimensional weighted
radial integrals on the hyperbolic ball (with a Euclidean radial oracle).
"""

from . import catalog, geometry, profiles, quadrature, sharpness
from .catalog import (BuiltInequality, FunctionalTerm, InequalitySpec,
                      IntegrandKind, Params, admissible, build_terms,
                      load_custom, serialize, sharp_constant)
from .errors import (AdmissibilityError, AssemblyError,
                     BoundaryWeightSingularityError, DivergentIntegralError,
                     DivergentTailError, EigenSolveError, ExpressionError,
                     HypineqError, NonConvergenceError, ProfileSpecError,
                     QuadratureError, SpecDocumentError)
from .geometry import (RadialPoint, SpaceModel, conformal_factor,
                       conformal_factor_from_dist, dist_from_origin,
                       euclidean, hyperbolic, hyperbolic_distance,
                       laplacian_coefficient, lebesgue_radial_factor,
                       radial_laplacian, radius_from_dist, sphere_area,
                       volume_weight)
from .profiles import (FamilyKind, FamilyOptions, RadialProfile, bump_profile,
                       critical_exponent, gaussian_profile, grid_profile,
                       grid_profile_from_file, make_family,
                       parse_profile_spec, seeded_bump, zero_profile)
from .quadrature import (CompactSupport, ExpDecay, GaussianDecay, Integrand,
                         PolynomialTimesExpGrowth, PowerLawDecay, QuadResult,
                         integrate, integrate_term)
from .sharpness import (FixedPointReport, MinimizeReport, ResidualReport,
                        SweepReport, SweepRow, TermValue, hpw_scan,
                        minimize_discrete, rayleigh_quotient, residual,
                        residual_battery, solve_paper_alpha, sweep)

__version__ = "0.1.0"
