"""markovlab: numerical experiments with Markov-type polynomial inequalities
and best uniform approximation on algebraic hypersurfaces x_k^d = sum Q_i(y) x_k^i.

The package is organized around seven building blocks:

  polyring    sparse polynomial arithmetic and normal-form reduction
  geometry    discretized sets, projections, fattenings, bump functions
  chebysolve  the LP engine (minimax fits, functional maximization)
  markov      derivative-factor experiments and bound checks
  approx      metric projections, decay diagnostics, special functions
  extension   the constructive smooth gluing of metric projections
  cli         scenario-driven command line front end
"""

from .approx import (
    ApproxSeries,
    ConsistencyError,
    counterexample_norm,
    counterexample_poly,
    gauss_2f1,
    gamma_ratio_limit_check,
    metric_projection,
    pochhammer,
    projection_series,
    rapid_decrease_diagnostic,
    seminorm_delta,
    tail_closed_form,
)
from .chebysolve import (
    Basis,
    DegenerateBasisError,
    LPFailureError,
    LPProblem,
    build_basis,
    functional_max,
    minimax_fit,
    solve_lp,
)
from .extension import (
    build_extension,
    derivative_seminorm,
    determining_diagnostic,
    evaluate_extension,
)
from .geometry import (
    Branch,
    BranchSpec,
    BumpFunction,
    GeometryError,
    SampleSet,
    inflate_set,
    project_pi,
    refine_check,
    sample_box,
    sample_variety_set,
    sup_norm,
)
from .markov import (
    MarkovReport,
    build_markov_report,
    check_fmarkov_bound,
    fit_exponent,
    growth_property_check,
    lemma_coeff_bound_check,
    markov_factor,
)
from .polyring import (
    MultiPoly,
    NormalForm,
    VarietyRelation,
    degree,
    differentiate,
    evaluate,
    extract_coefficients,
    format_poly,
    parse_poly,
    reduce_to_normal_form,
)
from .scenario import Scenario, ScenarioError, load_scenario, preset_scenario

__version__ = "0.1.0"
