"""Shape-constrained spline regression with a bounded number of local
extrema: basis construction, posterior sampling, shape hypothesis testing,
and simulation tooling."""

from .basis import KnotVector, LxBasis, PiecewisePoly, bspline_design, bspline_eval
from .errors import LxSplineError
from .estimator import LocalExtremaSplineRegressor
from .model import Dataset, Hyperparameters, ModelState
from .orthant import OrthantProblem, mc_oracle, orthant_prob
from .sampler import ChainConfig, Diagnostics, Draw, run_tempered
from .shapes import ShapeHypothesis, bayes_factor, monotonicity_test, prior_shape_prob
from .simulate import Scenario, imse, roc_auc, run_replicates, true_function
from .tree import KnotTree

__all__ = [
    "ChainConfig",
    "Dataset",
    "Diagnostics",
    "Draw",
    "Hyperparameters",
    "KnotTree",
    "KnotVector",
    "LocalExtremaSplineRegressor",
    "LxBasis",
    "LxSplineError",
    "ModelState",
    "OrthantProblem",
    "PiecewisePoly",
    "Scenario",
    "ShapeHypothesis",
    "bayes_factor",
    "bspline_design",
    "bspline_eval",
    "imse",
    "mc_oracle",
    "monotonicity_test",
    "orthant_prob",
    "prior_shape_prob",
    "roc_auc",
    "run_replicates",
    "run_tempered",
    "true_function",
]

__version__ = "0.1.0"
