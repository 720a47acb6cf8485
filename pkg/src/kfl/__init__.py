"""K-functionals and Calderon-Zygmund decompositions for Schrodinger-type
Sobolev spaces on finite metric measure spaces."""
from .space import (Ball, BallTable, FiniteMetricMeasureSpace, SpaceError, build_cayley_z2, build_grid,
                    build_polar, doubling_constant, enumerate_balls, from_matrix, from_points, line)
from .weights import (Weight, WeightError, ap_constant, make_weight, rh_constant, rh_exponent_scan,
                      rh_infinity_constant)
from .calculus import (SobolevFunction, fp_constant, gradient, lp_norm, maximal, poincare_constant,
                       sobolev_function, sobolev_norm, t_r)
from .rearrange import StepFunction, decreasing_rearrangement, double_star, hardy_check, holmstedt_k
from .czd import CZDecomposition, WhitneyCover, cz_decompose, level_set_omega, verify_cz, whitney
from .kfunc import (SpacePair, equivalence_report, interp_norm, k_bounds_infty, k_curves, k_exact,
                    k_exact_split, k_lower_bound, k_upper_formula, k_upper_via_cz)
from .report import VerificationReport

__version__ = "0.1.0"
