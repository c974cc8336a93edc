"""Directional normal cones and subdifferentials at infinity.

Exact polyhedral geometry (recession cones, face enumeration, directional
normal cones at infinity), a small function grammar with point
subdifferentials, sampled estimators of limiting and singular
subdifferentials at infinity, and certificates built on top of them.
"""

from .asymptotics import (EstimatorParams, SubdiffApprox, Verdict, distance_subdiff_at_infinity,
                          estimate_dir_subdiff, lipschitz_at_infinity_test, max_rule_check,
                          min_rule_check, partial_subdiff_check, restrict, sum_rule_check,
                          sweep_subdiff_at_infinity)
from .certificates import (Certificate, ProblemSpec, constraint_normal_cone_estimate,
                           error_bound_certificate, existence_certificate,
                           optimality_at_infinity_check, ray_existence_check,
                           recession_directions)
from .errors import *  # noqa: F401,F403
from .funcs import (Affine, Dist, ExpAffine, FuncExpr, Indicator, Max, Min, Norm, Piecewise,
                    PowerAbs, Quad, Scale, Sum, emit_func, evaluate, func_from_json,
                    func_to_json, gradient, parse_func, subdiff_at)
from .geometry import (ConeUnion, Direction, GenCone, HPolyhedron, cone_member, normal_cone_at,
                       recession_cone, sphere_grid)
from .poly_infinity import (dir_normal_cone_at_infinity, enumerate_faces, intersection_rule_check,
                            normal_cone_at_infinity, nontriviality_check)
from .reproduce import emit_bundle, reproduce_examples

__version__ = "0.1.0"
