"""Where can minimizing sequences escape?

f(x) = x1^2 + exp(x2) has infimum 0 but no minimizer: sequences escape along
(0, -1), where every subgradient tends to 0.  The existence sweep finds that
direction, and the optimality check along it agrees.  Replacing exp(x2) by
x2^2 makes the problem coercive, and every direction is excluded.
"""

import warnings

import numpy as np

from dirinf import ExpAffine, HPolyhedron, Quad, Sum
from dirinf.certificates import (ProblemSpec, existence_certificate,
                                 optimality_at_infinity_check, ray_existence_check)
from dirinf.errors import GridTooCoarse

warnings.simplefilter("ignore", GridTooCoarse)
free = HPolyhedron.free(2)
f = Sum((Quad([[1.0, 0.0], [0.0, 0.0]]), ExpAffine([0.0, 1.0])))
ps = ProblemSpec(f, free)

cert = existence_certificate(ps, grid=16)
print("existence for x1^2 + exp(x2):", cert.status)
print("  escape directions:", cert.oracle["witness_directions"])
print("  empirical infimum:", round(cert.oracle["empirical_inf"], 6))

opt = optimality_at_infinity_check(ps, [0.0, -1.0])
print("optimality at infinity along (0, -1):", opt.status, "-", opt.summary)

ray = ray_existence_check(ps, [0.0, 0.0], [1.0, 0.0])
print("minimizer on the ray from 0 along (1, 0):", ray.status, "at", ray.oracle["best_point"])

coercive = ProblemSpec(Quad(np.eye(2)), free)
print("existence for |x|^2:", existence_certificate(coercive, grid=16).status)
