"""Sampled subdifferentials at infinity of f(x) = exp(-x1) + (x2 - x1)^2.

Along u = (1, 1)/sqrt(2) the exponential fades. A constant lateral offset s
keeps the valley gradient at 2(s, -s), so the limiting clusters spread along
that line, and growing offsets add the singular rays +-(1, -1).  Along
(1, 0) and (0, 1) the gradient grows without bound and only singular rays
survive.  On (0, 1) the second ray (-1, 0) comes from exp(-x1) when x1 drifts
negative.
"""

import numpy as np

from dirinf import (EstimatorParams, ExpAffine, PowerAbs, Sum, estimate_dir_subdiff,
                    lipschitz_at_infinity_test)

f = Sum((ExpAffine([-1.0, 0.0]), PowerAbs([-1.0, 1.0], 0.0, 2.0)))
p = EstimatorParams()

for u in ([1.0, 1.0], [1.0, 0.0], [0.0, 1.0]):
    A = estimate_dir_subdiff(f, u, p)
    cents = sorted(np.round(c.centroid, 3).tolist() for c in A.bounded_clusters)
    span = (cents[0], cents[-1]) if cents else None
    rays = [np.round(g, 3).tolist() for C in A.singular_rays.pieces for g in C.generators]
    print(f"u = {A.direction}")
    print(f"  {len(cents)} limiting clusters, extremes {span}")
    print(f"  singular rays {rays or 'none'}; stability {A.diagnostics['stability']:.2f}")
    lip = lipschitz_at_infinity_test(f, u, p)
    print(f"  Lipschitz at infinity: {lip.status}")
