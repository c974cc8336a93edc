"""Error bounds at infinity for sublevel sets.

For g(x) = x1 - 1 the distance to S = {g <= 0} is exactly [g]_+, so the
bound holds with constant 1.  Doubling g halves the constant.  A constraint
that is identically zero fails: 0 is a limiting subgradient everywhere.
"""

import warnings

from dirinf import Affine, HPolyhedron
from dirinf.certificates import error_bound_certificate
from dirinf.errors import GridTooCoarse

warnings.simplefilter("ignore", GridTooCoarse)
free = HPolyhedron.free(2)

for label, g in (("x1 - 1", Affine([1.0, 0.0], -1.0)),
                 ("2 x1 - 2", Affine([2.0, 0.0], -2.0)),
                 ("0", Affine([0.0, 0.0]))):
    cert = error_bound_certificate(g, free, grid=16)
    a, a2 = cert.oracle["alpha_hat"], cert.oracle["alpha_hat_2R"]
    fmt = lambda v: "n/a" if v is None else f"{v:.6f}"
    print(f"g = {label:8s} {cert.status:6s} alpha(R) = {fmt(a)}, alpha(2R) = {fmt(a2)}")
