"""Recession cones and normal cones at infinity of a polyhedral cone.

The set {x : x1 <= 2 x2, x2 <= 2 x1} recedes along every direction between
its two edges.  Interior directions see only the zero normal cone; each edge
direction sees the outward normal of the face it runs along.
"""

import numpy as np

from dirinf import Direction, HPolyhedron, recession_cone
from dirinf.poly_infinity import (dir_normal_cone_at_infinity, enumerate_faces,
                                  normal_cone_at_infinity, nontriviality_check)

P = HPolyhedron([[1.0, -2.0], [-2.0, 1.0]], [0.0, 0.0])

print("recession cone generators:")
for g in recession_cone(P).generators:
    print("  ", np.round(g, 6))

print("\nfaces (active set, unbounded):")
for F in enumerate_faces(P):
    print("  ", sorted(F.active_set), F.unbounded)

for u in ([2.0, 1.0], [1.0, 2.0], [1.0, 1.0]):
    d = Direction(u)
    N = dir_normal_cone_at_infinity(P, d)
    rays = [np.round(g, 6).tolist() for C in N.pieces for g in C.generators]
    rep = nontriviality_check(P, d)
    print(f"\nu = {d}: nonzero normals {rays or 'none'}; boundary recedes along u: {rep.rhs}")

N = normal_cone_at_infinity(P)
print("\nnormal cone at infinity (all directions):")
for C in N.pieces:
    print("  generators", np.round(C.generators, 6).tolist())
