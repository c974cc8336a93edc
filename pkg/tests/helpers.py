"""Shared generators for the test suite."""

import numpy as np

from dirinf import HPolyhedron, recession_cone

CONE = HPolyhedron([[0.5, -1.0], [-2.0, 1.0]], [0.0, 0.0])  # x1/2 <= x2 <= 2 x1


def random_unbounded_polyhedron(rng, n=None, max_rows=6, equalities=True):
    """Random nonempty unbounded H-polyhedron with the origin feasible.

    Entries are rounded to one decimal so that degenerate (parallel or
    repeated) rows show up with realistic frequency.
    """
    while True:
        dim = int(rng.choice([2, 3])) if n is None else n
        m = int(rng.integers(1, max_rows + 1))
        p = int(rng.integers(0, 2)) if equalities and dim == 3 and m > 1 else 0
        A = np.round(rng.standard_normal((m - p, dim)), 1)
        b = np.round(rng.uniform(0.0, 2.0, m - p), 1)
        E = np.round(rng.standard_normal((p, dim)), 1)
        P = HPolyhedron(A, b, E, np.zeros(p), n=dim)
        if np.any(np.abs(A).sum(axis=1) == 0) or np.any(np.abs(E).sum(axis=1) == 0):
            continue
        if not recession_cone(P).is_zero():
            return P


def recession_sample(P, rng):
    """Unit recession direction: a generator, a lineality vector or a mixture."""
    C = recession_cone(P)
    gens = list(C.generators) + list(C.lineality) + [-v for v in C.lineality]
    gens = [g for g in gens if np.linalg.norm(g) > 0]
    while True:
        if rng.random() < 0.5:
            v = np.array(gens[rng.integers(len(gens))], dtype=float)
        else:
            w = rng.exponential(size=len(gens))
            v = np.sum([wi * g for wi, g in zip(w, gens)], axis=0)
        nv = np.linalg.norm(v)
        if nv > 1e-9:
            return v / nv


def cone_samples(cone_union, rng, count):
    """Points drawn from the pieces of a cone union (nonnegative combinations)."""
    out = []
    pieces = cone_union.pieces
    for _ in range(count):
        C = pieces[rng.integers(len(pieces))]
        v = np.zeros(C.n)
        for g in C.generators:
            v += rng.exponential() * g
        for g in C.lineality:
            v += rng.standard_normal() * g
        out.append(v)
    return out


# criterion number -> (passed, detail); printed in the terminal summary
ACCEPTANCE = {}


def record(key, ok, detail):
    """Store one acceptance verdict, print it and return it."""
    ACCEPTANCE[key] = (bool(ok), detail)
    print(f"criterion {key}: {'PASS' if ok else 'FAIL'}  {detail}")
    return bool(ok)
