"""Finite-dimensional polyhedral primitives.

Directions on the unit sphere, H-polyhedra, finitely generated cones and
finite unions of them, plus the point-level operations built on top:
recession cones (by double description), normal cones at a point, cone
membership and deterministic direction grids.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from .errors import DimensionLimitError, EmptySetError, NotMemberError
from .lp import solve_lp

__all__ = [
    "MAX_DIM", "MAX_ROWS", "activity_tol",
    "Direction", "HPolyhedron", "GenCone", "ConeUnion",
    "recession_cone", "normal_cone_at", "cone_member", "sphere_grid",
    "set_distance", "nearest_point", "nnls", "nontrivial_zero_sum", "cone_nonzero_with",
]

MAX_DIM = 6
MAX_ROWS = 16
_DUP_COS = 1.0 - 1e-10


def activity_tol(x) -> float:
    """Scale-aware activity band ``1e-8 * (1 + ||x||)``."""
    return 1e-8 * (1.0 + float(np.linalg.norm(x)))


def _vec(x, n=None) -> np.ndarray:
    v = np.array(x, dtype=float).ravel()
    if n is not None and v.size != n:
        raise ValueError(f"expected a vector of length {n}, got {v.size}")
    if not np.all(np.isfinite(v)):
        raise ValueError("vector entries must be finite")
    return v


def _frozen(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Direction:
    """A unit vector.  The constructor normalizes and rejects zero input."""

    coords: np.ndarray

    def __post_init__(self):
        v = _vec(self.coords)
        nrm = np.linalg.norm(v)
        if v.size == 0 or nrm == 0.0:
            raise ValueError("a direction needs a nonzero vector")
        object.__setattr__(self, "coords", _frozen(v / nrm + 0.0))

    @property
    def n(self) -> int:
        return self.coords.size

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.coords, dtype=dtype)

    def __iter__(self):
        return iter(self.coords.tolist())

    def __repr__(self):
        return f"Direction({np.array2string(self.coords, precision=6)})"

    def __eq__(self, other):
        return isinstance(other, Direction) and np.array_equal(self.coords, other.coords)

    def __hash__(self):
        return hash(self.coords.tobytes())

    def to_json(self):
        return self.coords.tolist()


@dataclass(frozen=True, eq=False)
class HPolyhedron:
    """The set ``{x | A x <= b, E x = d}``.

    Emptiness is a query (:meth:`is_empty`), not an invariant.
    """

    A: np.ndarray
    b: np.ndarray
    E: np.ndarray = None
    d: np.ndarray = None
    n: int = field(default=None)

    def __post_init__(self):
        dims = [np.atleast_2d(M).shape[1] for M in (self.A, self.E)
                if M is not None and np.size(M)]
        n = self.n if self.n is not None else (dims[0] if dims else None)
        if n is None:
            raise ValueError("dimension cannot be inferred; pass n")
        A = np.zeros((0, n)) if self.A is None or np.size(self.A) == 0 else np.atleast_2d(np.array(self.A, dtype=float))
        E = np.zeros((0, n)) if self.E is None or np.size(self.E) == 0 else np.atleast_2d(np.array(self.E, dtype=float))
        b = np.array([] if self.b is None else self.b, dtype=float).ravel()
        d = np.array([] if self.d is None else self.d, dtype=float).ravel()
        if A.shape != (b.size, n) or E.shape != (d.size, n):
            raise ValueError("inconsistent polyhedron dimensions")
        for M in (A, E, b, d):
            if not np.all(np.isfinite(M)):
                raise ValueError("polyhedron data must be finite")
        object.__setattr__(self, "n", int(n))
        for name, M in (("A", A), ("b", b), ("E", E), ("d", d)):
            object.__setattr__(self, name, _frozen(M))

    # -- constructors ---------------------------------------------------
    @classmethod
    def free(cls, n: int) -> "HPolyhedron":
        """The whole space."""
        return cls(None, None, n=n)

    @classmethod
    def box(cls, lo, hi) -> "HPolyhedron":
        lo, hi = _vec(lo), _vec(hi)
        n = lo.size
        return cls(np.vstack([np.eye(n), -np.eye(n)]), np.concatenate([hi, -lo]))

    @classmethod
    def from_json(cls, doc) -> "HPolyhedron":
        return cls(doc.get("A") or None, doc.get("b") or None,
                   doc.get("E") or None, doc.get("d") or None, n=doc.get("n"))

    def to_json(self):
        return {"A": self.A.tolist(), "b": self.b.tolist(),
                "E": self.E.tolist(), "d": self.d.tolist(), "n": self.n}

    # -- queries ----------------------------------------------------------
    @property
    def m(self) -> int:
        return self.b.size

    @property
    def p(self) -> int:
        return self.d.size

    def contains(self, x, tol=None) -> bool:
        x = _vec(x, self.n)
        tol = activity_tol(x) if tol is None else tol
        return bool(np.all(self.A @ x - self.b <= tol) and np.all(np.abs(self.E @ x - self.d) <= tol))

    def intersect(self, other: "HPolyhedron") -> "HPolyhedron":
        if other.n != self.n:
            raise ValueError("dimension mismatch")
        return HPolyhedron(np.vstack([self.A, other.A]), np.concatenate([self.b, other.b]),
                           np.vstack([self.E, other.E]), np.concatenate([self.d, other.d]), n=self.n)

    def scaled_rows(self, D) -> "HPolyhedron":
        """Replace ``(A, b)`` by ``(DA, Db)`` for a positive diagonal ``D``."""
        D = _vec(D, self.m)
        return HPolyhedron(self.A * D[:, None], self.b * D, self.E, self.d, n=self.n)

    @cached_property
    def feasible_point(self):
        if self.m == 0 and self.p == 0:
            return np.zeros(self.n)
        res = solve_lp(np.zeros(self.n), self.A, self.b, self.E, self.d)
        return res.x if res.ok else None

    def is_empty(self) -> bool:
        return self.feasible_point is None

    def check_caps(self):
        if self.n > MAX_DIM or self.m + self.p > MAX_ROWS:
            raise DimensionLimitError(
                f"exact engine caps: n<={MAX_DIM}, rows<={MAX_ROWS} (got n={self.n}, rows={self.m + self.p})")

    def recession_contains(self, u, tol=1e-9) -> bool:
        """Membership of ``u`` in ``{u | A u <= 0, E u = 0}`` (row-scaled band)."""
        u = _vec(u, self.n)
        ra = np.linalg.norm(self.A, axis=1) if self.m else np.zeros(0)
        re = np.linalg.norm(self.E, axis=1) if self.p else np.zeros(0)
        scale = max(1.0, float(np.linalg.norm(u)))
        return bool(np.all(self.A @ u <= tol * ra * scale) and np.all(np.abs(self.E @ u) <= tol * re * scale))


def nnls(M, v, max_iter=None):
    """Lawson-Hanson active-set solution of ``min ||M x - v||, x >= 0``.

    Returns ``(x, residual)`` with the residual recomputed from ``x``.
    """
    M = np.asarray(M, dtype=float)
    v = np.asarray(v, dtype=float)
    m, k = M.shape
    x = np.zeros(k)
    passive = np.zeros(k, dtype=bool)
    tol = 10.0 * np.finfo(float).eps * max(m, k) * max(1.0, np.abs(M).sum(axis=0).max(initial=0.0))
    max_iter = 3 * k + 10 if max_iter is None else max_iter
    w = M.T @ (v - M @ x)
    for _ in range(max_iter):
        free = ~passive & (w > tol)
        if not free.any():
            break
        j = int(np.argmax(np.where(free, w, -np.inf)))
        passive[j] = True
        for _inner in range(k + 1):
            s = np.zeros(k)
            s[passive] = np.linalg.lstsq(M[:, passive], v, rcond=None)[0]
            if np.all(s[passive] > 0):
                break
            bad = passive & (s <= 0)
            alpha = np.min(x[bad] / (x[bad] - s[bad]))
            x = x + alpha * (s - x)
            passive &= x > tol
            x[~passive] = 0.0
        x = np.where(passive, s, 0.0)
        w = M.T @ (v - M @ x)
    return x, float(np.linalg.norm(M @ x - v))


def _orthobasis(vectors, n, rtol=1e-10) -> np.ndarray:
    M = np.asarray(vectors, dtype=float).reshape(-1, n)
    if M.shape[0] == 0:
        return np.zeros((0, n))
    _, s, vt = np.linalg.svd(M, full_matrices=False)
    if s.size == 0 or s[0] == 0:
        return np.zeros((0, n))
    keep = s > rtol * max(1.0, s[0])
    B = vt[keep]
    # sign convention for reproducibility: first nonzero entry positive
    for i in range(B.shape[0]):
        k = np.nonzero(np.abs(B[i]) > 1e-12)[0]
        if k.size and B[i, k[0]] < 0:
            B[i] = -B[i]
    return B


@dataclass(frozen=True, eq=False)
class GenCone:
    """The convex cone ``pos{generators} + span{lineality}``.

    Stored canonically: lineality as an orthonormal basis, generators
    projected onto its orthogonal complement, normalized to unit length, with
    near-duplicates merged and opposite pairs promoted to lineality.
    """

    generators: np.ndarray
    lineality: np.ndarray
    n: int

    def __post_init__(self):
        n = int(self.n)
        G = np.asarray(self.generators, dtype=float).reshape(-1, n)
        L = _orthobasis(self.lineality, n)
        while True:
            if L.shape[0]:
                G = G - (G @ L.T) @ L
            norms = np.linalg.norm(G, axis=1)
            G = G[norms > 1e-12]
            G = G / np.linalg.norm(G, axis=1)[:, None] if G.shape[0] else G
            kept = []
            for g in G:
                if all(float(g @ h) <= _DUP_COS for h in kept):
                    kept.append(g)
            opposite = [g for g in kept if any(float(g @ h) < -_DUP_COS for h in kept)]
            G = np.array(kept).reshape(-1, n)
            if not opposite:
                break
            L = _orthobasis(np.vstack([L, np.array(opposite)]), n)
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "generators", _frozen(G))
        object.__setattr__(self, "lineality", _frozen(L))

    @classmethod
    def zero(cls, n: int) -> "GenCone":
        return cls(np.zeros((0, n)), np.zeros((0, n)), n)

    @classmethod
    def ray(cls, v) -> "GenCone":
        v = _vec(v)
        return cls(v[None, :], np.zeros((0, v.size)), v.size)

    @classmethod
    def span(cls, vectors, n) -> "GenCone":
        return cls(np.zeros((0, n)), vectors, n)

    def is_zero(self) -> bool:
        return self.generators.shape[0] == 0 and self.lineality.shape[0] == 0

    def rays(self) -> np.ndarray:
        """All generators as one-sided rays (lineality split into +/-)."""
        return np.vstack([self.generators, self.lineality, -self.lineality])

    def neg(self) -> "GenCone":
        return GenCone(-self.generators, self.lineality, self.n)

    def plus(self, other: "GenCone") -> "GenCone":
        return GenCone(np.vstack([self.generators, other.generators]),
                       np.vstack([self.lineality, other.lineality]), self.n)

    def distance(self, v) -> float:
        v = _vec(v, self.n)
        L, G = self.lineality, self.generators
        # generators are stored orthogonal to the lineality space
        if L.shape[0]:
            v = v - L.T @ (L @ v)
        if G.shape[0] == 0:
            return float(np.linalg.norm(v))
        if G.shape[0] == 1:
            return float(np.linalg.norm(v - max(float(G[0] @ v), 0.0) * G[0]))
        _, res = nnls(G.T, v)
        return float(res)

    def contains(self, v, tol=1e-9) -> bool:
        v = _vec(v, self.n)
        return self.distance(v) <= tol * float(np.linalg.norm(v))

    def contains_cone(self, other: "GenCone", tol=1e-9) -> bool:
        return all(self.contains(r, tol) for r in other.rays())

    def equals(self, other: "GenCone", tol=1e-9) -> bool:
        return self.contains_cone(other, tol) and other.contains_cone(self, tol)

    def to_json(self):
        return {"generators": self.generators.tolist(), "lineality": self.lineality.tolist()}

    def __repr__(self):
        return f"GenCone(gens={self.generators.round(6).tolist()}, lin={self.lineality.round(6).tolist()})"


@dataclass(frozen=True, eq=False)
class ConeUnion:
    """A finite union of :class:`GenCone`.  No pieces means the empty set."""

    pieces: tuple
    n: int

    def __post_init__(self):
        object.__setattr__(self, "pieces", tuple(self.pieces))

    @classmethod
    def empty(cls, n: int) -> "ConeUnion":
        return cls((), n)

    @classmethod
    def zero(cls, n: int) -> "ConeUnion":
        return cls((GenCone.zero(n),), n)

    def is_empty(self) -> bool:
        return len(self.pieces) == 0

    def is_zero(self) -> bool:
        """True for the set ``{0}`` (nonempty with only trivial pieces)."""
        return bool(self.pieces) and all(p.is_zero() for p in self.pieces)

    def has_nonzero(self) -> bool:
        return any(not p.is_zero() for p in self.pieces)

    def contains(self, v, tol=1e-9) -> bool:
        return any(p.contains(v, tol) for p in self.pieces)

    def union(self, other: "ConeUnion") -> "ConeUnion":
        return ConeUnion(self.pieces + other.pieces, self.n)

    def neg(self) -> "ConeUnion":
        return ConeUnion(tuple(p.neg() for p in self.pieces), self.n)

    def dedup(self, tol=1e-9) -> "ConeUnion":
        kept = []
        for p in self.pieces:
            if not any(q.equals(p, tol) for q in kept):
                kept.append(p)
        return ConeUnion(tuple(kept), self.n)

    def nonzero_part(self) -> "ConeUnion":
        return ConeUnion(tuple(p for p in self.pieces if not p.is_zero()), self.n)

    def to_json(self):
        return {"pieces": [p.to_json() for p in self.pieces], "empty": self.is_empty()}

    def __repr__(self):
        return f"ConeUnion({list(self.pieces)})"


def cone_member(C, v, tol=1e-9) -> bool:
    """Membership of ``v`` in a :class:`GenCone` or :class:`ConeUnion`.

    ``v`` belongs when its Euclidean distance to the cone (per piece, by
    nonnegative least squares) is at most ``tol * ||v||``; the relative band
    keeps the answer invariant under positive scaling of ``v``.
    """
    return C.contains(v, tol)


# -- recession cone by double description --------------------------------------

def _dd_cone(M: np.ndarray, n: int, tol=1e-9) -> GenCone:
    """Generators of ``{u | M u <= 0}``."""
    L = np.eye(n)
    R = np.zeros((0, n))
    done = []
    for a in M:
        na = np.linalg.norm(a)
        if na < 1e-14:
            continue
        a = a / na
        aL = L @ a if L.shape[0] else np.zeros(0)
        if aL.size and np.max(np.abs(aL)) > tol:
            k = int(np.argmax(np.abs(aL)))
            l0 = L[k] if aL[k] < 0 else -L[k]
            al0 = float(a @ l0)
            rest = np.delete(L, k, axis=0)
            rest = rest - np.outer(rest @ a / al0, l0)
            R = R - np.outer(R @ a / al0, l0) if R.shape[0] else R
            R = np.vstack([R, l0[None, :]])
            L = _orthobasis(rest, n)
        else:
            s = R @ a
            plus, zero, minus = R[s > tol], R[np.abs(s) <= tol], R[s < -tol]
            sp, sm = s[s > tol], s[s < -tol]
            Dm = np.array(done).reshape(-1, n)
            tight = np.abs(R @ Dm.T) <= tol if Dm.shape[0] else np.zeros((R.shape[0], 0), bool)
            idx_p = np.nonzero(s > tol)[0]
            idx_m = np.nonzero(s < -tol)[0]
            new = []
            for ip, p, vp in zip(idx_p, plus, sp):
                for im, q, vq in zip(idx_m, minus, sm):
                    common = tight[ip] & tight[im]
                    adjacent = True
                    for r in range(R.shape[0]):
                        if r in (ip, im):
                            continue
                        if np.all(tight[r][common]):
                            adjacent = False
                            break
                    if adjacent:
                        new.append(vp * q - vq * p)
            R = np.vstack([zero, minus] + ([np.array(new)] if new else []))
        done.append(a)
        if L.shape[0] and R.shape[0]:
            R = R - (R @ L.T) @ L
        if R.shape[0]:
            nr = np.linalg.norm(R, axis=1)
            R = R[nr > 1e-12] / nr[nr > 1e-12][:, None]
    cone = GenCone(R, L, n)
    # prune redundant rays (safety net for tolerance effects)
    G = list(cone.generators)
    i = 0
    while i < len(G):
        others = GenCone(np.array(G[:i] + G[i + 1:]).reshape(-1, n), cone.lineality, n)
        if len(G) > 1 and others.contains(G[i], 1e-9):
            G.pop(i)
        else:
            i += 1
    return GenCone(np.array(G).reshape(-1, n), cone.lineality, n)


def recession_cone(P: HPolyhedron) -> GenCone:
    """Generators of ``{u | A u <= 0, E u = 0}``, the asymptotic cone of ``P``.

    Raises
    ------
    EmptySetError
        If ``P`` has no points.
    DimensionLimitError
        If ``n > 6`` or more than 16 rows.
    """
    P.check_caps()
    if P.is_empty():
        raise EmptySetError("recession cone of an empty polyhedron")
    M = np.vstack([P.A, P.E, -P.E])
    return _dd_cone(M, P.n)


def normal_cone_at(P: HPolyhedron, x) -> GenCone:
    """Normal cone of the convex polyhedron ``P`` at ``x``.

    ``pos`` of the active inequality rows plus the span of the equality rows;
    for convex polyhedra the regular and limiting cones coincide.
    """
    x = _vec(x, P.n)
    tau = activity_tol(x)
    slack = P.A @ x - P.b
    if np.any(slack > tau) or np.any(np.abs(P.E @ x - P.d) > tau):
        raise NotMemberError("point violates a constraint beyond the activity band")
    active = np.abs(slack) <= tau
    return GenCone(P.A[active], P.E, P.n)


def sphere_grid(n: int, resolution: int, seed: int = 0) -> list:
    """Deterministic list of directions covering the unit sphere.

    ``n = 2`` uses uniform angles, ``n = 3`` a Fibonacci lattice and ``n >= 4``
    seeded Gaussian samples.  ``n = 1`` returns both unit vectors.
    """
    if resolution < 4:
        raise ValueError("resolution must be at least 4")
    if n == 1:
        return [Direction([1.0]), Direction([-1.0])]
    if n == 2:
        ang = 2.0 * np.pi * np.arange(resolution) / resolution
        pts = np.column_stack([np.cos(ang), np.sin(ang)])
    elif n == 3:
        k = np.arange(resolution) + 0.5
        z = 1.0 - 2.0 * k / resolution
        r = np.sqrt(1.0 - z * z)
        phi = np.pi * (1.0 + math.sqrt(5.0)) * k
        pts = np.column_stack([r * np.cos(phi), r * np.sin(phi), z])
    else:
        rng = np.random.default_rng(seed)
        pts = rng.standard_normal((resolution, n))
    pts[np.abs(pts) < 1e-15] = 0.0
    return [Direction(p) for p in pts]


# -- set distances and cone LPs ----------------------------------------------

def nearest_point(x, vertices=None, cone: GenCone | None = None):
    """Nearest point of ``conv(vertices) + cone`` to ``x`` and its distance.

    Solved as a nonnegative least-squares problem with the convexity
    constraint appended as a heavily weighted row; the returned point is
    feasible by construction (weights renormalized), so the distance is an
    upper bound accurate to roughly ``1e-9``.
    """
    x = _vec(x)
    n = x.size
    V = np.zeros((0, n)) if vertices is None else np.asarray(vertices, dtype=float).reshape(-1, n)
    R = cone.rays() if cone is not None else np.zeros((0, n))
    if V.shape[0] == 0:
        if R.shape[0] == 0:
            if cone is None:
                return None, math.inf
            return np.zeros(n), float(np.linalg.norm(x))
        coef, _ = nnls(R.T, x)
        y = R.T @ coef
        return y, float(np.linalg.norm(y - x))
    if V.shape[0] == 1 and R.shape[0] == 0:
        return V[0].copy(), float(np.linalg.norm(x - V[0]))
    w = 1e4 * (1.0 + float(np.abs(V).max()) + float(np.abs(x).max()))
    k = V.shape[0]
    M = np.zeros((n + 1, k + R.shape[0]))
    M[:n, :k] = V.T
    M[:n, k:] = R.T
    M[n, :k] = w
    coef, _ = nnls(M, np.concatenate([x, [w]]))
    lam = coef[:k]
    s = lam.sum()
    lam = lam / s if s > 0 else np.full(k, 1.0 / k)
    y = V.T @ lam + R.T @ coef[k:]
    return y, float(np.linalg.norm(y - x))


def set_distance(x, vertices=None, cone: GenCone | None = None) -> float:
    """Euclidean distance from ``x`` to ``conv(vertices) + cone``."""
    return nearest_point(x, vertices, cone)[1]


def _cone_vars(cones):
    """Variable layout for LPs over sums of cones: one block per cone."""
    blocks, start = [], 0
    for C in cones:
        g, l = C.generators.shape[0], C.lineality.shape[0]
        blocks.append((start, g, l))
        start += g + l
    return blocks, start


def _block_matrix(C, n, nv, block):
    start, g, l = block
    B = np.zeros((n, nv))
    B[:, start:start + g] = C.generators.T
    B[:, start + g:start + g + l] = C.lineality.T
    return B


def nontrivial_zero_sum(cones, tol=1e-9):
    """Look for ``xi_i`` in ``cones[i]``, not all zero, with ``sum xi_i = 0``.

    Returns the list of ``xi_i`` (normalized to unit max-norm) or ``None``.
    With two cones this decides ``C1 ∩ (-C2) != {0}``.
    """
    cones = [C for C in cones]
    if not cones:
        return None
    n = cones[0].n
    active = [i for i, C in enumerate(cones) if not C.is_zero()]
    if len(active) == 0:
        return None
    if len(active) == 1:
        C = cones[active[0]]
        if C.lineality.shape[0]:
            return None  # a lone cone sums to zero only trivially
        return None
    blocks, nv = _cone_vars(cones)
    nonneg = np.zeros(nv, dtype=bool)
    for start, g, _ in blocks:
        nonneg[start:start + g] = True
    mats = [_block_matrix(C, n, nv, bl) for C, bl in zip(cones, blocks)]
    A_eq = sum(mats)
    A_ub = np.vstack([np.vstack([B, -B]) for B in mats])
    b_ub = np.ones(A_ub.shape[0])
    for k in active[:-1]:
        for j in range(n):
            for sgn in (1.0, -1.0):
                res = solve_lp(-sgn * mats[k][j], A_ub, b_ub, A_eq, np.zeros(n), nonneg)
                if res.ok and -res.fun > tol:
                    return [B @ res.x for B in mats]
    return None


def cone_nonzero_with(C: GenCone, eq_rows, target_rows, tol=1e-9):
    """Find ``v`` in ``C`` with ``eq_rows @ v = 0`` and ``target_rows @ v != 0``.

    Returns such a ``v`` (max-norm at most one) or ``None``.
    """
    n = C.n
    blocks, nv = _cone_vars([C])
    if nv == 0:
        return None
    nonneg = np.zeros(nv, dtype=bool)
    nonneg[:blocks[0][1]] = True
    B = _block_matrix(C, n, nv, blocks[0])
    eq = np.asarray(eq_rows, dtype=float).reshape(-1, n)
    tgt = np.asarray(target_rows, dtype=float).reshape(-1, n)
    A_ub = np.vstack([B, -B])
    b_ub = np.ones(2 * n)
    A_eq = eq @ B
    for row in tgt:
        for sgn in (1.0, -1.0):
            res = solve_lp(-sgn * (row @ B), A_ub, b_ub, A_eq, np.zeros(eq.shape[0]), nonneg)
            if res.ok and -res.fun > tol:
                return B @ res.x
    return None
