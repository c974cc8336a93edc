"""Exact normal cones at infinity for H-polyhedra.

A point far out along a direction ``u`` in a polyhedron ``P`` sits in the
relative interior of some face ``F_J`` whose exact active set is ``J``; the
regular normal cone there is ``pos{A_i : i in J} + span(E)``.  Such far-out
points exist in direction ``u`` exactly when ``u`` is a recession direction
of ``F_J``.  Enumerating the nonempty faces therefore gives the directional
normal cone at infinity as a finite union of cones.
"""

from __future__ import annotations

import weakref
from dataclasses import dataclass, field

import numpy as np

from .errors import BoundedSetError, EmptySetError, NotMemberError
from .geometry import (ConeUnion, Direction, GenCone, HPolyhedron, activity_tol,
                       nontrivial_zero_sum, recession_cone, _dd_cone, _vec)
from .lp import solve_lp

__all__ = [
    "FaceDescriptor", "DirNeighborhood", "NontrivialityReport", "IntersectionReport",
    "enumerate_faces", "dir_normal_cone_at_infinity", "normal_cone_at_infinity",
    "nontriviality_check", "intersection_rule_check", "in_dir_neighborhood",
    "project_onto", "distance_to", "as_direction",
]

_EXACT_TOL = 1e-9


def as_direction(u) -> Direction:
    return u if isinstance(u, Direction) else Direction(u)


@dataclass(frozen=True, eq=False)
class FaceDescriptor:
    """A nonempty face ``F_J`` of a polyhedron with exact active set ``J``.

    ``witness`` lies in the relative interior: rows in ``active_set`` hold
    with equality and every other row strictly.
    """

    active_set: tuple
    witness: np.ndarray
    recession: GenCone

    @property
    def unbounded(self) -> bool:
        return not self.recession.is_zero()


@dataclass(frozen=True)
class DirNeighborhood:
    """``{z : ||z|| > R, ||z/||z|| - u|| <= delta}``."""

    u: Direction
    R: float = 100.0
    delta: float = 0.1

    def __post_init__(self):
        object.__setattr__(self, "u", as_direction(self.u))
        if not self.R > 0:
            raise ValueError("R must be positive")
        if not 0 < self.delta <= 2:
            raise ValueError("delta must lie in (0, 2]")


def in_dir_neighborhood(V: DirNeighborhood, z) -> bool:
    z = _vec(z, V.u.n)
    nz = float(np.linalg.norm(z))
    if not nz > V.R:
        return False
    return bool(np.linalg.norm(z / nz - V.u.coords) <= V.delta)


# -- face enumeration ---------------------------------------------------------

def _closed_face_point(P: HPolyhedron, J):
    mask = np.zeros(P.m, dtype=bool)
    mask[list(J)] = True
    A_eq = np.vstack([P.A[mask], P.E])
    b_eq = np.concatenate([P.b[mask], P.d])
    res = solve_lp(np.zeros(P.n), P.A[~mask], P.b[~mask], A_eq, b_eq)
    return res.ok


def _exact_witness(P: HPolyhedron, J):
    """Relative-interior point of ``F_J`` or ``None`` if ``J`` is not exact."""
    mask = np.zeros(P.m, dtype=bool)
    mask[list(J)] = True
    rest = P.A[~mask]
    if rest.shape[0] == 0:
        res = solve_lp(np.zeros(P.n), None, None,
                       np.vstack([P.A[mask], P.E]), np.concatenate([P.b[mask], P.d]))
        return res.x if res.ok else None
    n = P.n
    norms = np.linalg.norm(rest, axis=1)
    A_ub = np.hstack([rest, norms[:, None]])
    A_ub = np.vstack([A_ub, np.eye(n + 1)[n]])
    b_ub = np.concatenate([P.b[~mask], [1.0]])
    A_eq = np.hstack([np.vstack([P.A[mask], P.E]), np.zeros((len(J) + P.p, 1))])
    b_eq = np.concatenate([P.b[mask], P.d])
    c = np.zeros(n + 1)
    c[n] = -1.0
    res = solve_lp(c, A_ub, b_ub, A_eq, b_eq)
    if not res.ok:
        return None
    x, t = res.x[:n], res.x[n]
    if t <= _EXACT_TOL * (1.0 + np.linalg.norm(x)):
        return None
    return x


def _face_recession(P: HPolyhedron, J) -> GenCone:
    mask = np.zeros(P.m, dtype=bool)
    mask[list(J)] = True
    M = np.vstack([P.A[mask], -P.A[mask], P.A[~mask], P.E, -P.E])
    return _dd_cone(M, P.n)


_FACE_CACHE: "weakref.WeakKeyDictionary[HPolyhedron, tuple]" = weakref.WeakKeyDictionary()


def enumerate_faces(P: HPolyhedron) -> tuple:
    """All nonempty faces of ``P`` as :class:`FaceDescriptor` objects.

    Index sets are explored depth-first in increasing order; a branch is cut
    as soon as the closed face ``{A_J x = b_J} ∩ P`` is empty, since adding
    rows only shrinks it.  Results are cached per polyhedron object.
    """
    cached = _FACE_CACHE.get(P)
    if cached is not None:
        return cached
    P.check_caps()
    if P.is_empty():
        raise EmptySetError("polyhedron is empty")
    faces = []

    def visit(J, start):
        x = _exact_witness(P, J)
        if x is not None:
            faces.append(FaceDescriptor(tuple(J), x, _face_recession(P, J)))
        for i in range(start, P.m):
            K = J + [i]
            if _closed_face_point(P, K):
                visit(K, i + 1)

    visit([], 0)
    result = tuple(faces)
    _FACE_CACHE[P] = result
    return result


# -- cones at infinity ---------------------------------------------------------

def _face_cone(P: HPolyhedron, face: FaceDescriptor) -> GenCone:
    return GenCone(P.A[list(face.active_set)], P.E, P.n)


def dir_normal_cone_at_infinity(P: HPolyhedron, u) -> ConeUnion:
    """Directional normal cone of ``P`` at infinity in direction ``u``.

    Returns the empty union when ``u`` is not a recession direction of ``P``.

    Examples
    --------
    >>> P = HPolyhedron([[1, -2], [-2, 1], [-1, 0]], [0, 0, 0])
    >>> N = dir_normal_cone_at_infinity(P, [2, 1])
    >>> N.contains([1, -2]), N.contains([-2, 1])
    (True, False)
    """
    u = as_direction(u)
    P.check_caps()
    if P.is_empty():
        raise EmptySetError("polyhedron is empty")
    if not P.recession_contains(u.coords):
        return ConeUnion.empty(P.n)
    pieces = [_face_cone(P, F) for F in enumerate_faces(P)
              if _in_face_recession(P, F, u.coords)]
    return ConeUnion(tuple(pieces), P.n).dedup()


def _in_face_recession(P: HPolyhedron, face: FaceDescriptor, u) -> bool:
    J = list(face.active_set)
    if not P.recession_contains(u):
        return False
    AJ = P.A[J]
    if AJ.shape[0] == 0:
        return True
    return bool(np.all(np.abs(AJ @ u) <= 1e-9 * np.linalg.norm(AJ, axis=1)))


def normal_cone_at_infinity(P: HPolyhedron) -> ConeUnion:
    """Normal cone of ``P`` at infinity: cones of all unbounded faces.

    Raises
    ------
    BoundedSetError
        If ``P`` is bounded.
    """
    if recession_cone(P).is_zero():
        raise BoundedSetError("polyhedron is bounded; no points at infinity")
    pieces = [_face_cone(P, F) for F in enumerate_faces(P) if F.unbounded]
    return ConeUnion(tuple(pieces), P.n).dedup()


def relevant_faces(P: HPolyhedron, u) -> list:
    """Faces whose recession cone contains ``u`` (far-out anchors along ``u``)."""
    u = as_direction(u).coords
    return [F for F in enumerate_faces(P) if _in_face_recession(P, F, u)]


# -- structural checks ------------------------------------------------------------

def _jsonable(v):
    if isinstance(v, np.ndarray):
        return v.tolist()
    if isinstance(v, (list, tuple)):
        return [_jsonable(w) for w in v]
    return v


@dataclass(frozen=True)
class NontrivialityReport:
    lhs: bool
    rhs: bool
    witnesses: list = field(default_factory=list)

    @property
    def consistent(self) -> bool:
        return self.lhs == self.rhs

    def to_json(self):
        return {"lhs": self.lhs, "rhs": self.rhs, "consistent": self.consistent,
                "witnesses": _jsonable(self.witnesses)}


@dataclass(frozen=True)
class IntersectionReport:
    """Outcome of the intersection rule check.

    ``rule_consistent`` is False only when the qualification holds and the
    inclusion nevertheless fails.
    """

    qualification: bool
    inclusion: bool
    witnesses: list = field(default_factory=list)

    @property
    def rule_consistent(self) -> bool:
        return self.inclusion or not self.qualification

    def to_json(self):
        return {"qualification": self.qualification, "inclusion": self.inclusion,
                "rule_consistent": self.rule_consistent,
                "witnesses": _jsonable(self.witnesses)}


def _has_interior(P: HPolyhedron) -> bool:
    if P.p:
        return False
    return _exact_witness(P, []) is not None


def nontriviality_check(P: HPolyhedron, u) -> NontrivialityReport:
    """Compare "the directional cone has a nonzero element" with ``u in (bd P)^inf``.

    The right-hand side is decided without face enumeration: for a
    full-dimensional ``P`` the boundary is the union of the facets
    ``P ∩ {A_i x = b_i}``, so ``u`` is asymptotic to it iff some such facet is
    nonempty with ``A_i u = 0``.  A polyhedron with empty interior is its own
    boundary.
    """
    u = as_direction(u)
    if not P.recession_contains(u.coords):
        raise NotMemberError("direction is not a recession direction of P")
    N = dir_normal_cone_at_infinity(P, u)
    nonzero = [p for p in N.pieces if not p.is_zero()]
    lhs = bool(nonzero)
    witnesses = [p.rays()[0] for p in nonzero[:1]]
    if not _has_interior(P):
        rhs = True
    else:
        rhs = False
        for i in range(P.m):
            a = P.A[i]
            if abs(a @ u.coords) <= 1e-9 * np.linalg.norm(a) and _closed_face_point(P, [i]):
                rhs = True
                break
    return NontrivialityReport(lhs, rhs, witnesses)


def intersection_rule_check(P1: HPolyhedron, P2: HPolyhedron, u) -> IntersectionReport:
    """Check the qualification ``N1 ∩ -N2 = {0}`` and the inclusion
    ``N_{P1∩P2}(∞;u) ⊆ N1 + N2`` where ``Ni = N_{Pi}(∞;u)``.

    The inclusion is evaluated whether or not the qualification holds.
    """
    u = as_direction(u)
    P12 = P1.intersect(P2)
    if P12.is_empty():
        raise EmptySetError("intersection is empty")
    if not P12.recession_contains(u.coords):
        raise NotMemberError("direction is not a recession direction of the intersection")
    N1 = dir_normal_cone_at_infinity(P1, u)
    N2 = dir_normal_cone_at_infinity(P2, u)
    N12 = dir_normal_cone_at_infinity(P12, u)
    witnesses = []
    qualification = True
    for c1 in N1.pieces:
        for c2 in N2.pieces:
            w = nontrivial_zero_sum([c1, c2])
            if w is not None:
                qualification = False
                witnesses.append(w[0])
                break
        if not qualification:
            break
    inclusion = True
    sums = [c1.plus(c2) for c1 in N1.pieces for c2 in N2.pieces]
    for c in N12.pieces:
        if not any(s.contains_cone(c, 1e-7) for s in sums):
            inclusion = False
            bad = [r for r in c.rays() if not any(s.contains(r, 1e-7) for s in sums)]
            witnesses.extend(bad[:1])
            break
    return IntersectionReport(qualification, inclusion, witnesses)


# -- projection -------------------------------------------------------------------

def project_onto(P: HPolyhedron, x) -> np.ndarray:
    """Euclidean projection onto ``P``.

    The projection lies in the relative interior of some face and is then
    the projection onto that face's affine hull; all faces are tried and
    the nearest feasible candidate wins.
    """
    x = _vec(x, P.n)
    if P.contains(x, 0.0):
        return x.copy()
    best, best_d = None, np.inf
    for F in enumerate_faces(P):
        J = list(F.active_set)
        M = np.vstack([P.A[J], P.E])
        r = np.concatenate([P.b[J], P.d])
        if M.shape[0] == 0:
            y = x.copy()
        else:
            y = x - np.linalg.lstsq(M, M @ x - r, rcond=None)[0]
        if not P.contains(y, activity_tol(y)):
            continue
        dist = np.linalg.norm(y - x)
        if dist < best_d:
            best, best_d = y, dist
    if best is None:
        raise EmptySetError("projection failed: no feasible face candidate")
    return best


def distance_to(P: HPolyhedron, x) -> float:
    x = _vec(x, P.n)
    return float(np.linalg.norm(project_onto(P, x) - x))
