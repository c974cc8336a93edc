"""Structured extended-real-valued functions and point subdifferentials.

A function is a small expression tree.  Atoms are smooth or simple
nonsmooth pieces (affine, quadratic form, exponential of an affine map,
``|<c,x>+beta|^p``, the Euclidean norm, distance to a polyhedron); combinators
are sums, positive scalings, pointwise max/min, indicators of polyhedra and a
two-branch piecewise definition split by a hyperplane.

Subgradients far out along a direction can be astronomically large (think
``exp(t)``), so point subdifferentials are kept in log-scaled form: every
vertex is ``exp(s) * v`` with ``s`` stored separately.  Callers that only
need moderate values use :meth:`Piece.vertices`.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import EvalOverflow, NotInDomainError, ParseError, UnsupportedError
from .geometry import (GenCone, HPolyhedron, activity_tol, normal_cone_at,
                       set_distance, _vec)
from .poly_infinity import project_onto

__all__ = [
    "FuncExpr", "Affine", "Quad", "ExpAffine", "PowerAbs", "Norm", "Dist",
    "Sum", "Scale", "Max", "Min", "Indicator", "Piecewise",
    "Piece", "SubdiffPointSet",
    "evaluate", "value", "subdiff_at", "gradient", "parse_func", "emit_func",
    "func_to_json", "func_from_json", "domain_polyhedron", "has_indicator", "tie_tol",
    "OVERFLOW_LIMIT",
]

OVERFLOW_LIMIT = 1e300
_EXP_CAP = 690.0  # exp(690) ~ 1e299


def tie_tol(vmax: float) -> float:
    """Active-branch band ``1e-9 * (1 + |max value|)``."""
    return 1e-9 * (1.0 + abs(vmax))


# -- point subdifferential containers --------------------------------------------

@dataclass(frozen=True, eq=False)
class Piece:
    """``conv{exp(logs[i]) * V[i]} + cone`` (cone may be ``None``)."""

    V: np.ndarray
    logs: np.ndarray
    cone: GenCone | None = None

    @property
    def n(self) -> int:
        return self.V.shape[1]

    def log_norms(self) -> np.ndarray:
        with np.errstate(divide="ignore"):
            return self.logs + np.log(np.linalg.norm(self.V, axis=1))

    def unit_dirs(self) -> np.ndarray:
        nr = np.linalg.norm(self.V, axis=1)
        out = np.zeros_like(self.V)
        nz = nr > 0
        out[nz] = self.V[nz] / nr[nz, None]
        return out

    def vertices(self) -> np.ndarray:
        """Plain vertices; entries overflow to ``inf`` for huge scales."""
        with np.errstate(over="ignore", invalid="ignore"):
            return self.V * np.exp(np.minimum(self.logs, 709.0))[:, None]

    def scaled(self, log_alpha: float) -> "Piece":
        return Piece(self.V, self.logs + log_alpha, self.cone)

    def contains(self, v, tol=1e-9) -> bool:
        return set_distance(v, self.vertices(), self.cone) <= tol * (1.0 + np.linalg.norm(v))


def _piece(vectors, logs=None, cone=None) -> Piece:
    V = np.atleast_2d(np.asarray(vectors, dtype=float))
    logs = np.zeros(V.shape[0]) if logs is None else np.asarray(logs, dtype=float).reshape(-1)
    return Piece(V, logs, cone)


def _normalize_logs(V, logs):
    """Rescale rows so that ``max |V[i]|`` is 1 (or 0) with logs adjusted."""
    m = np.abs(V).max(axis=1)
    nz = m > 0
    V = V.copy()
    logs = logs.copy()
    V[nz] /= m[nz, None]
    logs[nz] += np.log(m[nz])
    logs[~nz] = 0.0
    return V, logs


def _dedup_rows(V, logs):
    keep = []
    for i in range(V.shape[0]):
        dup = False
        for j in keep:
            if abs(logs[i] - logs[j]) < 1e-12 and np.allclose(V[i], V[j], rtol=0, atol=1e-14):
                dup = True
                break
        if not dup:
            keep.append(i)
    return V[keep], logs[keep]


def _add_pieces(p: Piece, q: Piece) -> Piece:
    if p.cone is not None and q.cone is not None:
        cone = p.cone.plus(q.cone)
    else:
        cone = p.cone if p.cone is not None else q.cone
    rows, logs = [], []
    for (v, s), (w, r) in itertools.product(zip(p.V, p.logs), zip(q.V, q.logs)):
        if not np.any(v):
            rows.append(w)
            logs.append(r)
            continue
        if not np.any(w):
            rows.append(v)
            logs.append(s)
            continue
        top = max(s, r)
        rows.append(v * math.exp(s - top) + w * math.exp(r - top))
        logs.append(top)
    V, L = _normalize_logs(np.array(rows), np.array(logs))
    V, L = _dedup_rows(V, L)
    return Piece(V, L, cone)


@dataclass(frozen=True, eq=False)
class SubdiffPointSet:
    """A finite union of pieces ``conv(vertices) + cone``.

    Outer estimate of the limiting subdifferential at a point; exact for
    smooth functions, maxima of smooth functions and smooth plus polyhedral
    indicator.
    """

    pieces: tuple
    n: int

    @property
    def polytopes(self) -> list:
        return [p.vertices() for p in self.pieces]

    def contains(self, v, tol=1e-9) -> bool:
        v = _vec(v, self.n)
        return any(p.contains(v, tol) for p in self.pieces)

    def all_vertices(self) -> np.ndarray:
        return np.vstack([p.vertices() for p in self.pieces])

    def __repr__(self):
        return f"SubdiffPointSet({[p.vertices().round(9).tolist() for p in self.pieces]})"


# -- expression tree --------------------------------------------------------------

class FuncExpr:
    """Base class.  Equality and hashing follow the canonical JSON form."""

    dim: int | None = None

    def __eq__(self, other):
        return isinstance(other, FuncExpr) and emit_func(self) == emit_func(other)

    def __hash__(self):
        return hash(emit_func(self))

    def __repr__(self):
        return f"{type(self).__name__}({emit_func(self)})"

    # operator sugar for building expressions in scripts
    def __add__(self, other):
        return Sum((self, other))

    def __rmul__(self, alpha):
        return Scale(float(alpha), self)


def _arr(x):
    a = np.array(x, dtype=float)
    a.setflags(write=False)
    return a


class Affine(FuncExpr):
    """``x -> <c, x> + beta``."""

    def __init__(self, c, beta=0.0):
        self.c = _arr(_vec(c))
        self.beta = float(beta)
        self.dim = self.c.size


class Quad(FuncExpr):
    """``x -> x^T Q x``."""

    def __init__(self, Q):
        Q = np.atleast_2d(np.array(Q, dtype=float))
        if Q.shape[0] != Q.shape[1]:
            raise ValueError("Q must be square")
        self.Q = _arr(Q)
        self.dim = Q.shape[0]


class ExpAffine(FuncExpr):
    """``x -> exp(<c, x> + beta)``."""

    def __init__(self, c, beta=0.0):
        self.c = _arr(_vec(c))
        self.beta = float(beta)
        self.dim = self.c.size


class PowerAbs(FuncExpr):
    """``x -> |<c, x> + beta|^p`` with ``p >= 1``."""

    def __init__(self, c, beta=0.0, p=1.0):
        if not p >= 1:
            raise ValueError("power_abs needs p >= 1")
        self.c = _arr(_vec(c))
        self.beta = float(beta)
        self.p = float(p)
        self.dim = self.c.size


class Norm(FuncExpr):
    """Euclidean norm; the dimension comes from the argument."""

    def __init__(self, n=None):
        self.dim = None if n is None else int(n)


class Dist(FuncExpr):
    """Euclidean distance to a polyhedron."""

    def __init__(self, P: HPolyhedron):
        self.P = P
        self.dim = P.n


class Indicator(FuncExpr):
    """0 on the polyhedron, ``+inf`` off it."""

    def __init__(self, P: HPolyhedron):
        self.P = P
        self.dim = P.n


def _common_dim(children):
    dims = {c.dim for c in children if c.dim is not None}
    if len(dims) > 1:
        raise ValueError(f"children have different dimensions {sorted(dims)}")
    return dims.pop() if dims else None


class _Combinator(FuncExpr):
    def __init__(self, children):
        children = tuple(children)
        if not children:
            raise ValueError(f"{type(self).__name__} needs at least one child")
        self.children = children
        self.dim = _common_dim(children)


class Sum(_Combinator):
    """Pointwise sum."""


class Max(_Combinator):
    """Pointwise maximum."""


class Min(_Combinator):
    """Pointwise minimum."""


class Scale(FuncExpr):
    """``alpha * f`` with ``alpha > 0``."""

    def __init__(self, alpha, f: FuncExpr):
        if not alpha > 0:
            raise ValueError("scale needs alpha > 0")
        self.alpha = float(alpha)
        self.f = f
        self.dim = f.dim


class Piecewise(FuncExpr):
    """``left`` where ``<c, x> + beta < 0``, ``right`` elsewhere.

    The branches are expected to agree on the hyperplane so that the
    function is continuous.
    """

    def __init__(self, c, beta, left: FuncExpr, right: FuncExpr):
        self.c = _arr(_vec(c))
        self.beta = float(beta)
        self.left = left
        self.right = right
        self.dim = _common_dim((Affine(self.c), left, right))


def has_indicator(f: FuncExpr) -> bool:
    if isinstance(f, Indicator):
        return True
    if isinstance(f, _Combinator):
        return any(has_indicator(c) for c in f.children)
    if isinstance(f, Scale):
        return has_indicator(f.f)
    if isinstance(f, Piecewise):
        return has_indicator(f.left) or has_indicator(f.right)
    return False


# -- evaluation ---------------------------------------------------------------------

def _exp(z):
    if z > _EXP_CAP:
        raise EvalOverflow(f"exp({z:.6g}) exceeds the representable range")
    return math.exp(z)


def value(f: FuncExpr, x) -> float:
    """Value in the extended reals; ``inf`` only comes from indicators.

    Raises
    ------
    EvalOverflow
        When a finite intermediate value would exceed ``1e300``.
    """
    x = np.asarray(x, dtype=float)
    if isinstance(f, Affine):
        return float(f.c @ x + f.beta)
    if isinstance(f, Quad):
        v = float(x @ f.Q @ x)
        _check(v, finite_parts=True)
        return v
    if isinstance(f, ExpAffine):
        return _exp(float(f.c @ x + f.beta))
    if isinstance(f, PowerAbs):
        z = abs(float(f.c @ x + f.beta))
        if z > 0 and f.p * math.log(z) > _EXP_CAP:
            raise EvalOverflow("power_abs value exceeds the representable range")
        return z ** f.p
    if isinstance(f, Norm):
        return float(np.linalg.norm(x))
    if isinstance(f, Dist):
        return float(np.linalg.norm(project_onto(f.P, x) - x))
    if isinstance(f, Indicator):
        return 0.0 if f.P.contains(x) else math.inf
    if isinstance(f, Scale):
        inner = value(f.f, x)
        v = f.alpha * inner
        _check(v, finite_parts=math.isfinite(inner))
        return v
    if isinstance(f, Sum):
        vals = [value(c, x) for c in f.children]
        total = sum(vals)
        _check(total, finite_parts=all(math.isfinite(v) for v in vals))
        return total
    if isinstance(f, Max):
        return max(value(c, x) for c in f.children)
    if isinstance(f, Min):
        return min(value(c, x) for c in f.children)
    if isinstance(f, Piecewise):
        branch = f.left if float(f.c @ x + f.beta) < 0 else f.right
        return value(branch, x)
    raise TypeError(f"unknown expression node {type(f).__name__}")


def _check(v, finite_parts=False):
    if (math.isfinite(v) or finite_parts) and abs(v) > OVERFLOW_LIMIT:
        raise EvalOverflow(f"value {v:.3e} exceeds {OVERFLOW_LIMIT:g}")
    if math.isnan(v):
        raise EvalOverflow("value is undefined (inf - inf)")


def evaluate(f: FuncExpr, x) -> float:
    """Public evaluation: like :func:`value` plus the ``1e300`` overflow flag.

    >>> evaluate(Sum((Quad([[1, 0], [0, 0]]), ExpAffine([0, 1]))), [0.0, 0.0])
    1.0
    """
    v = value(f, x)
    _check(v)
    return v


# -- point subdifferentials ----------------------------------------------------------

def _dist_ball_polytope(G: np.ndarray, n: int) -> Piece:
    """Polytope containing ``pos(G) ∩ unit ball`` for unit rows ``G``."""
    if G.shape[0] == 0:
        return _piece(np.zeros((1, n)))
    if G.shape[0] == 1:
        return _piece(np.vstack([np.zeros(n), G[0]]))
    sigma = set_distance(np.zeros(n), G)
    sigma_lb = sigma * (1.0 - 1e-6) - 1e-12
    if sigma_lb <= 1e-6:
        corners = np.array(list(itertools.product((-1.0, 1.0), repeat=n)))
        return _piece(corners)
    return _piece(np.vstack([np.zeros(n), G / sigma_lb]))


def _sub(f: FuncExpr, x: np.ndarray) -> list:
    """List of pieces; ``x`` is assumed to be in the domain."""
    n = x.size
    if isinstance(f, Affine):
        return [_piece(f.c)]
    if isinstance(f, Quad):
        return [_piece((f.Q + f.Q.T) @ x)]
    if isinstance(f, ExpAffine):
        return [_piece(f.c, [float(f.c @ x + f.beta)])]
    if isinstance(f, PowerAbs):
        z = float(f.c @ x + f.beta)
        band = activity_tol(x) * max(1.0, float(np.linalg.norm(f.c)))
        if f.p == 1.0:
            if abs(z) <= band:
                return [_piece(np.vstack([f.c, -f.c]))]
            return [_piece(math.copysign(1.0, z) * f.c)]
        if z == 0.0:
            return [_piece(np.zeros(n))]
        s = math.log(f.p) + (f.p - 1.0) * math.log(abs(z))
        return [_piece(math.copysign(1.0, z) * f.c, [s])]
    if isinstance(f, Norm):
        nx = float(np.linalg.norm(x))
        if nx <= 1e-12:
            return [_piece(np.array(list(itertools.product((-1.0, 1.0), repeat=n))))]
        return [_piece(x / nx)]
    if isinstance(f, Dist):
        P = f.P
        y = project_onto(P, x)
        d = float(np.linalg.norm(x - y))
        if d > activity_tol(x):
            return [_piece((x - y) / d)]
        tau = activity_tol(x)
        active = np.abs(P.A @ x - P.b) <= tau
        rows = [a / np.linalg.norm(a) for a in P.A[active] if np.linalg.norm(a) > 0]
        for e in P.E:
            ne = np.linalg.norm(e)
            if ne > 0:
                rows.extend([e / ne, -e / ne])
        return [_dist_ball_polytope(np.array(rows).reshape(-1, n), n)]
    if isinstance(f, Indicator):
        return [_piece(np.zeros(n), cone=normal_cone_at(f.P, x))]
    if isinstance(f, Scale):
        la = math.log(f.alpha)
        return [p.scaled(la) for p in _sub(f.f, x)]
    if isinstance(f, Sum):
        carriers = [c for c in f.children if has_indicator(c)]
        if len(carriers) > 1:
            raise UnsupportedError("sum of two indicator-bearing terms; intersect the polyhedra instead")
        acc = None
        for c in f.children:
            parts = _sub(c, x)
            if acc is None:
                acc = parts
            else:
                acc = [_add_pieces(p, q) for p in acc for q in parts]
        return acc
    if isinstance(f, (Max, Min)):
        if isinstance(f, Max) and any(has_indicator(c) for c in f.children):
            raise UnsupportedError("max over indicator-bearing branches")
        vals = [value(c, x) for c in f.children]
        best = max(vals) if isinstance(f, Max) else min(vals)
        band = tie_tol(best)
        act = [c for c, v in zip(f.children, vals) if abs(v - best) <= band]
        parts = [p for c in act for p in _sub(c, x)]
        if isinstance(f, Min):
            return parts
        V = np.vstack([p.V for p in parts])
        L = np.concatenate([p.logs for p in parts])
        V, L = _dedup_rows(*_normalize_logs(V, L))
        return [Piece(V, L, None)]
    if isinstance(f, Piecewise):
        if has_indicator(f.left) or has_indicator(f.right):
            raise UnsupportedError("piecewise branches may not carry indicators")
        z = float(f.c @ x + f.beta)
        band = activity_tol(x) * max(1.0, float(np.linalg.norm(f.c)))
        if z < -band:
            return _sub(f.left, x)
        if z > band:
            return _sub(f.right, x)
        parts = _sub(f.left, x) + _sub(f.right, x)
        V = np.vstack([p.V for p in parts])
        L = np.concatenate([p.logs for p in parts])
        V, L = _dedup_rows(*_normalize_logs(V, L))
        return [Piece(V, L, None)]
    raise TypeError(f"unknown expression node {type(f).__name__}")


def subdiff_at(f: FuncExpr, x) -> SubdiffPointSet:
    """Outer estimate of the limiting subdifferential of ``f`` at ``x``.

    Raises
    ------
    NotInDomainError
        If ``f(x) = +inf``.
    UnsupportedError
        For sums of two indicator-bearing terms or max/piecewise over
        indicator-bearing branches.

    Examples
    --------
    >>> S = subdiff_at(Max((Affine([1.0]), Affine([-1.0]))), [0.0])
    >>> sorted(S.all_vertices().ravel().tolist())
    [-1.0, 1.0]
    """
    x = np.asarray(x, dtype=float).ravel()
    if f.dim is not None and x.size != f.dim:
        raise ValueError(f"expected a point of dimension {f.dim}, got {x.size}")
    try:
        v = value(f, x)
    except EvalOverflow:
        v = 0.0  # finite but huge; subgradients are still representable
    if v == math.inf:
        raise NotInDomainError("point is outside the domain")
    return SubdiffPointSet(tuple(_sub(f, x)), x.size)


def subdiff_pieces(f: FuncExpr, x) -> list:
    """Log-scaled pieces without the domain check (internal fast path)."""
    return _sub(f, np.asarray(x, dtype=float))


def gradient(f: FuncExpr, x) -> np.ndarray:
    """Gradient of ``f`` at ``x`` when the subdifferential is a single point."""
    S = subdiff_at(f, x)
    V = S.all_vertices()
    if len(S.pieces) != 1 or V.shape[0] != 1 or S.pieces[0].cone is not None:
        raise UnsupportedError("function is not differentiable here")
    return V[0]


def domain_polyhedron(f: FuncExpr, n: int) -> HPolyhedron | None:
    """Polyhedron equal to ``dom f``, or ``None`` when ``dom f`` is everything."""
    if isinstance(f, Indicator):
        return f.P
    if isinstance(f, Scale):
        return domain_polyhedron(f.f, n)
    if isinstance(f, (Sum, Max)):
        doms = [d for d in (domain_polyhedron(c, n) for c in f.children) if d is not None]
        if not doms:
            return None
        D = doms[0]
        for other in doms[1:]:
            D = D.intersect(other)
        return D
    if isinstance(f, Min):
        doms = [domain_polyhedron(c, n) for c in f.children]
        if any(d is None for d in doms):
            return None
        raise UnsupportedError("domain of a min of indicator-bearing terms is a union of polyhedra")
    if isinstance(f, Piecewise):
        if has_indicator(f.left) or has_indicator(f.right):
            raise UnsupportedError("piecewise branches may not carry indicators")
        return None
    return None


# -- JSON ---------------------------------------------------------------------------

_POLY_KEYS = {"A", "b", "E", "d", "n"}


def _poly_to_json(P: HPolyhedron):
    doc = {"A": P.A.tolist(), "b": P.b.tolist()}
    if P.p:
        doc["E"] = P.E.tolist()
        doc["d"] = P.d.tolist()
    if P.m == 0 and P.p == 0:
        doc["n"] = P.n
    return doc


def func_to_json(f: FuncExpr):
    """Canonical JSON-able document; sum/max/min children sorted."""
    if isinstance(f, Affine):
        return {"affine": {"c": f.c.tolist(), "beta": f.beta}}
    if isinstance(f, Quad):
        return {"quad": {"Q": f.Q.tolist()}}
    if isinstance(f, ExpAffine):
        return {"exp_affine": {"c": f.c.tolist(), "beta": f.beta}}
    if isinstance(f, PowerAbs):
        return {"power_abs": {"c": f.c.tolist(), "beta": f.beta, "p": f.p}}
    if isinstance(f, Norm):
        return {"norm": {} if f.dim is None else {"n": f.dim}}
    if isinstance(f, Dist):
        return {"dist": _poly_to_json(f.P)}
    if isinstance(f, Indicator):
        return {"indicator": _poly_to_json(f.P)}
    if isinstance(f, Scale):
        return {"scale": {"alpha": f.alpha, "f": func_to_json(f.f)}}
    if isinstance(f, Piecewise):
        return {"piecewise": {"guard": {"c": f.c.tolist(), "beta": f.beta},
                              "left": func_to_json(f.left), "right": func_to_json(f.right)}}
    for cls, tag in ((Sum, "sum"), (Max, "max"), (Min, "min")):
        if isinstance(f, cls):
            docs = [func_to_json(c) for c in f.children]
            docs.sort(key=_canonical)
            return {tag: docs}
    raise TypeError(f"unknown expression node {type(f).__name__}")


def _canonical(doc) -> str:
    return json.dumps(doc, sort_keys=True, separators=(",", ":"), allow_nan=False)


def emit_func(f: FuncExpr) -> str:
    """Canonical, byte-stable JSON text for ``f``."""
    return _canonical(func_to_json(f))


def _need(doc, key, loc):
    if key not in doc:
        raise ParseError(f"missing key '{key}'", loc)
    return doc[key]


def _only(doc, allowed, loc):
    if not isinstance(doc, dict):
        raise ParseError("expected an object", loc)
    extra = sorted(set(doc) - set(allowed))
    if extra:
        raise ParseError(f"unknown key '{extra[0]}'", f"{loc}.{extra[0]}")


def _num_vec(v, loc):
    if not isinstance(v, list) or not all(isinstance(a, (int, float)) and not isinstance(a, bool) for a in v):
        raise ParseError("expected an array of numbers", loc)
    arr = np.array(v, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise ParseError("numbers must be finite", loc)
    return arr


def _num_mat(v, loc):
    if not isinstance(v, list):
        raise ParseError("expected an array of arrays", loc)
    rows = [_num_vec(r, f"{loc}[{i}]") for i, r in enumerate(v)]
    if len({r.size for r in rows}) > 1:
        raise ParseError("ragged matrix", loc)
    return np.array(rows, dtype=float) if rows else np.zeros((0, 0))


def _num(v, loc):
    if not isinstance(v, (int, float)) or isinstance(v, bool) or not math.isfinite(v):
        raise ParseError("expected a finite number", loc)
    return float(v)


def poly_from_json(doc, loc="$") -> HPolyhedron:
    """Parse ``{"A", "b", "E", "d"}`` (optional ``"n"``) into a polyhedron."""
    _only(doc, _POLY_KEYS, loc)
    A = _num_mat(doc.get("A", []), f"{loc}.A")
    b = _num_vec(doc.get("b", []), f"{loc}.b")
    E = _num_mat(doc.get("E", []), f"{loc}.E")
    d = _num_vec(doc.get("d", []), f"{loc}.d")
    n = doc.get("n")
    if n is not None and (not isinstance(n, int) or isinstance(n, bool) or n < 1):
        raise ParseError("n must be a positive integer", f"{loc}.n")
    try:
        return HPolyhedron(A if A.size else None, b if b.size else None,
                           E if E.size else None, d if d.size else None, n=n)
    except ValueError as exc:
        raise ParseError(str(exc), loc) from None


_TAGS = {"affine", "quad", "exp_affine", "power_abs", "norm", "dist", "sum",
         "scale", "max", "min", "indicator", "piecewise"}


def func_from_json(doc, loc="$") -> FuncExpr:
    if not isinstance(doc, dict) or len(doc) != 1:
        raise ParseError("expected an object with exactly one tag", loc)
    (tag, body), = doc.items()
    here = f"{loc}.{tag}"
    if tag not in _TAGS:
        raise ParseError(f"unknown tag '{tag}'", here)
    try:
        if tag in ("affine", "exp_affine"):
            _only(body, {"c", "beta"}, here)
            c = _num_vec(_need(body, "c", here), f"{here}.c")
            beta = _num(body.get("beta", 0.0), f"{here}.beta")
            return (Affine if tag == "affine" else ExpAffine)(c, beta)
        if tag == "power_abs":
            _only(body, {"c", "beta", "p"}, here)
            p = _num(body.get("p", 1.0), f"{here}.p")
            if p < 1:
                raise ParseError("p must be at least 1", f"{here}.p")
            return PowerAbs(_num_vec(_need(body, "c", here), f"{here}.c"),
                            _num(body.get("beta", 0.0), f"{here}.beta"), p)
        if tag == "quad":
            _only(body, {"Q"}, here)
            Q = _num_mat(_need(body, "Q", here), f"{here}.Q")
            if Q.ndim != 2 or Q.shape[0] != Q.shape[1] or Q.size == 0:
                raise ParseError("Q must be a nonempty square matrix", f"{here}.Q")
            return Quad(Q)
        if tag == "norm":
            _only(body, {"n"}, here)
            return Norm(body.get("n"))
        if tag in ("dist", "indicator"):
            P = poly_from_json(body, here)
            return Dist(P) if tag == "dist" else Indicator(P)
        if tag == "scale":
            _only(body, {"alpha", "f"}, here)
            alpha = _num(_need(body, "alpha", here), f"{here}.alpha")
            if alpha <= 0:
                raise ParseError("alpha must be positive", f"{here}.alpha")
            return Scale(alpha, func_from_json(_need(body, "f", here), f"{here}.f"))
        if tag == "piecewise":
            _only(body, {"guard", "left", "right"}, here)
            guard = _need(body, "guard", here)
            _only(guard, {"c", "beta"}, f"{here}.guard")
            return Piecewise(_num_vec(_need(guard, "c", f"{here}.guard"), f"{here}.guard.c"),
                             _num(guard.get("beta", 0.0), f"{here}.guard.beta"),
                             func_from_json(_need(body, "left", here), f"{here}.left"),
                             func_from_json(_need(body, "right", here), f"{here}.right"))
        # sum / max / min
        if not isinstance(body, list) or not body:
            raise ParseError("expected a nonempty array of functions", here)
        kids = [func_from_json(c, f"{here}[{i}]") for i, c in enumerate(body)]
        return {"sum": Sum, "max": Max, "min": Min}[tag](kids)
    except ValueError as exc:
        if isinstance(exc, ParseError):
            raise
        raise ParseError(str(exc), here) from None


def parse_func(text) -> FuncExpr:
    """Parse JSON text (or an already-decoded document) into a :class:`FuncExpr`.

    >>> emit_func(parse_func('{"sum": [{"norm": {}}, {"affine": {"c": [1, 0]}}]}'))
    '{"sum":[{"affine":{"beta":0.0,"c":[1.0,0.0]}},{"norm":{}}]}'
    """
    if isinstance(text, (str, bytes)):
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ParseError(f"invalid JSON: {exc.msg}", "$") from None
    else:
        doc = text
    return func_from_json(doc)
