"""Certificates for optimality, existence and error bounds at infinity.

Every check sweeps (or receives) recession directions ``u`` of the
constraint set and decides, per direction,

* the *qualification*: the sampled singular set of the objective meets the
  negated exact normal cone at infinity only at zero;
* the *exclusion condition*: ``0`` is not in the sampled limiting set plus the
  exact normal cone.

Two routes are evaluated and both are reported.  The *theorem route* uses
the separate estimate of ``f`` and the exact cone; it is only valid when the
qualification holds.  The *direct route* estimates ``f + indicator(Omega)``
as a whole with face-aware sampling and needs no qualification.  The route
used for the verdict is the theorem route when its qualification holds and
the direct route otherwise.

All results are sufficient conditions: ``Fails`` means the hypotheses could
not be verified, not that the conclusion is false.
"""

from __future__ import annotations

import itertools
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .asymptotics import (EstimatorParams, SubdiffApprox, Verdict, estimate_dir_subdiff,
                          lipschitz_at_infinity_test, singular_intersects_neg)
from .errors import (DomainUnreachable, EmptySetError, GridTooCoarse, InfeasibleError,
                     LipschitzPreconditionFailed, NotInDomainError, NotMemberError,
                     NoViolatingSamples, QualificationUnknown, UnsupportedError)
from .funcs import (Affine, FuncExpr, Indicator, Max, Sum, func_from_json, func_to_json,
                    has_indicator, poly_from_json)
from .geometry import (ConeUnion, Direction, GenCone, HPolyhedron, _orthobasis, nnls,
                       recession_cone, sphere_grid)
from .lp import solve_lp
from .oracle import empirical_error_bound, ray_line_search, region_inf_search, safe_value
from .poly_infinity import as_direction, dir_normal_cone_at_infinity

__all__ = [
    "Certificate", "DirectionReport", "ProblemSpec", "LCQReport", "recession_directions",
    "optimality_at_infinity_check", "existence_certificate", "ray_existence_check",
    "constraint_normal_cone_estimate", "error_bound_certificate",
]

_MAX_COMBOS = 4096
_MIN_STABILITY = 0.5


# -- data types ---------------------------------------------------------------------

@dataclass
class ProblemSpec:
    """``min f`` over ``Omega``, optionally with constraint functions.

    ``g`` holds inequality constraint functions ``g_i <= 0`` and ``h``
    equality constraint functions ``h_j = 0``; they are only consumed by the
    constraint-set routines.
    """

    f: FuncExpr
    Omega: HPolyhedron
    g: tuple = ()
    h: tuple = ()

    def __post_init__(self):
        self.g, self.h = tuple(self.g), tuple(self.h)
        n = self.Omega.n
        for k, fn in enumerate((self.f,) + self.g + self.h):
            if fn.dim is not None and fn.dim != n:
                raise ValueError(f"function {k} has dimension {fn.dim}, constraint set has {n}")
        if self.Omega.is_empty():
            raise EmptySetError("constraint set is empty")

    @property
    def n(self) -> int:
        return self.Omega.n

    def to_json(self):
        doc = {"objective": func_to_json(self.f), "omega": _poly_doc(self.Omega)}
        if self.g:
            doc["g"] = [func_to_json(c) for c in self.g]
        if self.h:
            doc["h"] = [func_to_json(c) for c in self.h]
        return doc

    @classmethod
    def from_json(cls, doc, loc="$"):
        from .errors import ParseError
        if not isinstance(doc, dict):
            raise ParseError("expected an object", loc)
        extra = set(doc) - {"objective", "omega", "g", "h"}
        if extra:
            raise ParseError(f"unknown keys {sorted(extra)}", loc)
        if "objective" not in doc:
            raise ParseError("missing key 'objective'", loc)
        f = func_from_json(doc["objective"], f"{loc}.objective")
        if "omega" in doc:
            Omega = poly_from_json(doc["omega"], f"{loc}.omega")
        elif f.dim is not None:
            Omega = HPolyhedron.free(f.dim)
        else:
            raise ParseError("cannot infer the dimension; give 'omega'", loc)
        gs = [func_from_json(c, f"{loc}.g[{i}]") for i, c in enumerate(doc.get("g", []))]
        hs = [func_from_json(c, f"{loc}.h[{i}]") for i, c in enumerate(doc.get("h", []))]
        return cls(f, Omega, tuple(gs), tuple(hs))


def _poly_doc(P: HPolyhedron):
    from .funcs import _poly_to_json
    return _poly_to_json(P)


def _vec_json(v):
    if v is None:
        return None
    a = np.asarray(v, dtype=float).ravel()
    a = np.where(np.abs(a) < 1e-300, 0.0, a) + 0.0
    return [float(x) for x in a]


@dataclass
class DirectionReport:
    """Per-direction outcome.

    ``qualification`` and ``condition`` are verdicts (``Holds`` / ``Fails`` /
    ``Unknown``) for the theorem route; ``condition`` is the exclusion
    ``0 not in df(inf; u) + N(inf; u)``.  ``direct`` is the exclusion verdict
    of the direct route (``None`` when unavailable).  ``excluded`` is the
    verdict of the route named by ``route``.
    """

    u: Direction
    qualification: str
    condition: str
    direct: str | None
    route: str
    excluded: str
    stability: float
    witnesses: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.excluded == Verdict.HOLDS and self.stability >= _MIN_STABILITY

    def to_json(self):
        return {"u": self.u.to_json(), "qualification": self.qualification,
                "condition": self.condition, "direct": self.direct, "route": self.route,
                "excluded": self.excluded, "stability": self.stability,
                "witnesses": self.witnesses}


@dataclass
class Certificate:
    """Verdict of a theorem-level check with its per-direction evidence."""

    theorem: str
    status: str
    direction_reports: list
    summary: str
    params: EstimatorParams
    oracle: dict = field(default_factory=dict)
    grid: int | None = None
    warnings: list = field(default_factory=list)

    def to_json(self):
        return {"theorem": self.theorem, "status": self.status,
                "directions": [r.to_json() for r in self.direction_reports],
                "summary": self.summary, "oracle": self.oracle, "grid": self.grid,
                "warnings": list(self.warnings), "params": self.params.to_json()}


# -- cone-and-set arithmetic ------------------------------------------------------------

def _decompose(V, C: GenCone | None, K: GenCone | None):
    """Nearest-to-zero point of ``conv(V) + C + K`` split into ``(xi, eta)``.

    ``xi`` lies in ``conv(V) + C`` and ``eta`` in ``K``; returns
    ``(xi, eta, ||xi + eta||)``.
    """
    V = np.asarray(V, dtype=float)
    n = V.shape[1]
    RC = C.rays() if C is not None else np.zeros((0, n))
    RK = K.rays() if K is not None else np.zeros((0, n))
    k, c = V.shape[0], RC.shape[0]
    w = 1e4 * (1.0 + float(np.abs(V).max()))
    M = np.zeros((n + 1, k + c + RK.shape[0]))
    M[:n, :k] = V.T
    M[:n, k:k + c] = RC.T
    M[:n, k + c:] = RK.T
    M[n, :k] = w
    coef, _ = nnls(M, np.concatenate([np.zeros(n), [w]]))
    lam = coef[:k]
    s = lam.sum()
    lam = lam / s if s > 0 else np.full(k, 1.0 / k)
    xi = V.T @ lam + RC.T @ coef[k:k + c]
    eta = RK.T @ coef[k + c:]
    return xi, eta, float(np.linalg.norm(xi + eta))


def _unique_items(items):
    """Drop repeated ``(vertices, cone)`` items (clusters keep every member)."""
    out, seen = [], []
    for V, C in items:
        key = np.round(np.sort(V, axis=0), 9)
        if any(K.shape == key.shape and np.array_equal(K, key)
               and (C is None) == (D is None) and (C is None or C.equals(D, 1e-9))
               for K, D in seen):
            continue
        seen.append((key, C))
        out.append((V, C))
    return out


def _zero_in_sum(items, N: ConeUnion | None, tol):
    """Witness ``(xi, eta)`` with ``|xi + eta| <= tol``, ``xi`` in an item and
    ``eta`` in a piece of ``N``; ``None`` when there is none."""
    cones = [None] if N is None else list(N.pieces)
    for V, C in _unique_items(items):
        for K in cones:
            xi, eta, d = _decompose(V, C, K)
            if d <= tol:
                return xi, eta, d
    return None


def _items_minkowski(lists):
    """Minkowski sums of one item from each list (vertex products)."""
    out = [None]
    for items in lists:
        nxt = []
        for acc in out:
            for V, C in items:
                if acc is None:
                    nxt.append((V, C))
                    continue
                V0, C0 = acc
                W = (V0[:, None, :] + V[None, :, :]).reshape(-1, V.shape[1])
                if W.shape[0] > 64:
                    W = np.unique(np.round(W, 12), axis=0)
                if C0 is not None and C is not None:
                    Cs = C0.plus(C)
                else:
                    Cs = C0 if C0 is not None else C
                nxt.append((W, Cs))
        out = nxt
        if len(out) > _MAX_COMBOS:
            raise UnsupportedError("too many cluster combinations")
    return [o for o in out if o is not None]


# -- direction grids ----------------------------------------------------------------

def recession_directions(Omega: HPolyhedron, resolution: int = 16, seed: int = 0) -> list:
    """Unit directions of ``rec(Omega)`` used to discretize "for all u".

    A sphere grid of the span of the recession cone, filtered to the cone,
    plus the cone's generators and both signs of its lineality directions.
    Full-dimensional cones use the coordinate axes as the grid frame so that
    axis directions are always sampled.
    """
    rec = recession_cone(Omega)
    n = Omega.n
    if rec.is_zero():
        return []
    basis = _orthobasis(np.vstack([rec.generators, rec.lineality]), n)
    k = basis.shape[0]
    if k == n:
        basis = np.eye(n)
    if k == 1:
        cand = [basis[0], -basis[0]]
    else:
        cand = [basis.T @ d.coords for d in sphere_grid(k, resolution, seed)]
    cand += list(rec.generators) + list(rec.lineality) + list(-rec.lineality)
    out = []
    for v in cand:
        v = np.asarray(v, dtype=float)
        v = v / np.linalg.norm(v)
        if not rec.contains(v, 1e-9):
            continue
        if any(float(v @ w.coords) > 1.0 - 1e-9 for w in out):
            continue
        out.append(Direction(v))
    return out


def _neighbour_disagreements(reports):
    """Pairs of nearest-neighbour directions with different verdicts."""
    bad = []
    if len(reports) < 2:
        return bad
    U = np.array([r.u.coords for r in reports])
    for i, r in enumerate(reports):
        cos = U @ U[i]
        cos[i] = -np.inf
        j = int(np.argmax(cos))
        if reports[j].excluded != r.excluded and (j, i) not in bad:
            bad.append((i, j))
    return bad


# -- per-direction analysis --------------------------------------------------------------

def _direct_function(f: FuncExpr, Omega: HPolyhedron):
    if Omega.m == 0 and Omega.p == 0:
        return f
    if has_indicator(f):
        return None
    return Sum((f, Indicator(Omega)))


def _estimate(f, u, p, n):
    try:
        return estimate_dir_subdiff(f, u, p, n=n)
    except DomainUnreachable:
        return None


def _exclusion(approx: SubdiffApprox | None, N, tol):
    """Exclusion verdict and witness for ``0 not in approx + N``."""
    if approx is None:
        return Verdict.UNKNOWN, None
    wit = _zero_in_sum(approx.items(), N, tol)
    if wit is not None:
        return Verdict.FAILS, wit
    if approx.inconclusive:
        return Verdict.UNKNOWN, None
    return Verdict.HOLDS, None


def _analyze(f: FuncExpr, Omega: HPolyhedron, u: Direction, p: EstimatorParams) -> DirectionReport:
    n = Omega.n
    N = dir_normal_cone_at_infinity(Omega, u)
    if N.is_empty():
        raise NotMemberError(f"direction {u} is not a recession direction of the constraint set")
    tol = p.eps_c
    witnesses = {}

    A = _estimate(f, u, p, n)
    if A is None:
        qual = Verdict.UNKNOWN
    else:
        w = singular_intersects_neg(A.singular_rays, N)
        if w is not None:
            qual = Verdict.FAILS
            witnesses["singular"] = _vec_json(w)
        elif A.inconclusive:
            qual = Verdict.UNKNOWN
        else:
            qual = Verdict.HOLDS
    cond, wit = _exclusion(A, N, tol)
    if wit is not None:
        witnesses["theorem_xi"] = _vec_json(wit[0])
        witnesses["theorem_eta"] = _vec_json(wit[1])

    g = _direct_function(f, Omega)
    if g is None:
        B, direct = None, None
    else:
        B = A if g is f else _estimate(g, u, p, n)
        direct, wit = _exclusion(B, None, tol)
        if wit is not None:
            witnesses["direct_xi"] = _vec_json(wit[0])

    if qual == Verdict.HOLDS:
        route, excluded, stab = "theorem", cond, A.stability
    elif direct is not None and B is not None:
        route, excluded, stab = "direct", direct, B.stability
    else:
        route, excluded = "none", Verdict.UNKNOWN
        stab = A.stability if A is not None else 0.0
    return DirectionReport(u, qual, cond, direct, route, excluded, float(stab), witnesses)


# -- optimality at infinity -------------------------------------------------------------

def optimality_at_infinity_check(ps: ProblemSpec, u, p: EstimatorParams | None = None) -> Certificate:
    """Necessary condition at infinity along one recession direction.

    ``Holds`` means ``0`` lies (within ``eps_c``) in the limiting set plus the
    normal cone, so minimizing sequences may escape along ``u``.  ``Fails``
    means the inclusion fails and ``u`` is excluded: no minimizing sequence
    escapes along ``u``.

    Raises
    ------
    NotMemberError
        If ``u`` is not a recession direction of ``Omega``.
    QualificationUnknown
        If neither route yields a usable estimate.
    """
    p = p or EstimatorParams()
    u = as_direction(u)
    rep = _analyze(ps.f, ps.Omega, u, p)
    if rep.route == "none":
        raise QualificationUnknown(f"singular estimate unusable along {u}")
    if rep.excluded == Verdict.HOLDS:
        status = Verdict.FAILS
        summary = f"0 is not in the sum along {u}: direction excluded ({rep.route} route)"
    elif rep.excluded == Verdict.FAILS:
        status = Verdict.HOLDS
        summary = f"0 is in the sum along {u}: direction not excluded ({rep.route} route)"
    else:
        status = Verdict.UNKNOWN
        summary = f"estimate along {u} is unstable"
    oracle = {}
    x0 = ps.Omega.feasible_point
    if x0 is not None:
        t, v, unbounded = ray_line_search(ps.f, x0, u)
        oracle = {"ray_start": _vec_json(x0), "ray_best_t": t, "ray_best_value": v,
                  "ray_unbounded": unbounded}
        if unbounded:
            summary += "; values decrease without bound along u (lower boundedness violated)"
    return Certificate("necessary_optimality", status, [rep], summary, p, oracle)


# -- existence, coercivity, weak sharpness --------------------------------------------------

def _shell_points(Omega: HPolyhedron, r: float, count: int, rng) -> np.ndarray:
    """Points of ``Omega`` with norm ``r`` along seeded random rays."""
    n = Omega.n
    x0 = np.asarray(Omega.feasible_point, dtype=float)
    if Omega.p:
        _, s, vt = np.linalg.svd(Omega.E, full_matrices=True)
        rank = int(np.sum(s > 1e-12 * max(1.0, s[0])))
        Nb = vt[rank:].T
    else:
        Nb = np.eye(n)
    if Nb.shape[1] == 0:
        return np.zeros((0, n))
    rec = recession_cone(Omega)
    dirs = [Nb @ z for z in rng.standard_normal((count, Nb.shape[1]))]
    dirs += list(rec.generators) + list(rec.lineality) + list(-rec.lineality)
    out = []
    for d in dirs:
        d = d / np.linalg.norm(d)
        b = float(x0 @ d)
        disc = b * b - float(x0 @ x0) + r * r
        if disc < 0:
            continue
        x = x0 + (-b + math.sqrt(disc)) * d
        if Omega.contains(x, 1e-9 * (1 + r)):
            out.append(x)
    return np.array(out).reshape(-1, n)


def _existence_oracle(ps: ProblemSpec, p: EstimatorParams):
    f, Omega = ps.f, ps.Omega
    inner = region_inf_search(f, Omega, float(p.ladder[1]), seed=p.seed)
    outer = region_inf_search(f, Omega, 10.0 * float(p.ladder[-1]), seed=p.seed)
    fstar = min(inner.empirical_inf, outer.empirical_inf)
    rng = np.random.default_rng(p.seed)
    shell_inf = []
    for r in p.ladder[-3:]:
        pts = _shell_points(Omega, float(r), 256, rng)
        vals = [safe_value(f, x) for x in pts]
        shell_inf.append(min(vals) if vals else math.inf)
    coercive = all(a < b or (a == b == math.inf) for a, b in zip(shell_inf, shell_inf[1:]))
    ratios = []
    xs = inner.best_point
    for r in p.ladder[1:4]:
        for x in _shell_points(Omega, float(r), 128, rng):
            fx = safe_value(f, x)
            d = float(np.linalg.norm(x - xs))
            if d > 0:
                ratios.append((fx - fstar) / d if math.isfinite(fx) else math.inf)
    pct5 = float(np.percentile(ratios, 5)) if ratios else None
    return {
        "empirical_inf": fstar,
        "argmin_estimate": _vec_json(inner.best_point),
        "attained": inner.attained,
        "inf_matches_large_ball": bool(inner.empirical_inf <= outer.empirical_inf
                                       + 1e-6 * (1.0 + abs(outer.empirical_inf))),
        "escape_detected": inner.escape_detected,
        "escape_direction": None if inner.escape_direction is None else inner.escape_direction.to_json(),
        "shell_inf": [float(v) for v in shell_inf],
        "coercive_surrogate": coercive,
        "weak_sharp_ratio_p5": pct5,
    }


def existence_certificate(ps: ProblemSpec, grid: int = 16, p: EstimatorParams | None = None,
                          oracle: bool = True) -> Certificate:
    """Sweep recession directions for a nonempty compact solution set.

    ``Holds`` when every grid direction is excluded with stability at least
    0.5; the oracle then records the empirical infimum, a coercivity
    surrogate (shell infima increasing over the last three rungs) and the
    5th percentile of ``(f - f*) / dist(x, argmin)``.  ``Fails`` lists the
    directions where ``0`` lies in the sum.  A :class:`GridTooCoarse`
    warning is issued when nearest-neighbour directions disagree.
    """
    p = p or EstimatorParams()
    dirs = recession_directions(ps.Omega, grid, p.seed)
    if not dirs:
        cert = Certificate("existence", Verdict.HOLDS, [], "constraint set is bounded", p, grid=grid)
        if oracle:
            cert.oracle = _existence_oracle(ps, p)
        return cert
    reports = [_analyze(ps.f, ps.Omega, u, p) for u in dirs]
    failing = [r for r in reports if r.excluded == Verdict.FAILS]
    if failing:
        status = Verdict.FAILS
        summary = "0 lies in the sum along " + ", ".join(str(r.u) for r in failing)
    elif all(r.passed for r in reports):
        status = Verdict.HOLDS
        summary = f"all {len(reports)} directions excluded: solution set nonempty and compact"
    else:
        status = Verdict.UNKNOWN
        summary = "some directions are unstable or undecided"
    cert = Certificate("existence", status, reports, summary, p, grid=grid)
    cert.oracle["witness_directions"] = [r.u.to_json() for r in failing]
    for i, j in _neighbour_disagreements(reports):
        msg = f"verdicts differ between {reports[i].u} and {reports[j].u}"
        cert.warnings.append(msg)
        warnings.warn(msg, GridTooCoarse, stacklevel=2)
    if oracle:
        try:
            cert.oracle.update(_existence_oracle(ps, p))
        except InfeasibleError as exc:
            cert.oracle["error"] = str(exc)
    return cert


# -- ray existence ----------------------------------------------------------------------------

def _ray_polyhedron(xbar, u: np.ndarray) -> HPolyhedron:
    n = u.size
    _, _, vt = np.linalg.svd(u[None, :])
    E = vt[1:]
    return HPolyhedron(-u[None, :], [-float(u @ xbar)], E, E @ xbar)


def ray_existence_check(ps: ProblemSpec, xbar, u, p: EstimatorParams | None = None) -> Certificate:
    """Existence of a minimizer over ``Omega ∩ (xbar + pos u)``.

    The theorem route is the pair of conditions "no nonzero singular element
    orthogonal to ``u``" and "no limiting element orthogonal to ``u``", i.e.
    the general check with the ray's normal cone ``u^⊥``.  A 1-D line search
    over the ray confirms; if it finds values decreasing without bound the
    certificate fails because lower boundedness is violated.

    Raises
    ------
    NotMemberError, NotInDomainError
        If ``xbar`` is outside ``Omega`` or ``dom f``.
    """
    p = p or EstimatorParams()
    u = as_direction(u)
    xbar = np.asarray(xbar, dtype=float)
    if not ps.Omega.contains(xbar):
        raise NotMemberError("xbar is not in the constraint set")
    if not math.isfinite(safe_value(ps.f, xbar)):
        raise NotInDomainError("xbar is not in the domain of f")
    uc = u.coords
    Om = ps.Omega.intersect(_ray_polyhedron(xbar, uc))
    t_max, capped = 1e4, False
    Au = ps.Omega.A @ uc if ps.Omega.m else np.zeros(0)
    if Au.size and np.any(Au > 1e-12):
        slack = ps.Omega.b - ps.Omega.A @ xbar
        t_max = min(t_max, float(np.min(slack[Au > 1e-12] / Au[Au > 1e-12])))
        capped = True
    t, v, unbounded = ray_line_search(ps.f, xbar, uc, t_max=max(t_max, 0.0))
    # a decrease up to a constraint-imposed end point is not unboundedness
    unbounded = unbounded and not capped
    oracle = {"best_t": t, "best_point": _vec_json(xbar + t * uc), "best_value": v,
              "unbounded": unbounded}
    if not Om.recession_contains(uc):
        return Certificate("ray_existence", Verdict.HOLDS, [],
                           "the ray meets the constraint set in a bounded segment", p, oracle)
    rep = _analyze(ps.f, Om, u, p)
    if unbounded:
        status = Verdict.FAILS
        summary = "f decreases without bound along the ray (lower boundedness violated)"
    elif rep.passed:
        status = Verdict.HOLDS
        summary = f"argmin over the ray is nonempty ({rep.route} route)"
    elif rep.excluded == Verdict.FAILS:
        status = Verdict.FAILS
        summary = "0 lies in the sum along the ray"
    else:
        status = Verdict.UNKNOWN
        summary = "estimate along the ray is unstable"
    return Certificate("ray_existence", status, [rep], summary, p, oracle)


# -- constraint-set normal cone --------------------------------------------------------------

@dataclass
class LCQReport:
    """Constraint qualification verdict and the resulting outer cone."""

    lcq: bool
    outer_cone: ConeUnion
    multipliers: list | None
    lipschitz: list

    def to_json(self):
        return {"lcq": self.lcq, "outer_cone": self.outer_cone.to_json(),
                "multipliers": self.multipliers, "lipschitz": self.lipschitz}


def _neg_items(items):
    return [(-V, None if C is None else C.neg()) for V, C in items]


def _multiplier_lp(choice, K: GenCone, tol):
    """Nonnegative weights on the chosen items summing to one with
    ``sum_k V_k^T w_k + cone`` inside the ``tol`` box.  Returns per-item
    multipliers or ``None``."""
    n = K.n
    cols, owner, nonneg = [], [], []
    for k, (V, C) in enumerate(choice):
        for v in V:
            cols.append(v)
            owner.append(k)
            nonneg.append(True)
        if C is not None:
            for r in C.generators:
                cols.append(r)
                owner.append(-1)
                nonneg.append(True)
            for r in C.lineality:
                cols.append(r)
                owner.append(-1)
                nonneg.append(False)
    for r in K.generators:
        cols.append(r)
        owner.append(-1)
        nonneg.append(True)
    for r in K.lineality:
        cols.append(r)
        owner.append(-1)
        nonneg.append(False)
    M = np.array(cols, dtype=float).T.reshape(n, -1)
    owner = np.array(owner)
    norm_row = (owner >= 0).astype(float)[None, :]
    A_ub = np.vstack([M, -M])
    b_ub = np.full(2 * n, tol)
    res = solve_lp(np.zeros(M.shape[1]), A_ub, b_ub, norm_row, np.ones(1), np.array(nonneg))
    if not res.ok:
        return None
    return [float(res.x[owner == k].sum()) for k in range(len(choice))]


def constraint_normal_cone_estimate(gs, hs, Omega: HPolyhedron, u,
                                    p: EstimatorParams | None = None) -> LCQReport:
    """Constraint qualification at infinity and outer estimate of the normal
    cone of ``S = {x in Omega | g_i(x) <= 0, h_j(x) = 0}`` along ``u``.

    ``lcq`` is the infeasibility of ``0 in sum lambda_i dg_i + sum mu_j
    [dh_j ∪ d(-h_j)] + N_Omega`` with nonnegative multipliers summing to one,
    over the sampled cluster items.  The limiting set of ``-h`` is taken as
    the negated (convex) items of ``h``.

    Raises
    ------
    LipschitzPreconditionFailed
        If some ``g_i`` or ``h_j`` has a nonzero singular estimate along ``u``.
    """
    p = p or EstimatorParams()
    u = as_direction(u)
    N = dir_normal_cone_at_infinity(Omega, u)
    if N.is_empty():
        raise NotMemberError(f"direction {u} is not a recession direction of the constraint set")
    groups, lip = [], []
    for kind, fns in (("g", gs), ("h", hs)):
        for i, fn in enumerate(fns):
            rep = lipschitz_at_infinity_test(fn, u, p)
            lip.append({"function": f"{kind}{i}", "status": rep.status})
            if rep.status == Verdict.FAILS:
                raise LipschitzPreconditionFailed(f"{kind}{i} is not Lipschitz at infinity along {u}")
            items = _unique_items(rep.approx.items())
            if kind == "h":
                items = items + _neg_items(items)
            if items:
                groups.append(items)
    combos = 1
    for items in groups:
        combos *= len(items)
    if combos * max(1, len(N.pieces)) > _MAX_COMBOS:
        raise UnsupportedError("too many cluster combinations")
    multipliers = None
    pieces = []
    for choice in itertools.product(*groups):
        for K in N.pieces:
            if multipliers is None and choice:
                multipliers = _multiplier_lp(choice, K, p.eps_c)
            gens = [K.generators]
            lins = [K.lineality]
            for V, C in choice:
                gens.append(V)
                if C is not None:
                    gens.append(C.generators)
                    lins.append(C.lineality)
            pieces.append(GenCone(np.vstack(gens), np.vstack(lins), Omega.n))
    outer = ConeUnion(tuple(pieces), Omega.n).dedup() if pieces else N
    return LCQReport(multipliers is None, outer, multipliers, lip)


# -- error bounds ----------------------------------------------------------------------------

def _simplex_grid(m: int, steps: int = 10):
    """Points of the unit simplex with coordinates in multiples of ``1/steps``."""
    out = []
    for c in itertools.product(range(steps + 1), repeat=m):
        if sum(c) == steps:
            out.append(tuple(k / steps for k in c))
    return out


def _lam_items(lam, approx: SubdiffApprox):
    n = approx.n
    if lam > 0:
        return [(lam * V, C) for V, C in _unique_items(approx.items())]
    return [(np.zeros((1, n)), C) for C in approx.singular_rays.pieces]


def _analyze_multi(gs, Omega, u, p):
    n = Omega.n
    N = dir_normal_cone_at_infinity(Omega, u)
    if N.is_empty():
        raise NotMemberError(f"direction {u} is not a recession direction of the constraint set")
    approxes = [_estimate(g, u, p, n) for g in gs]
    witnesses = {}
    if any(a is None for a in approxes):
        return DirectionReport(u, Verdict.UNKNOWN, Verdict.UNKNOWN, None, "none",
                               Verdict.UNKNOWN, 0.0, witnesses)
    qual = Verdict.HOLDS
    from .geometry import nontrivial_zero_sum
    for choice in itertools.product(*[a.singular_rays.pieces for a in approxes], N.pieces):
        w = nontrivial_zero_sum(list(choice))
        if w is not None:
            qual = Verdict.FAILS
            witnesses["singular"] = [_vec_json(x) for x in w]
            break
    if qual == Verdict.HOLDS and any(a.inconclusive for a in approxes):
        qual = Verdict.UNKNOWN
    cond = Verdict.HOLDS
    for lam in _simplex_grid(len(gs)):
        items = _items_minkowski([_lam_items(l, a) for l, a in zip(lam, approxes)])
        wit = _zero_in_sum(items, N, p.eps_c)
        if wit is not None:
            cond = Verdict.FAILS
            witnesses["lambda"] = list(lam)
            witnesses["theorem_xi"] = _vec_json(wit[0])
            witnesses["theorem_eta"] = _vec_json(wit[1])
            break
    stab = min(a.stability for a in approxes)
    if cond == Verdict.HOLDS and any(a.inconclusive for a in approxes):
        cond = Verdict.UNKNOWN
    if qual == Verdict.HOLDS:
        route, excluded = "theorem", cond
    else:
        route, excluded = "none", Verdict.FAILS if qual == Verdict.FAILS else Verdict.UNKNOWN
    return DirectionReport(u, qual, cond, None, route, excluded, float(stab), witnesses)


def _positive_part_sum(gs, n):
    zero = Affine(np.zeros(n), 0.0)
    return Sum(tuple(Max((g, zero)) for g in gs))


def error_bound_certificate(g, Omega: HPolyhedron, grid: int = 16, p: EstimatorParams | None = None,
                            R: float = 10.0, oracle: bool = True) -> Certificate:
    """Error bound at infinity for ``S = {x in Omega | g(x) <= 0}``.

    ``g`` may be a single function or a list; the list form checks the
    multiplier condition over a simplex grid (step 0.1), where a zero weight
    contributes the singular set.  The oracle estimates
    ``alpha = sup dist(x, S) / [g(x)]_+`` on samples with ``R <= ||x|| <= 10R``
    and again with ``2R``.
    """
    p = p or EstimatorParams()
    gs = list(g) if isinstance(g, (list, tuple)) else [g]
    n = Omega.n
    dirs = recession_directions(Omega, grid, p.seed)
    if len(gs) == 1:
        reports = [_analyze(gs[0], Omega, u, p) for u in dirs]
        G = gs[0]
    else:
        reports = [_analyze_multi(gs, Omega, u, p) for u in dirs]
        G = _positive_part_sum(gs, n)
    if all(r.passed for r in reports):
        status = Verdict.HOLDS
        summary = f"hypotheses verified on {len(reports)} directions"
    elif any(r.excluded == Verdict.FAILS for r in reports):
        status = Verdict.FAILS
        summary = "hypotheses fail along " + ", ".join(
            str(r.u) for r in reports if r.excluded == Verdict.FAILS)
    else:
        status = Verdict.UNKNOWN
        summary = "some directions are unstable or undecided"
    cert = Certificate("error_bound", status, reports, summary, p, grid=grid)
    for i, j in _neighbour_disagreements(reports):
        msg = f"verdicts differ between {reports[i].u} and {reports[j].u}"
        cert.warnings.append(msg)
        warnings.warn(msg, GridTooCoarse, stacklevel=2)
    if oracle:
        doc = {"R": R}
        try:
            search = region_inf_search(G, Omega, float(p.ladder[1]), seed=p.seed)
            doc["S_nonempty"] = bool(search.empirical_inf <= 1e-9)
        except InfeasibleError:
            doc["S_nonempty"] = False
        for key, radius in (("alpha_hat", R), ("alpha_hat_2R", 2 * R)):
            try:
                doc[key] = empirical_error_bound(G, Omega, radius, seed=p.seed,
                                                 parts=gs if len(gs) > 1 else None)
            except NoViolatingSamples:
                doc[key] = None
        cert.oracle = doc
    return cert
