"""Brute-force numerical cross-checks.

These routines deliberately use different discretizations from the
estimators (fixed curve families, dense t ladders, multistart descent) and
never cluster, so that agreement with the estimators means something.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize, minimize_scalar

from .errors import EvalOverflow, InfeasibleError, NoViolatingSamples
from .funcs import FuncExpr, subdiff_at, value
from .geometry import Direction, HPolyhedron
from .poly_infinity import as_direction, project_onto

__all__ = ["RaySearchResult", "region_inf_search", "ray_line_search",
           "brute_limit_points", "empirical_error_bound", "safe_value"]


def _quiet(fn):
    """Silence floating-point warnings from searches that probe ``+inf`` values."""
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        with np.errstate(all="ignore"):
            return fn(*args, **kwargs)
    return wrapper


def safe_value(f: FuncExpr, x) -> float:
    """``f(x)`` with overflow mapped to ``+inf``."""
    try:
        v = value(f, x)
    except EvalOverflow:
        return math.inf
    return v if not math.isnan(v) else math.inf


@dataclass
class RaySearchResult:
    """Outcome of a bounded-region search.

    ``attained`` means the best point lies strictly inside the search ball,
    so it is a genuine local candidate rather than an artifact of the cutoff.
    """

    empirical_inf: float
    attained: bool
    best_point: np.ndarray
    escape_detected: bool
    escape_direction: Direction | None

    def to_json(self):
        return {"empirical_inf": self.empirical_inf, "attained": self.attained,
                "best_point": self.best_point.tolist(), "escape_detected": self.escape_detected,
                "escape_direction": None if self.escape_direction is None
                else self.escape_direction.to_json()}


def _null_space(E, n):
    if E.shape[0] == 0:
        return np.eye(n)
    _, s, vt = np.linalg.svd(E, full_matrices=True)
    rank = int(np.sum(s > 1e-12 * max(1.0, s[0])))
    return vt[rank:].T


def _step_interval(A, b, x, d, radius):
    """Feasible ``alpha`` range for ``x + alpha d`` in ``{Ax<=b} ∩ B_radius``."""
    lo, hi = -np.inf, np.inf
    Ad = A @ d
    slack = b - A @ x
    for ad, sl in zip(Ad, slack):
        if ad > 1e-15:
            hi = min(hi, sl / ad)
        elif ad < -1e-15:
            lo = max(lo, sl / ad)
    # ball: |x + a d|^2 <= r^2
    dd, xd, xx = d @ d, x @ d, x @ x
    disc = xd * xd - dd * (xx - radius * radius)
    if disc < 0:
        return 0.0, 0.0
    r = math.sqrt(disc)
    lo = max(lo, (-xd - r) / dd)
    hi = min(hi, (-xd + r) / dd)
    if hi < lo:
        return 0.0, 0.0
    return lo, hi


def _descend(f, Omega, x, radius, rng, sweeps=200, tol=1e-13):
    n = x.size
    N = _null_space(Omega.E, n)
    fx = safe_value(f, x)
    k = N.shape[1]
    if k == 0:
        return x, fx
    for _ in range(sweeps):
        start = fx
        dirs = [N[:, i] for i in range(k)]
        if k > 1:
            for _r in range(k):
                g = N @ rng.standard_normal(k)
                dirs.append(g / np.linalg.norm(g))
        for d in dirs:
            lo, hi = _step_interval(Omega.A, Omega.b, x, d, radius)
            if hi - lo <= 1e-15:
                continue

            def phi(a):
                return safe_value(f, x + a * d)

            cands = [(fx, 0.0)]
            for a in (lo, hi):
                cands.append((phi(a), a))
            res = minimize_scalar(phi, bounds=(lo, hi), method="bounded",
                                  options={"xatol": 1e-12 * max(1.0, hi - lo), "maxiter": 500})
            if res.success:
                cands.append((float(res.fun), float(res.x)))
            # polish around the current point, where the bounded search can be coarse
            w = min(1.0, 0.5 * (hi - lo))
            lo2, hi2 = max(lo, -w), min(hi, w)
            if hi2 > lo2:
                res2 = minimize_scalar(phi, bounds=(lo2, hi2), method="bounded",
                                       options={"xatol": 1e-13, "maxiter": 500})
                if res2.success:
                    cands.append((float(res2.fun), float(res2.x)))
            best, a = min(cands, key=lambda c: (c[0], abs(c[1])))
            if best < fx:
                x = x + a * d
                fx = best
        if start - fx <= tol * (1.0 + abs(fx)):
            break
    return x, fx


def _grid_points(Omega, radius, x0, per_axis):
    n = x0.size
    N = _null_space(Omega.E, n)
    k = N.shape[1]
    if k == 0 or k > 3:
        return []
    axis = np.linspace(-radius, radius, per_axis)
    mesh = np.stack(np.meshgrid(*([axis] * k), indexing="ij"), axis=-1).reshape(-1, k)
    pts = x0 + mesh @ N.T
    keep = np.linalg.norm(pts, axis=1) <= radius
    if Omega.m:
        keep &= np.all(pts @ Omega.A.T <= Omega.b + 1e-12, axis=1)
    return pts[keep]


def _search(f, Omega, radius, starts, rng):
    n = Omega.n
    x0 = project_onto(Omega, np.zeros(n))
    if np.linalg.norm(x0) > radius:
        raise InfeasibleError("constraint set does not meet the search ball")
    cands = [x0]
    per_axis = {1: 2001, 2: 81, 3: 25}
    N = _null_space(Omega.E, n)
    grid = _grid_points(Omega, radius, x0, per_axis.get(N.shape[1], 0))
    if len(grid):
        vals = np.array([safe_value(f, g) for g in grid])
        order = np.argsort(vals, kind="stable")[:3]
        cands.extend(grid[i] for i in order)
    for _ in range(starts):
        z = rng.standard_normal(n)
        z *= radius * rng.random() ** (1.0 / n) / np.linalg.norm(z)
        y = project_onto(Omega, z)
        if np.linalg.norm(y) > radius:
            y = x0 + (y - x0) * 0.5
        if np.linalg.norm(y) <= radius:
            cands.append(y)
    best_x, best_f = None, math.inf
    for c in cands:
        x, fx = _descend(f, Omega, np.array(c, dtype=float), radius, rng)
        if fx < best_f or best_x is None:
            best_x, best_f = x, fx
    return best_x, best_f


@_quiet
def region_inf_search(f: FuncExpr, Omega: HPolyhedron, radius: float, starts: int = 8,
                      seed: int = 42) -> RaySearchResult:
    """Approximate ``inf f`` over ``Omega ∩ B_radius`` by multistart descent.

    Coordinate (plus seeded random) line searches run in the null space of
    the equality rows, each over its exact feasible interval.  For up to three
    free dimensions a dense grid seeds extra starts.  The search is repeated
    on half the radius: a strictly smaller value on the boundary of the
    larger ball is reported as an escape hint.

    Raises
    ------
    InfeasibleError
        If ``Omega`` does not meet the ball.
    """
    rng = np.random.default_rng(seed)
    x, fx = _search(f, Omega, radius, starts, rng)
    xh, fh = _search(f, Omega, 0.5 * radius, starts, np.random.default_rng(seed + 1))
    on_boundary = np.linalg.norm(x) >= radius * (1.0 - 1e-6)
    escape = bool(on_boundary and fx < fh - 1e-12 * (1.0 + abs(fh)))
    direction = Direction(x) if escape and np.linalg.norm(x) > 0 else None
    return RaySearchResult(float(fx), not on_boundary, x, escape, direction)


@_quiet
def ray_line_search(f: FuncExpr, xbar, u, t_max: float = 1e4):
    """Minimize ``t -> f(xbar + t u)`` over ``[0, t_max]``.

    Returns ``(t_best, value, unbounded)`` where ``unbounded`` flags values
    still decreasing at the far end of a doubling scan.
    """
    xbar = np.asarray(xbar, dtype=float)
    u = as_direction(u).coords
    ts = np.concatenate([[0.0], np.geomspace(1e-3, t_max, 400)])
    vals = np.array([safe_value(f, xbar + t * u) for t in ts])
    i = int(np.argmin(vals))
    lo = ts[max(i - 1, 0)]
    hi = ts[min(i + 1, ts.size - 1)]
    res = minimize_scalar(lambda t: safe_value(f, xbar + t * u), bounds=(lo, hi), method="bounded",
                          options={"xatol": 1e-12})
    t_best, v_best = (float(res.x), float(res.fun)) if res.fun < vals[i] else (float(ts[i]), float(vals[i]))
    tail = vals[-40:]
    unbounded = bool(i == ts.size - 1 and np.all(np.diff(tail) < 0))
    return t_best, v_best, unbounded


def brute_limit_points(f: FuncExpr, u, families, t_ladder=None):
    """Raw subgradient vertices along fixed curve families.

    Parameters
    ----------
    families : sequence
        Each entry is a callable ``t -> point`` or a tuple ``(a, e, s)``
        giving ``x(t) = t u + s t**a e``.
    t_ladder : array_like, optional
        Defaults to ``10**4`` log-spaced values in ``[1e2, 1e6]``.

    Returns
    -------
    list of list of ndarray
        ``out[i][j]`` holds the vertices at ``t_ladder[j]`` on family ``i``;
        nothing is clustered.
    """
    u = as_direction(u).coords
    ts = np.geomspace(1e2, 1e6, 10_000) if t_ladder is None else np.asarray(t_ladder, dtype=float)
    out = []
    for fam in families:
        if callable(fam):
            path = fam
        else:
            a, e, s = fam
            e = np.asarray(e, dtype=float)
            path = (lambda a_, e_, s_: (lambda t: t * u + s_ * t ** a_ * e_))(a, e, s)
        rows = []
        for t in ts:
            try:
                rows.append(subdiff_at(f, path(t)).all_vertices())
            except EvalOverflow:
                rows.append(np.full((1, u.size), np.inf))
        out.append(rows)
    return out


def _neg_value(g):
    def fun(y):
        v = safe_value(g, y)
        return -v if math.isfinite(v) else -1e300
    return fun


def _dist_to_S(x, parts, Omega, S_grid, S_member):
    """Distance to ``S = {y in Omega | every part <= 0}``: grid then SLSQP polish."""
    if S_grid.shape[0]:
        d = np.linalg.norm(S_grid - x, axis=1)
        i = int(np.argmin(d))
        best_y, best_d = S_grid[i], float(d[i])
    else:
        best_y, best_d = None, math.inf
    starts = [best_y] if best_y is not None else []
    starts.append(project_onto(Omega, x))
    for y0 in starts:
        cons = [{"type": "ineq", "fun": _neg_value(g)} for g in parts]
        if Omega.m:
            cons.append({"type": "ineq", "fun": lambda y: Omega.b - Omega.A @ y})
        if Omega.p:
            cons.append({"type": "eq", "fun": lambda y: Omega.E @ y - Omega.d})
        res = minimize(lambda y: 0.5 * np.sum((y - x) ** 2), y0, jac=lambda y: y - x,
                       constraints=cons, method="SLSQP", options={"ftol": 1e-15, "maxiter": 500})
        y = res.x
        if S_member(y):
            dy = float(np.linalg.norm(y - x))
            if dy < best_d:
                best_y, best_d = y, dy
    return best_d


@_quiet
def empirical_error_bound(g: FuncExpr, Omega: HPolyhedron, R: float, samples: int = 200,
                          seed: int = 42, S_member=None, tau: float = 1e-9, parts=None) -> float:
    """``max dist(x, S) / [g(x)]_+`` over sampled ``x in Omega``, ``R <= ||x|| <= 10R``.

    ``S_member`` decides membership in ``S`` (default: ``x in Omega`` and
    ``g(x) <= 0`` up to a relative 1e-7); distances come from a coarse grid of ``S`` (``n <= 3``)
    refined by a constrained least-squares polish.

    ``parts`` optionally lists functions whose joint nonpositivity defines
    ``S`` (e.g. the ``g_i`` behind ``g = sum [g_i]_+``); the polish then uses
    them as separate smooth constraints.

    Raises
    ------
    NoViolatingSamples
        If ``g <= tau`` on every sample.
    """
    n = Omega.n
    parts = [g] if parts is None else list(parts)
    rng = np.random.default_rng(seed)
    if S_member is None:
        def S_member(y):
            tol = 1e-7 * (1.0 + float(np.linalg.norm(y)))
            return Omega.contains(y, tol) and all(safe_value(h, y) <= tol for h in parts)
    # coarse grid of S inside a generous ball; the polish does the rest
    if n <= 3:
        per = {1: 2001, 2: 121, 3: 25}[n]
        axis = np.linspace(-20 * R, 20 * R, per)
        mesh = np.stack(np.meshgrid(*([axis] * n), indexing="ij"), axis=-1).reshape(-1, n)
        inside = np.ones(mesh.shape[0], dtype=bool)
        if Omega.m:
            inside &= np.all(mesh @ Omega.A.T <= Omega.b + 1e-9, axis=1)
        if Omega.p:
            # equality-constrained sets are too thin for a grid
            inside[:] = False
        idx = np.flatnonzero(inside)
        mask = np.zeros(mesh.shape[0], dtype=bool)
        mask[idx] = [S_member(y) for y in mesh[idx]]
        S_grid = mesh[mask]
    else:
        S_grid = np.zeros((0, n))
    ratios = []
    for _ in range(samples):
        z = rng.standard_normal(n)
        z *= R * (1.0 + 9.0 * rng.random()) / np.linalg.norm(z)
        x = project_onto(Omega, z)
        nx = np.linalg.norm(x)
        if not R <= nx <= 10 * R:
            continue
        gx = safe_value(g, x)
        if not gx > tau:
            continue
        ratios.append(_dist_to_S(x, parts, Omega, S_grid, S_member) / gx)
    if not ratios:
        raise NoViolatingSamples("g <= 0 on every sample")
    return float(max(ratios))
