"""Sampled directional subdifferentials at infinity.

The limiting set is approximated by following deterministic and seeded
random *families* of curves ``x(t) = w + t*u + s * t**a * e`` out to infinity
along ``u`` and watching the subgradients on a geometric radius ladder.
Subgradients that settle down become bounded clusters; subgradients whose
norms blow up contribute their normalized directions to the singular part.

Functions carrying polyhedral indicators are sampled face by face: every
face of the domain whose recession cone contains ``u`` supplies anchor
points, and offsets stay inside the face's affine hull.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import DomainUnreachable, EvalOverflow, UnsupportedError
from .funcs import (Affine, Dist, ExpAffine, FuncExpr, Indicator, Max, Min, Norm,
                    Piecewise, PowerAbs, Quad, Scale, Sum, domain_polyhedron,
                    has_indicator, subdiff_pieces, value)
from .geometry import (ConeUnion, Direction, GenCone, HPolyhedron, nearest_point,
                       nontrivial_zero_sum, cone_nonzero_with, set_distance)
from .poly_infinity import (as_direction, dir_normal_cone_at_infinity, project_onto,
                            relevant_faces)

__all__ = [
    "EstimatorParams", "Cluster", "SubdiffApprox", "estimate_dir_subdiff",
    "sweep_subdiff_at_infinity", "lipschitz_at_infinity_test",
    "distance_subdiff_at_infinity", "sum_rule_check", "max_rule_check",
    "min_rule_check", "partial_subdiff_check", "restrict", "RuleReport",
    "PartialReport", "Verdict", "LAMBDA_GRID",
]

_ESCAPE_FLOOR = 1e3
_DIR_TOL = 1e-2
LAMBDA_GRID = tuple(round(0.1 * i, 10) for i in range(11))


class Verdict:
    HOLDS = "Holds"
    FAILS = "Fails"
    UNKNOWN = "Unknown"


@dataclass(frozen=True)
class EstimatorParams:
    """Radius ladder ``R_k = R0 * rho**k`` (k = 0..K) and sampling knobs.

    ``eps_c`` is a relative merge/persistence radius, ``G`` the escape
    threshold, ``M`` the number of samples per rung (split into families of
    ``T`` samples each).
    """

    R0: float = 10.0
    rho: float = 4.0
    K: int = 8
    delta: float = 0.05
    M: int = 256
    eps_c: float = 1e-3
    G: float = 1e6
    seed: int = 42
    T: int = 4

    def __post_init__(self):
        if not (self.R0 > 0 and self.rho > 1 and self.K >= 2 and self.M >= 1
                and self.eps_c > 0 and self.G > _ESCAPE_FLOOR and self.T >= 1):
            raise ValueError("invalid estimator parameters")
        if not 0 < self.delta <= 2:
            raise ValueError("delta must lie in (0, 2]")

    @property
    def ladder(self) -> np.ndarray:
        return self.R0 * self.rho ** np.arange(self.K + 1)

    def to_json(self):
        return {"R0": self.R0, "rho": self.rho, "K": self.K, "delta": self.delta,
                "M": self.M, "eps_c": self.eps_c, "G": self.G, "seed": self.seed, "T": self.T}


@dataclass
class Cluster:
    """Persistent bounded subgradients that landed close together.

    ``items`` holds the member sets as ``(vertices, cone)`` pairs; the cone is
    ``None`` except for functions with indicator terms.
    """

    centroid: np.ndarray
    radius: float
    count: int
    items: list = field(default_factory=list)

    def distance(self, v) -> float:
        return min(set_distance(v, V, C) for V, C in self.items)

    def to_json(self):
        doc = {"centroid": self.centroid.tolist(), "radius": self.radius, "count": self.count,
               "vertices": self.items[0][0].tolist()}
        cone = self.items[0][1]
        if cone is not None:
            doc["cone"] = cone.to_json()
        return doc


@dataclass
class SubdiffApprox:
    """Sampled estimate of the directional limiting and singular sets."""

    direction: Direction
    bounded_clusters: list
    singular_rays: ConeUnion
    empty_bounded: bool
    inconclusive: bool
    diagnostics: dict
    params: EstimatorParams
    samples: list = field(default_factory=list, repr=False)

    @property
    def stability(self) -> float:
        return self.diagnostics["stability"]

    @property
    def n(self) -> int:
        return self.direction.n

    def items(self):
        return [it for c in self.bounded_clusters for it in c.items]

    def contains_limiting(self, v, tol=None) -> bool:
        v = np.asarray(v, dtype=float)
        tol = self.params.eps_c if tol is None else tol
        return any(set_distance(v, V, C) <= tol * (1.0 + np.linalg.norm(v)) for V, C in self.items())

    def contains_singular(self, v, tol=None) -> bool:
        tol = _DIR_TOL if tol is None else tol
        return self.singular_rays.contains(v, tol)

    def singular_nonzero(self) -> bool:
        return self.singular_rays.has_nonzero()

    def to_json(self):
        return {
            "direction": self.direction.to_json(),
            "bounded_clusters": [c.to_json() for c in self.bounded_clusters],
            "singular_rays": self.singular_rays.to_json(),
            "empty_bounded": self.empty_bounded,
            "status": "Inconclusive" if self.inconclusive else "OK",
            "diagnostics": self.diagnostics,
            "params": self.params.to_json(),
        }

    def samples_csv(self) -> str:
        """Raw ``(t, point, subgradient vertex)`` rows for plotting."""
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        n = self.n
        w.writerow(["family", "rung", "t"] + [f"x{i}" for i in range(n)]
                   + [f"g{i}" for i in range(n)] + ["log_scale"])
        for fam, k, t, x, V, logs in self.samples:
            for v, s in zip(V, logs):
                w.writerow([fam, k, repr(float(t))] + [repr(float(a)) for a in x]
                           + [repr(float(a)) for a in v] + [repr(float(s))])
        return buf.getvalue()


# -- families -------------------------------------------------------------------

@dataclass(frozen=True)
class _Family:
    anchor: np.ndarray
    a: float
    s: float
    e: np.ndarray

    def point(self, t, u):
        return self.anchor + t * u + (self.s * t ** self.a) * self.e


def _null_basis(M, n):
    if M.shape[0] == 0:
        return np.eye(n)
    _, sv, vt = np.linalg.svd(M, full_matrices=True)
    rank = int(np.sum(sv > 1e-10 * max(1.0, sv[0] if sv.size else 1.0)))
    return vt[rank:].T  # n x (n - rank)


def _offset_dirs(B):
    """Signed projections of coordinate axes onto span(B), deduplicated."""
    n = B.shape[0]
    if B.shape[1] == 0:
        return []
    out = []
    for i in range(n):
        v = B @ B[i]  # projection of e_i
        nv = np.linalg.norm(v)
        if nv < 1e-8:
            continue
        v = v / nv
        if any(abs(v @ w) > 1 - 1e-9 for w in out):
            continue
        out.append(v)
    return [s * v for v in out for s in (1.0, -1.0)]


def _build_families(u, anchors_faces, p: EstimatorParams, extra_anchors):
    """Deterministic list of families.  ``anchors_faces``: list of (w, B)."""
    rng = np.random.default_rng(p.seed)
    mid = p.ladder[p.K // 2]
    budget = max(1, p.M // p.T)
    det, rand_specs = [], []
    for w, B in anchors_faces:
        det.append(_Family(w, 0.0, 0.0, np.zeros_like(u)))
        for z in extra_anchors:
            det.append(_Family(w + z, 0.0, 0.0, np.zeros_like(u)))
        for a in (0.0, 0.5, 0.75):
            # constant offsets of moderate size; growing offsets scaled to
            # stay inside the angular slack from the middle rung on
            scales = (0.5, 2.0) if a == 0.0 else tuple(c * p.delta * mid ** (1.0 - a) for c in (0.2, 0.8))
            for e in _offset_dirs(B):
                for s in scales:
                    det.append(_Family(w, a, s, e))
    n_rand = max(0, budget - len(det))
    for i in range(n_rand):
        w, B = anchors_faces[i % len(anchors_faces)]
        if B.shape[1] == 0:
            continue  # no room for offsets on this face
        g = rng.standard_normal(B.shape[1])
        e = B @ (g / np.linalg.norm(g))
        if i % 4 == 0:
            a = 0.0
            s = float(np.exp(rng.uniform(np.log(0.1), np.log(10.0))))
        else:
            a = float(rng.uniform(0.0, 0.9))
            s = p.delta * mid ** (1.0 - a) * float(np.exp(rng.uniform(np.log(0.05), np.log(0.9))))
        rand_specs.append(_Family(w, a, s, e))
    return det + rand_specs


def _anchor_faces(f: FuncExpr, u: np.ndarray, n: int, domain: HPolyhedron | None):
    """(anchor, offset basis) per relevant face; offsets orthogonal to ``u``."""
    if domain is None:
        B = _null_basis(u[None, :], n)
        return [(np.zeros(n), B)]
    faces = relevant_faces(domain, u)
    out = []
    for F in faces:
        M = np.vstack([domain.A[list(F.active_set)], domain.E, u[None, :]])
        out.append((np.array(F.witness, dtype=float), _null_basis(M, n)))
    return out


# -- sample summaries -----------------------------------------------------------

@dataclass
class _Item:
    V: np.ndarray          # plain vertices (finite only when bounded)
    unit: np.ndarray       # unit directions of vertices
    lognorm: np.ndarray    # per-vertex log norms
    cone: GenCone | None
    rep: np.ndarray        # representative point (scaled by exp(rep_log))
    rep_log: float         # log norm of the representative
    rep_dir: np.ndarray


def _single_item(pc):
    """Fast path of :func:`_summarize` for a lone vertex without a cone."""
    v, s = pc.V[0], float(pc.logs[0])
    nv = math.sqrt(float(v @ v))
    if nv > 0:
        unit = v / nv
        lognorm = s + math.log(nv)
    else:
        unit = np.zeros_like(v)
        lognorm = -math.inf
    with np.errstate(over="ignore", invalid="ignore"):
        V = (v * math.exp(min(s, 709.0)))[None, :]
        rep = v * math.exp(min(s, 700.0))
    return _Item(V, unit[None, :], np.array([lognorm]), None, rep, lognorm, unit)


def _summarize(pieces):
    items = []
    for pc in pieces:
        if pc.cone is None and pc.V.shape[0] == 1:
            items.append(_single_item(pc))
            continue
        L = float(np.max(pc.logs))
        with np.errstate(over="ignore", under="ignore"):
            Vs = pc.V * np.exp(pc.logs - L)[:, None]
        if pc.cone is not None:
            y, _ = nearest_point(np.zeros(pc.n), Vs, pc.cone)
        else:
            y = Vs.mean(axis=0) if Vs.shape[0] > 1 else Vs[0]
            # for the size of a polytope use its farthest vertex
            far = Vs[np.argmax(np.linalg.norm(Vs, axis=1))]
        ny = float(np.linalg.norm(y))
        if pc.cone is not None:
            rep_log = L + math.log(ny) if ny > 0 else -math.inf
        else:
            nf = float(np.linalg.norm(far))
            rep_log = L + math.log(nf) if nf > 0 else -math.inf
        rep_dir = y / ny if ny > 0 else np.zeros_like(y)
        with np.errstate(over="ignore", invalid="ignore"):
            V = pc.vertices()
            rep = y * math.exp(min(L, 700.0))
        items.append(_Item(V, pc.unit_dirs(), pc.log_norms(), pc.cone, rep, rep_log, rep_dir))
    return items


@dataclass
class _Sample:
    t: float
    x: np.ndarray
    items: list

    @property
    def max_log(self) -> float:
        return max(it.rep_log for it in self.items)


def _hausdorff(A, B):
    if A.shape[0] == 1 and B.shape[0] == 1:
        return float(np.linalg.norm(A[0] - B[0]))
    d1 = max(np.min(np.linalg.norm(B - a, axis=1)) for a in A)
    d2 = max(np.min(np.linalg.norm(A - b, axis=1)) for b in B)
    return max(d1, d2)


def _same_item(it: _Item, ref: _Item, tol_rel):
    if (it.cone is None) != (ref.cone is None):
        return False
    if not (np.all(np.isfinite(it.V)) and np.all(np.isfinite(ref.V))):
        return False
    scale = 1.0 + float(np.linalg.norm(ref.rep))
    if it.cone is not None:
        if np.linalg.norm(it.rep - ref.rep) > tol_rel * scale:
            return False
        return it.cone.equals(ref.cone, 1e-6)
    return _hausdorff(it.V, ref.V) <= tol_rel * scale


def _escape_dirs(item: _Item, floor_log):
    """Unit directions of the escaping part of an item."""
    if item.cone is not None:
        return [item.rep_dir] if item.rep_log >= floor_log else []
    top = float(np.max(item.lognorm))
    keep = (item.lognorm >= floor_log) & (item.lognorm >= top - math.log(_ESCAPE_FLOOR))
    return [d for d, k in zip(item.unit, keep) if k]


# -- estimator ----------------------------------------------------------------------

def estimate_dir_subdiff(f: FuncExpr, u, p: EstimatorParams | None = None, *,
                         n: int | None = None, anchors=(), record_samples=False) -> SubdiffApprox:
    """Estimate the directional limiting and singular subdifferentials of
    ``f`` at infinity along ``u``.

    Parameters
    ----------
    f : FuncExpr
    u : Direction or array_like
    p : EstimatorParams, optional
    anchors : sequence of vectors
        Extra constant offsets, each followed along a straight family.
    record_samples : bool
        Keep the raw samples for :meth:`SubdiffApprox.samples_csv`.

    Raises
    ------
    DomainUnreachable
        If no sample on the upper half of the ladder lies in ``dom f``.
    """
    p = p or EstimatorParams()
    u = as_direction(u)
    uc = u.coords
    n = u.n if n is None else n
    if f.dim is not None and f.dim != n:
        raise ValueError("direction and function dimensions differ")
    domain = domain_polyhedron(f, n)
    if domain is not None:
        domain.check_caps()
        if domain.is_empty() or not domain.recession_contains(uc):
            raise DomainUnreachable("domain is not unbounded in this direction")
    faces = _anchor_faces(f, uc, n, domain)
    if not faces:
        raise DomainUnreachable("no face of the domain recedes along this direction")
    extra = [np.asarray(z, dtype=float) for z in anchors]
    families = _build_families(uc, faces, p, extra)
    ladder = p.ladder
    half = p.K // 2
    floor_log = math.log(_ESCAPE_FLOOR)
    G_log = math.log(p.G)

    grid = []  # grid[fam][k][j] -> _Sample | None
    raw = []
    valid_per_rung = np.zeros(p.K + 1, dtype=int)
    max_log_per_rung = np.full(p.K + 1, -np.inf)
    for fi, fam in enumerate(families):
        rows = []
        for k, R in enumerate(ladder):
            row = []
            for j in range(p.T):
                t = R * p.rho ** ((j + 0.5) / p.T)
                x = fam.point(t, uc)
                nx = float(np.linalg.norm(x))
                sample = None
                if nx > R and np.linalg.norm(x / nx - uc) <= p.delta and \
                        (domain is None or domain.contains(x)):
                    try:
                        pieces = subdiff_pieces(f, x)
                    except EvalOverflow:
                        pieces = None
                    if pieces:
                        sample = _Sample(t, x, _summarize(pieces))
                        valid_per_rung[k] += 1
                        max_log_per_rung[k] = max(max_log_per_rung[k], sample.max_log)
                        if record_samples:
                            for pc in pieces:
                                raw.append((fi, k, t, x, pc.V, pc.logs))
                row.append(sample)
            rows.append(row)
        grid.append(rows)

    if valid_per_rung[half:].sum() == 0:
        raise DomainUnreachable("no sample of the upper ladder lies in the domain")

    def status(fam_rows, k, j):
        smp = fam_rows[k][j]
        if smp.max_log > G_log:
            return "esc"
        if smp.max_log >= floor_log and k > 0 and fam_rows[k - 1][j] is not None:
            growth = smp.max_log - fam_rows[k - 1][j].max_log
            if growth > 0.5 * math.log(p.rho):
                return "esc"
        return "bnd"

    late = max(half, -(-3 * p.K // 4))  # first rung of the top quarter
    complete = consistent = 0
    bounded_items, escape_pieces = [], []
    for rows in grid:
        upper = [rows[k][j] for k in range(half, p.K + 1) for j in range(p.T)]
        if any(s is None for s in upper):
            continue
        complete += 1
        labels = {status(rows, k, j) for k in range(late, p.K + 1) for j in range(p.T)}
        if len(labels) == 1:
            consistent += 1
        final = rows[p.K][p.T - 1]
        final_label = status(rows, p.K, p.T - 1)
        for it in final.items:
            if final_label == "bnd" and it.rep_log <= G_log:
                persistent = all(
                    any(_same_item(other, it, p.eps_c) for other in rows[k][j].items)
                    for k in range(half, p.K + 1) for j in range(p.T))
                if persistent:
                    bounded_items.append(it)
                    if it.cone is not None and not it.cone.is_zero():
                        escape_pieces.append(it.cone)
            elif final_label == "esc" and labels == {"esc"}:
                for d in _escape_dirs(it, floor_log):
                    ok = all(
                        any(np.linalg.norm(dd - d) <= _DIR_TOL
                            for other in rows[k][j].items for dd in _escape_dirs(other, floor_log))
                        for k in range(late, p.K + 1) for j in range(p.T))
                    if ok:
                        if it.cone is not None:
                            escape_pieces.append(GenCone(np.vstack([d[None, :], it.cone.generators]),
                                                         it.cone.lineality, n))
                        else:
                            escape_pieces.append(GenCone.ray(d))
    stability = consistent / complete if complete else 0.0
    clusters = _cluster(bounded_items, p.eps_c)
    singular = _merge_cones(escape_pieces, n, 10 * p.eps_c)
    empty_bounded = not clusters
    inconclusive = stability < 0.5 or (empty_bounded and not singular.has_nonzero())
    diagnostics = {
        "ladder": [float(r) for r in ladder],
        "max_log10_norm_per_rung": [None if not np.isfinite(v) else round(float(v / math.log(10)), 9)
                                     for v in max_log_per_rung],
        "valid_samples_per_rung": [int(v) for v in valid_per_rung],
        "families": len(families),
        "complete_families": complete,
        "stability": stability,
        "faces": len(faces),
    }
    return SubdiffApprox(u, clusters, singular, empty_bounded, inconclusive, diagnostics, p,
                         raw if record_samples else [])


def _cluster(items, eps_c):
    def key(it):
        return (float(np.linalg.norm(it.rep)), tuple(np.round(it.rep, 12)))
    clusters = []
    for it in sorted(items, key=key):
        rep = it.rep
        for c in clusters:
            if np.linalg.norm(rep - c.centroid) <= eps_c * (1.0 + np.linalg.norm(c.centroid)):
                c.items.append((it.V, it.cone))
                reps = np.array(c._reps + [rep])
                c._reps.append(rep)
                c.centroid = reps.mean(axis=0)
                c.radius = float(np.max(np.linalg.norm(reps - c.centroid, axis=1)))
                c.count += 1
                break
        else:
            c = Cluster(rep.copy(), 0.0, 1, [(it.V, it.cone)])
            c._reps = [rep]
            clusters.append(c)
    for c in clusters:
        del c._reps
    return clusters


def _merge_cones(pieces, n, tol):
    kept = [GenCone.zero(n)]
    for C in pieces:
        if C.is_zero():
            continue
        if any(K.equals(C, tol) for K in kept):
            continue
        kept.append(C)
    return ConeUnion(tuple(kept), n)


# -- direction-free sweep -----------------------------------------------------------

def sweep_subdiff_at_infinity(f: FuncExpr, n: int, p: EstimatorParams | None = None,
                              count: int = 256):
    """Estimate the non-directional limiting set at infinity.

    Straight rays ``t * w`` in ``count`` seeded random directions ``w`` (no
    direction is privileged, no curved families) are followed along the
    ladder; subgradients that persist on the upper half are returned as a
    list of ``(vertices, cone)`` items.
    """
    p = p or EstimatorParams()
    rng = np.random.default_rng(p.seed + 7919)
    W = rng.standard_normal((count, n))
    W /= np.linalg.norm(W, axis=1)[:, None]
    domain = domain_polyhedron(f, n)
    half = p.K // 2
    ladder = p.ladder
    items = []
    for w in W:
        if domain is not None and not domain.recession_contains(w, 1e-12):
            continue
        anchor = np.zeros(n) if domain is None else domain.feasible_point
        samples = []
        for k in range(half, p.K + 1):
            x = anchor + ladder[k] * w
            if domain is not None and not domain.contains(x):
                samples = None
                break
            try:
                samples.append(_summarize(subdiff_pieces(f, x)))
            except EvalOverflow:
                samples = None
                break
        if not samples:
            continue
        for it in samples[-1]:
            if it.rep_log > math.log(_ESCAPE_FLOOR):
                continue
            if all(any(_same_item(o, it, p.eps_c) for o in s) for s in samples):
                items.append((it.V, it.cone))
    return items


# -- Lipschitz at infinity ----------------------------------------------------------

@dataclass
class LipschitzReport:
    status: str
    approx: SubdiffApprox
    empirical_lipschitz: float

    def to_json(self):
        return {"status": self.status, "empirical_lipschitz": self.empirical_lipschitz,
                "singular_rays": self.approx.singular_rays.to_json(),
                "stability": self.approx.stability}


def lipschitz_at_infinity_test(f: FuncExpr, u, p: EstimatorParams | None = None) -> LipschitzReport:
    """Holds iff the singular estimate is ``{0}`` with stable diagnostics.

    The empirical difference quotient over seeded pairs near the last rung is
    recorded alongside as a cross-check.
    """
    p = p or EstimatorParams()
    u = as_direction(u)
    approx = estimate_dir_subdiff(f, u, p)
    if approx.singular_nonzero():
        status = Verdict.FAILS
    elif approx.inconclusive:
        status = Verdict.UNKNOWN
    else:
        status = Verdict.HOLDS
    return LipschitzReport(status, approx, _empirical_lipschitz(f, u, p))


def _empirical_lipschitz(f, u, p, pairs=64):
    rng = np.random.default_rng(p.seed + 17)
    R = p.ladder[-1]
    n = u.n
    domain = domain_polyhedron(f, n)
    best = 0.0
    for _ in range(pairs):
        base = R * (1.0 + rng.random()) * u.coords
        off = rng.standard_normal((2, n)) * (0.01 * p.delta * R)
        x, y = base + off[0], base + off[1]
        if domain is not None:
            x, y = project_onto(domain, x), project_onto(domain, y)
        try:
            fx, fy = value(f, x), value(f, y)
        except EvalOverflow:
            return math.inf
        dxy = float(np.linalg.norm(x - y))
        if dxy > 0 and math.isfinite(fx) and math.isfinite(fy):
            best = max(best, abs(fx - fy) / dxy)
    return best


# -- distance function formula -------------------------------------------------------

@dataclass
class DistanceReport:
    bounded: bool
    ball_part: ConeUnion | None
    exterior_dirs: list
    formula: list | None = None

    def contains(self, v, tol=1e-3) -> bool:
        v = np.asarray(v, dtype=float)
        if self.bounded:
            return any(np.linalg.norm(v - w) <= tol for w in self.formula)
        if np.linalg.norm(v) <= 1 + tol and self.ball_part.contains(v, tol):
            return True
        return any(np.linalg.norm(v - w) <= tol for w in self.exterior_dirs)

    def to_json(self):
        if self.bounded:
            return {"bounded": True, "set": [w.tolist() for w in self.formula]}
        return {"bounded": False, "normal_cone_part": self.ball_part.to_json(),
                "exterior_part": [w.tolist() for w in self.exterior_dirs]}


def distance_subdiff_at_infinity(P: HPolyhedron, u, p: EstimatorParams | None = None) -> DistanceReport:
    """Two-part description of the limiting set of ``dist(., P)`` at infinity.

    For bounded ``P`` the answer is ``{u}``.  Otherwise the exact cone part
    ``N_P(inf; u) ∩ unit ball`` comes from the face engine and the exterior
    part collects persistent unit vectors ``(x - proj(x)) / dist(x)`` over
    sampled points outside ``P``.
    """
    from .geometry import recession_cone
    p = p or EstimatorParams()
    u = as_direction(u)
    if recession_cone(P).is_zero():
        return DistanceReport(True, None, [], [u.coords.copy()])
    N = dir_normal_cone_at_infinity(P, u)
    faces = _anchor_faces(None, u.coords, P.n, None)
    fams = _build_families(u.coords, faces, p, [])
    half = p.K // 2
    dirs = []
    for fam in fams:
        seq = []
        for k in range(half, p.K + 1):
            t = p.ladder[k]
            x = fam.point(t, u.coords)
            y = project_onto(P, x)
            d = float(np.linalg.norm(x - y))
            if d <= 1e-9 * (1 + np.linalg.norm(x)):
                seq = None
                break
            seq.append((x - y) / d)
        if not seq:
            continue
        last = seq[-1]
        if all(np.linalg.norm(s - last) <= p.eps_c * 10 for s in seq):
            if not any(np.linalg.norm(last - w) <= p.eps_c for w in dirs):
                dirs.append(last)
    dirs.sort(key=lambda w: tuple(np.round(w, 12)))
    return DistanceReport(False, N, dirs)


# -- calculus rule checks ---------------------------------------------------------------

@dataclass
class RuleReport:
    qualification: bool | None
    inclusion_limiting: bool
    inclusion_singular: bool
    witnesses: list = field(default_factory=list)

    def to_json(self):
        return {"qualification": self.qualification, "inclusion_limiting": self.inclusion_limiting,
                "inclusion_singular": self.inclusion_singular,
                "witnesses": [np.asarray(w).tolist() for w in self.witnesses]}


def singular_intersects_neg(S: ConeUnion, N: ConeUnion, dir_tol=_DIR_TOL):
    """Nonzero element of ``S ∩ (-N)`` (angular slack ``dir_tol``) or ``None``.

    Estimated singular rays carry direction errors, so besides the exact LP
    a ray ``r`` of ``S`` counts when ``-r`` is within ``dir_tol`` of ``N``.
    """
    for A in S.pieces:
        if A.is_zero():
            continue
        for B in N.pieces:
            if B.is_zero():
                continue
            w = nontrivial_zero_sum([A, B])
            if w is not None:
                return w[0]
            for r in A.rays():
                if B.distance(-r) <= dir_tol:
                    return r
    return None


def _item_in_sum(V, C, pairs, tol):
    """Is ``conv(V) + C`` inside some ``conv(V1 ⊕ V2) + C1 + C2``?"""
    for V2, C2 in pairs:
        scale = 1.0 + float(np.abs(V).max())
        if all(set_distance(v, V2, C2) <= tol * scale for v in V):
            if C is None or C.is_zero() or (C2 is not None and C2.contains_cone(C, 1e-6)):
                return True
    return False


def _distinct(items):
    """Drop repeated ``(vertices, cone)`` items (clusters repeat members)."""
    out, seen = [], set()
    for V, C in items:
        key = (np.round(V, 12).tobytes(), None if C is None else repr(C.to_json()))
        if key not in seen:
            seen.add(key)
            out.append((V, C))
    return out


def _minkowski(items1, items2, lam1=1.0, lam2=1.0):
    out = []
    for V1, C1 in items1:
        for V2, C2 in items2:
            V = (lam1 * V1[:, None, :] + lam2 * V2[None, :, :]).reshape(-1, V1.shape[1])
            if C1 is not None and C2 is not None:
                C = C1.plus(C2)
            else:
                C = C1 if C1 is not None else C2
            out.append((V, C))
    return out


def _singular_items(S: ConeUnion):
    n = S.n
    return [(np.zeros((1, n)), C) for C in S.pieces]


def _singular_in(Sa: ConeUnion, candidates: list, tol=_DIR_TOL):
    """Every nonzero piece of ``Sa`` inside one of the candidate cones."""
    for A in Sa.pieces:
        if A.is_zero():
            continue
        if not any(all(C.distance(r) <= tol for r in A.rays()) for C in candidates):
            return False, A.rays()[0]
    return True, None


def sum_rule_check(f1: FuncExpr, f2: FuncExpr, u, p: EstimatorParams | None = None) -> RuleReport:
    """Sampled check of the sum rule at infinity along ``u``."""
    p = p or EstimatorParams()
    A1, A2 = estimate_dir_subdiff(f1, u, p), estimate_dir_subdiff(f2, u, p)
    A = estimate_dir_subdiff(Sum((f1, f2)), u, p)
    w = singular_intersects_neg(A1.singular_rays, A2.singular_rays)
    witnesses = [] if w is None else [w]
    sums = _minkowski(_distinct(A1.items()), _distinct(A2.items()))
    lim_ok = True
    for V, C in _distinct(A.items()):
        if not _item_in_sum(V, C, sums, p.eps_c):
            lim_ok = False
            witnesses.append(V[0])
            break
    cand = [a.plus(b) for a in A1.singular_rays.pieces for b in A2.singular_rays.pieces]
    sing_ok, bad = _singular_in(A.singular_rays, cand)
    if bad is not None:
        witnesses.append(bad)
    return RuleReport(w is None, lim_ok, sing_ok, witnesses)


def _lam_circ(lam, items, S: ConeUnion):
    """``lam ∘ set``: scaled bounded items, or the singular set when ``lam = 0``."""
    if lam == 0.0:
        return _singular_items(S)
    return [(lam * V, C) for V, C in items]


def max_rule_check(f1: FuncExpr, f2: FuncExpr, u, p: EstimatorParams | None = None) -> RuleReport:
    """Sampled check of the max rule with the 11-point multiplier grid."""
    p = p or EstimatorParams()
    A1, A2 = estimate_dir_subdiff(f1, u, p), estimate_dir_subdiff(f2, u, p)
    A = estimate_dir_subdiff(Max((f1, f2)), u, p)
    w = singular_intersects_neg(A1.singular_rays, A2.singular_rays)
    witnesses = [] if w is None else [w]
    targets = []
    items1, items2 = _distinct(A1.items()), _distinct(A2.items())
    for l1 in LAMBDA_GRID:
        l2 = round(1.0 - l1, 10)
        targets.extend(_minkowski(_lam_circ(l1, items1, A1.singular_rays),
                                  _lam_circ(l2, items2, A2.singular_rays)))
    lim_ok = True
    for V, C in _distinct(A.items()):
        # each vertex may use its own multiplier
        for v in V:
            if not _item_in_sum(v[None, :], C, targets, p.eps_c):
                lim_ok = False
                witnesses.append(v)
                break
        if not lim_ok:
            break
    cand = [a.plus(b) for a in A1.singular_rays.pieces for b in A2.singular_rays.pieces]
    sing_ok, bad = _singular_in(A.singular_rays, cand)
    if bad is not None:
        witnesses.append(bad)
    return RuleReport(w is None, lim_ok, sing_ok, witnesses)


def min_rule_check(f1: FuncExpr, f2: FuncExpr, u, p: EstimatorParams | None = None) -> RuleReport:
    """Sampled check of the min rule: limits lie in the union of the parts."""
    p = p or EstimatorParams()
    A1, A2 = estimate_dir_subdiff(f1, u, p), estimate_dir_subdiff(f2, u, p)
    A = estimate_dir_subdiff(Min((f1, f2)), u, p)
    witnesses = []
    targets = _distinct(A1.items() + A2.items())
    lim_ok = True
    for V, C in _distinct(A.items()):
        if not _item_in_sum(V, C, targets, p.eps_c):
            lim_ok = False
            witnesses.append(V[0])
            break
    cand = list(A1.singular_rays.pieces) + list(A2.singular_rays.pieces)
    sing_ok, bad = _singular_in(A.singular_rays, cand)
    if bad is not None:
        witnesses.append(bad)
    return RuleReport(None, lim_ok, sing_ok, witnesses)


# -- partial subdifferentials ------------------------------------------------------------

def restrict(F: FuncExpr, ybar, n: int) -> FuncExpr:
    """``x -> F(x, ybar)`` for ``F`` on ``R^n x R^m``.

    Norm and distance atoms do not restrict within the grammar (unless
    ``ybar = 0`` for the norm) and raise :class:`UnsupportedError`.
    """
    ybar = np.asarray(ybar, dtype=float)
    if isinstance(F, (Affine, ExpAffine)):
        return type(F)(F.c[:n], F.beta + float(F.c[n:] @ ybar))
    if isinstance(F, PowerAbs):
        return PowerAbs(F.c[:n], F.beta + float(F.c[n:] @ ybar), F.p)
    if isinstance(F, Quad):
        Q = F.Q
        lin = Q[:n, n:] @ ybar + Q[n:, :n].T @ ybar
        const = float(ybar @ Q[n:, n:] @ ybar)
        return Sum((Quad(Q[:n, :n]), Affine(lin, const)))
    if isinstance(F, Norm):
        if np.any(ybar):
            raise UnsupportedError("norm restricted to a nonzero slice is outside the grammar")
        return Norm(n)
    if isinstance(F, Dist):
        raise UnsupportedError("distance restricted to a slice is outside the grammar")
    if isinstance(F, Indicator):
        P = F.P
        return Indicator(HPolyhedron(P.A[:, :n], P.b - P.A[:, n:] @ ybar,
                                     P.E[:, :n], P.d - P.E[:, n:] @ ybar, n=n))
    if isinstance(F, Scale):
        return Scale(F.alpha, restrict(F.f, ybar, n))
    if isinstance(F, (Sum, Max, Min)):
        return type(F)(tuple(restrict(c, ybar, n) for c in F.children))
    if isinstance(F, Piecewise):
        return Piecewise(F.c[:n], F.beta + float(F.c[n:] @ ybar),
                         restrict(F.left, ybar, n), restrict(F.right, ybar, n))
    raise TypeError(f"unknown expression node {type(F).__name__}")


@dataclass
class PartialReport:
    qualification: bool
    inclusion_limiting: bool
    inclusion_singular: bool
    witnesses: list = field(default_factory=list)

    def to_json(self):
        return {"qualification": self.qualification, "inclusion_limiting": self.inclusion_limiting,
                "inclusion_singular": self.inclusion_singular,
                "witnesses": [np.asarray(w).tolist() for w in self.witnesses]}


def partial_subdiff_check(F: FuncExpr, ybar, u, p: EstimatorParams | None = None) -> PartialReport:
    """Compare the partial estimate of ``F(., ybar)`` along ``u`` with the
    joint estimate of ``F`` along ``(u, 0)``.

    The joint sampler gets ``(0, ybar)`` as an extra anchor so that the slice
    itself is among the followed curves.
    """
    p = p or EstimatorParams()
    ybar = np.asarray(ybar, dtype=float).ravel()
    u = as_direction(u)
    n, m = u.n, ybar.size
    Fx = restrict(F, ybar, n)
    Ax = estimate_dir_subdiff(Fx, u, p)
    ujoint = np.concatenate([u.coords, np.zeros(m)])
    Aj = estimate_dir_subdiff(F, ujoint, p, n=n + m, anchors=[np.concatenate([np.zeros(n), ybar])])
    witnesses = []
    cond = True
    x_rows = np.eye(n + m)[:n]
    y_rows = np.eye(n + m)[n:]
    for C in Aj.singular_rays.pieces:
        if C.is_zero():
            continue
        v = cone_nonzero_with(C, x_rows, y_rows)
        if v is None:
            # allow for direction error in sampled rays
            for r in C.rays():
                if np.linalg.norm(r[:n]) <= _DIR_TOL and np.linalg.norm(r[n:]) > _DIR_TOL:
                    v = r
                    break
        if v is not None:
            cond = False
            witnesses.append(v)
            break
    proj = [(V[:, :n], None if C is None else GenCone(C.generators[:, :n], C.lineality[:, :n], n))
            for V, C in _distinct(Aj.items())]
    lim_ok = True
    for V, C in _distinct(Ax.items()):
        if not _item_in_sum(V, C, proj, p.eps_c):
            lim_ok = False
            witnesses.append(V[0])
            break
    proj_sing = [GenCone(C.generators[:, :n], C.lineality[:, :n], n) for C in Aj.singular_rays.pieces]
    sing_ok, bad = _singular_in(Ax.singular_rays, proj_sing)
    if bad is not None:
        witnesses.append(bad)
    return PartialReport(cond, lim_ok, sing_ok, witnesses)
