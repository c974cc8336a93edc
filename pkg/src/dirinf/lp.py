"""Small dense linear programming.

A two-phase tableau simplex with Bland's anti-cycling rule.  It is meant for
the desk-scale problems produced by the cone and face machinery (a handful of
variables, a few dozen rows), where determinism matters more than speed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionLimitError, NumericalFailure

__all__ = ["LPResult", "solve_lp", "lp_feasible", "PIVOT_FLOOR"]

PIVOT_FLOOR = 1e-11
_RC_TOL = 1e-10
_COL_TOL = 1e-9


@dataclass(frozen=True)
class LPResult:
    """Outcome of :func:`solve_lp`.

    ``status`` is one of ``"optimal"``, ``"infeasible"`` or ``"unbounded"``;
    ``x`` and ``fun`` are ``None`` unless the status is optimal.
    """

    status: str
    x: np.ndarray | None = None
    fun: float | None = None

    @property
    def ok(self) -> bool:
        return self.status == "optimal"


def _as_block(M, n):
    if M is None:
        return np.zeros((0, n))
    M = np.atleast_2d(np.asarray(M, dtype=float))
    if M.size == 0:
        return np.zeros((0, n))
    return M


def _pivot(T, r, j):
    p = T[r, j]
    if abs(p) < PIVOT_FLOOR:
        raise NumericalFailure(f"pivot magnitude {abs(p):.3e} below {PIVOT_FLOOR}")
    T[r] /= p
    col = T[:, j].copy()
    col[r] = 0.0
    T -= np.outer(col, T[r])


def _simplex(T, basis, ncols, max_iter):
    """Run Bland's rule on tableau ``T`` whose last row holds reduced costs.

    Returns ``"optimal"`` or ``"unbounded"``.
    """
    m = T.shape[0] - 1
    for _ in range(max_iter):
        rc = T[-1, :ncols]
        cand = np.nonzero(rc < -_RC_TOL)[0]
        if cand.size == 0:
            return "optimal"
        j = int(cand[0])
        col = T[:m, j]
        pos = np.nonzero(col > _COL_TOL)[0]
        if pos.size == 0:
            return "unbounded"
        ratios = T[pos, -1] / col[pos]
        best = ratios.min()
        tied = pos[ratios <= best + 1e-12 * max(1.0, abs(best))]
        r = int(min(tied, key=lambda i: basis[i]))
        _pivot(T, r, j)
        basis[r] = j
    raise NumericalFailure("simplex iteration limit reached")


def solve_lp(c, A_ub=None, b_ub=None, A_eq=None, b_eq=None, nonneg=None,
             max_iter=20000) -> LPResult:
    """Minimize ``c @ x`` subject to ``A_ub x <= b_ub`` and ``A_eq x = b_eq``.

    Parameters
    ----------
    c : array_like, shape (n,)
    A_ub, b_ub, A_eq, b_eq : array_like, optional
        Dense constraint blocks; ``None`` means no rows.
    nonneg : array_like of bool, shape (n,), optional
        Variables flagged ``True`` are constrained to be nonnegative; the
        others are free.  Defaults to all free.

    Returns
    -------
    LPResult
        Deterministic: identical inputs give bit-identical outputs.
    """
    c = np.asarray(c, dtype=float).ravel()
    n = c.size
    A_ub = _as_block(A_ub, n)
    A_eq = _as_block(A_eq, n)
    b_ub = np.asarray(b_ub if b_ub is not None else [], dtype=float).ravel()
    b_eq = np.asarray(b_eq if b_eq is not None else [], dtype=float).ravel()
    if A_ub.shape != (b_ub.size, n) or A_eq.shape != (b_eq.size, n):
        raise ValueError("inconsistent LP dimensions")
    if nonneg is None:
        nonneg = np.zeros(n, dtype=bool)
    nonneg = np.asarray(nonneg, dtype=bool)

    # column map: nonneg vars keep one column, free vars are split in two
    cols = []
    for i in range(n):
        cols.append((i, 1.0))
        if not nonneg[i]:
            cols.append((i, -1.0))
    nx = len(cols)
    X = np.zeros((n, nx))
    for k, (i, s) in enumerate(cols):
        X[i, k] = s

    m_ub, m_eq = b_ub.size, b_eq.size
    m = m_ub + m_eq
    if m == 0:
        if np.any(np.abs(c) > 0):
            # any nonzero cost on an unconstrained direction is unbounded
            cx = c @ X
            if np.any(cx < 0):
                return LPResult("unbounded")
        return LPResult("optimal", np.zeros(n), 0.0)

    N = nx + m_ub  # structural + slack columns
    A = np.zeros((m, N))
    A[:m_ub, :nx] = A_ub @ X
    A[:m_ub, nx:] = np.eye(m_ub)
    A[m_ub:, :nx] = A_eq @ X
    b = np.concatenate([b_ub, b_eq])
    flip = b < 0
    A[flip] *= -1.0
    b = np.where(flip, -b, b)

    # phase I tableau with one artificial per row
    T = np.zeros((m + 1, N + m + 1))
    T[:m, :N] = A
    T[:m, N:N + m] = np.eye(m)
    T[:m, -1] = b
    T[-1, :N] = -A.sum(axis=0)
    T[-1, -1] = -b.sum()
    basis = list(range(N, N + m))
    _simplex(T, basis, N + m, max_iter)
    scale = max(1.0, float(np.abs(b).max()))
    if -T[-1, -1] > 1e-8 * scale:
        return LPResult("infeasible")

    # drive remaining artificials out of the basis, dropping redundant rows
    keep = []
    for r in range(m):
        if basis[r] < N:
            keep.append(r)
            continue
        row = T[r, :N]
        j = int(np.argmax(np.abs(row)))
        if abs(row[j]) > _COL_TOL:
            _pivot(T, r, j)
            basis[r] = j
            keep.append(r)
    T = np.vstack([T[keep][:, list(range(N)) + [T.shape[1] - 1]],
                   np.zeros((1, N + 1))])
    basis = [basis[r] for r in keep]

    cost = np.zeros(N)
    cost[:nx] = c @ X
    cb = cost[basis]
    T[-1, :N] = cost - cb @ T[:-1, :N]
    T[-1, -1] = -cb @ T[:-1, -1]
    status = _simplex(T, basis, N, max_iter)
    if status == "unbounded":
        return LPResult("unbounded")
    z = np.zeros(N)
    for r, j in enumerate(basis):
        z[j] = T[r, -1]
    x = X @ z[:nx]
    return LPResult("optimal", x, float(c @ x))


def lp_feasible(A_ub=None, b_ub=None, A_eq=None, b_eq=None, n=None):
    """Return a point satisfying the constraints, or ``None`` if infeasible.

    Desk-scale entry point: at most 6 variables and 64 rows.

    >>> lp_feasible([[1.0], [-1.0]], [1.0, -2.0]) is None
    True
    """
    blocks = [M for M in (A_ub, A_eq) if M is not None and np.size(M)]
    if n is None:
        if not blocks:
            raise ValueError("cannot infer dimension without constraints")
        n = np.atleast_2d(np.asarray(blocks[0])).shape[1]
    rows = sum(np.atleast_2d(np.asarray(M)).shape[0] for M in blocks)
    if n > 6 or rows > 64:
        raise DimensionLimitError(f"lp_feasible caps: n<=6, rows<=64 (got {n}, {rows})")
    res = solve_lp(np.zeros(n), A_ub, b_ub, A_eq, b_eq)
    return res.x if res.ok else None
