import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.optimize import linprog

from dirinf.errors import DimensionLimitError
from dirinf.lp import lp_feasible, solve_lp

seeds = st.integers(min_value=0, max_value=2**32 - 1)


def _random_lp(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 5))
    m = int(rng.integers(1, 8))
    A = np.round(rng.standard_normal((m, n)), 2)
    b = np.round(rng.uniform(-1.0, 2.0, m), 2)
    # a box keeps the problem bounded
    A = np.vstack([A, np.eye(n), -np.eye(n)])
    b = np.concatenate([b, np.full(2 * n, 3.0)])
    c = np.round(rng.standard_normal(n), 2)
    return c, A, b


@given(seeds)
def test_matches_highs_on_boxed_problems(seed):
    c, A, b = _random_lp(seed)
    ours = solve_lp(c, A, b)
    ref = linprog(c, A_ub=A, b_ub=b, bounds=[(None, None)] * c.size, method="highs")
    assert ours.ok == (ref.status == 0)
    if ours.ok:
        assert ours.fun == pytest.approx(ref.fun, abs=1e-7)
        assert np.all(A @ ours.x <= b + 1e-8)


@given(seeds)
def test_equality_rows_and_sign_constraints(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 5))
    x0 = rng.uniform(0.0, 1.0, n)
    E = np.round(rng.standard_normal((1, n)), 2)
    d = E @ x0
    c = rng.uniform(0.1, 1.0, n)
    res = solve_lp(c, None, None, E, d, nonneg=np.ones(n, dtype=bool))
    ref = linprog(c, A_eq=E, b_eq=d, bounds=[(0, None)] * n, method="highs")
    assert res.ok == (ref.status == 0)
    if res.ok:
        assert res.fun == pytest.approx(ref.fun, abs=1e-7)
        assert np.all(res.x >= -1e-10)


def test_infeasible_and_unbounded():
    assert solve_lp([0.0], [[1.0], [-1.0]], [1.0, -2.0]).status == "infeasible"
    assert solve_lp([-1.0], [[-1.0]], [0.0]).status == "unbounded"
    assert solve_lp([1.0], [[-1.0]], [0.0], nonneg=[True]).fun == 0.0


def test_deterministic():
    c, A, b = _random_lp(7)
    r1, r2 = solve_lp(c, A, b), solve_lp(c, A, b)
    assert np.array_equal(r1.x, r2.x)


def test_feasibility_entry_point():
    assert lp_feasible([[1.0], [-1.0]], [1.0, -2.0]) is None
    x = lp_feasible([[1.0, 1.0]], [1.0], [[1.0, -1.0]], [0.0])
    assert x[0] + x[1] <= 1 + 1e-9 and abs(x[0] - x[1]) <= 1e-9
    with pytest.raises(DimensionLimitError):
        lp_feasible(np.eye(7), np.ones(7))
