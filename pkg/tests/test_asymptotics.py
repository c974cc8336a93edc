import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dirinf import (Affine, Direction, Dist, EstimatorParams, ExpAffine, HPolyhedron, Indicator,
                    Max, Min, Norm, Piecewise, PowerAbs, Quad, Scale, Sum,
                    distance_subdiff_at_infinity, estimate_dir_subdiff,
                    lipschitz_at_infinity_test, restrict, sum_rule_check,
                    sweep_subdiff_at_infinity)
from dirinf.errors import UnsupportedError
from dirinf.funcs import value
from dirinf.oracle import brute_limit_points

from helpers import CONE

FAST = EstimatorParams(M=64, K=6)


def _centroids(A):
    return sorted(c.centroid.round(6).tolist() for c in A.bounded_clusters)


def test_params_validation():
    with pytest.raises(ValueError):
        EstimatorParams(rho=1.0)
    with pytest.raises(ValueError):
        EstimatorParams(delta=0.0)
    with pytest.raises(ValueError):
        EstimatorParams(G=10.0)
    assert EstimatorParams(K=3).ladder.tolist() == [10.0, 40.0, 160.0, 640.0]


def test_deterministic_given_seed():
    f = Sum((ExpAffine([-1.0, 0.0]), PowerAbs([-1.0, 1.0], 0.0, 2.0)))
    a = estimate_dir_subdiff(f, [1.0, 1.0], FAST)
    b = estimate_dir_subdiff(f, [1.0, 1.0], FAST)
    assert json.dumps(a.to_json(), sort_keys=True) == json.dumps(b.to_json(), sort_keys=True)


def test_affine_has_constant_limit():
    A = estimate_dir_subdiff(Affine([1.0, -2.0], 5.0), [0.3, 0.7], FAST)
    assert _centroids(A) == [[1.0, -2.0]]
    assert not A.singular_nonzero() and not A.empty_bounded
    assert A.contains_limiting([1.0, -2.0])


def test_exponential_growth_is_singular():
    A = estimate_dir_subdiff(ExpAffine([1.0, 0.0]), [1.0, 0.0], FAST)
    assert A.empty_bounded
    assert A.contains_singular([1.0, 0.0]) and not A.contains_singular([-1.0, 0.0])
    B = estimate_dir_subdiff(ExpAffine([1.0, 0.0]), [-1.0, 0.0], FAST)
    assert B.contains_limiting([0.0, 0.0]) and not B.singular_nonzero()


def test_singular_generators_are_unit():
    # polynomial growth needs the full default ladder to pass the escape floor
    A = estimate_dir_subdiff(Quad([[1.0, 0.0], [0.0, 0.0]]), [0.0, 1.0])
    for C in A.singular_rays.pieces:
        for g in C.generators:
            assert abs(np.linalg.norm(g) - 1.0) < 1e-12
    assert A.contains_singular([1.0, 0.0]) and A.contains_singular([-1.0, 0.0])
    assert A.contains_singular([5.0, 0.0])  # interpreted conically


def test_norm_limit_is_the_direction():
    u = Direction([0.6, 0.8])
    A = estimate_dir_subdiff(Norm(2), u, FAST)
    assert all(np.linalg.norm(c.centroid - u.coords) < 1e-2 for c in A.bounded_clusters)
    assert A.contains_limiting(u.coords)


@pytest.mark.parametrize("alpha", [0.5, 3.0])
def test_positive_scaling(alpha):
    f = Sum((ExpAffine([-1.0, 0.0]), Affine([0.5, 1.0])))
    u = [1.0, 0.2]
    A = estimate_dir_subdiff(f, u, FAST)
    B = estimate_dir_subdiff(Scale(alpha, f), u, FAST)
    ca, cb = np.array(_centroids(A)), np.array(_centroids(B))
    assert ca.shape == cb.shape and np.allclose(alpha * ca, cb, atol=1e-5)


def test_affine_shift_translates_limits():
    f = Norm(2)
    c = np.array([0.5, -1.0])
    u = [1.0, 1.0]
    A = estimate_dir_subdiff(f, u, FAST)
    B = estimate_dir_subdiff(Sum((f, Affine(c))), u, FAST)
    for cl in B.bounded_clusters:
        assert A.contains_limiting(cl.centroid - c, tol=1e-2)


NONEMPTY_CASES = [
    (Affine([1.0, 1.0]), [1.0, 0.0]),
    (Quad(np.eye(2)), [1.0, 1.0]),
    (ExpAffine([1.0, 0.0]), [1.0, 0.0]),
    (Sum((ExpAffine([-1.0, 0.0]), PowerAbs([-1.0, 1.0], 0.0, 2.0))), [0.0, 1.0]),
    (Max((Affine([1.0, 0.0]), Affine([0.0, 1.0]))), [1.0, 1.0]),
    (Min((Norm(2), Affine([0.0, 1.0]))), [0.0, -1.0]),
    (Indicator(CONE), [2.0, 1.0]),
    (Dist(CONE), [-1.0, 0.0]),
]


@pytest.mark.parametrize("f,u", NONEMPTY_CASES)
def test_never_silently_empty(f, u):
    A = estimate_dir_subdiff(f, u, FAST)
    if A.empty_bounded and not A.singular_nonzero():
        assert A.inconclusive


ORACLE_CASES = [
    (Affine([1.0, -2.0]), [0.6, 0.8]),
    (Norm(2), [1.0, 0.0]),
    (Max((Affine([1.0, 0.2]), Affine([0.0, 1.0]))), [1.0, 0.1]),
    (Sum((ExpAffine([-1.0, -0.3]), Affine([0.0, 1.0]))), [1.0, 0.5]),
    (Piecewise([1.0, 0.35], 0.0, Affine([-1.0, 0.15]), Affine([1.0, 0.85])), [-1.0, 0.5]),
]


@pytest.mark.parametrize("f,u", ORACLE_CASES)
def test_clusters_agree_with_brute_force_oracle(f, u):
    A = estimate_dir_subdiff(f, u, FAST)
    u = Direction(u)
    e = np.array([-u.coords[1], u.coords[0]])
    fams = [(0.0, e, s) for s in (-2.0, 0.0, 2.0)] + [(0.5, e, s) for s in (-1.0, 1.0)]
    rows = brute_limit_points(f, u, fams, t_ladder=np.geomspace(1e2, 1e6, 50))
    last = np.vstack([r[-1] for r in rows])
    assert A.bounded_clusters
    for c in A.bounded_clusters:
        tol = FAST.eps_c * (1.0 + np.linalg.norm(c.centroid))
        assert np.min(np.linalg.norm(last - c.centroid, axis=1)) <= tol


def test_sweep_on_affine_and_norm():
    items = sweep_subdiff_at_infinity(Affine([2.0, 1.0]), 2, FAST, count=32)
    assert items and all(np.allclose(V, [[2.0, 1.0]]) for V, _ in items)
    items = sweep_subdiff_at_infinity(Norm(2), 2, FAST, count=32)
    assert all(abs(np.linalg.norm(V[0]) - 1.0) < 1e-9 for V, _ in items)


def test_lipschitz_verdicts():
    assert lipschitz_at_infinity_test(Norm(2), [1.0, 0.0], FAST).status == "Holds"
    rep = lipschitz_at_infinity_test(ExpAffine([1.0, 0.0]), [1.0, 0.0], FAST)
    assert rep.status == "Fails" and rep.empirical_lipschitz > 1e6
    rep = lipschitz_at_infinity_test(ExpAffine([1.0, 0.0]), [-1.0, 0.0], FAST)
    assert rep.status == "Holds" and rep.empirical_lipschitz < 1.0


def test_distance_formula():
    box = HPolyhedron.box([0, 0], [1, 1])
    rep = distance_subdiff_at_infinity(box, [0.6, 0.8], FAST)
    assert rep.bounded and rep.contains([0.6, 0.8]) and not rep.contains([1.0, 0.0])
    half = HPolyhedron([[0.0, 1.0]], [0.0])
    rep = distance_subdiff_at_infinity(half, [1.0, 0.0], FAST)
    assert rep.contains([0.0, 0.0]) and rep.contains([0.0, 1.0]) and rep.contains([0.0, 0.5])
    assert not rep.contains([0.0, -1.0])
    rep = distance_subdiff_at_infinity(half, [1.0, 1.0], FAST)
    assert rep.contains([0.0, 1.0])


def test_sum_rule_qualification_can_fail():
    # x1^2 has singular rays +-(1, 0) along (0, 1); the half-plane x1 <= 0 has normal (1, 0)
    f1 = Quad([[1.0, 0.0], [0.0, 0.0]])
    f2 = Indicator(HPolyhedron([[1.0, 0.0]], [0.0]))
    rep = sum_rule_check(f1, f2, [0.0, 1.0])
    assert rep.qualification is False and rep.witnesses


trees = st.sampled_from([
    Affine([1.0, 2.0, -1.0], 0.5),
    Quad([[1.0, 0.2, 0.3], [0.2, 2.0, 0.1], [0.3, 0.1, 1.0]]),
    ExpAffine([0.1, -0.2, 0.3]),
    PowerAbs([1.0, 0.0, 2.0], 1.0, 1.5),
    Sum((Quad(np.eye(3)), Max((Affine([1.0, 0.0, 1.0]), Affine([0.0, 1.0, -1.0]))))),
    Piecewise([1.0, 0.0, 1.0], 0.0, Affine([-1.0, 0.0, 0.0]), Affine([1.0, 0.0, 2.0])),
    Indicator(HPolyhedron([[1.0, 1.0, 1.0]], [4.0])),
])


@settings(max_examples=60)
@given(trees, st.floats(-3, 3), st.floats(-3, 3), st.floats(-3, 3))
def test_restriction_agrees_with_slice(F, x1, x2, y):
    G = restrict(F, [y], 2)
    assert value(G, [x1, x2]) == pytest.approx(value(F, [x1, x2, y]), rel=1e-12, abs=1e-12)


def test_restriction_limits():
    with pytest.raises(UnsupportedError):
        restrict(Dist(HPolyhedron.box([0, 0], [1, 1])), [0.5], 1)
    with pytest.raises(UnsupportedError):
        restrict(Norm(2), [1.0], 1)
    assert value(restrict(Norm(2), [0.0], 1), [-3.0]) == 3.0


def test_serialization():
    A = estimate_dir_subdiff(Affine([1.0, 0.0]), [1.0, 0.0], FAST, record_samples=True)
    doc = json.loads(json.dumps(A.to_json()))
    assert doc["status"] in ("OK", "Inconclusive") and doc["direction"] == [1.0, 0.0]
    header = A.samples_csv().splitlines()[0]
    assert header == "family,rung,t,x0,x1,g0,g1,log_scale"
    assert len(A.samples_csv().splitlines()) > 1
