import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.optimize import minimize

from dirinf import (Direction, HPolyhedron, dir_normal_cone_at_infinity, enumerate_faces,
                    intersection_rule_check, nontriviality_check, normal_cone_at_infinity)
from dirinf.errors import BoundedSetError, EmptySetError, NotMemberError
from dirinf.poly_infinity import (DirNeighborhood, distance_to, in_dir_neighborhood,
                                  project_onto)

from helpers import CONE, cone_samples, random_unbounded_polyhedron, recession_sample

seeds = st.integers(min_value=0, max_value=2**32 - 1)
HALFPLANE = HPolyhedron([[0.0, 1.0]], [0.0])  # x2 <= 0


def _same_union(U, V, rng, count=200):
    probes = cone_samples(U, rng, count) + cone_samples(V, rng, count)
    return all(U.contains(x, 1e-7) == V.contains(x, 1e-7) for x in probes)


def test_faces_of_box_and_cone():
    box = HPolyhedron.box([0, 0], [1, 1])
    faces = enumerate_faces(box)
    assert len(faces) == 9  # 4 vertices, 4 edges, the interior
    assert not any(F.unbounded for F in faces)
    faces = enumerate_faces(CONE)
    assert sorted(len(F.active_set) for F in faces) == [0, 1, 1, 2]
    for F in faces:
        x = F.witness
        act = np.zeros(CONE.m, dtype=bool)
        act[list(F.active_set)] = True
        slack = CONE.b - CONE.A @ x
        assert np.all(np.abs(slack[act]) <= 1e-9) and np.all(slack[~act] > 0)


def test_cone_example_directional_cones():
    s5 = math.sqrt(5)
    Nu = dir_normal_cone_at_infinity(CONE, [2, 1])
    Nv = dir_normal_cone_at_infinity(CONE, [1, 2])
    assert Nu.contains([1, -2]) and not Nu.contains([-2, 1])
    assert Nv.contains([-2, 1]) and not Nv.contains([1, -2])
    assert Nu.contains([0, 0])
    Ni = dir_normal_cone_at_infinity(CONE, [1, 1])
    assert Ni.is_zero()
    assert dir_normal_cone_at_infinity(CONE, [-1, 0]).is_empty()
    N = normal_cone_at_infinity(CONE)
    assert N.contains([1 / s5, -2 / s5]) and N.contains([-2, 1]) and not N.contains([-1, -1])


def test_halfplane_and_line():
    N = dir_normal_cone_at_infinity(HALFPLANE, [1, 0])
    assert N.contains([0, 1]) and N.contains([0, 0]) and not N.contains([0, -1])
    assert dir_normal_cone_at_infinity(HALFPLANE, [1, -1]).is_zero()
    line = HPolyhedron(None, None, [[1.0, 0.0]], [0.0])
    N = dir_normal_cone_at_infinity(line, [0, 1])
    assert N.contains([1, 0]) and N.contains([-1, 0])


def test_errors():
    with pytest.raises(BoundedSetError):
        normal_cone_at_infinity(HPolyhedron.box([0, 0], [1, 1]))
    with pytest.raises(EmptySetError):
        dir_normal_cone_at_infinity(HPolyhedron([[1.0], [-1.0]], [0.0, -1.0]), [1.0])
    with pytest.raises(NotMemberError):
        nontriviality_check(CONE, [-1, 0])


@given(seeds)
def test_directional_cone_inside_full_cone(seed):
    rng = np.random.default_rng(seed)
    P = random_unbounded_polyhedron(rng)
    u = recession_sample(P, rng)
    Nu = dir_normal_cone_at_infinity(P, u)
    N = normal_cone_at_infinity(P)
    assert all(N.contains(x, 1e-7) for x in cone_samples(Nu, rng, 30))


@given(seeds)
def test_invariant_under_row_scaling_and_translation(seed):
    rng = np.random.default_rng(seed)
    P = random_unbounded_polyhedron(rng, equalities=False)
    u = recession_sample(P, rng)
    D = rng.uniform(0.1, 10.0, P.m)
    shift = rng.standard_normal(P.n)
    Q = HPolyhedron(P.A * D[:, None], (P.b + P.A @ shift) * D)
    assert _same_union(dir_normal_cone_at_infinity(P, u), dir_normal_cone_at_infinity(Q, u), rng)


@given(seeds)
def test_nontriviality_consistent(seed):
    rng = np.random.default_rng(seed)
    P = random_unbounded_polyhedron(rng)
    rep = nontriviality_check(P, recession_sample(P, rng))
    assert rep.consistent
    if rep.lhs:
        assert np.linalg.norm(rep.witnesses[0]) > 0


def test_intersection_rule_examples():
    P1 = HPolyhedron([[0.0, 1.0]], [0.0])
    P2 = HPolyhedron([[0.0, -1.0]], [0.0])
    rep = intersection_rule_check(P1, P2, [1, 0])
    assert not rep.qualification  # (0,1) and (0,-1) cancel
    assert rep.rule_consistent
    rep = intersection_rule_check(CONE, HPolyhedron([[-1.0, 0.0]], [5.0]), [2, 1])
    assert rep.qualification and rep.inclusion


@given(seeds)
def test_intersection_rule_consistent(seed):
    rng = np.random.default_rng(seed)
    P1 = random_unbounded_polyhedron(rng, n=2, max_rows=3)
    P2 = random_unbounded_polyhedron(rng, n=2, max_rows=3)
    P12 = P1.intersect(P2)
    from dirinf import recession_cone
    if recession_cone(P12).is_zero():
        return
    rep = intersection_rule_check(P1, P2, recession_sample(P12, rng))
    assert rep.rule_consistent


@given(seeds)
def test_projection_matches_qp(seed):
    rng = np.random.default_rng(seed)
    P = random_unbounded_polyhedron(rng)
    x = 3 * rng.standard_normal(P.n)
    y = project_onto(P, x)
    assert P.contains(y, 1e-7)
    cons = [{"type": "ineq", "fun": lambda z: P.b - P.A @ z}]
    if P.p:
        cons.append({"type": "eq", "fun": lambda z: P.E @ z - P.d})
    ref = minimize(lambda z: np.sum((z - x) ** 2), P.feasible_point, constraints=cons,
                   method="SLSQP", options={"ftol": 1e-14, "maxiter": 500})
    assert np.linalg.norm(y - x) <= np.linalg.norm(ref.x - x) + 1e-6
    assert np.allclose(project_onto(P, y), y)
    assert distance_to(P, x) == pytest.approx(np.linalg.norm(y - x))


def test_directional_neighborhood():
    V = DirNeighborhood(Direction([1, 0]), R=10.0, delta=0.1)
    assert in_dir_neighborhood(V, [20.0, 1.0])
    assert not in_dir_neighborhood(V, [5.0, 0.0])
    assert not in_dir_neighborhood(V, [20.0, 10.0])
    with pytest.raises(ValueError):
        DirNeighborhood(Direction([1, 0]), R=-1.0)
