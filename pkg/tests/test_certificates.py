import json
import warnings

import numpy as np
import pytest

from dirinf import (Affine, Direction, EstimatorParams, ExpAffine, HPolyhedron, Max, Norm,
                    PowerAbs, Quad, Sum)
from dirinf.certificates import (ProblemSpec, constraint_normal_cone_estimate,
                                 error_bound_certificate, existence_certificate,
                                 optimality_at_infinity_check, ray_existence_check,
                                 recession_directions)
from dirinf.errors import (EmptySetError, GridTooCoarse, LipschitzPreconditionFailed,
                           NotInDomainError, NotMemberError, ParseError)
from dirinf.oracle import ray_line_search

FAST = EstimatorParams(M=64, K=6)
FREE = HPolyhedron.free(2)


def test_problem_spec_validation():
    with pytest.raises(ValueError):
        ProblemSpec(Affine([1.0, 0.0, 0.0]), FREE)
    with pytest.raises(EmptySetError):
        ProblemSpec(Affine([1.0, 0.0]), HPolyhedron([[1.0, 0.0], [-1.0, 0.0]], [0.0, -1.0]))


def test_problem_spec_json_round_trip():
    ps = ProblemSpec(Sum((Quad(np.eye(2)), Affine([1.0, 0.0]))), HPolyhedron([[0.0, 1.0]], [2.0]),
                     g=(Affine([1.0, 1.0], -1.0),))
    doc = json.loads(json.dumps(ps.to_json()))
    back = ProblemSpec.from_json(doc)
    assert back.to_json() == ps.to_json()
    assert ProblemSpec.from_json({"objective": doc["objective"]}).Omega.m == 0


@pytest.mark.parametrize("doc,loc", [
    ([], "$"),
    ({"objective": {"norm": {"n": 2}}, "extra": 1}, "$"),
    ({"omega": {"A": [[1.0]], "b": [0.0]}}, "$"),
    ({"objective": {"affine": {"c": [1.0]}}, "g": [{"nope": 1}]}, "$.g[0]"),
])
def test_problem_spec_parse_errors(doc, loc):
    with pytest.raises(ParseError) as info:
        ProblemSpec.from_json(doc)
    assert info.value.location.startswith(loc)


def test_recession_directions():
    assert recession_directions(HPolyhedron.box([0, 0], [1, 1])) == []
    dirs = recession_directions(FREE, 16)
    assert len(dirs) == 16
    assert any(np.allclose(d.coords, [1.0, 0.0]) for d in dirs)
    half = recession_directions(HPolyhedron([[0.0, 1.0]], [0.0]), 16)
    assert half and all(d.coords[1] <= 1e-12 for d in half)
    line = recession_directions(HPolyhedron(None, None, [[1.0, -1.0]], [0.0]), 16)
    assert sorted(np.round(d.coords, 6).tolist() for d in line) == \
        sorted([[-0.707107, -0.707107], [0.707107, 0.707107]])


def test_optimality_excludes_against_linear_decrease():
    # the gradient never vanishes, yet values decrease: the oracle flags it
    c = np.array([1.0, 2.0])
    cert = optimality_at_infinity_check(ProblemSpec(Affine(c), FREE), -c, FAST)
    assert cert.status == "Fails" and cert.direction_reports[0].excluded == "Holds"
    assert cert.oracle["ray_unbounded"] and "lower boundedness" in cert.summary


def test_optimality_holds_when_gradient_vanishes():
    f = Sum((Quad([[1.0, 0.0], [0.0, 0.0]]), ExpAffine([0.0, 1.0])))
    cert = optimality_at_infinity_check(ProblemSpec(f, FREE), [0.0, -1.0], FAST)
    assert cert.status == "Holds" and cert.direction_reports[0].route == "theorem"
    cert = optimality_at_infinity_check(ProblemSpec(f, FREE), [0.0, 1.0], FAST)
    assert cert.status == "Fails"


def test_optimality_rejects_non_recession_direction():
    ps = ProblemSpec(Quad(np.eye(2)), HPolyhedron([[1.0, 0.0]], [0.0]))
    with pytest.raises(NotMemberError):
        optimality_at_infinity_check(ps, [1.0, 0.0], FAST)


CONSISTENCY = [
    (Affine([1.0, 2.0]), [-1.0, -2.0]),
    (Affine([1.0, 2.0]), [2.0, -1.0]),
    (Quad(np.eye(2)), [1.0, 1.0]),
    (Norm(2), [0.0, 1.0]),
    (Sum((Quad([[1.0, 0.0], [0.0, 0.0]]), ExpAffine([0.0, 1.0]))), [0.0, -1.0]),
    (Max((Affine([1.0, 0.0]), Affine([-1.0, 0.0]))), [0.0, 1.0]),
    (PowerAbs([1.0, -1.0], 0.0, 1.0), [1.0, 1.0]),
]


@pytest.mark.parametrize("f,u", CONSISTENCY)
def test_excluded_directions_are_not_descent_rays(f, u):
    # an excluded direction cannot carry values decreasing without bound
    cert = optimality_at_infinity_check(ProblemSpec(f, FREE), u, FAST)
    _, _, unbounded = ray_line_search(f, [0.0, 0.0], u)
    if cert.status == "Fails" and cert.direction_reports[0].route == "theorem":
        assert not unbounded or cert.oracle["ray_unbounded"]
    if unbounded:
        assert cert.oracle["ray_unbounded"]


def test_ray_existence():
    ps = ProblemSpec(Quad(np.eye(2)), FREE)
    cert = ray_existence_check(ps, [-3.0, 0.0], [1.0, 0.0], FAST)
    assert cert.status == "Holds" and cert.oracle["best_t"] == pytest.approx(3.0, abs=1e-6)
    cert = ray_existence_check(ProblemSpec(Affine([-1.0, 0.0]), FREE), [0.0, 0.0], [1.0, 0.0], FAST)
    assert cert.status == "Fails" and cert.oracle["unbounded"]


def test_ray_meeting_a_bounded_segment():
    ps = ProblemSpec(Affine([-1.0, 0.0]), HPolyhedron([[1.0, 0.0]], [5.0]))
    cert = ray_existence_check(ps, [0.0, 0.0], [1.0, 0.0], FAST)
    assert cert.status == "Holds" and not cert.oracle["unbounded"]
    assert cert.oracle["best_point"] == pytest.approx([5.0, 0.0])


def test_ray_existence_input_errors():
    ps = ProblemSpec(Quad(np.eye(2)), HPolyhedron([[1.0, 0.0]], [0.0]))
    with pytest.raises(NotMemberError):
        ray_existence_check(ps, [1.0, 0.0], [0.0, 1.0], FAST)
    from dirinf import Indicator
    ps = ProblemSpec(Indicator(HPolyhedron([[1.0, 0.0]], [-1.0])), FREE)
    with pytest.raises(NotInDomainError):
        ray_existence_check(ps, [0.0, 0.0], [0.0, 1.0], FAST)


def test_constraint_qualification():
    rep = constraint_normal_cone_estimate([Affine([1.0, 0.0], -1.0)], [], FREE, [1.0, 0.0], FAST)
    assert rep.lcq and rep.multipliers is None and rep.outer_cone.contains([3.0, 0.0])
    # x1 <= 0 and -x1 <= 0 cancel with equal weights
    rep = constraint_normal_cone_estimate([Affine([1.0, 0.0]), Affine([-1.0, 0.0])], [], FREE,
                                          [0.0, 1.0], FAST)
    assert not rep.lcq and rep.multipliers == pytest.approx([0.5, 0.5], abs=1e-2)
    rep = constraint_normal_cone_estimate([], [Affine([1.0, 0.0])], FREE, [0.0, 1.0], FAST)
    assert rep.lcq and rep.outer_cone.contains([1.0, 0.0]) and rep.outer_cone.contains([-1.0, 0.0])
    with pytest.raises(LipschitzPreconditionFailed):
        constraint_normal_cone_estimate([ExpAffine([1.0, 0.0])], [], FREE, [1.0, 0.0], FAST)


def test_error_bound_fails_for_flat_constraint():
    # g = 0 everywhere: 0 is a limiting subgradient along every direction
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", GridTooCoarse)
        cert = error_bound_certificate(Affine([0.0, 0.0]), FREE, 8, FAST)
    assert cert.status == "Fails"


def test_error_bound_with_two_constraints():
    gs = [Affine([1.0, 0.0], -1.0), Affine([0.0, 1.0], -1.0)]
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", GridTooCoarse)
        cert = error_bound_certificate(gs, FREE, 8, FAST)
    assert cert.status == "Holds"
    assert cert.oracle["alpha_hat"] == pytest.approx(1.0, rel=1e-4)


def test_existence_and_serialization():
    ps = ProblemSpec(Quad(np.eye(2)), FREE)
    cert = existence_certificate(ps, 8, FAST)
    assert cert.status == "Holds" and len(cert.direction_reports) == 8
    doc = json.loads(json.dumps(cert.to_json()))
    assert doc["theorem"] == "existence" and doc["grid"] == 8
    assert all(r["excluded"] == "Holds" for r in doc["directions"])
    cert = existence_certificate(ProblemSpec(Affine([1.0, 0.0]), HPolyhedron.box([0, 0], [1, 1])), 8, FAST)
    assert cert.status == "Holds" and cert.direction_reports == []


def test_direction_report_passed_flag():
    cert = optimality_at_infinity_check(ProblemSpec(Quad(np.eye(2)), FREE), Direction([1.0, 0.0]), FAST)
    rep = cert.direction_reports[0]
    assert rep.passed == (rep.excluded == "Holds" and rep.stability >= 0.5)
