import random
from fractions import Fraction

import numpy as np
import pytest

from dirop import polyexact as px
from dirop import setlib as sl
from dirop import tangentlab as tl
from dirop.polyexact import Polyhedron

from conftest import F, disk_problem, parabola_problem, polyhedral_instances

X = ["x1", "x2"]
CUSP = sl.parse_set("levelset(x1^2 - x2^3 = 0)", X)
GRAPH = sl.parse_set("levelset(x2 - abs(x1)^(3/2) = 0)", X)
DISK = sl.parse_set("ball((1,0); 1)", X)
PARAB_K = sl.parse_set("levelset(x2^2/2 - x1 <= 0)", X)
QUAD = sl.parse_set("polyhedron(x1 >= 0, x2 >= 0)", X)
ORIGIN = F(0, 0)


def _poly(text, names=X):
    return sl.parse_set(text, names).P


def test_tangent_cone_of_parabola_region():
    C = sl.parse_set("levelset(x1 - x2^2 >= 0)", X)
    T = tl.tangent_cone(C, ORIGIN)
    assert T.exact and px.equal(T.poly, _poly("polyhedron(x1 >= 0)"))


def test_tangent_cone_of_cusp_is_the_upward_ray():
    T = tl.tangent_cone(CUSP, ORIGIN)
    assert T.rep == "Oracle"
    assert T.contains((0, 1)) and T.contains((0, 3))
    for w in [(1, 0), (0, -1), (1, 1), (-1, 2)]:
        assert T.contains(w) is False


def test_tangent_cone_interior_interval():
    C = sl.parse_set("levelset(x^2 - 1 <= 0)", ["x"])
    T = tl.tangent_cone(C, F(0))
    assert T.exact and T.poly.k == 0


def test_point_not_in_set():
    with pytest.raises(tl.PointNotInSet):
        tl.tangent_cone(QUAD, F(-1, 0))


def test_outer_second_disk_and_parabola():
    T2 = tl.outer_second_tangent(DISK, ORIGIN, F(0, 1))
    assert T2.rep == "ExactAffineShift" and px.equal(T2.poly, _poly("polyhedron(x1 >= 1)"))
    T2 = tl.outer_second_tangent(PARAB_K, ORIGIN, F(0, 2))
    assert px.equal(T2.poly, _poly("polyhedron(x1 >= 4)"))


def test_outer_second_cusp_empty_at_scale():
    T2 = tl.outer_second_tangent(CUSP, ORIGIN, F(0, 1))
    assert T2.rep == "ProvablyEmptyAtScale" and T2.evidence["radius"] == 10
    assert T2.is_empty() is True


def test_direction_not_tangent():
    with pytest.raises(tl.DirectionNotTangent):
        tl.outer_second_tangent(QUAD, ORIGIN, F(-1, 0))
    with pytest.raises(tl.DirectionNotTangent):
        tl.outer_second_tangent(CUSP, ORIGIN, F(1, 0))


def test_asymptotic_cusp_is_whole_plane_on_lattice():
    Tpp = tl.asymptotic_second_tangent(CUSP, ORIGIN, F(0, 1))
    st = Tpp.scan()["status"]
    assert len(st) == 441 and all(s == "member" for s in st)


def test_asymptotic_cusp_graph_is_upper_halfplane():
    Tpp = tl.asymptotic_second_tangent(GRAPH, ORIGIN, F(1, 0))
    sc = Tpp.scan(3)
    for w, s in zip(sc["points"], sc["status"]):
        if w[1] >= 0:
            assert s == "member", w
        else:
            assert s in ("nonmember", "divergent"), w


def test_asymptotic_quadrant_interior_direction():
    Tpp = tl.asymptotic_second_tangent(QUAD, ORIGIN, F(1, 1))
    assert Tpp.exact and Tpp.poly.k == 0


def test_zero_direction_returns_tangent_cone():
    T2 = tl.outer_second_tangent(QUAD, ORIGIN, F(0, 0))
    assert px.equal(T2.poly, QUAD.P)


def test_nonemptiness_examples():
    r = tl.nonemptiness_check(CUSP, ORIGIN, F(0, 1))
    assert r.verdict == "holds" and r.source == "asymptotic" and any(v != 0 for v in r.witness)
    r = tl.nonemptiness_check(QUAD, ORIGIN, F(0, 1))
    assert r.verdict == "holds"
    r = tl.nonemptiness_check(DISK, ORIGIN, F(0, 1))
    assert r.verdict == "holds" and r.witness[0] >= 1


@pytest.mark.parametrize("S,d", [(DISK, F(0, 1)), (PARAB_K, F(0, 2)), (GRAPH, F(1, 0)), (QUAD, F(1, 0))],
                         ids=["disk", "parabola", "graph", "quadrant"])
def test_nonemptiness_on_fixtures(S, d):
    assert tl.nonemptiness_check(S, ORIGIN, d).verdict == "holds"


def test_chain_rule_disk():
    P = disk_problem()
    cs = tl.chain_rule_sets(P, F(0), F(1), 1.0)
    assert px.equal(cs.Omega, Polyhedron([], [], 2, eq_A=[[1, 0]], eq_b=[2]))
    assert px.equal(cs.Theta, Polyhedron([], [], 2, eq_A=[[1, 0]], eq_b=[0]))
    assert cs.T2C.k == 0 and cs.TppC.k == 0


def test_chain_rule_parabola():
    P = parabola_problem()
    cs = tl.chain_rule_sets(P, ORIGIN, F(0, 1), 1.0)
    assert px.equal(cs.T2C, _poly("polyhedron(x1 >= 2)"))
    assert px.equal(cs.Omega, _poly("polyhedron(x1 >= 4)"))


def test_chain_rule_without_mscq_is_flagged():
    cs = tl.chain_rule_sets(disk_problem(), F(0), F(1))
    assert any("MSCQ" in n for n in cs.notes)


# random polyhedra ------------------------------------------------------------

def test_scaling_identities_on_polyhedra():
    for S, d in polyhedral_instances(60, 1):
        T2 = tl.outer_second_tangent(S, ORIGIN, d).poly
        Tpp = tl.asymptotic_second_tangent(S, ORIGIN, d).poly
        for t in (Fraction(2), Fraction(1, 3)):
            td = tuple(t * v for v in d)
            T2t = tl.outer_second_tangent(S, ORIGIN, td).poly
            scaled = Polyhedron(T2.A, [t * t * v for v in T2.b], 2)
            assert px.equal(T2t, scaled)
            assert px.equal(tl.asymptotic_second_tangent(S, ORIGIN, td).poly, Tpp)


def test_additivity_on_polyhedra():
    for S, d in polyhedral_instances(60, 2):
        hat = tl.tangent_hat(S, ORIGIN, d)
        T2 = tl.outer_second_tangent(S, ORIGIN, d).poly
        Tpp = tl.asymptotic_second_tangent(S, ORIGIN, d).poly
        # A + C = A for a cone C containing 0: the sum is in A, and A is in the sum trivially
        assert px.sum_contained_in(T2, hat, T2)
        assert px.sum_contained_in(Tpp, hat, Tpp)


def test_convex_outer_inside_asymptotic():
    for S, d in polyhedral_instances(50, 3):
        T2 = tl.outer_second_tangent(S, ORIGIN, d).poly
        Tpp = tl.asymptotic_second_tangent(S, ORIGIN, d).poly
        assert px.contains(T2, Tpp)


def test_oracle_agrees_with_exact_on_random_polyhedra():
    grid = np.array([(a, b) for a in range(-2, 3) for b in range(-2, 3)], float)
    for S, d in polyhedral_instances(50, 4):
        for kind, fn in ((tl.OUTER, tl.outer_second_tangent), (tl.ASYM, tl.asymptotic_second_tangent)):
            exact = fn(S, ORIGIN, d).poly
            oracle = tl.SequenceOracle(S, ORIGIN, d, kind)
            for w, v in zip(grid, oracle.classify(grid)):
                want = exact.contains(F(*w.astype(int)))
                slack = max(float(bv) - float(np.dot(a, w)) for a, bv in zip(np.array(exact.A, float), exact.b)) \
                    if exact.k else 1.0
                if abs(slack) < 1e-7:
                    continue  # boundary points are decided at tolerance 1e-7 either way
                assert v.value == want, (S.P.A, S.P.b, d, kind, w, v.status)


def test_classify_tail_rules():
    ts = tl.DEFAULT_SCHEDULE.tail_ts()
    assert tl.classify_tail(np.full(10, 1e-9), ts, 0.0) == "member"
    assert tl.classify_tail(np.geomspace(1e2, 1e6, 10), ts, 0.0) == "divergent"
    assert tl.classify_tail(np.full(10, 0.5), ts, 0.0) == "nonmember"
