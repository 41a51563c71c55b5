import numpy as np
import pytest

from dirop import polyexact as px
from dirop import regcheck as rc
from dirop.polyexact import Polyhedron

from conftest import F, cusp_graph_problem, disk_problem, parabola_problem, problem, quadrant_problem


def test_neighborhood_membership():
    V = rc.DirectionalNeighborhood((1, 0), 0.5, 2.0)
    assert V.contains((1, 0.1)) and V.contains((0, 0))
    assert not V.contains((3, 0)) and not V.contains((0, 1))
    full = rc.DirectionalNeighborhood((0, 0), 0.5, 1.0)
    assert full.contains((0, -0.9)) and not full.contains((0, -1.1))
    W = V.sample(500, np.random.default_rng(0))
    assert np.all(V.contains_rows(W))
    r = np.linalg.norm(W, axis=1)
    assert r.min() >= 2.0 * 1e-4 * (1 - 1e-12) and r.max() <= 2.0


def test_neighborhood_rejects_bad_parameters():
    with pytest.raises(ValueError):
        rc.DirectionalNeighborhood((1,), 0, 1)


@pytest.mark.parametrize("seed", range(5))
def test_disk_modulus_is_one(seed):
    P = disk_problem()
    rep = rc.mscq_estimate(P, F(0), F(1), rc.DirectionalNeighborhood((1,), 0.5, 2.0), 1000, seed)
    assert rep.verdict == "consistent"
    assert 1 - 1e-3 <= rep.kappa <= 1 + 1e-3


def test_identity_map_modulus():
    P = problem("x1", ["x1", "x2"], "levelset(y2^2/2 - y1 <= 0)")
    rep = rc.mscq_estimate(P, F(0, 0), F(-1, 0), rc.DirectionalNeighborhood((-1, 0), 0.5, 0.5), 400, 0)
    assert rep.kappa == pytest.approx(1, abs=1e-6)


def test_squared_map_modulus_diverges():
    P = problem("x", ["x^2"], "polyhedron(y = 0)", ["x"], ["y"])
    rep = rc.mscq_estimate(P, F(0), F(1), rc.DirectionalNeighborhood((1,), 0.5, 1.0), 500, 0)
    assert rep.verdict == "inconclusive"
    assert rep.kappa > 100


def test_degenerate_sampling_and_infeasible_point():
    P = problem("x", ["x"], "polyhedron(y >= -100)", ["x"], ["y"])
    with pytest.raises(rc.DegenerateSampling):
        rc.mscq_estimate(P, F(0), F(1), rc.DirectionalNeighborhood((1,), 0.5, 1.0), 100, 0)
    with pytest.raises(rc.InfeasiblePoint):
        rc.mscq_estimate(P, F(-200), F(1), rc.DirectionalNeighborhood((1,), 0.5, 1.0), 100, 0)


def test_dirrcq_parabola_holds():
    assert rc.dirrcq_check(parabola_problem(), F(0, 0), F(0, 1)).verdict == "holds"


def test_dirrcq_fails_with_opposite_normals():
    # N = R+(1,1) and J^T lam = lam1 - lam2 vanishes on it
    P = problem("x1", ["x1", "-x1"], "polyhedron(y1 + y2 <= 0)")
    r = rc.dirrcq_check(P, F(0, 0), F(0, 0))
    assert r.verdict == "fails"
    assert r.witness[0] == r.witness[1] != 0


def test_duplicated_constraint_is_degenerate_but_dirrcq_holds():
    # N = R2+ and J^T lam = 0 force lam1 = -lam2 >= 0, so only the span test fails
    P = problem("x1", ["x1", "x1"], "polyhedron(y1 <= 0, y2 <= 0)")
    assert rc.dirrcq_check(P, F(0, 0), F(0, 0)).verdict == "holds"
    r = rc.nondegeneracy_check(P, F(0, 0), F(0, 0))
    assert r.verdict == "fails"
    assert r.witness[0] == -r.witness[1] != 0


def test_nondegeneracy_examples():
    assert rc.nondegeneracy_check(parabola_problem(), F(0, 0), F(0, 1)).verdict == "holds"
    assert rc.nondegeneracy_check(cusp_graph_problem(), F(0, 0), F(1, 0)).verdict == "holds"
    P = problem("x", ["x"], "polyhedron(y <= 0)", ["x"], ["y"])
    r = rc.nondegeneracy_check(P, F(0), F(0))
    assert r.verdict == "holds" and r.values["span_dim"] == 1


FIXTURES = [
    ("parabola", parabola_problem, F(0, 0), F(0, 1)),
    ("disk", disk_problem, F(0), F(1)),
    ("quadrant-linear", lambda: quadrant_problem("(x1+1)^2"), F(0, 0), F(1, 1)),
    ("quadrant-quadratic", lambda: quadrant_problem("x2^2"), F(0, 0), F(0, 1)),
    ("quadrant-axis", lambda: quadrant_problem("x1"), F(0, 0), F(0, 1)),
    ("duplicated", lambda: problem("x1", ["x1", "x1"], "polyhedron(y1 <= 0, y2 <= 0)"), F(0, 0), F(0, 0)),
    ("cusp-graph", cusp_graph_problem, F(0, 0), F(1, 0)),
]


@pytest.mark.parametrize("name,make,x,d", FIXTURES, ids=[f[0] for f in FIXTURES])
def test_nondegeneracy_implies_dirrcq(name, make, x, d):
    P = make()
    nd = rc.nondegeneracy_check(P, x, d)
    dr = rc.dirrcq_check(P, x, d)
    if nd.verdict == "holds":
        assert dr.verdict == "holds"


@pytest.mark.parametrize("name,make,x,d", FIXTURES, ids=[f[0] for f in FIXTURES])
def test_dirrcq_bounds_clarke_multipliers(name, make, x, d):
    from dirop import normallab as nl
    P = make()
    if rc.dirrcq_check(P, x, d).verdict != "holds":
        return
    J, _, y = P.jacobian_data(x, d)
    N = P.normal_K(y, px.matvec(J, d))
    cone = nl.clarke_directional_normal(N)
    if cone is None:
        return
    gf = P.grad_f(x)
    JT = px.transpose([list(r) for r in J])
    L = Polyhedron(list(cone.A), list(cone.b), P.m, eq_A=JT, eq_b=[-v for v in gf])
    if px.is_empty(L):
        return
    for j in range(P.m):
        for sgn in (1, -1):
            c = [0] * P.m
            c[j] = sgn
            assert px.lp_solve(c, L).status == "Optimal"
