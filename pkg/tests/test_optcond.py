from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from conftest import F, X1, cusp_graph_problem, disk_problem, parabola_problem, problem, quadrant_problem
from dirop import optcond as oc
from dirop import polyexact as px
from dirop import regcheck as rc
from dirop import tangentlab as tl
from dirop.polyexact import Polyhedron

INF = float("inf")
O2 = F(0, 0)


def variant_problem():
    return problem("x1 + x1^2 + x2^2", ["x1 + x2^2", "2*x2"],
                   "intersect(polyhedron(y1 >= 0), levelset(y1^2 - y2^3 = 0))",
                   declared={"tpp_K": Polyhedron([[-1, 0]], [0], 2)}, declared_at=(O2, F(0, 2)))


# critical cone


def test_critical_cone_parabola(parabola):
    cc = oc.critical_cone(parabola, O2)
    assert cc.exact and len(cc.polys) == 1
    assert px.equal(cc.polys[0], Polyhedron([], [], 2, eq_A=[[1, 0]], eq_b=[0]))
    assert cc.contains(F(0, 1)) and cc.contains(F(0, -3))
    assert not cc.contains(F(1, 0))


def test_critical_cone_whole_space_is_descent_halfspace():
    P = problem("x1 - 2*x2", ["x1", "x2"], "polyhedron()")
    cc = oc.critical_cone(P, O2)
    assert px.equal(cc.polys[0], Polyhedron([[1, -2]], [0], 2))


def test_critical_cone_disk_is_the_line(disk):
    # grad f(0) = 0 and T_K(0) = {y1 >= 0}; the first row of the Jacobian is zero
    cc = oc.critical_cone(disk, F(0))
    assert cc.contains(F(1)) and cc.contains(F(-1))
    assert cc.describe(X1) == "R^1"


def test_critical_cone_infeasible(parabola):
    with pytest.raises(Exception, match="not in K"):
        oc.critical_cone(parabola, F(-1, 0))


# first order


def test_fonc_quadrant_linear():
    P = quadrant_problem("(x1 + 1)^2")
    r = oc.fonc_check(P, O2, F(1, 1))
    assert r.values["grad_f_d"] == 2
    assert r.parts["i"].verdict == oc.HOLDS
    assert r.parts["ii"].verdict == oc.NOT_APPLICABLE
    assert r.values["minus_grad_in_normal"] is False


def test_fonc_linear_on_orthant():
    P = quadrant_problem("x1")
    r = oc.fonc_check(P, O2, F(0, 1))
    assert r.values["grad_f_d"] == 0
    assert r.verdict == oc.HOLDS
    # -grad f = (-1, 0) lies in N_C(0; (0,1)) = R- x {0}
    assert r.values["minus_grad_in_normal"] is True


def test_fonc_fails_on_descent_direction():
    r = oc.fonc_check(quadrant_problem("-x2"), O2, F(0, 1))
    assert r.parts["i"].verdict == oc.FAILS and r.verdict == oc.FAILS


def test_fonc_rejects_non_tangent_direction():
    with pytest.raises(tl.DirectionNotTangent):
        oc.fonc_check(quadrant_problem("x1"), O2, F(-1, 0))


def test_fonc_parabola(parabola):
    r = oc.fonc_check(parabola, O2, F(0, 1))
    assert r.verdict == oc.HOLDS
    assert r.values["minus_grad_in_normal"] is True


def test_fonc_multiplier_form_cusp_graph(cusp_graph):
    r = oc.fonc_check(cusp_graph, O2, F(1, 0))
    assert r.parts["i"].verdict == oc.HOLDS
    if "multipliers" in r.parts["ii"].values:
        assert F(0, -2) in r.parts["ii"].values["multipliers"]
    assert r.verdict != oc.FAILS


# multipliers


def test_multipliers_disk(disk):
    M = oc.multiplier_set(disk, F(0), F(1))
    assert M.nonempty is True
    ms = M.members()
    assert F(-2, 0) in ms
    # stationarity forces the second component to vanish; N_K(0) = R- x {0}
    assert all(m[1] == 0 and m[0] <= 0 for m in ms)


def test_multipliers_parabola(parabola):
    M = oc.multiplier_set(parabola, O2, F(0, 1))
    assert M.members() == [F(-1, 0)]
    assert M.kernel == []


def test_multipliers_cusp_graph(cusp_graph):
    M = oc.multiplier_set(cusp_graph, O2, F(1, 0))
    assert M.members() == [F(0, -2)]


def test_multipliers_none_when_stationarity_is_unsolvable():
    P = problem("x1", ["x2"], "polyhedron(y1 <= 0)", kvars=["y1"])
    M = oc.multiplier_set(P, O2, F(0, 0))
    assert M.nonempty is False and M.members() == []


def test_multiplier_bound_note(parabola):
    M = oc.multiplier_set(parabola, O2, F(0, 1), kappa=2.0)
    assert any("ok" in n for n in M.notes)


# primal second order


def test_sonc_primal_quadrant_quadratic():
    r = oc.sonc_primal(quadrant_problem("x2^2"), O2, F(0, 1))
    assert r.values["alpha"] == 2
    assert r.verdict == oc.HOLDS


def test_sonc_primal_disk(disk):
    r = oc.sonc_primal(disk, F(0), F(1), mscq=1.0)
    # T2_C(0;1) = R and grad f(0) = 0, so alpha = f''(0) = 1
    assert r.values["alpha"] == 1
    assert r.verdict == oc.HOLDS


def test_sonc_primal_without_mscq_is_inconclusive(disk):
    r = oc.sonc_primal(disk, F(0), F(1))
    assert r.verdict == oc.INCONCLUSIVE


def test_sonc_primal_fails_on_concave_objective():
    r = oc.sonc_primal(quadrant_problem("-x2^2"), O2, F(0, 1))
    assert r.values["alpha"] == -2 and r.verdict == oc.FAILS


def test_sonc_primal_not_applicable_off_critical_cone():
    r = oc.sonc_primal(quadrant_problem("(x1 + 1)^2"), O2, F(1, 1))
    assert r.verdict == oc.NOT_APPLICABLE and r.values["grad_f_d"] == 2


# dual second order


@pytest.mark.parametrize("l1", [0, -1, -2, -5, Fraction(-7, 3)])
def test_sonc_dual_disk_value_is_constant(disk, l1):
    lam = F(l1, 0)
    r = oc.sonc_dual(disk, F(0), F(1), lam, mscq=1.0)
    # L'' = 1 + 2 l1 and sigma_Omega = 2 l1 over Omega = {y1 >= 2}
    assert r.values["hess_L_dd"] == 1 + 2 * Fraction(l1)
    assert r.values["sigma_Omega"] == 2 * Fraction(l1)
    assert r.values["value"] == 1
    assert r.values["value_T2K"] == 1 + Fraction(l1)
    assert r.values["identity_ok"] is True
    assert r.verdict == oc.HOLDS


def test_sonc_dual_disk_against_t2k(disk):
    r = oc.sonc_dual(disk, F(0), F(1), F(-2, 0), mscq=1.0)
    assert r.values["value_T2K"] == -1
    assert r.values["sigma_Omega"] < r.values["sigma_T2K"]


def test_sonc_dual_requires_stationarity(disk):
    with pytest.raises(oc.StationarityViolated):
        oc.sonc_dual(disk, F(0), F(1), F(0, 1))


def test_sonc_dual_parabola(parabola):
    r = oc.sonc_dual(parabola, O2, F(0, 1), F(-1, 0), mscq=1.0)
    assert r.verdict == oc.HOLDS
    assert r.values["alpha_primal"] == r.values["value"]


# sigma-hat


def test_sonc_hat_cusp_graph(cusp_graph):
    r = oc.sonc_hat(cusp_graph, O2, F(1, 0), F(0, -2))
    assert r.values["sigma_hat_Tpp"] == 0
    assert r.values["sigma_hat_T2"] == -INF
    assert r.verdict == oc.HOLDS


def test_sonc_hat_disk_ordering_note(disk):
    r = oc.sonc_hat(disk, F(0), F(1), F(-2, 0), mscq=1.0)
    # T2_K is convex, so sigma-hat equals sigma there, and it sits above sigma_Omega
    assert r.values["sigma_hat_T2"] == -2
    assert r.values["sigma_Omega"] == -4
    assert any("not that multiplier" in n for n in r.notes)


def test_sonc_hat_matches_sonc_dual_on_convex_data(parabola):
    h = oc.sonc_hat(parabola, O2, F(0, 1), F(-1, 0))
    d = oc.sonc_dual(parabola, O2, F(0, 1), F(-1, 0))
    assert h.values["value"] == d.values["value_T2K"]
    assert h.verdict == oc.HOLDS


# duality


def test_duality_parabola(parabola):
    r = oc.duality_pair(parabola, O2, F(0, 1), F(1, 0))
    assert r.values["primal"] == 1 and r.values["dual"] == 1 and r.values["gap"] == 0
    assert r.values["lambda_u"] == F(-1, 0)
    assert r.values["lambda_u_dot_u"] <= 0
    assert r.values["dirrcq"] == oc.HOLDS


def test_duality_zero_shift(parabola):
    r = oc.duality_pair(parabola, O2, F(0, 1), O2)
    assert r.values["primal"] == 0 and r.values["gap"] == 0


def test_duality_whole_space():
    # no constraints: primal min over R^2 of a nonzero linear form is -inf, dual is infeasible
    P = problem("x1", ["x1", "x2"], "polyhedron()")
    r = oc.duality_pair(P, O2, F(0, 1), F(1, 1))
    assert r.values["primal"] == -INF and r.values["dual"] == -INF
    Z = problem("x1^2", ["x1", "x2"], "polyhedron()")
    r = oc.duality_pair(Z, O2, F(0, 1), F(1, 1))
    assert r.values["primal"] == 0 and r.values["gap"] == 0


@settings(max_examples=50, deadline=None, derandomize=True)
@given(st.lists(st.integers(-3, 3), min_size=4, max_size=4),
       st.lists(st.lists(st.integers(-3, 3), min_size=2, max_size=2), min_size=1, max_size=3),
       st.lists(st.integers(-3, 3), min_size=2, max_size=2),
       st.lists(st.integers(-2, 2), min_size=2, max_size=2))
def test_duality_gap_is_zero_on_feasible_shifts(J, rows, c, w):
    a, b, cc, dd = J
    rows = [r for r in rows if any(r)]
    K = "polyhedron(" + ", ".join(f"({r[0]})*y1 + ({r[1]})*y2 <= 0" for r in rows) + ")"
    P = problem(f"({c[0]})*x1 + ({c[1]})*x2", [f"({a})*x1 + ({b})*x2", f"({cc})*x1 + ({dd})*x2"], K)
    u = (a * w[0] + b * w[1], cc * w[0] + dd * w[1])  # u in the range of the Jacobian: primal feasible
    r = oc.duality_pair(P, O2, O2, F(*u))
    assert r.values["gap"] == 0
    if r.values["primal"] not in (INF, -INF):
        assert r.values["lambda_u_dot_u"] == -r.values["dual"]


# sufficient conditions


@pytest.mark.parametrize("mode", ["theorem", "corollary"])
def test_ssoc_parabola(parabola, mode):
    r = oc.ssoc_sufficient(parabola, O2, F(0, 1), F(-1, 0), mode, mscq=1.0)
    assert r.values["margin"] == 4
    assert r.parts["i"].verdict == oc.HOLDS
    assert r.verdict == oc.HOLDS


def test_ssoc_variant():
    P = variant_problem()
    r = oc.ssoc_sufficient(P, O2, F(0, 1), F(-1, 0), "corollary", mscq=4.0)
    assert r.parts["ii"].verdict == oc.VACUOUS
    assert r.verdict == oc.HOLDS


def test_ssoc_fails_without_curvature_term():
    # lambda = 0 is stationary for f = x2^2 on the quadrant, and <lambda, J v> = 0 along v = (1, 0)
    r = oc.ssoc_sufficient(quadrant_problem("x2^2"), O2, F(0, 1), O2)
    assert r.parts["i"].verdict == oc.FAILS
    assert r.verdict == oc.FAILS
    assert r.witnesses and r.witnesses[0]["rung"] == "i"


def test_ssoc_rejects_zero_direction(parabola):
    with pytest.raises(oc.ZeroDirection):
        oc.ssoc_sufficient(parabola, O2, O2, F(-1, 0))


def test_ssoc_bad_mode(parabola):
    with pytest.raises(ValueError):
        oc.ssoc_sufficient(parabola, O2, F(0, 1), F(-1, 0), "lemma")


# sampling checks


def test_growth_parabola(parabola):
    V = rc.DirectionalNeighborhood(F(0, 1), 0.5, 0.1)
    r = oc.growth_verify(parabola, O2, F(0, 1), 0.1, V, seed=0)
    assert r.verdict == oc.HOLDS and r.values["samples"] > 100


def test_growth_disk(disk):
    V = rc.DirectionalNeighborhood(F(1), 0.5, 0.5)
    r = oc.growth_verify(disk, F(0), F(1), 0.25, V, seed=1)
    assert r.verdict == oc.HOLDS


def test_growth_fails_for_concave_objective():
    P = problem("-x1^2 - x2^2", ["x1", "x2"], "polyhedron()")
    V = rc.DirectionalNeighborhood(F(1, 0), 0.5, 0.5)
    r = oc.growth_verify(P, O2, F(1, 0), 0.1, V, samples=200)
    assert r.verdict == oc.FAILS
    w = r.witnesses[0]
    assert w["f"] < w["bound"]


def test_growth_rejects_nonpositive_kappa(parabola):
    V = rc.DirectionalNeighborhood(F(0, 1), 0.5, 0.1)
    with pytest.raises(ValueError):
        oc.growth_verify(parabola, O2, F(0, 1), 0.0, V)


def test_falsify_finds_descent():
    P = quadrant_problem("-x2")
    V = rc.DirectionalNeighborhood(F(0, 1), 0.5, 0.5)
    r = oc.falsify_directional_optimality(P, O2, F(0, 1), V, budget=300)
    assert r.verdict == oc.FAILS
    x = r.witnesses[0]["x"]
    assert -x[1] < 0 and min(x) >= 0


def test_falsify_no_descent_for_quadrant_linear():
    P = quadrant_problem("(x1 + 1)^2")
    V = rc.DirectionalNeighborhood(F(1, 1), 0.5, 0.5)
    r = oc.falsify_directional_optimality(P, O2, F(1, 1), V, budget=300)
    assert r.verdict == oc.INCONCLUSIVE and r.values["no_descent_found"]


def test_falsify_vacuous_when_cap_misses_the_set():
    P = quadrant_problem("-x2")
    V = rc.DirectionalNeighborhood(F(-1, -1), 0.25, 0.5)
    r = oc.falsify_directional_optimality(P, O2, F(-1, -1), V, budget=200)
    assert r.values["no_descent_found"] and "vacuously" in r.notes[0]


# ladder


def test_ladder_quadrant_linear():
    L = oc.ladder(quadrant_problem("(x1 + 1)^2"), O2, F(1, 1))
    assert L.rungs["critical_cone"].verdict == oc.FAILS
    assert L.rungs["fonc"].verdict == oc.HOLDS
    assert "sonc_primal" not in L.rungs
    assert L.narrative


def test_ladder_parabola(parabola):
    V = rc.DirectionalNeighborhood(F(0, 1), 0.5, 0.1)
    L = oc.ladder(parabola, O2, F(0, 1), mscq=1.0, V=V)
    assert L.verdict == oc.HOLDS
    assert L.rungs["ssoc"].verdict == oc.HOLDS
    assert L.rungs["growth"].verdict == oc.HOLDS
    assert L.rungs["falsify"].verdict != oc.FAILS


# invariants


CASES = [
    (parabola_problem, O2, F(0, 1), F(-1, 0), 1.0),
    (disk_problem, F(0), F(1), F(-2, 0), 1.0),
    (lambda: quadrant_problem("x2^2"), O2, F(0, 1), O2, None),
    (cusp_graph_problem, O2, F(1, 0), F(0, -2), 1.0),
]


@pytest.mark.parametrize("case", range(len(CASES)))
def test_verdicts_invariant_under_scaling_direction(case):
    make, x, d, lam, mscq = CASES[case]
    P = make()
    d2 = tuple(2 * v for v in d)
    for fn in (lambda dd: oc.sonc_primal(P, x, dd, mscq), lambda dd: oc.sonc_dual(P, x, dd, lam, mscq)):
        assert fn(d).verdict == fn(d2).verdict
    if any(d):
        a = oc.ssoc_sufficient(P, x, d, lam, "corollary", mscq)
        b = oc.ssoc_sufficient(P, x, d2, lam, "corollary", mscq)
        assert a.verdict == b.verdict


@pytest.mark.parametrize("make,mscq", [(parabola_problem, 1.0), (variant_problem, 4.0)])
def test_ssoc_implies_growth_at_eta_over_4(make, mscq):
    P, d = make(), F(0, 1)
    assert oc.ssoc_sufficient(P, O2, d, F(-1, 0), "corollary", mscq).verdict == oc.HOLDS
    V = rc.DirectionalNeighborhood(d, 0.5, 0.1)
    assert oc.growth_verify(P, O2, d, oc.ETA / 4, V, samples=1000, seed=3).verdict == oc.HOLDS


@pytest.mark.parametrize("case", range(len(CASES)))
def test_no_descent_means_necessary_conditions_do_not_fail(case):
    make, x, d, lam, mscq = CASES[case]
    P = make()
    V = rc.DirectionalNeighborhood(d, 0.5, 0.1)
    if oc.falsify_directional_optimality(P, x, d, V, budget=500, seed=2).verdict == oc.FAILS:
        pytest.skip("descent found")
    assert oc.fonc_check(P, x, d, mscq=mscq).verdict != oc.FAILS
    assert oc.sonc_primal(P, x, d, mscq).verdict != oc.FAILS
    assert oc.sonc_dual(P, x, d, lam, mscq).verdict != oc.FAILS
