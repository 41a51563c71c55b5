import itertools
import random
from fractions import Fraction

import numpy as np
import pytest
from scipy.optimize import linprog

from dirop import polyexact as px
from dirop.polyexact import PolyCone, Polyhedron


def test_lp_single_constraint():
    res = px.lp_solve([1], Polyhedron([[1]], [1]))
    assert res.status == "Optimal" and res.value == 1


def test_lp_disk_outer_set_support():
    # max <(-2,0), u> over {u1 >= 1}
    res = px.lp_solve([-2, 0], Polyhedron([[-1, 0]], [-1]))
    assert res.status == "Optimal" and res.value == -2
    assert px.certify(res, [-2, 0], Polyhedron([[-1, 0]], [-1]))


def test_lp_unbounded_and_infeasible():
    assert px.lp_solve([0, 1], Polyhedron([[-1, 0]], [-1])).status == "Unbounded"
    empty = Polyhedron([[1, 0], [-1, 0]], [0, -1])
    assert px.lp_solve([1, 0], empty).status == "Infeasible"
    assert px.support(empty, [1, 0]) == -px.INF


def test_lp_errors():
    with pytest.raises(px.DimensionMismatch):
        px.lp_solve([1, 2, 3], Polyhedron([[1, 0]], [1]))
    big = Polyhedron([[1] + [0] * 64], [1])
    with pytest.raises(px.ScaleExceeded):
        px.lp_solve([0] * 65, big)


def test_normalized_rows():
    P = Polyhedron([[2, 4], [1, 2], [3, 6]], [2, 1, 3])
    assert P.k == 1 and P.A[0] == (1, 2) and P.b[0] == 1


def _rand_lp(rng, n, k):
    A = [[Fraction(rng.randint(-4, 4)) for _ in range(n)] for _ in range(k)]
    b = [Fraction(rng.randint(0, 6)) for _ in range(k)]  # 0 is always feasible
    c = [Fraction(rng.randint(-3, 3)) for _ in range(n)]
    return c, Polyhedron(A, b, n)


def test_random_lps_certified_and_match_scipy():
    rng = random.Random(7)
    for _ in range(500):
        n, k = rng.randint(1, 4), rng.randint(1, 6)
        c, P = _rand_lp(rng, n, k)
        res = px.lp_solve(c, P, "max")
        ref = linprog([-float(v) for v in c], A_ub=[[float(v) for v in r] for r in P.A] or None,
                      b_ub=[float(v) for v in P.b] or None, bounds=[(None, None)] * n, method="highs")
        if res.status == "Optimal":
            assert px.certify(res, c, P)
            assert ref.status == 0 and abs(-ref.fun - float(res.value)) < 1e-7
        else:
            assert res.status == "Unbounded" and ref.status == 3


def test_kernel_and_solve_parabola_multiplier():
    sol = px.kernel_and_solve([[1, 0], [0, 2]], [-1, 0])
    assert sol.particular == (-1, 0) and sol.kernel == []


def test_kernel_and_solve_trivial_cases():
    sol = px.kernel_and_solve([[0, 0]], [0], 2)
    assert sol.particular == (0, 0) and len(sol.kernel) == 2
    sol = px.kernel_and_solve([[1, 0]], [1], 2)
    assert sol.particular == (1, 0)
    assert len(sol.kernel) == 1 and sol.kernel[0][0] == 0 and sol.kernel[0][1] != 0
    assert px.kernel_and_solve([[1, 0], [1, 0]], [0, 1], 2) is None


def test_cone_polar_member_examples():
    assert px.cone_polar_member([0, -1], PolyCone([[0, -1]]))
    quad = PolyCone([[-1, 0], [0, -1]])
    assert not px.cone_polar_member([1, 1], quad)
    line = PolyCone([], 2, eq_B=[[1, 0]])  # {0} x R
    assert px.cone_polar_member([-2, 0], line)
    assert not px.cone_polar_member([0, 1], line)


def _rays_bruteforce(B, n):
    """Extreme rays of {Bv <= 0} (pointed, n <= 3) by intersecting n-1 facets."""
    B = np.array([[float(c) for c in r] for r in B])
    rays = []
    for rows in itertools.combinations(range(len(B)), n - 1):
        sub = B[list(rows)]
        if np.linalg.matrix_rank(sub) < n - 1:
            continue
        v = np.linalg.svd(sub)[2][-1]
        for s in (v, -v):
            if np.all(B @ s <= 1e-9):
                rays.append(s)
    return rays


def test_polar_member_matches_ray_bruteforce():
    rng = random.Random(3)
    checked = 0
    for _ in range(300):
        n = rng.choice([2, 3])
        k = rng.randint(n, n + 2)
        B = [[rng.randint(-3, 3) for _ in range(n)] for _ in range(k)]
        if np.linalg.matrix_rank(np.array(B, float)) < n:
            continue  # not pointed; rays do not generate
        C = PolyCone(B, n)
        rays = _rays_bruteforce(B, n)
        v = [rng.randint(-3, 3) for _ in range(n)]
        want = all(np.dot(v, r) <= 1e-9 for r in rays)
        assert px.cone_polar_member(v, C) == want
        checked += 1
    assert checked >= 100


def test_polyhedron_tangent_cone_examples():
    quad = Polyhedron([[-1, 0], [0, -1]], [0, 0])
    assert px.equal(px.polyhedron_tangent_cone(quad, (0, 0)), quad)
    assert px.polyhedron_tangent_cone(quad, (1, 1)).k == 0
    half = Polyhedron([[-1, 0]], [0])
    T = px.polyhedron_tangent_cone(half, (0, 5))
    assert px.equal(T, Polyhedron([[-1, 0]], [0]))
    with pytest.raises(px.PointNotInSet):
        px.polyhedron_tangent_cone(half, (-1, 0))


def test_tangent_cone_contains_difference_quotients():
    rng = random.Random(11)
    P = Polyhedron([[1, 1], [-1, 0], [0, -1], [1, -2]], [4, 0, 0, 1])
    x = (Fraction(0), Fraction(0))
    T = px.polyhedron_tangent_cone(P, x)
    hits = 0
    while hits < 100:
        p = (Fraction(rng.randint(0, 40), 10), Fraction(rng.randint(0, 40), 10))
        if not P.contains(p):
            continue
        hits += 1
        t = Fraction(rng.randint(1, 9), 10)
        assert T.contains(tuple((a - b) / t for a, b in zip(p, x)))


def test_image_and_preimage():
    # image of R under x -> (0, x) is {0} x R; preimage of {u1 >= 1} under u = (x^2 curvature 2, x)
    line = Polyhedron([], [], 1)
    img = px.image(line, [[0], [1]], [2, 0])
    assert px.equal(img, Polyhedron([], [], 2, eq_A=[[1, 0]], eq_b=[2]))
    pre = px.preimage(Polyhedron([[-1, 0]], [-4]), [[1, 0], [0, 2]], [2, 0])
    assert px.equal(pre, Polyhedron([[-1, 0]], [-2]))
