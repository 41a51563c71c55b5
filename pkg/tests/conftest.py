from fractions import Fraction

import random

import pytest

from dirop import exprcore as ec
from dirop import optcond as oc
from dirop import polyexact as px
from dirop import setlib as sl
from dirop.polyexact import Polyhedron

X1 = ["x"]
X2 = ["x1", "x2"]
Y2 = ["y1", "y2"]


def problem(f, g, K, vars=X2, kvars=Y2, **kw):
    return oc.Problem(ec.parse(f, vars), [ec.parse(gi, vars) for gi in g], sl.parse_set(K, kvars), vars, kvars, **kw)


def disk_problem():
    return problem("x^2/2", ["x^2", "x"], "ball((1,0); 1)", X1)


def parabola_problem():
    return problem("x1 + x1^2 + x2^2", ["x1 + x2^2", "2*x2"], "levelset(y2^2/2 - y1 <= 0)")


def quadrant_problem(f):
    return problem(f, ["x1", "x2"], "polyhedron(y1 >= 0, y2 >= 0)")


def cusp_graph_problem():
    return problem("(x2+1)^2", ["x1", "x2"], "levelset(y2 - abs(y1)^(3/2) = 0)",
                   declared={"normal_K": [(0, 1), (0, -1)]}, declared_at=((0, 0), (1, 0)))


def cusp_set():
    return sl.parse_set("levelset(x1^2 - x2^3 = 0)", X2)


def F(*v):
    return tuple(Fraction(x) for x in v)


@pytest.fixture(scope="session")
def disk():
    return disk_problem()


@pytest.fixture(scope="session")
def parabola():
    return parabola_problem()


@pytest.fixture(scope="session")
def cusp_graph():
    return cusp_graph_problem()


# random polyhedra shared by the property suites


def _random_instance(rng):
    """A polyhedron through the origin with a tangent direction."""
    while True:
        k = rng.randint(1, 4)
        A = [[rng.randint(-3, 3), rng.randint(-3, 3)] for _ in range(k)]
        b = [0 if rng.random() < 0.7 else rng.randint(1, 3) for _ in range(k)]
        P = Polyhedron(A, b, 2)
        if P.k == 0:
            continue
        T = px.polyhedron_tangent_cone(P, F(0, 0))
        cands = [(a, c) for a in range(-2, 3) for c in range(-2, 3) if (a, c) != (0, 0)]
        rng.shuffle(cands)
        for d in cands:
            if T.contains(F(*d)):
                return sl.PolySet(P), F(*d)


def polyhedral_instances(count, seed):
    rng = random.Random(seed)
    return [_random_instance(rng) for _ in range(count)]


def random_polys(count, seed):
    rng = random.Random(seed)
    out = []
    while len(out) < count:
        k = rng.randint(1, 4)
        P = Polyhedron([[rng.randint(-3, 3) for _ in range(2)] for _ in range(k)],
                       [rng.randint(-2, 3) for _ in range(k)], 2)
        if P.k and not px.is_empty(P):
            out.append(P)
    return out
