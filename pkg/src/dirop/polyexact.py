"""Exact rational polyhedra, cones and a dense simplex solver.

Everything here runs in :class:`fractions.Fraction` arithmetic. The sizes we
care about are tiny (a handful of rows in dimension two or three), so the LP
is a plain tableau simplex with Bland's rule and no attempt at sparsity.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

MAX_DIM = 64

INF = float("inf")


class DimensionMismatch(ValueError):
    pass


class ScaleExceeded(ValueError):
    pass


class PointNotInSet(ValueError):
    pass


def F(x) -> Fraction:
    return x if isinstance(x, Fraction) else Fraction(x)


def fvec(v) -> tuple:
    return tuple(F(c) for c in v)


def dot(a, b):
    return sum((x * y for x, y in zip(a, b)), Fraction(0))


def _normalize_row(a, b):
    """Scale (a, b) by a positive factor to coprime integers."""
    vals = list(a) + [b]
    den = 1
    for v in vals:
        den = den * v.denominator // math.gcd(den, v.denominator)
    ints = [int(v * den) for v in vals]
    g = 0
    for v in ints:
        g = math.gcd(g, abs(v))
    if g == 0:
        return tuple(Fraction(0) for _ in a), Fraction(0)
    return tuple(Fraction(v // g) for v in ints[:-1]), Fraction(ints[-1] // g)


class Polyhedron:
    """The set ``{y : A y <= b}``; equalities are stored as paired inequalities."""

    __slots__ = ("A", "b", "n")

    def __init__(self, A, b, n: Optional[int] = None, eq_A=(), eq_b=()):
        A = [fvec(r) for r in A]
        b = [F(v) for v in b]
        for r, v in zip(eq_A, eq_b):
            r = fvec(r)
            A.append(r)
            b.append(F(v))
            A.append(tuple(-c for c in r))
            b.append(-F(v))
        if n is None:
            if not A:
                raise ValueError("dimension needed for a polyhedron without rows")
            n = len(A[0])
        if len(A) != len(b):
            raise DimensionMismatch("row count of A and b differ")
        rows = []
        seen = set()
        infeasible = False
        for r, v in zip(A, b):
            if len(r) != n:
                raise DimensionMismatch(f"row of length {len(r)} in dimension {n}")
            r, v = _normalize_row(r, v)
            if all(c == 0 for c in r):
                if v < 0:
                    infeasible = True
                continue
            if (r, v) not in seen:
                seen.add((r, v))
                rows.append((r, v))
        if infeasible:
            rows = [(tuple(Fraction(0) for _ in range(n)), Fraction(-1))]
        self.A = tuple(r for r, _ in rows)
        self.b = tuple(v for _, v in rows)
        self.n = n

    @classmethod
    def whole_space(cls, n: int) -> "Polyhedron":
        return cls((), (), n)

    @classmethod
    def empty(cls, n: int) -> "Polyhedron":
        return cls([[0] * n], [-1], n)

    @property
    def k(self) -> int:
        return len(self.A)

    def is_cone(self) -> bool:
        return all(v == 0 for v in self.b)

    def contains(self, y) -> bool:
        y = fvec(y)
        if len(y) != self.n:
            raise DimensionMismatch(f"point of length {len(y)} in dimension {self.n}")
        return all(dot(r, y) <= v for r, v in zip(self.A, self.b))

    def slack(self, y):
        return [v - dot(r, y) for r, v in zip(self.A, self.b)]

    def rows(self):
        return list(zip(self.A, self.b))

    def __repr__(self):
        return f"{type(self).__name__}(n={self.n}, rows={[(list(map(str, r)), str(v)) for r, v in self.rows()]})"

    def describe(self, names=None) -> list:
        """Human readable inequalities, equalities merged."""
        names = names or [f"w{i + 1}" for i in range(self.n)]
        rows = self.rows()
        used = set()
        out = []
        for i, (r, v) in enumerate(rows):
            if i in used:
                continue
            neg = (tuple(-c for c in r), -v)
            j = next((j for j in range(i + 1, len(rows)) if j not in used and rows[j] == neg), None)
            lhs = _lin_text(r, names)
            if j is not None:
                used.add(j)
                out.append(f"{lhs} = {_num_text(v)}")
            else:
                out.append(f"{lhs} <= {_num_text(v)}")
        return out


def _num_text(v) -> str:
    v = F(v)
    return str(v.numerator) if v.denominator == 1 else f"{v.numerator}/{v.denominator}"


def _lin_text(r, names) -> str:
    parts = []
    for c, nm in zip(r, names):
        if c == 0:
            continue
        if c == 1:
            parts.append(f"+ {nm}")
        elif c == -1:
            parts.append(f"- {nm}")
        elif c < 0:
            parts.append(f"- {_num_text(-c)}*{nm}")
        else:
            parts.append(f"+ {_num_text(c)}*{nm}")
    if not parts:
        return "0"
    s = " ".join(parts)
    return s[2:] if s.startswith("+ ") else "-" + s[2:]


class PolyCone(Polyhedron):
    """The cone ``{v : B v <= 0}``."""

    def __init__(self, B, n: Optional[int] = None, eq_B=()):
        B = [fvec(r) for r in B]
        super().__init__(B, [0] * len(B), n, eq_B, [0] * len(eq_B))

    @classmethod
    def whole_space(cls, n: int) -> "PolyCone":
        return cls((), n)

    @classmethod
    def origin(cls, n: int) -> "PolyCone":
        return cls([], n, eq_B=[[1 if i == j else 0 for j in range(n)] for i in range(n)])

    @property
    def B(self):
        return self.A


def as_cone(P: Polyhedron) -> PolyCone:
    if not P.is_cone():
        raise ValueError("polyhedron is not a cone")
    return PolyCone(P.A, P.n)


# --------------------------------------------------------------------------
# Simplex


@dataclass
class LPResult:
    """``value`` is a Fraction when Optimal, ``+-inf`` otherwise.

    ``dual`` holds row multipliers ``u >= 0``: for a max problem
    ``A^T u = c`` and ``b^T u = value``; for a min problem ``A^T u = -c`` and
    ``-b^T u = value``.
    """

    status: str
    value: object
    x: Optional[tuple] = None
    dual: Optional[tuple] = None
    ray: Optional[tuple] = None


def _pivot(T, r, c):
    piv = T[r][c]
    row = [v / piv for v in T[r]]
    T[r] = row
    for i in range(len(T)):
        if i != r and T[i][c] != 0:
            f = T[i][c]
            Ti = T[i]
            T[i] = [a - f * b for a, b in zip(Ti, row)]


def _run_simplex(T, basis, cost, allowed):
    """Minimize ``cost . z`` over the tableau with Bland's rule.

    Returns "optimal" or ("unbounded", column).
    """
    m = len(T)
    while True:
        entering = None
        for j in allowed:
            if j in basis:
                continue
            rc = cost[j] - sum((cost[basis[i]] * T[i][j] for i in range(m)), Fraction(0))
            if rc < 0:
                entering = j
                break
        if entering is None:
            return "optimal"
        best = None
        for i in range(m):
            a = T[i][entering]
            if a > 0:
                ratio = T[i][-1] / a
                key = (ratio, basis[i])
                if best is None or key < best[0]:
                    best = (key, i)
        if best is None:
            return ("unbounded", entering)
        r = best[1]
        _pivot(T, r, entering)
        basis[r] = entering


def solve_standard(M, r, c):
    """``min c.z  s.t.  M z = r, z >= 0``.

    Returns ``(status, value, z, y, ray)`` where ``y`` solves the dual
    ``max r.y  s.t.  M^T y <= c`` when optimal.
    """
    m = len(M)
    N = len(c)
    signs = [1 if F(v) >= 0 else -1 for v in r]
    T = []
    for i in range(m):
        s = signs[i]
        row = [s * F(v) for v in M[i]] + [Fraction(1 if k == i else 0) for k in range(m)]
        row.append(s * F(r[i]))
        T.append(row)
    basis = [N + i for i in range(m)]
    cost1 = [Fraction(0)] * N + [Fraction(1)] * m
    _run_simplex(T, basis, cost1, list(range(N + m)))
    infeas = sum((T[i][-1] for i in range(m) if basis[i] >= N), Fraction(0))
    if infeas > 0:
        return "infeasible", INF, None, None, None
    # drive artificials out; rows that cannot pivot are redundant
    i = 0
    while i < len(T):
        if basis[i] >= N:
            j = next((j for j in range(N) if T[i][j] != 0), None)
            if j is None:
                del T[i]
                del basis[i]
                continue
            _pivot(T, i, j)
            basis[i] = j
        i += 1
    cost2 = [F(v) for v in c] + [Fraction(0)] * m
    status = _run_simplex(T, basis, cost2, list(range(N)))
    if status != "optimal":
        col = status[1]
        ray = [Fraction(0)] * N
        ray[col] = Fraction(1)
        for i, bi in enumerate(basis):
            if bi < N:
                ray[bi] = -T[i][col]
        return "unbounded", -INF, None, None, tuple(ray)
    z = [Fraction(0)] * N
    for i, bi in enumerate(basis):
        z[bi] = T[i][-1]
    value = dot(cost2[:N], z)
    y = []
    for k in range(m):
        yk = sum((cost2[basis[i]] * T[i][N + k] for i in range(len(T))), Fraction(0))
        y.append(signs[k] * yk)
    return "optimal", value, tuple(z), tuple(y), None


def lp_solve(c, P: Polyhedron, sense: str = "max") -> LPResult:
    """Optimize ``c.x`` over ``P`` exactly (x free)."""
    c = fvec(c)
    if len(c) != P.n:
        raise DimensionMismatch(f"objective of length {len(c)} in dimension {P.n}")
    if P.k > MAX_DIM or P.n > MAX_DIM:
        raise ScaleExceeded(f"LP with {P.k} rows and {P.n} columns exceeds {MAX_DIM}")
    if sense not in ("max", "min"):
        raise ValueError("sense must be 'max' or 'min'")
    n, k = P.n, P.k
    M = [list(P.A[i]) + [-v for v in P.A[i]] + [Fraction(1 if j == i else 0) for j in range(k)] for i in range(k)]
    sgn = -1 if sense == "max" else 1
    cost = [sgn * v for v in c] + [-sgn * v for v in c] + [Fraction(0)] * k
    status, value, z, y, ray = solve_standard(M, list(P.b), cost)
    if status == "infeasible":
        return LPResult("Infeasible", -INF if sense == "max" else INF)
    if status == "unbounded":
        d = tuple(ray[i] - ray[n + i] for i in range(n))
        return LPResult("Unbounded", INF if sense == "max" else -INF, ray=d)
    x = tuple(z[i] - z[n + i] for i in range(n))
    u = tuple(-v for v in y)
    return LPResult("Optimal", sgn * value, x, u)


def certify(res: LPResult, c, P: Polyhedron, sense: str = "max") -> bool:
    """Check feasibility, dual feasibility, zero gap and complementary slackness exactly."""
    if res.status != "Optimal":
        return False
    c = fvec(c)
    if not P.contains(res.x):
        return False
    u = res.dual
    if any(v < 0 for v in u):
        return False
    At_u = [sum((u[i] * P.A[i][j] for i in range(P.k)), Fraction(0)) for j in range(P.n)]
    target = c if sense == "max" else tuple(-v for v in c)
    if tuple(At_u) != tuple(target):
        return False
    bu = dot(P.b, u)
    if (bu if sense == "max" else -bu) != res.value or dot(c, res.x) != res.value:
        return False
    return all(ui * s == 0 for ui, s in zip(u, P.slack(res.x)))


# --------------------------------------------------------------------------
# Linear algebra


def rref(M):
    """Reduced row echelon form; returns (rows, pivot columns)."""
    R = [list(map(F, row)) for row in M]
    if not R:
        return R, []
    ncol = len(R[0])
    pivots = []
    r = 0
    for c in range(ncol):
        p = next((i for i in range(r, len(R)) if R[i][c] != 0), None)
        if p is None:
            continue
        R[r], R[p] = R[p], R[r]
        piv = R[r][c]
        R[r] = [v / piv for v in R[r]]
        for i in range(len(R)):
            if i != r and R[i][c] != 0:
                f = R[i][c]
                R[i] = [a - f * b for a, b in zip(R[i], R[r])]
        pivots.append(c)
        r += 1
        if r == len(R):
            break
    return R, pivots


def rank(M) -> int:
    if not M or not M[0]:
        return 0
    return len(rref(M)[1])


def nullspace(M, n: Optional[int] = None) -> list:
    """Basis of ``{x : M x = 0}``."""
    if not M:
        if n is None:
            raise ValueError("need n for an empty matrix")
        return [tuple(Fraction(1 if i == j else 0) for j in range(n)) for i in range(n)]
    n = len(M[0])
    R, piv = rref(M)
    free = [j for j in range(n) if j not in piv]
    basis = []
    for fcol in free:
        v = [Fraction(0)] * n
        v[fcol] = Fraction(1)
        for i, pc in enumerate(piv):
            v[pc] = -R[i][fcol]
        basis.append(tuple(v))
    return basis


@dataclass
class KernelSolution:
    particular: tuple
    kernel: list = field(default_factory=list)


def kernel_and_solve(M, rhs, n: Optional[int] = None) -> Optional[KernelSolution]:
    """Solve ``M x = rhs`` exactly; ``None`` when inconsistent."""
    rhs = fvec(rhs)
    if not M:
        if n is None:
            raise ValueError("need n for an empty matrix")
        return KernelSolution(tuple(Fraction(0) for _ in range(n)), nullspace([], n))
    n = len(M[0])
    if len(M) != len(rhs):
        raise DimensionMismatch("matrix rows and right-hand side differ")
    aug = [list(map(F, row)) + [v] for row, v in zip(M, rhs)]
    R, piv = rref(aug)
    if n in piv:
        return None
    x = [Fraction(0)] * n
    for i, pc in enumerate(piv):
        x[pc] = R[i][n]
    return KernelSolution(tuple(x), nullspace(M))


def transpose(M, ncols: Optional[int] = None):
    if not M:
        return [[] for _ in range(ncols or 0)]
    return [list(col) for col in zip(*M)]


def matvec(M, v):
    return tuple(dot(row, v) for row in M)


# --------------------------------------------------------------------------
# Set operations


def is_empty(P: Polyhedron) -> bool:
    return lp_solve([0] * P.n, P).status == "Infeasible"


def feasible_point(P: Polyhedron):
    res = lp_solve([0] * P.n, P)
    return res.x if res.status == "Optimal" else None


def support(P: Polyhedron, lam):
    """``sup {<lam, y> : y in P}`` as a Fraction or +-inf (``-inf`` if empty)."""
    res = lp_solve(lam, P, "max")
    if res.status == "Optimal":
        return res.value
    return INF if res.status == "Unbounded" else -INF


def contains(P: Polyhedron, Q: Polyhedron) -> bool:
    """``P ⊆ Q``."""
    if P.n != Q.n:
        raise DimensionMismatch("dimensions differ")
    if is_empty(P):
        return True
    for r, v in Q.rows():
        s = support(P, r)
        if s > v:
            return False
    return True


def equal(P: Polyhedron, Q: Polyhedron) -> bool:
    return contains(P, Q) and contains(Q, P)


def sum_contained_in(P: Polyhedron, C: Polyhedron, Q: Polyhedron) -> bool:
    """``P + C ⊆ Q`` via support functions (the sum is never formed)."""
    if is_empty(P) or is_empty(C):
        return True
    for r, v in Q.rows():
        a, b = support(P, r), support(C, r)
        if a == INF or b == INF or a + b > v:
            return False
    return True


def intersect(P: Polyhedron, Q: Polyhedron) -> Polyhedron:
    if P.n != Q.n:
        raise DimensionMismatch("dimensions differ")
    cls = PolyCone if isinstance(P, PolyCone) and isinstance(Q, PolyCone) else Polyhedron
    if cls is PolyCone:
        return PolyCone(list(P.A) + list(Q.A), P.n)
    return Polyhedron(list(P.A) + list(Q.A), list(P.b) + list(Q.b), P.n)


def product(P: Polyhedron, Q: Polyhedron) -> Polyhedron:
    n = P.n + Q.n
    rows = [tuple(r) + (Fraction(0),) * Q.n for r in P.A] + [(Fraction(0),) * P.n + tuple(r) for r in Q.A]
    if P.is_cone() and Q.is_cone():
        return PolyCone(rows, n)
    return Polyhedron(rows, list(P.b) + list(Q.b), n)


def preimage(P: Polyhedron, M, c=None) -> Polyhedron:
    """``{w : M w + c ∈ P}``."""
    M = [fvec(r) for r in M]
    if len(M) != P.n:
        raise DimensionMismatch("map output dimension differs from polyhedron")
    n = len(M[0]) if M else 0
    c = fvec(c) if c is not None else tuple(Fraction(0) for _ in range(P.n))
    A = [tuple(sum((r[i] * M[i][j] for i in range(P.n)), Fraction(0)) for j in range(n)) for r in P.A]
    b = [v - dot(r, c) for r, v in P.rows()]
    if all(v == 0 for v in b):
        return PolyCone(A, n)
    return Polyhedron(A, b, n)


def remove_redundant(P: Polyhedron) -> Polyhedron:
    if is_empty(P):
        return Polyhedron.empty(P.n)
    rows = list(P.rows())
    i = 0
    while i < len(rows):
        r, v = rows[i]
        others = rows[:i] + rows[i + 1:]
        Q = Polyhedron([a for a, _ in others], [w for _, w in others], P.n)
        if support(Q, r) <= v:
            rows = others
        else:
            i += 1
    out = Polyhedron([a for a, _ in rows], [w for _, w in rows], P.n)
    return as_cone(out) if out.is_cone() else out


def _fm_eliminate(rows, j):
    pos, neg, zero = [], [], []
    for a, v in rows:
        if a[j] > 0:
            pos.append((a, v))
        elif a[j] < 0:
            neg.append((a, v))
        else:
            zero.append((a, v))
    out = list(zero)
    for (a, v), (c, w) in itertools.product(pos, neg):
        lp, ln = -c[j], a[j]
        out.append((tuple(lp * x + ln * y for x, y in zip(a, c)), lp * v + ln * w))
    return out


def image(P: Polyhedron, M, c=None) -> Polyhedron:
    """H-representation of ``{M w + c : w ∈ P}`` by Fourier-Motzkin elimination."""
    M = [fvec(r) for r in M]
    m = len(M)
    n = P.n
    c = fvec(c) if c is not None else tuple(Fraction(0) for _ in range(m))
    if is_empty(P):
        return Polyhedron.empty(m)
    # variables (y, w); equalities y - M w = c
    eqs = [(tuple(Fraction(1 if k == i else 0) for k in range(m)) + tuple(-M[i][j] for j in range(n)), c[i]) for i in range(m)]
    ineqs = [((Fraction(0),) * m + tuple(a), v) for a, v in P.rows()]
    # use equalities to eliminate as many w as possible
    remaining_w = list(range(m, m + n))
    eq_left = []
    for a, v in eqs:
        # substitute previously solved variables already done by row ops below
        eq_left.append((list(a), v))
    solved = []
    for j in list(remaining_w):
        idx = next((i for i, (a, _) in enumerate(eq_left) if a[j] != 0), None)
        if idx is None:
            continue
        a, v = eq_left.pop(idx)
        piv = a[j]
        # x_j = (v - sum_{k != j} a_k x_k) / piv ; substitute everywhere
        def subst(row, rv):
            f = row[j] / piv
            if f == 0:
                return list(row), rv
            return [x - f * y for x, y in zip(row, a)], rv - f * v

        eq_left = [subst(r, rv) for r, rv in eq_left]
        ineqs = [tuple_row for tuple_row in (subst(list(r), rv) for r, rv in ineqs)]
        ineqs = [(tuple(r), rv) for r, rv in ineqs]
        remaining_w.remove(j)
        solved.append(j)
    rows = [(tuple(r), rv) for r, rv in ineqs]
    for r, rv in eq_left:
        rows.append((tuple(r), rv))
        rows.append((tuple(-x for x in r), -rv))
    for j in remaining_w:
        rows = _fm_eliminate(rows, j)
        rows = _prune(rows, m + n)
    A = [r[:m] for r, _ in rows]
    b = [v for _, v in rows]
    for r, v in zip(A, b):
        pass
    # drop rows whose w-part did not vanish (only possible for eliminated columns)
    out = Polyhedron(A, b, m)
    return remove_redundant(out)


def _prune(rows, n):
    if len(rows) <= 1:
        return rows
    P = Polyhedron([r for r, _ in rows], [v for _, v in rows], n)
    return list(remove_redundant(P).rows()) if P.k else []


def cone_from_generators(gens, n: int, lineality=()) -> PolyCone:
    """H-representation of ``cone(gens) + span(lineality)``."""
    gens = [fvec(g) for g in gens]
    lineality = [fvec(g) for g in lineality]
    cols = gens + lineality
    if not cols:
        return PolyCone.origin(n)
    k = len(cols)
    rows = [[Fraction(-1 if j == i else 0) for j in range(k)] for i in range(len(gens))]
    Pmu = PolyCone(rows, k) if rows else PolyCone.whole_space(k)
    M = [[cols[j][i] for j in range(k)] for i in range(n)]
    out = image(Pmu, M)
    return as_cone(out)


def polar(C: PolyCone) -> PolyCone:
    """``C° = cone(rows of B)``."""
    return cone_from_generators(list(C.B), C.n)


def cone_polar_member(v, C: PolyCone) -> bool:
    """``<v, x> <= 0`` for all ``x`` in ``C``, decided by one bounded LP."""
    v = fvec(v)
    if len(v) != C.n:
        raise DimensionMismatch("vector and cone dimensions differ")
    box = [[1 if j == i else 0 for j in range(C.n)] for i in range(C.n)]
    box += [[-1 if j == i else 0 for j in range(C.n)] for i in range(C.n)]
    P = Polyhedron(list(C.A) + box, list(C.b) + [1] * (2 * C.n), C.n)
    res = lp_solve(v, P, "max")
    return res.value == 0


def polyhedron_tangent_cone(P: Polyhedron, x) -> PolyCone:
    """Keep the rows active at ``x``."""
    x = fvec(x)
    if not P.contains(x):
        raise PointNotInSet("point is not in the polyhedron")
    return PolyCone([r for r, v in P.rows() if dot(r, x) == v], P.n)


def normal_generators(C: PolyCone, u) -> list:
    """Generators of the normal cone to ``C`` at ``u``: rows of B active at u."""
    u = fvec(u)
    return [r for r in C.B if dot(r, u) == 0]


def normal_cone(C: PolyCone, u) -> PolyCone:
    return cone_from_generators(normal_generators(C, u), C.n)


def lineality_basis(C: PolyCone) -> list:
    return nullspace([list(r) for r in C.B], C.n)


def extreme_rays(C: PolyCone):
    """(rays, lineality basis) of a cone in dimension at most 3.

    Candidate rays come from intersecting ``n - 1 - dim L`` facets with the
    orthogonal complement of the lineality space ``L``.
    """
    n = C.n
    if n > 3:
        raise ScaleExceeded("extreme-ray enumeration is limited to n <= 3")
    L = lineality_basis(C)
    k = n - 1 - len(L)
    rays = []
    if k >= 0:
        for S in itertools.combinations(range(C.k), k):
            M = [list(C.B[i]) for i in S] + [list(v) for v in L]
            ker = nullspace(M, n) if M else nullspace([], n)
            if len(ker) != 1:
                continue
            for s in (1, -1):
                r = tuple(s * x for x in ker[0])
                if C.contains(r) and not any(_parallel(r, q) for q in rays):
                    rays.append(r)
    return rays, L


def _parallel(a, b) -> bool:
    # same open ray
    ratio = None
    for x, y in zip(a, b):
        if (x == 0) != (y == 0):
            return False
        if x != 0:
            q = x / y
            if q <= 0 or (ratio is not None and q != ratio):
                return False
            ratio = q
    return True


def cone_generators(C: PolyCone):
    rays, L = extreme_rays(C)
    return rays + list(L) + [tuple(-x for x in v) for v in L]


def span_basis(vectors, n: int) -> list:
    vectors = [fvec(v) for v in vectors if any(x != 0 for x in v)]
    if not vectors:
        return []
    R, piv = rref(vectors)
    return [tuple(r) for r in R[: len(piv)]]
