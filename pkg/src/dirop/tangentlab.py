"""First-order tangent cones and second-order tangent sets.

Exact answers come from the active constraint system at the base point:
polyhedral rows always qualify, smooth level sets qualify when their active
gradients are linearly independent from each other and from the linear rows.
Everything else goes through a sequence oracle that evaluates the defining
limits along a geometric schedule in rescaled coordinates.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

import numpy as np

from . import exprcore as ec
from . import polyexact as px
from . import setlib as sl
from .polyexact import Polyhedron, PolyCone

FIRST = "FirstOrder"
OUTER = "OuterSecond"
ASYM = "Asymptotic"

DIVERGENCE = 1e3
SCAN_RADIUS = 10


class PointNotInSet(ValueError):
    pass


class DirectionNotTangent(ValueError):
    pass


class MSCQNotEstablished(RuntimeError):
    pass


@dataclass(frozen=True)
class SeqSchedule:
    """Geometric schedule ``t_k = t0 * factor**k``.

    For the asymptotic cone ``r`` ranges over ``[t**r_slow, t**r_fast]`` so that
    ``r -> 0`` and ``t/r -> 0`` hold for every admissible choice.
    """

    t0: float = 0.1
    factor: float = 0.25
    steps: int = 40
    tail: int = 10
    r_fast: float = 1 / 8
    r_slow: float = 7 / 8
    r_grid: int = 25
    refine: int = 20

    def ts(self) -> np.ndarray:
        return self.t0 * self.factor ** np.arange(self.steps)

    def tail_ts(self) -> np.ndarray:
        return self.ts()[-self.tail:]


DEFAULT_SCHEDULE = SeqSchedule()


# --------------------------------------------------------------------------
# Exact path: active constraint systems


@dataclass
class Con:
    grad: tuple
    hess: Optional[list]
    eq: bool
    linear: bool


class _Unsupported(Exception):
    pass


def _constraints(S: sl.SetExpr, x, offset: int, n: int) -> list:
    """Active constraints of ``S`` at ``x`` embedded in dimension ``n``."""
    k = S.n

    def embed(v):
        out = [Fraction(0)] * n
        out[offset: offset + k] = v
        return tuple(out)

    def embed_h(H):
        out = [[Fraction(0)] * n for _ in range(n)]
        for i in range(k):
            for j in range(k):
                out[offset + i][offset + j] = H[i][j]
        return out

    if isinstance(S, sl.PolySet):
        if not S.P.contains(x):
            raise PointNotInSet("point is not in the polyhedron")
        return [Con(embed(r), None, False, True) for r, v in S.P.rows() if px.dot(r, x) == v]
    if isinstance(S, (sl.Ball, sl.LevelSet)):
        if isinstance(S, sl.Ball):
            phi, eq = S.level_expr(), False
        else:
            phi, eq = S.as_le()
        try:
            val = ec.evaluate(phi, list(x))
        except ec.EvaluationError as exc:
            raise _Unsupported(str(exc))
        if not ec.is_rational(val):
            raise _Unsupported("irrational value")
        if val > 0 or (eq and val != 0):
            raise PointNotInSet("point is not in the level set")
        if val < 0:
            return []
        try:
            g = ec.gradient(phi, list(x))
            H = ec.hessian(phi, list(x))
        except (ec.NonSmoothPoint, ec.EvaluationError) as exc:
            raise _Unsupported(str(exc))
        if not all(ec.is_rational(v) for v in g) or not all(ec.is_rational(v) for row in H for v in row):
            raise _Unsupported("irrational derivative")
        if all(v == 0 for v in g):
            raise _Unsupported("vanishing gradient")
        poly = ec.to_polynomial(phi, k)
        linear = poly is not None and all(sum(e) <= 1 for e in poly)
        return [Con(embed(g), None if linear else embed_h(H), eq, linear)]
    if isinstance(S, sl.Intersect):
        return _constraints(S.a, x, offset, n) + _constraints(S.b, x, offset, n)
    if isinstance(S, sl.Product):
        xa, xb = list(x)[: S.a.n], list(x)[S.a.n:]
        return _constraints(S.a, xa, offset, n) + _constraints(S.b, xb, offset + S.a.n, n)
    raise _Unsupported(type(S).__name__)


def active_system(S: sl.SetExpr, x) -> Optional[list]:
    """Active constraints when the exact formulas apply, else ``None``."""
    x = px.fvec(x)
    try:
        cons = _constraints(S, x, 0, S.n)
    except _Unsupported:
        return None
    nonlin = [c for c in cons if not c.linear]
    if nonlin:
        lin_rank = px.rank([list(c.grad) for c in cons if c.linear]) if any(c.linear for c in cons) else 0
        if px.rank([list(c.grad) for c in cons]) != lin_rank + len(nonlin):
            return None
    return cons


def _rows(cons, fn):
    A, b, eA, eb = [], [], [], []
    for c in cons:
        row = fn(c)
        if row is None:
            continue
        a, rhs = row
        if c.eq:
            eA.append(a)
            eb.append(rhs)
        else:
            A.append(a)
            b.append(rhs)
    return A, b, eA, eb


def _exact_tangent(cons, n) -> PolyCone:
    A, _, eA, _ = _rows(cons, lambda c: (c.grad, 0))
    return PolyCone(A, n, eq_B=eA)


def _check_tangent(cons, d):
    for c in cons:
        gd = px.dot(c.grad, d)
        if gd > 0 or (c.eq and gd != 0):
            raise DirectionNotTangent("direction is not in the tangent cone")


def _exact_outer(cons, d, n) -> Polyhedron:
    _check_tangent(cons, d)

    def row(c):
        if px.dot(c.grad, d) != 0:
            return None
        q = ec.quad_form(c.hess, list(d)) if c.hess is not None else Fraction(0)
        return c.grad, -q

    A, b, eA, eb = _rows(cons, row)
    P = Polyhedron(A, b, n, eA, eb)
    return px.as_cone(P) if P.is_cone() else P


def _exact_asym(cons, d, n) -> PolyCone:
    _check_tangent(cons, d)
    A, _, eA, _ = _rows(cons, lambda c: (c.grad, 0) if px.dot(c.grad, d) == 0 else None)
    return PolyCone(A, n, eq_B=eA)


# --------------------------------------------------------------------------
# Oracle path


@dataclass
class OracleVerdict:
    status: str  # member | nonmember | divergent | inconclusive
    residuals: list

    @property
    def value(self) -> Optional[bool]:
        if self.status == "member":
            return True
        if self.status in ("nonmember", "divergent"):
            return False
        return None


def classify_tail(res: np.ndarray, ts: np.ndarray, wnorm: float, tol: float = sl.ORACLE_TOL) -> str:
    tol_w = tol * (1 + wnorm)
    if np.min(res) <= tol_w:
        return "member"
    if not np.all(np.isfinite(res)):
        finite = res[np.isfinite(res)]
        if finite.size == 0 or np.all(np.diff(res[-3:]) >= 0):
            return "divergent"
    if np.all(np.diff(res) >= 0) and res[-1] > DIVERGENCE:
        return "divergent"
    if np.min(res) > 10 * tol_w:
        a, b = res[-5], res[-1]
        slope = math.log(a / b) / math.log(ts[-5] / ts[-1]) if b > 0 and a > 0 else 0.0
        if slope < 0.02:
            return "nonmember"
    return "inconclusive"


class SequenceOracle:
    """Decides ``w`` in T, T² or T″ by the defining lim inf along a schedule."""

    def __init__(self, S: sl.SetExpr, x, d, kind: str, schedule: SeqSchedule = DEFAULT_SCHEDULE):
        self.S, self.kind, self.sched = S, kind, schedule
        self.x = px.fvec(x)
        self.d = px.fvec(d) if d is not None else tuple(Fraction(0) for _ in range(S.n))
        self.n = S.n
        frame_d = self.d if kind != FIRST else [0] * self.n
        self.L = sl.local(S, list(self.x), frame_d)
        self._cache = {}

    def _frames(self, t):
        if self.kind == FIRST:
            return np.array([t])
        if self.kind == OUTER:
            return np.array([0.5 * t * t])
        if self.L.polyhedral:
            return np.array([0.5 * t * t ** self.sched.r_slow])
        e = np.linspace(self.sched.r_slow, self.sched.r_fast, self.sched.r_grid)
        return 0.5 * t * t ** e

    def _t_frame(self, t):
        return 0.0 if self.kind == FIRST else t

    def residuals(self, W: np.ndarray) -> np.ndarray:
        """Tail residuals, shape ``(len(W), tail)``."""
        W = np.atleast_2d(np.asarray(W, float))
        ts = self.sched.tail_ts()
        out = np.empty((len(W), len(ts)))
        for j, t in enumerate(ts):
            out[:, j] = self._residual_at(W, t)
        return out

    def _residual_at(self, W, t):
        S_ = self._frames(t)
        tf = self._t_frame(t)
        N, R = len(W), len(S_)
        best = np.full(N, np.inf)
        wn = 1 + np.linalg.norm(W, axis=1)
        if R > 1:
            Z = np.repeat(W, R, axis=0)
            pairs = _root_pairs(self.L, Z, np.full(N * R, tf), np.tile(S_, N), N, R)
            if pairs is not None:
                best[pairs.any(axis=1)] = 0.0
        rows = np.nonzero(best > 0)[0]
        if rows.size == 0:
            return best
        coarse = np.arange(0, R, 4) if R > 4 else np.arange(R)
        if coarse[-1] != R - 1:
            coarse = np.append(coarse, R - 1)
        dist = np.full((rows.size, R), np.inf)
        dist[:, coarse] = self._project_grid(W[rows], S_[coarse], tf)
        close = np.nonzero(dist.min(axis=1) < 1e-2 * wn[rows])[0]
        rest = np.setdiff1d(np.arange(R), coarse)
        if close.size and rest.size:
            dist[np.ix_(close, rest)] = self._project_grid(W[rows[close]], S_[rest], tf)
        k = np.argmin(dist, axis=1)
        best[rows] = dist[np.arange(rows.size), k]
        if R > 1 and self.sched.refine:
            promising = (best[rows] > sl.ORACLE_TOL * wn[rows]) & (best[rows] <= 1e-3 * wn[rows])
            if promising.any():
                self._refine(W, rows[promising], k[promising], best, t, tf)
        return best

    def _project_grid(self, W, S_, tf):
        N, R = len(W), len(S_)
        Z = np.repeat(W, R, axis=0)
        dist, _ = self.L.project(Z, np.full(N * R, tf), np.tile(S_, N))
        return dist.reshape(N, R)

    def _refine(self, W, rows, k, best, t, tf):
        """Golden-section search on the exponent of ``r`` around the best grid point."""
        e = np.linspace(self.sched.r_slow, self.sched.r_fast, self.sched.r_grid)
        lo = e[np.maximum(k - 1, 0)]
        hi = e[np.minimum(k + 1, len(e) - 1)]
        g = (math.sqrt(5) - 1) / 2
        Wr = W[rows]
        tt = np.full(rows.size, tf)

        def f(ex):
            return self.L.project(Wr, tt, 0.5 * t * t ** ex)[0]

        a = hi - g * (hi - lo)
        b = lo + g * (hi - lo)
        fa, fb = f(a), f(b)
        for _ in range(self.sched.refine):
            left = fa < fb
            hi = np.where(left, b, hi)
            lo = np.where(left, lo, a)
            na = np.where(left, hi - g * (hi - lo), b)
            nb = np.where(left, a, lo + g * (hi - lo))
            # one new evaluation per row: the golden point that moved
            probe = np.where(left, na, nb)
            fp = f(probe)
            fa_new = np.where(left, fp, fb)
            fb_new = np.where(left, fa, fp)
            a, b, fa, fb = na, nb, fa_new, fb_new
        best[rows] = np.minimum(best[rows], np.minimum(fa, fb))

    def classify(self, W) -> list:
        W = np.atleast_2d(np.asarray(W, float))
        out = [None] * len(W)
        pending = []
        for i, w in enumerate(W):
            key = tuple(w)
            if key in self._cache:
                out[i] = self._cache[key]
            else:
                pending.append(i)
        if pending:
            R = self.residuals(W[pending])
            ts = self.sched.tail_ts()
            for row, i in zip(R, pending):
                v = OracleVerdict(classify_tail(row, ts, float(np.linalg.norm(W[i]))), row.tolist())
                self._cache[tuple(W[i])] = v
                out[i] = v
        return out

    def member(self, w) -> Optional[bool]:
        return self.classify([w])[0].value


def _root_pairs(L, Z, t, s, N, R):
    """For each adjacent pair of ``r`` grid values, whether some ``r`` between
    them puts ``w`` in the set: equality level sets by a sign change, other
    parts by membership at both ends. ``None`` when no equality part exists."""
    if isinstance(L, sl.LocalLevel):
        if not L.eq:
            m = L.member(Z, t, s, 0.0).reshape(N, R)
            return m[:, 1:] & m[:, :-1]
        phi = L.phi(Z, t, s).reshape(N, R)
        sg = np.sign(phi)
        return (sg[:, 1:] != sg[:, :-1]) | (phi[:, 1:] == 0) | (phi[:, :-1] == 0)
    if isinstance(L, (sl.LocalIntersect, sl.LocalProduct)):
        if isinstance(L, sl.LocalProduct):
            na = L.a.n
            pa = _root_pairs(L.a, Z[:, :na], t, s, N, R)
            pb = _root_pairs(L.b, Z[:, na:], t, s, N, R)
            fa = lambda: _member_pairs(L.a, Z[:, :na], t, s, N, R)
            fb = lambda: _member_pairs(L.b, Z[:, na:], t, s, N, R)
        else:
            pa = _root_pairs(L.a, Z, t, s, N, R)
            pb = _root_pairs(L.b, Z, t, s, N, R)
            fa = lambda: _member_pairs(L.a, Z, t, s, N, R)
            fb = lambda: _member_pairs(L.b, Z, t, s, N, R)
        if pa is None and pb is None:
            return None
        return (pa if pa is not None else fa()) & (pb if pb is not None else fb())
    if isinstance(L, sl.LocalUnion):
        pa = _root_pairs(L.a, Z, t, s, N, R)
        pb = _root_pairs(L.b, Z, t, s, N, R)
        if pa is None and pb is None:
            return None
        return (pa if pa is not None else _member_pairs(L.a, Z, t, s, N, R)) | (
            pb if pb is not None else _member_pairs(L.b, Z, t, s, N, R))
    return None


def _member_pairs(L, Z, t, s, N, R):
    m = L.member(Z, t, s, 0.0).reshape(N, R)
    return m[:, 1:] & m[:, :-1]


def lattice(n: int, R: int = SCAN_RADIUS) -> np.ndarray:
    return np.array(list(itertools.product(range(-R, R + 1), repeat=n)), dtype=float)


# --------------------------------------------------------------------------
# Tangent objects


@dataclass
class TangentObject:
    kind: str
    rep: str  # ExactCone | ExactAffineShift | ExactUnion | Oracle | ProvablyEmptyAtScale
    n: int
    polys: list = field(default_factory=list)
    oracle: Optional[SequenceOracle] = None
    evidence: dict = field(default_factory=dict)
    notes: list = field(default_factory=list)

    @property
    def exact(self) -> bool:
        return self.rep in ("ExactCone", "ExactAffineShift", "ExactUnion")

    @property
    def poly(self) -> Polyhedron:
        if not self.exact or len(self.polys) != 1:
            raise ValueError("not a single exact polyhedron")
        return self.polys[0]

    @property
    def is_cone(self) -> bool:
        return self.kind != OUTER or (self.exact and all(P.is_cone() for P in self.polys))

    def empty_at_scale(self) -> bool:
        return self.rep == "ProvablyEmptyAtScale"

    def is_empty(self) -> Optional[bool]:
        if self.exact:
            return all(px.is_empty(P) for P in self.polys)
        if self.rep == "ProvablyEmptyAtScale":
            return True
        return False if self.witnesses() else None

    def contains(self, w) -> Optional[bool]:
        if self.exact:
            wq = px.fvec(w) if all(ec.is_rational(v) for v in w) else None
            if wq is not None:
                return any(P.contains(wq) for P in self.polys)
            return any(sl.member(sl.PolySet(P), list(map(float, w))) for P in self.polys)
        if self.rep == "ProvablyEmptyAtScale":
            return False
        return self.oracle.member(np.asarray([float(v) for v in w]))

    def scan(self, R: int = SCAN_RADIUS) -> dict:
        """Classify the integer lattice ``||w||_inf <= R`` (oracle objects only)."""
        key = f"scan{R}"
        if key not in self.evidence:
            W = lattice(self.n, R)
            verdicts = self.oracle.classify(W)
            self.evidence[key] = {
                "points": W,
                "status": [v.status for v in verdicts],
            }
        return self.evidence[key]

    def witnesses(self) -> list:
        if self.exact:
            out = []
            for P in self.polys:
                p = px.feasible_point(P)
                if p is not None:
                    out.append(p)
            return out
        if self.oracle is None:
            return []
        sc = self.scan()
        return [w for w, st in zip(sc["points"], sc["status"]) if st == "member"]

    def describe(self, names=None) -> str:
        if self.exact:
            parts = []
            for P in self.polys:
                if px.is_empty(P):
                    parts.append("{}")
                else:
                    rows = P.describe(names)
                    parts.append("{" + ", ".join(rows) + "}" if rows else "R^%d" % P.n)
            return " ∪ ".join(parts)
        if self.rep == "ProvablyEmptyAtScale":
            return f"empty at scale R={self.evidence.get('radius', SCAN_RADIUS)}"
        return "oracle"


def _exact_object(kind, polys, n, d=None):
    if kind == OUTER and any(not P.is_cone() for P in polys):
        rep = "ExactAffineShift"
    else:
        rep = "ExactCone"
    if len(polys) > 1:
        rep = "ExactUnion"
    return TangentObject(kind, rep, n, list(polys))


def _branches(S):
    if isinstance(S, sl.Union):
        return _branches(S.a) + _branches(S.b)
    return [S]


def _contains_point(S, x):
    try:
        return sl.member(S, list(x))
    except Exception:
        return False


def tangent_cone(S: sl.SetExpr, x, schedule: SeqSchedule = DEFAULT_SCHEDULE) -> TangentObject:
    x = px.fvec(x)
    if not sl.member(S, list(x)):
        raise PointNotInSet("base point is not in the set")
    branches = [B for B in _branches(S) if _contains_point(B, x)]
    systems = [active_system(B, x) for B in branches]
    if all(s is not None for s in systems):
        return _exact_object(FIRST, [_exact_tangent(s, S.n) for s in systems], S.n)
    return TangentObject(FIRST, "Oracle", S.n, oracle=SequenceOracle(S, x, None, FIRST, schedule))


def _second(S, x, d, kind, schedule):
    x = px.fvec(x)
    d = px.fvec(d)
    if len(d) != S.n:
        raise px.DimensionMismatch("direction dimension differs from the set")
    if not sl.member(S, list(x)):
        raise PointNotInSet("base point is not in the set")
    if all(v == 0 for v in d):
        T = tangent_cone(S, x, schedule)
        T.kind = kind
        return T
    branches = [B for B in _branches(S) if _contains_point(B, x)]
    systems = [active_system(B, x) for B in branches]
    if all(s is not None for s in systems):
        polys = []
        for cons in systems:
            try:
                _check_tangent(cons, d)
            except DirectionNotTangent:
                continue
            polys.append(_exact_outer(cons, d, S.n) if kind == OUTER else _exact_asym(cons, d, S.n))
        if not polys:
            raise DirectionNotTangent("direction is not tangent to any branch")
        return _exact_object(kind, polys, S.n)
    T1 = SequenceOracle(S, x, None, FIRST, schedule)
    tv = T1.classify([np.asarray([float(v) for v in d])])[0]
    if tv.value is False:
        raise DirectionNotTangent("oracle: direction is not in the tangent cone")
    obj = TangentObject(kind, "Oracle", S.n, oracle=SequenceOracle(S, x, d, kind, schedule))
    obj.evidence["direction_check"] = tv.status
    if tv.value is None:
        obj.notes.append("tangency of the direction could not be confirmed by the oracle")
    return obj


def outer_second_tangent(S: sl.SetExpr, x, d, schedule: SeqSchedule = DEFAULT_SCHEDULE,
                         radius: int = SCAN_RADIUS) -> TangentObject:
    obj = _second(S, x, d, OUTER, schedule)
    if obj.rep == "Oracle":
        sc = obj.scan(radius)
        if all(st in ("divergent", "nonmember") for st in sc["status"]):
            obj.rep = "ProvablyEmptyAtScale"
            obj.evidence["radius"] = radius
            obj.notes.append(f"every lattice point with ||w||_inf <= {radius} was rejected; evidence, not proof")
    return obj


def asymptotic_second_tangent(S: sl.SetExpr, x, d, schedule: SeqSchedule = DEFAULT_SCHEDULE) -> TangentObject:
    return _second(S, x, d, ASYM, schedule)


def tangent_hat(S: sl.SetExpr, x, d) -> Optional[Polyhedron]:
    """``T_{T_S(x)}(d)`` on the exact path (the additive cone on polyhedra)."""
    T = tangent_cone(S, x)
    if not T.exact or len(T.polys) != 1:
        return None
    return px.polyhedron_tangent_cone(T.poly, px.fvec(d))


@dataclass
class NonemptinessReport:
    verdict: str
    witness: Optional[tuple]
    source: Optional[str]
    notes: list = field(default_factory=list)


def nonemptiness_check(S: sl.SetExpr, x, d, schedule: SeqSchedule = DEFAULT_SCHEDULE) -> NonemptinessReport:
    """A witness in ``T²`` or in ``T″ \\ {0}``."""
    T2 = outer_second_tangent(S, x, d, schedule)
    w = T2.witnesses()
    if w:
        return NonemptinessReport("holds", tuple(w[0]), "outer")
    Tpp = asymptotic_second_tangent(S, x, d, schedule)
    for v in Tpp.witnesses() if not Tpp.exact else _nonzero_cone_points(Tpp):
        if any(c != 0 for c in v):
            return NonemptinessReport("holds", tuple(v), "asymptotic")
    return NonemptinessReport("inconclusive", None, None, ["no witness in either set at scale"])


def _nonzero_cone_points(T: TangentObject):
    out = []
    for P in T.polys:
        C = px.as_cone(P)
        for j in range(P.n):
            for sgn in (1, -1):
                c = [0] * P.n
                c[j] = sgn
                res = px.lp_solve(c, px.Polyhedron(list(C.A) + _box_rows(P.n), list(C.b) + [1] * (2 * P.n), P.n))
                if res.status == "Optimal" and res.value > 0:
                    out.append(res.x)
    return out


def _box_rows(n):
    eye = [[1 if i == j else 0 for j in range(n)] for i in range(n)]
    return eye + [[-v for v in r] for r in eye]


# --------------------------------------------------------------------------
# Chain rule


@dataclass
class ChainSets:
    J: list
    q: tuple
    y: tuple
    Jd: tuple
    T2K: TangentObject
    TppK: TangentObject
    T2C: Optional[Polyhedron]
    TppC: Optional[Polyhedron]
    Omega: Optional[Polyhedron]
    Theta: Optional[Polyhedron]
    exact: bool
    t2_empty: bool
    notes: list = field(default_factory=list)


def jacobian_data(problem, x, d):
    """``J = grad g(x)``, ``q = grad² g(x)(d,d)``, ``y = g(x)``."""
    x = list(x)
    J = [tuple(ec.gradient(gi, x)) for gi in problem.g]
    q = tuple(ec.second_directional(gi, x, list(d)) for gi in problem.g)
    y = tuple(ec.evaluate(gi, x) for gi in problem.g)
    return J, q, y


def chain_rule_sets(problem, x, d, mscq=None, schedule: SeqSchedule = DEFAULT_SCHEDULE) -> ChainSets:
    """T²_C, T″_C and their images Ω, Θ through the equality chain rules.

    ``mscq`` is a regularity report or an asserted modulus; without it the
    sets are still returned but flagged as inclusion-only.
    """
    x = px.fvec(x)
    d = px.fvec(d)
    J, q, y = jacobian_data(problem, x, d)
    Jd = px.matvec(J, d)
    notes = []
    if mscq is None:
        notes.append("MSCQ not established: chain-rule sets are only known to contain the true sets")
    T2K = problem.outer_K(y, Jd, schedule)
    TppK = problem.asym_K(y, Jd, schedule)
    t2_empty = bool(T2K.is_empty())
    T2C = TppC = Omega = Theta = None
    exact = T2K.exact and TppK.exact and len(T2K.polys) == 1 and len(TppK.polys) == 1
    if T2K.rep == "ProvablyEmptyAtScale" and TppK.exact and len(TppK.polys) == 1:
        TppC = px.preimage(TppK.poly, J)
        Theta = px.image(TppC, J)
        notes.append("T²_K empty at scale, so Ω is empty")
    elif exact:
        T2C = px.preimage(T2K.poly, J, q)
        TppC = px.preimage(TppK.poly, J)
        Omega = px.image(T2C, J, q)
        Theta = px.image(TppC, J)
    return ChainSets(J, q, y, Jd, T2K, TppK, T2C, TppC, Omega, Theta, exact, t2_empty, notes)
