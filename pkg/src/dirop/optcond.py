"""Directional optimality conditions for ``min f(x)  s.t.  g(x) ∈ K``.

The ladder runs, in order: critical cone, first-order necessary, primal and
dual second-order necessary, the σ̂ variant, LP duality, second-order
sufficient, growth verification and a descent search.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

import numpy as np

from . import exprcore as ec
from . import normallab as nl
from . import polyexact as px
from . import regcheck as rc
from . import setlib as sl
from . import tangentlab as tl
from .polyexact import INF, Polyhedron, PolyCone

HOLDS = "holds"
FAILS = "fails"
INCONCLUSIVE = "inconclusive"
NOT_APPLICABLE = "not_applicable"
VACUOUS = "vacuous"

ETA = 1e-8
GUARD_TOL = 1e-10
STATIONARITY_TOL = 1e-10


class StationarityViolated(ValueError):
    pass


class ZeroDirection(ValueError):
    pass


class DeclaredMismatch(ValueError):
    pass


InfeasiblePoint = rc.InfeasiblePoint


@dataclass
class CheckReport:
    name: str
    verdict: str
    values: dict = field(default_factory=dict)
    witnesses: list = field(default_factory=list)
    notes: list = field(default_factory=list)
    tol: dict = field(default_factory=dict)
    parts: dict = field(default_factory=dict)


def _worst(*verdicts) -> str:
    """Combine sub-verdicts of a conjunction."""
    vs = [v for v in verdicts if v not in (VACUOUS, NOT_APPLICABLE)]
    if not vs:
        return VACUOUS if VACUOUS in verdicts else NOT_APPLICABLE
    if FAILS in vs:
        return FAILS
    if INCONCLUSIVE in vs:
        return INCONCLUSIVE
    return HOLDS


# --------------------------------------------------------------------------
# Problem


class Problem:
    """``min f(x) s.t. g(x) ∈ K`` with optional declared tangent/normal objects.

    ``declared`` may hold ``t2_K`` (a Polyhedron or ``"empty"``), ``tpp_K``
    (a Polyhedron) and ``normal_K`` (a list of generators), valid at the
    pair ``declared_at = (y, Jd)``. Positive rescalings of ``Jd`` are handled.
    """

    def __init__(self, f: ec.Expr, g, K: sl.SetExpr, vars=None, kvars=None, declared=None, declared_at=None):
        self.f = f
        self.g = list(g)
        self.K = K
        if vars is None:
            n = max([ec.num_vars(f)] + [ec.num_vars(gi) for gi in self.g])
            vars = [f"x{i + 1}" for i in range(n)]
        self.vars = list(vars)
        self.kvars = list(kvars) if kvars else [f"y{i + 1}" for i in range(K.n)]
        if K.n != len(self.g):
            raise px.DimensionMismatch(f"K lives in dimension {K.n} but g has {len(self.g)} components")
        self.declared = dict(declared or {})
        self.declared_at = declared_at
        self._C = None
        self._np = None
        self._cache = {}

    @property
    def n(self) -> int:
        return len(self.vars)

    @property
    def m(self) -> int:
        return len(self.g)

    @property
    def C(self) -> sl.SetExpr:
        if self._C is None:
            self._C = sl.preimage(self.K, self.g, self.n)
        return self._C

    def _compiled(self):
        if self._np is None:
            f, gf, _ = ec.compile_derivatives(self.f, self.n)
            gs = [ec.compile_numpy(gi, self.n) for gi in self.g]
            self._np = (f, gf, gs)
        return self._np

    def f_float(self, X):
        return self._compiled()[0](X)

    def grad_f_float(self, X):
        return self._compiled()[1](X)

    def g_float(self, X):
        X = np.atleast_2d(np.asarray(X, float))
        return np.stack([gi(X) for gi in self._compiled()[2]], axis=-1)

    def grad_f(self, x) -> tuple:
        return tuple(ec.gradient(self.f, list(x)))

    def jacobian_data(self, x, d):
        return tl.jacobian_data(self, x, d)

    def is_identity(self) -> bool:
        return self.n == self.m and all(isinstance(gi, ec.Var) and gi.index == i for i, gi in enumerate(self.g))

    def is_affine_polyhedral(self) -> bool:
        if not isinstance(self.K, sl.PolySet):
            return False
        polys = [ec.to_polynomial(gi, self.n) for gi in self.g]
        return all(p is not None and all(sum(k) <= 1 for k in p) for p in polys)

    def feasible(self, x) -> bool:
        y = [ec.evaluate(gi, list(x)) for gi in self.g]
        return sl.member(self.K, y)

    # declared overrides -------------------------------------------------

    def _declared_scale(self, y, Jd) -> Optional[Fraction]:
        if self.declared_at is None:
            return None
        y0, Jd0 = self.declared_at
        if tuple(px.fvec(y)) != tuple(px.fvec(y0)):
            return None
        Jd, Jd0 = px.fvec(Jd), px.fvec(Jd0)
        ratio = None
        for a, b in zip(Jd, Jd0):
            if (a == 0) != (b == 0):
                return None
            if b != 0:
                r = a / b
                if r <= 0 or (ratio is not None and r != ratio):
                    return None
                ratio = r
        return ratio if ratio is not None else Fraction(1)

    def outer_K(self, y, Jd, schedule=tl.DEFAULT_SCHEDULE) -> tl.TangentObject:
        key = ("outer", tuple(px.fvec(y)), tuple(px.fvec(Jd)))
        if key not in self._cache:
            c = self._declared_scale(y, Jd) if "t2_K" in self.declared else None
            if c is not None:
                D = self.declared["t2_K"]
                if isinstance(D, str):
                    obj = tl.TangentObject(tl.OUTER, "ExactCone", self.m, [Polyhedron.empty(self.m)])
                else:
                    obj = tl._exact_object(tl.OUTER, [Polyhedron(D.A, [c * c * v for v in D.b], D.n)], self.m)
                obj.notes.append("declared in the problem file")
            else:
                obj = tl.outer_second_tangent(self.K, y, Jd, schedule)
            self._cache[key] = obj
        return self._cache[key]

    def asym_K(self, y, Jd, schedule=tl.DEFAULT_SCHEDULE) -> tl.TangentObject:
        key = ("asym", tuple(px.fvec(y)), tuple(px.fvec(Jd)))
        if key not in self._cache:
            c = self._declared_scale(y, Jd) if "tpp_K" in self.declared else None
            if c is not None:
                obj = tl._exact_object(tl.ASYM, [self.declared["tpp_K"]], self.m)
                obj.notes.append("declared in the problem file")
            else:
                obj = tl.asymptotic_second_tangent(self.K, y, Jd, schedule)
            self._cache[key] = obj
        return self._cache[key]

    def normal_K(self, y, Jd) -> nl.NormalObject:
        key = ("normal", tuple(px.fvec(y)), tuple(px.fvec(Jd)))
        if key not in self._cache:
            c = self._declared_scale(y, Jd) if "normal_K" in self.declared else None
            if c is not None:
                gens = [px.fvec(v) for v in self.declared["normal_K"]]
                obj = nl.NormalObject("ExactCone", self.m, px.cone_from_generators(gens, self.m), gens, [],
                                      notes=["declared in the problem file"])
            else:
                obj = nl.directional_limiting_normal(self.K, y, Jd)
            self._cache[key] = obj
        return self._cache[key]

    def validate_declared(self, radius: int = 3) -> dict:
        """Compare declared objects with the oracles on a small lattice."""
        if not self.declared or self.declared_at is None:
            return {}
        y, Jd = self.declared_at
        out = {}
        W = tl.lattice(self.m, radius)
        for key, fn in (("t2_K", tl.outer_second_tangent), ("tpp_K", tl.asymptotic_second_tangent)):
            if key not in self.declared:
                continue
            D = self.declared[key]
            obj = fn(self.K, y, Jd)
            if obj.exact:
                agree = all(bool(obj.contains(w)) == (not isinstance(D, str) and D.contains(px.fvec(w))) for w in W)
            elif obj.rep == "ProvablyEmptyAtScale":
                agree = isinstance(D, str) or px.is_empty(D)
            else:
                verdicts = obj.oracle.classify(W)
                agree = all(v.value is None or v.value == (not isinstance(D, str) and D.contains(px.fvec(w)))
                            for w, v in zip(W, verdicts))
            if not agree:
                raise DeclaredMismatch(f"declared {key} disagrees with the oracle")
            out[key] = f"consistent with the oracle on the lattice of radius {radius}"
        if "normal_K" in self.declared:
            N = nl.directional_limiting_normal(self.K, y, Jd)
            decl = px.cone_from_generators([px.fvec(v) for v in self.declared["normal_K"]], self.m)
            for w in tl.lattice(self.m, 2):
                got = N.contains(w)
                if got is not None and got != decl.contains(px.fvec(w)):
                    raise DeclaredMismatch("declared normal_K disagrees with the oracle")
            out["normal_K"] = "consistent with the oracle on the lattice of radius 2"
        return out


# --------------------------------------------------------------------------
# Helpers


def _rational(v) -> bool:
    return all(ec.is_rational(c) for c in v)


def _norm(v) -> float:
    return math.sqrt(sum(float(c) ** 2 for c in v))


def _guard(problem, x, d):
    """``(passes, value)`` for ``∇f(x)d = 0`` to tolerance."""
    gf = problem.grad_f(x)
    val = px.dot(gf, px.fvec(d)) if _rational(gf) and _rational(d) else sum(float(a) * float(b) for a, b in zip(gf, d))
    if isinstance(val, Fraction):
        return val == 0, val
    return abs(val) <= GUARD_TOL * (1 + _norm(gf) * _norm(d)), val


def _mscq_ok(problem, mscq) -> bool:
    if problem.is_identity() or problem.is_affine_polyhedral():
        return True
    if mscq is None:
        return False
    if isinstance(mscq, rc.CQReport):
        return mscq.verdict == "consistent"
    return float(mscq) > 0


def _jt_lambda(J, lam):
    n = len(J[0]) if J else 0
    return tuple(sum((J[i][k] * lam[i] for i in range(len(J))), Fraction(0)) for k in range(n))


def lagrangian_dd(problem, x, d, lam):
    """``∇²_xx L(x, λ)(d, d)``."""
    x, d = list(x), list(d)
    val = ec.second_directional(problem.f, x, d)
    for li, gi in zip(lam, problem.g):
        val = val + li * ec.second_directional(gi, x, d)
    return val


def check_stationarity(problem, x, lam):
    J, _, _ = problem.jacobian_data(x, [0] * problem.n)
    r = [a + b for a, b in zip(problem.grad_f(x), _jt_lambda(J, lam))]
    if _rational(r):
        if any(v != 0 for v in r):
            raise StationarityViolated(f"∇_x L(x, λ) = {[str(v) for v in r]}")
    elif max(abs(float(v)) for v in r) > STATIONARITY_TOL:
        raise StationarityViolated("∇_x L(x, λ) is not zero")


# --------------------------------------------------------------------------
# Critical cone and first order


@dataclass
class CriticalCone:
    exact: bool
    polys: list
    grad_f: tuple
    TK: tl.TangentObject
    J: list
    notes: list = field(default_factory=list)

    def contains(self, d) -> Optional[bool]:
        if self.exact:
            return any(P.contains(px.fvec(d)) for P in self.polys)
        if float(px.dot(self.grad_f, px.fvec(d))) > 0:
            return False
        return self.TK.contains(px.matvec(self.J, px.fvec(d)))

    def describe(self, names=None) -> str:
        if not self.exact:
            return "oracle"
        return " ∪ ".join("{" + ", ".join(P.describe(names)) + "}" if P.k else f"R^{P.n}" for P in self.polys)


def critical_cone(problem, x) -> CriticalCone:
    """``{d : ∇g(x)d ∈ T_K(g(x)), ∇f(x)d <= 0}``."""
    x = px.fvec(x)
    if not problem.feasible(x):
        raise InfeasiblePoint("g(x) is not in K")
    J, _, y = problem.jacobian_data(x, [0] * problem.n)
    gf = problem.grad_f(x)
    TK = tl.tangent_cone(problem.K, y)
    if TK.exact:
        half = Polyhedron([gf], [0], problem.n)
        polys = [px.intersect(px.preimage(P, J), half) for P in TK.polys]
        return CriticalCone(True, polys, gf, TK, J)
    return CriticalCone(False, [], gf, TK, J, ["T_K has no exact representation"])


def _tangent_C(problem, x):
    """``T_C(x)`` with provenance."""
    T = tl.tangent_cone(problem.C, x)
    if T.exact:
        return T, "direct"
    J, _, y = problem.jacobian_data(x, [0] * problem.n)
    TK = tl.tangent_cone(problem.K, y)
    if TK.exact:
        return tl._exact_object(tl.FIRST, [px.preimage(P, J) for P in TK.polys], problem.n), "chain"
    return T, "oracle"


def _check_tangent(problem, x, d, rep: CheckReport) -> Optional[bool]:
    T, src = _tangent_C(problem, x)
    inside = T.contains(px.fvec(d) if _rational(d) else d)
    rep.values["d_in_T_C"] = inside
    rep.notes.append(f"tangency of d checked on the {src} path")
    return inside


def fonc_check(problem, x, d, normal: Optional[nl.NormalObject] = None, mscq=None) -> CheckReport:
    x, d = px.fvec(x), px.fvec(d)
    rep = CheckReport("fonc", INCONCLUSIVE, tol={"guard": GUARD_TOL})
    if _check_tangent(problem, x, d, rep) is False:
        raise tl.DirectionNotTangent("d is not tangent to C at x")
    gf = problem.grad_f(x)
    gd = px.dot(gf, d)
    rep.values["grad_f_d"] = gd
    part1 = HOLDS if gd >= 0 else FAILS
    rep.parts["i"] = CheckReport("fonc.i", part1, {"grad_f_d": gd})
    minus = tuple(-v for v in gf)
    N, src = (normal, "given") if normal is not None else _normal_C(problem, x, d)
    member = N.contains(minus) if N is not None else None
    rep.values["minus_grad_in_normal"] = member
    rep.values["normal_C"] = N.describe(problem.vars) if N is not None else None
    ok, _ = _guard(problem, x, d)
    if not ok:
        part2 = CheckReport("fonc.ii", NOT_APPLICABLE, notes=["∇f(x)d ≠ 0: the directional condition is not required"])
    elif N is None:
        part2 = _fonc_multiplier(problem, x, d, mscq)
    else:
        part2 = CheckReport("fonc.ii", HOLDS if member else (FAILS if member is False else INCONCLUSIVE),
                            notes=[f"N_C(x;d) from the {src} path"])
    rep.parts["ii"] = part2
    rep.verdict = _worst(part1, part2.verdict)
    return rep


def _normal_C(problem, x, d):
    """Exact ``N_C(x;d)`` when the constraint set has an exact structure, else ``None``."""
    T = tl.tangent_cone(problem.C, x)
    if T.exact and len(T.polys) == 1:
        return nl.directional_limiting_normal(problem.C, x, d), "direct"
    return None, None


def _fonc_multiplier(problem, x, d, mscq) -> CheckReport:
    M = multiplier_set(problem, x, d)
    rep = CheckReport("fonc.ii", INCONCLUSIVE, notes=["multiplier form: -∇f(x) ∈ ∇g(x)^T N_K(g(x); ∇g(x)d)"])
    rep.values["multipliers"] = [w for w, ok in M.witnesses if ok]
    if M.nonempty is True:
        rep.verdict = HOLDS
    elif M.nonempty is False:
        rep.verdict = FAILS if M.exact else INCONCLUSIVE
    if rep.verdict == HOLDS and not _mscq_ok(problem, mscq):
        rep.notes.append("MSCQ not established: a multiplier exists but the normal cone inclusion is unverified")
    return rep


# --------------------------------------------------------------------------
# Multipliers


@dataclass
class MultiplierSet:
    particular: Optional[tuple]
    kernel: list
    normal: Optional[nl.NormalObject]
    exact: bool
    polyhedron: Optional[Polyhedron]
    witnesses: list = field(default_factory=list)  # (λ, member) pairs
    nonempty: Optional[bool] = None
    notes: list = field(default_factory=list)

    def members(self) -> list:
        return [w for w, ok in self.witnesses if ok]


def multiplier_set(problem, x, d, flavor: str = "M", kappa: Optional[float] = None) -> MultiplierSet:
    """``Λ(x;d) = {λ ∈ N_K(g(x); ∇g(x)d) : ∇_x L(x, λ) = 0}``."""
    x, d = px.fvec(x), px.fvec(d)
    J, _, y = problem.jacobian_data(x, d)
    Jd = px.matvec(J, d)
    N = problem.normal_K(y, Jd)
    gf = problem.grad_f(x)
    JT = px.transpose([list(r) for r in J]) if J else []
    sol = px.kernel_and_solve(JT, [-v for v in gf], problem.m) if JT else None
    if not JT:
        sol = px.KernelSolution(tuple(), [])
    if sol is None:
        return MultiplierSet(None, [], N, True, None, nonempty=False, notes=["∇g(x)^T λ = -∇f(x) has no solution"])
    if flavor == "Clarke":
        cone = nl.clarke_directional_normal(N)
        N = nl.NormalObject("ExactCone", problem.m, cone) if cone is not None else N
    cands = [sol.particular]
    for k in sol.kernel:
        for c in (-2, -1, 1, 2):
            cands.append(tuple(p + c * v for p, v in zip(sol.particular, k)))
    witnesses = [(lam, N.contains(lam)) for lam in cands]
    exact = N.rep in ("ExactCone", "Empty")
    P = None
    nonempty = True if any(ok for _, ok in witnesses) else None
    if exact and N.rep == "ExactCone":
        P = Polyhedron(list(N.cone.A), [0] * N.cone.k, problem.m, eq_A=JT, eq_b=[-v for v in gf])
        nonempty = not px.is_empty(P)
        if nonempty and not any(ok for _, ok in witnesses):
            witnesses.append((tuple(px.feasible_point(P)), True))
    elif N.rep == "Empty":
        nonempty = False
    notes = []
    if sol.kernel:
        notes.append("affine solution set: witnesses are the particular solution plus multiples of each kernel vector")
    if kappa is not None:
        bound = kappa * _norm(gf)
        notes.append(f"multiplier bound ||λ|| <= {bound:.6g}: "
                     + ", ".join("ok" if _norm(w) <= bound + 1e-12 else "exceeds" for w, ok in witnesses if ok))
    return MultiplierSet(sol.particular, list(sol.kernel), N, exact, P, witnesses, nonempty, notes)


# --------------------------------------------------------------------------
# Second-order sets of C


@dataclass
class SecondC:
    T2C: Optional[list]  # list of polyhedra ([] = empty), None = unknown
    TppC: Optional[list]
    source: str
    chain: Optional[tl.ChainSets] = None
    notes: list = field(default_factory=list)
    Tpp_oracle: Optional[tl.TangentObject] = None


def second_sets_C(problem, x, d, mscq=None) -> SecondC:
    x, d = px.fvec(x), px.fvec(d)
    T = tl.tangent_cone(problem.C, x)
    if T.exact:
        T2 = tl.outer_second_tangent(problem.C, x, d)
        Tpp = tl.asymptotic_second_tangent(problem.C, x, d)
        return SecondC([P for P in T2.polys if not px.is_empty(P)], list(Tpp.polys), "direct")
    cs = tl.chain_rule_sets(problem, x, d, mscq)
    notes = list(cs.notes)
    if cs.T2K.rep == "ProvablyEmptyAtScale":
        T2C = []
    elif cs.T2C is not None:
        T2C = [] if px.is_empty(cs.T2C) else [cs.T2C]
    else:
        T2C = None
    TppC = [cs.TppC] if cs.TppC is not None else None
    # with g the identity the sets of C are those of K, oracle or not
    oracle = cs.TppK if TppC is None and problem.is_identity() and not cs.TppK.exact else None
    return SecondC(T2C, TppC, "chain", cs, notes, oracle)


def _downgrade(rep: CheckReport, problem, sc: SecondC, mscq):
    if sc.source == "chain" and not _mscq_ok(problem, mscq):
        rep.notes.append("MSCQ not established: chain-rule sets are only an outer estimate")
        if rep.verdict == HOLDS:
            rep.verdict = INCONCLUSIVE
    if sc.chain is not None and sc.chain.T2K.rep == "ProvablyEmptyAtScale":
        rep.notes.append("T²_K is empty at the lattice scale (evidence, not proof)")


def sonc_primal(problem, x, d, mscq=None) -> CheckReport:
    x, d = px.fvec(x), px.fvec(d)
    rep = CheckReport("sonc_primal", INCONCLUSIVE, tol={"guard": GUARD_TOL})
    if _check_tangent(problem, x, d, rep) is False:
        raise tl.DirectionNotTangent("d is not tangent to C at x")
    ok, gd = _guard(problem, x, d)
    if not ok:
        rep.verdict = NOT_APPLICABLE
        rep.values["grad_f_d"] = gd
        rep.notes.append("∇f(x)d ≠ 0: second-order conditions are not required")
        return rep
    gf = problem.grad_f(x)
    hdd = ec.second_directional(problem.f, list(x), list(d))
    sc = second_sets_C(problem, x, d, mscq)
    rep.values["source"] = sc.source
    if sc.TppC is not None:
        polar_ok = all(px.cone_polar_member([-v for v in gf], px.as_cone(P)) for P in sc.TppC)
        p1 = HOLDS if polar_ok else FAILS
    elif sc.Tpp_oracle is not None:
        p1 = _oracle_polar(sc.Tpp_oracle, [-v for v in gf], rep)
    else:
        p1 = INCONCLUSIVE
    rep.parts["i"] = CheckReport("sonc_primal.i", p1)
    if sc.T2C is None:
        p2 = CheckReport("sonc_primal.ii", INCONCLUSIVE, notes=["T²_C has no exact representation"])
    elif not sc.T2C:
        p2 = CheckReport("sonc_primal.ii", VACUOUS, {"alpha": INF}, notes=["T²_C is empty"])
    else:
        mins = []
        for P in sc.T2C:
            res = px.lp_solve(gf, P, "min")
            mins.append(res.value if res.status == "Optimal" else -INF)
        lo = min(mins, key=float)
        alpha = lo + hdd if lo != -INF else -INF
        p2 = CheckReport("sonc_primal.ii", HOLDS if alpha >= 0 else FAILS, {"alpha": alpha})
    rep.parts["ii"] = p2
    rep.values["alpha"] = p2.values.get("alpha")
    rep.verdict = _worst(p1, p2.verdict)
    _downgrade(rep, problem, sc, mscq)
    return rep


# --------------------------------------------------------------------------
# Dual second order


def _oracle_polar(T: tl.TangentObject, c, rep: CheckReport) -> str:
    """``<c, w> <= 0`` on an oracle cone, decided on its lattice witnesses."""
    s = nl.support(T, c)
    rep.notes.append("decided on oracle lattice witnesses (evidence)")
    if s.value == INF:
        return FAILS
    return HOLDS if s.value is not None and float(s.value) <= 0 else INCONCLUSIVE


def _sigma_poly(P: Optional[Polyhedron], lam) -> nl.ExtReal:
    return nl.support(P, lam) if P is not None else nl.ExtReal(-INF)


def sonc_dual(problem, x, d, lam, mscq=None) -> CheckReport:
    x, d, lam = px.fvec(x), px.fvec(d), px.fvec(lam)
    check_stationarity(problem, x, lam)
    rep = CheckReport("sonc_dual", INCONCLUSIVE, tol={"guard": GUARD_TOL})
    ok, gd = _guard(problem, x, d)
    if not ok:
        rep.verdict = NOT_APPLICABLE
        rep.values["grad_f_d"] = gd
        return rep
    cs = tl.chain_rule_sets(problem, x, d, mscq)
    rep.notes += cs.notes
    L2 = lagrangian_dd(problem, x, d, lam)
    rep.values["hess_L_dd"] = L2
    # (i)
    if cs.Theta is not None:
        sT = nl.support(cs.Theta, lam)
        rep.values["sigma_Theta"] = sT.value
        p1 = HOLDS if float(sT.value) <= 0 else FAILS
    elif not cs.TppK.exact:
        # Θ = ∇g T″_C lies inside T″_K, so σ_{T″_K}(λ) <= 0 suffices
        p1 = _oracle_polar(cs.TppK, lam, rep)
        if p1 == FAILS:
            p1 = INCONCLUSIVE
        rep.values["sigma_TppK"] = nl.support(cs.TppK, lam).value
    else:
        p1 = INCONCLUSIVE
    rep.parts["i"] = CheckReport("sonc_dual.i", p1)
    # (ii)
    if cs.Omega is not None:
        sO = nl.support(cs.Omega, lam)
        val = L2 - sO.value if sO.value not in (INF, -INF) else -sO.value
        rep.values["sigma_Omega"] = sO.value
        rep.values["value"] = val
        p2 = HOLDS if float(val) >= 0 else FAILS
    elif cs.T2K.rep == "ProvablyEmptyAtScale" or (cs.T2K.exact and cs.T2K.is_empty()):
        rep.values["sigma_Omega"] = -INF
        rep.values["value"] = INF
        p2 = VACUOUS
    else:
        p2 = INCONCLUSIVE
    rep.parts["ii"] = CheckReport("sonc_dual.ii", p2)
    # comparison with T²_K itself
    if cs.T2K.exact:
        sK = nl.support(cs.T2K, lam)
        rep.values["sigma_T2K"] = sK.value
        if sK.value not in (INF, -INF):
            rep.values["value_T2K"] = L2 - sK.value
    # identity with the primal α
    if cs.T2C is not None and cs.exact:
        res = px.lp_solve(problem.grad_f(x), cs.T2C, "min")
        if res.status == "Optimal":
            alpha = res.value + ec.second_directional(problem.f, list(x), list(d))
            rep.values["alpha_primal"] = alpha
            rep.values["identity_ok"] = rep.values.get("value") == alpha
    rep.verdict = _worst(p1, p2)
    if not _mscq_ok(problem, mscq):
        rep.notes.append("MSCQ not established")
        if rep.verdict == HOLDS:
            rep.verdict = INCONCLUSIVE
    return rep


def sonc_hat(problem, x, d, lam, A: Optional[Polyhedron] = None, B: Optional[Polyhedron] = None,
             mscq=None, seed: int = 0) -> CheckReport:
    """The σ̂ rungs over ``T″_K`` and ``T²_K`` (with optional restriction sets)."""
    x, d, lam = px.fvec(x), px.fvec(d), px.fvec(lam)
    check_stationarity(problem, x, lam)
    rep = CheckReport("sonc_hat", INCONCLUSIVE, notes=[f"σ̂ ε schedule {nl.SIGMA_HAT_EPS}"])
    ok, gd = _guard(problem, x, d)
    if not ok:
        rep.verdict = NOT_APPLICABLE
        return rep
    J, _, y = problem.jacobian_data(x, d)
    Jd = px.matvec(J, d)
    TppK = problem.asym_K(y, Jd)
    T2K = problem.outer_K(y, Jd)
    L2 = lagrangian_dd(problem, x, d, lam)
    h1 = nl.lower_generalized_support(TppK, lam, A, seed)
    rep.values["sigma_hat_Tpp"] = h1.value
    rep.values["sigma_hat_Tpp_kind"] = h1.kind
    if h1.kind == "Bracket":
        lo, hi = float(h1.low), float(h1.high)
        p1 = HOLDS if hi <= 0 else (FAILS if lo > 0 else INCONCLUSIVE)
        rep.values["sigma_hat_Tpp_bracket"] = [h1.low, h1.high]
    else:
        p1 = HOLDS if float(h1.value) <= 0 else FAILS
        if h1.kind != "Exact" and p1 == HOLDS:
            rep.notes.append("σ̂ over T″_K decided from oracle witnesses")
    rep.parts["i"] = CheckReport("sonc_hat.i", p1)
    if T2K.rep == "ProvablyEmptyAtScale" or (T2K.exact and T2K.is_empty()):
        rep.values["sigma_hat_T2"] = -INF
        p2 = VACUOUS
    else:
        h2 = nl.lower_generalized_support(T2K, lam, B, seed)
        rep.values["sigma_hat_T2"] = h2.value
        if h2.kind == "Bracket":
            lo, hi = float(h2.low), float(h2.high)
            v_lo, v_hi = float(L2) - hi, float(L2) - lo
            p2 = HOLDS if v_lo >= 0 else (FAILS if v_hi < 0 else INCONCLUSIVE)
        else:
            val = L2 - h2.value if h2.value not in (INF, -INF) else -h2.value
            rep.values["value"] = val
            p2 = HOLDS if float(val) >= 0 else FAILS
    rep.parts["ii"] = CheckReport("sonc_hat.ii", p2)
    # ordering against σ_Θ and σ_Ω
    cs = tl.chain_rule_sets(problem, x, d, mscq)
    if cs.Omega is not None and "sigma_hat_T2" in rep.values and rep.values["sigma_hat_T2"] is not None:
        sO = nl.support(cs.Omega, lam).value
        rep.values["sigma_Omega"] = sO
        if float(rep.values["sigma_hat_T2"]) > float(sO):
            rep.notes.append("σ̂ over T²_K exceeds σ_Ω at this λ: the ordering holds only for the multiplier"
                             " produced by the necessary-condition argument, so this λ is not that multiplier")
    if cs.Theta is not None:
        rep.values["sigma_Theta"] = nl.support(cs.Theta, lam).value
    rep.verdict = _worst(p1, p2)
    return rep


# --------------------------------------------------------------------------
# LP duality


def duality_pair(problem, x, d, u) -> CheckReport:
    """Primal ``min ∇f v s.t. ∇g v ∈ u + T̂_K`` and its dual ``max -λ^T u``."""
    x, d, u = px.fvec(x), px.fvec(d), px.fvec(u)
    J, _, y = problem.jacobian_data(x, d)
    Jd = px.matvec(J, d)
    That = tl.tangent_hat(problem.K, y, Jd)
    if That is None:
        raise rc.ExactPathUnavailable("T̂_K has no exact polyhedral representation")
    gf = problem.grad_f(x)
    n, m = problem.n, problem.m
    B = list(That.A)
    BJ = [px.matvec(px.transpose([list(r) for r in J]), row) if J else () for row in B]
    primal = Polyhedron(BJ, [px.dot(row, u) for row in B], n)
    pres = px.lp_solve(gf, primal, "min")
    pval = pres.value if pres.status == "Optimal" else (-INF if pres.status == "Unbounded" else INF)
    k = len(B)
    # dual over the generators of the polar of T̂: λ = Σ μ_i B_i, μ >= 0
    cols = [_jt_lambda(J, row) for row in B]
    eqA = [[cols[i][j] for i in range(k)] for j in range(n)]
    dual_poly = Polyhedron([[-1 if i == j else 0 for j in range(k)] for i in range(k)], [0] * k, k,
                           eq_A=eqA, eq_b=[-v for v in gf]) if k else None
    if k:
        dres = px.lp_solve([-px.dot(row, u) for row in B], dual_poly, "max")
        dval = dres.value if dres.status == "Optimal" else (INF if dres.status == "Unbounded" else -INF)
        lam_u = (tuple(sum((dres.x[i] * B[i][j] for i in range(k)), Fraction(0)) for j in range(m))
                 if dres.status == "Optimal" else None)
    else:
        feasible = all(v == 0 for v in gf)
        dval = Fraction(0) if feasible else -INF
        lam_u = tuple(Fraction(0) for _ in range(m)) if feasible else None
    gap = None
    if pval == dval:
        gap = Fraction(0)
    elif pval not in (INF, -INF) and dval not in (INF, -INF):
        gap = pval - dval
    rep = CheckReport("duality", HOLDS if gap == 0 else FAILS,
                      {"primal": pval, "dual": dval, "gap": gap, "lambda_u": lam_u})
    if lam_u is not None:
        rep.values["lambda_u_dot_u"] = px.dot(lam_u, u)
    cq = rc.dirrcq_check(problem, x, d)
    rep.values["dirrcq"] = cq.verdict
    if cq.verdict != HOLDS:
        rep.notes.append("DirRCQ does not hold: a duality gap is not excluded")
    return rep


# --------------------------------------------------------------------------
# Sufficient conditions


def _strict_negative(c, polys, n, extra_eq) -> tuple:
    """``max <c, v>`` over ``v ∈ P ∩ {extra_eq v = 0}``, ``||v||_inf <= 1``, some ``v_j = ±1``.

    Returns ``(max value or None when the cone is {0}, witness)``.
    """
    best, wit = None, None
    for P in polys:
        for j in range(n):
            for s in (1, -1):
                e = [0] * n
                e[j] = 1
                box = [[1 if i == k else 0 for k in range(n)] for i in range(n)]
                box += [[-v for v in r] for r in box]
                Q = Polyhedron(list(P.A) + box, list(P.b) + [1] * (2 * n), n,
                               eq_A=[list(extra_eq), e], eq_b=[0, s])
                res = px.lp_solve(c, Q, "max")
                if res.status == "Optimal" and (best is None or res.value > best):
                    best, wit = res.value, res.x
    return best, wit


def ssoc_sufficient(problem, x, d, lam, mode: str = "theorem", mscq=None) -> CheckReport:
    x, d, lam = px.fvec(x), px.fvec(d), px.fvec(lam)
    if all(v == 0 for v in d):
        raise ZeroDirection("the sufficient condition needs a nonzero direction")
    check_stationarity(problem, x, lam)
    if mode not in ("theorem", "corollary"):
        raise ValueError("mode is 'theorem' or 'corollary'")
    rep = CheckReport("ssoc", INCONCLUSIVE, tol={"eta": ETA}, values={"mode": mode})
    if _check_tangent(problem, x, d, rep) is False:
        raise tl.DirectionNotTangent("d is not tangent to C at x")
    ok, gd = _guard(problem, x, d)
    if not ok:
        rep.verdict = NOT_APPLICABLE
        return rep
    cs = tl.chain_rule_sets(problem, x, d, mscq)
    J = cs.J
    L2 = lagrangian_dd(problem, x, d, lam)
    rep.values["hess_L_dd"] = L2
    c = _jt_lambda(J, lam)
    # (i): <λ, J v> < 0 over v ∈ T″_C ∩ d^⊥, v ≠ 0, with T″_C = {v : J v ∈ T″_K}
    if cs.TppC is not None:
        best, wit = _strict_negative(c, [cs.TppC], problem.n, d)
        if best is None:
            p1 = HOLDS
            rep.values["max_i"] = -INF
        else:
            rep.values["max_i"] = best
            p1 = HOLDS if best < -ETA else (FAILS if best >= 0 else INCONCLUSIVE)
            if p1 == FAILS:
                rep.witnesses.append({"rung": "i", "v": wit})
    else:
        p1 = INCONCLUSIVE
    rep.parts["i"] = CheckReport("ssoc.i", p1)
    # (ii)
    if mode == "theorem":
        if cs.T2K.rep == "ProvablyEmptyAtScale" or (cs.T2K.exact and cs.T2K.is_empty()):
            sig = -INF
        elif cs.T2C is not None:
            Q = Polyhedron(list(cs.T2C.A), list(cs.T2C.b), problem.n, eq_A=[list(d)], eq_b=[0])
            s0 = px.support(Q, c)
            sig = s0 + px.dot(lam, cs.q) if s0 not in (INF, -INF) else s0
        else:
            sig = None
    else:
        if cs.T2K.rep == "ProvablyEmptyAtScale":
            sig = -INF
        elif cs.T2K.exact:
            sig = nl.support(cs.T2K, lam).value
        else:
            sig = None
    if sig is None:
        p2 = INCONCLUSIVE
    else:
        margin = INF if sig == -INF else (-INF if sig == INF else L2 - sig)
        rep.values["sigma"] = sig
        rep.values["margin"] = margin
        if margin == INF:
            p2 = VACUOUS
        else:
            p2 = HOLDS if float(margin) > ETA else (FAILS if float(margin) < -ETA else INCONCLUSIVE)
    rep.parts["ii"] = CheckReport("ssoc.ii", p2)
    rep.verdict = HOLDS if (p1 == HOLDS and p2 in (HOLDS, VACUOUS)) else _worst(p1, p2)
    if not _mscq_ok(problem, mscq):
        rep.notes.append("MSCQ not established")
        if rep.verdict == HOLDS:
            rep.verdict = INCONCLUSIVE
    if cs.T2K.rep == "ProvablyEmptyAtScale":
        rep.notes.append("T²_K is empty at the lattice scale (evidence, not proof)")
    return rep


# --------------------------------------------------------------------------
# Sampling checks


def _harvest(problem, x, V: rc.DirectionalNeighborhood, count: int, rng):
    xf = np.asarray([float(v) for v in x])
    W = V.sample(count, rng)
    X = xf + W
    # strict membership: at small radii a 1e-9 slack would dominate f
    dist, P = sl.distances(problem.C, X, tol=0.0)
    inside = dist == 0
    # an infinite distance means no point of C was found and the row is not a projection
    proj = P[~inside & np.isfinite(dist)]
    proj = proj[V.contains_rows(proj - xf)]
    pts = np.vstack([X[inside], proj]) if len(proj) else X[inside]
    nz = np.linalg.norm(pts - xf, axis=1) > 0
    return pts[nz]


def growth_verify(problem, x, d, kappa: float, V: rc.DirectionalNeighborhood, samples: int = 1000,
                  seed: int = 0) -> CheckReport:
    if kappa <= 0:
        raise ValueError("kappa must be positive")
    rng = np.random.default_rng(seed)
    xf = np.asarray([float(v) for v in x])
    pts = _harvest(problem, x, V, samples, rng)
    rep = CheckReport("growth", INCONCLUSIVE, tol={"kappa": kappa, "rho": V.rho, "delta": V.delta}, values={"seed": seed})
    if not len(pts):
        rep.notes.append("no point of C found in the neighborhood")
        return rep
    f0 = float(ec.evaluate(problem.f, list(x)))
    fx = problem.f_float(pts)
    need = f0 + kappa * np.sum((pts - xf) ** 2, axis=1)
    slack = fx - need
    tol = 1e-12 * (1 + abs(f0))
    rep.values["samples"] = int(len(pts))
    rep.values["min_slack"] = float(np.min(slack))
    bad = slack < -tol
    if bad.any():
        i = int(np.argmin(slack))
        rep.verdict = FAILS
        rep.witnesses.append({"x": pts[i].tolist(), "f": float(fx[i]), "bound": float(need[i])})
    else:
        rep.verdict = HOLDS
        rep.notes.append("holds at the sampled scale; not a proof")
    return rep


def falsify_directional_optimality(problem, x, d, V: rc.DirectionalNeighborhood, budget: int = 2000,
                                   seed: int = 0) -> CheckReport:
    """Search ``C ∩ (x + V)`` for a point with smaller objective."""
    rng = np.random.default_rng(seed)
    xf = np.asarray([float(v) for v in x])
    f0 = float(ec.evaluate(problem.f, list(x)))
    tol = 1e-12 * (1 + abs(f0))
    rep = CheckReport("falsify", INCONCLUSIVE, values={"seed": seed, "budget": budget})
    pts = [_harvest(problem, x, V, budget, rng)]
    # grid along the cap axis
    if V._u is not None:
        radii = V.delta * 2.0 ** -np.arange(0, 30)
        axis = xf + radii[:, None] * V._u
        dist, P = sl.distances(problem.C, axis, tol=0.0)
        P = P[np.isfinite(dist)]
        pts.append(P[V.contains_rows(P - xf)])
    pts = np.vstack([p for p in pts if len(p)]) if any(len(p) for p in pts) else np.zeros((0, len(xf)))
    pts = pts[np.linalg.norm(pts - xf, axis=1) > 0] if len(pts) else pts
    if not len(pts):
        rep.notes.append("C ∩ (x + V) contains only x: vacuously optimal in this direction")
        rep.values["no_descent_found"] = True
        return rep
    # projected descent from the best points
    fx = problem.f_float(pts)
    order = np.argsort(fx)[:10]
    cur = pts[order]
    for _ in range(20):
        g = problem.grad_f_float(cur)
        step = 0.1 * np.linalg.norm(cur - xf, axis=1, keepdims=True) / np.maximum(np.linalg.norm(g, axis=1, keepdims=True), 1e-300)
        trial = cur - step * g
        dist, P = sl.distances(problem.C, trial, tol=0.0)
        good = np.isfinite(dist) & V.contains_rows(P - xf) & (np.linalg.norm(P - xf, axis=1) > 0)
        better = good & (problem.f_float(np.where(good[:, None], P, cur)) < problem.f_float(cur))
        cur = np.where(better[:, None], P, cur)
    pts = np.vstack([pts, cur])
    fx = problem.f_float(pts)
    i = int(np.argmin(fx))
    rep.values["best_f"] = float(fx[i])
    rep.values["f0"] = f0
    if fx[i] < f0 - tol:
        rep.verdict = FAILS
        rep.witnesses.append({"x": pts[i].tolist(), "f": float(fx[i])})
        rep.notes.append("descent point found: x is not directionally optimal")
    else:
        rep.values["no_descent_found"] = True
        rep.notes.append("no descent point found; optimality is not certified by search")
    return rep


# --------------------------------------------------------------------------
# Ladder


@dataclass
class LadderReport:
    rungs: dict
    narrative: list = field(default_factory=list)

    @property
    def verdict(self) -> str:
        necessary = [self.rungs[k].verdict for k in ("fonc", "sonc_primal", "sonc_dual") if k in self.rungs]
        return _worst(*necessary) if necessary else INCONCLUSIVE


def ladder(problem, x, d, lam=None, mscq=None, V: Optional[rc.DirectionalNeighborhood] = None,
           mode: str = "theorem", seed: int = 0) -> LadderReport:
    x, d = px.fvec(x), px.fvec(d)
    rungs, story = {}, []
    cc = critical_cone(problem, x)
    rungs["critical_cone"] = CheckReport("critical_cone", HOLDS if cc.contains(d) else FAILS,
                                         {"cone": cc.describe(problem.vars)})
    rungs["fonc"] = fonc_check(problem, x, d, mscq=mscq)
    ok, _ = _guard(problem, x, d)
    if not ok:
        story.append("∇f(x)d ≠ 0: the second-order rungs are not applicable")
        return LadderReport(rungs, story)
    rungs["sonc_primal"] = sonc_primal(problem, x, d, mscq)
    lams = [px.fvec(lam)] if lam is not None else multiplier_set(problem, x, d).members()
    if not lams:
        story.append("no multiplier witness: dual rungs skipped")
        return LadderReport(rungs, story)
    duals = [sonc_dual(problem, x, d, l, mscq) for l in lams]
    best = next((r for r in duals if r.verdict == HOLDS), duals[0])
    rungs["sonc_dual"] = best
    if lam is None and len(lams) > 1:
        best.notes.append("the existential multiplier check ran over a finite enumeration")
    chosen = lams[duals.index(best)]
    rungs["sonc_hat"] = sonc_hat(problem, x, d, chosen, mscq=mscq, seed=seed)
    if any(v != 0 for v in d):
        rungs["ssoc"] = ssoc_sufficient(problem, x, d, chosen, mode, mscq)
        if rungs["ssoc"].verdict == HOLDS and V is not None:
            rungs["growth"] = growth_verify(problem, x, d, ETA / 4, V, 1000, seed)
    if V is not None:
        rungs["falsify"] = falsify_directional_optimality(problem, x, d, V, 2000, seed)
    return LadderReport(rungs, story)
