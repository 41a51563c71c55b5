"""Normal cones, support functions and the lower generalized support function."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

import numpy as np
from scipy.optimize import nnls

from . import exprcore as ec
from . import polyexact as px
from . import setlib as sl
from . import tangentlab as tl
from .polyexact import INF, Polyhedron, PolyCone

NORMAL_TOL = 1e-7
SIGMA_HAT_EPS = (1e-2, 1e-3, 1e-4)
SIGMA_HAT_SAMPLES = 64


@dataclass
class ExtReal:
    """An extended real with the strength of the claim attached.

    ``kind`` is ``Exact`` (rational or infinite, decided exactly),
    ``Evidence`` (decided from oracle witnesses), ``LowerBound`` or
    ``Bracket`` (with ``low``/``high``).
    """

    value: object
    kind: str = "Exact"
    low: object = None
    high: object = None
    note: str = ""

    @property
    def exact(self) -> bool:
        return self.kind == "Exact"

    def __float__(self):
        return float(self.value)

    def text(self) -> str:
        return ext_text(self.value)


def ext_text(v) -> str:
    if isinstance(v, float) and math.isinf(v):
        return "inf" if v > 0 else "-inf"
    if isinstance(v, Fraction):
        return str(v.numerator) if v.denominator == 1 else f"{v.numerator}/{v.denominator}"
    if isinstance(v, int):
        return str(v)
    return repr(float(v))


# --------------------------------------------------------------------------
# Normal objects


@dataclass
class NormalObject:
    rep: str  # ExactCone | Oracle | Empty
    n: int
    cone: Optional[PolyCone] = None
    generators: list = field(default_factory=list)
    lineality: list = field(default_factory=list)
    oracle: Optional["NormalOracle"] = None
    notes: list = field(default_factory=list)

    @property
    def exact(self) -> bool:
        return self.rep in ("ExactCone", "Empty")

    def contains(self, v) -> Optional[bool]:
        if self.rep == "Empty":
            return False
        if self.rep == "ExactCone":
            if all(ec.is_rational(c) for c in v):
                return self.cone.contains(px.fvec(v))
            return sl.member(sl.PolySet(self.cone), [float(c) for c in v])
        return self.oracle.member(np.asarray([float(c) for c in v]))

    def span_basis(self) -> list:
        return px.span_basis(list(self.generators) + list(self.lineality), self.n)

    def describe(self, names=None) -> str:
        if self.rep == "Empty":
            return "{}"
        if self.rep == "ExactCone":
            rows = self.cone.describe(names)
            return "{" + ", ".join(rows) + "}" if rows else f"R^{self.n}"
        return "oracle"


def _exact_normal_from_cons(cons, d, n) -> NormalObject:
    gens, lin = [], []
    for c in cons:
        if px.dot(c.grad, d) != 0:
            continue
        (lin if c.eq else gens).append(tuple(c.grad))
    cone = px.cone_from_generators(gens, n, lin)
    return NormalObject("ExactCone", n, cone, gens, lin)


def directional_limiting_normal(S: sl.SetExpr, x, d=None, schedule: tl.SeqSchedule = None) -> NormalObject:
    """``N_S(x;d)``; ``d = None`` or zero gives the limiting normal cone."""
    x = px.fvec(x)
    d = px.fvec(d) if d is not None else tuple(Fraction(0) for _ in range(S.n))
    if not sl.member(S, list(x)):
        raise tl.PointNotInSet("base point is not in the set")
    branches = [B for B in tl._branches(S) if tl._contains_point(B, x)]
    if len(branches) == 1:
        cons = tl.active_system(branches[0], x)
        if cons is not None:
            try:
                tl._check_tangent(cons, d)
            except tl.DirectionNotTangent:
                return NormalObject("Empty", S.n, notes=["direction is not tangent"])
            return _exact_normal_from_cons(cons, d, S.n)
    T = tl.tangent_cone(S, x)
    if T.exact:
        if not T.contains(d):
            return NormalObject("Empty", S.n, notes=["direction is not tangent"])
    elif any(v != 0 for v in d) and T.contains(d) is False:
        return NormalObject("Empty", S.n, notes=["oracle: direction is not tangent"])
    return NormalObject("Oracle", S.n, oracle=NormalOracle(S, x, d))


def normal_cone(S: sl.SetExpr, x) -> NormalObject:
    return directional_limiting_normal(S, x, None)


def clarke_directional_normal(N: NormalObject) -> Optional[PolyCone]:
    """``cl co N``; exact objects are already convex cones here."""
    if N.rep == "Empty":
        return PolyCone.origin(N.n)
    if N.rep == "ExactCone":
        return N.cone
    return None


# --------------------------------------------------------------------------
# Oracles


def _frechet_generators(L: sl.Local, z, t, s, tol=1e-9):
    """Generators (cone part, line part) of the Fréchet normal cone at a regular
    point of the frame set, or ``None`` when the point is not regular."""
    Z = z[None, :]
    T = np.array([t])
    Sx = np.array([s])
    if isinstance(L, sl.LocalPoly):
        if L.k == 0:
            return [], []
        r = L.rhs(T, Sx, 1)[0]
        act = np.abs(Z[0] @ L.A.T - r) <= tol * np.maximum(1, np.abs(r)) * (1 + np.linalg.norm(z))
        return [L.A[i] for i in np.nonzero(act)[0]], []
    if isinstance(L, sl.LocalLevel):
        v = L.phi(Z, T, Sx)[0]
        g = L.grad(Z, T, Sx)[0]
        gn = np.linalg.norm(g)
        if not np.isfinite(gn) or gn == 0:
            return None
        active = L.eq or L._dist_estimate(Z, T, Sx)[0] <= tol and v >= -tol * gn * s
        if not active:
            return [], []
        g = g / gn
        return ([], [g]) if L.eq else ([g], [])
    if isinstance(L, sl.LocalIntersect):
        a = _frechet_generators(L.a, z, t, s, tol)
        b = _frechet_generators(L.b, z, t, s, tol)
        if a is None or b is None:
            return None
        return a[0] + b[0], a[1] + b[1]
    if isinstance(L, sl.LocalProduct):
        na = L.a.n
        a = _frechet_generators(L.a, z[:na], t, s, tol)
        b = _frechet_generators(L.b, z[na:], t, s, tol)
        if a is None or b is None:
            return None
        pad = lambda v, left: np.concatenate([v, np.zeros(L.b.n)]) if left else np.concatenate([np.zeros(na), v])
        return ([pad(v, True) for v in a[0]] + [pad(v, False) for v in b[0]],
                [pad(v, True) for v in a[1]] + [pad(v, False) for v in b[1]])
    if isinstance(L, sl.LocalUnion):
        ina = bool(L.a.member(Z, T, Sx, tol)[0])
        inb = bool(L.b.member(Z, T, Sx, tol)[0])
        if ina and not inb:
            return _frechet_generators(L.a, z, t, s, tol)
        if inb and not ina:
            return _frechet_generators(L.b, z, t, s, tol)
        return None
    return None


def cone_residual(v, gens, lines) -> float:
    """``d(v, cone(gens) + span(lines))``."""
    v = np.asarray(v, float)
    cols = list(gens) + list(lines) + [-np.asarray(l) for l in lines]
    if not cols:
        return float(np.linalg.norm(v))
    A = np.array(cols, dtype=float).T
    _, res = nnls(A, v)
    return float(res)


class NormalOracle:
    """Evidence for ``v ∈ N_S(x;d)`` from Fréchet normals at nearby points.

    Points ``x + t*z`` are obtained by projecting ``d`` (and slight
    perturbations) onto the rescaled set; at each such point the Fréchet normal
    cone is read off the active pieces.
    """

    def __init__(self, S, x, d, ts=None, tol: float = NORMAL_TOL):
        self.S, self.n, self.tol = S, S.n, tol
        self.x = px.fvec(x)
        self.d = np.asarray([float(v) for v in d])
        self.L = sl.local(S, list(self.x))
        self.ts = np.asarray(ts if ts is not None else 10.0 ** -np.arange(4, 24, 2))
        self._points = None

    def _normal_data(self):
        if self._points is not None:
            return self._points
        dn = np.linalg.norm(self.d)
        rng = np.random.default_rng(7)
        if dn == 0:
            bases = rng.standard_normal((8, self.n))
            bases /= np.linalg.norm(bases, axis=1, keepdims=True)
        else:
            pert = rng.standard_normal((4, self.n)) * 1e-3 * dn
            bases = np.vstack([self.d[None, :], self.d[None, :] + pert])
        data = []
        for t in self.ts:
            row = []
            dist, W = self.L.project(bases, np.zeros(len(bases)), np.full(len(bases), t))
            for z, dz in zip(W, dist):
                if not np.isfinite(dz):
                    continue
                if dn == 0 and np.linalg.norm(z) > 1:
                    continue
                gl = _frechet_generators(self.L, z, 0.0, t)
                if gl is not None:
                    row.append(gl)
            data.append(row)
        self._points = data
        return data

    def residuals(self, v) -> np.ndarray:
        v = np.asarray(v, float)
        out = []
        for row in self._normal_data():
            vals = [cone_residual(v, g, l) for g, l in row]
            out.append(min(vals) if vals else np.inf)
        return np.asarray(out)

    def member(self, v) -> Optional[bool]:
        v = np.asarray(v, float)
        vn = float(np.linalg.norm(v))
        if vn == 0:
            return True
        res = self.residuals(v) / vn
        tail = res[-4:]
        if np.min(tail) <= self.tol:
            return True
        if np.all(tail > 10 * self.tol) and tail[-1] >= 0.5 * tail[0]:
            return False
        return None


def frechet_normal_member(S: sl.SetExpr, x, v, tol: float = NORMAL_TOL, seed: int = 0) -> Optional[bool]:
    x = px.fvec(x)
    if not sl.member(S, list(x)):
        raise tl.PointNotInSet("base point is not in the set")
    T = tl.tangent_cone(S, x)
    if T.exact:
        vq = px.fvec(v) if all(ec.is_rational(c) for c in v) else px.fvec([Fraction(float(c)) for c in v])
        return all(px.cone_polar_member(vq, px.as_cone(P)) for P in T.polys)
    v = np.asarray([float(c) for c in v])
    vn = float(np.linalg.norm(v))
    if vn == 0:
        return True
    maxima = []
    for k, r in enumerate(10.0 ** -np.arange(2, 22, 2)):
        try:
            Z = sl.sample_near(S, list(x), r, 64, seed + k, scaled=True)
        except sl.EmptyHarvest:
            continue
        nz = np.linalg.norm(Z, axis=1)
        Z, nz = Z[nz > 1e-12], nz[nz > 1e-12]
        if len(Z):
            maxima.append(float(np.max(Z @ v / nz)) / vn)
    if not maxima:
        return None
    if maxima[-1] <= tol:
        return True
    if all(m >= 10 * tol for m in maxima[-3:]):
        return False
    return None


# --------------------------------------------------------------------------
# Support functions


def support(obj, lam) -> ExtReal:
    """``σ_S(λ)``; ``obj`` is a Polyhedron, a TangentObject, or ``None`` for the empty set."""
    if obj is None:
        return ExtReal(-INF)
    if isinstance(obj, Polyhedron):
        return ExtReal(px.support(obj, px.fvec(lam)))
    if isinstance(obj, tl.TangentObject):
        if obj.exact:
            vals = [px.support(P, px.fvec(lam)) for P in obj.polys]
            return ExtReal(max(vals, key=lambda v: float(v)) if vals else -INF)
        if obj.rep == "ProvablyEmptyAtScale":
            return ExtReal(-INF, "Evidence", note="set empty at scan scale")
        W = obj.witnesses()
        lamf = np.asarray([float(c) for c in lam])
        if not W:
            return ExtReal(-INF, "Evidence", note="no witnesses found")
        vals = np.asarray(W, float) @ lamf
        if obj.is_cone:
            if np.max(vals) <= 1e-12:
                return ExtReal(Fraction(0), "Evidence", note="λ is polar to every witness")
            return ExtReal(INF, "Evidence", note="a witness has positive inner product")
        return ExtReal(float(np.max(vals)), "LowerBound", low=float(np.max(vals)), high=INF)
    raise TypeError(f"cannot take the support function of {obj!r}")


def _argmax_face(P: Polyhedron, lam, value) -> Polyhedron:
    return Polyhedron(P.A, P.b, P.n, eq_A=[lam], eq_b=[value])


def lower_generalized_support(S, lam, A: Optional[Polyhedron] = None, seed: int = 0) -> ExtReal:
    """``σ̂_{S,A}(λ)``.

    Exact convex sets: the inner infimum runs over the argmax face, so the
    value is σ when the face meets ``A`` and +inf otherwise. Oracle cones: the
    only candidate value is 0 (normals at cone points are orthogonal to them).
    """
    lam = px.fvec(lam)
    if S is None:
        return ExtReal(-INF)
    if isinstance(S, tl.TangentObject) and S.rep == "ProvablyEmptyAtScale":
        return ExtReal(-INF, "Evidence", note="set empty at scan scale")
    polys = None
    if isinstance(S, Polyhedron):
        polys = [S]
    elif isinstance(S, tl.TangentObject) and S.exact:
        polys = S.polys
    if polys is not None:
        polys = [P for P in polys if not px.is_empty(P)]
        if not polys:
            return ExtReal(-INF)
        if len(polys) > 1:
            return ExtReal(None, "Bracket", low=-INF, high=INF, note="union of pieces: not convex")
        P = polys[0]
        sig = px.support(P, lam)
        if sig == INF:
            return ExtReal(INF, note="no normal preimage near λ")
        if A is None:
            return ExtReal(sig)
        F = _argmax_face(P, lam, sig)
        if px.is_empty(px.intersect(F, A)):
            return ExtReal(INF, note="argmax face misses the restriction set")
        return ExtReal(sig)
    if isinstance(S, tl.TangentObject):
        W = S.witnesses()
        lamf = np.asarray([float(c) for c in lam])
        zero_ok = A is None or A.contains([0] * A.n)
        if S.is_cone:
            if W and np.max(np.asarray(W, float) @ lamf) <= 1e-12 and zero_ok:
                return ExtReal(Fraction(0), "Evidence", note="λ is polar to every witness and 0 is admissible")
            return ExtReal(None, "Bracket", low=Fraction(0), high=INF, note="no admissible normal preimage found")
        return _sigma_hat_sampled(W, lamf, A, seed)
    raise TypeError(f"cannot evaluate σ̂ on {S!r}")


def _sigma_hat_sampled(W, lam, A, seed) -> ExtReal:
    """Two-level estimator over witness points (oracle sets that are not cones)."""
    if not W:
        return ExtReal(None, "Bracket", low=-INF, high=INF, note="no witnesses")
    W = np.asarray(W, float)
    if A is not None:
        keep = [i for i, w in enumerate(W) if sl.member(sl.PolySet(A), list(w))]
        W = W[keep]
    if not len(W):
        return ExtReal(INF, "Evidence", note="no witness in the restriction set")
    rng = np.random.default_rng(seed)
    levels = []
    for eps in SIGMA_HAT_EPS:
        vals = []
        for _ in range(SIGMA_HAT_SAMPLES):
            lp = lam + eps * rng.standard_normal(len(lam))
            for u in W:
                diff = W - u
                nd = np.linalg.norm(diff, axis=1)
                near = (nd > 0) & (nd <= 2.5)
                if not near.any() or np.max(diff[near] @ lp / nd[near]) <= 1e-9:
                    vals.append(float(u @ lp))
        levels.append(min(vals) if vals else INF)
    lo, hi = min(levels), max(levels)
    return ExtReal(levels[-1], "Bracket", low=lo, high=hi,
                   note=f"ε schedule {SIGMA_HAT_EPS}, {SIGMA_HAT_SAMPLES} samples per level")
