"""Closed sets: descriptions, membership, distance and sampling.

Every numeric routine works in a *local frame* around an exact base point
``b``: a point is written ``y = b + t*d + s*z`` and computations happen in the
``z`` coordinates. Level-set functions are re-expanded exactly around ``b`` and
polyhedral right-hand sides are formed before dividing by ``s``, so the tiny
scales used by the tangent oracles do not lose the information carried by
``z``.
"""

from __future__ import annotations

import itertools
import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np

from . import exprcore as ec
from . import polyexact as px
from .polyexact import DimensionMismatch, Polyhedron

MEMBER_TOL = 1e-9
ORACLE_TOL = 1e-7


class EmptyHarvest(RuntimeError):
    pass


class SetParseError(ValueError):
    pass


# --------------------------------------------------------------------------
# Set descriptions


class SetExpr:
    n: int
    convex: bool = False

    def text(self, names=None) -> str:
        raise NotImplementedError


class PolySet(SetExpr):
    convex = True

    def __init__(self, P: Polyhedron):
        self.P = P
        self.n = P.n

    def text(self, names=None):
        names = names or [f"y{i + 1}" for i in range(self.n)]
        rows = self.P.describe(names)
        return "polyhedron(" + "; ".join(rows) + ")"


class Ball(SetExpr):
    convex = True

    def __init__(self, center, radius):
        self.center = px.fvec(center)
        self.radius = Fraction(radius)
        if self.radius < 0:
            raise ValueError("ball radius must be nonnegative")
        self.n = len(self.center)

    def level_expr(self) -> ec.Expr:
        out = ec.Const(-self.radius * self.radius)
        for i, c in enumerate(self.center):
            out = ec.s_add(out, ec.s_pow(ec.s_sub(ec.Var(i), ec.Const(c)), Fraction(2)))
        return out

    def text(self, names=None):
        return f"ball({', '.join(map(px._num_text, self.center))}; {px._num_text(self.radius)})"


class LevelSet(SetExpr):
    """``{y : h(y) rel 0}`` with ``rel`` one of ``<=``, ``=``, ``>=``."""

    def __init__(self, h: ec.Expr, rel: str, n: int, convex: bool = False):
        if rel not in ("<=", "=", ">="):
            raise ValueError(f"bad relation {rel!r}")
        if ec.num_vars(h) > n:
            raise DimensionMismatch("expression uses more variables than the set dimension")
        self.h, self.rel, self.n, self.convex = h, rel, n, convex

    def as_le(self):
        """(function, is_equality) with the set written as ``phi <= 0`` or ``phi = 0``."""
        if self.rel == ">=":
            return ec.s_neg(self.h), False
        return self.h, self.rel == "="

    def text(self, names=None):
        names = names or [f"y{i + 1}" for i in range(self.n)]
        return f"levelset({ec.unparse(self.h, names)} {self.rel} 0)"


class Product(SetExpr):
    def __init__(self, a: SetExpr, b: SetExpr):
        self.a, self.b = a, b
        self.n = a.n + b.n
        self.convex = a.convex and b.convex

    def text(self, names=None):
        names = names or [f"y{i + 1}" for i in range(self.n)]
        return f"product({self.a.text(names[: self.a.n])}, {self.b.text(names[self.a.n:])})"


class Union(SetExpr):
    def __init__(self, a: SetExpr, b: SetExpr):
        if a.n != b.n:
            raise DimensionMismatch("union parts differ in dimension")
        self.a, self.b, self.n = a, b, a.n

    def text(self, names=None):
        return f"union({self.a.text(names)}, {self.b.text(names)})"


class Intersect(SetExpr):
    def __init__(self, a: SetExpr, b: SetExpr):
        if a.n != b.n:
            raise DimensionMismatch("intersect parts differ in dimension")
        self.a, self.b, self.n = a, b, a.n
        self.convex = a.convex and b.convex

    def text(self, names=None):
        return f"intersect({self.a.text(names)}, {self.b.text(names)})"


def halfspace_set(a, b) -> PolySet:
    return PolySet(Polyhedron([a], [b]))


# --------------------------------------------------------------------------
# Exact membership


def _check_dim(S: SetExpr, y):
    if len(y) != S.n:
        raise DimensionMismatch(f"point of length {len(y)} for a set in dimension {S.n}")


def member(S: SetExpr, y, tol: float = MEMBER_TOL) -> bool:
    """Membership; polyhedra and balls are decided exactly on rational input."""
    _check_dim(S, y)
    exact = all(ec.is_rational(v) for v in y)
    if isinstance(S, PolySet):
        if exact:
            return S.P.contains(y)
        yf = np.asarray(y, dtype=float)
        A = np.array([[float(c) for c in r] for r in S.P.A]).reshape(S.P.k, S.n)
        b = np.array([float(v) for v in S.P.b])
        return bool(np.all(A @ yf <= b + tol * (1 + np.abs(b))))
    if isinstance(S, Ball):
        if exact:
            return sum((Fraction(v) - c) ** 2 for v, c in zip(y, S.center)) <= S.radius ** 2
        dist = float(np.linalg.norm(np.asarray(y, float) - np.asarray(S.center, float)))
        return dist <= float(S.radius) + tol
    if isinstance(S, LevelSet):
        try:
            v = ec.evaluate(S.h, list(y))
        except ec.EvaluationError:
            return False
        if exact and ec.is_rational(v):
            return {"<=": v <= 0, "=": v == 0, ">=": v >= 0}[S.rel]
        v = float(v)
        if S.rel == ">=":
            v = -v
        if v <= 0 and S.rel != "=":
            return True
        # the violation must be small both absolutely and to first order
        return abs(v) <= tol * min(1.0, _grad_norm(S.h, y))
    if isinstance(S, Product):
        return member(S.a, list(y)[: S.a.n], tol) and member(S.b, list(y)[S.a.n:], tol)
    if isinstance(S, Union):
        return member(S.a, y, tol) or member(S.b, y, tol)
    if isinstance(S, Intersect):
        return member(S.a, y, tol) and member(S.b, y, tol)
    raise TypeError(f"unknown set {S!r}")


def _grad_norm(h, y) -> float:
    try:
        _, g, _ = ec.compile_derivatives(h, len(y))
        gn = float(np.linalg.norm(g(np.asarray([float(v) for v in y]))))
    except (ec.NonSmoothPoint, ZeroDivisionError):
        return 1.0
    return gn if np.isfinite(gn) else 1.0


# --------------------------------------------------------------------------
# Local frames


def _directions(n: int) -> np.ndarray:
    dirs = []
    eye = np.eye(n)
    for i in range(n):
        dirs += [eye[i], -eye[i]]
    if n <= 4:
        for i, j in itertools.combinations(range(n), 2):
            for a, b in ((1, 1), (1, -1), (-1, 1), (-1, -1)):
                dirs.append((a * eye[i] + b * eye[j]) / np.sqrt(2))
    if n == 2:
        for k in range(16):
            th = np.pi * (2 * k + 1) / 16
            dirs.append(np.array([np.cos(th), np.sin(th)]))
    if n > 2:
        rng = np.random.default_rng(12345)
        R = rng.standard_normal((8, n))
        dirs += list(R / np.linalg.norm(R, axis=1, keepdims=True))
    return np.array(dirs)


_LAMBDA_GRID = 4.0 ** np.arange(-23, 14)


def _as_rows(x, N):
    x = np.asarray(x, dtype=float)
    return np.broadcast_to(x, (N,)).copy() if x.ndim == 0 else x.reshape(N)


class Local:
    """A set seen through ``y = base + t*d + s*z``."""

    n: int
    polyhedral = False

    def member(self, Z, t, s, tol=ORACLE_TOL) -> np.ndarray:
        raise NotImplementedError

    def project(self, Z, t, s):
        """Upper-bound distance from each row of ``Z`` and a feasible witness."""
        raise NotImplementedError


class LocalPoly(Local):
    polyhedral = True

    def __init__(self, P: Polyhedron, base, d):
        self.n = P.n
        self.k = P.k
        self.A = np.array([[float(c) for c in r] for r in P.A], dtype=float).reshape(P.k, P.n)
        base = list(base)
        if all(ec.is_rational(v) for v in base):
            c0 = [v - px.dot(r, px.fvec(base)) for r, v in P.rows()]
            self.c0 = np.array([float(v) for v in c0])
        else:
            bf = np.asarray(base, dtype=float)
            self.c0 = np.array([float(v) for v in P.b]) - self.A @ bf
        self.ad = self.A @ np.asarray(d, dtype=float)
        self.norms = np.linalg.norm(self.A, axis=1) if self.k else np.zeros(0)
        self._subsets = None

    def rhs(self, t, s, N):
        t = _as_rows(t, N)[:, None]
        s = _as_rows(s, N)[:, None]
        with np.errstate(all="ignore"):
            return (self.c0[None, :] - t * self.ad[None, :]) / s

    def _violation(self, Z, r):
        if self.k == 0:
            return np.zeros(len(Z))
        scale = np.maximum(1.0, np.abs(r)) * 1e-12
        v = (Z @ self.A.T - r - scale) / self.norms
        return np.max(v, axis=1)

    def member(self, Z, t, s, tol=ORACLE_TOL):
        Z = np.atleast_2d(Z)
        r = self.rhs(t, s, len(Z))
        return self._violation(Z, r) <= tol

    def _subset_maps(self):
        if self._subsets is None:
            maps = []
            for size in range(0, min(self.n, self.k) + 1):
                for S in itertools.combinations(range(self.k), size):
                    if not S:
                        maps.append((S, None))
                        continue
                    AS = self.A[list(S)]
                    if np.linalg.matrix_rank(AS) < size:
                        continue
                    maps.append((S, AS.T @ np.linalg.inv(AS @ AS.T)))
                if len(maps) > 4000:
                    break
            self._subsets = maps
        return self._subsets

    def project(self, Z, t, s):
        Z = np.atleast_2d(np.asarray(Z, float))
        N = len(Z)
        r = self.rhs(t, s, N)
        best = np.full(N, np.inf)
        W = Z.copy()
        for S, M in self._subset_maps():
            if M is None:
                cand = Z
            else:
                idx = list(S)
                cand = Z - (Z @ self.A[idx].T - r[:, idx]) @ M.T
            ok = self._violation(cand, r) <= 1e-12 * (1 + np.linalg.norm(cand, axis=1))
            dist = np.linalg.norm(cand - Z, axis=1)
            better = ok & (dist < best)
            best[better] = dist[better]
            W[better] = cand[better]
        return best, W


class LocalLevel(Local):
    def __init__(self, h: ec.Expr, eq: bool, n: int, base, d):
        self.n, self.eq = n, eq
        base = list(base)
        if all(ec.is_rational(v) for v in base):
            hs = ec.shifted(h, base, n)
            self.f, self.g, _ = ec.compile_derivatives(hs, n)
            self.offset = np.zeros(n)
        else:
            self.f, self.g, _ = ec.compile_derivatives(h, n)
            self.offset = np.asarray(base, dtype=float)
        self.d = np.asarray(d, dtype=float)
        self.dirs = _directions(n)

    def _y(self, Z, t, s):
        Y = s[..., None] * Z
        if self.d.any():
            Y = Y + t[..., None] * self.d
        if self.offset.any():
            Y = Y + self.offset
        return Y

    def phi(self, Z, t, s):
        return self.f(self._y(Z, t, s))

    def grad(self, Z, t, s):
        """Gradient in z; the common factor ``s`` is dropped (directions only)."""
        return self.g(self._y(Z, t, s))

    def _dist_estimate(self, Z, t, s):
        v = self.phi(Z, t, s)
        gz = self.grad(Z, t, s)
        gn = np.linalg.norm(gz, axis=-1) * s
        with np.errstate(all="ignore"):
            est = np.abs(v) / gn
        if not self.eq:
            est = np.where(v <= 0, 0.0, est)
        est = np.where(v == 0, 0.0, est)
        return np.where(np.isfinite(est), est, np.inf)

    def member(self, Z, t, s, tol=ORACLE_TOL):
        Z = np.atleast_2d(Z)
        N = len(Z)
        return self._dist_estimate(Z, _as_rows(t, N), _as_rows(s, N)) <= tol

    def project(self, Z, t, s, chunk=512):
        Z = np.atleast_2d(np.asarray(Z, float))
        N = len(Z)
        t = _as_rows(t, N)
        s = _as_rows(s, N)
        dist = np.empty(N)
        W = np.empty_like(Z)
        for a in range(0, N, chunk):
            b = min(N, a + chunk)
            dist[a:b], W[a:b] = self._project_chunk(Z[a:b], t[a:b], s[a:b])
        return dist, W

    def _crossed(self, v0, v):
        if self.eq:
            return (np.sign(v) != np.sign(v0)) | (v == 0)
        return v <= 0

    def _project_chunk(self, Z, t, s):
        N, n = Z.shape
        v0 = self.phi(Z, t, s)
        inside = (v0 == 0) if self.eq else (v0 <= 0)
        g0 = self.grad(Z, t, s)
        gn = np.linalg.norm(g0, axis=1, keepdims=True)
        with np.errstate(all="ignore"):
            gdir = -np.sign(v0)[:, None] * g0 / gn
        gdir = np.where(np.isfinite(gdir), gdir, 0.0)
        U = np.concatenate([np.broadcast_to(self.dirs, (N,) + self.dirs.shape), gdir[:, None, :]], axis=1)
        M = U.shape[1]
        L = _LAMBDA_GRID
        Y0 = self._y(Z, t, s)
        sU = s[:, None, None] * U
        vals = self.f(Y0[:, None, None, :] + L[None, None, :, None] * sU[:, :, None, :])
        vals = np.where(np.isfinite(vals), vals, np.nan)
        v0m = np.broadcast_to(v0[:, None], (N, M))
        cross = self._crossed(v0m[..., None], vals) & ~np.isnan(vals)
        has = cross.any(axis=2)
        j = np.argmax(cross, axis=2)
        hi = L[j]
        lo = np.where(j > 0, L[np.maximum(j - 1, 0)], 0.0)
        hi = np.where(has, hi, np.inf)
        # only brackets that can still beat the best upper bound need bisection
        live = np.nonzero(has & (lo < hi.min(axis=1, keepdims=True)))
        if len(live[0]):
            a, b = lo[live], hi[live]
            y0, u, w0 = Y0[live[0]], sU[live], v0m[live]
            for _ in range(56):
                mid = 0.5 * (a + b)
                vm = self.f(y0 + mid[:, None] * u)
                c = self._crossed(w0, vm) & np.isfinite(vm)
                b = np.where(c, mid, b)
                a = np.where(c, a, mid)
            hi[live] = b
        self._valleys(Y0, sU, v0m, vals, cross, hi)
        k = np.argmin(hi, axis=1)
        dist = hi[np.arange(N), k]
        W = Z + np.where(np.isfinite(dist), dist, 0.0)[:, None] * U[np.arange(N), k]
        dist, W = self._polish(Z, W, dist, t, s)
        # the frame origin (the base point) is a candidate: singular points live there
        Z0 = -(t / s)[:, None] * self.d[None, :]
        if np.all(self.offset == 0) and self.f(np.zeros((1, n)))[0] == 0:
            d0 = np.linalg.norm(Z - Z0, axis=1)
            use = np.isfinite(d0) & (d0 < dist)
            dist = np.where(use, d0, dist)
            W = np.where(use[:, None], Z0, W)
        dist = np.where(inside, 0.0, dist)
        W = np.where(inside[:, None], Z, W)
        return dist, W

    def _valleys(self, Y0, sU, v0m, vals, cross, hi, iters=64):
        """Crossings hidden between grid points.

        Along a line the value can dip through zero inside a window narrower
        than the grid spacing (thin sets). The first grid-level local minimum
        before any detected crossing is refined by golden section; a dip to the
        other sign is then bisected. Updates ``hi`` in place.
        """
        sv = np.sign(v0m)[..., None] * vals
        ok = np.isfinite(sv)
        dip = np.zeros_like(cross)
        dip[..., 1:-1] = (ok[..., 1:-1] & ok[..., :-2] & ok[..., 2:]
                          & (sv[..., 1:-1] < sv[..., :-2]) & (sv[..., 1:-1] <= sv[..., 2:]) & (sv[..., 1:-1] > 0))
        first_cross = np.where(cross.any(axis=2), np.argmax(cross, axis=2), sv.shape[2])
        jd = np.argmax(dip, axis=2)
        best = hi.min(axis=1, keepdims=True)
        start = _LAMBDA_GRID[np.maximum(jd - 1, 0)]
        rows = np.nonzero(dip.any(axis=2) & (jd + 1 < first_cross) & (v0m != 0) & (start < best))
        if not len(rows[0]):
            return
        L = _LAMBDA_GRID
        j = jd[rows]
        sgn = np.sign(v0m[rows])
        y0 = Y0[rows[0]]
        u = sU[rows]
        f = lambda lam: sgn * self.f(y0 + lam[:, None] * u)
        a, b = L[j - 1], L[j + 1]
        gr = (np.sqrt(5) - 1) / 2
        c, d = b - gr * (b - a), a + gr * (b - a)
        fc, fd = f(c), f(d)
        for _ in range(iters):
            left = fc < fd
            b = np.where(left, d, b)
            a = np.where(left, a, c)
            c2 = b - gr * (b - a)
            d2 = a + gr * (b - a)
            c, d = np.where(left, c2, d), np.where(left, c, d2)
            fnew = f(np.where(left, c, d))
            fc, fd = np.where(left, fnew, fd), np.where(left, fc, fnew)
        m = np.where(fc < fd, c, d)
        fm = np.minimum(fc, fd)
        hit = fm <= 0
        if not hit.any():
            return
        lo, up = L[j - 1], m
        for _ in range(56):
            mid = 0.5 * (lo + up)
            c_ = f(mid) <= 0
            up = np.where(c_, mid, up)
            lo = np.where(c_, lo, mid)
        idx = tuple(r[hit] for r in rows)
        hi[idx] = np.minimum(hi[idx], up[hit])

    def _polish(self, Z, W, dist, t, s, iters=12):
        """Fixed-point iteration toward the KKT point; keep only improvements."""
        ok = np.isfinite(dist)
        if not ok.any():
            return dist, W
        P = W.copy()
        for _ in range(iters):
            g = self.grad(P, t, s)
            gn2 = np.sum(g * g, axis=1)
            good = (gn2 > 0) & np.isfinite(gn2)
            nh = np.where(good[:, None], g / np.sqrt(np.where(good, gn2, 1))[:, None], 0)
            r = P - Z
            tang = r - np.sum(r * nh, axis=1, keepdims=True) * nh
            P = P - 0.5 * tang
            for _ in range(3):
                v = self.phi(P, t, s)
                g = self.grad(P, t, s)
                gn2 = np.sum(g * g, axis=1) * s * s
                with np.errstate(all="ignore"):
                    step = (v / gn2 * s)[:, None] * g
                P = P - np.where(np.isfinite(step), step, 0)
        v = self.phi(P, t, s)
        feas = (np.abs(v) if self.eq else np.maximum(v, 0)) <= np.abs(self.phi(W, t, s)) + 0.0
        est = self._dist_estimate(P, t, s)
        nd = np.linalg.norm(P - Z, axis=1)
        better = ok & feas & (est <= 1e-13 * (1 + nd)) & (nd < dist)
        dist = np.where(better, nd, dist)
        W = np.where(better[:, None], P, W)
        return dist, W


class LocalProduct(Local):
    def __init__(self, a: Local, b: Local):
        self.a, self.b = a, b
        self.n = a.n + b.n
        self.polyhedral = a.polyhedral and b.polyhedral

    def member(self, Z, t, s, tol=ORACLE_TOL):
        Z = np.atleast_2d(Z)
        return self.a.member(Z[:, : self.a.n], t, s, tol) & self.b.member(Z[:, self.a.n:], t, s, tol)

    def project(self, Z, t, s):
        Z = np.atleast_2d(Z)
        da, Wa = self.a.project(Z[:, : self.a.n], t, s)
        db, Wb = self.b.project(Z[:, self.a.n:], t, s)
        return np.sqrt(da * da + db * db), np.concatenate([Wa, Wb], axis=1)


class LocalUnion(Local):
    def __init__(self, a: Local, b: Local):
        self.a, self.b, self.n = a, b, a.n
        self.polyhedral = a.polyhedral and b.polyhedral

    def member(self, Z, t, s, tol=ORACLE_TOL):
        return self.a.member(Z, t, s, tol) | self.b.member(Z, t, s, tol)

    def project(self, Z, t, s):
        da, Wa = self.a.project(Z, t, s)
        db, Wb = self.b.project(Z, t, s)
        pick = db < da
        return np.where(pick, db, da), np.where(pick[:, None], Wb, Wa)


class LocalIntersect(Local):
    def __init__(self, a: Local, b: Local):
        self.a, self.b, self.n = a, b, a.n

    def member(self, Z, t, s, tol=ORACLE_TOL):
        return self.a.member(Z, t, s, tol) & self.b.member(Z, t, s, tol)

    def project(self, Z, t, s, iters=60):
        Z = np.atleast_2d(np.asarray(Z, float))
        N = len(Z)
        best = np.full(N, np.inf)
        W = Z.copy()

        def consider(C):
            nonlocal best, W
            ok = self.member(C, t, s, 1e-10)
            dist = np.linalg.norm(C - Z, axis=1)
            better = ok & (dist < best)
            best = np.where(better, dist, best)
            W = np.where(better[:, None], C, W)

        _, Pa = self.a.project(Z, t, s)
        _, Pb = self.b.project(Z, t, s)
        consider(Z)
        consider(Pa)
        consider(Pb)
        P = Z.copy()
        t, s = _as_rows(t, N), _as_rows(s, N)
        live = np.arange(N)
        for _ in range(iters):
            tl_, sl_ = t[live], s[live]
            _, Q = self.a.project(P[live], tl_, sl_)
            _, Q = self.b.project(Q, tl_, sl_)
            moved = np.linalg.norm(Q - P[live], axis=1)
            P[live] = Q
            done = self.a.member(Q, tl_, sl_, 1e-12) | (moved <= 1e-15 * (1 + np.linalg.norm(Q, axis=1)))
            live = live[~done]
            if not len(live):
                break
        consider(P)
        return best, W


def local(S: SetExpr, base, d=None) -> Local:
    """Build the local frame of ``S`` around ``base`` with offset direction ``d``."""
    n = S.n
    base = list(base)
    if len(base) != n:
        raise DimensionMismatch(f"base point of length {len(base)} for a set in dimension {n}")
    d = np.zeros(n) if d is None else np.asarray([float(v) for v in d])
    if isinstance(S, PolySet):
        return LocalPoly(S.P, base, d)
    if isinstance(S, Ball):
        return LocalLevel(S.level_expr(), False, n, base, d)
    if isinstance(S, LevelSet):
        phi, eq = S.as_le()
        return LocalLevel(phi, eq, n, base, d)
    if isinstance(S, Product):
        na = S.a.n
        return LocalProduct(local(S.a, base[:na], d[:na]), local(S.b, base[na:], d[na:]))
    if isinstance(S, Union):
        return LocalUnion(local(S.a, base, d), local(S.b, base, d))
    if isinstance(S, Intersect):
        if isinstance(S.a, PolySet) and isinstance(S.b, PolySet):
            return LocalPoly(px.intersect(S.a.P, S.b.P), base, d)
        return LocalIntersect(local(S.a, base, d), local(S.b, base, d))
    raise TypeError(f"unknown set {S!r}")


# --------------------------------------------------------------------------
# Distance and sampling in original coordinates


@dataclass
class DistanceEstimate:
    value: float
    kind: str
    witness: Optional[np.ndarray]


def _is_exact_kind(S: SetExpr) -> bool:
    if isinstance(S, (PolySet, Ball)):
        return True
    if isinstance(S, (Product, Union)):
        return _is_exact_kind(S.a) and _is_exact_kind(S.b)
    if isinstance(S, Intersect):
        return isinstance(S.a, PolySet) and isinstance(S.b, PolySet)
    return False


def distance(S: SetExpr, y) -> DistanceEstimate:
    """``d(y, S)`` with the kind of guarantee attached."""
    _check_dim(S, y)
    if isinstance(S, Ball):
        yf = np.asarray([float(v) for v in y])
        c = np.asarray([float(v) for v in S.center])
        r = float(S.radius)
        nrm = float(np.linalg.norm(yf - c))
        if nrm <= r:
            return DistanceEstimate(0.0, "Exact", yf)
        return DistanceEstimate(nrm - r, "Exact", c + r * (yf - c) / nrm)
    if member(S, y, 0.0 if all(ec.is_rational(v) for v in y) else MEMBER_TOL) and _is_exact_kind(S):
        return DistanceEstimate(0.0, "Exact", np.asarray(y, dtype=float))
    L = local(S, [Fraction(0)] * S.n)
    Y = np.asarray([[float(v) for v in y]])
    dist, W = L.project(Y, 0.0, 1.0)
    kind = "Exact" if _is_exact_kind(S) else "UpperBound"
    value = float(dist[0])
    if member(S, [float(v) for v in y]):
        value = min(value, 0.0) if kind == "Exact" else 0.0
        return DistanceEstimate(value, kind, Y[0])
    return DistanceEstimate(value, kind, W[0] if np.isfinite(value) else None)


def distances(S: SetExpr, Y, tol: float = MEMBER_TOL):
    """Vectorized distance upper bounds from the rows of ``Y`` with witnesses.

    Rows passing the membership test at ``tol`` count as inside.
    """
    Y = np.atleast_2d(np.asarray(Y, dtype=float))
    if Y.shape[1] != S.n:
        raise DimensionMismatch(f"points of length {Y.shape[1]} for a set in dimension {S.n}")
    if isinstance(S, Ball):
        c = np.asarray([float(v) for v in S.center])
        r = float(S.radius)
        nrm = np.linalg.norm(Y - c, axis=1)
        out = np.maximum(nrm - r, 0.0)
        with np.errstate(all="ignore"):
            W = np.where((nrm > r)[:, None], c + r * (Y - c) / nrm[:, None], Y)
        return out, W
    L = local(S, [Fraction(0)] * S.n)
    N = len(Y)
    dist, W = L.project(Y, np.zeros(N), np.ones(N))
    inside = L.member(Y, np.zeros(N), np.ones(N), tol)
    return np.where(inside, 0.0, dist), np.where(inside[:, None], Y, W)


def _ball_points(rng, count, n):
    X = rng.standard_normal((count, n))
    X /= np.linalg.norm(X, axis=1, keepdims=True)
    return X * rng.random((count, 1)) ** (1.0 / n)


def sample_local(L: Local, count: int, rng, t=0.0, s=1.0, max_candidates: int = 100_000):
    """Points of the frame-``z`` set inside the unit ball."""
    out = []
    tried = 0
    batch = max(64, 4 * count)
    while sum(len(o) for o in out) < count and tried < max_candidates:
        Z = _ball_points(rng, batch, L.n)
        tried += batch
        inside = L.member(Z, t, s, MEMBER_TOL)
        keep = [Z[inside]]
        rest = Z[~inside]
        if len(rest):
            _, W = L.project(rest, t, s)
            ok = np.all(np.isfinite(W), axis=1) & (np.linalg.norm(W, axis=1) <= 1.0)
            W = W[ok]
            if len(W):
                W = W[L.member(W, t, s, MEMBER_TOL)]
            keep.append(W)
        out.extend(k for k in keep if len(k))
    if not out:
        raise EmptyHarvest(f"no point of the set found after {tried} candidates")
    pts = np.concatenate(out)[:count]
    if len(pts) < count:
        raise EmptyHarvest(f"only {len(pts)} of {count} points found after {tried} candidates")
    return pts


def sample_near(S: SetExpr, center, radius: float, count: int, seed: int, scaled: bool = False):
    """Deterministic samples of ``S`` within ``radius`` of ``center``.

    With ``scaled=True`` the offsets ``(p - center)/radius`` are returned, which
    keeps full precision for very small radii.
    """
    if radius <= 0 or count < 1:
        raise ValueError("radius must be positive and count at least 1")
    _check_dim(S, center)
    rng = np.random.default_rng(seed)
    L = local(S, list(center))
    Z = sample_local(L, count, rng, 0.0, float(radius))
    if scaled:
        return Z
    return np.asarray([float(v) for v in center]) + float(radius) * Z


# --------------------------------------------------------------------------
# Set grammar


def _split_top(text: str, sep: str):
    parts, depth, cur = [], 0, []
    for ch in text:
        if ch in "([":
            depth += 1
        elif ch in ")]":
            depth -= 1
        if ch == sep and depth == 0:
            parts.append("".join(cur))
            cur = []
        else:
            cur.append(ch)
    parts.append("".join(cur))
    return parts


_REL = re.compile(r"(<=|>=|=)")


def _linear_row(lhs: ec.Expr, n: int):
    poly = ec.to_polynomial(lhs, n)
    if poly is None or any(sum(k) > 1 for k in poly):
        raise SetParseError("polyhedron rows must be linear")
    a = [Fraction(0)] * n
    c = Fraction(0)
    for k, v in poly.items():
        if sum(k) == 0:
            c = v
        else:
            a[k.index(1)] = v
    return a, -c


def _number(text: str) -> Fraction:
    e = ec.parse(text, [])
    if not isinstance(e, ec.Const):
        raise SetParseError(f"not a rational number: {text!r}")
    return e.value


def parse_set(text: str, vars: Sequence[str]) -> SetExpr:
    """Parse the set grammar over the ordered variable names ``vars``."""
    text = text.strip()
    m = re.match(r"([a-z]+)\s*\((.*)\)\s*$", text, re.S)
    if not m:
        raise SetParseError(f"expected a set constructor: {text!r}")
    head, body = m.group(1), m.group(2)
    n = len(vars)
    if head == "polyhedron":
        A, b, eA, eb = [], [], [], []
        rows = [r for chunk in _split_top(body, ";") for r in _split_top(chunk, ",")]
        for row in rows:
            if not row.strip():
                continue
            parts = _REL.split(row)
            if len(parts) != 3:
                raise SetParseError(f"bad polyhedron row {row!r}")
            lhs = ec.s_sub(ec.parse(parts[0], vars), ec.parse(parts[2], vars))
            a, c = _linear_row(lhs, n)
            if parts[1] == "<=":
                A.append(a)
                b.append(c)
            elif parts[1] == ">=":
                A.append([-v for v in a])
                b.append(-c)
            else:
                eA.append(a)
                eb.append(c)
        return PolySet(Polyhedron(A, b, n, eA, eb))
    if head == "ball":
        pieces = _split_top(body, ";")
        if len(pieces) != 2:
            raise SetParseError("ball needs 'center; radius'")
        center = [_number(p) for p in pieces[0].strip().strip("()[]").split(",")]
        if len(center) != n:
            raise DimensionMismatch(f"ball center of length {len(center)} in dimension {n}")
        return Ball(center, _number(pieces[1]))
    if head == "levelset":
        parts = _REL.split(body)
        if len(parts) != 3 or parts[2].strip() != "0":
            raise SetParseError("levelset needs 'expr rel 0'")
        return LevelSet(ec.parse(parts[0], vars), parts[1], n)
    if head in ("product", "union", "intersect"):
        pieces = _split_top(body, ",")
        if len(pieces) != 2:
            raise SetParseError(f"{head} takes two sets")
        if head == "product":
            a = _parse_product_part(pieces[0], vars)
            b = parse_set(pieces[1], vars[a.n:])
            return Product(a, b)
        a, b = parse_set(pieces[0], vars), parse_set(pieces[1], vars)
        return Union(a, b) if head == "union" else Intersect(a, b)
    raise SetParseError(f"unknown set constructor {head!r}")


def _parse_product_part(text: str, vars):
    # the first block uses the leading variables it mentions
    for k in range(1, len(vars)):
        try:
            S = parse_set(text, vars[:k])
        except (ec.ParseError, DimensionMismatch, SetParseError):
            continue
        return S
    raise SetParseError(f"cannot place product block {text!r}")


# --------------------------------------------------------------------------
# Preimages


def _set_exprs(S: SetExpr):
    """Constraint list ``[(phi, rel)]`` describing an intersection-only set."""
    if isinstance(S, PolySet):
        out = []
        for r, v in S.P.rows():
            e = ec.Const(-v)
            for i, c in enumerate(r):
                if c:
                    e = ec.s_add(e, ec.s_mul(ec.Const(c), ec.Var(i)))
            out.append((e, "<="))
        return out
    if isinstance(S, Ball):
        return [(S.level_expr(), "<=")]
    if isinstance(S, LevelSet):
        return [(S.h, S.rel)]
    return None


def preimage(S: SetExpr, g: Sequence[ec.Expr], n: int) -> SetExpr:
    """``{x : g(x) ∈ S}`` as a set over ``n`` variables."""
    if len(g) != S.n:
        raise DimensionMismatch("map output dimension differs from the set")
    polys = [ec.to_polynomial(gi, n) for gi in g]
    if isinstance(S, PolySet) and all(p is not None and all(sum(k) <= 1 for k in p) for p in polys):
        M, c = [], []
        for p in polys:
            row = [Fraction(0)] * n
            const = Fraction(0)
            for k, v in p.items():
                if sum(k) == 0:
                    const = v
                else:
                    row[k.index(1)] = v
            M.append(row)
            c.append(const)
        return PolySet(px.preimage(S.P, M, c))
    if isinstance(S, Product):
        return Intersect(preimage(S.a, g[: S.a.n], n), preimage(S.b, g[S.a.n:], n))
    if isinstance(S, Union):
        return Union(preimage(S.a, g, n), preimage(S.b, g, n))
    if isinstance(S, Intersect):
        return Intersect(preimage(S.a, g, n), preimage(S.b, g, n))
    cons = _set_exprs(S)
    out = None
    for e, rel in cons:
        piece = LevelSet(ec.substitute(e, list(g)), rel, n)
        out = piece if out is None else Intersect(out, piece)
    if out is None:
        return PolySet(Polyhedron.whole_space(n))
    return out
