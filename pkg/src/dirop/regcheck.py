"""Constraint qualifications: directional MSCQ by sampling, DirRCQ and nondegeneracy exactly."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

import numpy as np

from . import normallab as nl
from . import polyexact as px
from . import setlib as sl
from .polyexact import Polyhedron

MSCQ_TOL = 1e-12
REFINE_STEPS = 16


class DegenerateSampling(RuntimeError):
    pass


class ExactPathUnavailable(RuntimeError):
    pass


class InfeasiblePoint(ValueError):
    pass


@dataclass
class DirectionalNeighborhood:
    """``V_{ρ,δ}(d)``: a cap of angular half-width ``rho`` and radius ``delta``."""

    d: tuple
    rho: float
    delta: float

    def __post_init__(self):
        if self.rho <= 0 or self.delta <= 0:
            raise ValueError("rho and delta must be positive")
        self._d = np.asarray([float(v) for v in self.d])
        nd = np.linalg.norm(self._d)
        self._u = self._d / nd if nd > 0 else None

    @property
    def n(self) -> int:
        return len(self._d)

    def contains(self, w) -> bool:
        w = np.asarray(w, float)
        nw = np.linalg.norm(w)
        if nw > self.delta:
            return False
        if nw == 0 or self._u is None:
            return True
        return bool(np.linalg.norm(w / nw - self._u) <= self.rho)

    def contains_rows(self, W) -> np.ndarray:
        W = np.atleast_2d(W)
        nw = np.linalg.norm(W, axis=1)
        ok = nw <= self.delta * (1 + 1e-12)
        if self._u is None:
            return ok
        with np.errstate(all="ignore"):
            cap = np.linalg.norm(W / nw[:, None] - self._u, axis=1) <= self.rho
        return ok & (cap | (nw == 0))

    def sample(self, count: int, rng) -> np.ndarray:
        """Radii log-uniform in ``[delta*1e-4, delta]``, directions uniform in the cap."""
        n = self.n
        out = []
        while sum(len(o) for o in out) < count:
            k = 4 * count
            if self._u is None:
                E = rng.standard_normal((k, n))
            else:
                B = rng.standard_normal((k, n))
                B /= np.linalg.norm(B, axis=1, keepdims=True)
                B *= rng.random((k, 1)) ** (1.0 / n)
                E = self._u + self.rho * B
            ne = np.linalg.norm(E, axis=1)
            E, ne = E[ne > 0], ne[ne > 0]
            E = E / ne[:, None]
            if self._u is not None:
                E = E[np.linalg.norm(E - self._u, axis=1) <= self.rho]
            r = self.delta * 10.0 ** rng.uniform(-4, 0, len(E))
            out.append(E * r[:, None])
        return np.concatenate(out)[:count]


@dataclass
class CQReport:
    kind: str  # MSCQ | DirRCQ | Nondegeneracy
    verdict: str  # consistent | holds | fails | inconclusive
    kappa: Optional[float] = None
    witness: Optional[tuple] = None
    values: dict = field(default_factory=dict)
    notes: list = field(default_factory=list)


def mscq_estimate(problem, x, d, V: DirectionalNeighborhood, samples: int = 1000, seed: int = 0) -> CQReport:
    """Sample-based lower estimate of the directional subregularity modulus.

    Ratios ``d(x, C) / d(g(x), K)`` are taken at sampled ``x`` in ``x + V``,
    plus points walked from each infeasible sample toward its nearest point
    of ``C`` (where the supremum is usually attained).
    """
    xf = np.asarray([float(v) for v in x])
    y = problem.g_float(xf[None, :])[0]
    if sl.distances(problem.K, y[None, :])[0][0] > 1e-9:
        raise InfeasiblePoint("g(x) is not in K")
    rng = np.random.default_rng(seed)
    W = V.sample(samples, rng)
    X = xf + W
    dC, P = sl.distances(problem.C, X)
    out = dC > MSCQ_TOL
    taus = 2.0 ** -np.arange(1, REFINE_STEPS + 1)
    extra = (P[out][:, None, :] + taus[None, :, None] * (X[out] - P[out])[:, None, :]).reshape(-1, len(xf))
    extra = extra[V.contains_rows(extra - xf)]
    if len(extra):
        X = np.vstack([X, extra])
        dC = np.concatenate([dC, sl.distances(problem.C, extra)[0]])
    dK = sl.distances(problem.K, problem.g_float(X))[0]
    use = (dK > MSCQ_TOL) & np.isfinite(dC) & np.isfinite(dK)
    if use.sum() < 10:
        raise DegenerateSampling(f"only {int(use.sum())} samples with g(x) outside K")
    ratio = dC[use] / dK[use]
    radius = np.linalg.norm(X[use] - xf, axis=1)
    kappa = float(np.max(ratio))
    bands = []
    for k in range(4):
        hi, lo = V.delta * 10.0 ** -k, V.delta * 10.0 ** -(k + 1)
        sel = (radius <= hi) & (radius > lo)
        if sel.any():
            bands.append(float(np.max(ratio[sel])))
    rep = CQReport("MSCQ", "consistent", kappa=kappa,
                   values={"bands": bands, "usable": int(use.sum()), "rho": V.rho, "delta": V.delta},
                   notes=["the modulus estimate is a sample lower bound, never an upper bound",
                          f"seed {seed}, {samples} base samples, radii log-uniform in [delta*1e-4, delta]"])
    if len(bands) >= 3 and all(b2 > b1 for b1, b2 in zip(bands, bands[1:])) and bands[-1] > 2 * bands[0]:
        rep.verdict = "inconclusive"
        rep.notes.append("ratios grow as the radius shrinks: no finite modulus is suggested")
    return rep


def _normal_for(problem, x, d):
    J, _, y = problem.jacobian_data(x, d)
    Jd = px.matvec(J, px.fvec(d))
    N = problem.normal_K(y, Jd)
    return J, N


def _jt(J, lam):
    # J^T lam with J stored by rows
    n = len(J[0]) if J else 0
    return tuple(sum((J[i][k] * lam[i] for i in range(len(J))), Fraction(0)) for k in range(n))


def dirrcq_check(problem, x, d) -> CQReport:
    """``J^T λ = 0, λ ∈ N^c_K(g(x); Jd)`` forces ``λ = 0``, decided by 2m LPs."""
    J, N = _normal_for(problem, x, d)
    cone = nl.clarke_directional_normal(N)
    if cone is None:
        return CQReport("DirRCQ", "inconclusive", notes=["directional Clarke normal cone has no exact representation"])
    m = cone.n
    if N.rep == "Empty" or (cone.n and px.equal(cone, px.PolyCone.origin(m))):
        return CQReport("DirRCQ", "holds", notes=["the directional normal cone is {0}: holds vacuously"])
    JT = px.transpose(J) if J else []
    box = [[1 if i == j else 0 for j in range(m)] for i in range(m)]
    box += [[-v for v in r] for r in box]
    P = Polyhedron(list(cone.A) + box, list(cone.b) + [1] * (2 * m), m, eq_A=JT, eq_b=[0] * len(JT))
    for j in range(m):
        for sgn in (1, -1):
            c = [0] * m
            c[j] = sgn
            res = px.lp_solve(c, P, "max")
            if res.status == "Optimal" and res.value > 0:
                return CQReport("DirRCQ", "fails", witness=tuple(res.x),
                                notes=["nonzero Clarke normal annihilated by the Jacobian transpose"])
    return CQReport("DirRCQ", "holds")


def nondegeneracy_check(problem, x, d) -> CQReport:
    """``span N_K(g(x); Jd) ∩ ker J^T = {0}`` by an exact rank computation."""
    J, N = _normal_for(problem, x, d)
    if N.rep == "Empty":
        return CQReport("Nondegeneracy", "holds", notes=["the directional normal cone is empty"])
    if N.rep != "ExactCone":
        return CQReport("Nondegeneracy", "inconclusive", notes=["no exact spanning set for the directional normal cone"])
    basis = N.span_basis()
    if not basis:
        return CQReport("Nondegeneracy", "holds", values={"span_dim": 0})
    cols = [_jt(J, b) for b in basis]
    M = px.transpose([list(c) for c in cols])
    r = px.rank(M) if M and M[0] else 0
    vals = {"span_dim": len(basis), "rank": r}
    if r == len(basis):
        return CQReport("Nondegeneracy", "holds", values=vals)
    c = px.nullspace(M, len(basis))[0]
    lam = tuple(sum((c[i] * basis[i][k] for i in range(len(basis))), Fraction(0)) for k in range(len(basis[0])))
    return CQReport("Nondegeneracy", "fails", witness=lam, values=vals)
