"""Command line front end: problem files, checks and the example corpus."""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import sys
from fractions import Fraction
from importlib import resources
from pathlib import Path

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from . import __version__
from . import exprcore as ec
from . import normallab as nl
from . import optcond as oc
from . import polyexact as px
from . import regcheck as rc
from . import setlib as sl
from . import tangentlab as tl

EXIT = {"holds": 0, "vacuous": 0, "consistent": 0, "fails": 1, "inconclusive": 2, "not_applicable": 2}
EXIT_ERROR = 3

EXAMPLES = ("cusp", "quadrant-linear", "quadrant-quadratic", "disk", "cusp-graph", "parabola", "variant")


class ProblemFileError(ValueError):
    pass


# --------------------------------------------------------------------------
# Problem files


def _num(v, where: str) -> Fraction:
    if isinstance(v, bool):
        raise ProblemFileError(f"{where}: expected a number")
    if isinstance(v, int):
        return Fraction(v)
    if isinstance(v, float):
        return Fraction(str(v))
    try:
        e = ec.parse(str(v), [])
    except ec.ParseError as err:
        raise ProblemFileError(f"{where}: {err}") from None
    if not isinstance(e, ec.Const):
        raise ProblemFileError(f"{where}: not a rational number: {v!r}")
    return e.value


def _vec(v, where: str) -> tuple:
    if isinstance(v, str):
        v = [p for p in v.split(",") if p.strip()]
    if not isinstance(v, list):
        raise ProblemFileError(f"{where}: expected a list")
    return tuple(_num(x, f"{where}[{i}]") for i, x in enumerate(v))


class ProblemFile:
    """A parsed problem file; ``problem`` is None for set-only fixtures."""

    def __init__(self, data: dict, raw: bytes, name: str = "<input>"):
        self.data, self.raw, self.name = data, raw, name
        q = data.get("query", {})
        self.problem = None
        self.set = None
        where = "file"
        try:
            if "problem" in data:
                p, K = data["problem"], data.get("K")
                if K is None:
                    raise ProblemFileError("[K] section missing")
                vars_, kvars = list(p["vars"]), list(K["vars"])
                where = "problem.f"
                f = ec.parse(p["f"], vars_)
                g = []
                for i, gi in enumerate(p["g"]):
                    where = f"problem.g[{i}]"
                    g.append(ec.parse(gi, vars_))
                where = "K.set"
                Kset = sl.parse_set(K["set"], kvars)
                self.problem = oc.Problem(f, g, Kset, vars_, kvars)
                self.vars, self.kvars = vars_, kvars
            elif "set" in data:
                s = data["set"]
                self.vars = list(s["vars"])
                where = "set.set"
                self.set = sl.parse_set(s["set"], self.vars)
            else:
                raise ProblemFileError("need a [problem] or a [set] section")
        except KeyError as err:
            raise ProblemFileError(f"missing key {err}") from None
        except ec.ParseError as err:
            raise ProblemFileError(f"{where}: parse error: {err}") from None
        except sl.SetParseError as err:
            raise ProblemFileError(f"{where}: set parse error: {err}") from None
        n = len(self.vars)
        self.point = _vec(q.get("point", [0] * n), "query.point")
        self.direction = _vec(q.get("direction", [0] * n), "query.direction")
        if len(self.point) != n or len(self.direction) != n:
            raise ProblemFileError(f"query point and direction must have {n} entries")
        self.lam = _vec(q["lambda"], "query.lambda") if "lambda" in q else None
        self.tol = float(q.get("tol", 1e-7))
        self.rho = float(_num(q.get("rho", "1/2"), "query.rho"))
        self.delta = float(_num(q.get("delta", "1/10"), "query.delta"))
        self.seed = int(q.get("seed", 0))
        self.kappa = float(_num(q.get("kappa", "1/10"), "query.kappa"))
        self.mode = q.get("mode", "theorem")
        self.u = _vec(q["u"], "query.u") if "u" in q else None
        self.assert_mscq = float(q["assert_mscq"]) if "assert_mscq" in q else None
        self.expected = data.get("expected", {})
        self.validation = {}
        if self.problem is not None:
            if not self.problem.feasible(self.point):
                raise ProblemFileError("the query point is infeasible: g(x) is not in K")
            self._declare(data.get("declared", {}))

    def _declare(self, dec: dict):
        if not dec:
            return
        P = self.problem
        out = {}
        if "t2_K" in dec:
            out["t2_K"] = "empty" if dec["t2_K"] == "empty" else self._poly(dec["t2_K"], self.kvars)
        if "tpp_K" in dec:
            out["tpp_K"] = self._poly(dec["tpp_K"], self.kvars)
        if "normal_K" in dec:
            out["normal_K"] = [_vec(v, "declared.normal_K") for v in dec["normal_K"]]
        J, _, y = P.jacobian_data(self.point, self.direction)
        P.declared = out
        P.declared_at = (y, px.matvec(J, self.direction))
        self.validation = P.validate_declared()

    @staticmethod
    def _poly(text, names) -> px.Polyhedron:
        S = sl.parse_set(text, names)
        if not isinstance(S, sl.PolySet):
            raise ProblemFileError(f"declared set must be a polyhedron: {text!r}")
        return S.P

    def neighborhood(self) -> rc.DirectionalNeighborhood:
        return rc.DirectionalNeighborhood(self.direction, self.rho, self.delta)


def load(path) -> ProblemFile:
    path = Path(path)
    raw = path.read_bytes()
    try:
        data = tomllib.loads(raw.decode("utf-8"))
    except tomllib.TOMLDecodeError as err:
        raise ProblemFileError(f"{path}: {err}") from None
    return ProblemFile(data, raw, path.name)


def fixture_path(example: str) -> Path:
    name = "example_" + example.replace("-", "_") + ".toml"
    return Path(str(resources.files("dirop") / "data" / name))


# --------------------------------------------------------------------------
# Serialization


def to_jsonable(v):
    if isinstance(v, bool) or v is None or isinstance(v, str):
        return v
    if isinstance(v, Fraction):
        return str(v.numerator) if v.denominator == 1 else f"{v.numerator}/{v.denominator}"
    if isinstance(v, int):
        return v
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        if math.isnan(v):
            return "nan"
        return v
    if isinstance(v, np.bool_):
        return bool(v)
    if isinstance(v, np.ndarray):
        return [to_jsonable(x) for x in v.tolist()]
    if isinstance(v, (list, tuple)):
        return [to_jsonable(x) for x in v]
    if isinstance(v, dict):
        return {str(k): to_jsonable(x) for k, x in v.items()}
    if isinstance(v, px.Polyhedron):
        return "{" + ", ".join(v.describe()) + "}" if v.k else f"R^{v.n}"
    if isinstance(v, oc.CheckReport):
        return report_dict(v)
    return str(v)


def report_dict(r: oc.CheckReport) -> dict:
    return {
        "check": r.name,
        "verdict": r.verdict,
        "values": to_jsonable(r.values),
        "witnesses": to_jsonable(r.witnesses),
        "notes": list(r.notes),
        "tolerances": to_jsonable(r.tol),
        "parts": {k: report_dict(v) for k, v in r.parts.items()},
    }


def envelope(check: str, pf: ProblemFile, body: dict, args: dict) -> dict:
    h = hashlib.sha256()
    h.update(pf.raw)
    h.update(json.dumps(args, sort_keys=True).encode())
    out = dict(body)
    out["check"] = check
    out["digest"] = h.hexdigest()
    out["seed"] = pf.seed if args.get("seed") is None else args["seed"]
    out["versions"] = {"dirop": __version__}
    return out


def emit(report: dict, fmt: str = "json") -> bytes:
    if fmt == "json":
        return (json.dumps(report, sort_keys=True, indent=2, ensure_ascii=False) + "\n").encode("utf-8")
    lines = [f"{report.get('check', '?')}: {report.get('verdict', '?')}"]
    for k, v in sorted(report.get("values", {}).items()):
        lines.append(f"  {k} = {v}")
    for k, p in sorted(report.get("parts", {}).items()):
        lines.append(f"  [{k}] {p.get('verdict')}")
    for k, p in sorted(report.get("rungs", {}).items()):
        lines.append(f"  {k:<14} {p.get('verdict')}")
    for k, item in sorted(report.get("items", {}).items()):
        lines.append(f"  {'ok ' if item['match'] else 'BAD'} {k}: {item['computed']}")
    for n in report.get("notes", []):
        lines.append(f"  note: {n}")
    return ("\n".join(lines) + "\n").encode("utf-8")


# --------------------------------------------------------------------------
# Commands


class Context:
    def __init__(self, pf: ProblemFile, args):
        self.pf = pf
        self.args = args
        self._mscq = None

    @property
    def problem(self) -> oc.Problem:
        if self.pf.problem is None:
            raise ProblemFileError("this command needs a [problem] section")
        return self.pf.problem

    @property
    def lam(self):
        if getattr(self.args, "lam", None):
            lam = _vec(self.args.lam, "--lambda")
        else:
            lam = self.pf.lam
        if lam is None:
            return None
        m = self.problem.m
        if len(lam) > m:
            raise ProblemFileError(f"multiplier has {len(lam)} entries, the problem has {m} constraints")
        # a short vector gives the leading entries; the rest are zero
        return tuple(lam) + (Fraction(0),) * (m - len(lam))

    @property
    def seed(self) -> int:
        s = getattr(self.args, "seed", None)
        return self.pf.seed if s is None else s

    def V(self) -> rc.DirectionalNeighborhood:
        rho = getattr(self.args, "rho", None) or self.pf.rho
        delta = getattr(self.args, "delta", None) or self.pf.delta
        return rc.DirectionalNeighborhood(self.pf.direction, rho, delta)

    def mscq(self):
        P = self.problem
        asserted = getattr(self.args, "assert_mscq", None)
        if asserted is None:
            asserted = self.pf.assert_mscq
        if asserted is not None:
            return asserted
        if P.is_identity() or P.is_affine_polyhedral():
            return None
        if self._mscq is None:
            try:
                self._mscq = rc.mscq_estimate(P, self.pf.point, self.pf.direction, self.V(), 1000, self.seed)
            except rc.DegenerateSampling:
                self._mscq = rc.CQReport("MSCQ", "inconclusive", notes=["too few samples with g(x) outside K"])
        return self._mscq


def _need_lambda(ctx: Context):
    if ctx.lam is not None:
        return ctx.lam
    M = oc.multiplier_set(ctx.problem, ctx.pf.point, ctx.pf.direction)
    members = M.members()
    if not members:
        raise ProblemFileError("no multiplier given and none found")
    return members[0]


def run_check(ctx: Context, rung: str) -> dict:
    P, x, d = ctx.problem, ctx.pf.point, ctx.pf.direction
    if rung == "critical":
        cc = oc.critical_cone(P, x)
        inside = cc.contains(d)
        r = oc.CheckReport("critical_cone", "holds" if inside else ("fails" if inside is False else "inconclusive"),
                           {"cone": cc.describe(P.vars)})
    elif rung == "fonc":
        r = oc.fonc_check(P, x, d, mscq=ctx.mscq())
    elif rung == "sonc-primal":
        r = oc.sonc_primal(P, x, d, ctx.mscq())
    elif rung == "sonc-dual":
        r = oc.sonc_dual(P, x, d, _need_lambda(ctx), ctx.mscq())
    elif rung == "sonc-hat":
        r = oc.sonc_hat(P, x, d, _need_lambda(ctx), mscq=ctx.mscq(), seed=ctx.seed)
    elif rung == "ssoc":
        mode = getattr(ctx.args, "mode", None) or ctx.pf.mode
        r = oc.ssoc_sufficient(P, x, d, _need_lambda(ctx), mode, ctx.mscq())
    elif rung == "growth":
        kappa = getattr(ctx.args, "kappa", None) or ctx.pf.kappa
        r = oc.growth_verify(P, x, d, kappa, ctx.V(), 1000, ctx.seed)
    elif rung == "falsify":
        r = oc.falsify_directional_optimality(P, x, d, ctx.V(), 2000, ctx.seed)
    elif rung == "duality":
        u = _vec(ctx.args.u, "--u") if getattr(ctx.args, "u", None) else (ctx.pf.u or tuple([0] * P.m))
        r = oc.duality_pair(P, x, d, u)
    elif rung == "multipliers":
        M = oc.multiplier_set(P, x, d)
        verdict = "holds" if M.nonempty else ("fails" if M.nonempty is False else "inconclusive")
        r = oc.CheckReport("multipliers", verdict, {"witnesses": M.members(), "kernel": M.kernel}, notes=M.notes)
    elif rung == "ladder":
        L = oc.ladder(P, x, d, ctx.lam, ctx.mscq(), ctx.V(), getattr(ctx.args, "mode", None) or ctx.pf.mode, ctx.seed)
        return {"verdict": L.verdict, "rungs": {k: report_dict(v) for k, v in L.rungs.items()},
                "notes": L.narrative, "values": {}}
    else:
        raise ProblemFileError(f"unknown check {rung!r}")
    return report_dict(r)


def _set_and_base(ctx: Context):
    """The set, base point and direction for tangent/normal commands."""
    pf = ctx.pf
    if pf.set is not None:
        return pf.set, pf.point, pf.direction, pf.vars
    P = pf.problem
    J, _, y = P.jacobian_data(pf.point, pf.direction)
    return P.K, y, px.matvec(J, pf.direction), P.kvars


def run_tangent(ctx: Context, kind: str) -> dict:
    pf = ctx.pf
    if pf.problem is not None and kind in ("outer2", "asym2"):
        S, y, v, names = _set_and_base(ctx)
        T = pf.problem.outer_K(y, v) if kind == "outer2" else pf.problem.asym_K(y, v)
    else:
        S, y, v, names = _set_and_base(ctx)
        if kind == "tangent":
            T = tl.tangent_cone(S, y)
        elif kind == "outer2":
            T = tl.outer_second_tangent(S, y, v)
        elif kind == "asym2":
            T = tl.asymptotic_second_tangent(S, y, v)
        else:
            raise ProblemFileError(f"unknown tangent kind {kind!r}")
    values = {"kind": T.kind, "rep": T.rep, "set": T.describe(names)}
    if T.rep == "Oracle":
        sc = T.scan()
        counts = {}
        for st in sc["status"]:
            counts[st] = counts.get(st, 0) + 1
        values["lattice"] = counts
        values["lattice_radius"] = tl.SCAN_RADIUS
    return {"verdict": "holds", "values": values, "notes": list(T.notes)}


def run_normal(ctx: Context, vectors) -> dict:
    S, y, v, names = _set_and_base(ctx)
    N = (ctx.pf.problem.normal_K(y, v) if ctx.pf.problem is not None else nl.directional_limiting_normal(S, y, v))
    values = {"rep": N.rep, "cone": N.describe(names)}
    verdict = "holds"
    if vectors:
        res = {}
        for text in vectors:
            w = _vec(text, "--vector")
            got = N.contains(w)
            res[",".join(to_jsonable(list(w)))] = got
            if got is None:
                verdict = "inconclusive"
            elif got is False and verdict == "holds":
                verdict = "fails"
        values["membership"] = res
    return {"verdict": verdict, "values": values, "notes": list(N.notes)}


def run_cq(ctx: Context, kind: str) -> dict:
    P, x, d = ctx.problem, ctx.pf.point, ctx.pf.direction
    if kind == "mscq":
        r = rc.mscq_estimate(P, x, d, ctx.V(), 1000, ctx.seed)
    elif kind == "dirrcq":
        r = rc.dirrcq_check(P, x, d)
    elif kind == "nondegeneracy":
        r = rc.nondegeneracy_check(P, x, d)
    else:
        raise ProblemFileError(f"unknown CQ kind {kind!r}")
    values = dict(r.values)
    if r.kappa is not None:
        values["kappa"] = r.kappa
    return {"verdict": r.verdict, "values": to_jsonable(values), "witnesses": to_jsonable([r.witness] if r.witness else []),
            "notes": list(r.notes)}


# --------------------------------------------------------------------------
# Example reproduction


def _set_value(obj, names):
    """Canonical description of a tangent object for comparison."""
    if obj.rep == "ProvablyEmptyAtScale":
        return "empty_at_scale"
    if obj.exact and len(obj.polys) == 1:
        return obj.polys[0]
    return obj.describe(names)


def _lattice_summary(obj) -> str:
    st = obj.scan()["status"]
    return "all_member" if all(s == "member" for s in st) else f"{sum(s == 'member' for s in st)}/{len(st)} members"


def _compute(ctx: Context, key: str):
    pf = ctx.pf
    x, d = pf.point, pf.direction
    P = pf.problem
    if pf.set is not None:
        S = pf.set
        if key == "t2":
            return _set_value(tl.outer_second_tangent(S, x, d), pf.vars)
        if key == "tpp_lattice":
            return _lattice_summary(tl.asymptotic_second_tangent(S, x, d))
        if key in ("normal_members", "normal_nonmembers"):
            N = nl.directional_limiting_normal(S, x, d)
            want = key == "normal_members"
            return [list(v) for v in (_vec(w, key) for w in pf.expected[key]) if N.contains(v) is want]
        if key == "frechet_members":
            return [list(v) for v in (_vec(w, key) for w in pf.expected[key])
                    if nl.frechet_normal_member(S, x, v) is True]
        raise KeyError(key)
    J, q, y = P.jacobian_data(x, d)
    Jd = px.matvec(J, d)
    lam = pf.lam
    if key == "t2_K":
        return _set_value(P.outer_K(y, Jd), pf.kvars)
    if key == "tpp_K":
        return _set_value(P.asym_K(y, Jd), pf.kvars)
    if key in ("omega", "theta"):
        cs = tl.chain_rule_sets(P, x, d, ctx.mscq())
        out = cs.Omega if key == "omega" else cs.Theta
        return out if out is not None else "unavailable"
    if key == "sigma_T2K":
        return nl.support(P.outer_K(y, Jd), lam).value
    if key == "sigma_Tpp":
        return nl.support(P.asym_K(y, Jd), lam).value
    if key == "sigma_Omega":
        return oc.sonc_dual(P, x, d, lam, ctx.mscq()).values.get("sigma_Omega")
    if key == "dual_value":
        return oc.sonc_dual(P, x, d, lam, ctx.mscq()).values.get("value")
    if key == "value_T2K":
        return oc.sonc_dual(P, x, d, lam, ctx.mscq()).values.get("value_T2K")
    if key == "dual_value_any_lambda1":
        vals = {oc.sonc_dual(P, x, d, (Fraction(l1), 0), ctx.mscq()).values.get("value") for l1 in range(-3, 4)}
        return vals.pop() if len(vals) == 1 else sorted(vals)
    if key == "multipliers":
        M = oc.multiplier_set(P, x, d)
        if M.kernel:
            return "not a singleton"
        return [list(w) for w in M.members()]
    if key in ("ssoc_margin_corollary", "ssoc_margin_theorem"):
        mode = key.rsplit("_", 1)[1]
        return oc.ssoc_sufficient(P, x, d, lam, mode, ctx.mscq()).values.get("margin")
    if key in ("ssoc_corollary", "ssoc_theorem"):
        return oc.ssoc_sufficient(P, x, d, lam, key.split("_")[1], ctx.mscq()).verdict
    if key == "growth":
        return oc.growth_verify(P, x, d, pf.kappa, pf.neighborhood(), 1000, pf.seed).verdict
    if key == "alpha":
        return oc.sonc_primal(P, x, d, ctx.mscq()).values.get("alpha")
    if key == "nondegeneracy":
        return rc.nondegeneracy_check(P, x, d).verdict
    if key == "dirrcq":
        return rc.dirrcq_check(P, x, d).verdict
    if key == "mscq_kappa":
        return ctx.mscq().kappa
    if key == "fonc_i":
        return oc.fonc_check(P, x, d, mscq=ctx.mscq()).parts["i"].verdict
    if key == "fonc_ii":
        return oc.fonc_check(P, x, d, mscq=ctx.mscq()).parts["ii"].verdict
    if key == "grad_f_d":
        return px.dot(P.grad_f(x), d)
    if key == "minus_grad_in_normal":
        return oc.fonc_check(P, x, d, mscq=ctx.mscq()).values["minus_grad_in_normal"]
    if key == "normal_C":
        N, _ = oc._normal_C(P, x, d)
        return N.cone if N is not None and N.rep == "ExactCone" else "unavailable"
    if key == "falsify":
        return oc.falsify_directional_optimality(P, x, d, pf.neighborhood(), 2000, pf.seed).verdict
    raise KeyError(key)


def _matches(computed, expected, names) -> bool:
    if isinstance(computed, px.Polyhedron):
        if not isinstance(expected, str) or expected in ("empty_at_scale", "unavailable"):
            return False
        S = sl.parse_set(expected, names)
        return isinstance(S, sl.PolySet) and px.equal(computed, S.P)
    if isinstance(expected, bool) or isinstance(computed, bool):
        return computed is expected or computed == expected
    if isinstance(expected, list):
        try:
            want = sorted(tuple(_vec(v, "expected")) for v in expected)
            got = sorted(tuple(_vec([to_jsonable(c) for c in v], "computed")) for v in computed)
        except (ProblemFileError, TypeError):
            return False
        return want == got
    if isinstance(expected, str) and isinstance(computed, str):
        return expected == computed
    if isinstance(expected, str) and expected in ("inf", "-inf"):
        return isinstance(computed, float) and computed == float(expected)
    if isinstance(expected, str) and expected.startswith("~"):
        # approximate: "~value:tolerance"
        val, tol = expected[1:].split(":")
        return computed is not None and abs(float(computed) - float(val)) <= float(tol)
    try:
        return Fraction(_num(expected, "expected")) == computed
    except (ProblemFileError, TypeError):
        return False


def _poly_text(P: px.Polyhedron, names) -> str:
    rows = P.describe(names)
    return "{" + ", ".join(rows) + "}" if rows else f"R^{P.n}"


def reproduce(example: str, args=None) -> dict:
    pf = load(fixture_path(example))
    ctx = Context(pf, args or argparse.Namespace())
    names = pf.kvars if pf.problem is not None else pf.vars
    items = {}
    for key, want in pf.expected.items():
        got = _compute(ctx, key)
        nm = pf.vars if key in ("normal_C",) else names
        shown = _poly_text(got, nm) if isinstance(got, px.Polyhedron) else to_jsonable(got)
        items[key] = {"expected": want, "computed": shown, "match": _matches(got, want, nm)}
    ok = all(it["match"] for it in items.values())
    return {"verdict": "holds" if ok else "fails", "items": items, "example": example,
            "values": {},
            "notes": [f"declared objects: {pf.validation}"] if getattr(pf, "validation", None) else []}


# --------------------------------------------------------------------------
# Entry point


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="dirop", description="Directional second-order optimality toolkit")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--lambda", dest="lam", help="multiplier as comma-separated rationals; missing trailing entries are 0")
        sp.add_argument("--tol", type=float)
        sp.add_argument("--seed", type=int)
        sp.add_argument("--rho", type=float)
        sp.add_argument("--delta", type=float)
        sp.add_argument("--format", choices=("json", "text"), default="json")
        sp.add_argument("--assert-mscq", dest="assert_mscq", type=float, metavar="KAPPA")

    c = sub.add_parser("check", help="run one rung of the condition ladder")
    c.add_argument("rung", choices=("critical", "fonc", "sonc-primal", "sonc-dual", "sonc-hat", "ssoc", "growth",
                                    "falsify", "duality", "multipliers", "ladder"))
    c.add_argument("file")
    c.add_argument("--mode", choices=("theorem", "corollary"))
    c.add_argument("--kappa", type=float)
    c.add_argument("--u", help="shift vector for the duality pair")
    common(c)
    t = sub.add_parser("tangent", help="tangent cone or second-order tangent set")
    t.add_argument("file")
    t.add_argument("--kind", choices=("tangent", "outer2", "asym2"), default="tangent")
    common(t)
    n = sub.add_parser("normal", help="directional limiting normal cone")
    n.add_argument("file")
    n.add_argument("--vector", action="append", help="test membership of a vector (repeatable)")
    common(n)
    q = sub.add_parser("cq", help="constraint qualifications")
    q.add_argument("kind", choices=("mscq", "dirrcq", "nondegeneracy"))
    q.add_argument("file")
    common(q)
    r = sub.add_parser("reproduce", help="reproduce a built-in example")
    r.add_argument("example", choices=EXAMPLES + ("all",))
    r.add_argument("--format", choices=("json", "text"), default="json")
    return p


def _args_key(args) -> dict:
    return {k: v for k, v in sorted(vars(args).items()) if k not in ("file", "format")}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as err:
        # argparse exits with 2 on usage errors, which would read as "inconclusive"
        return EXIT_ERROR if err.code else 0
    out = sys.stdout.buffer
    try:
        if args.command == "reproduce":
            names = EXAMPLES if args.example == "all" else (args.example,)
            code = 0
            for name in names:
                rep = reproduce(name)
                rep["check"] = f"reproduce:{name}"
                out.write(emit(rep, args.format))
                code = max(code, EXIT[rep["verdict"]])
            return code
        pf = load(args.file)
        if args.tol is not None:
            pf.tol = args.tol
        ctx = Context(pf, args)
        if args.command == "check":
            body = run_check(ctx, args.rung)
            name = args.rung
        elif args.command == "tangent":
            body = run_tangent(ctx, args.kind)
            name = f"tangent:{args.kind}"
        elif args.command == "normal":
            body = run_normal(ctx, args.vector)
            name = "normal"
        else:
            body = run_cq(ctx, args.kind)
            name = f"cq:{args.kind}"
        rep = envelope(name, pf, body, _args_key(args))
        out.write(emit(rep, args.format))
        return EXIT.get(rep["verdict"], 2)
    except (ProblemFileError, ec.ParseError, sl.SetParseError, px.DimensionMismatch, oc.StationarityViolated,
            oc.ZeroDirection, oc.DeclaredMismatch, tl.PointNotInSet, tl.DirectionNotTangent, rc.DegenerateSampling,
            rc.ExactPathUnavailable, rc.InfeasiblePoint, FileNotFoundError) as err:
        sys.stderr.write(f"dirop: error: {err}\n")
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
