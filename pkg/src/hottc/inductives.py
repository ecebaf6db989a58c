"""Dybjer-style inductive families: schema checks, recursors, iota rules."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

from . import level as lv
from .env import (
    CONSTRUCTOR, INDUCTIVE, RECURSOR, CtorRule, Declaration, Environment, InductiveInfo,
    RecursorInfo, RuleSet,
)
from .errors import DuplicateName, InductiveError, PositivityError, UniverseError
from .kernel import TypeChecker, _check_closed, _check_univ_params
from .level import Level, LParam
from .pretty import pp
from .term import (
    EXPLICIT, IMPLICIT, Const, FVar, Pi, Sort, Term, abstract, get_app, instantiate, mk_app, mk_lambda,
    mk_pi, occurs_const,
)


@dataclass
class InductiveDecl:
    """Kernel input for an inductive family: closed types only."""

    nparams: int
    ctors: list[tuple[str, Term]]


@dataclass
class _RecArg:
    position: int
    telescope: list[FVar]  # the Pi-binders in front of the recursive occurrence
    indices: list[Term]


@dataclass
class _Ctor:
    name: str
    type: Term
    args: list[FVar]
    indices: list[Term]
    recursive: list[_RecArg]


@dataclass
class InductiveSpec:
    name: str
    univ_params: tuple[str, ...]
    type: Term
    params: list[FVar]
    indices: list[FVar]
    result_level: Level
    ctors: list[_Ctor]

    @property
    def levels(self) -> list[Level]:
        return [LParam(u) for u in self.univ_params]


def _telescope(tc: TypeChecker, t: Term, n: Optional[int] = None) -> tuple[list[FVar], Term]:
    fvs: list[FVar] = []
    while n is None or len(fvs) < n:
        if not isinstance(t, Pi):
            w = tc.whnf(t)
            if not isinstance(w, Pi):
                break
            t = w
        fv = FVar(t.name, t.dom, t.vis)
        fvs.append(fv)
        t = instantiate(t.body, [fv])
    return fvs, t


def check_inductive(env: Environment, name: str, univ_params: Sequence[str], type: Term,
                    nparams: int, ctors: Sequence[tuple[str, Term]]) -> InductiveSpec:
    """Validate the family and its constructors; returns the opened schema."""
    d = Declaration(name, tuple(univ_params), type, INDUCTIVE)
    _check_univ_params(d)
    _check_closed(d, type, *(c for _, c in ctors))
    for n in [name, f"{name}.rec"] + [c for c, _ in ctors]:
        if n in env:
            raise DuplicateName(f"'{n}' is already declared")
    if len({c for c, _ in ctors}) != len(ctors):
        raise DuplicateName(f"duplicate constructor name in '{name}'")

    tc = TypeChecker(env, univ_params=univ_params)
    tc.ensure_sort(tc.infer(type, False))
    params, rest = _telescope(tc, type, nparams)
    if len(params) != nparams:
        raise InductiveError(f"'{name}' has fewer than {nparams} parameters")
    indices, result = _telescope(tc, rest)
    result = tc.whnf(result)
    if not isinstance(result, Sort):
        raise InductiveError(f"the type of '{name}' must end in a universe, got {pp(result)}")
    result_level = result.level
    levels = [LParam(u) for u in univ_params]

    # constructors are checked against an environment that already knows the family
    env1 = env.add(Declaration(name, tuple(univ_params), type, INDUCTIVE,
                               info=InductiveInfo(name, nparams, len(indices), [], f"{name}.rec")))
    tc1 = TypeChecker(env1, univ_params=univ_params)

    def is_family(h: Term) -> bool:
        return isinstance(h, Const) and h.name == name

    def check_family_app(t: Term, where: str) -> list[Term]:
        h, args = get_app(t)
        if not is_family(h):
            raise InductiveError(f"{where}: expected an application of '{name}', got {pp(t)}")
        if len(h.levels) != len(levels) or not all(lv.is_equiv(a, b) for a, b in zip(h.levels, levels)):
            raise UniverseError(f"{where}: '{name}' must be used at its declared universe parameters")
        if len(args) != nparams + len(indices):
            raise InductiveError(f"{where}: '{name}' is applied to {len(args)} arguments")
        for p, a in zip(params, args[:nparams]):
            if not (isinstance(a, FVar) and a.uid == p.uid):
                raise InductiveError(f"{where}: parameter '{p.name}' must be passed unchanged")
        idx = args[nparams:]
        for i in idx:
            if occurs_const(i, name):
                raise PositivityError(f"{where}: '{name}' occurs in an index")
        return idx

    out: list[_Ctor] = []
    for cname, ctype in ctors:
        tc1.ensure_sort(tc1.infer(ctype, False))
        t = ctype
        for p in params:
            if not isinstance(t, Pi):
                raise InductiveError(f"constructor '{cname}' must start with the parameters of '{name}'")
            if not tc1.is_def_eq(t.dom, p.type):
                raise InductiveError(f"constructor '{cname}': parameter '{p.name}' has the wrong type")
            t = instantiate(t.body, [p])
        args: list[FVar] = []
        recursive: list[_RecArg] = []
        while True:
            if not isinstance(t, Pi):
                h = get_app(t)[0]
                if is_family(h):
                    break
                w = tc1.whnf(t)
                if not isinstance(w, Pi):
                    break
                t = w
            pos = len(args) + 1
            dom = t.dom
            where = f"constructor '{cname}', argument {pos}"
            if occurs_const(dom, name):
                ys, concl = _telescope(tc1, dom)
                for y in ys:
                    if occurs_const(y.type, name):
                        raise PositivityError(
                            f"positivity violation in {where}: '{name}' occurs to the left of an arrow")
                h = get_app(concl)[0]
                if not is_family(h):
                    raise PositivityError(
                        f"positivity violation in {where}: '{name}' occurs in a non-positive position")
                idx = check_family_app(concl, where)
                recursive.append(_RecArg(len(args), ys, idx))
            # predicativity: the family must live at least as high as each argument
            arg_level = tc1.ensure_sort(tc1.infer(dom))
            if not lv.is_leq(arg_level, result_level):
                raise UniverseError(
                    f"universe violation in {where}: argument lives in Type.{{{arg_level}}}, "
                    f"above the family's Type.{{{result_level}}}")
            fv = FVar(t.name, dom, t.vis)
            args.append(fv)
            t = instantiate(t.body, [fv])
        idx = check_family_app(t, f"constructor '{cname}'")
        out.append(_Ctor(cname, ctype, args, idx, recursive))
    return InductiveSpec(name, tuple(univ_params), type, params, indices, result_level, out)


def _fresh_level_name(used: Sequence[str]) -> str:
    name, i = "l", 0
    while name in used:
        i += 1
        name = f"l_{i}"
    return name


def generate_recursor(spec: InductiveSpec) -> tuple[Declaration, RecursorInfo]:
    """Dependent eliminator `T.rec` and one iota rule per constructor.

    Argument order: parameters, motive, minor premises, indices, major premise.
    """
    name = spec.name
    lname = _fresh_level_name(spec.univ_params)
    rec_name = f"{name}.rec"
    rec_univs = (lname,) + spec.univ_params
    rec_const = Const(rec_name, [LParam(u) for u in rec_univs])
    fam = Const(name, spec.levels)

    P: list[FVar] = []
    for p in spec.params:
        P.append(FVar(p.name, _subst(p.type, spec.params[: len(P)], P), IMPLICIT))

    idx_fvs: list[FVar] = []
    for i in spec.indices:
        idx_fvs.append(FVar(i.name, _subst(i.type, spec.params + spec.indices[: len(idx_fvs)],
                                           P + idx_fvs), EXPLICIT))
    maj_m = FVar("x", mk_app(fam, P + idx_fvs))
    motive_ty = mk_pi(idx_fvs + [maj_m], Sort(LParam(lname)))
    C = FVar("motive", motive_ty, IMPLICIT)

    minors: list[FVar] = []
    rules: dict[str, CtorRule] = {}
    ctor_data = []
    for c in spec.ctors:
        src = spec.params
        args: list[FVar] = []
        for a in c.args:
            args.append(FVar(a.name, _subst(a.type, src + c.args[: len(args)], P + args), EXPLICIT))
        env_src = src + c.args
        env_dst = P + args
        ihs: list[FVar] = []
        ih_payload = []
        for r in c.recursive:
            ys: list[FVar] = []
            for y in r.telescope:
                ys.append(FVar(y.name, _subst(y.type, env_src + r.telescope[: len(ys)], env_dst + ys), y.vis))
            ridx = [_subst(i, env_src + r.telescope, env_dst + ys) for i in r.indices]
            a = args[r.position]
            ih_ty = mk_pi(ys, mk_app(C, ridx + [mk_app(a, ys)]))
            ihs.append(FVar(f"ih_{a.name}", ih_ty, EXPLICIT))
            ih_payload.append((ys, ridx, a))
        cidx = [_subst(i, env_src, env_dst) for i in c.indices]
        ctor_app = mk_app(Const(c.name, spec.levels), P + args)
        minor_ty = mk_pi(args + ihs, mk_app(C, cidx + [ctor_app]))
        minor = FVar(c.name.split(".")[-1], minor_ty, EXPLICIT)
        minors.append(minor)
        ctor_data.append((c, args, ih_payload, minor))

    idx2: list[FVar] = []
    for i in idx_fvs:
        idx2.append(FVar(i.name, _subst(i.type, idx_fvs[: len(idx2)], idx2), IMPLICIT))
    major = FVar("x", mk_app(fam, P + idx2))
    rec_ty = mk_pi(P + [C] + minors + idx2 + [major], mk_app(C, idx2 + [major]))

    prefix = P + [C] + minors
    for c, args, ih_payload, minor in ctor_data:
        ih_vals = [
            mk_lambda(ys, mk_app(rec_const, prefix + ridx + [mk_app(a, ys)]))
            for ys, ridx, a in ih_payload
        ]
        rhs = mk_lambda(prefix + args, mk_app(minor, args + ih_vals))
        rules[c.name] = CtorRule(c.name, len(P), len(args), rhs)

    rs = RuleSet(rec_name, rec_univs, len(prefix), len(prefix) + len(idx2), rules, f"inductive:{name}")
    info = RecursorInfo(rec_name, name, len(P), len(minors), len(idx2), lname, rs)
    return Declaration(rec_name, rec_univs, rec_ty, RECURSOR, info=info), info


def _subst(t: Term, src: Sequence[FVar], dst: Sequence[Term]) -> Term:
    return instantiate(abstract(t, list(src)), list(dst))


def add_inductive(env: Environment, name: str, univ_params: Sequence[str], type: Term,
                  nparams: int, ctors: Sequence[tuple[str, Term]]) -> Environment:
    spec = check_inductive(env, name, univ_params, type, nparams, ctors)
    rec_decl, info = generate_recursor(spec)
    ind_info = InductiveInfo(name, nparams, len(spec.indices), [c for c, _ in ctors], rec_decl.name,
                             spec.result_level)
    env = env.add(Declaration(name, tuple(univ_params), type, INDUCTIVE, info=ind_info))
    for cname, ctype in ctors:
        env = env.add(Declaration(cname, tuple(univ_params), ctype, CONSTRUCTOR, info=name))
    env = env.add(rec_decl)
    env = env.add_rules(info.rules)
    return env


def iota_reduce(env: Environment, t: Term) -> Optional[Term]:
    """One iota step when t is a recursor applied to a constructor-headed major premise."""
    return TypeChecker(env).reduce_rules(t, provenance="inductive:")
