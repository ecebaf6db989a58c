"""The trusted kernel: weak-head normalization, definitional equality and
type inference over fully elaborated terms, plus declaration checking and
axiom tracking.
"""

from __future__ import annotations

import sys
from dataclasses import dataclass, field
from typing import Callable, Iterable, Optional, Sequence

from . import level as lv
from .env import (
    AXIOM, CONSTRUCTOR, DEFINITION, HIT, INDUCTIVE, RECURSOR, Declaration, Environment, RuleSet,
)
from .errors import (
    DuplicateName, FuelExhausted, KernelError, TypeMismatch, UniverseError, UnknownConstant,
)
from .level import Level, LMax, LSucc
from .pretty import pp
from .term import (
    App, Const, FVar, Lam, Meta, Pi, Sort, Term, Var, abstract, get_app, get_app_fn, head_beta,
    instantiate, instantiate1, instantiate_lparams, levels_in, mk_app, mk_lambda, mk_pi, subterms,
)

sys.setrecursionlimit(max(sys.getrecursionlimit(), 100_000))


class TypeChecker:
    """Kernel reduction and conversion relative to one environment snapshot.

    The elaborator subclasses this and overrides the `_meta_*` hooks; the
    kernel versions reject metavariables outright.
    """

    def __init__(self, env: Environment, fuel: Optional[int] = None,
                 univ_params: Optional[Sequence[str]] = None):
        self.env = env
        self.fuel = fuel
        self.univ_params = None if univ_params is None else set(univ_params)
        self._whnf_cache: dict = {}
        self._whnf_core_cache: dict = {}
        self._infer_cache: dict = {}
        self._eq_cache: set = set()

    # -- hooks -------------------------------------------------------------

    def _cacheable(self, t: Term) -> bool:
        return True

    def _meta_head(self, t: Term) -> Optional[Term]:
        """Instantiate an assigned metavariable at the head of t."""
        return None

    def _meta_def_eq(self, t: Term, u: Term) -> Optional[bool]:
        return None

    def _infer_meta(self, t: Meta) -> Term:
        raise KernelError("metavariable in kernel term")

    def level_eq(self, a: Level, b: Level) -> bool:
        return lv.is_equiv(a, b)

    def _tentative(self, fn: Callable[[], bool]) -> bool:
        return fn()

    def tick(self) -> None:
        if self.fuel is not None:
            self.fuel -= 1
            if self.fuel < 0:
                raise FuelExhausted("reduction fuel exhausted")

    # -- reduction -----------------------------------------------------------

    def reduce_rules(self, t: Term, provenance: Optional[str] = None) -> Optional[Term]:
        """Contract an eliminator applied to a constructor (iota or HIT point rule)."""
        f, args = get_app(t)
        if not isinstance(f, Const):
            return None
        rs = self.env.rules_for(f.name)
        if rs is None or len(args) <= rs.major:
            return None
        if provenance is not None and not rs.provenance.startswith(provenance):
            return None
        major = self.whnf(args[rs.major])
        mh, margs = get_app(major)
        if not isinstance(mh, Const):
            return None
        rule = rs.rules.get(mh.name)
        if rule is None or len(margs) != rule.nparams + rule.nfields:
            return None
        self.tick()
        rhs = instantiate_lparams(rule.rhs, rs.univ_params, f.levels)
        return mk_app(rhs, args[: rs.nprefix] + margs[rule.nparams:] + args[rs.major + 1:])

    def whnf_core(self, t: Term) -> Term:
        """Beta, iota and HIT point rules; no delta unfolding of definitions."""
        if not isinstance(t, (App, Meta)):
            return t
        cache = self._cacheable(t)
        if cache:
            r = self._whnf_core_cache.get(t)
            if r is not None:
                return r
        start = t
        while True:
            head = get_app_fn(t)
            if isinstance(head, Lam):
                if isinstance(t, App):
                    self.tick()
                    t = head_beta(t)
                    continue
                break
            if isinstance(head, Const):
                r = self.reduce_rules(t)
                if r is None:
                    break
                t = r
                continue
            if isinstance(head, Meta):
                r = self._meta_head(t)
                if r is None:
                    break
                t = r
                continue
            break
        if cache:
            self._whnf_core_cache[start] = t
        return t

    def unfold_definition(self, t: Term) -> Optional[Term]:
        f, args = get_app(t)
        if not isinstance(f, Const):
            return None
        d = self.env.get(f.name)
        if d is None or d.kind != DEFINITION or len(f.levels) != len(d.univ_params):
            return None
        self.tick()
        return mk_app(instantiate_lparams(d.value, d.univ_params, f.levels), args)

    def whnf(self, t: Term) -> Term:
        if isinstance(t, (Sort, Pi, Lam, FVar, Var)):
            return t
        cache = self._cacheable(t)
        if cache:
            r = self._whnf_cache.get(t)
            if r is not None:
                return r
        start = t
        while True:
            t = self.whnf_core(t)
            u = self.unfold_definition(t)
            if u is None:
                break
            t = u
        if cache:
            self._whnf_cache[start] = t
        return t

    # -- definitional equality ---------------------------------------------

    def _delta_decl(self, t: Term) -> Optional[Declaration]:
        f = get_app_fn(t)
        if isinstance(f, Const):
            d = self.env.get(f.name)
            if d is not None and d.kind == DEFINITION:
                return d
        return None

    def is_def_eq(self, t: Term, u: Term) -> bool:
        if t is u or t == u:
            return True
        r = self._meta_def_eq(t, u)
        if r is not None:
            return r
        cache = self._cacheable(t) and self._cacheable(u)
        if cache and (t, u) in self._eq_cache:
            return True
        r = self._def_eq(t, u)
        if r and cache:
            self._eq_cache.add((t, u))
        return r

    def _binder_eq(self, t: Term, u: Term) -> bool:
        # t, u both Lam or both Pi
        fvs: list[FVar] = []
        while type(t) is type(u) and isinstance(t, (Lam, Pi)):
            dt = instantiate(t.dom, fvs)
            du = instantiate(u.dom, fvs)
            if not self.is_def_eq(dt, du):
                return False
            fvs.append(FVar(t.name, dt, t.vis))
            t, u = t.body, u.body
        return self.is_def_eq(instantiate(t, fvs), instantiate(u, fvs))

    def _def_eq(self, t: Term, u: Term) -> bool:
        if isinstance(t, Sort) and isinstance(u, Sort):
            return self.level_eq(t.level, u.level)
        if type(t) is type(u) and isinstance(t, (Lam, Pi)):
            return self._binder_eq(t, u)
        t1, u1 = self.whnf_core(t), self.whnf_core(u)
        if t1 is not t or u1 is not u:
            if t1 == u1:
                return True
            r = self._meta_def_eq(t1, u1)
            if r is not None:
                return r
        # lazy delta: unfold the later definition first
        while True:
            dt, du = self._delta_decl(t1), self._delta_decl(u1)
            if dt is None and du is None:
                break
            if dt is not None and du is not None and dt.name == du.name:
                a, b = t1, u1
                if self._tentative(lambda: self._app_args_eq(a, b)):
                    return True
                t1 = self.whnf_core(self.unfold_definition(t1))
                u1 = self.whnf_core(self.unfold_definition(u1))
            elif du is None or (dt is not None and dt.index > du.index):
                t1 = self.whnf_core(self.unfold_definition(t1))
            else:
                u1 = self.whnf_core(self.unfold_definition(u1))
            if t1 == u1:
                return True
            r = self._meta_def_eq(t1, u1)
            if r is not None:
                return r
        return self._whnf_eq(t1, u1)

    def _app_args_eq(self, t: Term, u: Term) -> bool:
        f, fargs = get_app(t)
        g, gargs = get_app(u)
        if len(fargs) != len(gargs):
            return False
        if isinstance(f, Const) and isinstance(g, Const):
            if f.name != g.name or len(f.levels) != len(g.levels):
                return False
            if not all(self.level_eq(a, b) for a, b in zip(f.levels, g.levels)):
                return False
        elif not self.is_def_eq(f, g):
            return False
        return all(self.is_def_eq(a, b) for a, b in zip(fargs, gargs))

    def _whnf_eq(self, t: Term, u: Term) -> bool:
        if isinstance(t, Sort) and isinstance(u, Sort):
            return self.level_eq(t.level, u.level)
        if type(t) is type(u) and isinstance(t, (Lam, Pi)):
            return self._binder_eq(t, u)
        if isinstance(t, FVar) and isinstance(u, FVar):
            return t.uid == u.uid
        if isinstance(t, Const) and isinstance(u, Const):
            return t.name == u.name and len(t.levels) == len(u.levels) and all(
                self.level_eq(a, b) for a, b in zip(t.levels, u.levels))
        if isinstance(t, App) and isinstance(u, App):
            if self._tentative(lambda: self._app_args_eq(t, u)):
                return True
        # eta for functions
        if isinstance(t, Lam) and not isinstance(u, Lam):
            return self._eta(t, u)
        if isinstance(u, Lam) and not isinstance(t, Lam):
            return self._eta(u, t)
        r = self._meta_def_eq(t, u)
        if r is not None:
            return r
        return False

    def _eta(self, lam: Lam, other: Term) -> bool:
        fv = FVar(lam.name, lam.dom, lam.vis)
        return self.is_def_eq(instantiate1(lam.body, fv), App(other, fv))

    # -- inference ---------------------------------------------------------

    def ensure_sort(self, t: Term) -> Level:
        if isinstance(t, Sort):
            return t.level
        w = self.whnf(t)
        if isinstance(w, Sort):
            return w.level
        raise KernelError(f"type expected, got a term of type {pp(t)}")

    def ensure_pi(self, t: Term) -> Pi:
        if isinstance(t, Pi):
            return t
        w = self.whnf(t)
        if isinstance(w, Pi):
            return w
        raise KernelError(f"function expected, got a term of type {pp(t)}")

    def _check_level(self, l: Level) -> None:
        if self.univ_params is not None:
            for p in lv.params(l):
                if p not in self.univ_params:
                    raise UniverseError(f"undeclared universe parameter '{p}'")
        if lv.has_meta(l):
            raise KernelError("universe metavariable in kernel term")

    def infer(self, t: Term, infer_only: bool = True) -> Term:
        cache = self._cacheable(t)
        if cache:
            r = self._infer_cache.get((t, infer_only))
            if r is not None:
                return r
            if infer_only and (t, False) in self._infer_cache:
                return self._infer_cache[(t, False)]
        r = self._infer(t, infer_only)
        if cache:
            self._infer_cache[(t, infer_only)] = r
        return r

    def _infer(self, t: Term, infer_only: bool) -> Term:
        match t:
            case Var():
                raise KernelError(f"loose bound variable #{t.idx}")
            case FVar():
                return t.type
            case Meta():
                return self._infer_meta(t)
            case Sort(level=l):
                if not infer_only:
                    self._check_level(l)
                return Sort(LSucc(l))
            case Const(name=n, levels=ls):
                d = self.env.get(n)
                if d is None:
                    raise UnknownConstant(f"unknown constant '{n}'")
                if len(ls) != len(d.univ_params):
                    raise UniverseError(
                        f"'{n}' expects {len(d.univ_params)} universe arguments, got {len(ls)}")
                if not infer_only:
                    for l in ls:
                        self._check_level(l)
                return instantiate_lparams(d.type, d.univ_params, ls)
            case App():
                return self._infer_app(t, infer_only)
            case Lam():
                fvs: list[FVar] = []
                b: Term = t
                while isinstance(b, Lam):
                    dom = instantiate(b.dom, fvs)
                    if not infer_only:
                        self.ensure_sort(self.infer(dom, False))
                    fvs.append(FVar(b.name, dom, b.vis))
                    b = b.body
                body_ty = self.infer(instantiate(b, fvs), infer_only)
                return mk_pi(fvs, body_ty)
            case Pi():
                fvs = []
                levels: list[Level] = []
                b = t
                while isinstance(b, Pi):
                    dom = instantiate(b.dom, fvs)
                    levels.append(self.ensure_sort(self.infer(dom, infer_only)))
                    fvs.append(FVar(b.name, dom, b.vis))
                    b = b.body
                levels.append(self.ensure_sort(self.infer(instantiate(b, fvs), infer_only)))
                return Sort(lv.lmax(*levels))
        raise KernelError(f"cannot infer the type of {t!r}")

    def _infer_app(self, t: Term, infer_only: bool) -> Term:
        f, args = get_app(t)
        fty = self.infer(f, infer_only)
        pending: list[Term] = []
        for a in args:
            if not isinstance(fty, Pi):
                fty = self.ensure_pi(instantiate(fty, pending))
                pending = []
            if not infer_only:
                dom = instantiate(fty.dom, pending)
                aty = self.infer(a, False)
                if not self.is_def_eq(aty, dom):
                    raise TypeMismatch(
                        f"argument type mismatch: expected {pp(dom)}, got {pp(aty)} for {pp(a)}",
                        expected=dom, actual=aty)
            pending.append(a)
            fty = fty.body
        return instantiate(fty, pending)

    def check(self, t: Term, expected: Term) -> None:
        ty = self.infer(t, False)
        if not self.is_def_eq(ty, expected):
            raise TypeMismatch(
                f"type mismatch: expected {pp(expected)}, got {pp(ty)}", expected=expected, actual=ty)

    # -- full normalization ------------------------------------------------

    def normalize(self, t: Term) -> Term:
        w = self.whnf(t)
        match w:
            case Lam() | Pi():
                fvs = []
                b = w
                kind = type(w)
                while isinstance(b, kind):
                    dom = self.normalize(instantiate(b.dom, fvs))
                    fvs.append(FVar(b.name, dom, b.vis))
                    b = b.body
                body = self.normalize(instantiate(b, fvs))
                return mk_lambda(fvs, body) if kind is Lam else mk_pi(fvs, body)
            case App():
                f, args = get_app(w)
                return mk_app(f, [self.normalize(a) for a in args])
        return w


# ---------------------------------------------------------------------------
# contexts: de Bruijn telescopes for the public API


@dataclass
class Context:
    """Telescope of (name, type); each type refers to earlier entries by index."""

    entries: list[tuple[str, Term]] = field(default_factory=list)

    def push(self, name: str, type: Term) -> "Context":
        return Context(self.entries + [(name, type)])

    def __len__(self) -> int:
        return len(self.entries)

    def open(self) -> list[FVar]:
        fvs: list[FVar] = []
        for name, ty in self.entries:
            fvs.append(FVar(name, instantiate(ty, fvs)))
        return fvs


def _open(ctx: Optional[Context], t: Term) -> tuple[list[FVar], Term]:
    if ctx is None or len(ctx) == 0:
        return [], t
    if t.lbr > len(ctx):
        raise KernelError(f"unbound variable: index {t.lbr - 1} in a context of length {len(ctx)}")
    fvs = ctx.open()
    return fvs, instantiate(t, fvs)


def whnf(env: Environment, ctx: Optional[Context], t: Term) -> Term:
    fvs, o = _open(ctx, t)
    return abstract(TypeChecker(env).whnf(o), fvs)


def is_def_eq(env: Environment, ctx: Optional[Context], t: Term, u: Term) -> bool:
    fvs, o = _open(ctx, t)
    o2 = instantiate(u, fvs)
    return TypeChecker(env).is_def_eq(o, o2)


def infer_type(env: Environment, ctx: Optional[Context], t: Term) -> Term:
    fvs, o = _open(ctx, t)
    return abstract(TypeChecker(env).infer(o, infer_only=False), fvs)


def normalize(env: Environment, t: Term, fuel: Optional[int] = None) -> Term:
    return TypeChecker(env, fuel=fuel).normalize(t)


# ---------------------------------------------------------------------------
# declarations


def _check_closed(d: Declaration, *terms: Optional[Term]) -> None:
    for t in terms:
        if t is None:
            continue
        if t.has_meta:
            raise KernelError(f"'{d.name}' contains metavariables")
        if t.lbr or t.has_fvar:
            raise KernelError(f"'{d.name}' is not closed")


def _check_univ_params(d: Declaration) -> None:
    if len(set(d.univ_params)) != len(d.univ_params):
        raise UniverseError(f"universe parameter shadowing in '{d.name}'")


def check_declaration(env: Environment, d: Declaration) -> Environment:
    """Type-check a definition or axiom and commit it.

    Inductive families go through `inductives.add_inductive`.
    """
    if d.name in env:
        raise DuplicateName(f"'{d.name}' is already declared")
    _check_univ_params(d)
    if d.kind == INDUCTIVE:
        from .inductives import add_inductive

        return add_inductive(env, d.name, d.univ_params, d.type, d.info.nparams,
                             list(d.info.ctors))
    _check_closed(d, d.type, d.value)
    tc = TypeChecker(env, univ_params=d.univ_params)
    tc.ensure_sort(tc.infer(d.type, False))
    if d.kind == DEFINITION:
        if d.value is None:
            raise KernelError(f"definition '{d.name}' has no value")
        tc.check(d.value, d.type)
    elif d.kind == AXIOM:
        if d.value is not None:
            raise KernelError(f"axiom '{d.name}' cannot have a value")
    else:
        raise KernelError(f"'{d.name}': declarations of kind {d.kind} are created by the kernel only")
    return env.add(Declaration(d.name, tuple(d.univ_params), d.type, d.kind, d.value))


def referenced_constants(env: Environment, d: Declaration) -> set[str]:
    out: set[str] = set()
    for t in (d.type, d.value):
        if t is not None:
            out |= {s.name for s in subterms(t) if isinstance(s, Const)}
    if d.kind == INDUCTIVE:
        out |= set(d.info.constructors) | {d.info.recursor}
    elif d.kind in (CONSTRUCTOR,):
        out.add(d.info)
    elif d.kind == RECURSOR:
        out.add(d.info.inductive)
        for rule in d.info.rules.rules.values():
            out |= {s.name for s in subterms(rule.rhs) if isinstance(s, Const)}
    out.discard(d.name)
    return out


def collect_axioms(env: Environment, name: str) -> list[str]:
    """Axioms and HIT path-rule constants reachable from `name`, sorted."""
    env[name]
    seen: set[str] = set()
    found: set[str] = set()
    stack = [name]
    while stack:
        n = stack.pop()
        if n in seen:
            continue
        seen.add(n)
        d = env[n]
        if d.kind == AXIOM or d.axiom_like:
            found.add(n)
        stack.extend(referenced_constants(env, d) - seen)
    return sorted(found)
