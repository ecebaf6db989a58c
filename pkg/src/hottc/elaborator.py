"""Elaboration of surface declarations into kernel declarations.

Metavariables are closed: a hole in local context Γ is represented as
`?m Γ`, the meta applied to the context's free variables, and its
assignment is a lambda over Γ. Unification is first-order with the
pattern rule; anything beyond it is postponed and, if still stuck at the
end of the declaration, reported as unsupported higher-order unification.
Universe metavariables that stay unconstrained are generalized into fresh
universe parameters.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

from . import level as lv
from .env import AXIOM, DEFINITION, Declaration, Environment
from .errors import (
    CoercionError, ElabError, HigherOrderUnsupported, HottError, InstanceDepthError,
    InstanceError, TypeMismatch, UnificationError, UnknownConstant,
)
from .inductives import add_inductive
from .kernel import TypeChecker, check_declaration
from .level import Level, LMeta, LParam
from .pretty import pp
from .syntax import (
    Binder, SApp, SExplicit, SHole, SLam, SPi, SSort, STerm, SurfaceDecl, SVar, desugar_decl,
)
from .term import (
    EXPLICIT, IMPLICIT, INST, App, Const, FVar, Lam, Meta, Pi, Sort, Term, abstract, get_app,
    get_app_fn, head_beta, instantiate, instantiate1, mk_app, mk_lambda, mk_pi, replace, subterms,
    F_META,
)

DEFAULT_MAX_CLASS_DEPTH = 32


@dataclass
class MetaDecl:
    id: int
    ctx: list[FVar]
    local_type: Term  # the type in terms of ctx
    type: Term  # closed: Π ctx, local_type
    kind: str = "natural"  # natural | hole | implicit | inst
    span: Optional[tuple[int, int]] = None


@dataclass
class Options:
    max_class_depth: int = DEFAULT_MAX_CLASS_DEPTH
    fuel: Optional[int] = None


class Unifier(TypeChecker):
    """Kernel conversion extended with metavariable assignment."""

    def __init__(self, env: Environment, el: "Elaborator"):
        super().__init__(env, fuel=None)
        self.el = el
        self.frozen_heads: frozenset = frozenset()

    def _cacheable(self, t: Term) -> bool:
        return not t.flags & F_META

    def _meta_head(self, t: Term) -> Optional[Term]:
        h, args = get_app(t)
        v = self.el.massign.get(h.id)
        if v is None:
            return None
        return mk_app(v, args)

    def _infer_meta(self, t: Meta) -> Term:
        return self.el.metas[t.id].type

    def _check_level(self, l: Level) -> None:
        pass

    def level_eq(self, a: Level, b: Level) -> bool:
        return self.el.unify_levels(a, b)

    def _tentative(self, fn: Callable[[], bool]) -> bool:
        return self.el.tentative(fn)

    def _meta_def_eq(self, t: Term, u: Term) -> Optional[bool]:
        if not (t.flags & F_META or u.flags & F_META):
            return None
        return self.el.flex_eq(t, u)

    def _delta_decl(self, t: Term):
        d = super()._delta_decl(t)
        if d is not None and d.name in self.frozen_heads:
            return None
        return d

    def unfold_definition(self, t: Term) -> Optional[Term]:
        f = get_app_fn(t)
        if isinstance(f, Const) and f.name in self.frozen_heads:
            return None
        return super().unfold_definition(t)


class Elaborator:
    """Elaboration state for one declaration (or directive)."""

    def __init__(self, env: Environment, options: Optional[Options] = None,
                 univ_params: Sequence[str] = ()):
        self.env = env
        self.opts = options or Options()
        self.u = Unifier(env, self)
        self.metas: dict[int, MetaDecl] = {}
        self.massign: dict[int, Term] = {}
        self.lassign: dict[int, Level] = {}
        self.lmeta_count = 0
        self.trail: list[tuple[str, int]] = []
        self.postponed: list[tuple[Term, Term]] = []
        self.lpostponed: list[tuple[Level, Level]] = []
        self.pending_inst: list[int] = []
        self.ctx: list[FVar] = []
        self.univ_params: list[str] = list(univ_params)
        self.span: Optional[tuple[int, int]] = None
        self._dom_cache: dict[tuple, list[Term]] = {}

    # -- metavariables ---------------------------------------------------------

    def new_meta(self, ty: Term, kind: str = "natural") -> Term:
        mid = len(self.metas)
        ctx = list(self.ctx)
        out = abstract(ty, ctx)
        for fv, dom in zip(reversed(ctx), reversed(self._ctx_domains(ctx))):
            out = Pi(fv.name, dom, out, fv.vis)
        self.metas[mid] = MetaDecl(mid, ctx, ty, out, kind, self.span)
        if kind == "inst":
            self.pending_inst.append(mid)
        return mk_app(Meta(mid), ctx)

    def _ctx_domains(self, ctx: list[FVar]) -> list[Term]:
        # binder types of ctx abstracted over their predecessors, cached by prefix
        key = tuple(fv.uid for fv in ctx)
        doms = self._dom_cache.get(key)
        if doms is None:
            doms = self._ctx_domains(ctx[:-1]) + [abstract(ctx[-1].type, ctx[:-1])] if ctx else []
            self._dom_cache[key] = doms
        return doms

    def new_level(self) -> Level:
        self.lmeta_count += 1
        return LMeta(self.lmeta_count)

    def new_type_meta(self) -> Term:
        return self.new_meta(Sort(self.new_level()))

    def _assign(self, mid: int, val: Term) -> None:
        self.massign[mid] = val
        self.trail.append(("m", mid))

    def _lassign(self, mid: int, val: Level) -> None:
        self.lassign[mid] = val
        self.trail.append(("l", mid))

    def tentative(self, fn: Callable[[], bool]) -> bool:
        mark = (len(self.trail), len(self.postponed), len(self.lpostponed))
        try:
            ok = fn()
        except (ElabError, TypeMismatch) as e:
            if isinstance(e, (InstanceDepthError, HigherOrderUnsupported)):
                raise
            ok = False
        if not ok:
            self._undo(mark)
        return ok

    def _undo(self, mark) -> None:
        n, np_, nl = mark
        while len(self.trail) > n:
            kind, mid = self.trail.pop()
            if kind == "m":
                del self.massign[mid]
            else:
                del self.lassign[mid]
        del self.postponed[np_:]
        del self.lpostponed[nl:]

    def unify(self, t: Term, u: Term) -> bool:
        return self.tentative(lambda: self.u.is_def_eq(t, u))

    # -- instantiation ---------------------------------------------------------

    def inst_level(self, l: Level) -> Level:
        if not lv.has_meta(l):
            return l

        def fn(x: Level):
            if isinstance(x, LMeta):
                v = self.lassign.get(x.id)
                return None if v is None else self.inst_level(v)
            return None

        return lv.replace(l, fn)

    def instantiate_metas(self, t: Term) -> Term:
        if not t.flags & F_META:
            return t

        def fn(s: Term, depth: int) -> Optional[Term]:
            if not s.flags & F_META:
                return s
            if isinstance(s, Sort):
                return Sort(self.inst_level(s.level))
            if isinstance(s, Const):
                return Const(s.name, [self.inst_level(l) for l in s.levels])
            if isinstance(s, (App, Meta)):
                h, args = get_app(s)
                if isinstance(h, Meta):
                    v = self.massign.get(h.id)
                    if v is not None:
                        return self.instantiate_metas(head_beta(mk_app(v, args)))
                    if not args:
                        return s
                    return mk_app(h, [self.instantiate_metas(a) for a in args])
            return None

        return replace(t, fn)

    # -- level unification -----------------------------------------------------

    def _single_meta(self, l: Level) -> Optional[tuple[int, int]]:
        c, items = lv.normal_atoms(l)
        if c is None and len(items) == 1 and items[0][0][0] == "m":
            return items[0][0][1], items[0][1]
        return None

    @staticmethod
    def _sub_level(l: Level, k: int) -> Optional[Level]:
        c, items = lv.normal_atoms(l)
        if any(off < k for _, off in items):
            return None
        if c is not None and c < k:
            return None
        parts = []
        if c is not None:
            parts.append(lv.succ(lv.ZERO, c - k))
        for (kind, key), off in items:
            base = LParam(key) if kind == "p" else LMeta(key)
            parts.append(lv.succ(base, off - k))
        if not parts:
            return lv.succ(lv.ZERO, 0) if c is None else lv.ZERO
        return lv.normalize(lv.lmax(*parts))

    def _level_metas(self, l: Level) -> set[int]:
        _, items = lv.normal_atoms(l)
        return {key for (kind, key), _ in items if kind == "m"}

    def unify_levels(self, a: Level, b: Level) -> bool:
        a, b = self.inst_level(a), self.inst_level(b)
        if lv.is_equiv(a, b):
            return True
        if not lv.has_meta(a) and not lv.has_meta(b):
            return False
        for x, y in ((a, b), (b, a)):
            sm = self._single_meta(x)
            if sm is None:
                continue
            mid, k = sm
            val = self._sub_level(y, k)
            if val is not None and mid not in self._level_metas(val):
                self._lassign(mid, val)
                return True
            if not lv.has_meta(y) and val is None:
                return False
        self.lpostponed.append((a, b))
        return True

    # -- term unification --------------------------------------------------------

    def _flex(self, t: Term) -> Optional[Meta]:
        h = get_app_fn(t)
        if isinstance(h, Meta) and h.id not in self.massign:
            return h
        return None

    def flex_eq(self, t: Term, u: Term) -> Optional[bool]:
        if isinstance(t, App) and isinstance(get_app_fn(t), Lam):
            t = head_beta(t)
        if isinstance(u, App) and isinstance(get_app_fn(u), Lam):
            u = head_beta(u)
        for x in (t, u):
            h = get_app_fn(x)
            if isinstance(h, Meta) and h.id in self.massign:
                return None
        ft, fu = self._flex(t), self._flex(u)
        if ft is None and fu is None:
            return None
        if ft is not None and fu is not None and ft.id == fu.id:
            ta, ua = get_app(t)[1], get_app(u)[1]
            if len(ta) == len(ua) and self.tentative(
                    lambda: all(self.u.is_def_eq(x, y) for x, y in zip(ta, ua))):
                return True
        if (ft is None) != (fu is None):
            # eta first: λ x, ?m x =?= ?m must not trip the occurs check
            flex, rigid = (t, u) if ft is not None else (u, t)
            if isinstance(rigid, Lam) and self._mentions_meta(rigid, (ft or fu).id):
                return self.u._eta(rigid, flex)
        if ft is not None:
            r = self._try_assign(t, u)
            if r is not None:
                return r
        if fu is not None:
            r = self._try_assign(u, t)
            if r is not None:
                return r
        if ft is not None and fu is None or fu is not None and ft is None:
            rigid = u if ft is not None else t
            w = self.u.whnf(rigid)
            if w is not rigid and w != rigid:
                return self.u.is_def_eq(t if ft is not None else w, w if ft is not None else u)
        self.postponed.append((t, u))
        return True

    def _mentions_meta(self, t: Term, mid: int) -> bool:
        return self._occurs(mid, self.instantiate_metas(t))

    def _try_assign(self, flex: Term, other: Term) -> Optional[bool]:
        """Pattern rule. None when flex is not a pattern; otherwise success or failure."""
        m, args = get_app(flex)
        if not all(isinstance(a, FVar) for a in args):
            return None
        other = self.instantiate_metas(other)
        if self._occurs(m.id, other):
            w = self.instantiate_metas(self.u.whnf(other))
            if self._occurs(m.id, w):
                return w == flex or None if get_app_fn(w) == m else False
            other = w
        allowed = {a.uid for a in args}
        if other.has_fvar and not {s.uid for s in subterms(other) if isinstance(s, FVar)} <= allowed:
            other = self._prune(other, allowed)
            if other is None:
                return False
        decl = self.metas[m.id]
        if len(args) == len(decl.ctx) and all(a.uid == c.uid for a, c in zip(args, decl.ctx)):
            # the common case: the meta applied to its own context
            ys, expected, val = decl.ctx, decl.local_type, other
        else:
            ys, expected = self._open_meta_type(decl.type, args)
            if ys is None:
                return False
            val = self._abstract_pattern(other, args, ys)
        if val.has_fvar and any(isinstance(s, FVar) and s.uid not in {y.uid for y in ys}
                                for s in subterms(val)):
            return False
        self._assign(m.id, self._lambda_over(decl.type, ys, val))
        try:
            oty = self.u.infer(other)
        except HottError:
            return False
        return self.u.is_def_eq(oty, expected)

    @staticmethod
    def _lambda_over(mtype: Term, ys: list[FVar], body: Term) -> Term:
        # the binder types of ys, abstracted, are the domains of the closed meta type
        doms = []
        t = mtype
        for _ in ys:
            if not isinstance(t, Pi):
                return mk_lambda(ys, body)
            doms.append(t.dom)
            t = t.body
        out = abstract(body, ys)
        for y, dom in zip(reversed(ys), reversed(doms)):
            out = Lam(y.name, dom, out, y.vis)
        return out

    def _abstract_pattern(self, other: Term, args: Sequence[FVar], ys: list[FVar]) -> Term:
        val = instantiate(abstract(other, args), ys)
        uids = [a.uid for a in args]
        if len(set(uids)) == len(uids) or other.has_meta:
            return val
        # a repeated argument: the rightmost copy takes the occurrences unless
        # that is ill-typed and giving them to the leftmost copy is not
        first: list[FVar] = []
        seen: set[int] = set()
        for a in args:
            first.append(a if a.uid not in seen else FVar("_", a.type))
            seen.add(a.uid)
        def well_typed(t: Term) -> bool:
            try:
                self.u.infer(mk_lambda(ys, t), False)
                return True
            except HottError:
                return False

        if well_typed(val):
            return val
        alt = instantiate(abstract(other, first), ys)
        return alt if well_typed(alt) else val

    def _open_meta_type(self, mtype: Term, args: Sequence[Term]):
        # peel binders without substituting into the whole remaining body each time
        ys: list[FVar] = []
        ty, tpend = mtype, []
        ety, epend = mtype, []
        for a in args:
            if not isinstance(ty, Pi):
                ty, tpend = self.u.whnf(instantiate(ty, tpend)), []
                if not isinstance(ty, Pi):
                    return None, None
            if not isinstance(ety, Pi):
                ety, epend = self.u.whnf(instantiate(ety, epend)), []
            y = FVar(ty.name if ty.name not in ("", "_") else "x", instantiate(ty.dom, tpend), ty.vis)
            ys.append(y)
            ty, ety = ty.body, ety.body
            tpend.append(y)
            epend.append(a)
        return ys, instantiate(ety, epend)

    def _prune(self, t: Term, allowed: set[int]) -> Optional[Term]:
        """Make t mention only allowed fvars by restricting metas applied to others."""
        changed = True
        while changed:
            changed = False
            bad = [s for s in subterms(t) if isinstance(s, FVar) and s.uid not in allowed]
            if not bad:
                return t
            for s in subterms(t):
                h, args = get_app(s)
                if not (isinstance(h, Meta) and h.id not in self.massign and args):
                    continue
                if all(isinstance(a, FVar) for a in args) and any(a.uid not in allowed for a in args):
                    decl = self.metas[h.id]
                    ys, _ = self._open_meta_type(decl.type, args)
                    if ys is None:
                        return None
                    keep = [y for y, a in zip(ys, args) if a.uid in allowed]
                    keep_ids = {y.uid for y in keep}
                    # the restricted meta's type must not depend on dropped variables
                    old_ctx = self.ctx
                    res_ty = instantiate(abstract(self._meta_result(decl.type, ys), ys), ys)
                    deps = [y for y in ys if y.uid not in keep_ids]
                    if any(_mentions(res_ty, d) for d in deps) or any(
                            _mentions(y.type, d) for y in keep for d in deps):
                        return None
                    self.ctx = keep
                    new = self.new_meta(res_ty, decl.kind)
                    self.ctx = old_ctx
                    self._assign(h.id, mk_lambda(ys, new))
                    t = self.instantiate_metas(t)
                    changed = True
                    break
        return None

    def _meta_result(self, mtype: Term, ys: list[FVar]) -> Term:
        ty = mtype
        for y in ys:
            if not isinstance(ty, Pi):
                ty = self.u.whnf(ty)
            ty = instantiate1(ty.body, y)
        return ty

    def _occurs(self, mid: int, t: Term) -> bool:
        if not t.flags & F_META:
            return False
        return any(isinstance(s, Meta) and s.id == mid for s in subterms(t))

    # -- postponed constraints and instances -------------------------------------

    def _retry_postponed(self) -> bool:
        progress = False
        if self.postponed:
            todo, self.postponed = self.postponed, []
            for t, u in todo:
                t2, u2 = self.instantiate_metas(t), self.instantiate_metas(u)
                before = len(self.postponed)
                if not self.unify(t2, u2):
                    raise UnificationError(f"cannot unify {pp(t2)} with {pp(u2)}", self.span)
                if len(self.postponed) == before or (t2, u2) not in self.postponed[before:]:
                    if (t2, u2) != (t, u) or len(self.postponed) == before:
                        progress = True
        if self.lpostponed:
            todo_l, self.lpostponed = self.lpostponed, []
            for a, b in todo_l:
                a2, b2 = self.inst_level(a), self.inst_level(b)
                before = len(self.lpostponed)
                if not self.unify_levels(a2, b2):
                    raise UnificationError(f"universe mismatch: {a2} vs {b2}", self.span)
                if len(self.lpostponed) == before:
                    progress = True
        return progress

    def _synth_pending(self, only_ground: bool = False) -> bool:
        progress = False
        for mid in list(self.pending_inst):
            if mid in self.massign:
                self.pending_inst.remove(mid)
                continue
            decl = self.metas[mid]
            goal = self.instantiate_metas(decl.local_type)
            if only_ground and _has_term_meta(goal):
                continue
            old_ctx, old_span = self.ctx, self.span
            self.ctx, self.span = list(decl.ctx), decl.span
            try:
                val = self.synth(goal, 1)
            finally:
                self.ctx, self.span = old_ctx, old_span
            if not self.unify(mk_app(Meta(mid), decl.ctx), val):
                raise InstanceError(f"instance {pp(val)} does not fit goal {pp(goal)}", decl.span)
            self.pending_inst.remove(mid)
            progress = True
        return progress

    def _level_last_resort(self) -> bool:
        progress = False
        todo, self.lpostponed = self.lpostponed, []
        for a, b in todo:
            a, b = self.inst_level(a), self.inst_level(b)
            if lv.is_equiv(a, b):
                continue
            for x, y in ((a, b), (b, a)):
                c, items = lv.normal_atoms(x)
                metas = [key for (kind, key), off in items if kind == "m" and off == 0]
                others = [it for it in items if it[0][0] != "m"]
                if metas and len(metas) == len(items) and c is None and not others:
                    if not any(m in self._level_metas(y) for m in metas):
                        for m in metas:
                            self._lassign(m, y)
                        progress = True
                        break
            else:
                self.lpostponed.append((a, b))
                continue
            if not lv.is_equiv(self.inst_level(a), self.inst_level(b)):
                self.lpostponed.append((a, b))
        return progress

    def settle(self) -> None:
        """Best-effort progress without reporting: used between a type and its value."""
        for _ in range(100):
            if not (self._retry_postponed() or self._synth_pending(only_ground=True)):
                return

    def solve_all(self) -> None:
        for _ in range(10_000):
            if self._retry_postponed():
                continue
            if self._synth_pending(only_ground=True):
                continue
            if self._synth_pending():
                continue
            if self.lpostponed and self._level_last_resort():
                continue
            break
        if self.postponed:
            t, u = self.postponed[0]
            t, u = self.instantiate_metas(t), self.instantiate_metas(u)
            raise HigherOrderUnsupported(
                f"requires higher-order unification — unsupported: {pp(t)} =?= {pp(u)}", self.span)
        if self.lpostponed:
            a, b = self.lpostponed[0]
            raise UnificationError(f"cannot solve universe constraint {self.inst_level(a)} = "
                                   f"{self.inst_level(b)}", self.span)

    # -- instance resolution -----------------------------------------------------

    def _class_head(self, t: Term) -> Optional[str]:
        for _ in range(64):
            h = get_app_fn(t)
            if isinstance(h, Const) and self.env.is_class(h.name):
                return h.name
            w = self.u.whnf_core(t)
            if w is t or w == t:
                w = self.u.unfold_definition(t)
                if w is None:
                    return None
            t = w
        return None

    def _result_class(self, ty: Term) -> Optional[str]:
        while True:
            if isinstance(ty, Pi):
                ty = ty.body
                continue
            break
        h = get_app_fn(ty)
        if isinstance(h, Const) and self.env.is_class(h.name):
            return h.name
        return None

    def synth(self, goal: Term, depth: int) -> Term:
        """Depth-first backward chaining; locals before globals (most recent first)."""
        if depth > self.opts.max_class_depth:
            raise InstanceDepthError(
                f"maximum class-instance resolution depth ({self.opts.max_class_depth}) reached "
                f"while solving {pp(goal)}", self.span)
        g = self.u.whnf_core(self.instantiate_metas(goal))
        if not isinstance(g, Pi) and self._class_head(g) is None:
            w = self.u.whnf(g)
            if isinstance(w, Pi):
                g = w
        if isinstance(g, Pi):
            fv = FVar(g.name, g.dom, g.vis)
            self.ctx.append(fv)
            try:
                body = self.synth(instantiate1(g.body, fv), depth)
            finally:
                self.ctx.pop()
            return mk_lambda([fv], body)
        cls = self._class_head(g)
        if cls is None:
            raise InstanceError(f"'{pp(g)}' is not a class", self.span)
        tried: list[str] = []
        cands: list[Term] = []
        for fv in reversed(self.ctx):
            if self._result_class(self.instantiate_metas(fv.type)) is not None:
                cands.append(fv)
        for name in self.env.instances():
            cands.append(Const(name, [self.new_level() for _ in self.env[name].univ_params]))
        for c in cands:
            tried.append(c.name)
            result: list[Term] = []

            def attempt(c=c) -> bool:
                r = self._apply_instance(c, g, depth)
                if r is None:
                    return False
                result.append(r)
                return True

            if self.tentative(attempt):
                return result[0]
        raise InstanceError(
            f"failed to synthesize instance for goal {pp(g)}; tried: {', '.join(tried) or 'none'}",
            self.span)

    def _apply_instance(self, c: Term, goal: Term, depth: int) -> Optional[Term]:
        ty = self.u.infer(c)
        t = c
        subgoals: list[tuple[Term, Term]] = []
        while True:
            h = get_app_fn(ty)
            if isinstance(h, Const) and self.env.is_class(h.name):
                break
            w = ty if isinstance(ty, Pi) else self.u.whnf(ty)
            if not isinstance(w, Pi):
                break
            m = self.new_meta(w.dom)
            if w.vis == INST:
                subgoals.append((m, w.dom))
            t = App(t, m)
            ty = instantiate1(w.body, m)
        frozen = self.u.frozen_heads
        self.u.frozen_heads = frozenset(n for n in (self._class_head_syntactic(goal),) if n)
        try:
            ok = self.u.is_def_eq(ty, goal)
        finally:
            self.u.frozen_heads = frozen
        if not ok:
            return None
        for m, dom in subgoals:
            if self._flex(self.instantiate_metas(m)) is None:
                continue
            val = self.synth(self.instantiate_metas(dom), depth + 1)
            if not self.u.is_def_eq(m, val):
                return None
        return t

    def _class_head_syntactic(self, t: Term) -> Optional[str]:
        h = get_app_fn(t)
        return h.name if isinstance(h, Const) else None

    # -- coercions ----------------------------------------------------------

    def _coercion(self, ty: Term) -> Optional[str]:
        t = self.instantiate_metas(ty)
        for _ in range(64):
            h = get_app_fn(t)
            if isinstance(h, Const):
                c = self.env.coercion_for(h.name)
                if c is not None:
                    return c
            w = self.u.whnf_core(t)
            if w == t:
                w = self.u.unfold_definition(t)
                if w is None:
                    return None
            t = w
        return None

    def coerce(self, t: Term, ty: Term, expected: Optional[Term]) -> Optional[Term]:
        name = self._coercion(ty)
        if name is None:
            return None
        d = self.env[name]
        f = Const(name, [self.new_level() for _ in d.univ_params])
        fty = self.u.infer(f)
        applied = False
        while True:
            w = self.u.whnf(fty)
            if not isinstance(w, Pi):
                return None
            if w.vis != EXPLICIT or (applied is False and False):
                m = self.new_meta(w.dom, "inst" if w.vis == INST else "implicit")
                f, fty = App(f, m), instantiate1(w.body, m)
                continue
            if not self.unify(ty, w.dom):
                return None
            f, fty = App(f, t), instantiate1(w.body, t)
            break
        if expected is not None:
            f, fty = self._trailing(f, fty, expected)
            if not self.unify(fty, expected):
                return None
        return f

    # -- elaboration ------------------------------------------------------------

    def error(self, msg: str, cls=ElabError):
        raise cls(msg, self.span)

    def lookup_local(self, name: str) -> Optional[FVar]:
        for fv in reversed(self.ctx):
            if fv.name == name:
                return fv
        return None

    def _level(self, l: Optional[Level]) -> Level:
        if l is None:
            return self.new_level()
        for p in sorted(lv.params(l)):
            if p not in self.univ_params:
                self.univ_params.append(p)
        return l

    def _const(self, name: str, levels) -> Term:
        d = self.env.get(name)
        if d is None:
            self.error(f"unknown identifier '{name}'", UnknownConstant)
        if levels is None:
            ls = [self.new_level() for _ in d.univ_params]
        else:
            if len(levels) != len(d.univ_params):
                self.error(f"'{name}' expects {len(d.univ_params)} universe arguments, got {len(levels)}")
            ls = [self._level(l) for l in levels]
        return Const(name, ls)

    def infer(self, t: Term) -> Term:
        return self.u.infer(t)

    def whnf(self, t: Term) -> Term:
        return self.u.whnf(t)

    def _is_implicit_pi(self, t: Optional[Term]) -> bool:
        if t is None:
            return False
        w = self.whnf(self.instantiate_metas(t))
        return isinstance(w, Pi) and w.vis != EXPLICIT

    def _trailing(self, f: Term, fty: Term, expected: Optional[Term]) -> tuple[Term, Term]:
        if self._is_implicit_pi(expected):
            return f, fty
        while True:
            w = fty if isinstance(fty, Pi) else self.whnf(fty)
            if not isinstance(w, Pi) or w.vis == EXPLICIT:
                return f, fty
            m = self.new_meta(w.dom, "inst" if w.vis == INST else "implicit")
            f, fty = App(f, m), instantiate1(w.body, m)

    def elab_type(self, s: STerm) -> tuple[Term, Level]:
        t = self.elab(s, None)
        return t, self.ensure_sort(self.infer(t), s)

    def ensure_sort(self, ty: Term, s=None) -> Level:
        w = self.whnf(self.instantiate_metas(ty))
        if isinstance(w, Sort):
            return w.level
        if self._flex(w) is not None:
            l = self.new_level()
            if self.unify(w, Sort(l)):
                return l
        self.error(f"type expected, got a term of type {pp(ty)}")

    def _no_auto_intro(self, s: STerm) -> bool:
        if isinstance(s, SLam):
            return s.binders[0].vis != EXPLICIT
        if isinstance(s, SHole):
            return True
        h = s
        while isinstance(h, SApp):
            h = h.fn
        return isinstance(h, SExplicit)

    def elab_check(self, s: STerm, expected: Optional[Term]) -> Term:
        if expected is None:
            return self.elab(s, None)
        old = self.span
        self.span = getattr(s, "span", None) or old
        try:
            if not self._no_auto_intro(s):
                w = self.whnf(self.instantiate_metas(expected))
                if isinstance(w, Pi) and w.vis != EXPLICIT:
                    fv = FVar(w.name, w.dom, w.vis)
                    self.ctx.append(fv)
                    try:
                        body = self.elab_check(s, instantiate1(w.body, fv))
                    finally:
                        self.ctx.pop()
                    # λ {x}, f x is just f
                    body_i = self.instantiate_metas(body)
                    if (isinstance(body_i, App) and isinstance(body_i.arg, FVar) and body_i.arg.uid == fv.uid
                            and not _mentions(body_i.fn, fv)):
                        return body_i.fn
                    return mk_lambda([fv], body)
            t = self.elab(s, expected)
            self.span = getattr(s, "span", None) or old
            ty = self.infer(t)
            if self.unify(ty, expected):
                return t
            if self.pending_inst:
                self._synth_pending(only_ground=True)
                if self.unify(ty, expected):
                    return t
            c = self.coerce(t, ty, expected)
            if c is not None:
                return c
            ty_i, ex_i = self.instantiate_metas(ty), self.instantiate_metas(expected)
            raise TypeMismatch(
                f"type mismatch: {pp(self.instantiate_metas(t))} has type {pp(ty_i)} "
                f"but is expected to have type {pp(ex_i)}", ex_i, ty_i, self.span)
        finally:
            self.span = old

    def elab(self, s: STerm, expected: Optional[Term]) -> Term:
        old = self.span
        self.span = getattr(s, "span", None) or old
        try:
            return self._elab(s, expected)
        finally:
            self.span = old

    def _elab(self, s: STerm, expected: Optional[Term]) -> Term:
        match s:
            case SVar() | SExplicit() | SApp():
                return self.elab_app(s, expected)
            case SSort(level=l):
                return Sort(self._level(l))
            case SHole():
                if expected is None:
                    expected = self.new_type_meta()
                return self.new_meta(expected, "hole")
            case SLam():
                return self.elab_lambda(s, expected)
            case SPi(binders=bs, body=body):
                fvs = self.elab_binders(bs)
                try:
                    b, _ = self.elab_type(body)
                finally:
                    del self.ctx[len(self.ctx) - len(fvs):]
                return mk_pi(fvs, b)
        self.error(f"unexpected surface term {type(s).__name__}")

    def elab_binders(self, bs: list[Binder]) -> list[FVar]:
        """Elaborate a telescope, pushing its variables onto the context."""
        fvs: list[FVar] = []
        try:
            for b in bs:
                self.span = b.span or self.span
                if b.type is None:
                    ty = self.new_type_meta()
                else:
                    ty, _ = self.elab_type(b.type)
                if b.vis == INST and self._result_class(self.whnf(self.instantiate_metas(ty))) is None \
                        and self._class_head(self.instantiate_metas(ty)) is None:
                    self.error(f"instance binder '{b.name}' must have a class type, got {pp(ty)}",
                               InstanceError)
                fv = FVar(b.name, ty, b.vis)
                fvs.append(fv)
                self.ctx.append(fv)
        except BaseException:
            del self.ctx[len(self.ctx) - len(fvs):]
            raise
        return fvs

    def elab_lambda(self, s: SLam, expected: Optional[Term]) -> Term:
        fvs: list[FVar] = []
        exp = expected
        try:
            for b in s.binders:
                w = None
                if exp is not None:
                    w = self.whnf(self.instantiate_metas(exp))
                    if not isinstance(w, Pi):
                        w = None
                # auto-intro implicit binders the lambda does not mention
                while w is not None and w.vis != EXPLICIT and b.vis == EXPLICIT:
                    fv = FVar(w.name, w.dom, w.vis)
                    fvs.append(fv)
                    self.ctx.append(fv)
                    exp = instantiate1(w.body, fv)
                    w = self.whnf(self.instantiate_metas(exp))
                    if not isinstance(w, Pi):
                        w = None
                self.span = b.span or self.span
                if b.type is not None:
                    ty, _ = self.elab_type(b.type)
                    if w is not None and not self.unify(w.dom, ty):
                        self.error(f"binder '{b.name}' has type {pp(ty)} but the expected type "
                                   f"requires {pp(self.instantiate_metas(w.dom))}", TypeMismatch)
                elif w is not None:
                    ty = w.dom
                else:
                    ty = self.new_type_meta()
                fv = FVar(b.name, ty, b.vis)
                fvs.append(fv)
                self.ctx.append(fv)
                exp = instantiate1(w.body, fv) if w is not None else None
            body = self.elab_check(s.body, exp)
        finally:
            del self.ctx[len(self.ctx) - len(fvs):]
        return mk_lambda(fvs, body)

    def _head(self, s: STerm) -> tuple[Term, bool]:
        if isinstance(s, SExplicit):
            fv = self.lookup_local(s.name)
            if fv is not None:
                return fv, True
            return self._const(s.name, s.levels), True
        if isinstance(s, SVar):
            fv = self.lookup_local(s.name) if s.levels is None else None
            if fv is not None:
                return fv, False
            return self._const(s.name, s.levels), False
        return self.elab(s, None), False

    def elab_app(self, s: STerm, expected: Optional[Term]) -> Term:
        args_s: list[STerm] = []
        h = s
        while isinstance(h, SApp):
            args_s.append(h.arg)
            h = h.fn
        args_s.reverse()
        f, explicit = self._head(h)
        fty = self.infer(f)
        if expected is not None and args_s:
            r = self._elab_app_expected_first(f, fty, args_s, explicit, expected)
            if r is not None:
                return r
        postponed: list[tuple[Term, STerm, Term]] = []
        i = 0
        while i < len(args_s):
            w = fty if isinstance(fty, Pi) else self.whnf(self.instantiate_metas(fty))
            if not isinstance(w, Pi) and postponed:
                self._flush_postponed(postponed)
                postponed = []
                continue
            if not isinstance(w, Pi):
                c = self.coerce(f, fty, None)
                if c is not None:
                    f, fty = c, self.infer(c)
                    continue
                self.error(f"function expected: {pp(self.instantiate_metas(f))} has type "
                           f"{pp(self.instantiate_metas(fty))}")
            if w.vis != EXPLICIT and not explicit:
                m = self.new_meta(w.dom, "inst" if w.vis == INST else "implicit")
                f, fty = App(f, m), instantiate1(w.body, m)
                continue
            a_s = args_s[i]
            i += 1
            if isinstance(a_s, SHole) and w.vis == INST:
                a = self.new_meta(w.dom, "inst")
            elif isinstance(a_s, SLam) and _has_term_meta(self.instantiate_metas(w.dom)):
                a = self.new_meta(w.dom)
                postponed.append((a, a_s, w.dom))
            else:
                a = self.elab_check(a_s, w.dom)
            f, fty = App(f, a), instantiate1(w.body, a)
        if not explicit:
            f, fty = self._trailing(f, fty, expected)
        if postponed:
            if expected is not None:
                self.unify(fty, expected)
            self._flush_postponed(postponed)
        return f

    def _elab_app_expected_first(self, f: Term, fty: Term, args_s: list[STerm], explicit: bool,
                                 expected: Term) -> Optional[Term]:
        """Lay out the whole spine with placeholders, unify its result type with
        the expected type, and only then elaborate the explicit arguments.

        Returns None (having added nothing) when the spine cannot be typed
        before the arguments are known.
        """
        mark_metas = len(self.metas)
        slots: list[tuple[Term, STerm, Term]] = []
        g, gty = f, fty
        i = 0
        while i < len(args_s):
            w = gty if isinstance(gty, Pi) else self.whnf(self.instantiate_metas(gty))
            if not isinstance(w, Pi):
                for k in range(mark_metas, len(self.metas)):
                    self.metas.pop(k, None)
                self.pending_inst = [k for k in self.pending_inst if k < mark_metas]
                return None
            if w.vis != EXPLICIT and not explicit:
                m = self.new_meta(w.dom, "inst" if w.vis == INST else "implicit")
            else:
                a_s = args_s[i]
                i += 1
                kind = "inst" if isinstance(a_s, SHole) and w.vis == INST else "natural"
                m = self.new_meta(w.dom, kind)
                if kind == "natural":
                    slots.append((m, a_s, w.dom))
            g, gty = App(g, m), instantiate1(w.body, m)
        if not explicit:
            g, gty = self._trailing(g, gty, expected)
        def match_expected(open_slots) -> bool:
            # a match that fixes an explicit argument is dropped: the argument
            # itself is the better source for it
            n_post = len(self.postponed)
            if not self.u.is_def_eq(self.instantiate_metas(gty), expected) or len(self.postponed) != n_post:
                return False
            return all(get_app_fn(self.instantiate_metas(m)) == get_app_fn(m) for m, _, _ in open_slots)

        self.tentative(lambda: match_expected(slots))
        postponed = []
        for m, a_s, dom in slots:
            if isinstance(a_s, SLam) and _has_term_meta(self.instantiate_metas(dom)):
                postponed.append((m, a_s, dom))
                continue
            a = self.elab_check(a_s, self.instantiate_metas(dom))
            if not self.unify(m, a):
                self.error(f"type mismatch: {pp(self.instantiate_metas(a))} does not fit "
                           f"{pp(self.instantiate_metas(m))}")
        if postponed:
            self.tentative(lambda: match_expected(postponed))
            self._flush_postponed(postponed)
        return g

    def _flush_postponed(self, postponed: list[tuple[Term, STerm, Term]]) -> None:
        for m, a_s, dom in postponed:
            a = self.elab_check(a_s, self.instantiate_metas(dom))
            if not self.unify(m, a):
                self.error(f"cannot use {pp(self.instantiate_metas(a))} here")

    # -- finishing ------------------------------------------------------------

    def finalize(self, terms: list[Term], generalize_from: int = 1) -> tuple[list[Term], list[str]]:
        """Solve remaining constraints, zonk, and generalize level metavariables.

        Level metas occurring in the first `generalize_from` terms become fresh
        universe parameters; any others are set to zero.
        """
        self.solve_all()
        out = [self.instantiate_metas(t) for t in terms]
        for t in out:
            for sub in subterms(t):
                if isinstance(sub, Meta) or (isinstance(sub, App) and isinstance(get_app_fn(sub), Meta)):
                    m = get_app_fn(sub)
                    decl = self.metas[m.id]
                    what = "instance" if decl.kind == "inst" else "metavariable"
                    raise ElabError(f"unsolved {what} of type "
                                    f"{pp(self.instantiate_metas(decl.local_type))}", decl.span or self.span)
        order: list[int] = []
        for t in out[:generalize_from]:
            for l in _levels_in_order(t):
                for (kind, key), _ in lv.normal_atoms(l)[1]:
                    if kind == "m" and key not in order:
                        order.append(key)
        used = set(self.univ_params)
        new_names = []
        for key in order:
            nm = _fresh_univ(used)
            used.add(nm)
            new_names.append(nm)
            self._lassign(key, LParam(nm))
        for t in out:
            for l in _levels_in_order(t):
                for (kind, key), _ in lv.normal_atoms(self.inst_level(l))[1]:
                    if kind == "m" and key not in self.lassign:
                        self._lassign(key, lv.ZERO)
        out = [self.instantiate_metas(t) for t in out]
        out = [_normalize_levels(t) for t in out]
        return out, self.univ_params + new_names


def _has_term_meta(t: Term) -> bool:
    return t.has_meta and any(isinstance(s, Meta) for s in subterms(t))


def _mentions(t: Term, fv: FVar) -> bool:
    return t.has_fvar and any(isinstance(s, FVar) and s.uid == fv.uid for s in subterms(t))


def _levels_in_order(t: Term) -> list[Level]:
    out: list[Level] = []

    def walk(t: Term) -> None:
        stack = [t]
        seen: set[int] = set()
        while stack:
            s = stack.pop()
            if id(s) in seen:
                continue
            seen.add(id(s))
            if isinstance(s, Sort):
                out.append(s.level)
            elif isinstance(s, Const):
                out.extend(s.levels)
            elif isinstance(s, App):
                stack.append(s.arg)
                stack.append(s.fn)
            elif isinstance(s, (Lam, Pi)):
                stack.append(s.body)
                stack.append(s.dom)

    walk(t)
    return out


def _fresh_univ(used: set[str]) -> str:
    i = 0
    while True:
        for base in ("u", "v", "w"):
            nm = base if i == 0 else f"{base}_{i}"
            if nm not in used:
                return nm
        i += 1


def _normalize_levels(t: Term) -> Term:
    def fn(s: Term, d: int) -> Optional[Term]:
        if isinstance(s, Sort):
            return Sort(lv.normalize(s.level))
        if isinstance(s, Const):
            return Const(s.name, [lv.normalize(l) for l in s.levels]) if s.levels else s
        return None

    return replace(t, fn)


# ---------------------------------------------------------------------------
# declarations


def elaborate_definition(env: Environment, d: SurfaceDecl, opts: Optional[Options] = None) -> Declaration:
    el = Elaborator(env, opts, d.univ_params)
    fvs = el.elab_binders(d.binders)
    if d.type is not None:
        el.span = d.type.span
        ty, _ = el.elab_type(d.type)
        el.settle()
    else:
        ty = el.new_type_meta()
    val = None
    if d.kind == "definition":
        el.span = d.value.span
        val = el.elab_check(d.value, ty)
    el.span = d.span
    full_ty = mk_pi(fvs, ty)
    terms = [full_ty] + ([mk_lambda(fvs, val)] if val is not None else [])
    out, univs = el.finalize(terms)
    kind = DEFINITION if d.kind == "definition" else AXIOM
    return Declaration(d.name, tuple(univs), out[0], kind, out[1] if val is not None else None)


def _check_no_explicit(ctor_ty: Term) -> bool:
    t = ctor_ty
    while isinstance(t, Pi):
        if t.vis == EXPLICIT:
            return False
        t = t.body
    return True


def elaborate_inductive(env: Environment, d: SurfaceDecl, opts: Optional[Options] = None):
    """Returns (name, univ_params, type, nparams, ctors) ready for the kernel."""
    el = Elaborator(env, opts, d.univ_params)
    params = el.elab_binders(d.binders)
    el.span = d.type.span
    ty, _ = el.elab_type(d.type)
    fam_ty = mk_pi(params, ty)
    # the family is a local while its constructors are elaborated
    fam = FVar(d.name, fam_ty, EXPLICIT)
    el.ctx.append(fam)
    ctor_types = []
    for c in d.ctors:
        el.span = c.span
        fvs = el.elab_binders(c.binders)
        try:
            cty, _ = el.elab_type(c.type)
        finally:
            del el.ctx[len(el.ctx) - len(fvs):]
        ctor_types.append(mk_pi(fvs, cty))
    el.ctx.pop()
    el.span = d.span
    el.solve_all()
    ctor_types = [el.instantiate_metas(c) for c in ctor_types]
    res = _result_sort(el, ty)
    if res is not None and lv.has_meta(el.inst_level(res)):
        # an unannotated result universe: as high as every argument and index
        levels = _binder_levels(el, ty, fam)
        for cty in ctor_types:
            levels.extend(_binder_levels(el, cty, fam))
        target = lv.normalize(lv.lmax(*levels)) if levels else lv.ZERO
        el.unify_levels(el.inst_level(res), target)
    closed = [mk_lambda([fam], mk_pi(params, c)) for c in ctor_types]
    out, univs = el.finalize([fam_ty] + closed)
    lvls = [LParam(u) for u in univs]
    head = Const(d.name, lvls)
    ctors = []
    for c, body in zip(d.ctors, out[1:]):
        cty = instantiate1(body.body, head)
        keep = _ctor_has_no_explicit(cty, len(params))
        ctors.append((c.name, _set_param_vis(cty, len(params), keep)))
    return d.name, tuple(univs), out[0], len(params), ctors


def _result_sort(el: Elaborator, ty: Term) -> Optional[Level]:
    t = el.instantiate_metas(ty)
    while True:
        w = el.whnf(t)
        if isinstance(w, Pi):
            fv = FVar(w.name, w.dom, w.vis)
            t = instantiate1(w.body, fv)
            continue
        if isinstance(w, Sort):
            return w.level
        return None


def _binder_levels(el: Elaborator, t: Term, fam: FVar) -> list[Level]:
    out = []
    while True:
        w = t if isinstance(t, Pi) else el.whnf(t)
        if not isinstance(w, Pi):
            return out
        if not _mentions(w.dom, fam):
            out.append(el.inst_level(el.ensure_sort(el.infer(w.dom))))
        t = instantiate1(w.body, FVar(w.name, w.dom, w.vis))


def _ctor_has_no_explicit(cty: Term, nparams: int) -> bool:
    t = cty
    for _ in range(nparams):
        t = t.body
    return _check_no_explicit(t)


def _set_param_vis(cty: Term, nparams: int, keep: bool) -> Term:
    if nparams == 0:
        return cty
    assert isinstance(cty, Pi)
    vis = cty.vis if keep else IMPLICIT
    return Pi(cty.name, cty.dom, _set_param_vis(cty.body, nparams - 1, keep), vis)


def coercion_source(env: Environment, name: str) -> Optional[str]:
    """Head constant of the first explicit argument's type."""
    t = env[name].type
    while isinstance(t, Pi):
        if t.vis == EXPLICIT:
            h = get_app_fn(t.dom)
            return h.name if isinstance(h, Const) else None
        t = t.body
    return None


def add_attribute(env: Environment, name: str, attr: str) -> Environment:
    if attr == "coercion":
        src = coercion_source(env, name)
        if src is None:
            raise CoercionError(f"'{name}' cannot be a coercion: its explicit argument has no head constant")
        return env.add_attribute(name, attr, src)
    if attr == "instance":
        t = env[name].type
        while isinstance(t, Pi):
            t = t.body
        h = get_app_fn(t)
        if not (isinstance(h, Const) and env.is_class(h.name)):
            raise InstanceError(f"'{name}' cannot be an instance: its type is not headed by a class")
    return env.add_attribute(name, attr)
