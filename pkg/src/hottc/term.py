"""Core terms in locally nameless form.

Bound variables are de Bruijn indices (`Var`); free locals are `FVar`s that
carry their own type, so the kernel never needs a separate context lookup.
Binder names and visibility are hints only: they take no part in equality
or hashing.
"""

from __future__ import annotations

import itertools
from typing import Callable, Iterable, Iterator, Sequence

from . import level as lv
from .level import Level

EXPLICIT = "explicit"
IMPLICIT = "implicit"
INST = "inst"

# flag bits
F_FVAR = 1
F_META = 2
F_LPARAM = 4


class Term:
    __slots__ = ("_hash", "lbr", "flags")

    def __eq__(self, other: object) -> bool:
        return self is other or (
            isinstance(other, Term) and self._hash == other._hash and _eq(self, other)
        )

    def __ne__(self, other: object) -> bool:
        return not self.__eq__(other)

    def __hash__(self) -> int:
        return self._hash

    @property
    def has_fvar(self) -> bool:
        return bool(self.flags & F_FVAR)

    @property
    def has_meta(self) -> bool:
        return bool(self.flags & F_META)

    @property
    def has_lparam(self) -> bool:
        return bool(self.flags & F_LPARAM)

    def __repr__(self) -> str:
        from .pretty import pp

        return pp(self)


class Var(Term):
    __slots__ = ("idx",)

    def __init__(self, idx: int):
        self.idx = idx
        self.lbr = idx + 1
        self.flags = 0
        self._hash = hash(("v", idx))


class Sort(Term):
    __slots__ = ("level",)

    def __init__(self, level: Level):
        self.level = level
        self.lbr = 0
        self.flags = (F_META if lv.has_meta(level) else 0) | (F_LPARAM if lv.has_param(level) else 0)
        self._hash = hash(("s", level))


class Const(Term):
    __slots__ = ("name", "levels")

    def __init__(self, name: str, levels: Sequence[Level] = ()):
        self.name = name
        self.levels = tuple(levels)
        self.lbr = 0
        f = 0
        for l in self.levels:
            if lv.has_meta(l):
                f |= F_META
            if lv.has_param(l):
                f |= F_LPARAM
        self.flags = f
        self._hash = hash(("c", name, self.levels))


class App(Term):
    __slots__ = ("fn", "arg")

    def __init__(self, fn: Term, arg: Term):
        self.fn = fn
        self.arg = arg
        self.lbr = max(fn.lbr, arg.lbr)
        self.flags = fn.flags | arg.flags
        self._hash = hash(("a", fn._hash, arg._hash))


class Lam(Term):
    __slots__ = ("name", "dom", "body", "vis")

    def __init__(self, name: str, dom: Term, body: Term, vis: str = EXPLICIT):
        self.name = name
        self.dom = dom
        self.body = body
        self.vis = vis
        self.lbr = max(dom.lbr, body.lbr - 1, 0)
        self.flags = dom.flags | body.flags
        self._hash = hash(("l", dom._hash, body._hash))


class Pi(Term):
    __slots__ = ("name", "dom", "body", "vis")

    def __init__(self, name: str, dom: Term, body: Term, vis: str = EXPLICIT):
        self.name = name
        self.dom = dom
        self.body = body
        self.vis = vis
        self.lbr = max(dom.lbr, body.lbr - 1, 0)
        self.flags = dom.flags | body.flags
        self._hash = hash(("p", dom._hash, body._hash))


_fvar_ids = itertools.count(1)


class FVar(Term):
    __slots__ = ("uid", "name", "type", "vis")

    def __init__(self, name: str, type: Term, vis: str = EXPLICIT):
        self.uid = next(_fvar_ids)
        self.name = name
        self.type = type
        self.vis = vis
        self.lbr = 0
        self.flags = F_FVAR
        self._hash = hash(("f", self.uid))


class Meta(Term):
    """Elaboration metavariable; its assignment is a closed term."""

    __slots__ = ("id",)

    def __init__(self, id: int):
        self.id = id
        self.lbr = 0
        self.flags = F_META
        self._hash = hash(("m", id))


def _eq(a: Term, b: Term) -> bool:
    # iterative on the spine/right spine to limit recursion depth
    while True:
        if a is b:
            return True
        if a._hash != b._hash or type(a) is not type(b):
            return False
        if isinstance(a, App):
            if not _eq(a.arg, b.arg):
                return False
            a, b = a.fn, b.fn
            continue
        if isinstance(a, (Lam, Pi)):
            if not _eq(a.dom, b.dom):
                return False
            a, b = a.body, b.body
            continue
        if isinstance(a, Var):
            return a.idx == b.idx
        if isinstance(a, Sort):
            return a.level == b.level
        if isinstance(a, Const):
            return a.name == b.name and a.levels == b.levels
        if isinstance(a, FVar):
            return a.uid == b.uid
        if isinstance(a, Meta):
            return a.id == b.id
        return False


def strict_key(t: Term) -> tuple:
    """Structural key that also records binder names and visibilities."""
    match t:
        case Var(idx=i):
            return ("v", i)
        case Sort(level=l):
            return ("s", str(l))
        case Const(name=n, levels=ls):
            return ("c", n, tuple(str(l) for l in ls))
        case App():
            f, args = get_app(t)
            return ("a", strict_key(f), tuple(strict_key(a) for a in args))
        case Lam() | Pi():
            return ("l" if isinstance(t, Lam) else "p", t.name, t.vis, strict_key(t.dom), strict_key(t.body))
        case FVar():
            return ("f", t.name)
        case Meta(id=i):
            return ("m", i)
    raise TypeError(t)


# ---------------------------------------------------------------------------
# spines


def mk_app(f: Term, args: Iterable[Term]) -> Term:
    for a in args:
        f = App(f, a)
    return f


def get_app(t: Term) -> tuple[Term, list[Term]]:
    args = []
    while isinstance(t, App):
        args.append(t.arg)
        t = t.fn
    args.reverse()
    return t, args


def get_app_fn(t: Term) -> Term:
    while isinstance(t, App):
        t = t.fn
    return t


def arrow(dom: Term, cod: Term) -> Pi:
    return Pi("_", dom, shift(cod, 1))


# ---------------------------------------------------------------------------
# substitution calculus


def shift(t: Term, k: int, cutoff: int = 0) -> Term:
    """Add k to every bound variable with index >= cutoff."""
    if k == 0 or t.lbr <= cutoff:
        return t
    cache: dict = {}

    def go(t: Term, c: int) -> Term:
        if t.lbr <= c:
            return t
        key = (id(t), c)
        r = cache.get(key)
        if r is not None:
            return r
        match t:
            case Var(idx=i):
                r = Var(i + k) if i >= c else t
            case App():
                r = App(go(t.fn, c), go(t.arg, c))
            case Lam():
                r = Lam(t.name, go(t.dom, c), go(t.body, c + 1), t.vis)
            case Pi():
                r = Pi(t.name, go(t.dom, c), go(t.body, c + 1), t.vis)
            case _:
                r = t
        cache[key] = r
        return r

    return go(t, cutoff)


def instantiate(t: Term, vals: Sequence[Term]) -> Term:
    """Substitute vals for the outermost len(vals) loose variables.

    vals are listed outermost-first: with n values, Var(i) for i < n becomes
    vals[n - 1 - i]; remaining loose variables are shifted down by n.
    """
    n = len(vals)
    if n == 0 or t.lbr == 0:
        return t
    cache: dict = {}

    def go(t: Term, d: int) -> Term:
        if t.lbr <= d:
            return t
        key = (id(t), d)
        r = cache.get(key)
        if r is not None:
            return r
        match t:
            case Var(idx=i):
                if i < d:
                    r = t
                elif i < d + n:
                    r = shift(vals[n - 1 - (i - d)], d)
                else:
                    r = Var(i - n)
            case App():
                r = App(go(t.fn, d), go(t.arg, d))
            case Lam():
                r = Lam(t.name, go(t.dom, d), go(t.body, d + 1), t.vis)
            case Pi():
                r = Pi(t.name, go(t.dom, d), go(t.body, d + 1), t.vis)
            case _:
                r = t
        cache[key] = r
        return r

    return go(t, 0)


def instantiate1(t: Term, val: Term) -> Term:
    return instantiate(t, (val,))


def abstract(t: Term, fvars: Sequence[FVar]) -> Term:
    """Replace fvars by bound variables; the last fvar becomes Var(0)."""
    if not fvars or not t.has_fvar:
        return t
    n = len(fvars)
    pos = {fv.uid: j for j, fv in enumerate(fvars)}
    cache: dict = {}

    def go(t: Term, d: int) -> Term:
        if not t.flags & F_FVAR:
            return t
        key = (id(t), d)
        r = cache.get(key)
        if r is not None:
            return r
        match t:
            case FVar(uid=u):
                j = pos.get(u)
                r = t if j is None else Var(d + n - 1 - j)
            case App():
                r = App(go(t.fn, d), go(t.arg, d))
            case Lam():
                r = Lam(t.name, go(t.dom, d), go(t.body, d + 1), t.vis)
            case Pi():
                r = Pi(t.name, go(t.dom, d), go(t.body, d + 1), t.vis)
            case _:
                r = t
        cache[key] = r
        return r

    return go(t, 0)


def replace_fvar(t: Term, fv: FVar, val: Term) -> Term:
    return instantiate(abstract(t, [fv]), [val])


def instantiate_lparams(t: Term, names: Sequence[str], levels: Sequence[Level]) -> Term:
    if not names or not t.has_lparam:
        return t
    subst = dict(zip(names, levels))
    cache: dict = {}

    def go(t: Term) -> Term:
        if not t.flags & F_LPARAM:
            return t
        r = cache.get(id(t))
        if r is not None:
            return r
        match t:
            case Sort(level=l):
                r = Sort(lv.instantiate(l, subst))
            case Const(name=n, levels=ls):
                r = Const(n, [lv.instantiate(l, subst) for l in ls])
            case App():
                r = App(go(t.fn), go(t.arg))
            case Lam():
                r = Lam(t.name, go(t.dom), go(t.body), t.vis)
            case Pi():
                r = Pi(t.name, go(t.dom), go(t.body), t.vis)
            case _:
                r = t
        cache[id(t)] = r
        return r

    return go(t)


def mk_pi(fvars: Sequence[FVar], body: Term) -> Term:
    out = abstract(body, fvars)
    for j in range(len(fvars) - 1, -1, -1):
        fv = fvars[j]
        out = Pi(fv.name, abstract(fv.type, fvars[:j]), out, fv.vis)
    return out


def mk_lambda(fvars: Sequence[FVar], body: Term) -> Term:
    out = abstract(body, fvars)
    for j in range(len(fvars) - 1, -1, -1):
        fv = fvars[j]
        out = Lam(fv.name, abstract(fv.type, fvars[:j]), out, fv.vis)
    return out


def head_beta(t: Term) -> Term:
    f, args = get_app(t)
    if not isinstance(f, Lam) or not args:
        return t
    i = 0
    while isinstance(f, Lam) and i < len(args):
        f = f.body
        i += 1
    return mk_app(instantiate(f, args[:i]), args[i:])


def replace(t: Term, fn: Callable[[Term, int], Term | None]) -> Term:
    """Generic bottom-up rewriting; fn(t, depth) returns a replacement or None."""
    cache: dict = {}

    def go(t: Term, d: int) -> Term:
        key = (id(t), d)
        r = cache.get(key)
        if r is not None:
            return r
        r = fn(t, d)
        if r is None:
            match t:
                case App():
                    f, a = go(t.fn, d), go(t.arg, d)
                    r = t if (f is t.fn and a is t.arg) else App(f, a)
                case Lam():
                    dm, b = go(t.dom, d), go(t.body, d + 1)
                    r = t if (dm is t.dom and b is t.body) else Lam(t.name, dm, b, t.vis)
                case Pi():
                    dm, b = go(t.dom, d), go(t.body, d + 1)
                    r = t if (dm is t.dom and b is t.body) else Pi(t.name, dm, b, t.vis)
                case _:
                    r = t
        cache[key] = r
        return r

    return go(t, 0)


def subterms(t: Term) -> Iterator[Term]:
    seen: set[int] = set()
    stack = [t]
    while stack:
        s = stack.pop()
        if id(s) in seen:
            continue
        seen.add(id(s))
        yield s
        match s:
            case App():
                stack.append(s.arg)
                stack.append(s.fn)
            case Lam() | Pi():
                stack.append(s.body)
                stack.append(s.dom)


def constants(t: Term) -> set[str]:
    return {s.name for s in subterms(t) if isinstance(s, Const)}


def fvars_of(t: Term) -> set[int]:
    if not t.has_fvar:
        return set()
    return {s.uid for s in subterms(t) if isinstance(s, FVar)}


def occurs_const(t: Term, name: str) -> bool:
    return any(isinstance(s, Const) and s.name == name for s in subterms(t))


def occurs_fvar(t: Term, fv: FVar) -> bool:
    if not t.has_fvar:
        return False
    return any(isinstance(s, FVar) and s.uid == fv.uid for s in subterms(t))


def levels_in(t: Term) -> list[Level]:
    out = []
    for s in subterms(t):
        if isinstance(s, Sort):
            out.append(s.level)
        elif isinstance(s, Const):
            out.extend(s.levels)
    return out
