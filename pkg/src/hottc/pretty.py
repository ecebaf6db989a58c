"""Render kernel terms in surface-like syntax for reports and diagnostics."""

from __future__ import annotations

from . import level as lv
from .term import (
    EXPLICIT, IMPLICIT, INST, App, Const, FVar, Lam, Meta, Pi, Sort, Term, Var, get_app,
)

_OPEN = {EXPLICIT: "(", IMPLICIT: "{", INST: "["}
_CLOSE = {EXPLICIT: ")", IMPLICIT: "}", INST: "]"}


def _fresh(name: str, used: list[str]) -> str:
    if name in ("", "_"):
        name = "x"
    if name not in used:
        return name
    i = 1
    while f"{name}_{i}" in used:
        i += 1
    return f"{name}_{i}"


def pp(t: Term, levels: bool = False) -> str:
    return _pp(t, [], levels, 0)


def _sort(l: lv.Level) -> str:
    return "Type" + (".{" + str(l) + "}")


# precedence: 0 = binder/arrow, 1 = application, 2 = atom
def _pp(t: Term, names: list[str], levels: bool, prec: int) -> str:
    def paren(s: str, p: int) -> str:
        return f"({s})" if p < prec else s

    match t:
        case Var(idx=i):
            return names[-1 - i] if i < len(names) else f"#{i}"
        case FVar(name=n):
            return n
        case Meta(id=i):
            return f"?m{i}"
        case Sort(level=l):
            return _sort(l)
        case Const(name=n, levels=ls):
            if levels and ls:
                return n + ".{" + " ".join(_lvl_arg(l) for l in ls) + "}"
            return n
        case App():
            f, args = get_app(t)
            parts = [_pp(f, names, levels, 2)] + [_pp(a, names, levels, 2) for a in args]
            return paren(" ".join(parts), 1)
        case Lam():
            binders = []
            body: Term = t
            ns = list(names)
            while isinstance(body, Lam):
                n = _fresh(body.name, ns)
                binders.append(f"{_OPEN[body.vis]}{n} : {_pp(body.dom, ns, levels, 0)}{_CLOSE[body.vis]}")
                ns.append(n)
                body = body.body
            return paren(f"λ {' '.join(binders)}, {_pp(body, ns, levels, 0)}", 0)
        case Pi():
            if t.vis == EXPLICIT and t.body.lbr == 0 or (t.vis == EXPLICIT and not _mentions0(t.body)):
                dom = _pp(t.dom, names, levels, 1)
                cod = _pp(t.body, names + ["_"], levels, 0)
                return paren(f"{dom} → {cod}", 0)
            n = _fresh(t.name, names)
            return paren(
                f"Π {_OPEN[t.vis]}{n} : {_pp(t.dom, names, levels, 0)}{_CLOSE[t.vis]}, "
                f"{_pp(t.body, names + [n], levels, 0)}",
                0,
            )
    return repr(type(t))


def _lvl_arg(l: lv.Level) -> str:
    s = str(l)
    return f"({s})" if " " in s or "+" in s else s


def _mentions0(t: Term) -> bool:
    def walk(t: Term, d: int) -> bool:
        if t.lbr <= d:
            return False
        match t:
            case Var(idx=i):
                return i == d
            case App():
                return walk(t.fn, d) or walk(t.arg, d)
            case Lam() | Pi():
                return walk(t.dom, d) or walk(t.body, d + 1)
        return False

    return walk(t, 0)
