"""Universe levels: zero, successor, max and named parameters.

Level metavariables (`LMeta`) only appear during elaboration; the kernel
never accepts them.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterable, Mapping, Union


class Level:
    __slots__ = ()

    def __str__(self) -> str:
        return show_level(self)

    def __repr__(self) -> str:
        return f"Level({show_level(self)})"


@dataclass(frozen=True, repr=False)
class LZero(Level):
    pass


@dataclass(frozen=True, repr=False)
class LSucc(Level):
    of: Level


@dataclass(frozen=True, repr=False)
class LMax(Level):
    left: Level
    right: Level


@dataclass(frozen=True, repr=False)
class LParam(Level):
    name: str


@dataclass(frozen=True, repr=False)
class LMeta(Level):
    id: int


ZERO = LZero()
ONE = LSucc(ZERO)

# atom key: ("p", name) for parameters, ("m", id) for metavariables
AtomKey = tuple


def succ(l: Level, k: int = 1) -> Level:
    for _ in range(k):
        l = LSucc(l)
    return l


def lmax(*levels: Level) -> Level:
    if not levels:
        return ZERO
    out = levels[-1]
    for l in reversed(levels[:-1]):
        out = LMax(l, out)
    return out


def _atoms(l: Level) -> tuple[int, dict]:
    """Return (constant, {atom: offset}) with value max(constant, atom + offset...)."""
    match l:
        case LZero():
            return 0, {}
        case LSucc(of):
            c, atoms = _atoms(of)
            return c + 1, {a: k + 1 for a, k in atoms.items()}
        case LMax(a, b):
            c1, m1 = _atoms(a)
            c2, m2 = _atoms(b)
            merged = dict(m1)
            for key, k in m2.items():
                if merged.get(key, -1) < k:
                    merged[key] = k
            return max(c1, c2), merged
        case LParam(name):
            return 0, {("p", name): 0}
        case LMeta(id):
            return 0, {("m", id): 0}
    raise TypeError(f"not a level: {l!r}")


def normal_atoms(l: Level) -> tuple[int | None, tuple]:
    """Canonical atom set: sorted ((kind, key), offset) pairs plus an optional constant.

    The constant is kept only when it exceeds every atom offset; otherwise
    some atom already dominates it for every assignment.
    """
    c, atoms = _atoms(l)
    items = tuple(sorted(atoms.items()))
    top = max((k for _, k in items), default=None)
    if top is not None and c <= top:
        return None, items
    return c, items


def _atom_level(key: AtomKey) -> Level:
    kind, v = key
    return LParam(v) if kind == "p" else LMeta(v)


def normalize(l: Level) -> Level:
    c, items = normal_atoms(l)
    parts: list[Level] = []
    if c is not None:
        parts.append(succ(ZERO, c))
    parts.extend(succ(_atom_level(key), k) for key, k in items)
    return lmax(*parts)


def is_equiv(a: Level, b: Level) -> bool:
    return a == b or normal_atoms(a) == normal_atoms(b)


def is_leq(a: Level, b: Level) -> bool:
    """a <= b under every assignment of the parameters."""
    return normal_atoms(LMax(a, b)) == normal_atoms(b)


def evaluate(l: Level, assignment: Mapping[str, int]) -> int:
    match l:
        case LZero():
            return 0
        case LSucc(of):
            return evaluate(of, assignment) + 1
        case LMax(a, b):
            return max(evaluate(a, assignment), evaluate(b, assignment))
        case LParam(name):
            return assignment[name]
    raise ValueError(f"cannot evaluate {l!r}")


def params(l: Level) -> set[str]:
    match l:
        case LSucc(of):
            return params(of)
        case LMax(a, b):
            return params(a) | params(b)
        case LParam(name):
            return {name}
    return set()


def has_meta(l: Level) -> bool:
    match l:
        case LSucc(of):
            return has_meta(of)
        case LMax(a, b):
            return has_meta(a) or has_meta(b)
        case LMeta():
            return True
    return False


def has_param(l: Level) -> bool:
    match l:
        case LSucc(of):
            return has_param(of)
        case LMax(a, b):
            return has_param(a) or has_param(b)
        case LParam():
            return True
    return False


def replace(l: Level, fn: Callable[[Level], Union[Level, None]]) -> Level:
    r = fn(l)
    if r is not None:
        return r
    match l:
        case LSucc(of):
            new = replace(of, fn)
            return l if new is of else LSucc(new)
        case LMax(a, b):
            na, nb = replace(a, fn), replace(b, fn)
            return l if (na is a and nb is b) else LMax(na, nb)
    return l


def instantiate(l: Level, subst: Mapping[str, Level]) -> Level:
    if not subst:
        return l
    return replace(l, lambda x: subst.get(x.name) if isinstance(x, LParam) else None)


def show_level(l: Level) -> str:
    match l:
        case LZero():
            return "0"
        case LParam(name):
            return name
        case LMeta(id):
            return f"?u{id}"
        case LSucc():
            k = 0
            base = l
            while isinstance(base, LSucc):
                base, k = base.of, k + 1
            if isinstance(base, LZero):
                return str(k)
            inner = show_level(base)
            if isinstance(base, LMax):
                inner = f"({inner})"
            return f"{inner}+{k}"
        case LMax(a, b):
            def arg(x: Level) -> str:
                s = show_level(x)
                return f"({s})" if isinstance(x, (LMax, LSucc)) and not _is_numeral(x) else s
            return f"max {arg(a)} {arg(b)}"
    return repr(l)


def _is_numeral(l: Level) -> bool:
    while isinstance(l, LSucc):
        l = l.of
    return isinstance(l, LZero)


def all_params(levels: Iterable[Level]) -> set[str]:
    out: set[str] = set()
    for l in levels:
        out |= params(l)
    return out
