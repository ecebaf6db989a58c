"""Declarations and append-only environments.

An `Environment` is an immutable snapshot: a view of the first `size`
events of a shared store. Extending the newest snapshot appends to the
store in place; extending an older snapshot forks a private copy, so no
committed snapshot ever observes a later change.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, Optional

from .errors import CoercionError, DuplicateName, UnknownConstant
from .term import Term

DEFINITION = "definition"
AXIOM = "axiom"
INDUCTIVE = "inductive"
CONSTRUCTOR = "constructor"
RECURSOR = "recursor"
HIT = "hit"


@dataclass(frozen=True)
class CtorRule:
    ctor: str
    nparams: int  # arguments of the constructor before its fields
    nfields: int
    rhs: Term  # closed; applied to the rule prefix then to the fields


@dataclass(frozen=True)
class RuleSet:
    """Reduction rules of one eliminator: iota rules or HIT point rules."""

    elim: str
    univ_params: tuple[str, ...]
    nprefix: int  # leading eliminator arguments passed to every rhs
    major: int  # position of the major premise
    rules: dict[str, CtorRule]
    provenance: str  # "inductive:<T>" or "hit:quotient" / "hit:trunc"


@dataclass
class InductiveInfo:
    name: str
    nparams: int
    nindices: int
    constructors: list[str]
    recursor: str
    result_level: object = None


@dataclass
class RecursorInfo:
    name: str
    inductive: str
    nparams: int
    nminors: int
    nindices: int
    motive_level: str
    rules: RuleSet

    @property
    def major(self) -> int:
        return self.nparams + 1 + self.nminors + self.nindices


@dataclass
class Declaration:
    name: str
    univ_params: tuple[str, ...]
    type: Term
    kind: str
    value: Optional[Term] = None
    info: object = None  # InductiveInfo | RecursorInfo | parent name for constructors
    axiom_like: bool = False  # HIT path-rule constants reported as axioms
    rule_tag: Optional[str] = None
    index: int = -1

    @property
    def is_definition(self) -> bool:
        return self.kind == DEFINITION


@dataclass
class _Store:
    events: list = field(default_factory=list)
    decls: dict = field(default_factory=dict)  # name -> Declaration (index = event position)
    classes: dict = field(default_factory=dict)  # name -> pos
    instances: list = field(default_factory=list)  # (pos, name)
    coercions: dict = field(default_factory=dict)  # source head -> (pos, coercion name)
    rules: dict = field(default_factory=dict)  # elim -> (pos, RuleSet)
    hits: dict = field(default_factory=dict)  # which -> pos


class Environment:
    __slots__ = ("_store", "size")

    def __init__(self, store: Optional[_Store] = None, size: int = 0):
        self._store = store if store is not None else _Store()
        self.size = size

    # -- queries -----------------------------------------------------------

    def get(self, name: str) -> Optional[Declaration]:
        d = self._store.decls.get(name)
        if d is None or d.index >= self.size:
            return None
        return d

    def __getitem__(self, name: str) -> Declaration:
        d = self.get(name)
        if d is None:
            raise UnknownConstant(f"unknown constant '{name}'")
        return d

    def __contains__(self, name: str) -> bool:
        return self.get(name) is not None

    def declarations(self) -> Iterator[Declaration]:
        for ev in self._store.events[: self.size]:
            if ev[0] == "decl":
                yield self._store.decls[ev[1]]

    def events(self) -> list:
        return list(self._store.events[: self.size])

    def is_class(self, name: str) -> bool:
        p = self._store.classes.get(name)
        return p is not None and p < self.size

    def instances(self) -> list[str]:
        """Global instances, most recent first."""
        return [n for p, n in reversed(self._store.instances) if p < self.size]

    def coercion_for(self, head: str) -> Optional[str]:
        e = self._store.coercions.get(head)
        if e is None or e[0] >= self.size:
            return None
        return e[1]

    def rules_for(self, elim: str) -> Optional[RuleSet]:
        e = self._store.rules.get(elim)
        if e is None or e[0] >= self.size:
            return None
        return e[1]

    def rule_sets(self) -> list[RuleSet]:
        return [rs for p, rs in self._store.rules.values() if p < self.size]

    def hit_initialized(self, which: str) -> bool:
        p = self._store.hits.get(which)
        return p is not None and p < self.size

    # -- extension ---------------------------------------------------------

    def _writable(self) -> _Store:
        st = self._store
        if self.size == len(st.events):
            return st
        return _rebuild(st, self.size)

    def _extend(self, event: tuple, apply) -> "Environment":
        st = self._writable()
        pos = len(st.events)
        apply(st, pos)
        st.events.append(event)
        return Environment(st, pos + 1)

    def add(self, decl: Declaration) -> "Environment":
        if decl.name in self:
            raise DuplicateName(f"'{decl.name}' is already declared")

        def apply(st: _Store, pos: int) -> None:
            decl.index = pos
            st.decls[decl.name] = decl

        return self._extend(("decl", decl.name), apply)

    def add_rules(self, rs: RuleSet) -> "Environment":
        return self._extend(("rules", rs.elim), lambda st, pos: st.rules.__setitem__(rs.elim, (pos, rs)))

    def mark_hit(self, which: str) -> "Environment":
        return self._extend(("hit", which), lambda st, pos: st.hits.__setitem__(which, pos))

    def add_attribute(self, name: str, attr: str, source_head: Optional[str] = None) -> "Environment":
        self[name]
        if attr == "class":
            return self._extend(("attr", name, attr), lambda st, pos: st.classes.__setitem__(name, pos))
        if attr == "instance":
            return self._extend(("attr", name, attr), lambda st, pos: st.instances.append((pos, name)))
        if attr == "coercion":
            if source_head is None:
                raise CoercionError(f"cannot determine the source type of coercion '{name}'")
            existing = self.coercion_for(source_head)
            if existing is not None and existing != name:
                raise CoercionError(
                    f"ambiguous coercion: '{source_head}' already coerces via '{existing}', "
                    f"cannot also register '{name}'"
                )
            return self._extend(
                ("attr", name, attr, source_head),
                lambda st, pos: st.coercions.__setitem__(source_head, (pos, name)),
            )
        raise ValueError(f"unknown attribute {attr}")


def _rebuild(st: _Store, size: int) -> _Store:
    new = _Store()
    for pos, ev in enumerate(st.events[:size]):
        new.events.append(ev)
        kind = ev[0]
        if kind == "decl":
            new.decls[ev[1]] = st.decls[ev[1]]
        elif kind == "rules":
            new.rules[ev[1]] = st.rules[ev[1]]
        elif kind == "hit":
            new.hits[ev[1]] = pos
        elif kind == "attr":
            name, attr = ev[1], ev[2]
            if attr == "class":
                new.classes[name] = pos
            elif attr == "instance":
                new.instances.append((pos, name))
            else:
                new.coercions[ev[3]] = (pos, name)
    return new
