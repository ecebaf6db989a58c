"""The two primitive higher inductive types: typal quotients and truncations.

Both are installed by explicit `hit` commands once the prelude has defined
the names their signatures mention. Point constructors compute
judgmentally through the rule registry; path constructors never reduce,
and their computation rules are axiom-like constants.
"""

from __future__ import annotations

from typing import Sequence

from . import level as lv
from .env import HIT, CtorRule, Declaration, Environment, RuleSet
from .errors import DuplicateName, HitError
from .kernel import TypeChecker
from .level import Level, LParam
from .term import (
    EXPLICIT, IMPLICIT, INST, App, Const, FVar, Sort, Term, arrow, instantiate_lparams, mk_app,
    mk_lambda, mk_pi,
)

QUOTIENT = "quotient"
TRUNC = "trunc"

u, v, w = LParam("u"), LParam("v"), LParam("w")


def _fv(name: str, ty: Term, vis: str = EXPLICIT) -> FVar:
    return FVar(name, ty, vis)


def _eq(level: Level, A: Term, a: Term, b: Term) -> Term:
    return mk_app(Const("eq", [level]), [A, a, b])


def _expected_eq() -> Term:
    A = _fv("A", Sort(u), IMPLICIT)
    return mk_pi([A], arrow(A, arrow(A, Sort(u))))


def _expected_pathover() -> Term:
    A = _fv("A", Sort(u), IMPLICIT)
    C = _fv("C", arrow(A, Sort(v)))
    a = _fv("a", A, IMPLICIT)
    x = _fv("x", App(C, a))
    a2 = _fv("a'", A, IMPLICIT)
    p = _fv("p", _eq(u, A, a, a2))
    y = _fv("y", App(C, a2))
    return mk_pi([A, C, a, x, a2, p, y], Sort(v))


def _pathover(lu: Level, lvv: Level, A: Term, C: Term, a: Term, x: Term, a2: Term, p: Term,
              y: Term) -> Term:
    return mk_app(Const("pathover", [lu, lvv]), [A, C, a, x, a2, p, y])


def _expected_apd() -> Term:
    A = _fv("A", Sort(u), IMPLICIT)
    C = _fv("C", arrow(A, Sort(v)), IMPLICIT)
    z = _fv("a", A)
    f = _fv("f", mk_pi([z], App(C, z)))
    a = _fv("a", A, IMPLICIT)
    a2 = _fv("a'", A, IMPLICIT)
    p = _fv("p", _eq(u, A, a, a2))
    return mk_pi([A, C, f, a, a2, p], _pathover(u, v, A, C, a, App(f, a), a2, p, App(f, a2)))


def _expected_trunc_index() -> Term:
    return Sort(lv.ZERO)


def _expected_is_trunc() -> Term:
    return arrow(Const("trunc_index"), arrow(Sort(u), Sort(u)))


_PREREQS = {
    QUOTIENT: [("eq", ("u",), _expected_eq), ("pathover", ("u", "v"), _expected_pathover),
               ("apd", ("u", "v"), _expected_apd)],
    TRUNC: [("trunc_index", (), _expected_trunc_index), ("is_trunc", ("u",), _expected_is_trunc)],
}


def check_prerequisites(env: Environment, which: str) -> None:
    """Each prerequisite must exist with the expected signature (up to renaming levels)."""
    for name, univs, expected in _PREREQS[which]:
        d = env.get(name)
        if d is None:
            raise HitError(f"hit {which}: prerequisite '{name}' is not declared")
        if len(d.univ_params) != len(univs):
            raise HitError(
                f"hit {which}: prerequisite '{name}' must have {len(univs)} universe parameter(s), "
                f"found {len(d.univ_params)}")
        actual = instantiate_lparams(d.type, d.univ_params, [LParam(n) for n in univs])
        tc = TypeChecker(env, univ_params=univs)
        try:
            ok = tc.is_def_eq(actual, expected())
        except Exception:  # ill-shaped prerequisite: report as a signature mismatch
            ok = False
        if not ok:
            from .pretty import pp

            raise HitError(
                f"hit {which}: prerequisite '{name}' has an unexpected signature; "
                f"expected {pp(expected())}, found {pp(actual)}")


def _add(env: Environment, name: str, univs: Sequence[str], ty: Term, tag: str,
         axiom_like: bool = False) -> Environment:
    tc = TypeChecker(env, univ_params=univs)
    tc.ensure_sort(tc.infer(ty, False))
    return env.add(Declaration(name, tuple(univs), ty, HIT, axiom_like=axiom_like, rule_tag=tag))


def _start(env: Environment, which: str) -> None:
    if env.hit_initialized(which):
        raise DuplicateName(f"hit {which} is already initialized")
    check_prerequisites(env, which)


def init_quotient(env: Environment) -> Environment:
    _start(env, QUOTIENT)
    l = LParam("l")
    uv = lv.lmax(u, v)
    lvls = [u, v]

    def base() -> tuple[FVar, FVar]:
        A = _fv("A", Sort(u), IMPLICIT)
        a1, a2 = _fv("a", A), _fv("a'", A)
        R = _fv("R", mk_pi([a1, a2], Sort(v)), IMPLICIT)
        return A, R

    def q(A: Term, R: Term) -> Term:
        return mk_app(Const("quotient", lvls), [A, R])

    def mk(A: Term, R: Term, a: Term) -> Term:
        return mk_app(Const("quotient.mk", lvls), [A, R, a])

    def eor(A, R, x, y, r) -> Term:
        return mk_app(Const("quotient.eq_of_rel", lvls), [A, R, x, y, r])

    A, R = base()
    Rx = _fv("R", R.type)
    env = _add(env, "quotient", ("u", "v"), mk_pi([A, Rx], Sort(uv)), "quotient")

    A, R = base()
    a = _fv("a", A)
    env = _add(env, "quotient.mk", ("u", "v"), mk_pi([A, R, a], q(A, R)), "quotient.mk")

    A, R = base()
    x, y = _fv("x", A, IMPLICIT), _fv("y", A, IMPLICIT)
    r = _fv("r", mk_app(R, [x, y]))
    env = _add(env, "quotient.eq_of_rel", ("u", "v"),
               mk_pi([A, R, x, y, r], _eq(uv, q(A, R), mk(A, R, x), mk(A, R, y))), "quotient.eq_of_rel")

    def rec_binders():
        A, R = base()
        z = _fv("q", q(A, R))
        P = _fv("P", mk_pi([z], Sort(l)), IMPLICIT)
        a = _fv("a", A)
        f = _fv("f", mk_pi([a], App(P, mk(A, R, a))))
        x, y = _fv("x", A, IMPLICIT), _fv("y", A, IMPLICIT)
        r = _fv("r", mk_app(R, [x, y]))
        h_ty = mk_pi([x, y, r], _pathover(uv, l, q(A, R), P, mk(A, R, x), App(f, x), mk(A, R, y),
                                          eor(A, R, x, y, r), App(f, y)))
        h = _fv("h", h_ty)
        return A, R, P, f, h

    rec_univs = ("l", "u", "v")
    A, R, P, f, h = rec_binders()
    major = _fv("q", q(A, R))
    env = _add(env, "quotient.rec", rec_univs, mk_pi([A, R, P, f, h, major], App(P, major)), "quotient.rec")

    A, R, P, f, h = rec_binders()
    a = _fv("a", A)
    rhs = mk_lambda([A, R, P, f, h, a], App(f, a))
    rs = RuleSet("quotient.rec", rec_univs, 5, 5, {"quotient.mk": CtorRule("quotient.mk", 2, 1, rhs)},
                 f"hit:{QUOTIENT}")
    env = env.add_rules(rs)

    # the path computation rule, stated after the point rule so its type checks
    A, R, P, f, h = rec_binders()
    x, y = _fv("x", A, IMPLICIT), _fv("y", A, IMPLICIT)
    r = _fv("r", mk_app(R, [x, y]))
    rec = mk_app(Const("quotient.rec", [l, u, v]), [A, R, P, f, h])
    p = eor(A, R, x, y, r)
    lhs = mk_app(Const("apd", [uv, l]), [q(A, R), P, rec, mk(A, R, x), mk(A, R, y), p])
    po = _pathover(uv, l, q(A, R), P, mk(A, R, x), App(f, x), mk(A, R, y), p, App(f, y))
    ty = mk_pi([A, R, P, f, h, x, y, r], _eq(l, po, lhs, mk_app(h, [x, y, r])))
    env = _add(env, "quotient.rec_eq", rec_univs, ty, "quotient.rec_eq", axiom_like=True)
    return env.mark_hit(QUOTIENT)


def init_trunc(env: Environment) -> Environment:
    _start(env, TRUNC)
    l = LParam("l")
    ti = Const("trunc_index")

    def trunc(n: Term, A: Term) -> Term:
        return mk_app(Const("trunc", [u]), [n, A])

    def tr(n: Term, A: Term, a: Term) -> Term:
        return mk_app(Const("tr", [u]), [n, A, a])

    n, A = _fv("n", ti), _fv("A", Sort(u))
    env = _add(env, "trunc", ("u",), mk_pi([n, A], Sort(u)), "trunc")

    n, A = _fv("n", ti, IMPLICIT), _fv("A", Sort(u), IMPLICIT)
    a = _fv("a", A)
    env = _add(env, "tr", ("u",), mk_pi([n, A, a], trunc(n, A)), "tr")

    n, A = _fv("n", ti), _fv("A", Sort(u))
    env = _add(env, "is_trunc_trunc", ("u",),
               mk_pi([n, A], mk_app(Const("is_trunc", [u]), [n, trunc(n, A)])), "is_trunc_trunc",
               axiom_like=True)
    env = env.add_attribute("is_trunc_trunc", "instance")

    def rec_binders():
        n, A = _fv("n", ti, IMPLICIT), _fv("A", Sort(u), IMPLICIT)
        z = _fv("x", trunc(n, A))
        P = _fv("P", mk_pi([z], Sort(l)), IMPLICIT)
        z2 = _fv("x", trunc(n, A))
        H = _fv("H", mk_pi([z2], mk_app(Const("is_trunc", [l]), [n, App(P, z2)])), INST)
        a = _fv("a", A)
        f = _fv("f", mk_pi([a], App(P, tr(n, A, a))))
        return n, A, P, H, f

    rec_univs = ("l", "u")
    n, A, P, H, f = rec_binders()
    major = _fv("x", trunc(n, A))
    env = _add(env, "trunc.rec", rec_univs, mk_pi([n, A, P, H, f, major], App(P, major)), "trunc.rec")

    n, A, P, H, f = rec_binders()
    a = _fv("a", A)
    rhs = mk_lambda([n, A, P, H, f, a], App(f, a))
    rs = RuleSet("trunc.rec", rec_univs, 5, 5, {"tr": CtorRule("tr", 2, 1, rhs)}, f"hit:{TRUNC}")
    env = env.add_rules(rs)
    return env.mark_hit(TRUNC)


def init_hit(env: Environment, which: str) -> Environment:
    if which == QUOTIENT:
        return init_quotient(env)
    if which == TRUNC:
        return init_trunc(env)
    raise HitError(f"unknown higher inductive type '{which}'")


def hit_point_reduce(env: Environment, t: Term):
    """Contract a HIT eliminator applied to its point constructor, else None."""
    return TypeChecker(env).reduce_rules(t, provenance="hit:")
