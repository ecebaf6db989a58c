"""Inductive families: schema checks, recursor shape and an iota oracle."""

import itertools

import pytest

from hottc.kernel import TypeChecker, is_def_eq, normalize
from hottc.level import ZERO
from hottc.term import App, Const, Lam, Pi, Sort, Var, arrow, mk_app

from conftest import check_source, errors_of, run_with_big_stack

NAT, BOOL, UNIT = Const("nat"), Const("bool"), Const("unit")
SUM_BB = mk_app(Const("sum", [ZERO, ZERO]), [BOOL, BOOL])


@pytest.fixture(scope="module")
def env():
    ch, rep = check_source('import "init/datatypes"')
    assert rep.errors == []
    return ch.env


# -- an independent interpreter ----------------------------------------------
# Constructor tables are written out by hand: (name, number of parameters,
# field count, positions of recursive fields). Recursors take parameters,
# the motive, one minor per constructor, then the major premise; a minor
# receives the fields followed by one induction hypothesis per recursive field.

TABLES = {
    "bool": [("ff", 0, 0, ()), ("tt", 0, 0, ())],
    "unit": [("star", 0, 0, ())],
    "sum": [("inl", 2, 1, ()), ("inr", 2, 1, ())],
    "nat": [("zero", 0, 0, ()), ("succ", 0, 1, (0,))],
}
NPARAMS = {"bool": 0, "unit": 0, "sum": 2, "nat": 0}
CTORS = {c[0]: (ty, i, c) for ty, cs in TABLES.items() for i, c in enumerate(cs)}


class V:
    """A constructor value: name and fields (parameters dropped)."""

    def __init__(self, name, fields):
        self.name, self.fields = name, tuple(fields)

    def __eq__(self, other):
        return isinstance(other, V) and (self.name, self.fields) == (other.name, other.fields)

    def __repr__(self):
        return f"{self.name}{list(self.fields) if self.fields else ''}"


def curry(n, fn, got=()):
    if n == 0:
        return fn(list(got))
    return lambda x: curry(n - 1, fn, got + (x,))


def interp(t, env=()):
    if isinstance(t, Var):
        return env[t.idx]
    if isinstance(t, Lam):
        return lambda x: interp(t.body, (x,) + env)
    if isinstance(t, App):
        return interp(t.fn, env)(interp(t.arg, env))
    if isinstance(t, Const):
        if t.name in CTORS:
            _, _, (name, npar, nfields, _) = CTORS[t.name]
            return curry(npar + nfields, lambda args: V(name, args[npar:]))
        if t.name.endswith(".rec") and t.name[:-4] in TABLES:
            ty = t.name[:-4]
            nminors = len(TABLES[ty])
            return curry(NPARAMS[ty] + 1 + nminors + 1, lambda args: rec(ty, args))
        return ("opaque", t.name)
    return ("opaque", type(t).__name__)


def rec(ty, args):
    npar = NPARAMS[ty]
    motive_etc = args[npar:]
    minors, major = motive_etc[1:-1], motive_etc[-1]
    _, i, (_, _, _, recursive) = CTORS[major.name]
    out = minors[i]
    for f in major.fields:
        out = out(f)
    for j in recursive:
        out = out(rec(ty, list(args[:-1]) + [major.fields[j]]))
    return out


def to_v(t):
    f, args = t, []
    while isinstance(f, App):
        args.insert(0, f.arg)
        f = f.fn
    _, _, (name, npar, _, _) = CTORS[f.name]
    return V(name, [to_v(a) for a in args[npar:]])


# -- the battery ----------------------------------------------------------------

def nat_lit(k):
    t = Const("zero")
    for _ in range(k):
        t = App(Const("succ"), t)
    return t


def bool_values():
    return [Const("ff"), Const("tt")]


def sum_values():
    inl, inr = mk_app(Const("inl", [ZERO, ZERO]), [BOOL, BOOL]), mk_app(Const("inr", [ZERO, ZERO]), [BOOL, BOOL])
    return [App(c, b) for c in (inl, inr) for b in bool_values()]


def rec_head(ty, params=()):
    levels = {"bool": [ZERO], "unit": [ZERO], "nat": [ZERO], "sum": [ZERO, ZERO, ZERO]}[ty]
    return mk_app(Const(f"{ty}.rec", levels), list(params))


def bool_case(b, x, y):
    # bool.rec x y b, into nat
    return mk_app(rec_head("bool"), [Lam("_", BOOL, NAT), x, y, b])


NAT_CONSTS = [nat_lit(k) for k in range(3)]
BATTERY = {
    "bool": (BOOL, (), [list(p) for p in itertools.product(NAT_CONSTS[:2], NAT_CONSTS)], bool_values()),
    "unit": (UNIT, (), [[c] for c in NAT_CONSTS], [Const("star")]),
    "sum": (SUM_BB, (BOOL, BOOL), [
        [Lam("b", BOOL, bool_case(Var(0), nat_lit(i), nat_lit(j))), Lam("b", BOOL, nat_lit(k))]
        for i, j, k in itertools.product(range(2), range(2), range(3))], sum_values()),
    "nat": (NAT, (), [
        [z, s] for z in NAT_CONSTS for s in [
            Lam("n", NAT, Lam("ih", NAT, App(Const("succ"), Var(0)))),
            Lam("n", NAT, Lam("ih", NAT, Var(0))),
            Lam("n", NAT, Lam("ih", NAT, Var(1))),
            Lam("n", NAT, Lam("ih", NAT, App(Const("succ"), App(Const("succ"), Var(0))))),
            Lam("n", NAT, Lam("ih", NAT, bool_case(Const("tt"), Var(0), Var(1)))),
        ]], [nat_lit(k) for k in range(6)]),
}


def triples():
    for ty, (T, params, minor_sets, values) in BATTERY.items():
        for minors in minor_sets:
            for v in values:
                yield ty, mk_app(rec_head(ty, params), [Lam("_", T, NAT)] + minors + [v])


def test_recursor_oracle_exhaustive(env):
    """[DERIVED] expected values come from the constructor-dispatch interpreter."""
    def work():
        results = []
        for ty, t in triples():
            results.append((ty, to_v(normalize(env, t)), interp(t)))
        return results
    results = run_with_big_stack(work)
    mismatches = [(ty, got, want) for ty, got, want in results if got != want]
    assert len(results) > 150
    assert {ty for ty, _, _ in results} == set(BATTERY)
    assert mismatches == []


def test_interpreter_sanity():
    # [TRIVIAL] the oracle itself: nat.rec 0 (λ n ih, succ ih) 3 = 3
    t = mk_app(rec_head("nat"), [Lam("_", NAT, NAT), nat_lit(0),
                                 Lam("n", NAT, Lam("ih", NAT, App(Const("succ"), Var(0)))), nat_lit(3)])
    assert interp(t) == to_v(nat_lit(3))


# -- recursor shape -----------------------------------------------------------------


def test_nat_recursor_type(env):
    from hottc.term import FVar, instantiate_lparams, mk_pi
    l = env["nat.rec"].univ_params
    C = FVar("C", Pi("n", NAT, Sort(ZERO)))
    n, ih, m = FVar("n", NAT), FVar("ih", Sort(ZERO)), FVar("m", NAT)
    ih = FVar("ih", App(C, n))
    # [TRIVIAL] Π {C : nat → Type}, C zero → (Π n, C n → C (succ n)) → Π n, C n
    step = mk_pi([n, ih], App(C, App(Const("succ"), n)))
    expected = mk_pi([C], arrow(App(C, Const("zero")), arrow(step, mk_pi([m], App(C, m)))))
    assert len(l) == 1
    got = instantiate_lparams(env["nat.rec"].type, l, [ZERO])
    assert TypeChecker(env).is_def_eq(got, expected)


def test_eq_recursor_is_path_induction(env):
    rec = env["eq.rec"]
    # [TRIVIAL] motive over the index and the path; one minor for refl
    t = rec.type
    binders = []
    while isinstance(t, Pi):
        binders.append((t.name, t.vis))
        t = t.body
    assert [v for _, v in binders] == ["implicit", "implicit", "implicit", "explicit", "implicit", "explicit"]


# -- schema violations ---------------------------------------------------------------


def test_non_strictly_positive_rejected():
    ch, rep = check_source("inductive bad : Type :=\n| bad.mk : (bad → bad) → bad\n", prelude=False)
    assert [k for _, k, _ in errors_of(rep)] == ["PositivityError"]
    assert "positiv" in rep.errors[0].message


def test_positive_occurrence_under_pi_accepted():
    ch, rep = check_source("inductive tree : Type :=\n| tree.leaf : tree\n"
                           "| tree.node : (Type → tree) → tree\n", prelude=False)
    # a Type-indexed branching is positive but lives in Type₁: only the universe check may fire
    assert all(k != "PositivityError" for _, k, _ in errors_of(rep))


def test_predicativity_violation_rejected():
    ch, rep = check_source("inductive big : Type.{0} :=\n| big.mk : Type.{0} → big\n", prelude=False)
    assert [k for _, k, _ in errors_of(rep)] == ["UniverseError"]


def test_constructor_must_target_family():
    ch, rep = check_source("inductive t : Type :=\n| t.mk : Type\n", prelude=False)
    assert errors_of(rep) and errors_of(rep)[0][1] in ("InductiveError", "TypeMismatch")


def test_parameters_must_be_uniform():
    src = "inductive w (A : Type) : Type :=\n| w.mk : w A → w (w A)\n"
    ch, rep = check_source(src, prelude=False)
    assert errors_of(rep)


def test_iota_with_parameters(env):
    t = mk_app(rec_head("sum", (BOOL, BOOL)),
               [Lam("_", SUM_BB, BOOL), Lam("b", BOOL, Var(0)), Lam("b", BOOL, Const("ff")), sum_values()[1]])
    # [TRIVIAL] sum.rec id (λ _, ff) (inl tt) = tt
    assert is_def_eq(env, None, t, Const("tt"))
