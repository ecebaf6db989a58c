"""Locally nameless terms: substitution laws."""

from hypothesis import given, strategies as st

from hottc.level import ZERO
from hottc.term import (
    App, Const, FVar, Lam, Pi, Sort, Var, abstract, get_app, head_beta, instantiate, instantiate1,
    mk_app, mk_lambda, mk_pi, shift, subterms,
)

TYPE = Sort(ZERO)
POOL = [FVar(n, TYPE) for n in "xyz"]


def terms(max_var=3):
    leaves = st.one_of(
        st.integers(0, max_var).map(Var),
        st.sampled_from(POOL),
        st.sampled_from([Const("c"), Const("d"), TYPE]),
    )

    def grow(inner):
        return st.one_of(
            st.tuples(inner, inner).map(lambda p: App(*p)),
            st.tuples(inner, inner).map(lambda p: Lam("a", p[0], p[1])),
            st.tuples(inner, inner).map(lambda p: Pi("a", p[0], p[1])),
        )
    return st.recursive(leaves, grow, max_leaves=12)


def mentions(t, fvs):
    uids = {f.uid for f in fvs}
    return any(isinstance(s, FVar) and s.uid in uids for s in subterms(t))


@given(terms())
def test_instantiate_then_abstract(t):
    fresh = [FVar(n, TYPE) for n in "pqrs"]
    assert abstract(instantiate(t, fresh), fresh) == t


@given(terms(0))
def test_abstract_then_instantiate(t):
    # Var(0) is bound elsewhere; open it with a free variable first
    t = instantiate1(t, POOL[0])
    assert instantiate(abstract(t, POOL), POOL) == t


@given(terms(0))
def test_abstracted_term_is_free_of_fvars(t):
    t = instantiate1(t, POOL[1])
    assert not mentions(abstract(t, POOL), POOL)


@given(terms(), st.integers(0, 3))
def test_shift_zero_is_identity(t, c):
    assert shift(t, 0, c) == t


@given(terms(1), terms(0))
def test_head_beta_is_instantiate(body, arg):
    arg = instantiate1(arg, POOL[2])
    assert head_beta(App(Lam("a", TYPE, body), arg)) == instantiate1(body, arg)


def test_instantiate_order_outermost_first():
    a, b = Const("a"), Const("b")
    # [TRIVIAL] under two binders Var(1) is the outer one
    t = App(Var(1), Var(0))
    assert instantiate(t, [a, b]) == App(a, b)


def test_abstract_last_is_var0():
    x, y = POOL[0], POOL[1]
    # [TRIVIAL]
    assert abstract(App(x, y), [x, y]) == App(Var(1), Var(0))


def test_mk_lambda_closes_dependent_binders():
    A = FVar("A", TYPE)
    a = FVar("a", A)
    lam = mk_lambda([A, a], a)
    # [TRIVIAL] λ (A : Type) (a : A), a
    assert lam == Lam("A", TYPE, Lam("a", Var(0), Var(0)))
    assert mk_pi([A, a], A) == Pi("A", TYPE, Pi("a", Var(0), Var(1)))


def test_spines():
    f, args = get_app(mk_app(Const("f"), [Const("a"), Const("b")]))
    # [TRIVIAL]
    assert f == Const("f") and args == [Const("a"), Const("b")]


def test_alpha_equivalence_ignores_binder_names():
    # [TRIVIAL]
    assert Lam("x", TYPE, Var(0)) == Lam("y", TYPE, Var(0))
    assert hash(Lam("x", TYPE, Var(0))) == hash(Lam("y", TYPE, Var(0)))
