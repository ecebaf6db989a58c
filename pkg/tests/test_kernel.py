"""Kernel: typing, reduction and conversion."""

import pytest

from hottc import level as lv
from hottc.env import AXIOM, DEFINITION, Declaration, Environment
from hottc.errors import DuplicateName, FuelExhausted, KernelError, TypeMismatch, UniverseError
from hottc.kernel import Context, TypeChecker, check_declaration, infer_type, is_def_eq, normalize, whnf
from hottc.level import LParam, LSucc, ZERO
from hottc.term import App, Const, FVar, Lam, Meta, Pi, Sort, Var, arrow

from conftest import check_source, harvest_subterms

TYPE0, TYPE1 = Sort(ZERO), Sort(LSucc(ZERO))


def base_env():
    env = Environment()
    env = check_declaration(env, Declaration("A", (), TYPE0, AXIOM))
    env = check_declaration(env, Declaration("a", (), Const("A"), AXIOM))
    env = check_declaration(env, Declaration("f", (), arrow(Const("A"), Const("A")), AXIOM))
    idA = Lam("x", Const("A"), Var(0))
    env = check_declaration(env, Declaration("idA", (), arrow(Const("A"), Const("A")), DEFINITION, idA))
    return env


def test_sort_of_sort():
    u = LParam("u")
    tc = TypeChecker(Environment(), univ_params=["u"])
    # [TRIVIAL] Type.{u} : Type.{u+1}
    assert tc.infer(Sort(u)) == Sort(LSucc(u))


def test_pi_lives_in_max():
    env = Environment()
    ty = infer_type(env, None, Pi("X", TYPE0, Var(0)))
    # [TRIVIAL] Π (X : Type₀), X : Type₁
    assert lv.is_equiv(ty.level, LSucc(ZERO))


def test_beta_delta_reduction():
    env = base_env()
    # [TRIVIAL] idA a ⟶ a
    assert whnf(env, None, App(Const("idA"), Const("a"))) == Const("a")
    assert whnf(env, None, App(Lam("x", Const("A"), App(Const("f"), Var(0))), Const("a"))) == \
        App(Const("f"), Const("a"))


def test_eta():
    env = base_env()
    eta = Lam("x", Const("A"), App(Const("f"), Var(0)))
    # [TRIVIAL] (λ x, f x) ≡ f, in both directions
    assert is_def_eq(env, None, eta, Const("f"))
    assert is_def_eq(env, None, Const("f"), eta)


def test_delta_in_conversion():
    env = base_env()
    assert is_def_eq(env, None, App(Const("idA"), Const("a")), Const("a"))
    assert not is_def_eq(env, None, App(Const("f"), Const("a")), Const("a"))


def test_context_api():
    env = base_env()
    ctx = Context().push("y", Const("A"))
    # [TRIVIAL] y : A ⊢ idA y ≡ y
    assert is_def_eq(env, ctx, App(Const("idA"), Var(0)), Var(0))
    assert infer_type(env, ctx, App(Const("f"), Var(0))) == Const("A")


def test_argument_mismatch_rejected():
    env = base_env()
    bad = Declaration("bad", (), Const("A"), DEFINITION, App(Const("f"), TYPE0))
    with pytest.raises(TypeMismatch):
        check_declaration(env, bad)


def test_universes_are_not_cumulative():
    env = Environment()
    # A : Type₀ is not accepted at Type₁
    d = Declaration("lift", (), arrow(TYPE0, TYPE1), DEFINITION, Lam("X", TYPE0, Var(0)))
    with pytest.raises(KernelError):
        check_declaration(env, d)


def test_undeclared_universe_parameter():
    d = Declaration("t", (), Sort(LSucc(LParam("u"))), AXIOM)
    with pytest.raises(UniverseError):
        check_declaration(Environment(), d)


def test_metavariables_rejected():
    d = Declaration("m", (), TYPE1, DEFINITION, Meta(0))
    with pytest.raises(KernelError):
        check_declaration(Environment(), d)


def test_open_terms_rejected():
    d = Declaration("o", (), TYPE1, DEFINITION, FVar("x", TYPE1))
    with pytest.raises(KernelError):
        check_declaration(Environment(), d)


def test_duplicate_name():
    env = base_env()
    with pytest.raises(DuplicateName):
        check_declaration(env, Declaration("a", (), Const("A"), AXIOM))


def test_fuel_exhaustion():
    ch, rep = check_source('import "init/nat"')
    n = Const("zero")
    for _ in range(12):
        n = App(Const("succ"), n)
    with pytest.raises(FuelExhausted):
        normalize(ch.env, App(App(Const("nat.mul"), n), n), fuel=50)


def test_nat_arithmetic_by_normalization():
    ch, rep = check_source('import "init/nat"')
    two = App(Const("succ"), App(Const("succ"), Const("zero")))
    three = App(Const("succ"), two)
    six = App(Const("succ"), App(Const("succ"), App(Const("succ"), three)))
    # [TRIVIAL] 2 * 3 = 6
    assert normalize(ch.env, App(App(Const("nat.mul"), two), three)) == six


# -- property suite over the whole corpus --------------------------------------


def test_harvest_is_large(kernel_properties):
    n, _ = kernel_properties
    assert n >= 10_000


@pytest.mark.parametrize("prop", ["whnf_idempotent", "defeq_refl", "eta", "subject_reduction"])
def test_kernel_property_on_corpus(kernel_properties, prop):
    _, failures = kernel_properties
    assert failures[prop] == []
