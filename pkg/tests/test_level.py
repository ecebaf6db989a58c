"""Universe levels: normal forms against a semantic oracle."""

import itertools
import random

from hypothesis import given, settings, strategies as st

from hottc import level as lv
from hottc.level import LMax, LParam, LSucc, ZERO

PARAMS = ("u", "v", "w")


def sem(l, env):
    # independent evaluator; bypasses lv.evaluate on purpose
    if l == ZERO:
        return 0
    if isinstance(l, LSucc):
        return sem(l.of, env) + 1
    if isinstance(l, LMax):
        return max(sem(l.left, env), sem(l.right, env))
    if isinstance(l, LParam):
        return env[l.name]
    raise TypeError(l)


def semantically_equal(a, b):
    names = sorted(lv.params(a) | lv.params(b))
    for vals in itertools.product(range(5), repeat=len(names)):
        env = dict(zip(names, vals))
        if sem(a, env) != sem(b, env):
            return False
    return True


def random_level(rng, depth):
    if depth == 0 or rng.random() < 0.25:
        return rng.choice([ZERO, LParam(rng.choice(PARAMS)), LParam(rng.choice(PARAMS))])
    r = rng.random()
    if r < 0.4:
        return LSucc(random_level(rng, depth - 1))
    return LMax(random_level(rng, depth - 1), random_level(rng, depth - 1))


def rewrite(rng, l, steps=3):
    """Semantics-preserving shuffles, so that about half of the pairs are equal."""
    for _ in range(steps):
        r = rng.random()
        if isinstance(l, LMax) and r < 0.3:
            l = LMax(l.right, l.left)
        elif isinstance(l, LSucc) and isinstance(l.of, LMax) and r < 0.6:
            l = LMax(LSucc(l.of.left), LSucc(l.of.right))
        elif r < 0.8:
            l = LMax(l, l)
        else:
            l = LMax(ZERO, l)
    return l


levels = st.recursive(
    st.sampled_from([ZERO] + [LParam(p) for p in PARAMS]),
    lambda inner: st.one_of(inner.map(LSucc), st.tuples(inner, inner).map(lambda ab: LMax(*ab))),
    max_leaves=8,
)

# [DERIVED] every verdict below comes from exhaustive evaluation over {0..4}^params


def test_oracle_thousand_random_levels():
    rng = random.Random(20260101)
    disagreements, equal_pairs = [], 0
    for i in range(1000):
        a = random_level(rng, 4)
        b = rewrite(rng, a) if i % 2 == 0 else random_level(rng, 4)
        truth = semantically_equal(a, b)
        equal_pairs += truth
        if lv.is_equiv(a, b) != truth:
            disagreements.append((a, b))
    assert disagreements == []
    assert 300 < equal_pairs < 1000  # both verdicts are exercised


@given(levels)
def test_normalize_preserves_value(l):
    assert semantically_equal(l, lv.normalize(l))


@given(levels)
def test_normalize_idempotent(l):
    n = lv.normalize(l)
    assert lv.normalize(n) == n


@given(levels, levels)
@settings(max_examples=300)
def test_equiv_matches_semantics(a, b):
    assert lv.is_equiv(a, b) == semantically_equal(a, b)


@given(levels, levels)
@settings(max_examples=300)
def test_leq_matches_semantics(a, b):
    names = sorted(lv.params(a) | lv.params(b))
    truth = all(sem(a, dict(zip(names, v))) <= sem(b, dict(zip(names, v)))
                for v in itertools.product(range(5), repeat=len(names)))
    assert lv.is_leq(a, b) == truth


@given(levels, st.dictionaries(st.sampled_from(PARAMS), st.integers(0, 6)))
def test_evaluate_agrees_with_oracle(l, partial):
    env = {p: partial.get(p, 0) for p in PARAMS}
    assert lv.evaluate(l, env) == sem(l, env)


def test_max_laws():
    u, v = LParam("u"), LParam("v")
    # [TRIVIAL]
    assert lv.is_equiv(LMax(u, v), LMax(v, u))
    assert lv.is_equiv(LMax(u, u), u)
    assert lv.is_equiv(LMax(ZERO, u), u)
    assert lv.is_equiv(LSucc(LMax(u, v)), LMax(LSucc(u), LSucc(v)))
    assert not lv.is_equiv(LMax(LSucc(ZERO), u), u)
    assert not lv.is_equiv(LSucc(u), u)


def test_instantiate_params():
    u = LParam("u")
    l = lv.instantiate(LMax(LSucc(u), LParam("v")), {"u": lv.succ(ZERO, 2)})
    # [TRIVIAL] max(3, v)
    assert lv.evaluate(l, {"v": 1}) == 3
    assert lv.evaluate(l, {"v": 7}) == 7


def test_show_level():
    # [TRIVIAL]
    assert lv.show_level(lv.succ(ZERO, 2)) == "2"
    assert "max" in lv.show_level(LMax(LParam("u"), LParam("v")))
