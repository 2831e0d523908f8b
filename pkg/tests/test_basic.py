import random
from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from vnwb.basic import (
    cond_exp_jump_search,
    index_jump_estimate,
    induce_m1_presentation,
    induce_n_presentation,
    jones_tower,
    m1_norm,
    m1_trace,
    rewrite_word,
    strip_e,
    to_normal_form,
    tower_index,
)
from vnwb.scalar import GQ
from vnwb.search import ExactPoint
from vnwb.subfactor import substitute
from vnwb.terms import E_LETTER, Adj, Expect, Gen, Jones, One, Prod, Scaled, Sum, format_term, parse_term, random_term

seeds = st.integers(0, 2**32 - 1)


@pytest.fixture(scope="module")
def m1(amp):
    return induce_m1_presentation(amp)


def _x(I, seed, depth=3):
    return random_term(random.Random(seed), I.ambient.arity, depth, extended=True)


# ------------------------------------------------------------------ the normal-form algebra

@given(seeds)
def test_induced_oracle_matches_concrete_model(inclusion, seed):
    I = inclusion
    P1 = induce_m1_presentation(I)
    t = _x(I, seed)
    assert P1.exact_norm_sq(t) == I.m1_model.exact_norm_sq(t)
    assert P1.exact_trace(t) == I.m1_model.exact_trace(t)


@given(seeds, seeds)
def test_normal_form_algebra_is_associative_and_tracial(m1, s1, s2):
    A = m1.algebra
    x, y, z = (m1.evaluate(random_term(random.Random(s), 4, 2, extended=True)) for s in (s1, s2, s1 ^ s2))
    assert A.equal(A.mul(A.mul(x, y), z), A.mul(x, A.mul(y, z)))
    assert A.trace(A.mul(x, y)) == A.trace(A.mul(y, x))
    assert A.equal(A.adjoint(A.mul(x, y)), A.mul(A.adjoint(y), A.adjoint(x)))


def test_jones_projection_relations(amp, m1):
    A = m1.algebra
    e = m1.evaluate(Jones())
    assert A.equal(A.mul(e, e), e) and A.equal(A.adjoint(e), e)
    assert A.trace(e) == GQ(Fraction(1, 4))
    x = parse_term("g1*g3 + (1/3)*g4'", 4)
    lhs = m1.evaluate(Prod((Jones(), x, Jones())))
    rhs = m1.evaluate(Prod((Expect(x), Jones())))
    assert A.equal(lhs, rhs)


@given(seeds)
def test_jones_projection_in_model(inclusion, seed):
    I = inclusion
    M = I.m1_model
    x = random_term(random.Random(seed), I.ambient.arity, 2)
    A = M.algebra
    assert A.equal(M.evaluate(Prod((Jones(), x, Jones()))), M.evaluate(Prod((Expect(x), Jones()))))
    assert A.trace(M.evaluate(Jones())) == GQ(1 / I.index)


def test_m1_expectation_restricts_to_sub(amp, m1):
    x = m1.evaluate(Jones())
    assert m1.algebra.equal(m1.expect(x), m1.algebra.scale(GQ(Fraction(1, 4)), m1.algebra.one()))


# ------------------------------------------------------------------ symbolic normal forms

def test_rewrite_word_example():
    g1 = (0, 1, 0, ())
    w, counts = rewrite_word((E_LETTER, g1, E_LETTER, g1, E_LETTER))
    assert counts == [3, 2, 1]
    assert w.count(E_LETTER) == 1


def test_normal_form_prints_expectations():
    t = parse_term("e*g1*e", 4, extended=True)
    assert format_term(to_normal_form(t).to_term()) == "E(g1)*e"
    assert format_term(to_normal_form(parse_term("g2", 4, extended=True)).to_term()) == "g2"


@given(seeds)
def test_normal_form_is_sound(inclusion, seed):
    I = inclusion
    M = I.m1_model
    t = _x(I, seed)
    nf = to_normal_form(t)
    assert M.algebra.equal(M.evaluate(t), M.evaluate(nf.to_term()))
    for _, counts in nf.trace:
        assert all(a > b for a, b in zip(counts, counts[1:]))
        assert counts[-1] <= 1


@given(seeds)
def test_symbolic_trace_matches_model(amp, seed):
    t = _x(amp, seed)
    assert m1_trace(amp, t) == amp.m1_model.exact_trace(t)
    assert m1_norm(amp, t, 20) == amp.m1_model.norm(t, 20)


@given(seeds)
def test_strip_e(inclusion, seed):
    I = inclusion
    M = I.m1_model
    x = _x(I, seed, 2)
    y = strip_e(I, x, 10)
    assert M.algebra.equal(M.evaluate(Prod((x, Jones()))), M.evaluate(Prod((y, Jones()))))
    y2 = strip_e(I, ExactPoint(I.ambient, x), 10)
    assert I.algebra.equal(I.ambient.evaluate(y2), I.ambient.evaluate(y))


def test_induced_n_presentation(amp):
    P = induce_n_presentation(amp)
    assert P.arity == amp.ambient.arity + len(amp.sub_generators)
    for g in P.generators:
        assert amp.in_sub(g)


# ------------------------------------------------------------------ tower

@pytest.fixture(scope="module")
def tower(amp):
    return jones_tower(amp, 2)


def test_tower_indices(tower):
    assert [lvl.index for lvl in tower] == [4, 4]
    assert [tower_index(lvl) for lvl in tower] == [4, 4]
    assert [lvl.jones_trace for lvl in tower] == [Fraction(1, 4)] * 2


def test_tower_second_level_relations(tower):
    P2 = tower[1].presentation
    A = P2.algebra
    e1, e2 = P2.evaluate(Gen(5)), P2.evaluate(Jones())
    # e2 e1 e2 = E_{M_1}(e1) e2 = (1/4) e2
    assert A.equal(A.mul(A.mul(e2, e1), e2), A.scale(GQ(Fraction(1, 4)), e2))
    assert A.equal(A.mul(A.mul(e1, e2), e1), A.scale(GQ(Fraction(1, 4)), e1))


@given(seeds)
def test_tower_agrees_with_first_level(tower, seed):
    P1, P2 = tower[0].presentation, tower[1].presentation
    t = random_term(random.Random(seed), 4, 3, extended=True)
    t2 = substitute_jones(t)
    assert P1.exact_norm_sq(t) == P2.exact_norm_sq(t2)


def substitute_jones(t):
    """Rename the first-level Jones letter as the plain fifth generator of the second level."""
    if isinstance(t, Jones):
        return Gen(5)
    if isinstance(t, (Adj, Expect)):
        return type(t)(substitute_jones(t.arg))
    if isinstance(t, Scaled):
        return Scaled(t.coef, substitute_jones(t.arg))
    if isinstance(t, (Sum, Prod)):
        return type(t)(tuple(substitute_jones(a) for a in t.args))
    return t


# ------------------------------------------------------------------ bounded jumps

def test_index_jump_estimate_is_monotone_and_sound(amp):
    est = index_jump_estimate(amp, budget=64)
    assert all(a >= b for a, b in zip(est.history, est.history[1:]))
    assert est.inverse_upper >= Fraction(1, 4)
    assert est.inverse_upper - Fraction(1, 4) < Fraction(1, 1000)


@given(seeds)
def test_jump_search_matches_backend(inclusion, seed):
    I = inclusion
    t = random_term(random.Random(seed), I.ambient.arity, 2)
    r = cond_exp_jump_search(I, t, 12)
    assert r.spanning and r.note.startswith("sound")
    A = I.algebra
    assert A.equal(I.ambient.evaluate(r.term), I.cond_exp_element(I.ambient.evaluate(t)))


def test_jump_search_flags_small_z_sets(amp):
    r = cond_exp_jump_search(amp, parse_term("g1*g3", 4), 12, z_terms=[One()])
    assert not r.spanning
    assert r.note.startswith("unsound")
