import random
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from vnwb.linalg import is_positive_semidefinite
from vnwb.scalar import GQ, sqrt_dyadic
from vnwb.search import ExactPoint
from vnwb.subfactor import (
    Inclusion,
    NoConditionalExpectation,
    basis_from_exact_terms,
    cond_exp_from_basis,
    cond_exp_presented,
    construct_pp_basis,
    freeze_basis,
    index_from_basis,
    index_pp_inf,
    pp_expand,
    substitute,
    verify_pp_basis,
)
from vnwb.terms import Adj, Expect, Gen, One, Prod, Scaled, Sum, parse_term, random_term

seeds = st.integers(0, 2**32 - 1)


def _m(I, seed, depth=2):
    return random_term(random.Random(seed), I.ambient.arity, depth)


def _n(I, seed):
    t = random_term(random.Random(seed), len(I.sub_generators), 2)
    return substitute(t, I.sub_generators)


def _E(I, t, source=None):
    return I.cond_exp_element(I.ambient.evaluate(t), source)


# ------------------------------------------------------------------ the expectation axioms

@given(seeds, seeds, seeds)
def test_bimodularity(inclusion, s1, s2, s3):
    I = inclusion
    A, P = I.algebra, I.ambient
    x, a, b = _m(I, s1), _n(I, s2), _n(I, s3)
    lhs = _E(I, Prod((a, x, b)))
    rhs = A.mul(A.mul(P.evaluate(a), _E(I, x)), P.evaluate(b))
    assert A.equal(lhs, rhs)


@given(seeds)
def test_idempotent_and_unital(inclusion, seed):
    I = inclusion
    A = I.algebra
    ex = _E(I, _m(I, seed))
    assert A.equal(I.cond_exp_element(ex), ex)
    assert A.equal(I.cond_exp_element(A.one()), A.one())
    assert I.in_sub(ex)


@given(seeds)
def test_star_preserving_and_trace_preserving(inclusion, seed):
    I = inclusion
    A = I.algebra
    x = _m(I, seed)
    assert A.equal(_E(I, Adj(x)), A.adjoint(_E(I, x)))
    assert A.trace(_E(I, x)) == I.ambient.exact_trace(x)


@given(seeds)
def test_positive(inclusion, seed):
    I = inclusion
    x = _m(I, seed)
    ex = _E(I, Prod((Adj(x), x)))
    assert all(is_positive_semidefinite(b) for b in ex)


@given(seeds)
def test_declared_matches_backend(inclusion, seed):
    I = inclusion
    x = _m(I, seed, 3)
    assert I.algebra.equal(_E(I, x, "declared"), _E(I, x, "backend"))


@given(seeds)
def test_amplification_against_partial_trace(amp, seed):
    """Float oracle: E(X) = (id (x) tr)(X) (x) 1 on M_2 (x) M_2."""
    x = _m(amp, seed, 3)
    X = amp.ambient.evaluate(x)[0].to_complex()
    pt = np.einsum("iaja->ij", X.reshape(2, 2, 2, 2)) / 2
    want = np.kron(pt, np.eye(2))
    got = _E(amp, x)[0].to_complex()
    assert np.allclose(got, want)


def test_missing_source_raises(amp):
    I = Inclusion(amp.ambient, amp.sub_generators, priority=("declared",))
    with pytest.raises(NoConditionalExpectation):
        I.cond_exp_element(I.algebra.one())


def test_cond_exp_presented_sources(amp):
    t = parse_term("g1*g3 + (1/2)*g4*g2'", 4)
    a = cond_exp_presented(amp, t, 10, "declared")
    b = cond_exp_presented(amp, t, 10, "backend")
    assert amp.algebra.equal(amp.ambient.evaluate(a), amp.ambient.evaluate(b))


def test_expect_letter_in_terms(amp):
    P = amp.presentation
    v = P.evaluate(Expect(parse_term("g1*g3", 4)))
    assert amp.algebra.equal(v, amp.algebra.scale(GQ(Fraction(1, 2)), P.evaluate(Gen(1))))


def test_substitute():
    t = parse_term("g1*g2' + E(g2)", 2)
    out = substitute(t, [Gen(3), Gen(1)])
    assert out.flatten() == parse_term("g3*g1' + E(g1)", 3).flatten()


# ------------------------------------------------------------------ index by infimum

def test_index_pp_inf_is_sound_and_monotone(amp):
    est = index_pp_inf(amp, budget=40)
    assert est.inverse_upper >= 1 / amp.index
    assert all(a >= b for a, b in zip(est.history, est.history[1:]))
    assert est.index_lower <= amp.index
    assert est.examined == 40


def test_index_pp_inf_reaches_inverse_index(amp):
    est = index_pp_inf(amp, budget=200)
    assert est.inverse_upper - Fraction(1, 4) < Fraction(1, 1000)


# ------------------------------------------------------------------ Pimsner-Popa bases

@pytest.fixture(scope="module")
def amp_basis(amp):
    return construct_pp_basis(amp, m1=amp.m1_model)


def test_pp_basis_verifies_on_every_gallery_inclusion(inclusion):
    B = construct_pp_basis(inclusion, m1=inclusion.m1_model)
    assert B.n == int(inclusion.index)
    report = verify_pp_basis(inclusion, B, Fraction(1, 10**6), 24, m1=inclusion.m1_model)
    assert report.passed, [c for c in report.clauses if not c.passed]


def test_index_from_basis(amp, amp_basis):
    assert abs(index_from_basis(amp, amp_basis, 30) - 4) < Fraction(1, 10**9)


@given(seeds)
def test_cond_exp_from_basis_matches_backend(amp, amp_basis, seed):
    t = _m(amp, seed, 3)
    got = amp.ambient.evaluate(cond_exp_from_basis(amp, amp_basis, t, 20))
    diff = amp.algebra.sub(got, _E(amp, t, "backend"))
    assert amp.algebra.norm2_sq(diff) < Fraction(1, 2**40)


@given(seeds)
def test_basis_expansion_reconstructs(amp, amp_basis, seed):
    t = _m(amp, seed, 2)
    coeffs = pp_expand(amp, amp_basis, t, 30)
    P, A = amp.ambient, amp.algebra
    total = A.zero()
    for p, c in zip(amp_basis.m, coeffs):
        total = A.add(total, A.mul(P.evaluate(p.term(32)), P.evaluate(c)))
    assert A.norm2_sq(A.sub(total, P.evaluate(t))) < Fraction(1, 2**30)


def test_frozen_basis_still_verifies(amp, amp_basis):
    B = freeze_basis(amp, amp_basis, 20)
    assert all(isinstance(p, ExactPoint) for p in B.m)
    assert verify_pp_basis(amp, B, Fraction(1, 10**6), 20, m1=amp.m1_model).passed


def test_tampered_basis_fails(amp, amp_basis):
    ms = [p.term(20) for p in amp_basis.m]
    ms[0] = Scaled(GQ(Fraction(1, 2)), ms[0])
    B = basis_from_exact_terms(amp, ms)
    assert not verify_pp_basis(amp, B, Fraction(1, 10**6), 20, m1=amp.m1_model).passed


def test_matrix_unit_basis(amp):
    # sqrt(2) (1 (x) e_ij) is an orthonormal basis of M_2 (x) M_2 over M_2 (x) 1
    r2 = sqrt_dyadic(Fraction(2), 40)
    units = ["g3", "g4", "g4'", "g4'*g4"]
    B = basis_from_exact_terms(amp, [Scaled(GQ(r2), parse_term(u, 4)) for u in units])
    report = verify_pp_basis(amp, B, Fraction(1, 10**6), 30, m1=amp.m1_model)
    assert report.passed
    assert abs(index_from_basis(amp, B, 30) - 4) < Fraction(1, 10**9)


def test_construct_requires_index(tlj4):
    with pytest.raises(ValueError):
        construct_pp_basis(tlj4.inclusion)
