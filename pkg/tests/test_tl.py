import random
from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from vnwb.gallery import build_tlj
from vnwb.scalar import GQ
from vnwb.tl import (
    WIDTH_CAP,
    TLAlgebra,
    all_diagrams,
    catalan,
    cup_cap,
    flip,
    identity_diagram,
    verify_markov,
    verify_relations,
)


def _catalan_recursive(n):
    c = [1]
    for m in range(n):
        c.append(sum(c[i] * c[m - i] for i in range(m + 1)))
    return c[n]


@pytest.mark.parametrize("n", range(0, 9))
def test_catalan(n):
    assert catalan(n) == _catalan_recursive(n)


@pytest.mark.parametrize("width", [2, 3, 4, 5, 6])
@pytest.mark.parametrize("delta", [2, 3, Fraction(5, 2)])
def test_relations(width, delta):
    rep = verify_relations(TLAlgebra(width, delta))
    assert rep.passed, [k for k, v in rep.checks.items() if not v]
    assert TLAlgebra(width, delta).dimension == catalan(width)


@pytest.mark.parametrize("width", [3, 4, 5])
def test_diagram_helpers(width):
    ds = all_diagrams(width)
    assert identity_diagram(width) in ds
    for d in ds:
        assert flip(flip(d, width), width) == d
        assert all(d[d[p]] == p for p in range(2 * width))
    for i in range(1, width):
        assert cup_cap(width, i) in ds


def _random_element(tl, seed):
    rng = random.Random(seed)
    x = tl.zero()
    for d in rng.sample(tl.diagrams, min(3, len(tl.diagrams))):
        x = tl.add(x, tl.scale(GQ(Fraction(rng.randint(-3, 3), rng.randint(1, 3)), rng.randint(-2, 2)),
                               tl.basis_element(d)))
    return x


@given(st.integers(0, 2**32 - 1), st.integers(0, 2**32 - 1))
def test_trace_is_tracial(s1, s2):
    tl = TLAlgebra(4, 2)
    x, y = _random_element(tl, s1), _random_element(tl, s2)
    assert tl.trace(tl.mul(x, y)) == tl.trace(tl.mul(y, x))
    assert tl.trace(tl.adjoint(x)) == tl.trace(x).conj()
    assert tl.trace(tl.mul(tl.adjoint(x), x)).re >= 0


@given(st.integers(0, 2**32 - 1), st.integers(0, 2**32 - 1), st.integers(0, 2**32 - 1))
def test_multiplication_is_associative(s1, s2, s3):
    tl = TLAlgebra(4, 3)
    x, y, z = (_random_element(tl, s) for s in (s1, s2, s3))
    assert tl.equal(tl.mul(tl.mul(x, y), z), tl.mul(x, tl.mul(y, z)))


@pytest.mark.parametrize("delta", [2, 3])
def test_trace_normalization(delta):
    tl = TLAlgebra(4, delta)
    assert tl.trace(tl.one()) == GQ(1)
    for i in range(1, 4):
        assert tl.trace(tl.jones(i)) == GQ(Fraction(1, delta) ** 2)


@pytest.mark.parametrize("width, i, length", [(3, 2, 6), (4, 3, 5), (5, 4, 4)])
def test_markov_property(width, i, length):
    cert = verify_markov(TLAlgebra(width, 2), i, length)
    assert cert.passed
    assert cert.checked == sum((i - 1) ** m for m in range(length + 1))


def test_markov_negative_control():
    tl = TLAlgebra(4, 2)
    constant = verify_markov(tl, 3, 3, diagram_trace=lambda d: Fraction(1))
    assert not constant.passed
    wrong_delta = TLAlgebra(4, 3)
    skewed = verify_markov(tl, 3, 3, diagram_trace=wrong_delta.diagram_trace)
    assert not skewed.passed


def test_markov_rejects_missing_generator():
    with pytest.raises(ValueError):
        verify_markov(TLAlgebra(4, 2), 4, 2)


def test_width_cap():
    with pytest.raises(ValueError):
        TLAlgebra(WIDTH_CAP + 1, 2)


def test_tlj_conditional_expectation():
    T = build_tlj(5, 2)
    tl = T.algebra
    E = T.inclusion.cond_exp_element
    assert tl.equal(E(tl.jones(1)), tl.scale(GQ(Fraction(1, 4)), tl.one()))
    x = tl.mul(tl.jones(2), tl.jones(3))
    assert tl.equal(E(x), x)
