import random
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from vnwb.algebra import MultiMatrixAlgebra
from vnwb.gallery import build_truncated_r
from vnwb.linalg import QMat
from vnwb.presentation import (
    CORNER_FLOOR,
    MatrixPresentation,
    WordBasis,
    corner,
    flat_bound,
    inner_product,
    is_projection,
    kaplansky_approx,
    model_projections,
    projection_traces,
    trace,
    trace_inner,
)
from vnwb.scalar import GQ
from vnwb.terms import Adj, Gen, One, Prod, Scaled, Sum, parse_term, random_term

seeds = st.integers(0, 2**32 - 1)


@pytest.fixture(scope="module")
def r2():
    return build_truncated_r(2)


@pytest.fixture(scope="module")
def two_blocks():
    """M_2 (+) C with trace weights 2/3, 1/3."""
    A = MultiMatrixAlgebra([2, 1], [Fraction(2, 3), Fraction(1, 3)])
    g1 = (QMat.from_rows([[0, 1], [0, 0]]), QMat.from_rows([[0]]))
    g2 = (QMat.from_rows([[1, 0], [0, 0]]), QMat.from_rows([[1]]))
    return MatrixPresentation(A, [g1, g2], name="M2+C")


def _numpy_eval(P, t):
    """Independent evaluation with complex floating point matrices."""
    gens = [[b.to_complex() for b in g] for g in P.generators]
    dims = P.algebra.dims

    def ev(p):
        out = [np.zeros((d, d), complex) for d in dims]
        for w, c in p.monomials():
            blocks = [np.eye(d, dtype=complex) for d in dims]
            for letter in w:
                _, i, star, _ = letter
                g = gens[i - 1]
                blocks = [b @ (x.conj().T if star else x) for b, x in zip(blocks, g)]
            out = [o + complex(c) * b for o, b in zip(out, blocks)]
        return out

    return ev(t.flatten())


def _numpy_norm(P, blocks):
    A = P.algebra
    return np.sqrt(sum(float(w) / d * np.sum(np.abs(b) ** 2) for b, d, w in zip(blocks, A.dims, A.weights)))


@given(seeds, st.integers(0, 24))
def test_norm_oracle_matches_float_oracle(seed, k):
    P = build_truncated_r(2)
    t = random_term(random.Random(seed), P.arity, 3)
    q = P.norm(t, k)
    expected = _numpy_norm(P, _numpy_eval(P, t))
    assert abs(float(q) - expected) <= 2.0 ** -k + 1e-9


@given(seeds)
def test_norm_oracle_on_two_blocks(seed):
    P = MatrixPresentation(MultiMatrixAlgebra([2, 1], [Fraction(2, 3), Fraction(1, 3)]),
                           [(QMat.from_rows([[0, 1], [0, 0]]), QMat.from_rows([[0]])),
                            (QMat.from_rows([[1, 0], [0, 0]]), QMat.from_rows([[1]]))])
    t = random_term(random.Random(seed), 2, 3)
    assert abs(float(P.norm(t, 30)) - _numpy_norm(P, _numpy_eval(P, t))) < 1e-8


@given(seeds, seeds)
def test_trace_is_tracial(s1, s2):
    P = build_truncated_r(2)
    x = random_term(random.Random(s1), P.arity, 2)
    y = random_term(random.Random(s2), P.arity, 2)
    assert P.exact_trace(Prod((x, y))) == P.exact_trace(Prod((y, x)))
    assert P.exact_trace(Adj(x)) == P.exact_trace(x).conj()
    assert P.exact_trace(Prod((Adj(x), x))).re >= 0


@given(seeds, st.integers(0, 20))
def test_polarized_trace_within_tolerance(seed, k):
    P = build_truncated_r(1)
    t = random_term(random.Random(seed), P.arity, 2)
    got, exact = trace(P, t, k), P.exact_trace(t)
    eps = Fraction(1, 2 ** k)
    assert abs(got.re - exact.re) < eps and abs(got.im - exact.im) < eps


@given(seeds, seeds)
def test_inner_product_by_polarization(s1, s2):
    P = build_truncated_r(1)
    s = random_term(random.Random(s1), P.arity, 2)
    t = random_term(random.Random(s2), P.arity, 2)
    exact = P.exact_trace(Prod((Adj(t), s)))
    got = inner_product(P, s, t, 16)
    assert abs(got.re - exact.re) < Fraction(1, 2**16) and abs(got.im - exact.im) < Fraction(1, 2**16)
    tin = trace_inner(P, s, t, 16)
    exact2 = P.exact_trace(Prod((Adj(s), t)))
    assert abs(tin.re - exact2.re) < Fraction(1, 2**16) and abs(tin.im - exact2.im) < Fraction(1, 2**16)


def test_trace_weights_on_two_blocks(two_blocks):
    P = two_blocks
    # tr(g2) = 2/3 * 1/2 + 1/3 * 1
    assert P.exact_trace(Gen(2)) == GQ(Fraction(2, 3))
    assert P.exact_trace(Prod((Gen(1), Adj(Gen(1))))) == GQ(Fraction(1, 3))


@given(seeds)
def test_universal_flat_bound_is_sound(seed):
    P = build_truncated_r(2)
    t = random_term(random.Random(seed), P.arity, 3)
    b = flat_bound(t, "universal").value
    x = P.evaluate(t)
    assert P.algebra.op_norm_le(x, b)


@given(seeds, st.integers(4, 24))
def test_model_flat_bound_is_tight(seed, k):
    P = build_truncated_r(1)
    t = random_term(random.Random(seed), P.arity, 2)
    fb = flat_bound(t, "model", P, k)
    x = P.evaluate(t)
    assert P.algebra.op_norm_le(x, fb.value)
    assert fb.value == 0 or not P.algebra.op_norm_le(x, fb.value - Fraction(1, 2 ** k))
    assert fb.value <= flat_bound(t, "universal").value + Fraction(1, 2 ** k)


def test_flat_bound_rejects_unknown_mode():
    with pytest.raises(ValueError):
        flat_bound(One(), "sup")


def test_word_basis_spans_and_compiles(r2):
    wb = r2.word_basis()
    assert wb.full and wb.dimension == 16
    x = r2.evaluate(parse_term("g1*g2 + (1/3)*g3'", 4))
    t = wb.compile(x)
    assert r2.algebra.equal(r2.evaluate(t), x)


def test_word_basis_is_deterministic():
    a = WordBasis(build_truncated_r(1)).words
    b = WordBasis(build_truncated_r(1)).words
    assert a == b


@pytest.mark.parametrize("n, expected", [(1, [Fraction(s, 2) for s in range(3)]),
                                         (2, [Fraction(s, 4) for s in range(5)])])
def test_projection_traces_of_full_matrix_algebras(n, expected):
    P = build_truncated_r(n)
    assert projection_traces(P.algebra, P.algebra.one(), Fraction(1)) == expected
    assert P.trace_spectrum() == expected


def test_model_projections_are_projections(two_blocks):
    A = two_blocks.algebra
    seen = []
    for tr, p in model_projections(A, A.one()):
        assert is_projection(A, p)
        assert A.trace(p).re == tr
        seen.append(tr)
    assert seen == sorted(seen)
    assert set(seen) == set(projection_traces(A, A.one(), Fraction(1)))


def test_corner_presentation_normalizes_trace(r2):
    p = parse_term("g1", 4)  # e11 in the first tensor factor
    C = corner(r2, p)
    assert C.exact_trace(One()) == GQ(1)
    # g1 g3 = e11 (x) e11 has trace 1/2 inside the corner
    assert C.exact_trace(C.lift(One())) == GQ(1)
    assert r2.exact_trace(Prod((p, Gen(3), p))) / r2.exact_trace(p) == GQ(Fraction(1, 2))


def test_corner_refuses_tiny_projection(r2):
    with pytest.raises(ValueError):
        corner(r2, Scaled(GQ(0), One()))
    assert CORNER_FLOOR > 0


def test_kaplansky_approximation(r2):
    x = r2.evaluate(parse_term("(1/2)*g1 + (1/2)*g4", 4))
    t = kaplansky_approx(r2, x, 10)
    assert r2.flat_bound_lt(t)
    diff = Sum((t, Scaled(GQ(-1), r2.compile_model_element(x))))
    assert r2.norm(diff, 20) < Fraction(1, 2**10)


def test_kaplansky_rejects_large_elements(r2):
    with pytest.raises(ValueError):
        kaplansky_approx(r2, r2.evaluate(parse_term("(2/1)*g1", 4)), 5)
