from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from vnwb.linalg import (
    ComplexLinearMap,
    ComplexSpan,
    QMat,
    complex_rank,
    gram_schmidt,
    is_positive_definite,
    is_positive_semidefinite,
)
from vnwb.scalar import (
    GQ,
    bits_for,
    floor_dyadic,
    format_scalar,
    parse_scalar,
    sqrt_dyadic,
    sqrt_upper,
)

fractions = st.fractions(min_value=-50, max_value=50, max_denominator=40)
gqs = st.builds(GQ, fractions, fractions)
small = st.fractions(min_value=-3, max_value=3, max_denominator=5)


def qmats(n):
    return st.lists(st.lists(st.builds(GQ, small, small), min_size=n, max_size=n), min_size=n, max_size=n).map(
        QMat.from_rows
    )


@given(gqs, gqs, gqs)
def test_field_axioms(a, b, c):
    assert (a + b) * c == a * c + b * c
    assert a * b == b * a
    assert (a * b).conj() == a.conj() * b.conj()
    assert a.abs2() == (a * a.conj()).re
    if b:
        assert (a / b) * b == a


@given(gqs)
def test_scalar_round_trip(q):
    assert parse_scalar(format_scalar(q)[1:-1]) == q


@pytest.mark.parametrize("text, value", [("3/4", GQ(Fraction(3, 4))), ("1/2-1/3 i", GQ(Fraction(1, 2), Fraction(-1, 3))),
                                         ("i", GQ(0, 1)), ("-i", GQ(0, -1))])
def test_parse_scalar_literals(text, value):
    assert parse_scalar(text) == value


@given(st.fractions(min_value=0, max_value=1000, max_denominator=1000), st.integers(0, 40))
def test_sqrt_dyadic_is_within_tolerance(x, k):
    q = sqrt_dyadic(x, k)
    assert q.denominator & (q.denominator - 1) == 0
    # |q - sqrt(x)| < 2^-k  <=>  q - 2^-k < sqrt(x) < q + 2^-k
    eps = Fraction(1, 2 ** k)
    assert max(q - eps, 0) ** 2 < x or x == 0
    assert (q + eps) ** 2 > x


@given(st.fractions(min_value=0, max_value=100, max_denominator=100))
def test_sqrt_upper_is_an_upper_bound(x):
    assert sqrt_upper(x) ** 2 >= x


@given(fractions, st.integers(0, 30))
def test_floor_dyadic(x, k):
    f = floor_dyadic(x, k)
    assert f <= x < f + Fraction(1, 2 ** k)


@given(st.fractions(min_value=Fraction(1, 10**6), max_value=10, max_denominator=10**6))
def test_bits_for_is_least(x):
    m = bits_for(x)
    assert Fraction(1, 2 ** m) < x
    assert m == 0 or Fraction(1, 2 ** (m - 1)) >= x


def test_bits_for_rejects_nonpositive():
    with pytest.raises(ValueError):
        bits_for(Fraction(0))


@given(qmats(3), qmats(3))
def test_qmat_against_numpy(a, b):
    assert np.allclose((a * b).to_complex(), a.to_complex() @ b.to_complex())
    assert np.allclose(a.adjoint().to_complex(), a.to_complex().conj().T)
    assert complex(a.trace()) == pytest.approx(np.trace(a.to_complex()))
    assert (a * b).adjoint() == b.adjoint() * a.adjoint()


@given(qmats(2), qmats(2))
def test_kron_mixed_product(a, b):
    assert (a.kron(b)) * (b.kron(a)) == (a * b).kron(b * a)


@given(qmats(3))
def test_gram_matrices_are_psd(a):
    h = a.adjoint() * a
    assert is_positive_semidefinite(h)
    assert is_positive_definite(h + QMat.identity(3))
    assert not is_positive_semidefinite(h - QMat.identity(3) * GQ(1000))


def _realified(v):
    return [c.re for c in v] + [c.im for c in v]


vector_lists = st.lists(st.lists(st.builds(GQ, small, small), min_size=3, max_size=3), min_size=1, max_size=4)


@given(vector_lists)
def test_rank_against_numpy(vectors):
    rank = complex_rank([_realified(v) for v in vectors])
    arr = np.array([[complex(c) for c in v] for v in vectors])
    assert rank == np.linalg.matrix_rank(arr)
    span = ComplexSpan(6)
    grew = [span.add(_realified(v)) for v in vectors]
    assert span.rank == rank == sum(grew)
    for v in vectors:
        assert span.contains(_realified(v))
        assert span.contains(_realified([GQ(0, 1) * c for c in v]))


@given(vector_lists)
def test_gram_schmidt_is_orthogonal_and_spanning(vectors):
    orth = gram_schmidt(vectors)
    assert len(orth) == complex_rank([_realified(v) for v in vectors])
    for i, u in enumerate(orth):
        for v in orth[:i]:
            assert sum((a.conj() * b for a, b in zip(v, u)), GQ(0)) == 0
    span = ComplexSpan(6)
    for u in orth:
        span.add(_realified(u))
    assert all(span.contains(_realified(v)) for v in vectors)


def test_linear_map_solves_with_redundant_columns():
    # columns (1, i), (i, -1) are complex-dependent; the third is independent
    cols = [[GQ(1), GQ(0, 1)], [GQ(0, 1), GQ(-1)], [GQ(1), GQ(0)]]
    realified = [[c.re for c in v] + [c.im for c in v] for v in cols]
    L = ComplexLinearMap(realified)
    b = [GQ(2), GQ(0, 3)]
    x = L.solve([c.re for c in b] + [c.im for c in b])
    got = [sum((xj * col[r] for xj, col in zip(x, cols)), GQ(0)) for r in range(2)]
    assert got == b


def test_linear_map_rejects_outside_span():
    cols = [[GQ(1), GQ(0)]]
    L = ComplexLinearMap([[c.re for c in v] + [c.im for c in v] for v in cols])
    with pytest.raises(ValueError):
        L.solve([0, 1, 0, 0])
