from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from vnwb.gallery import build_truncated_r
from vnwb.presentation import is_projection
from vnwb.scalar import GQ
from vnwb.search import (
    BudgetExhausted,
    Candidate,
    Unrealizable,
    Verdict,
    candidate_stream,
    find_identity,
    find_implement,
    find_projection_near,
    find_subequivalence,
    is_exact_projection,
    is_quasi_implement,
    is_quasi_projection,
    least_witness,
    nearest_projection_oracle,
    norm_lt,
    orthogonal_projection_family,
    polar_implement_oracle,
    projection_with_exact_trace,
    projection_with_trace_approx,
    qi_threshold,
    qp_threshold,
    trace_within,
)
from vnwb.terms import Adj, Gen, One, Prod, Scaled, Sum, parse_term


@pytest.fixture(scope="module")
def r2():
    return build_truncated_r(2)


def _diff(a, b):
    return Sum((a, Scaled(GQ(-1), b)))


def _ints(n):
    return (Candidate(i, "canonical", Gen(1)) for i in range(n))


@given(st.sets(st.integers(0, 60), max_size=5), st.integers(1, 5), st.integers(1, 80))
def test_least_witness_ignores_worker_count(hits, workers, budget):
    pred = lambda c: c.index in hits  # noqa: E731
    expected = min((h for h in hits if h < budget), default=None)
    if expected is None:
        with pytest.raises(BudgetExhausted) as info:
            least_witness(_ints(1000), pred, budget, workers)
        assert info.value.examined == budget
    else:
        win, examined = least_witness(_ints(1000), pred, budget, workers)
        assert win.index == expected
        assert examined <= budget


def test_candidate_stream_interleaves_proposals(r2):
    props = [("p1", One()), ("p2", Gen(2))]
    head = [c.source for _, c in zip(range(6), candidate_stream(r2, props))]
    assert head[:4] == ["p1", "canonical#0", "p2", "canonical#1"]
    assert head[4:] == ["canonical#2", "canonical#3"]


def test_norm_lt_and_trace_within(r2):
    assert norm_lt(r2, Gen(1), Fraction(1)) is Verdict.TRUE
    assert norm_lt(r2, Gen(1), Fraction(1, 2)) is Verdict.FALSE
    assert trace_within(r2, Gen(1), Fraction(1, 2), Fraction(1, 100))
    assert not trace_within(r2, Gen(1), Fraction(1, 4), Fraction(1, 100))


@pytest.mark.parametrize("eps", [Fraction(1, 2), Fraction(1, 4), Fraction(1, 8)])
def test_scaled_projection_is_quasi_projection(r2, eps):
    eta = qp_threshold(eps) / 4
    t = Scaled(GQ(1 - eta), Gen(1))
    assert is_quasi_projection(r2, t, eps).verdict
    assert not is_quasi_projection(r2, Gen(2), eps).verdict  # a nilpotent
    assert not is_quasi_projection(r2, Gen(1), eps).verdict  # not strictly inside the ball


def test_quasi_implement_check(r2):
    # g2 = e12 (x) 1 implements e22 (x) 1 ~ e11 (x) 1
    p, q = Prod((Adj(Gen(2)), Gen(2))), Gen(1)
    eps = Fraction(1, 2)
    v = Scaled(GQ(1 - qi_threshold(eps) / 4), Gen(2))
    assert is_quasi_implement(r2, v, p, q, eps).verdict
    assert not is_quasi_implement(r2, v, q, p, eps).verdict
    assert not is_quasi_implement(r2, Gen(2), p, q, eps).flat_ok


@pytest.mark.parametrize("lam", [Fraction(1, 4), Fraction(1, 2), Fraction(3, 4), Fraction(1)])
def test_projection_with_exact_trace(r2, lam):
    chain = projection_with_exact_trace(r2, lam)
    p = chain.exact_term
    assert is_exact_projection(r2, p)
    assert r2.exact_trace(p) == GQ(lam)
    # the chain decreases and its traces bracket lam from above
    for a, b in zip(chain.terms, chain.terms[1:]):
        assert r2.algebra.equal(r2.evaluate(Prod((a, b))), r2.evaluate(b))
    assert all(t >= lam for t in chain.traces)


def test_projection_with_unrealizable_trace(r2):
    with pytest.raises(Unrealizable):
        projection_with_exact_trace(r2, Fraction(1, 3))
    with pytest.raises(ValueError):
        projection_with_exact_trace(r2, Fraction(0))


def test_projection_with_trace_approx(r2):
    pt = projection_with_trace_approx(r2, Fraction(1, 2), 8)
    t = pt.term(10)
    assert abs(r2.exact_trace(t).re - Fraction(1, 2)) < Fraction(1, 2**8)
    with pytest.raises(Unrealizable):
        projection_with_trace_approx(r2, Fraction(1, 3), 8)


def test_orthogonal_family(r2):
    fam = orthogonal_projection_family(r2, Fraction(1, 4))
    terms = [p.term(20) for p in fam]
    A = r2.algebra
    vals = [r2.evaluate(t) for t in terms]
    for i, x in enumerate(vals):
        assert is_projection(A, x)
        for y in vals[i + 1:]:
            assert A.is_zero(A.mul(x, y))
    total = vals[0]
    for v in vals[1:]:
        total = A.add(total, v)
    assert A.equal(total, A.one())


@pytest.mark.parametrize("k", [4, 10])
def test_find_implement(r2, k):
    p, q = Gen(1), parse_term("g1*g3", 4)
    C = projection_with_exact_trace(r2, Fraction(1, 2)).exact_term
    v = find_implement(r2, C, Sum((One(), Scaled(GQ(-1), C))))
    t = v.term(k)
    tol = Fraction(1, 2 ** k) * 6
    assert r2.norm(_diff(Prod((Adj(t), t)), C), k + 4) < tol
    assert r2.norm(_diff(Prod((t, Adj(t))), Sum((One(), Scaled(GQ(-1), C)))), k + 4) < tol
    with pytest.raises(Unrealizable):
        find_implement(r2, p, q)


def test_find_subequivalence(r2):
    small = parse_term("g1*g3", 4)
    q_sub, v = find_subequivalence(r2, small, Gen(1))
    A = r2.algebra
    qs = r2.evaluate(q_sub)
    assert is_projection(A, qs)
    assert A.equal(A.mul(qs, r2.evaluate(Gen(1))), qs)
    assert r2.exact_trace(q_sub) == GQ(Fraction(1, 4))
    with pytest.raises(Unrealizable):
        find_subequivalence(r2, Gen(1), small)


def test_find_identity_by_search():
    P = build_truncated_r(1)
    assert find_identity(P, 5) == One()
    P.unit_special = False
    t = find_identity(P, 5)
    assert P.norm(_diff(t, One()), 12) < Fraction(1, 2**5)


def test_find_projection_near_respects_predicate(r2):
    eps = Fraction(1, 4)
    w = find_projection_near(r2, lambda t: trace_within(r2, t, Fraction(3, 4), Fraction(1, 16)), eps)
    assert w.source.startswith("model-projection")
    assert w.defects[0] < qp_threshold(eps) + Fraction(1, 2**20)
    with pytest.raises(BudgetExhausted):
        find_projection_near(r2, lambda t: False, eps, budget=12)


def _random_projection(rng, d, r):
    z = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    q, _ = np.linalg.qr(z)
    v = q[:, :r]
    return v @ v.conj().T


@given(st.integers(0, 10**6), st.integers(1, 3))
def test_nearest_projection_oracle_recovers_projection(seed, r):
    rng = np.random.default_rng(seed)
    p = _random_projection(rng, 4, r)
    noise = rng.normal(size=(4, 4)) * 1e-4
    out, ambiguous = nearest_projection_oracle([p + noise])
    assert not ambiguous
    assert np.allclose(out[0], p, atol=1e-3)


@given(st.integers(0, 10**6))
def test_polar_oracle_returns_partial_isometry(seed):
    rng = np.random.default_rng(seed)
    p = np.diag([1, 1, 0, 0]).astype(complex)
    q = np.diag([0, 0, 1, 1]).astype(complex)
    v = np.zeros((4, 4), complex)
    v[2, 0] = v[3, 1] = 1
    x = v + rng.normal(size=(4, 4)) * 1e-6
    w = polar_implement_oracle([x], [p], [q], 1e-12)[0]
    assert np.allclose(w.conj().T @ w, p, atol=1e-9)
    assert np.allclose(w @ w.conj().T, q, atol=1e-9)
