"""The basic construction ``M_1 = <M, e>`` of an inclusion ``N <= M``.

Two routes to ``M_1`` live here:

* a semantic normal-form algebra: elements ``a + sum_i u_i e c_i`` with a fixed
  spanning set ``u_i`` of ``M`` as a right ``N``-module, whose trace is
  ``tr(a) + idx^-1 sum tr(c_i u_i)``;
* a symbolic rewrite of extended terms (``e x e -> E(x) e``) into
  ``a + sum b_i e c_i``.

They are independent, so each cross-checks the other and any concrete model.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

from .algebra import ExactAlgebra
from .linalg import ComplexLinearMap, ComplexSpan, QMat
from .presentation import Presentation, WordBasis
from .scalar import GQ, bits_for, sqrt_dyadic
from .search import BudgetExhausted, ComputablePoint, ExactPoint
from .subfactor import Inclusion, IndexEstimate, _realify_list, positive_points, substitute
from .terms import (
    E_LETTER,
    Adj,
    Enumerator,
    Expect,
    Gen,
    Jones,
    One,
    Poly,
    Prod,
    Scaled,
    Sum,
    Term,
    Zero,
    concat,
    poly_to_term,
    word_to_term,
)


# ---------------------------------------------------------------- normal-form algebra

class BasicConstructionAlgebra(ExactAlgebra):
    """``M_1`` realized through normal forms over an exact base algebra ``M``.

    ``cond_exp`` maps base elements to base elements (onto ``N``); ``sub_elements``
    span ``N``; the ``u_i`` are picked greedily from ``u_candidates`` until
    ``sum_i u_i N`` stops growing.  ``base_basis`` (a list, or a zero-argument
    callable producing one) is a basis of ``M`` used for the faithful action on
    ``L^2(M)``; it is only needed by ``vec`` and ``operator``.
    """

    def __init__(self, base: ExactAlgebra, cond_exp: Callable, index: Fraction,
                 sub_elements: Sequence, u_candidates: Sequence, base_basis=None):
        self.base = base
        self.E = cond_exp
        self.index = Fraction(index)
        self.inv_index = 1 / self.index
        self.sub_elements = list(sub_elements)
        cap = getattr(base, "dimension", None)
        span = ComplexSpan(len(base.vec(base.one())))
        us, cols = [], []
        for u in u_candidates:
            grew = False
            new_cols = []
            for f in self.sub_elements:
                v = base.vec(base.mul(u, f))
                grew = span.add(v) or grew
                new_cols.append(v)
            if grew:
                us.append(u)
                cols += new_cols
            if cap is not None and span.rank == cap:
                break
        self.us = us
        self.r = len(us)
        self._decomp = ComplexLinearMap(cols)
        self._uadj = [base.adjoint(u) for u in us]
        self._Euu = [[cond_exp(base.mul(ua, u)) for u in us] for ua in self._uadj]
        self._zero_cs = tuple(base.zero() for _ in us)
        self._base_basis = base_basis
        self._rep = None
        self.dimension = None
        self.jones = (base.zero(), self.decompose(base.one()))

    def __repr__(self):
        return f"BasicConstructionAlgebra(r={self.r}, index={self.index})"

    # ------------------------------------------------------------ helpers
    def decompose(self, y) -> tuple:
        """``n_i`` in ``N`` with ``y = sum_i u_i n_i``."""
        B = self.base
        coef = self._decomp.solve(B.vec(y))
        d = len(self.sub_elements)
        out = []
        for i in range(self.r):
            n = B.zero()
            for s in range(d):
                c = coef[i * d + s]
                if c:
                    n = B.add(n, B.scale(c, self.sub_elements[s]))
            out.append(n)
        return tuple(out)

    def embed(self, a):
        return (a, self._zero_cs)

    def cond_exp_m(self, x):
        """``E_M(a + sum u_i e c_i) = a + idx^-1 sum u_i c_i`` (a base element)."""
        B = self.base
        a, cs = x
        acc = B.zero()
        for u, c in zip(self.us, cs):
            acc = B.add(acc, B.mul(u, c))
        return B.add(a, B.scale(GQ(self.inv_index), acc))

    # ------------------------------------------------------------ protocol
    def one(self):
        return self.embed(self.base.one())

    def zero(self):
        return self.embed(self.base.zero())

    def add(self, x, y):
        B = self.base
        return (B.add(x[0], y[0]), tuple(B.add(a, b) for a, b in zip(x[1], y[1])))

    def sub(self, x, y):
        B = self.base
        return (B.sub(x[0], y[0]), tuple(B.sub(a, b) for a, b in zip(x[1], y[1])))

    def scale(self, c, x):
        B = self.base
        return (B.scale(c, x[0]), tuple(B.scale(c, a) for a in x[1]))

    def _nonzero(self, cs) -> list[int]:
        return [i for i, c in enumerate(cs) if not self.base.is_zero(c)]

    def mul(self, x, y):
        B = self.base
        a, cs = x
        b, ds = y
        live_c = self._nonzero(cs)
        live_d = self._nonzero(ds)
        out = [B.zero() for _ in range(self.r)]
        if live_c:
            for l in live_c:
                out[l] = B.mul(cs[l], b)
        if live_d and not B.is_zero(a):
            for j in live_d:
                ns = self.decompose(B.mul(a, self.us[j]))
                for l, n in enumerate(ns):
                    if not B.is_zero(n):
                        out[l] = B.add(out[l], B.mul(n, ds[j]))
        for l in live_c:
            for j in live_d:
                w = self.E(B.mul(cs[l], self.us[j]))
                out[l] = B.add(out[l], B.mul(w, ds[j]))
        return (B.mul(a, b), tuple(out))

    def adjoint(self, x):
        B = self.base
        a, cs = x
        out = [B.zero() for _ in range(self.r)]
        for i in self._nonzero(cs):
            ns = self.decompose(B.adjoint(cs[i]))
            for l, n in enumerate(ns):
                if not B.is_zero(n):
                    out[l] = B.add(out[l], B.mul(n, self._uadj[i]))
        return (B.adjoint(a), tuple(out))

    def trace(self, x) -> GQ:
        B = self.base
        a, cs = x
        acc = GQ(0)
        for u, c in zip(self.us, cs):
            acc = acc + B.trace(B.mul(c, u))
        return B.trace(a) + acc * GQ(self.inv_index)

    def norm2_sq(self, x) -> Fraction:
        B = self.base
        a, cs = x
        live = self._nonzero(cs)
        total = B.norm2_sq(a)
        if live:
            ad = B.adjoint(a)
            cross = GQ(0)
            for j in live:
                cross = cross + B.trace(B.mul(cs[j], B.mul(ad, self.us[j])))
            total += 2 * cross.re * self.inv_index
            quad = GQ(0)
            cadj = {i: B.adjoint(cs[i]) for i in live}
            for i in live:
                for j in live:
                    quad = quad + B.trace(B.mul(cs[j], B.mul(cadj[i], self._Euu[i][j])))
            total += quad.re * self.inv_index
        return total

    def equal(self, x, y) -> bool:
        return self.norm2_sq(self.sub(x, y)) == 0

    def is_zero(self, x) -> bool:
        return self.norm2_sq(x) == 0

    # ------------------------------------------------------------ L^2(M) action
    def _representation(self):
        if self._rep is None:
            B = self.base
            bb = self._base_basis() if callable(self._base_basis) else self._base_basis
            if bb is None:
                raise ValueError("no basis of the base algebra was supplied")
            bb = list(bb)
            solver = ComplexLinearMap([B.vec(b) for b in bb])
            D = len(bb)

            def coords(y):
                return solver.solve(B.vec(y))

            def column_matrix(cols):
                return QMat.from_rows([[cols[j][i] for j in range(D)] for i in range(D)])

            Lb = [column_matrix([coords(B.mul(b, bk)) for bk in bb]) for b in bb]
            Pm = column_matrix([coords(self.E(bk)) for bk in bb])
            badj = [B.adjoint(b) for b in bb]
            G = QMat.from_rows([[B.trace(B.mul(badj[j], bb[k])) for k in range(D)] for j in range(D)])
            self._rep = (coords, Lb, Pm, G, D)
            self._LuP = [self._left(u) * Pm for u in self.us]
        return self._rep

    def _left(self, y) -> QMat:
        coords, Lb, _, _, D = self._rep
        out = QMat.zeros(D)
        for c, L in zip(coords(y), Lb):
            if c:
                out = out + L.scale(c)
        return out

    def matrix(self, x) -> QMat:
        """Matrix of ``x`` acting on ``L^2(M)`` in the base-basis coordinates."""
        self._representation()
        a, cs = x
        X = self._left(a)
        for i in self._nonzero(cs):
            X = X + self._LuP[i] * self._left(cs[i])
        return X

    def vec(self, x) -> list:
        X = self.matrix(x)
        return X.re.entries() + X.im.entries()

    def operator(self, x):
        G = self._representation()[3]
        return self.matrix(x), G


# ---------------------------------------------------------------- presentations

def _m_basis(I: Inclusion) -> WordBasis:
    return I.ambient.word_basis()


def induce_m1_presentation(I: Inclusion, model: Presentation | None = None) -> Presentation:
    """``M_1^#``: generators of ``M`` plus ``e``; the oracle is the normal-form trace formula."""
    if I.index is None:
        raise ValueError("the basic-construction oracle needs the index")
    A = I.algebra
    basis = _m_basis(I)
    E = lambda x: I.cond_exp_element(x)  # noqa: E731
    alg = BasicConstructionAlgebra(A, E, I.index, I.sub_basis.elements, basis.elements, basis.elements)
    gens = [alg.embed(g) for g in I.ambient.generators]

    def expect(x):
        return alg.embed(I.cond_exp_element(alg.cond_exp_m(x)))

    P = Presentation(
        alg, gens, name=f"{I.name}:M1", provenance="induced-m1", jones=alg.jones, expect=expect,
        model=model if model is not None else I.m1_model,
    )
    P.inclusion = I
    return P


def induce_n_presentation(I: Inclusion) -> Presentation:
    """``N^#`` with special points ``E_N(g_j)`` for the generators of ``M`` and the sub-generators."""
    A = I.algebra
    gens = [I.cond_exp_element(g) for g in I.ambient.generators]
    gens += [I.ambient.evaluate(s) for s in I.sub_generators]
    P = Presentation(A, gens, name=f"{I.name}:N", provenance="induced-n")
    P.inclusion = I
    return P


def induced_n_term(I: Inclusion, t: Term) -> Term:
    """Rewrite a term of ``N^#`` as a term of ``M^#`` (with ``E`` atoms)."""
    k = I.ambient.arity
    images = [Expect(Gen(j + 1)) for j in range(k)] + list(I.sub_generators)
    return substitute(t, images)


# ---------------------------------------------------------------- symbolic normal form

@dataclass
class NormalForm:
    """``a + sum_i b_i e c_i`` with ``E(.)`` atoms allowed inside the pieces."""

    a: Poly
    summands: list  # (b: Poly, c: Poly)
    trace: list = field(default_factory=list)  # (word, e-count before, e-count after)

    def to_term(self) -> Term:
        parts = []
        if not self.a.is_zero():
            parts.append(poly_to_term(self.a))
        for b, c in self.summands:
            parts.append(_prod(poly_to_term(b), Jones(), poly_to_term(c)))
        if not parts:
            return Zero()
        return parts[0] if len(parts) == 1 else Sum(tuple(parts))

    def strip_term(self) -> Term:
        """``a + sum_i b_i E(c_i)``: the unique ``z`` with ``z e = x e``."""
        parts = []
        if not self.a.is_zero():
            parts.append(poly_to_term(self.a))
        for b, c in self.summands:
            parts.append(_prod(poly_to_term(b), Expect(poly_to_term(c))))
        if not parts:
            return Zero()
        return parts[0] if len(parts) == 1 else Sum(tuple(parts))


def _prod(*factors: Term) -> Term:
    fs = tuple(f for f in factors if not isinstance(f, One))
    if not fs:
        return One()
    return fs[0] if len(fs) == 1 else Prod(fs)


def _e_positions(w: tuple) -> list[int]:
    return [i for i, a in enumerate(w) if a == E_LETTER]


def _expect_letter(segment: tuple) -> tuple:
    return (2, 0, 0, Poly({segment: GQ(1)}).key())


def rewrite_word(w: tuple) -> tuple[tuple, list[int]]:
    """Apply ``e x e -> E(x) e`` at the leftmost pair of ``e`` until one ``e`` is left."""
    counts = [len(_e_positions(w))]
    while True:
        pos = _e_positions(w)
        if len(pos) < 2:
            return w, counts
        i, j = pos[0], pos[1]
        seg = w[i + 1:j]
        w = concat(concat(w[:i], (_expect_letter(seg), E_LETTER)), w[j + 1:])
        counts.append(len(_e_positions(w)))


def to_normal_form(t: Term, I: Inclusion | None = None) -> NormalForm:
    """Symbolic normal form of an extended term (``e*e = e`` and ``e* = e`` act first)."""
    p = t.flatten()
    a: dict = {}
    groups: dict = {}
    log = []
    for w, c in p.monomials():
        nw, counts = rewrite_word(w)
        log.append((w, counts))
        pos = _e_positions(nw)
        if not pos:
            a[nw] = a.get(nw, GQ(0)) + c
            continue
        i = pos[0]
        left, right = nw[:i], nw[i + 1:]
        g = groups.setdefault(right, {})
        g[left] = g.get(left, GQ(0)) + c
    summands = []
    for right in sorted(groups, key=lambda w: (len(w), w)):
        b = Poly(groups[right])
        if not b.is_zero():
            summands.append((b, Poly({right: GQ(1)})))
    return NormalForm(Poly(a), summands, log)


def m1_trace(I: Inclusion, t: Term, k: int = 0) -> GQ:
    """``tr(t)`` in ``M_1`` from the normal form: ``tr(a) + idx^-1 sum tr(b_i c_i)`` (exact)."""
    nf = to_normal_form(t, I)
    P = I.presentation
    total = P.exact_trace(poly_to_term(nf.a)) if not nf.a.is_zero() else GQ(0)
    acc = GQ(0)
    for b, c in nf.summands:
        acc = acc + P.exact_trace(Prod((poly_to_term(b), poly_to_term(c))))
    return total + acc * GQ(1 / I.index)


def m1_norm(I: Inclusion, t: Term, k: int) -> Fraction:
    """``||t||_2`` in ``M_1`` within ``2^-k`` by normal-forming ``t* t``."""
    v = m1_trace(I, Prod((Adj(t), t)))
    return sqrt_dyadic(v.re, k)


def strip_e(I: Inclusion, v, k: int) -> Term:
    """An ``M`` term within ``2^-k`` of the unique ``y`` with ``v e = y e``."""
    if isinstance(v, ComputablePoint):
        kk = k + bits_for(Fraction(1, 1)) + _index_bits(I.index)
        x = v.term(kk)
    else:
        x = v
    z = to_normal_form(x, I).strip_term()
    return I.compile(I.presentation.evaluate(z))


def _index_bits(idx: Fraction | None) -> int:
    # sqrt(idx) <= 2^b suffices since ||y e||_2 = idx^(-1/2) ||y||_2
    b = 0
    idx = Fraction(idx if idx is not None else 1)
    while (1 << (2 * b)) < idx:
        b += 1
    return b + 1


# ---------------------------------------------------------------- tower

@dataclass
class TowerLevel:
    level: int
    presentation: Presentation
    inclusion: Inclusion | None
    index: Fraction
    jones_trace: Fraction


def _tower_inclusion(I: Inclusion, P1: Presentation, name: str) -> Inclusion:
    """``M <= M_1`` with ``E_M`` given by the normal-form formula."""
    alg: BasicConstructionAlgebra = P1.algebra
    flat = Presentation(alg, list(P1.generators) + [alg.jones], name=name, provenance="tower")
    subs = [Gen(j + 1) for j in range(P1.arity)]
    declared = lambda x: alg.embed(alg.cond_exp_m(x))  # noqa: E731
    J = _LazyInclusion(flat, subs, declared=declared, index=I.index, name=name)
    return J


class _LazyInclusion(Inclusion):
    """An inclusion whose sub-basis is the embedded basis of the smaller algebra.

    Avoids exploring words in the larger normal-form algebra when the
    subalgebra's basis is already known.
    """

    def __init__(self, ambient, sub_generators, *, declared, index, name):
        self.ambient = ambient
        self.sub_generators = list(sub_generators)
        self.declared = declared
        self.index = Fraction(index)
        self.name = name
        self.priority = ("declared",)
        self.m1_model = None
        self.spec = ""
        self._gram_solver = None
        self._sub_adj = None
        self.presentation = ambient.with_expectation(self.cond_exp_element)
        self.basis = None
        self.sub_basis = None
        self.sub_presentation = None


def jones_tower(I: Inclusion, depth: int) -> list[TowerLevel]:
    """``M_1, ..., M_depth`` by iterating the normal-form construction.

    Level ``n`` has the generators of ``M`` followed by ``e_1..e_{n-1}`` as plain
    letters, and ``e = e_n`` as its Jones letter.  Each step needs a basis of
    the previous-but-one level, so cost grows quickly with depth.
    """
    levels = []
    P1 = induce_m1_presentation(I)
    alg1: BasicConstructionAlgebra = P1.algebra
    levels.append(TowerLevel(1, P1, I, I.index, alg1.trace(alg1.jones).re))
    prev_P = P1
    lower = list(_m_basis(I).elements)  # basis of M_{n-2}, as elements of its own algebra
    for n in range(2, depth + 1):
        algp: BasicConstructionAlgebra = prev_P.algebra
        J = _tower_inclusion(I, prev_P, f"{I.name}:M{n - 1}")
        low = [algp.embed(b) for b in lower]
        cands = [algp.one()] + [algp.mul(b, algp.jones) for b in low]
        flat = J.ambient
        alg = BasicConstructionAlgebra(algp, J.declared, I.index, low, cands, lambda f=flat: f.word_basis().elements)
        gens = [alg.embed(g) for g in flat.generators]

        def expect(x, alg=alg, J=J):
            return alg.embed(J.declared(alg.cond_exp_m(x)))

        P = Presentation(alg, gens, name=f"{I.name}:M{n}", provenance="induced-m1", jones=alg.jones, expect=expect)
        P.inclusion = J
        levels.append(TowerLevel(n, P, J, I.index, alg.trace(alg.jones).re))
        if n < depth:
            lower = flat.word_basis().elements
        prev_P = P
    return levels


def tower_index(level: TowerLevel, k: int = 40) -> Fraction:
    """``[M_n : M_{n-1}] = tr(e_n)^-1`` from the level's 2-norm oracle (``||e||_2^2 = tr(e)``)."""
    P = level.presentation
    return 1 / P.exact_norm_sq(Jones())


# ---------------------------------------------------------------- bounded jump procedures

def index_jump_estimate(I: Inclusion, budget: int = 64) -> IndexEstimate:
    """Running minimum of ``||E(x)||_2^2 / ||x||_2^2`` over positive points, without the index."""
    P = I.ambient
    A = I.algebra
    best = Fraction(1)
    history = []
    examined = 0
    for tag, x in positive_points(I):
        if examined >= budget:
            break
        xv = P.evaluate(x)
        ratio = A.norm2_sq(I.cond_exp_element(xv)) / A.norm2_sq(xv)
        examined += 1
        best = min(best, ratio)
        history.append(best)
    return IndexEstimate(best, Fraction(0), "pp-inf-formula", False, history, examined)


@dataclass
class JumpSearchResult:
    term: Term
    source: str
    examined: int
    z_count: int
    z_rank: int
    spanning: bool
    note: str


def cond_exp_jump_search(I: Inclusion, t: Term, k: int, budget: int = 2000,
                         z_terms: Sequence[Term] | None = None) -> JumpSearchResult:
    """Find an ``N`` rational point ``y`` with ``|tr((t-y) z)| < 2^(-2k)`` for every test ``z``.

    ``z`` ranges over ``z_terms`` (default: the sub-basis words).  The acceptance
    test is only sound once the ``z`` set spans ``N``; the result records that.
    """
    P = I.ambient
    A = I.algebra
    sub = I.sub_presentation
    if z_terms is None:
        z_terms = [substitute(I.sub_basis.term(s), I.sub_generators) for s in range(I.sub_basis.dimension)]
    zs = [P.evaluate(z) for z in z_terms]
    span = ComplexSpan(len(A.vec(A.one())))
    for z in zs:
        span.add(A.vec(z))
    spanning = span.rank >= I.sub_basis.dimension
    theta = Fraction(1, 1 << (2 * k))
    x = P.evaluate(t)

    # proposal: least squares onto the span of the sub-basis, with trace inner products only
    F = I.sub_basis.elements
    Fa = [A.adjoint(f) for f in F]
    cols = [_realify_list([A.trace(A.mul(fa, F[s])) for fa in Fa]) for s in range(len(F))]
    rhs = _realify_list([A.trace(A.mul(fa, x)) for fa in Fa])
    coef = ComplexLinearMap(cols).solve(rhs)
    parts = [Scaled(c, I.sub_basis.term(s)) for s, c in enumerate(coef) if c]
    proposal = Zero() if not parts else Sum(tuple(parts))

    def ok(y_sub: Term) -> bool:
        y = sub.evaluate(y_sub)
        d = A.sub(x, y)
        for z in zs:
            v = A.trace(A.mul(d, z))
            if v.abs2() >= theta * theta:
                return False
        return True

    en = Enumerator(sub.arity)
    examined = 0
    candidates = [("least-squares", proposal)]
    n = 0
    while examined < budget:
        if candidates:
            tag, y = candidates.pop()
        else:
            tag, y = f"canonical#{n}", en.unrank(n)
            n += 1
        examined += 1
        if ok(y):
            note = "sound: z-set spans N" if spanning else "unsound below spanning budget"
            return JumpSearchResult(substitute(y, I.sub_generators), tag, examined, len(zs), span.rank, spanning, note)
    raise BudgetExhausted("jump search for E_N(t)", examined)
