"""Inclusions ``N <= M``, conditional expectations, indices and Pimsner-Popa bases."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

from .linalg import ComplexLinearMap
from .presentation import Presentation, WordBasis
from .scalar import GQ, bits_for, sqrt_dyadic
from .search import ComputablePoint, ExactPoint
from .terms import Adj, Expect, Gen, One, Prod, Scaled, Sum, Term, Zero, round_term

SOURCES = ("declared", "backend", "basis")


class NoConditionalExpectation(ValueError):
    pass


def substitute(t: Term, images: Sequence[Term]) -> Term:
    """Replace ``g_j`` by ``images[j-1]`` throughout ``t``."""
    if isinstance(t, Gen):
        return images[t.index - 1]
    if isinstance(t, Adj):
        return Adj(substitute(t.arg, images))
    if isinstance(t, Scaled):
        return Scaled(t.coef, substitute(t.arg, images))
    if isinstance(t, Sum):
        return Sum(tuple(substitute(a, images) for a in t.args))
    if isinstance(t, Prod):
        return Prod(tuple(substitute(a, images) for a in t.args))
    if isinstance(t, Expect):
        return Expect(substitute(t.arg, images))
    return t


class Inclusion:
    """A subfactor datum ``N <= M`` over an exact ambient presentation.

    ``sub_generators`` are terms of the ambient presentation generating ``N``.
    ``declared`` is an optional closed-form conditional expectation acting on
    ambient elements; ``index`` an optional declared value of ``[M:N]``.
    """

    def __init__(
        self,
        ambient: Presentation,
        sub_generators: Sequence[Term],
        *,
        declared: Callable | None = None,
        index: Fraction | None = None,
        name: str = "",
        priority: Sequence[str] = ("declared", "backend"),
        m1_model=None,
        spec: str = "",
    ):
        self.ambient = ambient
        self.sub_generators = list(sub_generators)
        self.declared = declared
        self.index = Fraction(index) if index is not None else None
        self.name = name
        self.priority = tuple(priority)
        self.m1_model = m1_model  # optional concrete basic-construction model
        self.spec = spec
        A = ambient.algebra
        self.sub_presentation = Presentation(
            A, [ambient.evaluate(s) for s in self.sub_generators], name=f"{name}:N", provenance="induced-n"
        )
        self.sub_basis = WordBasis(self.sub_presentation)
        self._gram_solver: ComplexLinearMap | None = None
        self._sub_adj = None
        self.presentation = ambient.with_expectation(self.cond_exp_element)
        self.presentation.name = ambient.name
        self.basis: "PPBasis | None" = None
        if m1_model is not None and m1_model.expect is None:
            # in M_1 the trace-preserving expectation onto N is E_N o E_M
            inner = Inclusion(m1_model, self.sub_generators, name=f"{name}:N<M1", priority=("backend",))
            m1_model.expect = inner.cond_exp_element

    def __repr__(self):
        return f"Inclusion({self.name}, index={self.index})"

    @property
    def algebra(self):
        return self.ambient.algebra

    # ------------------------------------------------------------ expectations
    def cond_exp_backend(self, x):
        """Trace-orthogonal projection of ``x`` onto the span of the sub-basis (exact)."""
        A = self.algebra
        F = self.sub_basis.elements
        if self._gram_solver is None:
            self._sub_adj = [A.adjoint(f) for f in F]
            cols = []
            for s in range(len(F)):
                col = [A.trace(A.mul(fa, F[s])) for fa in self._sub_adj]
                cols.append(_realify_list(col))
            self._gram_solver = ComplexLinearMap(cols)
        rhs = [A.trace(A.mul(fa, x)) for fa in self._sub_adj]
        c = self._gram_solver.solve(_realify_list(rhs))
        out = A.zero()
        for cs, f in zip(c, F):
            if cs:
                out = A.add(out, A.scale(cs, f))
        return out

    def cond_exp_element(self, x, source: str | None = None):
        for s in ([source] if source else self.priority):
            if s == "declared" and self.declared is not None:
                return self.declared(x)
            if s == "backend":
                return self.cond_exp_backend(x)
            if s == "basis" and self.basis is not None:
                raise NoConditionalExpectation("the basis source works on terms; use cond_exp_presented")
        raise NoConditionalExpectation(f"no conditional expectation source among {self.priority}")

    def compile(self, x) -> Term:
        """An ambient term with exact value ``x``."""
        return self.ambient.word_basis().compile(x)

    def in_sub(self, x) -> bool:
        A = self.algebra
        return A.equal(self.cond_exp_backend(x), x)


def _realify_list(v: Sequence[GQ]) -> list:
    return [c.re for c in v] + [c.im for c in v]


def cond_exp_backend(I: Inclusion, x):
    return I.cond_exp_backend(x)


def cond_exp_presented(I: Inclusion, t: Term, k: int, source: str | None = None) -> Term:
    """A term within ``2^-k`` of ``E_N(t)`` from the requested (or first available) source."""
    sources = [source] if source else list(I.priority)
    for s in sources:
        if s == "basis":
            if I.basis is None:
                continue
            return cond_exp_from_basis(I, I.basis, t, k)
        if s == "declared" and I.declared is None:
            continue
        x = I.ambient.evaluate(t)
        return I.compile(I.cond_exp_element(x, s))
    raise NoConditionalExpectation(f"no conditional expectation source among {sources}")


# ---------------------------------------------------------------- index by the Pimsner-Popa infimum

@dataclass
class IndexEstimate:
    """Bounds on the inverse index ``[M:N]^-1``.

    ``inverse_upper`` is the running minimum of ``||E(x)||^2 / ||x||^2`` over the
    positive points examined; ``inverse_lower`` comes from a verified basis
    (0 when no basis is known).
    """

    inverse_upper: Fraction
    inverse_lower: Fraction
    method: str
    converged: bool
    history: list = field(default_factory=list)
    examined: int = 0

    @property
    def index_lower(self) -> Fraction:
        return 1 / self.inverse_upper

    @property
    def index_upper(self) -> Fraction | None:
        return None if self.inverse_lower == 0 else 1 / self.inverse_lower


def positive_points(I: Inclusion, shift_bits: int = 24):
    """Deterministic stream of strictly positive points ``y*y + 2^-m 1``.

    Goal-directed rank-one candidates ``xi xi*/|xi|^2`` (small 0, +-1, +-i
    vectors in the matrix model) alternate with ``y*y`` for canonical terms ``y``.
    """
    from .terms import Enumerator

    shift = Scaled(GQ(Fraction(1, 1 << shift_bits)), One())
    model = I.ambient.model
    props = []
    if model is not None and model.word_basis().full:
        props = _rank_one_proposals(model)
    en = Enumerator(I.ambient.arity)
    n = 0
    pi = 0
    while True:
        if pi < len(props):
            tag, y = props[pi]
            pi += 1
            yield tag, Sum((y, shift))
        y = en.unrank(n)
        n += 1
        yield f"canonical#{n - 1}", Sum((Prod((Adj(y), y)), shift))


def _rank_one_proposals(model: Presentation) -> list[tuple[str, Term]]:
    from .linalg import QMat

    A = model.algebra
    units = [GQ(1), GQ(-1), GQ(0, 1), GQ(0, -1)]
    out = []
    for bi, d in enumerate(A.dims):
        vecs = []
        for i in range(d):
            v = [GQ(0)] * d
            v[i] = GQ(1)
            vecs.append(v)
        for i in range(d):
            for j in range(i + 1, d):
                for u in units:
                    v = [GQ(0)] * d
                    v[i], v[j] = GQ(1), u
                    vecs.append(v)
        for v in vecs:
            col = QMat.from_rows([[x] for x in v])
            nv = sum((x.abs2() for x in v), Fraction(0))
            blocks = [QMat.zeros(dd) for dd in A.dims]
            blocks[bi] = (col * col.adjoint()).scale(GQ(1 / nv))
            out.append((f"rank-one({bi}:{[str(x) for x in v]})", model.word_basis().compile(tuple(blocks))))
    return out


def index_pp_inf(I: Inclusion, budget: int = 64, source: str | None = None,
                 basis: "PPBasis | None" = None, k: int = 40) -> IndexEstimate:
    """Running minimum of ``||E(x)||_2^2 / ||x||_2^2`` over enumerated positive points."""
    P = I.ambient
    A = I.algebra
    best = Fraction(1)
    history = []
    examined = 0
    for tag, x in positive_points(I):
        if examined >= budget:
            break
        xv = P.evaluate(x)
        ex = I.cond_exp_element(xv, source)
        ratio = A.norm2_sq(ex) / A.norm2_sq(xv)
        examined += 1
        if ratio < best:
            best = ratio
        history.append(best)
    lower = Fraction(0)
    if basis is not None:
        idx = index_from_basis(I, basis, k)
        lower = 1 / (idx + Fraction(1, 1 << k))
    return IndexEstimate(best, lower, "pp-inf-formula", False, history, examined)


# ---------------------------------------------------------------- Pimsner-Popa bases

@dataclass
class PPBasis:
    """``m_1..m_{n+1}`` with the stored points ``E(m_j)`` and ``E(m_{n+1}* m_{n+1})``."""

    n: int
    m: list
    e_m: list
    e_last: ComputablePoint
    index: Fraction | None = None
    provenance: str = ""

    def terms(self, k: int) -> dict:
        return {
            "m": [p.term(k) for p in self.m],
            "e_m": [p.term(k) for p in self.e_m],
            "e_last": self.e_last.term(k),
        }


class _ExpectPoint(ComputablePoint):
    """``E_N`` applied to a computable point (E is 2-norm contractive)."""

    def __init__(self, I: Inclusion, point: ComputablePoint, adjoint_square: bool = False):
        self.presentation = I.ambient
        self.I, self.point, self.adjoint_square = I, point, adjoint_square
        self._cache: dict = {}
        if point.exact_term is not None:
            self.exact_term = self._compute(point.exact_term)

    def _compute(self, t: Term) -> Term:
        if self.adjoint_square:
            t = Prod((Adj(t), t))
        return self.I.compile(self.I.cond_exp_element(self.I.ambient.evaluate(t)))

    def resolve(self, k: int) -> Term:
        if k not in self._cache:
            # ||m*m - m'*m'|| <= 2||m - m'|| for contractions; one extra bit covers it
            self._cache[k] = self._compute(self.point.resolve(k + 2))
        return self._cache[k]


def basis_from_exact_terms(I: Inclusion, ms: Sequence[Term], n: int | None = None,
                           last: Term | None = None) -> PPBasis:
    """Wrap exact terms as a basis; the auxiliary points are computed from ``I``'s E."""
    pts = [ExactPoint(I.ambient, t) for t in ms]
    if n is None:
        n = len(pts)
    last_pt = ExactPoint(I.ambient, last if last is not None else Zero())
    return PPBasis(
        n,
        pts,
        [_ExpectPoint(I, p) for p in pts] + ([_ExpectPoint(I, last_pt)] if last is not None else []),
        _ExpectPoint(I, last_pt, adjoint_square=True),
        I.index,
        "exact",
    )


@dataclass
class ClauseResult:
    name: str
    residual: Fraction
    passed: bool


@dataclass
class PPVerification:
    clauses: list
    tolerance: Fraction
    precision: int

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.clauses)


def verify_pp_basis(I: Inclusion, B: PPBasis, tolerance: Fraction = Fraction(1, 10**6),
                    k: int = 40, m1=None) -> PPVerification:
    """Check every basis clause; residuals are 2-norm oracle values at precision ``k``."""
    P = I.presentation
    A = I.algebra
    tol = Fraction(tolerance)
    ms = [p.term(k) for p in B.m]
    n = B.n
    out = []
    E = lambda t: Expect(t)  # noqa: E731 - evaluated through the inclusion's E
    for j in range(n):
        for kk in range(n):
            target = One() if j == kk else Zero()
            r = P.norm(Sum((E(Prod((Adj(ms[j]), ms[kk]))), Scaled(GQ(-1), target))), k)
            out.append(ClauseResult(f"E(m{j + 1}*m{kk + 1})={'1' if j == kk else '0'}", r, r < tol))
    has_last = len(ms) > n
    idx = I.index
    if has_last:
        last = ms[n]
        for j in range(n):
            r = P.norm(E(Prod((Adj(ms[j]), last))), k)
            out.append(ClauseResult(f"E(m{j + 1}*m{n + 1})=0", r, r < tol))
        q = E(Prod((Adj(last), last)))
        r = P.norm(Sum((Prod((q, q)), Scaled(GQ(-1), q))), k)
        out.append(ClauseResult(f"E(m{n + 1}*m{n + 1}) projection", r, r < tol))
        if idx is not None:
            tr = P.exact_trace(q).re
            out.append(ClauseResult(f"tr E(m{n + 1}*m{n + 1})=index-n", abs(tr - (idx - n)), abs(tr - (idx - n)) < tol))
    # stored third clause must agree with its definition
    stored = B.e_last.term(k)
    want = E(Prod((Adj(ms[n]), ms[n]))) if has_last else Zero()
    r = P.norm(Sum((stored, Scaled(GQ(-1), want))), k)
    out.append(ClauseResult(f"stored E(m{n + 1}*m{n + 1})", r, r < tol))
    for j, p in enumerate(B.e_m):
        r = P.norm(Sum((p.term(k), Scaled(GQ(-1), E(ms[j])))), k)
        out.append(ClauseResult(f"stored E(m{j + 1})", r, r < tol))
    if m1 is not None:
        # sum_j m_j e m_j* = 1 in the basic construction
        from .terms import Jones

        s = Sum(tuple(Prod((mj, Jones(), Adj(mj))) for mj in ms) + (Scaled(GQ(-1), One()),))
        r = m1.norm(s, k)
        out.append(ClauseResult("sum m_j e m_j* = 1", r, r < tol))
    if idx is not None:
        val = index_from_basis(I, B, k)
        out.append(ClauseResult("tr(sum m_j m_j*) = index", abs(val - idx), abs(val - idx) < tol))
    del A
    return PPVerification(out, tol, k)


def index_from_basis(I: Inclusion, B: PPBasis, k: int) -> Fraction:
    """``tr(sum_{j=1}^{n+1} m_j m_j*)`` within ``2^-k``."""
    P = I.ambient
    # each m_j resolved to 2^-(k+4): |tr(mm*) - tr(m'm'*)| <= 2||m - m'||_2 (contractions)
    kk = k + 4 + bits_for(Fraction(len(B.m) + 1))
    total = Fraction(0)
    for p in B.m:
        t = p.term(kk)
        total += P.exact_norm_sq(Adj(t))
    return total


def pp_expand(I: Inclusion, B: PPBasis, t: Term, k: int) -> list[Term]:
    """Coefficients ``x_j = E_N(m_j* t)`` (terms of the ambient presentation)."""
    kk = k + 2
    out = []
    for p in B.m:
        mj = p.term(kk)
        x = I.ambient.evaluate(Prod((Adj(mj), t)))
        out.append(I.compile(I.cond_exp_element(x)))
    return out


def cond_exp_from_basis(I: Inclusion, B: PPBasis, t: Term, k: int) -> Term:
    """``E_N(t)`` assembled only from the basis' stored points.

    The coefficients ``y_j`` are rational points of ``N`` (words in the
    sub-generators) chosen by least squares so that
    ``y = sum_j m_j y_j + m_{n+1} E(m_{n+1}* m_{n+1}) y_{n+1}`` approximates ``t``;
    then ``E(y) = sum_j E(m_j) y_j + E(m_{n+1}) E(m_{n+1}* m_{n+1}) y_{n+1}``.
    """
    P = I.ambient
    A = I.algebra
    kk = k + 6
    ms = [p.term(kk) for p in B.m]
    ems = [p.term(kk) for p in B.e_m]
    n = B.n
    heads = list(ms[:n])
    e_heads = list(ems[:n])
    if len(ms) > n:
        q = B.e_last.term(kk)
        heads.append(Prod((ms[n], q)))
        e_heads.append(Prod((ems[n], q)))
    sb = I.sub_basis
    words = [_sub_word_term(I, sb, s) for s in range(sb.dimension)]
    cols_terms = [(j, s) for j in range(len(heads)) for s in range(len(words))]
    vals = [P.evaluate(Prod((heads[j], words[s]))) for j, s in cols_terms]
    x = P.evaluate(t)
    # normal equations with the trace inner product
    adj = [A.adjoint(v) for v in vals]
    gram_cols = []
    for c in range(len(vals)):
        gram_cols.append(_realify_list([A.trace(A.mul(a, vals[c])) for a in adj]))
    rhs = _realify_list([A.trace(A.mul(a, x)) for a in adj])
    coef = ComplexLinearMap(gram_cols).solve(rhs)
    # Round the coefficients: a change of at most 2^-r in c moves the
    # answer by at most 2^-r * ||head_j w_s||_2, since E_N is 2-norm contracting.
    spread = sum(sqrt_dyadic(gram_cols[c][c], 4) + 1 for c in range(len(vals)))
    r = kk + (int(spread) + 1).bit_length() + 1
    coef = [GQ(_round_to(c.re, r + 1), _round_to(c.im, r + 1)) for c in coef]
    parts = []
    for (j, s), c in zip(cols_terms, coef):
        if c:
            parts.append(Scaled(c, Prod((e_heads[j], words[s]))))
    if not parts:
        return Zero()
    # canonical form on a grid fine enough that rounding costs below 2^-(k+2):
    # every word is a contraction, so each monomial moves by at most sqrt(2) 2^-r
    out = Sum(tuple(parts))
    mons = len(out.flatten().terms)
    return round_term(out, k + 3 + mons.bit_length())


def _round_to(x: Fraction, r: int) -> Fraction:
    return Fraction(round(x * (1 << r)), 1 << r)


def _sub_word_term(I: Inclusion, sb: WordBasis, s: int) -> Term:
    """Ambient term of the ``s``-th word of the sub-basis."""
    return substitute(sb.term(s), I.sub_generators)


# ---------------------------------------------------------------- construction

class StripPoint(ComputablePoint):
    """The unique ``m`` in ``M`` with ``v e = m e`` for a computable ``v`` of ``M_1``."""

    def __init__(self, I: Inclusion, v: ComputablePoint):
        from .basic import strip_e

        self.presentation = I.ambient
        self.I, self.v = I, v
        self._strip = strip_e
        self._cache: dict = {}

    def resolve(self, k: int) -> Term:
        if k not in self._cache:
            self._cache[k] = self._strip(self.I, self.v, k)
        return self._cache[k]


class _AdjointPoint(ComputablePoint):
    def __init__(self, point: ComputablePoint):
        self.presentation = point.presentation
        self.point = point
        if point.exact_term is not None:
            self.exact_term = Adj(point.exact_term)

    def resolve(self, k: int) -> Term:
        return Adj(self.point.resolve(k))


def construct_pp_basis(I: Inclusion, budget: int = 2000, workers: int = 1, m1=None) -> PPBasis:
    """Projections ``g_j`` in ``M_1``, implements ``v_j`` from ``e`` to ``g_j``, then ``m_j = strip_e(v_j)``."""
    from .basic import induce_m1_presentation
    from .search import (
        BudgetExhausted,
        find_implement,
        find_subequivalence,
        orthogonal_projection_family,
    )
    from .terms import Jones

    if I.index is None:
        raise ValueError("construct_pp_basis needs the index")
    P1 = m1 if m1 is not None else induce_m1_presentation(I)
    lam = 1 / I.index
    n = int(I.index)
    try:
        fam = orthogonal_projection_family(P1, lam, budget, workers)
    except BudgetExhausted as exc:
        exc.what = f"projection family: {exc.what}"
        raise
    vs: list[ComputablePoint] = []
    for j in range(n):
        try:
            vs.append(find_implement(P1, Jones(), fam[j].exact_term, budget, workers))
        except BudgetExhausted as exc:
            exc.what = f"implement {j + 1}: {exc.what}"
            raise
    last_trace = fam[n].exact_trace if fam[n].exact_trace is not None else P1.exact_trace(fam[n].exact_term).re
    if last_trace != 0:
        _, w = find_subequivalence(P1, fam[n].exact_term, Jones(), budget, workers)
        vs.append(_AdjointPoint(w))
    ms = [StripPoint(I, v) for v in vs]
    if last_trace == 0:
        last = ExactPoint(I.ambient, Zero())
    else:
        last = ms[n]
    e_last = _ExpectPoint(I, last, adjoint_square=True)
    e_m = [_ExpectPoint(I, p) for p in ms]
    basis = PPBasis(n, ms, e_m, e_last, I.index, "construct_pp_basis")
    return basis


def freeze_basis(I: Inclusion, B: PPBasis, k: int) -> PPBasis:
    """Replace every stored point by a short term within ``2^-k`` of it.

    The precision-``(k+1)`` term is taken and its coefficients are rounded
    finely enough that the monomials (words of contractions) move it by less
    than ``2^-(k+1)`` in operator norm.
    """
    P = I.ambient

    def short(p):
        t = p.term(k + 1)
        mons = max(1, len(t.flatten().terms))
        return ExactPoint(P, round_term(t, k + 3 + mons.bit_length()))

    return PPBasis(
        B.n,
        [short(p) for p in B.m],
        [short(p) for p in B.e_m],
        short(B.e_last),
        B.index,
        f"frozen at 2^-{k}",
    )
