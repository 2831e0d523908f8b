"""Presentations: an exact algebra, generator images and a 2-norm oracle.

A presentation evaluates terms exactly, so its oracle can answer
``||t||_2`` to any requested dyadic precision.  Presentations that come with
a full matrix *model* (a trace-preserving isomorphic copy of the generated
algebra inside a multi-matrix algebra) can also compile model elements back
into terms, which is what goal-directed search proposals rely on.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterator, Sequence

from .algebra import CornerAlgebra, ExactAlgebra, MultiMatrixAlgebra
from .linalg import ComplexLinearMap, ComplexSpan, QMat, gram_schmidt
from .scalar import GQ, bits_for, sqrt_dyadic
from .terms import (
    Adj,
    Expect,
    Gen,
    Jones,
    One,
    Prod,
    Scaled,
    Sum,
    Term,
    Zero,
    flat_bound_universal,
    scale_into_ball,
)

_MEMO_CAP = 50000


class ArityError(ValueError):
    pass


class NotAProjection(ValueError):
    pass


class Presentation:
    """An exact presentation ``(A, tr, generators)`` with a 2-norm oracle."""

    def __init__(
        self,
        algebra: ExactAlgebra,
        generators: Sequence,
        *,
        name: str = "",
        provenance: str = "matrix-backend",
        jones=None,
        expect: Callable | None = None,
        model: "Presentation | None" = None,
    ):
        self.algebra = algebra
        self.generators = list(generators)
        self.name = name
        self.provenance = provenance
        self.jones = jones
        self.expect = expect
        self._model = model
        self._memo: dict = {}
        self._basis: WordBasis | None = None
        self.parent: Presentation | None = None
        self.corner_term: Term | None = None
        self.unit_special = True  # the grammar's constant 1 counts as a special point

    # ------------------------------------------------------------ basics
    @property
    def arity(self) -> int:
        return len(self.generators)

    @property
    def extended(self) -> bool:
        return self.jones is not None

    @property
    def root(self) -> "Presentation":
        return self

    def __repr__(self):
        return f"Presentation({self.name or self.provenance}, arity={self.arity})"

    def evaluate(self, t: Term):
        """Exact image of ``t``; raises ``ArityError`` for unknown letters."""
        memo = self._memo
        hit = memo.get(t)
        if hit is not None:
            return hit
        A = self.algebra
        if isinstance(t, Gen):
            if t.index > self.arity:
                raise ArityError(f"g{t.index} used in a presentation of arity {self.arity}")
            val = self.generators[t.index - 1]
        elif isinstance(t, One):
            val = A.one()
        elif isinstance(t, Zero):
            val = A.zero()
        elif isinstance(t, Jones):
            if self.jones is None:
                raise ArityError("'e' is not available in this presentation")
            val = self.jones
        elif isinstance(t, Expect):
            if self.expect is None:
                raise ArityError("E(.) is not available in this presentation")
            val = self.expect(self.evaluate(t.arg))
        elif isinstance(t, Adj):
            val = A.adjoint(self.evaluate(t.arg))
        elif isinstance(t, Scaled):
            val = A.scale(t.coef, self.evaluate(t.arg))
        elif isinstance(t, Sum):
            val = A.zero()
            for a in t.args:
                val = A.add(val, self.evaluate(a))
        elif isinstance(t, Prod):
            val = None
            for a in t.args:
                v = self.evaluate(a)
                val = v if val is None else A.mul(val, v)
            if val is None:
                val = A.one()
        else:
            raise TypeError(f"unknown term node {type(t).__name__}")
        if len(memo) > _MEMO_CAP:
            memo.clear()
        memo[t] = val
        return val

    # ------------------------------------------------------------ oracle
    def exact_norm_sq(self, t: Term) -> Fraction:
        return self.algebra.norm2_sq(self.evaluate(t))

    def exact_trace(self, t: Term) -> GQ:
        return self.algebra.trace(self.evaluate(t))

    def norm(self, t: Term, k: int) -> Fraction:
        """The oracle: a dyadic within ``2^-k`` of ``||t||_2``."""
        return sqrt_dyadic(self.exact_norm_sq(t), k)

    def flat_bound_lt(self, t: Term, c: Fraction = Fraction(1)) -> bool:
        """Exact decision of ``||t|| < c`` in this presentation (model mode)."""
        return self.algebra.op_norm_lt(self.evaluate(t), c)

    def in_unit_ball(self, t: Term, mode: str = "model") -> bool:
        if mode == "universal":
            return flat_bound_universal(t) < 1
        return self.flat_bound_lt(t, Fraction(1))

    # ------------------------------------------------------------ models
    @property
    def model(self) -> "Presentation | None":
        return self._model

    def word_basis(self) -> "WordBasis":
        if self._basis is None:
            self._basis = WordBasis(self)
        return self._basis

    def lift(self, t: Term) -> Term:
        """Rewrite a term of this presentation as a term of its root presentation."""
        return t

    def model_support(self):
        m = self.model
        return None if m is None else m.algebra.one()

    def compile_model_element(self, x) -> Term:
        """Term of this presentation whose model image is ``x`` (exact)."""
        m = self.model
        if m is None:
            raise ValueError("presentation has no model")
        return m.word_basis().compile(x)

    def trace_spectrum(self) -> list[Fraction] | None:
        """Traces of all projections in the generated algebra, when a full model is known."""
        m = self.model
        if m is None or not m.word_basis().full:
            return None
        return projection_traces(m.algebra, self.model_support(), Fraction(1))

    def with_expectation(self, expect: Callable) -> "Presentation":
        p = Presentation(
            self.algebra,
            self.generators,
            name=self.name,
            provenance=self.provenance,
            jones=self.jones,
            expect=expect,
            model=self._model,
        )
        return p


class MatrixPresentation(Presentation):
    """A matrix-backend presentation; it is its own model."""

    def __init__(self, algebra: MultiMatrixAlgebra, generators: Sequence, **kw):
        super().__init__(algebra, generators, **kw)

    @property
    def model(self):
        return self._model if self._model is not None else self


# ---------------------------------------------------------------- word bases

class WordBasis:
    """A basis of the generated algebra consisting of words in the generators.

    Words are explored breadth first (shortest first, alphabet order) and kept
    whenever they enlarge the span, so the result is deterministic.
    """

    def __init__(self, P: Presentation, max_words: int | None = None, include_unit: bool = True):
        A = P.algebra
        letters: list[Term] = []
        for i in range(1, P.arity + 1):
            letters += [Gen(i), Adj(Gen(i))]
        if P.extended:
            letters.append(Jones())
        one = A.one()
        v = A.vec(one)
        span = ComplexSpan(len(v))
        self.words: list[tuple[Term, ...]] = []
        self.elements: list = []
        self.vectors: list = []
        letter_vals = [P.evaluate(a) for a in letters]
        frontier = []
        if not include_unit:
            frontier.append(((), one))  # seed only; the empty word is never kept
        elif span.add(v):
            self.words.append(())
            self.elements.append(one)
            self.vectors.append(v)
            frontier.append(((), one))
        cap = getattr(A, "dimension", None)
        while frontier:
            new = []
            for w, x in frontier:
                for a, av in zip(letters, letter_vals):
                    y = A.mul(x, av)
                    vy = A.vec(y)
                    if span.add(vy):
                        ww = w + (a,)
                        self.words.append(ww)
                        self.elements.append(y)
                        self.vectors.append(vy)
                        new.append((ww, y))
                    if cap is not None and span.rank == cap:
                        break
                if cap is not None and span.rank == cap:
                    break
                if max_words is not None and len(self.words) >= max_words:
                    break
            if cap is not None and span.rank == cap:
                break
            frontier = new
        self.dimension = len(self.words)
        self.full = cap is not None and self.dimension == cap
        self.algebra = A
        self._solver: ComplexLinearMap | None = None

    def term(self, k: int) -> Term:
        w = self.words[k]
        if not w:
            return One()
        if len(w) == 1:
            return w[0]
        return Prod(w)

    def coordinates(self, x) -> list[GQ]:
        if self._solver is None:
            self._solver = ComplexLinearMap(self.vectors)
        return self._solver.solve(self.algebra.vec(x))

    def compile(self, x) -> Term:
        coords = self.coordinates(x)
        parts = []
        for k, c in enumerate(coords):
            if c:
                t = self.term(k)
                parts.append(t if c == 1 else Scaled(c, t))
        if not parts:
            return Zero()
        return parts[0] if len(parts) == 1 else Sum(tuple(parts))


def projection_traces(A: MultiMatrixAlgebra, support, scale: Fraction) -> list[Fraction]:
    """Sorted traces of projections below ``support`` in a multi-matrix algebra."""
    ranks = [block_rank(b) for b in support]
    vals = {Fraction(0)}
    for r, d, w in zip(ranks, A.dims, A.weights):
        vals = {v + Fraction(s) * w / d for v in vals for s in range(r + 1)}
    return sorted(v / scale for v in vals)


def block_rank(b: QMat) -> int:
    from .linalg import realify

    return realify(b).rank() // 2


def is_projection(A: ExactAlgebra, x) -> bool:
    return A.equal(x, A.adjoint(x)) and A.equal(A.mul(x, x), x)


# ---------------------------------------------------------------- corners

class CornerPresentation(Presentation):
    """The corner ``pMp`` generated by ``p w p`` for the words ``w`` of a root basis."""

    def __init__(self, parent: Presentation, p_term: Term):
        root = parent.root
        p = parent.evaluate(p_term)
        base = root.algebra
        if not is_projection(base, p):
            raise NotAProjection("corner requires an exact projection term")
        tp = base.trace(p)
        if tp.re <= 0:
            raise ValueError("corner projection is zero")
        basis = _corner_word_basis(root)
        gens = [base.mul(p, base.mul(root.evaluate(basis.term(k)), p)) for k in range(basis.dimension)]
        super().__init__(
            CornerAlgebra(base, p, tp.re),
            gens,
            name=f"corner of {parent.name or parent.provenance}",
            provenance="corner-of",
            jones=None,
        )
        self.parent = parent
        self.corner_term = p_term
        self._root = root
        self._root_basis = basis
        self.relative_trace = tp.re  # tr(p) inside the root

    @property
    def root(self) -> Presentation:
        return self._root

    @property
    def model(self):
        return self._root.model

    def lift_one(self, t: Term) -> Term:
        """Rewrite in the parent's language."""
        p = self.corner_term
        par = self.parent

        def sub(s: Term) -> Term:
            if isinstance(s, Gen):
                inner = par_word(par, self._root_basis, s.index - 1)
                return Prod((p, inner, p))
            if isinstance(s, One):
                return p
            if isinstance(s, (Zero,)):
                return s
            if isinstance(s, Adj):
                return Adj(sub(s.arg))
            if isinstance(s, Scaled):
                return Scaled(s.coef, sub(s.arg))
            if isinstance(s, Sum):
                return Sum(tuple(sub(a) for a in s.args))
            if isinstance(s, Prod):
                return Prod(tuple(sub(a) for a in s.args))
            raise TypeError(f"unexpected node {type(s).__name__} in a corner term")

        return sub(t)

    def lift(self, t: Term) -> Term:
        return self.parent.lift(self.lift_one(t))

    def model_support(self):
        m = self.model
        if m is None:
            return None
        return m.evaluate(self.parent.lift(self.corner_term))

    def compile_model_element(self, x) -> Term:
        m = self.model
        coords = m.word_basis().coordinates(x)
        if len(coords) != self.arity:
            raise ValueError("model basis and corner generators disagree")
        parts = [Scaled(c, Gen(k + 1)) if c != 1 else Gen(k + 1) for k, c in enumerate(coords) if c]
        if not parts:
            return Zero()
        return parts[0] if len(parts) == 1 else Sum(tuple(parts))

    def trace_spectrum(self):
        m = self.model
        if m is None or not m.word_basis().full:
            return None
        return projection_traces(m.algebra, self.model_support(), self.relative_trace)


def _corner_word_basis(root: Presentation) -> WordBasis:
    m = root.model
    return m.word_basis() if m is not None else root.word_basis()


def par_word(par: Presentation, basis: WordBasis, k: int) -> Term:
    if isinstance(par, CornerPresentation):
        return Gen(k + 1)
    return basis.term(k)


CORNER_FLOOR = Fraction(1, 1 << 20)


def corner(P: Presentation, p_term: Term, floor: Fraction = CORNER_FLOOR) -> CornerPresentation:
    """``(pMp)^#`` for an exact projection term ``p``; traces below ``floor`` are refused."""
    tp = P.exact_trace(p_term).re
    if tp < floor:
        raise ValueError(f"corner projection trace {tp} is below the floor {floor}")
    return CornerPresentation(P, p_term)


# ---------------------------------------------------------------- oracle helpers

def eval_two_norm(P: Presentation, t: Term, k: int) -> Fraction:
    return P.norm(t, k)


def trace(P: Presentation, t: Term, k: int) -> GQ:
    """``tr(t)`` within ``2^-k`` in each coordinate, using 2-norm oracle queries only.

    Polarization: ``tr(x) = <x, 1> = 1/4 sum_j i^j ||x + i^j 1||_2^2``.
    """
    shifts = [GQ(1), GQ(0, 1), GQ(-1), GQ(0, -1)]
    m = k + 3
    while True:
        vals = [P.norm(Sum((t, Scaled(c, One()))), m) for c in shifts]
        bound = max(vals) + Fraction(1, 1 << m)
        err = Fraction(2, 1 << m) * bound
        if err < Fraction(1, 1 << k):
            break
        m += max(1, bits_for(Fraction(1, 1 << k) / err) if err else 1)
    out = GQ(0)
    for c, v in zip(shifts, vals):
        out = out + c * GQ(v * v)
    return out * GQ(Fraction(1, 4))


def inner_product(P: Presentation, s: Term, t: Term, k: int) -> GQ:
    """``<s, t> = tr(t* s)`` within ``2^-k`` by polarization of the oracle."""
    shifts = [GQ(1), GQ(0, 1), GQ(-1), GQ(0, -1)]
    m = k + 3
    while True:
        vals = [P.norm(Sum((s, Scaled(c, t))), m) for c in shifts]
        err = Fraction(2, 1 << m) * (max(vals) + Fraction(1, 1 << m))
        if err < Fraction(1, 1 << k):
            break
        m += 2
    out = GQ(0)
    for c, v in zip(shifts, vals):
        out = out + c * GQ(v * v)
    return out * GQ(Fraction(1, 4))


def trace_inner(P: Presentation, s: Term, t: Term, k: int) -> GQ:
    """``tr(s* t)`` within ``2^-k`` from four oracle calls."""
    return inner_product(P, t, s, k)


# ---------------------------------------------------------------- flat bounds

@dataclass(frozen=True)
class FlatBound:
    value: Fraction
    mode: str


def flat_bound(t: Term, mode: str = "universal", P: Presentation | None = None, k: int = 30) -> FlatBound:
    """Operator-norm bound of ``t``.

    ``universal``: the coefficient bound valid for contractions in any algebra.
    ``model``: a dyadic ``v`` with ``||t|| <= v < ||t|| + 2^-k`` in ``P``, certified exactly.
    """
    if mode == "universal":
        return FlatBound(flat_bound_universal(t), mode)
    if mode != "model":
        raise ValueError(f"unknown flat-bound mode {mode!r}")
    if P is None:
        raise ValueError("model mode needs a presentation")
    A = P.algebra
    x = P.evaluate(t)
    if A.is_zero(x):
        return FlatBound(Fraction(0), mode)
    step = Fraction(1, 1 << k)
    guess = Fraction(round(A.op_norm_estimate(x) * (1 << k)), 1 << k)
    hi = guess + step
    lo = max(Fraction(0), guess - step)
    if not A.op_norm_le(x, hi):
        hi = max(flat_bound_universal(t), Fraction(1))
        while not A.op_norm_le(x, hi):
            hi *= 2
        lo = Fraction(0)
    if lo > 0 and A.op_norm_le(x, lo):
        lo = Fraction(0)
    while hi - lo > step:  # invariant: ||x|| in (lo, hi]
        mid = (lo + hi) / 2
        if A.op_norm_le(x, mid):
            hi = mid
        else:
            lo = mid
    return FlatBound(hi, mode)


def kaplansky_approx(P: Presentation, x, k: int) -> Term:
    """A term within ``2^-k`` of the model element ``x`` (norm at most 1) with model bound below 1."""
    t = P.compile_model_element(x)
    if not P.model.algebra.op_norm_le(x, Fraction(1)):
        raise ValueError("element is not in the unit ball")
    return scale_into_ball(t, Fraction(1, 1 << (k + 1)))


# ---------------------------------------------------------------- model projections

def model_projections(A: MultiMatrixAlgebra, support) -> Iterator[tuple[Fraction, tuple]]:
    """Exact projections below ``support`` built from Gram-Schmidt flags of its range.

    Yields ``(trace, projection)``; the list covers every trace value realizable
    below ``support`` (one projection per choice of block ranks).
    """
    flags = []
    for b in support:
        cols = [[b[i, j] for i in range(b.shape[0])] for j in range(b.shape[1])]
        flags.append(gram_schmidt(cols))
    combos: list[tuple[int, ...]] = [()]
    for f in flags:
        combos = [c + (s,) for c in combos for s in range(len(f) + 1)]
    out = []
    for c in combos:
        blocks = []
        for s, f, d in zip(c, flags, A.dims):
            blocks.append(span_projection(f[:s], d))
        out.append((A.trace(tuple(blocks)).re, c, tuple(blocks)))
    out.sort(key=lambda z: (z[0], z[1]))
    for tr, _, proj in out:
        yield tr, proj


def span_projection(orth: Sequence[Sequence[GQ]], d: int) -> QMat:
    """Orthogonal projection onto the span of mutually orthogonal vectors (exact)."""
    m = QMat.zeros(d)
    for v in orth:
        nv = sum((x.abs2() for x in v), Fraction(0))
        col = QMat.from_rows([[x] for x in v])
        m = m + (col * col.adjoint()).scale(GQ(1 / nv))
    return m
