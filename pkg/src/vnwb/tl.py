"""Temperley-Lieb-Jones diagram algebras with the Markov trace."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from math import comb
from typing import Callable

from .algebra import ExactAlgebra
from .kernels import closure_loops, compose
from .linalg import QMat
from .scalar import GQ

WIDTH_CAP = 8


def catalan(n: int) -> int:
    return comb(2 * n, n) // (n + 1)


def _matchings(points: list[int]) -> list[list[tuple[int, int]]]:
    """Non-crossing perfect matchings of points listed in cyclic order."""
    if not points:
        return [[]]
    out = []
    first = points[0]
    for j in range(1, len(points), 2):
        inner = _matchings(points[1:j])
        outer = _matchings(points[j + 1:])
        for a in inner:
            for b in outer:
                out.append([(first, points[j])] + a + b)
    return out


def all_diagrams(n: int) -> list[tuple]:
    """Every width-``n`` diagram, sorted."""
    cyclic = list(range(n)) + list(range(2 * n - 1, n - 1, -1))
    out = []
    for m in _matchings(cyclic):
        d = [0] * (2 * n)
        for a, b in m:
            d[a], d[b] = b, a
        out.append(tuple(d))
    out.sort()
    return out


def identity_diagram(n: int) -> tuple:
    return tuple(list(range(n, 2 * n)) + list(range(n)))


def cup_cap(n: int, i: int) -> tuple:
    """``U_i`` (1-based): strands ``i`` and ``i+1`` capped on top and bottom."""
    d = list(identity_diagram(n))
    a, b = i - 1, i
    d[a], d[b] = b, a
    d[n + a], d[n + b] = n + b, n + a
    return tuple(d)


def flip(d: tuple, n: int) -> tuple:
    """Reflect top and bottom."""
    def f(p):
        return p + n if p < n else p - n

    return tuple(f(d[f(p)]) for p in range(2 * n))


class TLAlgebra(ExactAlgebra):
    """Linear combinations of width-``k`` diagrams; a closed loop is worth ``delta``.

    Elements are dicts ``diagram -> GQ``.  The trace is
    ``tr(D) = delta^(loops(closure(D)) - k)``.
    """

    def __init__(self, width: int, delta, cap: int = WIDTH_CAP):
        if width < 1:
            raise ValueError("width must be positive")
        if width > cap:
            raise ValueError(f"width {width} exceeds the cap {cap}")
        self.width = width
        self.delta = Fraction(delta)
        if self.delta == 0:
            raise ValueError("delta must be nonzero")
        self.t = 1 / (self.delta * self.delta)
        self.diagrams = all_diagrams(width)
        self.position = {d: i for i, d in enumerate(self.diagrams)}
        self.dimension = len(self.diagrams)
        self._id = identity_diagram(width)
        self._gram = None

    def __repr__(self):
        return f"TLAlgebra(width={self.width}, delta={self.delta})"

    def _dpow(self, m: int) -> Fraction:
        return self.delta ** m

    def diagram_trace(self, d: tuple) -> Fraction:
        return self._dpow(closure_loops(d, self.width) - self.width)

    # ------------------------------------------------------------ protocol
    def one(self):
        return {self._id: GQ(1)}

    def zero(self):
        return {}

    def basis_element(self, d: tuple):
        return {d: GQ(1)}

    def jones(self, i: int):
        """``e_i = delta^-1 U_i``."""
        if not 1 <= i < self.width:
            raise ValueError(f"e_{i} does not exist at width {self.width}")
        return {cup_cap(self.width, i): GQ(1 / self.delta)}

    def add(self, x, y):
        out = dict(x)
        for d, c in y.items():
            v = out.get(d, GQ(0)) + c
            if v:
                out[d] = v
            else:
                out.pop(d, None)
        return out

    def scale(self, c, x):
        c = GQ.coerce(c)
        if not c:
            return {}
        return {d: v * c for d, v in x.items()}

    def mul(self, x, y):
        n = self.width
        out: dict = {}
        for d1, c1 in x.items():
            for d2, c2 in y.items():
                d, loops = compose(d1, d2, n)
                v = c1 * c2 * GQ(self._dpow(loops))
                w = out.get(d, GQ(0)) + v
                if w:
                    out[d] = w
                else:
                    out.pop(d, None)
        return out

    def adjoint(self, x):
        n = self.width
        return {flip(d, n): c.conj() for d, c in x.items()}

    def trace(self, x) -> GQ:
        acc = GQ(0)
        for d, c in x.items():
            acc = acc + c * GQ(self.diagram_trace(d))
        return acc

    def equal(self, x, y) -> bool:
        return not self.add(x, self.scale(-1, y))

    def is_zero(self, x) -> bool:
        return not any(x.values())

    def vec(self, x) -> list:
        re = [Fraction(0)] * self.dimension
        im = [Fraction(0)] * self.dimension
        for d, c in x.items():
            k = self.position[d]
            re[k], im[k] = c.re, c.im
        return re + im

    def operator(self, x):
        """Left multiplication on the diagram basis, with the trace Gram metric."""
        D = self.dimension
        cols = []
        for d in self.diagrams:
            v = self.vec(self.mul(x, {d: GQ(1)}))
            cols.append([GQ(v[i], v[D + i]) for i in range(D)])
        X = QMat.from_rows([[cols[j][i] for j in range(D)] for i in range(D)])
        if self._gram is None:
            rows = []
            for a in self.diagrams:
                fa = flip(a, self.width)
                row = []
                for b in self.diagrams:
                    d, loops = compose(fa, b, self.width)
                    row.append(GQ(self._dpow(loops) * self.diagram_trace(d)))
                rows.append(row)
            self._gram = QMat.from_rows(rows)
        return X, self._gram


# ---------------------------------------------------------------- checks

@dataclass
class RelationReport:
    width: int
    delta: Fraction
    checks: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(self.checks.values())


def verify_relations(tl: TLAlgebra) -> RelationReport:
    """``e_i^2 = e_i = e_i*``, ``e_i e_{i+-1} e_i = t e_i``, far commutation, Catalan count."""
    rep = RelationReport(tl.width, tl.delta)
    k = tl.width
    es = {i: tl.jones(i) for i in range(1, k)}
    for i, e in es.items():
        rep.checks[f"e{i}^2=e{i}"] = tl.equal(tl.mul(e, e), e)
        rep.checks[f"e{i}*=e{i}"] = tl.equal(tl.adjoint(e), e)
        for j in (i - 1, i + 1):
            if j in es:
                rep.checks[f"e{i}e{j}e{i}=t e{i}"] = tl.equal(tl.mul(tl.mul(e, es[j]), e), tl.scale(GQ(tl.t), e))
        for j in range(i + 2, k):
            rep.checks[f"e{i}e{j}=e{j}e{i}"] = tl.equal(tl.mul(e, es[j]), tl.mul(es[j], e))
    rep.checks["catalan"] = tl.dimension == catalan(k)
    return rep


@dataclass
class MarkovCertificate:
    width: int
    i: int
    max_length: int
    t: Fraction
    checked: int
    failures: list

    @property
    def passed(self) -> bool:
        return not self.failures


def verify_markov(tl: TLAlgebra, i: int, max_length: int,
                  diagram_trace: Callable[[tuple], Fraction] | None = None) -> MarkovCertificate:
    """Check ``tr(w e_i) = t tr(w)`` for every word ``w`` in ``e_1..e_{i-1}`` of length ``<= max_length``.

    Words in the ``e_j`` are scalar multiples of single diagrams, so each check
    is one composition and two closures.  ``diagram_trace`` replaces the trace
    (used for negative controls).
    """
    if not 1 <= i < tl.width:
        raise ValueError(f"e_{i} does not exist at width {tl.width}")
    n = tl.width
    tr = diagram_trace or tl.diagram_trace
    inv = 1 / tl.delta
    ei = cup_cap(n, i)
    letters = [cup_cap(n, j) for j in range(1, i)]
    failures = []
    checked = 0
    layer = [((), tl._id, Fraction(1))]
    for length in range(max_length + 1):
        nxt = []
        for word, d, c in layer:
            dd, loops = compose(d, ei, n)
            lhs = c * inv * tl._dpow(loops) * tr(dd)
            rhs = tl.t * c * tr(d)
            checked += 1
            if lhs != rhs:
                failures.append(word)
            if length < max_length:
                for j, u in enumerate(letters, start=1):
                    d2, l2 = compose(d, u, n)
                    nxt.append((word + (j,), d2, c * inv * tl._dpow(l2)))
        layer = nxt
    return MarkovCertificate(n, i, max_length, tl.t, checked, failures)
