"""Exact linear algebra over Q(i) on top of FLINT rational matrices.

A complex matrix is stored as a pair of ``fmpq_mat`` (real and imaginary
parts).  Linear systems and rank questions are answered on the realification
``[[A, -B], [B, A]]``, which is exact and keeps everything inside FLINT.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Iterable, Sequence

import flint
import numpy as np

from .scalar import GQ


def fq(x) -> flint.fmpq:
    if isinstance(x, flint.fmpq):
        return x
    if isinstance(x, Fraction):
        return flint.fmpq(x.numerator, x.denominator)
    return flint.fmpq(x)


def to_fraction(x: flint.fmpq) -> Fraction:
    return Fraction(int(x.p), int(x.q))


def _gq(x: flint.fmpq, y: flint.fmpq) -> GQ:
    return GQ(to_fraction(x), to_fraction(y))


class QMat:
    """Dense matrix over Q(i)."""

    __slots__ = ("re", "im")

    def __init__(self, re: flint.fmpq_mat, im: flint.fmpq_mat | None = None):
        self.re = re
        self.im = im if im is not None else flint.fmpq_mat(re.nrows(), re.ncols())

    # construction
    @classmethod
    def from_rows(cls, rows: Sequence[Sequence]) -> "QMat":
        r = len(rows)
        c = len(rows[0]) if r else 0
        re, im = [], []
        for row in rows:
            if len(row) != c:
                raise ValueError("ragged matrix rows")
            for x in row:
                g = GQ.coerce(x)
                re.append(fq(g.re))
                im.append(fq(g.im))
        return cls(flint.fmpq_mat(r, c, re), flint.fmpq_mat(r, c, im))

    @classmethod
    def zeros(cls, r: int, c: int | None = None) -> "QMat":
        c = r if c is None else c
        return cls(flint.fmpq_mat(r, c), flint.fmpq_mat(r, c))

    @classmethod
    def identity(cls, n: int) -> "QMat":
        re = flint.fmpq_mat(n, n)
        for i in range(n):
            re[i, i] = 1
        return cls(re, flint.fmpq_mat(n, n))

    @classmethod
    def unit(cls, n: int, i: int, j: int, value=1) -> "QMat":
        m = cls.zeros(n)
        g = GQ.coerce(value)
        m.re[i, j] = fq(g.re)
        m.im[i, j] = fq(g.im)
        return m

    @property
    def shape(self) -> tuple[int, int]:
        return self.re.nrows(), self.re.ncols()

    def __getitem__(self, ij) -> GQ:
        return _gq(self.re[ij], self.im[ij])

    def rows(self) -> list[list[GQ]]:
        r, c = self.shape
        return [[self[i, j] for j in range(c)] for i in range(r)]

    # arithmetic
    def __add__(self, o: "QMat") -> "QMat":
        return QMat(self.re + o.re, self.im + o.im)

    def __sub__(self, o: "QMat") -> "QMat":
        return QMat(self.re - o.re, self.im - o.im)

    def __neg__(self) -> "QMat":
        return QMat(-self.re, -self.im)

    def __mul__(self, o):
        if isinstance(o, QMat):
            a, b, c, d = self.re, self.im, o.re, o.im
            return QMat(a * c - b * d, a * d + b * c)
        return self.scale(o)

    def __rmul__(self, o):
        return self.scale(o)

    def scale(self, s) -> "QMat":
        g = GQ.coerce(s)
        if g.im == 0:
            f = fq(g.re)
            return QMat(self.re * f, self.im * f)
        x, y = fq(g.re), fq(g.im)
        return QMat(self.re * x - self.im * y, self.re * y + self.im * x)

    def adjoint(self) -> "QMat":
        return QMat(self.re.transpose(), -self.im.transpose())

    def trace(self) -> GQ:
        n = min(self.shape)
        tr = sum((self.re[i, i] for i in range(n)), flint.fmpq(0))
        ti = sum((self.im[i, i] for i in range(n)), flint.fmpq(0))
        return _gq(tr, ti)

    def __eq__(self, o) -> bool:
        return isinstance(o, QMat) and self.re == o.re and self.im == o.im

    def __hash__(self):
        return hash((tuple(self.re.entries()), tuple(self.im.entries())))

    def is_zero(self) -> bool:
        return all(x == 0 for x in self.re.entries()) and all(x == 0 for x in self.im.entries())

    def is_hermitian(self) -> bool:
        return self == self.adjoint()

    def kron(self, o: "QMat") -> "QMat":
        (r1, c1), (r2, c2) = self.shape, o.shape
        a, b = self.rows(), o.rows()
        out = [[None] * (c1 * c2) for _ in range(r1 * r2)]
        for i in range(r1):
            for j in range(c1):
                x = a[i][j]
                for k in range(r2):
                    for m in range(c2):
                        out[i * r2 + k][j * c2 + m] = x * b[k][m]
        return QMat.from_rows(out)

    def real_vector(self) -> list[flint.fmpq]:
        """Entries (row-major) as real coordinates: real parts then imaginary parts."""
        return self.re.entries() + self.im.entries()

    def to_complex(self) -> np.ndarray:
        r, c = self.shape
        re = np.array([float(to_fraction(x)) for x in self.re.entries()]).reshape(r, c)
        im = np.array([float(to_fraction(x)) for x in self.im.entries()]).reshape(r, c)
        return re + 1j * im

    def __repr__(self):
        return f"QMat({self.rows()!r})"


def block_diag(blocks: Sequence[QMat]) -> QMat:
    n = sum(b.shape[0] for b in blocks)
    out = QMat.zeros(n)
    off = 0
    for b in blocks:
        d = b.shape[0]
        for i in range(d):
            for j in range(d):
                out.re[off + i, off + j] = b.re[i, j]
                out.im[off + i, off + j] = b.im[i, j]
        off += d
    return out


def from_real_vector(v: Sequence, r: int, c: int) -> QMat:
    n = r * c
    return QMat(flint.fmpq_mat(r, c, [fq(x) for x in v[:n]]), flint.fmpq_mat(r, c, [fq(x) for x in v[n:]]))


# ---------------------------------------------------------------- complex vectors
# A complex vector of length N is carried as a real list of length 2N: (re..., im...).

def realify_vector(v: Sequence) -> list[flint.fmpq]:
    return list(v)


def _rotate(v: Sequence) -> list:
    """Realification of ``i * v``."""
    n = len(v) // 2
    return [-x for x in v[n:]] + list(v[:n])


def complex_rank(vectors: Iterable[Sequence]) -> int:
    rows = []
    for v in vectors:
        rows.append(list(v))
        rows.append(_rotate(v))
    if not rows:
        return 0
    return flint.fmpq_mat(len(rows), len(rows[0]), [fq(x) for r in rows for x in r]).rank() // 2


class ComplexSpan:
    """Incrementally maintained echelon basis of a complex span (realified)."""

    def __init__(self, length: int):
        self.length = length  # real length 2N
        self.pivots: dict[int, list] = {}
        self.order: list[int] = []

    @property
    def rank(self) -> int:
        return len(self.order) // 2

    def _reduce(self, v: list) -> list:
        v = list(v)
        for p in self.order:
            c = v[p]
            if c != 0:
                row = self.pivots[p]
                for j in range(p, self.length):
                    if row[j] != 0:
                        v[j] -= c * row[j]
        return v

    def _insert(self, v: list) -> bool:
        v = self._reduce(v)
        p = next((j for j, x in enumerate(v) if x != 0), None)
        if p is None:
            return False
        inv = 1 / v[p]
        v = [x * inv for x in v]
        for q in self.order:  # keep reduced form so _reduce works in any order
            row = self.pivots[q]
            c = row[p]
            if c != 0:
                self.pivots[q] = [a - c * b for a, b in zip(row, v)]
        self.pivots[p] = v
        self.order.append(p)
        self.order.sort()
        return True

    def contains(self, v: Sequence) -> bool:
        return not any(x != 0 for x in self._reduce([fq(x) for x in v]))

    def add(self, v: Sequence) -> bool:
        """Add a complex vector; return True when the span grew."""
        v = [fq(x) for x in v]
        if self.contains(v):
            return False
        self._insert(v)
        self._insert(_rotate(v))
        return True


class ComplexLinearMap:
    """Solve ``sum_j c_j v_j = b`` exactly for complex columns ``v_j``.

    Pivot rows and columns of the realified system are chosen once, so each
    solve is a single rational matrix-vector product.
    """

    def __init__(self, columns: Sequence[Sequence]):
        self.k = len(columns)
        if self.k == 0:
            raise ValueError("empty column set")
        n2 = len(columns[0])
        n = n2 // 2
        self.n2 = n2
        # realified matrix R (n2 x 2k): column j -> v_j, column k+j -> i*v_j
        cols = [list(map(fq, c)) for c in columns] + [[fq(x) for x in _rotate(c)] for c in columns]
        self.R = flint.fmpq_mat(n2, 2 * self.k, [cols[j][i] for i in range(n2) for j in range(2 * self.k)])
        Rt = self.R.transpose()
        red, rank = Rt.rref()
        rows = _pivot_columns(red, rank)
        sub = flint.fmpq_mat(rank, 2 * self.k, [self.R[i, j] for i in rows for j in range(2 * self.k)])
        red2, rank2 = sub.rref()
        colsel = _pivot_columns(red2, rank2)
        square = flint.fmpq_mat(rank, rank, [self.R[i, j] for i in rows for j in colsel])
        self.rank = rank // 2
        self.rows = rows
        self.cols = colsel
        self.inv = square.inv() if rank else None
        del n

    def solve(self, b: Sequence, check: bool = True) -> list[GQ]:
        b = [fq(x) for x in b]
        x = [flint.fmpq(0)] * (2 * self.k)
        if self.rows:
            rhs = flint.fmpq_mat(len(self.rows), 1, [b[i] for i in self.rows])
            sol = self.inv * rhs
            for t, j in enumerate(self.cols):
                x[j] = sol[t, 0]
        if check:
            got = self.R * flint.fmpq_mat(2 * self.k, 1, x)
            if any(got[i, 0] != b[i] for i in range(self.n2)):
                raise ValueError("vector is not in the span")
        return [_gq(x[j], x[self.k + j]) for j in range(self.k)]


def _pivot_columns(red: flint.fmpq_mat, rank: int) -> list[int]:
    out = []
    c = red.ncols()
    j = 0
    for i in range(rank):
        while j < c and red[i, j] == 0:
            j += 1
        out.append(j)
        j += 1
    return out


# ---------------------------------------------------------------- positivity

def realify(m: QMat) -> flint.fmpq_mat:
    r, c = m.shape
    out = flint.fmpq_mat(2 * r, 2 * c)
    for i in range(r):
        for j in range(c):
            a, b = m.re[i, j], m.im[i, j]
            out[i, j] = a
            out[r + i, c + j] = a
            out[r + i, j] = b
            out[i, c + j] = -b
    return out


def _charpoly_signs(h: QMat) -> list[int]:
    """Signs of ``(-1)^j e_j`` for the eigenvalues of a Hermitian matrix."""
    n = h.shape[0]
    coeffs = realify(h).charpoly().coeffs()  # low degree first, length 2n+1
    deg = len(coeffs) - 1
    signs = []
    for j in range(deg + 1):
        c = coeffs[deg - j]  # coefficient of x^(deg-j) equals (-1)^j e_j
        s = (c > 0) - (c < 0)
        signs.append(s if j % 2 == 0 else -s)
    del n
    return signs


def is_positive_definite(h: QMat) -> bool:
    """Exact test of ``h > 0`` for Hermitian ``h``."""
    if h.shape[0] == 0:
        return True
    return all(s > 0 for s in _charpoly_signs(h))


def is_positive_semidefinite(h: QMat) -> bool:
    if h.shape[0] == 0:
        return True
    return all(s >= 0 for s in _charpoly_signs(h))


def gram_schmidt(vectors: Sequence[list[GQ]]) -> list[list[GQ]]:
    """Orthogonalize (without normalizing) a list of complex vectors; drops dependent ones."""
    basis: list[list[GQ]] = []
    norms: list = []
    for v in vectors:
        w = list(v)
        for b, nb in zip(basis, norms):
            c = sum((x.conj() * y for x, y in zip(b, w)), GQ(0)) / nb
            if c:
                w = [y - c * x for x, y in zip(b, w)]
        nw = sum((x.abs2() for x in w), Fraction(0))
        if nw != 0:
            basis.append(w)
            norms.append(GQ(nw))
    return basis
