"""Exact finite-dimensional tracial *-algebras.

Every algebra exposes the same small protocol (``one``, ``mul``, ``adjoint``,
``trace`` and friends) plus:

* ``vec(x)``: canonical real coordinates (an injective linear map), used for
  exact rank and solve questions;
* ``operator(x)``: a faithful *-representation as a matrix together with the
  Gram metric of the representation space (``None`` meaning orthonormal),
  used to certify operator-norm bounds exactly.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Sequence

import numpy as np

from .linalg import QMat, block_diag, is_positive_definite, is_positive_semidefinite
from .scalar import GQ


class ExactAlgebra:
    """Base class with the generic operations derived from the primitive ones."""

    def sub(self, x, y):
        return self.add(x, self.scale(GQ(-1), y))

    def equal(self, x, y) -> bool:
        return self.vec(x) == self.vec(y)

    def is_zero(self, x) -> bool:
        return not any(v != 0 for v in self.vec(x))

    def inner(self, x, y) -> GQ:
        """``tr(y* x)``."""
        return self.trace(self.mul(self.adjoint(y), x))

    def norm2_sq(self, x) -> Fraction:
        t = self.trace(self.mul(self.adjoint(x), x))
        return t.re

    def op_norm_lt(self, x, c: Fraction) -> bool:
        """Exact decision of ``||x|| < c``."""
        c = Fraction(c)
        if c <= 0:
            return False
        X, G = self.operator(x)
        mats = X if isinstance(X, list) else [X]
        metrics = G if isinstance(G, list) else [G] * len(mats)
        for Xi, Gi in zip(mats, metrics):
            if Gi is None:
                Gi = QMat.identity(Xi.shape[0])
            H = Gi.scale(c * c) - Xi.adjoint() * Gi * Xi
            if not is_positive_definite(H):
                return False
        return True

    def op_norm_le(self, x, c: Fraction) -> bool:
        c = Fraction(c)
        X, G = self.operator(x)
        mats = X if isinstance(X, list) else [X]
        metrics = G if isinstance(G, list) else [G] * len(mats)
        for Xi, Gi in zip(mats, metrics):
            if Gi is None:
                Gi = QMat.identity(Xi.shape[0])
            if not is_positive_semidefinite(Gi.scale(c * c) - Xi.adjoint() * Gi * Xi):
                return False
        return True

    def op_norm_estimate(self, x) -> float:
        """Floating-point operator norm (diagnostic only)."""
        X, G = self.operator(x)
        mats = X if isinstance(X, list) else [X]
        metrics = G if isinstance(G, list) else [G] * len(mats)
        best = 0.0
        for Xi, Gi in zip(mats, metrics):
            A = Xi.to_complex()
            if Gi is not None:
                R = np.linalg.cholesky(Gi.to_complex()).conj().T  # G = R* R
                A = R @ A @ np.linalg.inv(R)
            if A.size:
                best = max(best, float(np.linalg.norm(A, 2)))
        return best


class MultiMatrixAlgebra(ExactAlgebra):
    """``M_{d_1} + ... + M_{d_r}`` with trace ``sum_i w_i tr_{d_i}`` (normalized block traces)."""

    def __init__(self, dims: Sequence[int], weights: Sequence[Fraction] | None = None):
        self.dims = tuple(int(d) for d in dims)
        if weights is None:
            weights = [Fraction(d * d, sum(x * x for x in self.dims)) for d in self.dims]
        self.weights = tuple(Fraction(w) for w in weights)
        if sum(self.weights) != 1 or any(w <= 0 for w in self.weights):
            raise ValueError("trace weights must be positive and sum to 1")
        if len(self.weights) != len(self.dims):
            raise ValueError("one weight per block expected")
        self.dimension = sum(d * d for d in self.dims)

    def __repr__(self):
        return f"MultiMatrixAlgebra(dims={self.dims}, weights={[str(w) for w in self.weights]})"

    def one(self):
        return tuple(QMat.identity(d) for d in self.dims)

    def zero(self):
        return tuple(QMat.zeros(d) for d in self.dims)

    def element(self, blocks: Sequence[QMat]):
        blocks = tuple(blocks)
        if tuple(b.shape[0] for b in blocks) != self.dims:
            raise ValueError("block shapes do not match the algebra")
        return blocks

    def add(self, x, y):
        return tuple(a + b for a, b in zip(x, y))

    def sub(self, x, y):
        return tuple(a - b for a, b in zip(x, y))

    def scale(self, c, x):
        return tuple(a.scale(c) for a in x)

    def mul(self, x, y):
        return tuple(a * b for a, b in zip(x, y))

    def adjoint(self, x):
        return tuple(a.adjoint() for a in x)

    def trace(self, x) -> GQ:
        out = GQ(0)
        for a, d, w in zip(x, self.dims, self.weights):
            out = out + a.trace() * GQ(w / d)
        return out

    def equal(self, x, y) -> bool:
        return all(a == b for a, b in zip(x, y))

    def vec(self, x) -> list:
        re, im = [], []
        for a in x:
            re += a.re.entries()
            im += a.im.entries()
        return re + im

    def from_vec(self, v):
        from .linalg import from_real_vector

        n = len(v) // 2
        re, im = v[:n], v[n:]
        out, off = [], 0
        for d in self.dims:
            out.append(from_real_vector(list(re[off:off + d * d]) + list(im[off:off + d * d]), d, d))
            off += d * d
        return tuple(out)

    def operator(self, x):
        return list(x), None

    def block_diag(self, x) -> QMat:
        return block_diag(x)

    def to_complex(self, x) -> list[np.ndarray]:
        return [a.to_complex() for a in x]


class CornerAlgebra(ExactAlgebra):
    """The corner ``pAp`` with unit ``p`` and trace ``tr(x) / tr(p)``."""

    def __init__(self, parent: ExactAlgebra, p, p_trace: Fraction | None = None):
        self.parent = parent
        self.p = p
        tp = parent.trace(p) if p_trace is None else GQ(p_trace)
        if tp.im != 0 or tp.re <= 0:
            raise ValueError("corner projection must have positive trace")
        self.p_trace = tp.re

    def one(self):
        return self.p

    def zero(self):
        return self.parent.zero()

    def add(self, x, y):
        return self.parent.add(x, y)

    def sub(self, x, y):
        return self.parent.sub(x, y)

    def scale(self, c, x):
        return self.parent.scale(c, x)

    def mul(self, x, y):
        return self.parent.mul(x, y)

    def adjoint(self, x):
        return self.parent.adjoint(x)

    def trace(self, x) -> GQ:
        return self.parent.trace(x) * GQ(1 / self.p_trace)

    def equal(self, x, y) -> bool:
        return self.parent.equal(x, y)

    def vec(self, x):
        return self.parent.vec(x)

    def operator(self, x):
        # norms in pAp agree with norms in A
        return self.parent.operator(x)

    def compress(self, x):
        return self.parent.mul(self.p, self.parent.mul(x, self.p))
