"""Ready-made inclusions with known conditional expectations and indices."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from .algebra import MultiMatrixAlgebra
from .linalg import ComplexSpan, QMat
from .presentation import MatrixPresentation, Presentation
from .scalar import GQ
from .subfactor import Inclusion
from .terms import Gen
from .tl import TLAlgebra, verify_relations


def _units(d: int) -> list[QMat]:
    """``e11, e12`` of ``M_d`` (they generate it as a *-algebra)."""
    if d == 1:
        return []
    return [QMat.unit(d, 0, 0), QMat.unit(d, 0, 1)] + [QMat.unit(d, i, i + 1) for i in range(1, d - 1)]


def _partial_trace_right(X: QMat, d: int, m: int) -> QMat:
    """``(id (x) tr_m)(X)`` for ``X`` acting on ``C^d (x) C^m``."""
    rows = X.rows()
    out = [[GQ(0)] * d for _ in range(d)]
    inv = GQ(Fraction(1, m))
    for i in range(d):
        for j in range(d):
            acc = GQ(0)
            for k in range(m):
                acc = acc + rows[i * m + k][j * m + k]
            out[i][j] = acc * inv
    return QMat.from_rows(out)


# ---------------------------------------------------------------- truncated hyperfinite

def build_truncated_r(n: int) -> MatrixPresentation:
    """``M_{2^n} = M_2^{(x) n}`` generated by ``e11`` and ``e12`` in each tensor factor."""
    if n < 1:
        raise ValueError("need at least one tensor factor")
    one = QMat.identity(2)
    gens = []
    for f in range(n):
        for u in _units(2):
            m = QMat.identity(1)
            for g in range(n):
                m = m.kron(u if g == f else one)
            gens.append(m)
    A = MultiMatrixAlgebra([2 ** n])
    return MatrixPresentation(A, [(g,) for g in gens], name=f"R{n}", provenance="truncated-r")


# ---------------------------------------------------------------- amplification

@dataclass
class AmplificationSpec:
    d: int = 2  # N = M_d
    m: int = 2  # M = N (x) M_m


def build_amplification(spec: AmplificationSpec | None = None) -> Inclusion:
    """``N = M_d`` inside ``N (x) M_m``; ``E_N`` is the normalized partial trace, index ``m^2``."""
    spec = spec or AmplificationSpec()
    d, m = spec.d, spec.m
    if m < 2:
        raise ValueError("amplification needs m >= 2")
    A = MultiMatrixAlgebra([d * m])
    n_gens = [u.kron(QMat.identity(m)) for u in _units(d)]
    m_gens = [QMat.identity(d).kron(u) for u in _units(m)]
    P = MatrixPresentation(A, [(g,) for g in n_gens + m_gens], name=f"amplification(d={d},m={m})")
    subs = [Gen(j + 1) for j in range(len(n_gens))]

    def declared(x):
        return (_partial_trace_right(x[0], d, m).kron(QMat.identity(m)),)

    # M_1 = N (x) M_m (x) M_m with e = 1 (x) |Omega><Omega|, Omega = m^(-1/2) sum_i e_i (x) e_i
    q_rows = [[GQ(0)] * (m * m) for _ in range(m * m)]
    for i in range(m):
        for j in range(m):
            q_rows[i * m + i][j * m + j] = GQ(Fraction(1, m))
    q = QMat.from_rows(q_rows)
    B = MultiMatrixAlgebra([d * m * m])
    e = QMat.identity(d).kron(q)
    model = MatrixPresentation(
        B, [(g.kron(QMat.identity(m)),) for g in n_gens + m_gens], name=f"{P.name}:M1-model",
        provenance="matrix-backend", jones=(e,),
    )
    I = Inclusion(P, subs, declared=declared, index=Fraction(m * m), name=P.name, m1_model=model,
                  spec=f"amplification d={d} m={m}")
    return I


# ---------------------------------------------------------------- crossed product

@dataclass
class CrossedProductSpec:
    """``N = M_d`` with an action ``g -> Ad(U_g)`` of a finite group.

    ``table[g][h]`` is the index of ``gh``; element 0 is the identity.
    """

    d: int = 2
    table: Sequence[Sequence[int]] = ((0, 1), (1, 0))
    unitaries: Sequence[QMat] | None = None

    def action_unitaries(self) -> list[QMat]:
        if self.unitaries is not None:
            return list(self.unitaries)
        # default: Z_2 acting by the flip symmetry
        flip = QMat.from_rows([[GQ(1) if i + j == self.d - 1 else GQ(0) for j in range(self.d)] for i in range(self.d)])
        return [QMat.identity(self.d), flip]


def _inverse_table(table) -> list[int]:
    n = len(table)
    return [next(h for h in range(n) if table[g][h] == 0) for g in range(n)]


def check_group(table) -> None:
    n = len(table)
    for g in range(n):
        if table[0][g] != g or table[g][0] != g:
            raise ValueError("element 0 must be the identity")
        if sorted(table[g]) != list(range(n)):
            raise ValueError("not a group table")
    for a in range(n):
        for b in range(n):
            for c in range(n):
                if table[table[a][b]][c] != table[a][table[b][c]]:
                    raise ValueError("group table is not associative")


def build_crossed_product(spec: CrossedProductSpec | None = None) -> Inclusion:
    """``N <= N x| G`` on ``C^d (x) l^2(G)``: ``pi(x) = sum_h alpha_{h^-1}(x) (x) |h><h|``, ``u_g = 1 (x) lambda_g``."""
    spec = spec or CrossedProductSpec()
    table = [list(r) for r in spec.table]
    check_group(table)
    G = len(table)
    d = spec.d
    Us = spec.action_unitaries()
    # alpha must be a homomorphism up to scalars; check on matrix units exactly
    inv = _inverse_table(table)

    def alpha(g, x):
        return Us[g] * x * Us[g].adjoint()

    for g in range(G):
        if not (Us[g] * Us[g].adjoint() == QMat.identity(d)):
            raise ValueError(f"U_{g} is not unitary")
        for h in range(G):
            for u in _units(d):
                if not (alpha(g, alpha(h, u)) == alpha(table[g][h], u)):
                    raise ValueError("the action is not a homomorphism")

    def pi(x):
        blocks = [alpha(inv[h], x) for h in range(G)]
        out = QMat.zeros(d * G)
        for h, b in enumerate(blocks):
            out = out + QMat.unit(G, h, h).kron(b)
        return out

    def lam(g):
        out = QMat.zeros(G)
        for h in range(G):
            out = out + QMat.unit(G, table[g][h], h)
        return out.kron(QMat.identity(d))

    n_gens = [pi(u) for u in _units(d)]
    u_gens = [lam(g) for g in range(1, G)]
    A = MultiMatrixAlgebra([d * G])
    P = MatrixPresentation(A, [(x,) for x in n_gens + u_gens], name=f"crossed-product(d={d},|G|={G})")
    subs = [Gen(j + 1) for j in range(len(n_gens))]

    def declared(x):
        X = x[0].rows()
        ee = QMat.from_rows([row[:d] for row in X[:d]])
        return (pi(ee),)

    e = QMat.unit(G, 0, 0).kron(QMat.identity(d))
    model = MatrixPresentation(A, [(x,) for x in n_gens + u_gens], name=f"{P.name}:M1-model", jones=(e,))
    I = Inclusion(P, subs, declared=declared, index=Fraction(G), name=P.name, m1_model=model,
                  spec=f"crossed-product d={d} G={G}")
    I.group_unitaries = [P.evaluate(Gen(len(n_gens) + g)) for g in range(1, G)]
    return I


# ---------------------------------------------------------------- fixed points

@dataclass
class FixedPointSpec:
    """A finite group acting on ``M_d + ... + M_d`` by permuting the summands.

    ``perms[g][b]`` is the summand that ``alpha_g`` moves summand ``b`` to.
    """

    d: int = 2
    blocks: int = 2
    table: Sequence[Sequence[int]] = ((0, 1), (1, 0))
    perms: Sequence[Sequence[int]] = ((0, 1), (1, 0))


def build_fixed_point(spec: FixedPointSpec | None = None) -> Inclusion:
    """``M^G <= M`` with ``E(x) = |G|^-1 sum_g alpha_g(x)``; ``M^G`` computed as an exact eigenspace."""
    spec = spec or FixedPointSpec()
    table = [list(r) for r in spec.table]
    check_group(table)
    G = len(table)
    d, nb = spec.d, spec.blocks
    perms = [list(p) for p in spec.perms]
    A = MultiMatrixAlgebra([d] * nb)
    for g in range(G):
        for h in range(G):
            if [perms[g][perms[h][b]] for b in range(nb)] != perms[table[g][h]]:
                raise ValueError("the action is not a homomorphism")

    def alpha(g, x):
        out = [None] * nb
        for b in range(nb):
            out[perms[g][b]] = x[b]
        return tuple(out)

    gens = []
    for b in range(nb):
        for u in _units(d):
            blocks = [QMat.zeros(d) for _ in range(nb)]
            blocks[b] = u
            gens.append(tuple(blocks))
    P = MatrixPresentation(A, gens, name=f"fixed-point(d={d},blocks={nb},|G|={G})")

    def declared(x):
        acc = A.zero()
        for g in range(G):
            acc = A.add(acc, alpha(g, x))
        return A.scale(GQ(Fraction(1, G)), acc)

    # fixed algebra: averages of a basis, reduced to an independent set
    span = ComplexSpan(len(A.vec(A.one())))
    fixed = []
    for x in P.word_basis().elements:
        y = declared(x)
        if span.add(A.vec(y)):
            fixed.append(y)
    subs = [P.word_basis().compile(y) for y in fixed]

    # M_1 model: M x| G on (direct sum) (x) l^2(G), e = |G|^-1 sum_g u_g
    D = d * nb
    inv = _inverse_table(table)

    def big(x):
        out = QMat.zeros(D)
        for b in range(nb):
            out = out + QMat.unit(nb, b, b).kron(x[b])
        return out

    def pi(x):
        out = QMat.zeros(D * G)
        for h in range(G):
            out = out + QMat.unit(G, h, h).kron(big(alpha(inv[h], x)))
        return out

    def lam(g):
        out = QMat.zeros(G)
        for h in range(G):
            out = out + QMat.unit(G, table[g][h], h)
        return out.kron(QMat.identity(D))

    e = QMat.zeros(D * G)
    for g in range(G):
        e = e + lam(g)
    e = e.scale(GQ(Fraction(1, G)))
    mats = compress_to_full([pi(x) for x in gens] + [e])
    B = MultiMatrixAlgebra([mats[0].shape[0]])
    model = MatrixPresentation(B, [(x,) for x in mats[:-1]], name=f"{P.name}:M1-model", jones=(mats[-1],))
    I = Inclusion(P, subs, declared=declared, index=Fraction(G), name=P.name, m1_model=model,
                  spec=f"fixed-point d={d} blocks={nb} G={G}")
    return I


def compress_to_full(mats: list[QMat]) -> list[QMat]:
    """Restrict to a coordinate block on which the generated algebra is a full matrix algebra.

    Coordinate blocks come from the connected components of the joint sparsity
    pattern; the trace is unchanged when the algebra acts with uniform
    multiplicity, which the dimension check confirms.  Returns ``mats`` unchanged
    when no such block exists.
    """
    n = mats[0].shape[0]
    parent = list(range(n))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for m in mats:
        rows = m.rows()
        for i in range(n):
            for j in range(n):
                if rows[i][j]:
                    parent[find(i)] = find(j)
    comps: dict = {}
    for i in range(n):
        comps.setdefault(find(i), []).append(i)
    A = MultiMatrixAlgebra([n])
    dim = MatrixPresentation(A, [(m,) for m in mats]).word_basis().dimension
    for idx in sorted(comps.values()):
        if len(idx) ** 2 == dim and len(idx) < n and n % len(idx) == 0:
            return [QMat.from_rows([[m.rows()[i][j] for j in idx] for i in idx]) for m in mats]
    return mats


# ---------------------------------------------------------------- Temperley-Lieb-Jones

@dataclass
class TLJ:
    algebra: TLAlgebra
    presentation: Presentation
    inclusion: Inclusion
    relations: object = field(default=None)


def build_tlj(width: int, delta=2) -> TLJ:
    """The algebra of ``e_1..e_{k-1}`` at loop value ``delta`` and the subalgebra of ``e_2..e_{k-1}``."""
    tl = TLAlgebra(width, delta)
    gens = [tl.jones(i) for i in range(1, width)]
    P = Presentation(tl, gens, name=f"TLJ(k={width},delta={tl.delta})", provenance="tlj")
    P._model = None
    subs = [Gen(i) for i in range(2, width)]
    I = Inclusion(P, subs, name=P.name, priority=("backend",), spec=f"tlj width={width} delta={tl.delta}")
    return TLJ(tl, P, I, verify_relations(tl))


GALLERY = {
    "amplification": build_amplification,
    "crossed-product": build_crossed_product,
    "fixed-point": build_fixed_point,
}
