"""Certified searches for projections and partial isometries.

Every search walks a deterministic candidate stream and returns the least
index whose candidate is *certified* by the 2-norm oracle.  Streams merge
goal-directed proposals (built from an exact matrix model when one is known)
with the canonical enumeration of rational points, so correctness never
depends on the proposals: they only make witnesses appear early.
"""

from __future__ import annotations

import enum
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import count
from typing import Callable, Iterable, Iterator, Sequence

import numpy as np

from .linalg import QMat, gram_schmidt
from .presentation import (
    CornerPresentation,
    Presentation,
    corner,
    is_projection,
    model_projections,
    trace,
)
from .scalar import GQ, bits_for, sqrt_floor_dyadic, sqrt_upper
from .terms import Adj, Enumerator, One, Prod, Scaled, Sum, Term, flat_bound_universal

MAX_PRECISION = 8192


class Verdict(enum.Enum):
    TRUE = "true"
    FALSE = "false"
    UNDECIDED = "undecided"

    def __bool__(self):
        return self is Verdict.TRUE


class BudgetExhausted(RuntimeError):
    """Raised when a search examines ``budget`` candidates without a witness."""

    def __init__(self, what: str, examined: int, partial: dict | None = None):
        super().__init__(f"{what}: no witness among the first {examined} candidates")
        self.what = what
        self.examined = examined
        self.partial = partial or {}


class Unrealizable(ValueError):
    """The requested trace is not attained by any projection of the algebra."""


def _pow2(k: int) -> Fraction:
    return Fraction(1, 1 << k) if k >= 0 else Fraction(1 << -k)


# ---------------------------------------------------------------- certified comparisons

def norm_lt(P: Presentation, t: Term, theta: Fraction, k_max: int = MAX_PRECISION) -> Verdict:
    """Certify ``||t||_2 < theta`` from oracle answers at increasing precision."""
    theta = Fraction(theta)
    if theta <= 0:
        return Verdict.FALSE
    k = bits_for(theta) + 2
    while k <= k_max:
        q = P.norm(t, k)
        if q + _pow2(k) < theta:
            return Verdict.TRUE
        if q - _pow2(k) >= theta:
            return Verdict.FALSE
        k *= 2
    return Verdict.UNDECIDED


def trace_within(P: Presentation, t: Term, target: Fraction, bound: Fraction,
                 k_max: int = MAX_PRECISION) -> Verdict:
    """Certify ``|tr(t) - target| < bound`` using polarized oracle traces."""
    bound = Fraction(bound)
    k = bits_for(bound) + 3
    while k <= k_max:
        tr = trace(P, t, k)
        d2 = (tr.re - target) ** 2 + tr.im ** 2
        slack = 2 * _pow2(k)  # each coordinate is within 2^-k
        if sqrt_upper(d2, k + 4) + slack < bound:
            return Verdict.TRUE
        if sqrt_floor_dyadic(d2, k + 4) - slack >= bound:
            return Verdict.FALSE
        k *= 2
    return Verdict.UNDECIDED


def in_ball(P: Presentation, t: Term, mode: str = "model") -> bool:
    """The flat condition: ``t`` lies in the open unit ball (universal or model bound)."""
    if mode == "universal":
        return flat_bound_universal(t) < 1
    return P.flat_bound_lt(t, Fraction(1))


# ---------------------------------------------------------------- quasi-projections

def qp_threshold(eps: Fraction) -> Fraction:
    return Fraction(eps) ** 2 / 48


def qi_threshold(eps: Fraction) -> Fraction:
    return (Fraction(eps) / 11) ** 16


@dataclass
class QuasiReport:
    verdict: Verdict
    flat_ok: bool
    checks: dict = field(default_factory=dict)


def is_quasi_projection(P: Presentation, t: Term, eps: Fraction, mode: str = "model") -> QuasiReport:
    """Flat bound below 1 and both defects ``||t - t*||_2``, ``||t - t^2||_2`` below ``eps^2/48``."""
    theta = qp_threshold(eps)
    if not in_ball(P, t, mode):
        return QuasiReport(Verdict.FALSE, False)
    v1 = norm_lt(P, Sum((t, Scaled(GQ(-1), Adj(t)))), theta)
    if v1 is not Verdict.TRUE:
        return QuasiReport(v1, True, {"adjoint": v1})
    v2 = norm_lt(P, Sum((t, Scaled(GQ(-1), Prod((t, t))))), theta)
    return QuasiReport(v2, True, {"adjoint": v1, "idempotent": v2})


def is_quasi_implement(P: Presentation, t: Term, p: Term, q: Term, eps: Fraction,
                       mode: str = "model") -> QuasiReport:
    """Flat bound below 1 and ``||t*t - p||_2``, ``||tt* - q||_2`` below ``(eps/11)^16``."""
    theta = qi_threshold(eps)
    if not in_ball(P, t, mode):
        return QuasiReport(Verdict.FALSE, False)
    v1 = norm_lt(P, Sum((Prod((Adj(t), t)), Scaled(GQ(-1), p))), theta)
    if v1 is not Verdict.TRUE:
        return QuasiReport(v1, True, {"source": v1})
    v2 = norm_lt(P, Sum((Prod((t, Adj(t))), Scaled(GQ(-1), q))), theta)
    return QuasiReport(v2, True, {"source": v1, "range": v2})


# ---------------------------------------------------------------- streams

@dataclass(frozen=True)
class Candidate:
    index: int
    source: str
    term: Term


def candidate_stream(P: Presentation, proposals: Iterable[tuple[str, Term]] = (),
                     min_degree: int = 0) -> Iterator[Candidate]:
    """Alternate proposals with the canonical enumeration of rational points."""
    en = Enumerator(P.arity, extended=P.extended, min_degree=min_degree)
    props = iter(proposals)
    canon = count()
    idx = 0
    live = True
    while True:
        if live:
            try:
                tag, t = next(props)
                yield Candidate(idx, tag, t)
                idx += 1
            except StopIteration:
                live = False
        n = next(canon)
        yield Candidate(idx, f"canonical#{n}", en.unrank(n))
        idx += 1


def least_witness(stream: Iterable[Candidate], predicate: Callable[[Candidate], bool],
                  budget: int, workers: int = 1, what: str = "search") -> tuple[Candidate, int]:
    """First candidate (by stream index) satisfying ``predicate``.

    Candidates are checked in chunks of ``workers``; within a chunk every
    candidate is evaluated and the least passing index wins, so the answer
    does not depend on the worker count.
    """
    it = iter(stream)
    examined = 0
    workers = max(1, int(workers))
    pool = ThreadPoolExecutor(workers) if workers > 1 else None
    try:
        while examined < budget:
            chunk = []
            for c in it:
                chunk.append(c)
                if len(chunk) >= min(workers, budget - examined):
                    break
            if not chunk:
                break
            results = list(pool.map(predicate, chunk)) if pool else [predicate(c) for c in chunk]
            examined += len(chunk)
            for c, ok in zip(chunk, results):
                if ok:
                    return c, examined
    finally:
        if pool:
            pool.shutdown(wait=True)
    raise BudgetExhausted(what, examined)


# ---------------------------------------------------------------- computable points

class ComputablePoint:
    """A point of a presentation given by a resolver ``k -> rational point``.

    ``exact_term`` is set when a rational point equal to the limit is known.
    """

    presentation: Presentation
    exact_term: Term | None = None
    exact_trace: Fraction | None = None

    def resolve(self, k: int) -> Term:
        raise NotImplementedError

    def term(self, k: int) -> Term:
        if self.exact_term is not None:
            return self.exact_term
        return self.resolve(k)


class ExactPoint(ComputablePoint):
    def __init__(self, P: Presentation, t: Term, exact_trace: Fraction | None = None):
        self.presentation = P
        self.exact_term = t
        self.exact_trace = exact_trace

    def resolve(self, k: int) -> Term:
        return self.exact_term


def _model_element(P: Presentation, t: Term):
    m = P.model
    return m.evaluate(P.lift(t))


def _eta_bits(theta: Fraction) -> int:
    return bits_for(theta) + 3


def projection_proposals(P: Presentation, target: Fraction, eps: Fraction) -> list[tuple[str, Term, Fraction]]:
    """Rescaled exact model projections, nearest trace to ``target`` first."""
    m = P.model
    if m is None or not m.word_basis().full:
        return []
    support = P.model_support()
    scale = getattr(P, "relative_trace", Fraction(1))
    out = []
    for tr, Q in model_projections(m.algebra, support):
        rel = tr / scale
        out.append((abs(rel - target), rel, Q))
    out.sort(key=lambda z: (z[0], z[1]))
    eta = _pow2(_eta_bits(qp_threshold(eps)))
    props = []
    for _, rel, Q in out:
        body = P.compile_model_element(Q)
        props.append((f"projection(tr={rel})", Scaled(GQ(1 - eta), body), rel))
    return props


@dataclass
class ChainStage:
    n: int
    eps: Fraction
    term: Term
    source: str
    index: int


class ProjectionPoint(ComputablePoint):
    """Limit of a chain of quasi-projections with trace near ``target``."""

    def __init__(self, P: Presentation, target: Fraction, k: int, budget: int, workers: int, mode: str):
        self.presentation = P
        self.target = Fraction(target)
        self.k = k
        self.budget = budget
        self.workers = workers
        self.mode = mode
        self.stages: list[ChainStage] = []
        self._proposal_base: Term | None = None
        self._proposal_trace: Fraction | None = None
        self._consistent = True
        self._extend()  # stage 1 locates the projection
        if self._proposal_base is not None and self._consistent:
            self.exact_term = self._proposal_base
            self.exact_trace = self._proposal_trace

    def eps(self, n: int) -> Fraction:
        return _pow2(n + self.k + 2)

    def _extend(self):
        n = len(self.stages) + 1
        eps_n = self.eps(n)
        P = self.presentation
        if n == 1:
            bound = eps_n
        else:
            bound = eps_n + 2 * sum(self.eps(i) for i in range(1, n))
        props = []
        if self._proposal_base is not None:
            eta = _pow2(_eta_bits(qp_threshold(eps_n)))
            props = [("projection", Scaled(GQ(1 - eta), self._proposal_base), self._proposal_trace)]
        elif n == 1:
            props = projection_proposals(P, self.target, eps_n)
        prev = self.stages[-1].term if self.stages else None
        traces = {id(t): tr for _, t, tr in props}

        def ok(c: Candidate) -> bool:
            if not is_quasi_projection(P, c.term, eps_n, self.mode).verdict:
                return False
            if prev is not None and not norm_lt(P, Sum((c.term, Scaled(GQ(-1), prev))), eps_n + self.eps(n - 1)):
                return False
            return bool(trace_within(P, c.term, self.target, bound))

        stream = candidate_stream(P, ((tag, t) for tag, t, _ in props))
        win, _ = least_witness(stream, ok, self.budget, self.workers, what=f"projection stage {n}")
        self.stages.append(ChainStage(n, eps_n, win.term, win.source, win.index))
        if n == 1 and win.source.startswith("projection"):
            body = win.term.arg  # Scaled(1 - eta, body)
            self._proposal_base = body
            self._proposal_trace = traces.get(id(win.term))
        elif self._proposal_base is not None and not win.source.startswith("projection"):
            self._consistent = False
            self.exact_term = None
            self.exact_trace = None

    def resolve(self, k: int) -> Term:
        # ||x_n - p||_2 <= 3 eps_n
        n = 1
        while 3 * self.eps(n) >= _pow2(k):
            n += 1
        while len(self.stages) < n:
            self._extend()
        return self.stages[n - 1].term


def projection_with_trace_approx(P: Presentation, lam: Fraction, k: int, budget: int = 2000,
                                 workers: int = 1, mode: str = "model") -> ProjectionPoint:
    """A computable projection whose trace is within ``2^-k`` of ``lam``."""
    lam = Fraction(lam)
    spec = P.trace_spectrum()
    if spec is not None and min(abs(s - lam) for s in spec) >= _pow2(k):
        raise Unrealizable(f"no projection has trace within 2^-{k} of {lam}")
    return ProjectionPoint(P, lam, k, budget, workers, mode)


@dataclass
class ProjectionChain(ComputablePoint):
    """Decreasing projections ``p_0 = 1 >= p_1 >= ...`` converging to trace ``lam``."""

    presentation: Presentation
    lam: Fraction
    terms: list = field(default_factory=list)  # exact terms p_0, p_1, ...
    traces: list = field(default_factory=list)
    stable_from: int | None = None

    def __post_init__(self):
        self.exact_term = None
        self.exact_trace = None

    def resolve(self, k: int) -> Term:
        # ||p_n - p||_2 < 2^(-n/2)
        n = 2 * k + 2
        if self.stable_from is not None:
            n = min(n, self.stable_from)
        return self.terms[min(n, len(self.terms) - 1)]


def projection_with_exact_trace(P: Presentation, lam: Fraction, budget: int = 2000,
                                workers: int = 1, max_stages: int = 64) -> ProjectionChain:
    """A computable projection of trace exactly ``lam`` via a decreasing chain of corners.

    Stage ``n+1`` asks for a projection below ``p_n`` whose trace lies in the
    open window ``(lam, lam + 2^-(n+1))``.  Finite-dimensional algebras have a
    discrete trace spectrum, so when the window holds no realizable value the
    stage takes the closed endpoint ``lam`` itself and the chain stops moving.
    """
    lam = Fraction(lam)
    if not 0 < lam <= 1:
        raise ValueError("trace must lie in (0, 1]")
    spec = P.trace_spectrum()
    if spec is None:
        raise Unrealizable("exact-trace projections need a full matrix model of the presentation")
    if lam not in spec:
        raise Unrealizable(f"{lam} is not the trace of a projection in this algebra")
    chain = ProjectionChain(P, lam, [One()], [Fraction(1)])
    n = 0
    p_term: Term = One()
    t_n = Fraction(1)
    while chain.stable_from is None and n < max_stages:
        if t_n == lam:
            chain.stable_from = n
            break
        C = corner(P, p_term) if n > 0 else P
        rel_spec = C.trace_spectrum()
        lo, hi = lam / t_n, (lam + _pow2(n + 1)) / t_n
        inside = [s for s in rel_spec if lo < s < hi and s <= 1]
        target = min(inside) if inside else lo
        gap = min((abs(s - target) for s in rel_spec if s != target), default=Fraction(1))
        k = max(n + 1, bits_for(gap))
        point = projection_with_trace_approx(C, target, k, budget, workers)
        if point.exact_term is None:
            raise RuntimeError("projection chain lost its exact limit")
        new_term = C.lift_one(point.exact_term) if n > 0 else point.exact_term
        new_trace = target * t_n
        chain.terms.append(new_term)
        chain.traces.append(new_trace)
        p_term, t_n = new_term, new_trace
        n += 1
    if chain.stable_from is None:
        chain.stable_from = n
    chain.exact_term = p_term
    chain.exact_trace = t_n
    return chain


def orthogonal_projection_family(P: Presentation, lam: Fraction, budget: int = 2000,
                                 workers: int = 1) -> list[ComputablePoint]:
    """Mutually orthogonal ``p_1..p_n`` of trace ``lam`` and ``p_{n+1} = 1 - sum p_i``."""
    lam = Fraction(lam)
    n = int(1 / lam)
    family: list[ComputablePoint] = []
    used: list[Term] = []
    for i in range(n):
        if not used:
            pt = projection_with_exact_trace(P, lam, budget, workers)
            family.append(pt)
            used.append(pt.exact_term)
            continue
        q = Sum((One(),) + tuple(Scaled(GQ(-1), u) for u in used))
        tq = 1 - lam * len(used)
        C = corner(P, q)
        pt = projection_with_exact_trace(C, lam / tq, budget, workers)
        lifted = C.lift_one(pt.exact_term)
        family.append(ExactPoint(P, lifted, lam))
        used.append(lifted)
    rest = Sum((One(),) + tuple(Scaled(GQ(-1), u) for u in used))
    family.append(ExactPoint(P, rest, 1 - n * lam))
    return family


# ---------------------------------------------------------------- implements

def _orth_range(b: QMat) -> list[list[GQ]]:
    cols = [[b[i, j] for i in range(b.shape[0])] for j in range(b.shape[1])]
    return gram_schmidt(cols)


def implement_proposal(P: Presentation, p_elem, q_elem, bits: int):
    """Model element ``sum_l c_l b_l a_l*`` with ``c_l`` a lower approximation of ``1/(|a_l||b_l|)``."""
    blocks = []
    for pb, qb in zip(p_elem, q_elem):
        a_s, b_s = _orth_range(pb), _orth_range(qb)
        if len(a_s) != len(b_s):
            return None
        d = pb.shape[0]
        V = QMat.zeros(d)
        for a, b in zip(a_s, b_s):
            na = sum((x.abs2() for x in a), Fraction(0))
            nb = sum((x.abs2() for x in b), Fraction(0))
            c = sqrt_floor_dyadic(1 / (na * nb), bits)
            bcol = QMat.from_rows([[x] for x in b])
            acol = QMat.from_rows([[x] for x in a])
            V = V + (bcol * acol.adjoint()).scale(GQ(c))
        blocks.append(V)
    return tuple(blocks)


class ImplementPoint(ComputablePoint):
    """Limit of quasi-implements of ``p ~ q`` with ``eps_n = 2^-n``."""

    def __init__(self, P: Presentation, p: Term, q: Term, budget: int, workers: int, mode: str = "model"):
        self.presentation = P
        self.p, self.q = p, q
        self.budget, self.workers, self.mode = budget, workers, mode
        self.stages: list[ChainStage] = []
        m = P.model
        self._pm = self._qm = None
        if m is not None and m.word_basis().full:
            self._pm = _model_element(P, p)
            self._qm = _model_element(P, q)
        self._extend()

    def _proposal(self, n: int):
        if self._pm is None:
            return []
        theta = qi_threshold(_pow2(n))
        bits = _eta_bits(theta) + 4
        V = implement_proposal(self.presentation, self._pm, self._qm, bits)
        if V is None:
            return []
        eta = _pow2(bits)
        return [("implement", Scaled(GQ(1 - eta), self.presentation.compile_model_element(V)))]

    def _extend(self):
        n = len(self.stages) + 1
        eps_n = _pow2(n)
        P = self.presentation
        prev = self.stages[-1].term if self.stages else None

        def ok(c: Candidate) -> bool:
            if not is_quasi_implement(P, c.term, self.p, self.q, eps_n, self.mode).verdict:
                return False
            if prev is not None:
                return bool(norm_lt(P, Sum((c.term, Scaled(GQ(-1), prev))), eps_n + _pow2(n - 1)))
            return True

        stream = candidate_stream(P, self._proposal(n))
        win, _ = least_witness(stream, ok, self.budget, self.workers, what=f"implement stage {n}")
        self.stages.append(ChainStage(n, eps_n, win.term, win.source, win.index))

    def resolve(self, k: int) -> Term:
        n = k + 2  # ||x_n - v||_2 < 3 * 2^-n
        while len(self.stages) < n:
            self._extend()
        return self.stages[n - 1].term


def projection_with_trace_exact(P: Presentation, lam: Fraction, budget: int = 2000,
                                workers: int = 1) -> "ProjectionChain":
    return projection_with_exact_trace(P, lam, budget, workers)


def find_implement(P: Presentation, p: Term, q: Term, budget: int = 2000, workers: int = 1) -> ImplementPoint:
    """A computable partial isometry ``v`` with ``v*v = p`` and ``vv* = q``."""
    tp, tq = P.exact_trace(p), P.exact_trace(q)
    if tp != tq:
        raise Unrealizable("projections of different trace are not equivalent")
    return ImplementPoint(P, p, q, budget, workers)


def find_subequivalence(P: Presentation, p: Term, q: Term, budget: int = 2000, workers: int = 1):
    """``(q', v)`` with ``q' <= q`` of trace ``tr(p)`` and ``v`` implementing ``p ~ q'``."""
    tp, tq = P.exact_trace(p).re, P.exact_trace(q).re
    if tp > tq:
        raise Unrealizable("tr(p) exceeds tr(q)")
    C = corner(P, q)
    chain = projection_with_exact_trace(C, tp / tq, budget, workers)
    q_sub = C.lift_one(chain.exact_term)
    return q_sub, find_implement(P, p, q_sub, budget, workers)


# ---------------------------------------------------------------- identity

def find_identity(P: Presentation, k: int, budget: int = 2000, workers: int = 1) -> Term:
    """A term within ``2^-k`` of 1.

    When the unit is not a special point the search looks for ``x x* x`` among
    terms without the unit letter.
    """
    if P.unit_special:
        return One()
    theta = _pow2(2 * k + 3)
    props = []
    m = P.model
    if m is not None and m.word_basis().full and not isinstance(P, CornerPresentation):
        from .presentation import WordBasis

        nb = WordBasis(m, include_unit=False)
        body = nb.compile(m.algebra.one())
        eta = _pow2(bits_for(qp_threshold(theta)) + 4)
        props.append(("identity", Scaled(GQ(1 - eta), body)))

    def cube(t: Term) -> Term:
        return Prod((t, Adj(t), t))

    def ok(c: Candidate) -> bool:
        x = cube(c.term)
        return bool(is_quasi_projection(P, x, theta).verdict) and bool(trace_within(P, x, Fraction(1), theta))

    win, _ = least_witness(candidate_stream(P, props, min_degree=1), ok, budget, workers, what="identity")
    return cube(win.term)


# ---------------------------------------------------------------- witnesses

@dataclass
class QuasiProjectionWitness:
    term: Term
    epsilon: Fraction
    defects: tuple  # upper bounds for ||x - x*||_2 and ||x - x^2||_2
    mode: str
    index: int
    source: str


@dataclass
class QuasiImplementWitness:
    term: Term
    p: Term
    q: Term
    epsilon: Fraction
    defects: tuple  # upper bounds for ||x*x - p||_2 and ||xx* - q||_2
    mode: str


def _upper(P: Presentation, t: Term, theta: Fraction) -> Fraction:
    k = bits_for(theta) + 8
    return P.norm(t, k) + _pow2(k)


def find_projection_near(P: Presentation, predicate: Callable[[Term], bool], eps: Fraction,
                         budget: int = 2000, workers: int = 1, mode: str = "model") -> QuasiProjectionWitness:
    """Least-index ``eps``-quasi-projection that also satisfies ``predicate``."""
    eps = Fraction(eps)
    props = []
    m = P.model
    if m is not None and m.word_basis().full and mode == "model":
        theta = qp_threshold(eps)
        bits = _eta_bits(theta)
        for tr, Q in model_projections(m.algebra, P.model_support()):
            props.append((f"model-projection(tr={tr})", Scaled(GQ(1 - _pow2(bits)), P.compile_model_element(Q))))

    def ok(c: Candidate) -> bool:
        return bool(is_quasi_projection(P, c.term, eps, mode).verdict) and bool(predicate(c.term))

    win, _ = least_witness(candidate_stream(P, props), ok, budget, workers, what="quasi-projection")
    theta = qp_threshold(eps)
    t = win.term
    d1 = _upper(P, Sum((t, Scaled(GQ(-1), Adj(t)))), theta)
    d2 = _upper(P, Sum((t, Scaled(GQ(-1), Prod((t, t))))), theta)
    return QuasiProjectionWitness(t, eps, (d1, d2), mode, win.index, win.source)


# ---------------------------------------------------------------- numeric oracles

def weighted_two_norm(blocks: Sequence[np.ndarray], weights: Sequence[Fraction]) -> float:
    s = 0.0
    for b, w in zip(blocks, weights):
        d = b.shape[0]
        s += float(w) / d * float(np.sum(np.abs(b) ** 2))
    return float(np.sqrt(s))


def nearest_projection_oracle(blocks: Sequence[np.ndarray]) -> tuple[list[np.ndarray], bool]:
    """Spectral projection of ``x*x`` at 1/2, blockwise; the flag marks a near-1/2 eigenvalue."""
    out, ambiguous = [], False
    for x in blocks:
        z = x.conj().T @ x
        z = (z + z.conj().T) / 2
        w, v = np.linalg.eigh(z)
        if np.any(np.abs(w - 0.5) < 1e-9):
            ambiguous = True
        keep = v[:, w >= 0.5]
        out.append(keep @ keep.conj().T)
    return out, ambiguous


def polar_implement_oracle(x_blocks, p_blocks, q_blocks, delta: float) -> list[np.ndarray]:
    """Implement of ``p ~ q`` near ``x``: compress, keep the spectral part of ``y*y`` near 1, complete."""
    out = []
    cut = 1 - np.sqrt(5) * delta ** 0.25
    for x, p, q in zip(x_blocks, p_blocks, q_blocks):
        y = q @ x @ p
        w, v = np.linalg.eigh((y.conj().T @ y + (y.conj().T @ y).conj().T) / 2)
        f = np.where(w >= cut, 1 / np.sqrt(np.clip(w, 1e-300, None)), 0.0)
        z = y @ (v * f) @ v.conj().T
        rp = _range_basis(p - z.conj().T @ z)
        rq = _range_basis(q - z @ z.conj().T)
        r = min(rp.shape[1], rq.shape[1])
        wiso = rq[:, :r] @ rp[:, :r].conj().T
        out.append(z + wiso)
    return out


def _range_basis(h: np.ndarray) -> np.ndarray:
    h = (h + h.conj().T) / 2
    w, v = np.linalg.eigh(h)
    return v[:, w > 0.5]


def is_exact_projection(P: Presentation, t: Term) -> bool:
    return is_projection(P.algebra, P.evaluate(t))
