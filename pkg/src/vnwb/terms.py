"""Terms: rational *-polynomials in generators ``g1..gk``.

Extended terms also allow the Jones projection ``e`` and conditional
expectation atoms ``E(t)``.  Terms are immutable trees; equality of values is
decided on the canonical flattened form (a map from reduced words to
coefficients in Q(i)).
"""

from __future__ import annotations

import re
from fractions import Fraction
from typing import Iterable, Iterator

from .scalar import GQ, abs_upper, format_scalar, gq_height, parse_scalar


class Term:
    __slots__ = ("_hash", "_flat")

    def _init(self):
        object.__setattr__(self, "_hash", None)
        object.__setattr__(self, "_flat", None)

    def __setattr__(self, name, value):
        raise AttributeError("terms are immutable")

    def _key(self) -> tuple:
        raise NotImplementedError

    def __hash__(self):
        h = self._hash
        if h is None:
            h = hash((type(self).__name__, self._key()))
            object.__setattr__(self, "_hash", h)
        return h

    def __eq__(self, other):
        if self is other:
            return True
        if type(self) is not type(other) or hash(self) != hash(other):
            return False
        return _struct_eq(self, other, set())

    # algebraic sugar
    def __add__(self, other: "Term") -> "Term":
        return Sum((self, as_term(other)))

    def __radd__(self, other):
        return Sum((as_term(other), self))

    def __sub__(self, other) -> "Term":
        return Sum((self, Scaled(GQ(-1), as_term(other))))

    def __rsub__(self, other):
        return Sum((as_term(other), Scaled(GQ(-1), self)))

    def __neg__(self) -> "Term":
        return Scaled(GQ(-1), self)

    def __mul__(self, other) -> "Term":
        if isinstance(other, Term):
            return Prod((self, other))
        return Scaled(GQ.coerce(other), self)

    def __rmul__(self, other) -> "Term":
        return Scaled(GQ.coerce(other), self)

    def star(self) -> "Term":
        return Adj(self)

    def flatten(self) -> "Poly":
        f = self._flat
        if f is None:
            f = _flatten(self)
            object.__setattr__(self, "_flat", f)
        return f

    def same_value(self, other: "Term") -> bool:
        """Equality of canonical flattened forms."""
        return self.flatten() == other.flatten()

    def __str__(self):
        return format_term(self)

    def __repr__(self):
        return f"<{type(self).__name__} {format_term(self)}>"


def _struct_eq(a, b, seen: set) -> bool:
    """Structural equality that visits each shared pair of subterms once."""
    if a is b:
        return True
    if isinstance(a, Term):
        if type(a) is not type(b) or hash(a) != hash(b):
            return False
        pair = (id(a), id(b))
        if pair in seen:
            return True
        if not _struct_eq(a._key(), b._key(), seen):
            return False
        seen.add(pair)
        return True
    if isinstance(a, tuple):
        return isinstance(b, tuple) and len(a) == len(b) and all(_struct_eq(x, y, seen) for x, y in zip(a, b))
    return a == b


class Gen(Term):
    __slots__ = ("index",)

    def __init__(self, index: int):
        if index < 1:
            raise ValueError("generator indices start at 1")
        self._init()
        object.__setattr__(self, "index", int(index))

    def _key(self):
        return (self.index,)


class One(Term):
    __slots__ = ()

    def __init__(self):
        self._init()

    def _key(self):
        return ()


class Zero(Term):
    __slots__ = ()

    def __init__(self):
        self._init()

    def _key(self):
        return ()


class Jones(Term):
    """The Jones projection ``e``."""

    __slots__ = ()

    def __init__(self):
        self._init()

    def _key(self):
        return ()


class Expect(Term):
    """Conditional expectation atom ``E(t)``."""

    __slots__ = ("arg",)

    def __init__(self, arg: Term):
        self._init()
        object.__setattr__(self, "arg", arg)

    def _key(self):
        return (self.arg,)


class Adj(Term):
    __slots__ = ("arg",)

    def __init__(self, arg: Term):
        self._init()
        object.__setattr__(self, "arg", arg)

    def _key(self):
        return (self.arg,)


class Scaled(Term):
    __slots__ = ("coef", "arg")

    def __init__(self, coef, arg: Term):
        self._init()
        object.__setattr__(self, "coef", GQ.coerce(coef))
        object.__setattr__(self, "arg", arg)

    def _key(self):
        return (self.coef.key(), self.arg)


class Sum(Term):
    __slots__ = ("args",)

    def __init__(self, args: Iterable[Term]):
        self._init()
        object.__setattr__(self, "args", tuple(args))

    def _key(self):
        return self.args


class Prod(Term):
    __slots__ = ("args",)

    def __init__(self, args: Iterable[Term]):
        self._init()
        object.__setattr__(self, "args", tuple(args))

    def _key(self):
        return self.args


def as_term(x) -> Term:
    if isinstance(x, Term):
        return x
    c = GQ.coerce(x)
    return Scaled(c, One()) if c != 1 else One()


def contains_jones(t: Term) -> bool:
    return any(letter[0] == 1 for w in t.flatten().terms for letter in w)


def arity_of(t: Term) -> int:
    """Largest generator index occurring in ``t`` (0 if none)."""
    best = 0
    stack = [t]
    while stack:
        s = stack.pop()
        if isinstance(s, Gen):
            best = max(best, s.index)
        elif isinstance(s, (Adj, Expect, Scaled)):
            stack.append(s.arg)
        elif isinstance(s, (Sum, Prod)):
            stack.extend(s.args)
    return best


# ---------------------------------------------------------------- canonical form
# A letter is (kind, index, star, inner): kind 0 = generator, 1 = e, 2 = E(inner).

E_LETTER = (1, 0, 0, ())


class Poly:
    """Canonical flattened form: reduced words mapped to nonzero coefficients."""

    __slots__ = ("terms", "_key")

    def __init__(self, terms: dict):
        self.terms = {w: c for w, c in terms.items() if c}
        self._key = None

    def key(self) -> tuple:
        if self._key is None:
            self._key = tuple((w, self.terms[w].key()) for w in sorted(self.terms, key=word_key))
        return self._key

    def __eq__(self, other):
        return isinstance(other, Poly) and self.terms == other.terms

    def __hash__(self):
        return hash(self.key())

    def is_zero(self) -> bool:
        return not self.terms

    def monomials(self) -> list[tuple[tuple, GQ]]:
        return [(w, self.terms[w]) for w in sorted(self.terms, key=word_key)]

    def __add__(self, other: "Poly") -> "Poly":
        out = dict(self.terms)
        for w, c in other.terms.items():
            out[w] = out.get(w, GQ(0)) + c
        return Poly(out)

    def scale(self, c: GQ) -> "Poly":
        return Poly({w: c * v for w, v in self.terms.items()})

    def __mul__(self, other: "Poly") -> "Poly":
        out: dict = {}
        for w1, c1 in self.terms.items():
            for w2, c2 in other.terms.items():
                w = concat(w1, w2)
                out[w] = out.get(w, GQ(0)) + c1 * c2
        return Poly(out)

    def adjoint(self) -> "Poly":
        out: dict = {}
        for w, c in self.terms.items():
            aw = adjoint_word(w)
            out[aw] = out.get(aw, GQ(0)) + c.conj()
        return Poly(out)

    def to_term(self) -> Term:
        return poly_to_term(self)


def word_key(w: tuple) -> tuple:
    return (len(w), w)


def concat(w1: tuple, w2: tuple) -> tuple:
    if w1 and w2 and w1[-1] == E_LETTER and w2[0] == E_LETTER:
        return w1 + w2[1:]
    return w1 + w2


def adjoint_letter(letter: tuple) -> tuple:
    kind = letter[0]
    if kind == 0:
        return (0, letter[1], 1 - letter[2], ())
    if kind == 1:
        return letter
    inner = Poly({w: GQ(*c) for w, c in letter[3]}).adjoint()
    return (2, 0, 0, inner.key())


def adjoint_word(w: tuple) -> tuple:
    return tuple(adjoint_letter(a) for a in reversed(w))


def _flatten(t: Term) -> Poly:
    if isinstance(t, Gen):
        return Poly({((0, t.index, 0, ()),): GQ(1)})
    if isinstance(t, One):
        return Poly({(): GQ(1)})
    if isinstance(t, Zero):
        return Poly({})
    if isinstance(t, Jones):
        return Poly({(E_LETTER,): GQ(1)})
    if isinstance(t, Expect):
        inner = t.arg.flatten()
        if inner.is_zero():
            return Poly({})
        return Poly({((2, 0, 0, inner.key()),): GQ(1)})
    if isinstance(t, Adj):
        return t.arg.flatten().adjoint()
    if isinstance(t, Scaled):
        return t.arg.flatten().scale(t.coef)
    if isinstance(t, Sum):
        out = Poly({})
        for a in t.args:
            out = out + a.flatten()
        return out
    if isinstance(t, Prod):
        out = Poly({(): GQ(1)})
        for a in t.args:
            out = out * a.flatten()
        return out
    raise TypeError(f"unknown term node {type(t).__name__}")


def letter_to_term(letter: tuple) -> Term:
    kind = letter[0]
    if kind == 0:
        g = Gen(letter[1])
        return Adj(g) if letter[2] else g
    if kind == 1:
        return Jones()
    inner = Poly({w: GQ(*c) for w, c in letter[3]})
    return Expect(poly_to_term(inner))


def word_to_term(w: tuple) -> Term:
    if not w:
        return One()
    if len(w) == 1:
        return letter_to_term(w[0])
    return Prod(tuple(letter_to_term(a) for a in w))


def monomial_to_term(w: tuple, c: GQ) -> Term:
    base = word_to_term(w)
    return base if c == 1 else Scaled(c, base)


def poly_to_term(p: Poly) -> Term:
    mons = p.monomials()
    if not mons:
        return Zero()
    if len(mons) == 1:
        return monomial_to_term(*mons[0])
    return Sum(tuple(monomial_to_term(w, c) for w, c in mons))


def canonical(t: Term) -> Term:
    """The canonical representative of ``t`` (sorted monomials, reduced words)."""
    return poly_to_term(t.flatten())


def round_term(t: Term, r: int) -> Term:
    """Canonical form of ``t`` with every coefficient rounded to the grid ``2^-r (Z + iZ)``."""
    def rnd(x: Fraction) -> Fraction:
        return Fraction(round(x * (1 << r)), 1 << r)

    p = t.flatten()
    return poly_to_term(Poly({w: GQ(rnd(c.re), rnd(c.im)) for w, c in p.terms.items()}))


# ---------------------------------------------------------------- printing

def format_term(t: Term) -> str:
    return _fmt(t, 0)


def _fmt(t: Term, ctx: int) -> str:
    # ctx: 0 = sum level, 1 = product factor, 2 = postfix operand
    if isinstance(t, Gen):
        return f"g{t.index}"
    if isinstance(t, One):
        return "1"
    if isinstance(t, Zero):
        return "0"
    if isinstance(t, Jones):
        return "e"
    if isinstance(t, Expect):
        return f"E({_fmt(t.arg, 0)})"
    if isinstance(t, Adj):
        return _fmt(t.arg, 2) + "'"
    if isinstance(t, Scaled):
        if isinstance(t.arg, One):
            return format_scalar(t.coef)
        s = f"{format_scalar(t.coef)}*{_fmt(t.arg, 1)}"
        return f"({s})" if ctx >= 1 else s
    if isinstance(t, Sum):
        if not t.args:
            return "0"
        s = " + ".join(_fmt(a, 0) for a in t.args)
        return f"({s})" if ctx >= 1 else s
    if isinstance(t, Prod):
        if not t.args:
            return "1"
        s = "*".join(_fmt(a, 1) for a in t.args)
        return f"({s})" if ctx >= 2 else s
    raise TypeError(type(t).__name__)


# ---------------------------------------------------------------- parsing

class ParseError(ValueError):
    def __init__(self, message: str, position: int):
        super().__init__(f"{message} at position {position}")
        self.position = position


_SCALAR = re.compile(
    r"\(\s*(?P<body>[+-]?\s*\d+(?:\s*/\s*\d+)?(?:\s*[+-]\s*(?:\d+(?:\s*/\s*\d+)?)?\s*i)?"
    r"|[+-]?\s*(?:\d+(?:\s*/\s*\d+)?)?\s*i)\s*\)"
)


class _Parser:
    def __init__(self, text: str, extended: bool, arity: int | None = None):
        self.s = text
        self.i = 0
        self.extended = extended
        self.arity = arity

    def ws(self):
        while self.i < len(self.s) and self.s[self.i].isspace():
            self.i += 1

    def peek(self) -> str:
        self.ws()
        return self.s[self.i] if self.i < len(self.s) else ""

    def expect(self, ch: str):
        if self.peek() != ch:
            raise ParseError(f"expected {ch!r}", self.i)
        self.i += 1

    def parse(self) -> Term:
        t = self.expr()
        if self.peek():
            raise ParseError(f"unexpected {self.peek()!r}", self.i)
        return t

    def expr(self) -> Term:
        parts = [self.product()]
        while self.peek() in ("+", "-"):
            op = self.s[self.i]
            self.i += 1
            t = self.product()
            parts.append(t if op == "+" else Scaled(GQ(-1), t))
        return parts[0] if len(parts) == 1 else Sum(tuple(parts))

    def product(self) -> Term:
        factors = [self.unary()]
        while self.peek() == "*":
            self.i += 1
            factors.append(self.unary())
        # leading scalar literals fold into a coefficient
        coef = GQ(1)
        scaled = False
        while len(factors) > 1 and _is_literal(factors[0]):
            coef = coef * _literal_value(factors[0])
            factors.pop(0)
            scaled = True
        body = factors[0] if len(factors) == 1 else Prod(tuple(factors))
        return Scaled(coef, body) if scaled else body

    def unary(self) -> Term:
        if self.peek() == "-":
            self.i += 1
            return Scaled(GQ(-1), self.unary())
        t = self.primary()
        while self.peek() == "'":
            self.i += 1
            t = Adj(t)
        return t

    def primary(self) -> Term:
        c = self.peek()
        start = self.i
        if c == "g":
            self.i += 1
            m = re.match(r"\d+", self.s[self.i:])
            if not m:
                raise ParseError("generator index expected", self.i)
            self.i += m.end()
            n = int(m.group())
            if n < 1:
                raise ParseError("generator indices start at 1", start)
            if self.arity is not None and n > self.arity:
                raise ParseError(f"generator g{n} out of range for arity {self.arity}", start)
            return Gen(n)
        if c == "e":
            if not self.extended:
                raise ParseError("'e' is only allowed in extended terms", start)
            self.i += 1
            return Jones()
        if c == "E":
            self.i += 1
            self.expect("(")
            inner = self.expr()
            self.expect(")")
            return Expect(inner)
        if c.isdigit():
            m = re.match(r"\d+", self.s[self.i:])
            self.i += m.end()
            n = int(m.group())
            if n == 0:
                return Zero()
            if n == 1:
                return One()
            return Scaled(GQ(n), One())
        if c == "(":
            m = _SCALAR.match(self.s, self.i)
            if m:
                self.i = m.end()
                try:
                    val = parse_scalar(m.group("body"))
                except (ValueError, ZeroDivisionError) as exc:
                    raise ParseError(f"bad scalar literal ({exc})", start) from None
                return Scaled(val, One())
            self.i += 1
            t = self.expr()
            self.expect(")")
            return t
        if not c:
            raise ParseError("unexpected end of input", self.i)
        raise ParseError(f"unexpected {c!r}", self.i)


def _is_literal(t: Term) -> bool:
    return isinstance(t, Scaled) and isinstance(t.arg, One)


def _literal_value(t: Scaled) -> GQ:
    return t.coef


def parse_term(text: str, arity: int | None = None, extended: bool = False) -> Term:
    """Parse the term grammar; ``extended`` admits ``e`` and ``E(...)``.

    With ``arity`` set, generators beyond it are rejected.
    """
    return _Parser(text, extended, arity).parse()


def parse_extended(text: str, arity: int | None = None) -> Term:
    return parse_term(text, arity, extended=True)


# ---------------------------------------------------------------- flat bound

def flat_bound_universal(t: Term, k: int = 60) -> Fraction:
    """Sum of |coefficient| times letter weights; dominates the norm in every model.

    Generators and ``e`` weigh 1 (contractions), ``E(s)`` weighs the bound of ``s``.
    """
    return _poly_flat(t.flatten(), k)


def _poly_flat(p: Poly, k: int) -> Fraction:
    total = Fraction(0)
    for w, c in p.terms.items():
        weight = abs_upper(c, k)
        for letter in w:
            if letter[0] == 2:
                weight *= _poly_flat(Poly({ww: GQ(*cc) for ww, cc in letter[3]}), k)
        total += weight
    return total


def scale_into_ball(t: Term, eta: Fraction) -> Term:
    """``(1 - eta) * t``; strictly inside the unit ball whenever ``t`` is in it."""
    return Scaled(GQ(1 - Fraction(eta)), t)


# ---------------------------------------------------------------- enumeration

def _phi(n: int) -> int:
    out, m, p = n, n, 2
    while p * p <= m:
        if m % p == 0:
            while m % p == 0:
                m //= p
            out -= out // p
        p += 1
    if m > 1:
        out -= out // m
    return out


def rationals_of_height(t: int) -> list[Fraction]:
    """All rationals of height ``t`` in enumeration order."""
    if t == 0:
        return [Fraction(0)]
    out = []
    for b in range(1, t + 1):
        a = t + 1 - b
        f = Fraction(a, b)
        if f.denominator == b:
            out.extend([f, -f])
    return out


def _r(t: int) -> int:
    return 1 if t == 0 else 2 * _phi(t + 1)


def coef_count(h: int) -> int:
    """Number of nonzero Gaussian rationals of height ``h``."""
    if h <= 0:
        return 0
    return sum(_r(a) * _r(h - a) for a in range(h + 1))


def coef_unrank(h: int, pos: int) -> GQ:
    for hr in range(h, -1, -1):
        hi = h - hr
        block = _r(hr) * _r(hi)
        if pos < block:
            ri, ii = divmod(pos, _r(hi))
            return GQ(rationals_of_height(hr)[ri], rationals_of_height(hi)[ii])
        pos -= block
    raise IndexError("coefficient position out of range")


def coef_rank(q: GQ) -> tuple[int, int]:
    hr, hi = gq_height(GQ(q.re)), gq_height(GQ(0, q.im))
    h = hr + hi
    pos = 0
    for a in range(h, hr, -1):
        pos += _r(a) * _r(h - a)
    pos += rationals_of_height(hr).index(q.re) * _r(hi) + rationals_of_height(hi).index(q.im)
    return h, pos


def _mul(a: list[int], b: list[int], S: int) -> list[int]:
    out = [0] * (S + 1)
    for i, x in enumerate(a):
        if x:
            for j in range(0, S + 1 - i):
                if b[j]:
                    out[i + j] += x * b[j]
    return out


def _binom(n: int, k: int) -> int:
    if k < 0 or n < k:
        return 0
    out = 1
    for i in range(k):
        out = out * (n - i) // (i + 1)
    return out


class Enumerator:
    """Ranking and unranking of canonical rational points of a fixed arity.

    Size of a monomial ``c * w`` is ``1 + len(w) + height(c)`` and the size of
    a term is the sum over its monomials (the zero term has size 0).  Terms are
    ordered by size, then lexicographically by their sorted monomial lists,
    where words compare by (length, letters) with ``g1 < g1' < g2 < ...`` and
    coefficients by (height, position within that height).
    """

    def __init__(self, arity: int, extended: bool = False, min_degree: int = 0):
        self.arity = arity
        self.letters: list[tuple] = []
        for i in range(1, arity + 1):
            self.letters += [(0, i, 0, ()), (0, i, 1, ())]
        if extended:
            self.letters.append(E_LETTER)
        self.A = len(self.letters)
        self.e_index = self.A - 1 if extended else None
        self.min_degree = min_degree
        self._S = -1
        self._size_totals: list[int] = []

    # words (in extended mode no two ``e`` letters are adjacent, since ``e e = e``)
    def _tails(self, rem: int, after_e: bool) -> int:
        """Number of admissible continuations of length ``rem``."""
        key = (rem, after_e)
        memo = self.__dict__.setdefault("_tail_memo", {})
        if key not in memo:
            if rem == 0:
                out = 1
            elif self.e_index is None:
                out = self.A ** rem
            else:
                out = (self.A - 1) * self._tails(rem - 1, False)
                if not after_e:
                    out += self._tails(rem - 1, True)
            memo[key] = out
        return memo[key]

    def W(self, length: int) -> int:
        if length < self.min_degree or (self.A == 0 and length > 0):
            return 0
        return self._tails(length, False)

    def word_rank(self, w: tuple) -> int:
        r = 0
        after_e = False
        for pos, a in enumerate(w):
            rem = len(w) - pos - 1
            idx = self.letters.index(a)
            is_e = idx == self.e_index
            if is_e and after_e:
                raise ValueError("word has adjacent e letters")
            for b in range(idx):
                r += self._tails(rem, b == self.e_index)
            after_e = is_e
        return r

    def word_unrank(self, length: int, r: int) -> tuple:
        out = []
        after_e = False
        for pos in range(length):
            rem = length - pos - 1
            for b in range(self.A):
                is_e = b == self.e_index
                if is_e and after_e:
                    continue
                c = self._tails(rem, is_e)
                if r < c:
                    out.append(self.letters[b])
                    after_e = is_e
                    break
                r -= c
        return tuple(out)

    # series
    def _prepare(self, S: int):
        if S <= self._S:
            return
        S = max(S, 2 * self._S, 8)
        self._S = S
        self._P = [0] + [coef_count(h) for h in range(1, S + 1)]
        self._y = {}
        L = S - 2
        for ln in range(self.min_degree, L + 1):
            y = [0] * (S + 1)
            for d in range(S + 1):
                src = d - 1 - ln
                if src >= 1:
                    y[d] = self._P[src]
            self._y[ln] = y
        self._ypow = {}
        # T_gt[l] = prod over l' > l of (1 + y_l')^W(l')
        self._Tgt = {}
        acc = [1] + [0] * S
        for ln in range(L, self.min_degree - 2, -1):
            self._Tgt[ln] = acc
            if ln >= self.min_degree:
                acc = _mul(acc, self._binom_series(ln, lambda i, n=self.W(ln): _binom(n, i)), S)
        self._size_totals = self._Tgt[self.min_degree - 1]

    def _powers(self, ln: int) -> list[list[int]]:
        if ln not in self._ypow:
            S = self._S
            pw = [[1] + [0] * S]
            step = 2 + ln
            while len(pw) * step <= S:
                pw.append(_mul(pw[-1], self._y[ln], S))
            self._ypow[ln] = pw
        return self._ypow[ln]

    def _binom_series(self, ln: int, coeff) -> list[int]:
        S = self._S
        out = [0] * (S + 1)
        for i, p in enumerate(self._powers(ln)):
            c = coeff(i)
            if c:
                for d in range(S + 1):
                    if p[d]:
                        out[d] += c * p[d]
        return out

    def _max_len(self, S: int) -> int:
        return S - 2

    def count_of_size(self, S: int) -> int:
        self._prepare(S)
        return self._size_totals[S]

    def _count_first_range(self, S: int, ln: int, lo: int, hi: int) -> int:
        """Terms of size ``S`` whose first word has length ``ln`` and rank in [lo, hi)."""
        if lo >= hi or ln > S - 2:
            return 0
        W = self.W(ln)
        a, b = W - hi, W - 1 - lo
        # sum_{m=a}^{b} (1+y)^m = sum_i y^i (C(b+1, i+1) - C(a, i+1))
        s = self._binom_series(ln, lambda i: _binom(b + 1, i + 1) - _binom(a, i + 1))
        s = _mul(s, self._y[ln], self._S)
        s = _mul(s, self._Tgt[ln], self._S)
        return s[S]

    def _rest(self, ln: int, j: int) -> list[int]:
        n = self.W(ln) - 1 - j
        s = self._binom_series(ln, lambda i: _binom(n, i))
        return _mul(s, self._Tgt[ln], self._S)

    def _rank_in_size(self, mons: list[tuple[tuple, GQ]], S: int) -> int:
        r = 0
        prev = None
        for w, q in mons:
            ln, j = len(w), self.word_rank(w)
            start = prev[0] if prev else self.min_degree
            for l2 in range(start, ln):
                lo = prev[1] + 1 if prev and l2 == prev[0] else 0
                r += self._count_first_range(S, l2, lo, self.W(l2))
            lo = prev[1] + 1 if prev and ln == prev[0] else 0
            r += self._count_first_range(S, ln, lo, j)
            rest = self._rest(ln, j)
            h, pos = coef_rank(q)
            for h2 in range(1, h):
                d = S - 1 - ln - h2
                if d >= 0:
                    r += coef_count(h2) * rest[d]
            d = S - 1 - ln - h
            r += pos * rest[d]
            S = d
            prev = (ln, j)
        return r

    def rank(self, t: Term) -> int:
        p = t.flatten()
        mons = p.monomials()
        for w, _ in mons:
            for a in w:
                if a not in self.letters:
                    raise ValueError("term uses letters outside this enumeration")
            if len(w) < self.min_degree:
                raise ValueError("term has a monomial below the minimum degree")
        S = sum(1 + len(w) + gq_height(c) for w, c in mons)
        self._prepare(S)
        base = sum(self._size_totals[s] for s in range(S))
        return base + self._rank_in_size(mons, S)

    def unrank(self, n: int) -> Term:
        if n < 0:
            raise IndexError("negative index")
        S = 0
        while True:
            self._prepare(S)
            c = self._size_totals[S]
            if n < c:
                break
            n -= c
            S += 1
        mons = []
        prev = None
        while S > 0:
            start = prev[0] if prev else self.min_degree
            ln = start
            while True:
                lo = prev[1] + 1 if prev and ln == prev[0] else 0
                c = self._count_first_range(S, ln, lo, self.W(ln))
                if n < c:
                    break
                n -= c
                ln += 1
                if ln > S - 2:
                    raise RuntimeError("enumeration invariant violated")
            # least j in [lo, W) with count(lo, j+1) > n
            a, b = lo, self.W(ln) - 1
            while a < b:
                mid = (a + b) // 2
                if self._count_first_range(S, ln, lo, mid + 1) > n:
                    b = mid
                else:
                    a = mid + 1
            j = a
            n -= self._count_first_range(S, ln, lo, j)
            rest = self._rest(ln, j)
            h = 1
            while True:
                d = S - 1 - ln - h
                if d < 0:
                    raise RuntimeError("enumeration invariant violated")
                block = coef_count(h) * rest[d]
                if n < block:
                    pos, n = divmod(n, rest[d])
                    q = coef_unrank(h, pos)
                    break
                n -= block
                h += 1
            mons.append((self.word_unrank(ln, j), q))
            S = d
            prev = (ln, j)
        return poly_to_term(Poly(dict(mons)))

    def __iter__(self) -> Iterator[Term]:
        n = 0
        while True:
            yield self.unrank(n)
            n += 1


def enumerate_rational_points(arity: int, start: int = 0, extended: bool = False) -> Iterator[tuple[int, Term]]:
    """Yield ``(index, term)`` for the canonical enumeration of rational points."""
    en = Enumerator(arity, extended=extended)
    n = start
    while True:
        yield n, en.unrank(n)
        n += 1


# ---------------------------------------------------------------- random terms

def random_term(rng, arity: int, depth: int = 3, extended: bool = False, expect: bool = False) -> Term:
    """A random term tree (used by tests and the acceptance harness)."""
    if depth <= 0 or rng.random() < 0.25:
        r = rng.random()
        if extended and r < 0.25:
            return Jones()
        if expect and r < 0.35:
            return Expect(random_term(rng, arity, depth - 1))
        if r < 0.4:
            return Gen(rng.randint(1, arity)).star()
        if r < 0.47:
            return One()
        return Gen(rng.randint(1, arity))
    r = rng.random()
    sub = lambda: random_term(rng, arity, depth - 1, extended, expect)  # noqa: E731
    if r < 0.35:
        return Prod((sub(), sub()))
    if r < 0.65:
        return Sum((sub(), sub()))
    if r < 0.8:
        return Adj(sub())
    c = GQ(Fraction(rng.randint(-3, 3), rng.randint(1, 4)), Fraction(rng.randint(-2, 2), rng.randint(1, 3)))
    return Scaled(c, sub())
