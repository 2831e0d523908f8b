"""Gaussian rationals and dyadic rounding helpers."""

from __future__ import annotations

from fractions import Fraction
from math import isqrt
from numbers import Rational

import flint


def _frac(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, flint.fmpq):
        return Fraction(int(x.p), int(x.q))
    if isinstance(x, (int, Rational)):
        return Fraction(x)
    if isinstance(x, str):
        return Fraction(x)
    raise TypeError(f"not an exact rational: {x!r}")


class GQ:
    """An element of Q(i), stored as a pair of Fractions."""

    __slots__ = ("re", "im")

    def __init__(self, re=0, im=0):
        if isinstance(re, GQ):
            self.re, self.im = re.re, re.im
            return
        self.re = _frac(re)
        self.im = _frac(im)

    @classmethod
    def coerce(cls, x) -> "GQ":
        if isinstance(x, GQ):
            return x
        if isinstance(x, complex):
            raise TypeError("floating complex values are not exact")
        return cls(x)

    # arithmetic
    def __add__(self, o):
        o = GQ.coerce(o)
        return GQ(self.re + o.re, self.im + o.im)

    __radd__ = __add__

    def __sub__(self, o):
        o = GQ.coerce(o)
        return GQ(self.re - o.re, self.im - o.im)

    def __rsub__(self, o):
        return GQ.coerce(o) - self

    def __neg__(self):
        return GQ(-self.re, -self.im)

    def __mul__(self, o):
        o = GQ.coerce(o)
        return GQ(self.re * o.re - self.im * o.im, self.re * o.im + self.im * o.re)

    __rmul__ = __mul__

    def __truediv__(self, o):
        o = GQ.coerce(o)
        n = o.abs2()
        if n == 0:
            raise ZeroDivisionError("division by zero in Q(i)")
        return self * o.conj() * GQ(1 / n)

    def __rtruediv__(self, o):
        return GQ.coerce(o) / self

    def __pow__(self, n: int):
        out = GQ(1)
        base = self if n >= 0 else GQ(1) / self
        for _ in range(abs(n)):
            out = out * base
        return out

    def conj(self) -> "GQ":
        return GQ(self.re, -self.im)

    def abs2(self) -> Fraction:
        return self.re * self.re + self.im * self.im

    def is_real(self) -> bool:
        return self.im == 0

    def __bool__(self):
        return bool(self.re) or bool(self.im)

    def __eq__(self, o):
        try:
            o = GQ.coerce(o)
        except TypeError:
            return NotImplemented
        return self.re == o.re and self.im == o.im

    def __hash__(self):
        if self.im == 0:
            return hash(self.re)
        return hash((self.re, self.im))

    def key(self) -> tuple:
        return (self.re, self.im)

    def __complex__(self):
        return complex(float(self.re), float(self.im))

    def __repr__(self):
        return f"GQ({self.re}, {self.im})"

    def __str__(self):
        return format_scalar(self)


I = GQ(0, 1)
ONE = GQ(1)
ZERO = GQ(0)


def _fmt_frac(f: Fraction) -> str:
    return f"{f.numerator}/{f.denominator}"


def format_scalar(q: GQ) -> str:
    """Render as the literal ``(a/b)`` or ``(a/b+c/d i)``."""
    if q.im == 0:
        return f"({_fmt_frac(q.re)})"
    sign = "-" if q.im < 0 else "+"
    return f"({_fmt_frac(q.re)}{sign}{_fmt_frac(abs(q.im))} i)"


def height(f: Fraction) -> int:
    """Height of a rational: ``|a| + b - 1`` for ``a/b`` in lowest terms, 0 for zero."""
    if f == 0:
        return 0
    return abs(f.numerator) + f.denominator - 1


def gq_height(q: GQ) -> int:
    return height(q.re) + height(q.im)


# dyadic rounding

def floor_dyadic(x: Fraction, k: int) -> Fraction:
    return Fraction((x.numerator << k) // x.denominator, 1 << k) if k >= 0 else Fraction(
        (x.numerator // (x.denominator << -k)) << -k
    )


def sqrt_floor_dyadic(x: Fraction, k: int) -> Fraction:
    """Largest multiple of ``2^-k`` not exceeding ``sqrt(x)`` (``x >= 0``)."""
    if x < 0:
        raise ValueError("negative argument to sqrt")
    n = (x.numerator << (2 * k)) // x.denominator
    return Fraction(isqrt(n), 1 << k)


def sqrt_dyadic(x: Fraction, k: int) -> Fraction:
    """A dyadic ``q`` with ``|sqrt(x) - q| < 2^-k``; exact when ``x`` is a dyadic square."""
    return sqrt_floor_dyadic(x, k + 1)


def sqrt_upper(x: Fraction, k: int = 60) -> Fraction:
    """A rational upper bound for ``sqrt(x)`` within ``2^-k``; exact on rational squares."""
    x = Fraction(x)
    if x < 0:
        raise ValueError("negative argument to sqrt")
    rn, rd = isqrt(x.numerator), isqrt(x.denominator)
    if rn * rn == x.numerator and rd * rd == x.denominator:
        return Fraction(rn, rd)
    lo = sqrt_floor_dyadic(x, k)
    return lo + Fraction(1, 1 << k)


def sqrt_approx(x: Fraction, bits: int) -> Fraction:
    """Nearest-ish dyadic approximation of ``sqrt(x)`` with error below ``2^-bits``."""
    return sqrt_dyadic(Fraction(x), bits)


def abs_upper(q: GQ, k: int = 60) -> Fraction:
    """Rational upper bound for ``|q|``; exact for real or purely imaginary ``q``."""
    if q.im == 0:
        return abs(q.re)
    if q.re == 0:
        return abs(q.im)
    return sqrt_upper(q.abs2(), k)


def bits_for(x: Fraction) -> int:
    """Smallest ``m >= 0`` with ``2^-m < x``."""
    x = Fraction(x)
    if x <= 0:
        raise ValueError("expected a positive bound")
    m = max(0, x.denominator.bit_length() - x.numerator.bit_length() - 1)
    while Fraction(1, 1 << m) >= x:
        m += 1
    return m


def parse_scalar(text: str) -> GQ:
    """Parse ``a/b``, ``a/b+c/d i`` or ``a/b-c/d i`` (no surrounding parentheses)."""
    s = text.replace(" ", "")
    if s.endswith("i"):
        body = s[:-1]
        cut = max(body.rfind("+"), body.rfind("-"))
        if cut <= 0:
            re_part, im_part = "0", body or "1"
        else:
            re_part, im_part = body[:cut], body[cut:]
        if im_part in ("+", "-", ""):
            im_part += "1"
        return GQ(Fraction(re_part), Fraction(im_part))
    return GQ(Fraction(s))
