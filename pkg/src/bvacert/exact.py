"""Exact scalars: rationals (``fractions.Fraction``) and Gaussian rationals.

Every algebraic routine in the package works over one of these two fields.
Floating point never enters here except through :func:`rationalize`, which
turns a float into a nearby rational by continued fractions.
"""

from __future__ import annotations

import re
from fractions import Fraction
from numbers import Rational
from typing import Iterable, Sequence

_RATIONAL_RE = re.compile(r"^\s*([+-]?\d+)\s*(?:/\s*(\d+)\s*)?$")


class RationalParseError(ValueError):
    """A literal is not of the form ``p`` or ``p/q`` with ``q > 0``."""


def parse_rational(text) -> Fraction:
    """Parse ``"p"`` or ``"p/q"`` (ints are accepted as-is).

    Floats and decimal strings are refused on purpose: operator files must be
    exact.
    """
    if isinstance(text, bool):
        raise RationalParseError(f"not a rational literal: {text!r}")
    if isinstance(text, (int, Fraction)):
        return Fraction(text)
    if not isinstance(text, str):
        raise RationalParseError(f"not a rational literal: {text!r}")
    m = _RATIONAL_RE.match(text)
    if m is None:
        raise RationalParseError(f"not a rational literal: {text!r}")
    num = int(m.group(1))
    den = int(m.group(2)) if m.group(2) is not None else 1
    if den == 0:
        raise RationalParseError(f"zero denominator: {text!r}")
    return Fraction(num, den)


def format_rational(x: Fraction) -> str:
    x = Fraction(x)
    if x.denominator == 1:
        return str(x.numerator)
    return f"{x.numerator}/{x.denominator}"


class GaussQ:
    """Element ``re + i*im`` of Q(i), with exact rational parts."""

    __slots__ = ("re", "im")

    def __init__(self, re=0, im=0):
        if isinstance(re, GaussQ):
            if im:
                raise TypeError("cannot combine a GaussQ real part with an imaginary part")
            self.re, self.im = re.re, re.im
            return
        self.re = Fraction(re)
        self.im = Fraction(im)

    @staticmethod
    def coerce(x) -> "GaussQ":
        if isinstance(x, GaussQ):
            return x
        if isinstance(x, complex):
            raise TypeError("floating complex numbers are not exact")
        return GaussQ(x, 0)

    def conjugate(self) -> "GaussQ":
        return GaussQ(self.re, -self.im)

    def norm2(self) -> Fraction:
        return self.re * self.re + self.im * self.im

    def is_real(self) -> bool:
        return self.im == 0

    def __add__(self, other):
        if not isinstance(other, (GaussQ, int, Rational)):
            return NotImplemented
        o = GaussQ.coerce(other)
        return GaussQ(self.re + o.re, self.im + o.im)

    __radd__ = __add__

    def __neg__(self):
        return GaussQ(-self.re, -self.im)

    def __sub__(self, other):
        if not isinstance(other, (GaussQ, int, Rational)):
            return NotImplemented
        o = GaussQ.coerce(other)
        return GaussQ(self.re - o.re, self.im - o.im)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if not isinstance(other, (GaussQ, int, Rational)):
            return NotImplemented
        o = GaussQ.coerce(other)
        return GaussQ(self.re * o.re - self.im * o.im, self.re * o.im + self.im * o.re)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if not isinstance(other, (GaussQ, int, Rational)):
            return NotImplemented
        o = GaussQ.coerce(other)
        d = o.norm2()
        if d == 0:
            raise ZeroDivisionError("GaussQ division by zero")
        num = self * o.conjugate()
        return GaussQ(num.re / d, num.im / d)

    def __rtruediv__(self, other):
        return GaussQ.coerce(other) / self

    def __eq__(self, other):
        if isinstance(other, GaussQ):
            return self.re == other.re and self.im == other.im
        if isinstance(other, (int, Rational)):
            return self.im == 0 and self.re == other
        return NotImplemented

    def __hash__(self):
        if self.im == 0:
            return hash(self.re)
        return hash((self.re, self.im))

    def __bool__(self):
        return bool(self.re) or bool(self.im)

    def __complex__(self):
        return complex(float(self.re), float(self.im))

    def __repr__(self):
        return f"GaussQ({format_gauss(self)})"


def format_gauss(z) -> str:
    """``"a"``, ``"b*i"``, ``"i"`` or ``"a+b*i"`` with rational a, b."""
    z = GaussQ.coerce(z)
    if z.im == 0:
        return format_rational(z.re)
    im = "i" if abs(z.im) == 1 else format_rational(abs(z.im)) + "*i"
    sign = "-" if z.im < 0 else "+"
    if z.re == 0:
        return f"{'-' if z.im < 0 else ''}{im}"
    return f"{format_rational(z.re)}{sign}{im}"


def parse_gauss(text) -> GaussQ:
    """Parse ``"a"``, ``"b*i"``, ``"i"``, ``"-i"``, ``"a+b*i"``, ``"a-i"``."""
    if isinstance(text, GaussQ):
        return text
    if isinstance(text, (int, Fraction)) and not isinstance(text, bool):
        return GaussQ(text)
    if not isinstance(text, str) or not text.strip():
        raise RationalParseError(f"not a Gaussian rational literal: {text!r}")
    s = text.replace(" ", "")
    if not s.endswith("i"):
        return GaussQ(parse_rational(s))
    body = s[:-1]
    if body.endswith("*"):
        body = body[:-1]
    # split at the last sign that is not the leading character
    cut = max(body.rfind("+"), body.rfind("-"))
    if cut > 0:
        re_txt, im_txt = body[:cut], body[cut:]
    else:
        re_txt, im_txt = "", body
    if im_txt in ("", "+", "-"):
        im_txt += "1"
    if s.endswith("*i") and im_txt.lstrip("+-") == "1" and not body.lstrip("+-"):
        raise RationalParseError(f"not a Gaussian rational literal: {text!r}")
    re_part = parse_rational(re_txt) if re_txt else Fraction(0)
    return GaussQ(re_part, parse_rational(im_txt.lstrip("+")))


def to_fractions(values: Iterable) -> tuple[Fraction, ...]:
    return tuple(parse_rational(v) if isinstance(v, str) else Fraction(v) for v in values)


def rationalize(x: float, max_den: int = 10**6) -> Fraction:
    """Best rational approximation with denominator at most ``max_den``."""
    return Fraction(x).limit_denominator(max_den)


def rationalize_ladder(x: float, max_den: int = 10**6) -> list[Fraction]:
    """Distinct continued-fraction approximations of ``x`` with growing denominators."""
    out: list[Fraction] = []
    cap = 1
    while True:
        q = Fraction(x).limit_denominator(min(cap, max_den))
        if not out or q != out[-1]:
            out.append(q)
        if cap >= max_den:
            return out
        cap *= 2


def primitive_integer_vector(vec: Sequence[Fraction]) -> tuple[int, ...]:
    """Scale a rational vector to coprime integers (sign kept)."""
    from math import gcd

    den = 1
    for v in vec:
        den = den * Fraction(v).denominator // gcd(den, Fraction(v).denominator)
    ints = [int(Fraction(v) * den) for v in vec]
    g = 0
    for k in ints:
        g = gcd(g, abs(k))
    if g == 0:
        return tuple(ints)
    return tuple(k // g for k in ints)
