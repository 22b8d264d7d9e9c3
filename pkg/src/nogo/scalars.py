"""Exact arithmetic in Q(sqrt2) + i Q(sqrt2).

Ray sets used for colorability proofs have coordinates like (1, -1, sqrt2);
deciding orthogonality of such rays needs exact zero tests, which floats
cannot give.  ``Surd`` is a real element a + b*sqrt2 and ``Exact`` a complex
element built from two of them.
"""

from __future__ import annotations

import math
from fractions import Fraction
from numbers import Rational

_SQRT2 = math.sqrt(2.0)


def _frac(x) -> Fraction:
    if isinstance(x, bool):
        raise TypeError("bool is not an exact scalar")
    if isinstance(x, (int, Fraction, Rational)):
        return Fraction(x)
    if isinstance(x, str):
        return Fraction(x.strip())
    raise TypeError(f"cannot convert {type(x).__name__} to an exact rational")


class Surd:
    """Real number a + b*sqrt2 with rational a, b."""

    __slots__ = ("a", "b")

    def __init__(self, a=0, b=0):
        self.a = _frac(a)
        self.b = _frac(b)

    @classmethod
    def coerce(cls, x) -> Surd:
        if isinstance(x, Surd):
            return x
        return cls(x)

    def __add__(self, other):
        if isinstance(other, Exact):
            return NotImplemented
        o = Surd.coerce(other)
        return Surd(self.a + o.a, self.b + o.b)

    __radd__ = __add__

    def __neg__(self):
        return Surd(-self.a, -self.b)

    def __sub__(self, other):
        if isinstance(other, Exact):
            return NotImplemented
        return self + (-Surd.coerce(other))

    def __rsub__(self, other):
        return Surd.coerce(other) - self

    def __mul__(self, other):
        if isinstance(other, Exact):
            return NotImplemented
        o = Surd.coerce(other)
        return Surd(self.a * o.a + 2 * self.b * o.b, self.a * o.b + self.b * o.a)

    __rmul__ = __mul__

    def conjugate_surd(self) -> Surd:
        """Galois conjugate a - b*sqrt2 (not complex conjugation)."""
        return Surd(self.a, -self.b)

    def norm(self) -> Fraction:
        return self.a * self.a - 2 * self.b * self.b

    def inverse(self) -> Surd:
        n = self.norm()
        if n == 0:
            # a^2 = 2 b^2 has no rational solution besides a = b = 0
            raise ZeroDivisionError("division by zero in Q(sqrt2)")
        return Surd(self.a / n, -self.b / n)

    def __truediv__(self, other):
        return self * Surd.coerce(other).inverse()

    def __rtruediv__(self, other):
        return Surd.coerce(other) * self.inverse()

    def is_zero(self) -> bool:
        return self.a == 0 and self.b == 0

    def sign(self) -> int:
        """Exact sign of a + b*sqrt2."""
        sa = (self.a > 0) - (self.a < 0)
        sb = (self.b > 0) - (self.b < 0)
        if sb == 0:
            return sa
        if sa == 0 or sa == sb:
            return sb if sa == 0 else sa
        # opposite signs: compare a^2 with 2 b^2
        diff = self.a * self.a - 2 * self.b * self.b
        if diff == 0:
            return 0
        return sa if diff > 0 else sb

    def __eq__(self, other):
        if isinstance(other, Exact):
            return other == self
        try:
            o = Surd.coerce(other)
        except TypeError:
            return NotImplemented
        return self.a == o.a and self.b == o.b

    def __hash__(self):
        if self.b == 0:
            return hash(self.a)
        return hash((self.a, self.b))

    def __lt__(self, other):
        return (self - Surd.coerce(other)).sign() < 0

    def __le__(self, other):
        return (self - Surd.coerce(other)).sign() <= 0

    def __float__(self):
        return float(self.a) + float(self.b) * _SQRT2

    def __repr__(self):
        if self.b == 0:
            return f"Surd({self.a})"
        return f"Surd({self.a}, {self.b})"

    def __str__(self):
        if self.b == 0:
            return str(self.a)
        if self.a == 0:
            return f"{self.b}*sqrt2"
        return f"({self.a}{'+' if self.b > 0 else '-'}{abs(self.b)}*sqrt2)"


class Exact:
    """Complex number re + i*im with re, im in Q(sqrt2)."""

    __slots__ = ("re", "im")

    def __init__(self, re=0, im=0):
        self.re = Surd.coerce(re)
        self.im = Surd.coerce(im)

    @classmethod
    def coerce(cls, x) -> Exact:
        if isinstance(x, Exact):
            return x
        return cls(x)

    @classmethod
    def from_quad(cls, quad) -> Exact:
        """Build from [a, b, c, d] meaning (a + b sqrt2) + i (c + d sqrt2)."""
        if len(quad) != 4:
            raise ValueError(f"exact scalar needs 4 components, got {len(quad)}")
        a, b, c, d = quad
        return cls(Surd(a, b), Surd(c, d))

    def to_quad(self) -> list:
        return [_json_frac(q) for q in (self.re.a, self.re.b, self.im.a, self.im.b)]

    def __add__(self, other):
        o = Exact.coerce(other)
        return Exact(self.re + o.re, self.im + o.im)

    __radd__ = __add__

    def __neg__(self):
        return Exact(-self.re, -self.im)

    def __sub__(self, other):
        return self + (-Exact.coerce(other))

    def __rsub__(self, other):
        return Exact.coerce(other) - self

    def __mul__(self, other):
        o = Exact.coerce(other)
        return Exact(self.re * o.re - self.im * o.im, self.re * o.im + self.im * o.re)

    __rmul__ = __mul__

    def conjugate(self) -> Exact:
        return Exact(self.re, -self.im)

    def abs2(self) -> Surd:
        return self.re * self.re + self.im * self.im

    def __truediv__(self, other):
        o = Exact.coerce(other)
        inv = o.abs2().inverse()
        num = self * o.conjugate()
        return Exact(num.re * inv, num.im * inv)

    def __rtruediv__(self, other):
        return Exact.coerce(other) / self

    def is_zero(self) -> bool:
        return self.re.is_zero() and self.im.is_zero()

    def __eq__(self, other):
        try:
            o = Exact.coerce(other)
        except TypeError:
            return NotImplemented
        return self.re == o.re and self.im == o.im

    def __hash__(self):
        if self.im.is_zero():
            return hash(self.re)
        return hash((self.re, self.im))

    def __complex__(self):
        return complex(float(self.re), float(self.im))

    def __float__(self):
        if not self.im.is_zero():
            raise TypeError("complex exact scalar has no float value")
        return float(self.re)

    def __repr__(self):
        if self.im.is_zero():
            return f"Exact({self.re})"
        return f"Exact({self.re}, {self.im})"

    def __str__(self):
        if self.im.is_zero():
            return str(self.re)
        return f"{self.re}+i*{self.im}"


SQRT2 = Exact(Surd(0, 1))
ZERO = Exact(0)
ONE = Exact(1)
I = Exact(0, 1)


def _json_frac(q: Fraction):
    return q.numerator if q.denominator == 1 else f"{q.numerator}/{q.denominator}"


def is_exact(x) -> bool:
    return isinstance(x, (Exact, Surd))
