"""Exact coefficients: Gaussian rationals times integer powers of pi.

``GaussRat`` is a + b*i with a, b rational.  ``PiScalar`` is a finite sum
``sum_k c_k * pi**k`` with ``c_k`` Gaussian rationals and ``k`` any integer;
pi is treated as a free transcendental symbol.  Both are immutable.
"""
from __future__ import annotations

from fractions import Fraction
from numbers import Rational
from typing import Iterable, Mapping

import mpmath

# 40 digits of pi; float conversion only needs 17.
_PI = mpmath.mpf("3.141592653589793238462643383279502884197")
PI_FLOAT = float(_PI)

_ZERO = Fraction(0)


def _frac(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, (int, Rational)):
        return Fraction(x)
    if isinstance(x, str):
        return Fraction(x)
    raise TypeError(f"cannot convert {x!r} to an exact rational")


class GaussRat:
    """Gaussian rational ``re + im*i`` with exact ``Fraction`` parts."""

    __slots__ = ("re", "im")

    def __init__(self, re=0, im=0):
        object.__setattr__(self, "re", _frac(re))
        object.__setattr__(self, "im", _frac(im))

    def __setattr__(self, name, value):
        raise AttributeError("GaussRat is immutable")

    @classmethod
    def coerce(cls, x) -> "GaussRat":
        if isinstance(x, GaussRat):
            return x
        if isinstance(x, complex):
            raise TypeError("refusing to build an exact value from a float complex")
        return cls(x, 0)

    def __bool__(self):
        return bool(self.re) or bool(self.im)

    def __eq__(self, other):
        if isinstance(other, GaussRat):
            return self.re == other.re and self.im == other.im
        if isinstance(other, (int, Fraction)):
            return self.im == 0 and self.re == other
        return NotImplemented

    def __hash__(self):
        return hash((self.re, self.im))

    def __add__(self, other):
        other = GaussRat.coerce(other)
        return GaussRat(self.re + other.re, self.im + other.im)

    __radd__ = __add__

    def __neg__(self):
        return GaussRat(-self.re, -self.im)

    def __sub__(self, other):
        other = GaussRat.coerce(other)
        return GaussRat(self.re - other.re, self.im - other.im)

    def __rsub__(self, other):
        return GaussRat.coerce(other) - self

    def __mul__(self, other):
        other = GaussRat.coerce(other)
        a, b, c, d = self.re, self.im, other.re, other.im
        if not b and not d:
            return GaussRat(a * c, 0)
        return GaussRat(a * c - b * d, a * d + b * c)

    __rmul__ = __mul__

    def conjugate(self):
        return GaussRat(self.re, -self.im)

    def inverse(self) -> "GaussRat":
        n = self.re * self.re + self.im * self.im
        if n == 0:
            raise ZeroDivisionError("inverse of zero GaussRat")
        return GaussRat(self.re / n, -self.im / n)

    def __truediv__(self, other):
        return self * GaussRat.coerce(other).inverse()

    def __rtruediv__(self, other):
        return GaussRat.coerce(other) * self.inverse()

    def __complex__(self):
        return complex(float(self.re), float(self.im))

    def __repr__(self):
        if not self.im:
            return f"GaussRat({self.re})"
        return f"GaussRat({self.re}, {self.im})"

    def __str__(self):
        if not self.im:
            return str(self.re)
        if not self.re:
            return f"{self.im}*I" if self.im != 1 else "I"
        return f"({self.re}{'+' if self.im > 0 else '-'}{abs(self.im)}*I)"


I = GaussRat(0, 1)


class PiScalar:
    """Element of Q(i)[pi, 1/pi], stored as ``{pi_exponent: GaussRat}``."""

    __slots__ = ("terms", "_hash")

    def __init__(self, terms: Mapping[int, GaussRat] | None = None):
        clean = {}
        if terms:
            for k, c in terms.items():
                c = GaussRat.coerce(c)
                if c:
                    clean[int(k)] = c
        object.__setattr__(self, "terms", clean)
        object.__setattr__(self, "_hash", None)

    def __setattr__(self, name, value):
        raise AttributeError("PiScalar is immutable")

    @classmethod
    def _raw(cls, terms: dict) -> "PiScalar":
        # trusted constructor: terms already pruned and typed
        obj = object.__new__(cls)
        object.__setattr__(obj, "terms", terms)
        object.__setattr__(obj, "_hash", None)
        return obj

    @classmethod
    def coerce(cls, x) -> "PiScalar":
        if isinstance(x, PiScalar):
            return x
        c = GaussRat.coerce(x)
        return cls._raw({0: c} if c else {})

    @classmethod
    def pi(cls, power: int = 1, coeff=1) -> "PiScalar":
        return cls({power: GaussRat.coerce(coeff)})

    @property
    def is_zero(self) -> bool:
        return not self.terms

    def __bool__(self):
        return bool(self.terms)

    def __eq__(self, other):
        if isinstance(other, PiScalar):
            return self.terms == other.terms
        if isinstance(other, (int, Fraction, GaussRat)):
            return self == PiScalar.coerce(other)
        return NotImplemented

    def __hash__(self):
        h = self._hash
        if h is None:
            h = hash(frozenset(self.terms.items()))
            object.__setattr__(self, "_hash", h)
        return h

    def __add__(self, other):
        try:
            other = PiScalar.coerce(other)
        except TypeError:
            return NotImplemented
        if not other.terms:
            return self
        if not self.terms:
            return other
        out = dict(self.terms)
        for k, c in other.terms.items():
            s = out.get(k)
            if s is None:
                out[k] = c
            else:
                s = s + c
                if s:
                    out[k] = s
                else:
                    del out[k]
        return PiScalar._raw(out)

    __radd__ = __add__

    def __neg__(self):
        return PiScalar._raw({k: -c for k, c in self.terms.items()})

    def __sub__(self, other):
        try:
            other = PiScalar.coerce(other)
        except TypeError:
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other):
        return PiScalar.coerce(other) - self

    def __mul__(self, other):
        try:
            other = PiScalar.coerce(other)
        except TypeError:
            return NotImplemented
        if not self.terms or not other.terms:
            return PiScalar._raw({})
        out: dict[int, GaussRat] = {}
        for k1, c1 in self.terms.items():
            for k2, c2 in other.terms.items():
                k = k1 + k2
                p = c1 * c2
                s = out.get(k)
                out[k] = p if s is None else s + p
        return PiScalar._raw({k: c for k, c in out.items() if c})

    __rmul__ = __mul__

    def __pow__(self, n: int):
        if n < 0:
            raise ValueError("negative powers only for monomials; use inverse()")
        result = PiScalar.coerce(1)
        base = self
        while n:
            if n & 1:
                result = result * base
            base = base * base
            n >>= 1
        return result

    def inverse(self) -> "PiScalar":
        """Inverse of a single-term scalar ``c * pi**k``."""
        if len(self.terms) != 1:
            raise ValueError("only single-term PiScalars are invertible in this ring")
        (k, c), = self.terms.items()
        return PiScalar._raw({-k: c.inverse()})

    def __truediv__(self, other):
        return self * PiScalar.coerce(other).inverse()

    def shift_pi(self, n: int) -> "PiScalar":
        """Multiply by pi**n."""
        return PiScalar._raw({k + n: c for k, c in self.terms.items()})

    def evaluate(self, pi=PI_FLOAT) -> complex:
        return pis_eval(self, pi)

    def __complex__(self):
        return pis_eval(self)

    def to_records(self) -> list[dict]:
        return [
            {
                "pi_pow": k,
                "re_num": c.re.numerator,
                "re_den": c.re.denominator,
                "im_num": c.im.numerator,
                "im_den": c.im.denominator,
            }
            for k, c in sorted(self.terms.items())
        ]

    @classmethod
    def from_records(cls, records: Iterable[Mapping]) -> "PiScalar":
        acc = cls()
        for r in records:
            c = GaussRat(
                Fraction(int(r["re_num"]), int(r["re_den"])),
                Fraction(int(r["im_num"]), int(r["im_den"])),
            )
            acc = acc + cls({int(r["pi_pow"]): c})
        return acc

    def __repr__(self):
        return f"PiScalar({self})"

    def __str__(self):
        if not self.terms:
            return "0"
        parts = []
        for k, c in sorted(self.terms.items()):
            if k == 0:
                parts.append(str(c))
            elif k == 1:
                parts.append(f"{c}*pi")
            else:
                parts.append(f"{c}*pi^{k}")
        return " + ".join(parts)


ZERO = PiScalar()
ONE = PiScalar.coerce(1)


def pis_add(a: PiScalar, b: PiScalar) -> PiScalar:
    return PiScalar.coerce(a) + b


def pis_mul(a: PiScalar, b: PiScalar) -> PiScalar:
    return PiScalar.coerce(a) * b


def pis_eval(a: PiScalar, pi=PI_FLOAT) -> complex:
    """Numeric value with ``pi`` substituted.

    The default substitutes the double nearest to pi, so results carry the
    usual ~16 significant digits.  Pass any other number (e.g. a float ``x``
    for the pi -> x degeneration, or an ``mpmath.mpf``) to substitute it.
    """
    a = PiScalar.coerce(a)
    if isinstance(pi, mpmath.mpf) or isinstance(pi, mpmath.mpc):
        acc = mpmath.mpc(0)
        for k, c in a.terms.items():
            acc += mpmath.mpc(mpmath.mpf(c.re.numerator) / c.re.denominator,
                              mpmath.mpf(c.im.numerator) / c.im.denominator) * pi ** k
        return acc
    if pi is PI_FLOAT:
        acc = mpmath.mpc(0)
        for k, c in a.terms.items():
            acc += mpmath.mpc(mpmath.mpf(c.re.numerator) / c.re.denominator,
                              mpmath.mpf(c.im.numerator) / c.im.denominator) * _PI ** k
        return complex(acc)
    acc = 0j
    for k, c in a.terms.items():
        acc += complex(c) * pi ** k
    return acc
