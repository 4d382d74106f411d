"""Truncated Laurent series in the spectral parameter z.

A ``ZSeries`` stores the coefficients of z**min_deg ... z**(min_deg+len-1) and
the highest order ``trunc`` through which it is known (``None`` means the series
is an exact Laurent polynomial).  Coefficients may live in any ring whose
elements support ``+``, ``-`` and ``*`` with each other: ``GlPoly``,
``PiScalar`` or plain complex numbers.
"""
from __future__ import annotations

from fractions import Fraction
from math import factorial
from typing import Callable, Sequence

from .scalar import GaussRat, PiScalar


class TruncationError(ValueError):
    """A requested coefficient lies beyond the known order of a series."""


def _is_zero(c) -> bool:
    if isinstance(c, (int, float, complex)):
        return c == 0
    return not c


class ZSeries:
    __slots__ = ("min_deg", "coeffs", "trunc", "zero")

    def __init__(self, min_deg: int, coeffs: Sequence, trunc: int | None, zero=0):
        coeffs = list(coeffs)
        # trim zeros at both ends; trunc is kept as given
        while coeffs and _is_zero(coeffs[0]):
            coeffs.pop(0)
            min_deg += 1
        while coeffs and _is_zero(coeffs[-1]):
            coeffs.pop()
        if trunc is not None:
            keep = trunc - min_deg + 1
            if keep < len(coeffs):
                coeffs = coeffs[:max(keep, 0)]
                while coeffs and _is_zero(coeffs[-1]):
                    coeffs.pop()
        if not coeffs:
            min_deg = 0 if trunc is None else min(min_deg, trunc + 1)
        self.min_deg = min_deg
        self.coeffs = tuple(coeffs)
        self.trunc = trunc
        self.zero = zero

    # --- constructors ---------------------------------------------------

    @classmethod
    def exact(cls, coeffs: dict[int, object], zero=0) -> "ZSeries":
        """Laurent polynomial from ``{power: coefficient}``."""
        if not coeffs:
            return cls(0, [], None, zero)
        lo, hi = min(coeffs), max(coeffs)
        return cls(lo, [coeffs.get(k, zero) for k in range(lo, hi + 1)], None, zero)

    @classmethod
    def constant(cls, c, zero=0) -> "ZSeries":
        return cls(0, [c], None, zero)

    @classmethod
    def monomial(cls, c, power: int, zero=0) -> "ZSeries":
        return cls(power, [c], None, zero)

    # --- queries --------------------------------------------------------

    @property
    def is_exact(self) -> bool:
        return self.trunc is None

    @property
    def max_deg(self) -> int:
        return self.min_deg + len(self.coeffs) - 1

    @property
    def valuation(self) -> int | None:
        return self.min_deg if self.coeffs else None

    def coeff(self, j: int):
        if self.trunc is not None and j > self.trunc:
            raise TruncationError(f"coefficient z^{j} requested but series known only through z^{self.trunc}")
        k = j - self.min_deg
        if 0 <= k < len(self.coeffs):
            return self.coeffs[k]
        return self.zero

    def items(self):
        for k, c in enumerate(self.coeffs):
            if not _is_zero(c):
                yield self.min_deg + k, c

    def truncate(self, order: int) -> "ZSeries":
        t = order if self.trunc is None else min(order, self.trunc)
        return ZSeries(self.min_deg, self.coeffs, t, self.zero)

    def map(self, fn: Callable, zero=None) -> "ZSeries":
        z = self.zero if zero is None else zero
        return ZSeries(self.min_deg, [fn(c) for c in self.coeffs], self.trunc, z)

    # --- arithmetic -----------------------------------------------------

    def _lift(self, other) -> "ZSeries":
        if isinstance(other, ZSeries):
            return other
        return ZSeries.constant(other, self.zero)

    def __add__(self, other):
        other = self._lift(other)
        if self.trunc is None:
            trunc = other.trunc
        elif other.trunc is None:
            trunc = self.trunc
        else:
            trunc = min(self.trunc, other.trunc)
        if not self.coeffs:
            return ZSeries(other.min_deg, other.coeffs, trunc, other.zero)
        if not other.coeffs:
            return ZSeries(self.min_deg, self.coeffs, trunc, self.zero)
        lo = min(self.min_deg, other.min_deg)
        hi = max(self.max_deg, other.max_deg)
        if trunc is not None:
            hi = min(hi, trunc)
        out = []
        for j in range(lo, hi + 1):
            a = self._get(j)
            b = other._get(j)
            if a is None:
                out.append(b if b is not None else self.zero)
            elif b is None:
                out.append(a)
            else:
                out.append(a + b)
        return ZSeries(lo, out, trunc, self.zero)

    __radd__ = __add__

    def _get(self, j):
        k = j - self.min_deg
        if 0 <= k < len(self.coeffs):
            return self.coeffs[k]
        return None

    def __neg__(self):
        return ZSeries(self.min_deg, [-c for c in self.coeffs], self.trunc, self.zero)

    def __sub__(self, other):
        return self + (-self._lift(other))

    def __rsub__(self, other):
        return self._lift(other) - self

    def __mul__(self, other):
        if not isinstance(other, ZSeries):
            return self.map(lambda c: c * other)
        return series_mul(self, other)

    def __rmul__(self, other):
        return self.map(lambda c: other * c)

    def shift(self, n: int) -> "ZSeries":
        """Multiply by z**n."""
        t = None if self.trunc is None else self.trunc + n
        return ZSeries(self.min_deg + n, self.coeffs, t, self.zero)

    def evaluate(self, z, coeff_eval: Callable | None = None) -> complex:
        f = coeff_eval or complex
        total = 0j
        for j, c in self.items():
            total += f(c) * z ** j
        return total

    def __repr__(self):
        body = " + ".join(f"({c})*z^{j}" for j, c in self.items()) or "0"
        tail = "" if self.trunc is None else f" + O(z^{self.trunc + 1})"
        return f"ZSeries[{body}{tail}]"


def series_mul(a: ZSeries, b: ZSeries, upto: int | None = None) -> ZSeries:
    """Product with correct truncation; ``upto`` drops orders above it."""
    zero = a.zero if a.coeffs else b.zero
    if not a.coeffs or not b.coeffs:
        ta = None if a.trunc is None else a.trunc + (b.min_deg if b.coeffs else b.trunc + 1)
        tb = None if b.trunc is None else b.trunc + (a.min_deg if a.coeffs else a.trunc + 1)
        ts = [t for t in (ta, tb, upto) if t is not None]
        return ZSeries(0, [], min(ts) if ts else None, zero)
    bounds = []
    if a.trunc is not None:
        bounds.append(a.trunc + b.min_deg)
    if b.trunc is not None:
        bounds.append(b.trunc + a.min_deg)
    if upto is not None:
        bounds.append(upto)
    trunc = min(bounds) if bounds else None
    lo = a.min_deg + b.min_deg
    hi = a.max_deg + b.max_deg
    if trunc is not None:
        hi = min(hi, trunc)
    if hi < lo:
        return ZSeries(lo, [], trunc, zero)
    out = [None] * (hi - lo + 1)
    for i, ca in enumerate(a.coeffs):
        if _is_zero(ca):
            continue
        for j, cb in enumerate(b.coeffs):
            k = i + j
            if k > hi - lo:
                break
            if _is_zero(cb):
                continue
            p = ca * cb
            out[k] = p if out[k] is None else out[k] + p
    return ZSeries(lo, [zero if c is None else c for c in out], trunc, zero)


def coeff(S: ZSeries, j: int):
    return S.coeff(j)


# --- elementary expansions (exact, PiScalar coefficients) -----------------

def _pis(x) -> PiScalar:
    return PiScalar.coerce(x)


def series_exp_linear(c, order: int) -> ZSeries:
    """exp(c z) = sum_k c^k z^k / k!  through z**order."""
    if order < 0:
        raise ValueError("order must be >= 0")
    c = _pis(c)
    out = []
    p = _pis(1)
    for k in range(order + 1):
        out.append(p * GaussRat(Fraction(1, factorial(k))))
        p = p * c
    return ZSeries(0, out, order, PiScalar())


def series_sin(order: int) -> ZSeries:
    """sin(pi z) through z**order."""
    out = {}
    for k in range(1, order + 1, 2):
        sign = -1 if (k // 2) % 2 else 1
        out[k] = PiScalar.pi(k, Fraction(sign, factorial(k)))
    return ZSeries(1, [out.get(k, PiScalar()) for k in range(1, max(order, 1) + 1)], order, PiScalar())


def series_cos(order: int) -> ZSeries:
    """cos(pi z) through z**order."""
    out = []
    for k in range(order + 1):
        if k % 2:
            out.append(PiScalar())
        else:
            sign = -1 if (k // 2) % 2 else 1
            out.append(PiScalar.pi(k, Fraction(sign, factorial(k))))
    return ZSeries(0, out, order, PiScalar())


def series_inverse(S: ZSeries, order: int) -> ZSeries:
    """1/S through z**order; S must have an invertible leading coefficient."""
    if not S.coeffs:
        raise ZeroDivisionError("inverse of a zero series")
    v = S.min_deg
    lead = S.coeffs[0]
    inv_lead = lead.inverse()
    # 1/S = z^-v * 1/(lead * (1 + h)),  h has valuation >= 1
    n = order + v  # orders of the unit part needed
    if n < 0:
        return ZSeries(-v, [], order, S.zero)
    if S.trunc is not None and S.trunc - v < n:
        raise TruncationError("input series not known to high enough order")
    unit = [S.coeff(v + k) * inv_lead for k in range(n + 1)]
    inv = [PiScalar.coerce(1)] + [None] * n
    for k in range(1, n + 1):
        acc = PiScalar()
        for j in range(1, k + 1):
            acc = acc + unit[j] * inv[k - j]
        inv[k] = -acc
    return ZSeries(-v, [c * inv_lead for c in inv], order, S.zero)


def series_inv_sin(order: int) -> ZSeries:
    """1/sin(pi z) = 1/(pi z) + (pi/6) z + (7 pi^3/360) z^3 + ...  through z**order."""
    if order < -1:
        raise ValueError("order must be >= -1")
    return series_inverse(series_sin(order + 2), order)


def series_cot(order: int) -> ZSeries:
    """cot(pi z) = 1/(pi z) - (pi/3) z - (pi^3/45) z^3 - ...  through z**order."""
    if order < -1:
        raise ValueError("order must be >= -1")
    return series_mul(series_cos(order + 1), series_inv_sin(order), upto=order)


# --- matrices of series ----------------------------------------------------

def _mat_valuation(M) -> int:
    vals = [e.min_deg for row in M for e in row if e.coeffs]
    return min(vals) if vals else 0


def mat_mul(A, B, upto: int | None = None):
    n = len(A)
    m = len(B[0])
    inner = len(B)
    out = []
    for i in range(n):
        row = []
        for j in range(m):
            acc = None
            for l in range(inner):
                p = series_mul(A[i][l], B[l][j], upto)
                acc = p if acc is None else acc + p
            row.append(acc)
        out.append(row)
    return out


def _mat_power(M, k: int, vmin: int, final: int | None):
    # left-to-right product; each partial product only needs orders that can
    # still reach ``final`` after the remaining factors (valuation >= vmin)
    P = M
    for j in range(2, k + 1):
        upto = None if final is None else final - (k - j) * vmin
        P = mat_mul(P, M, upto)
    return P


def mat_series_trace_power(M, k: int, upto: int | None = None) -> ZSeries:
    """tr(M^k) for a square matrix of ZSeries.

    With ``upto`` the result is only computed through z**upto, which keeps
    symbolic products small; a ``TruncationError`` is raised if the inputs do
    not determine the result that far.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    n = len(M)
    if any(len(row) != n for row in M):
        raise ValueError("matrix must be square")
    vmin = _mat_valuation(M)
    h = k // 2
    if h == 0:
        P = None
        Q = M
    else:
        P = _mat_power(M, h, vmin, None if upto is None else upto - (k - h) * vmin)
        Q = _mat_power(M, k - h, vmin, None if upto is None else upto - h * vmin)
    acc = None
    for i in range(n):
        if P is None:
            term = Q[i][i]
            if upto is not None:
                term = term.truncate(upto)
        else:
            term = None
            for l in range(n):
                p = series_mul(P[i][l], Q[l][i], upto)
                term = p if term is None else term + p
        acc = term if acc is None else acc + term
    if upto is not None and acc.trunc is not None and acc.trunc < upto:
        raise TruncationError(
            f"tr(M^{k}) known only through z^{acc.trunc}, z^{upto} requested")
    return acc


def series_arcsin_ratio(order: int) -> ZSeries:
    """arcsin(pi s)/(pi s) in powers of s, through s**order.

    This is z/s when s = sin(pi z)/pi.
    """
    out = []
    for k in range(order + 1):
        if k % 2:
            out.append(PiScalar())
        else:
            n = k // 2
            a = Fraction(factorial(2 * n), 4 ** n * factorial(n) ** 2 * (2 * n + 1))
            out.append(PiScalar.pi(2 * n, a))
    return ZSeries(0, out, order, PiScalar())


def reexpand_in_sin(S: ZSeries, upto: int) -> ZSeries:
    """Re-expand a Laurent series in z as a Laurent series in s = sin(pi z)/pi.

    Uses z**j = s**j * (z/s)**j; the coefficient of s**J only involves the
    z-coefficients with j <= J, so the result is known through ``upto``
    whenever the input is.
    """
    if S.trunc is not None and S.trunc < upto:
        raise TruncationError(f"series known only through z^{S.trunc}, z^{upto} requested")
    lo = S.min_deg
    span = max(upto - lo, 0)
    ratio = series_arcsin_ratio(span)
    inv = series_inverse(ratio, span)
    out: dict[int, object] = {}
    cache: dict = {}
    for j, c in S.items():
        if j > upto:
            continue
        pw = _power_cache(cache, ratio if j > 0 else inv, j, span)
        for d, a in pw.items():
            if j + d > upto:
                break
            term = c.scalar_mul(a) if hasattr(c, "scalar_mul") else c * a
            J = j + d
            out[J] = term if J not in out else out[J] + term
    return ZSeries(lo, [out.get(J, S.zero) for J in range(lo, upto + 1)], upto, S.zero)


def _power_cache(cache: dict, base: ZSeries, j: int, span: int) -> ZSeries:
    # (z/s)**j for j >= 0, (s/z)**|j| for j < 0
    if j not in cache:
        p = ZSeries.constant(PiScalar.coerce(1), PiScalar())
        for _ in range(abs(j)):
            p = series_mul(p, base, upto=span)
        cache[j] = p
    return cache[j]
