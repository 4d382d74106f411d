"""Sparse polynomials in the gl(N) coordinates g_{i,j} and their Lie-Poisson bracket.

Monomials are stored as dense exponent tuples of length N*N (row-major,
``g_{i,j}`` at position ``(i-1)*N + (j-1)``); coefficients are ``PiScalar``.
The bracket is the linear one, ``{g_ij, g_km} = d_jk g_im - d_im g_kj``.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Iterable, Iterator, Mapping

import numpy as np

from .scalar import GaussRat, PiScalar

Monomial = tuple


class RankMismatch(ValueError):
    pass


@dataclass(frozen=True, order=True)
class GlVar:
    i: int
    j: int
    N: int

    def __post_init__(self):
        if not (1 <= self.i <= self.N and 1 <= self.j <= self.N):
            raise ValueError(f"g_{{{self.i},{self.j}}} out of range for N={self.N}")

    @property
    def index(self) -> int:
        return (self.i - 1) * self.N + (self.j - 1)

    def __str__(self):
        return f"g{self.i}{self.j}" if self.N < 10 else f"g_{self.i}_{self.j}"


def _mono_mul(a: Monomial, b: Monomial) -> Monomial:
    return tuple(x + y for x, y in zip(a, b))


def _grlex_key(m: Monomial):
    return (sum(m), m)


class GlPoly:
    """Immutable polynomial over ``PiScalar`` in the N*N variables g_{i,j}."""

    __slots__ = ("N", "terms", "_compiled")

    def __init__(self, N: int, terms: Mapping[Monomial, PiScalar] | None = None):
        self.N = int(N)
        clean = {}
        if terms:
            size = self.N * self.N
            for m, c in terms.items():
                m = tuple(int(e) for e in m)
                if len(m) != size:
                    raise ValueError("monomial length does not match N*N")
                c = PiScalar.coerce(c)
                if c:
                    clean[m] = c
        self.terms = clean
        self._compiled = None

    @classmethod
    def _raw(cls, N: int, terms: dict) -> "GlPoly":
        obj = object.__new__(cls)
        obj.N = N
        obj.terms = terms
        obj._compiled = None
        return obj

    # --- constructors -------------------------------------------------

    @classmethod
    def zero(cls, N: int) -> "GlPoly":
        return cls._raw(N, {})

    @classmethod
    def const(cls, N: int, c) -> "GlPoly":
        c = PiScalar.coerce(c)
        return cls._raw(N, {(0,) * (N * N): c} if c else {})

    @classmethod
    def var(cls, N: int, i: int, j: int, coeff=1) -> "GlPoly":
        v = GlVar(i, j, N)
        m = [0] * (N * N)
        m[v.index] = 1
        return cls(N, {tuple(m): PiScalar.coerce(coeff)})

    @classmethod
    def gens(cls, N: int) -> dict[tuple[int, int], "GlPoly"]:
        return {(i, j): cls.var(N, i, j) for i in range(1, N + 1) for j in range(1, N + 1)}

    # --- basic protocol -----------------------------------------------

    def _check(self, other: "GlPoly"):
        if other.N != self.N:
            raise RankMismatch(f"rank mismatch: {self.N} vs {other.N}")

    def _lift(self, other) -> "GlPoly":
        if isinstance(other, GlPoly):
            self._check(other)
            return other
        return GlPoly.const(self.N, other)

    @property
    def is_zero(self) -> bool:
        return not self.terms

    def __bool__(self):
        return bool(self.terms)

    def __len__(self):
        return len(self.terms)

    def __eq__(self, other):
        if isinstance(other, GlPoly):
            return self.N == other.N and self.terms == other.terms
        if isinstance(other, (int, GaussRat, PiScalar)):
            return self == GlPoly.const(self.N, other)
        return NotImplemented

    def __hash__(self):
        return hash((self.N, frozenset(self.terms.items())))

    def __add__(self, other):
        other = self._lift(other)
        if not other.terms:
            return self
        if not self.terms:
            return other
        out = dict(self.terms)
        for m, c in other.terms.items():
            s = out.get(m)
            if s is None:
                out[m] = c
            else:
                s = s + c
                if s:
                    out[m] = s
                else:
                    del out[m]
        return GlPoly._raw(self.N, out)

    __radd__ = __add__

    def __neg__(self):
        return GlPoly._raw(self.N, {m: -c for m, c in self.terms.items()})

    def __sub__(self, other):
        return self + (-self._lift(other))

    def __rsub__(self, other):
        return self._lift(other) - self

    def __mul__(self, other):
        if not isinstance(other, GlPoly):
            return self.scalar_mul(other)
        self._check(other)
        out: dict = {}
        for m1, c1 in self.terms.items():
            for m2, c2 in other.terms.items():
                m = _mono_mul(m1, m2)
                p = c1 * c2
                s = out.get(m)
                out[m] = p if s is None else s + p
        return GlPoly._raw(self.N, {m: c for m, c in out.items() if c})

    def __rmul__(self, other):
        return self.scalar_mul(other)

    def __pow__(self, n: int):
        result = GlPoly.const(self.N, 1)
        for _ in range(n):
            result = result * self
        return result

    def scalar_mul(self, c) -> "GlPoly":
        c = PiScalar.coerce(c)
        if not c:
            return GlPoly.zero(self.N)
        out = {}
        for m, a in self.terms.items():
            p = a * c
            if p:
                out[m] = p
        return GlPoly._raw(self.N, out)

    # --- structure ------------------------------------------------------

    def degree(self) -> int:
        return max((sum(m) for m in self.terms), default=-1)

    def is_homogeneous(self) -> bool:
        return len({sum(m) for m in self.terms}) <= 1

    def sorted_terms(self) -> list[tuple[Monomial, PiScalar]]:
        return sorted(self.terms.items(), key=lambda t: _grlex_key(t[0]))

    def coefficient(self, monomial: Monomial) -> PiScalar:
        return self.terms.get(tuple(monomial), PiScalar())

    def variables(self) -> Iterator[GlVar]:
        N = self.N
        used = set()
        for m in self.terms:
            used.update(k for k, e in enumerate(m) if e)
        for k in sorted(used):
            yield GlVar(k // N + 1, k % N + 1, N)

    def monomial_from_pairs(self, pairs: Iterable[tuple[int, int, int]]) -> Monomial:
        return monomial(self.N, pairs)

    # --- calculus -------------------------------------------------------

    def partial(self, v: GlVar | tuple[int, int]) -> "GlPoly":
        if not isinstance(v, GlVar):
            v = GlVar(v[0], v[1], self.N)
        k = v.index
        out = {}
        for m, c in self.terms.items():
            e = m[k]
            if e:
                mm = list(m)
                mm[k] = e - 1
                out[tuple(mm)] = c * e
        return GlPoly._raw(self.N, out)

    def evaluate(self, G) -> complex:
        """Substitute g_{i,j} <- G[i-1][j-1] and pi by its float value."""
        G = np.asarray(G, dtype=complex)
        if G.shape != (self.N, self.N):
            raise ValueError(f"expected a {self.N}x{self.N} matrix, got {G.shape}")
        if not self.terms:
            return 0j
        if self._compiled is None:
            exps = np.array(list(self.terms), dtype=np.int64)
            coeffs = np.array([complex(c) for c in self.terms.values()])
            self._compiled = (exps, coeffs)
        exps, coeffs = self._compiled
        flat = G.reshape(-1)
        return complex(coeffs @ np.prod(flat[None, :] ** exps, axis=1))

    # --- serialization --------------------------------------------------

    def to_json_obj(self) -> dict:
        N = self.N
        terms = []
        for m, c in self.sorted_terms():
            mono = [[k // N + 1, k % N + 1, e] for k, e in enumerate(m) if e]
            terms.append({"coeff": c.to_records(), "monomial": mono})
        return {"N": N, "terms": terms}

    @classmethod
    def from_json_obj(cls, obj: Mapping) -> "GlPoly":
        N = int(obj["N"])
        acc = cls.zero(N)
        for t in obj["terms"]:
            m = monomial(N, t["monomial"])
            acc = acc + cls._raw(N, {m: PiScalar.from_records(t["coeff"])})
        return acc

    def to_json(self) -> str:
        return json.dumps(self.to_json_obj(), sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "GlPoly":
        return cls.from_json_obj(json.loads(text))

    def __repr__(self):
        return f"GlPoly(N={self.N}, {self})"

    def __str__(self):
        if not self.terms:
            return "0"
        N = self.N
        parts = []
        for m, c in self.sorted_terms():
            factors = []
            for k, e in enumerate(m):
                if e:
                    name = str(GlVar(k // N + 1, k % N + 1, N))
                    factors.append(name if e == 1 else f"{name}^{e}")
            mono = "*".join(factors)
            cs = str(c)
            if not mono:
                parts.append(f"({cs})")
            elif cs == "1":
                parts.append(mono)
            else:
                parts.append(f"({cs})*{mono}")
        return " + ".join(parts)


def monomial(N: int, pairs: Iterable) -> Monomial:
    """Build a dense exponent tuple from ``[(i, j, exp), ...]``."""
    m = [0] * (N * N)
    for i, j, e in pairs:
        m[GlVar(int(i), int(j), N).index] += int(e)
    return tuple(m)


def poly_add(a: GlPoly, b: GlPoly) -> GlPoly:
    return a + b


def poly_mul(a: GlPoly, b: GlPoly) -> GlPoly:
    return a * b


def poly_scalar_mul(a: GlPoly, c) -> GlPoly:
    return a.scalar_mul(c)


def partial(a: GlPoly, v) -> GlPoly:
    return a.partial(v)


def evaluate(a: GlPoly, G) -> complex:
    return a.evaluate(G)


def generator_bracket(N: int, x: int, y: int) -> list[tuple[int, int]]:
    """{g_x, g_y} for flat variable indices, as ``[(flat_index, sign), ...]``."""
    i, j = divmod(x, N)
    k, m = divmod(y, N)
    out = []
    if j == k:
        out.append((i * N + m, 1))
    if i == m:
        out.append((k * N + j, -1))
    return out


def poisson(A: GlPoly, B: GlPoly) -> GlPoly:
    """Lie-Poisson bracket via bilinearity, Leibniz and the generator relation."""
    if A.N != B.N:
        raise RankMismatch(f"rank mismatch: {A.N} vs {B.N}")
    N = A.N
    size = N * N
    table = [[generator_bracket(N, x, y) for y in range(size)] for x in range(size)]
    out: dict = {}
    for m1, c1 in A.terms.items():
        vars1 = [(x, e) for x, e in enumerate(m1) if e]
        for m2, c2 in B.terms.items():
            vars2 = [(y, e) for y, e in enumerate(m2) if e]
            base = None
            for x, ex in vars1:
                for y, ey in vars2:
                    br = table[x][y]
                    if not br:
                        continue
                    if base is None:
                        base = list(_mono_mul(m1, m2))
                        cc = c1 * c2
                    mult = ex * ey
                    for w, sign in br:
                        mm = base.copy()
                        mm[x] -= 1
                        mm[y] -= 1
                        mm[w] += 1
                        key = tuple(mm)
                        coeff = cc * (sign * mult)
                        s = out.get(key)
                        out[key] = coeff if s is None else s + coeff
    return GlPoly._raw(N, {m: c for m, c in out.items() if c})


def poisson_partials(A: GlPoly, B: GlPoly) -> GlPoly:
    """Same bracket as the double sum of partial derivatives; used as a cross-check."""
    if A.N != B.N:
        raise RankMismatch(f"rank mismatch: {A.N} vs {B.N}")
    N = A.N
    dA = {(i, j): A.partial((i, j)) for i in range(1, N + 1) for j in range(1, N + 1)}
    dB = {(i, j): B.partial((i, j)) for i in range(1, N + 1) for j in range(1, N + 1)}
    g = GlPoly.gens(N)
    total = GlPoly.zero(N)
    for i in range(1, N + 1):
        for k in range(1, N + 1):
            inner = GlPoly.zero(N)
            for j in range(1, N + 1):
                inner = inner + dA[i, j] * dB[j, k] - dB[i, j] * dA[j, k]
            if inner:
                total = total + inner * g[i, k]
    return total


def numeric_bracket(A: GlPoly, B: GlPoly, G) -> complex:
    """{A, B} at a numeric point, assembled from numerically evaluated partials."""
    N = A.N
    G = np.asarray(G, dtype=complex)
    dA = np.array([[A.partial((i, j)).evaluate(G) for j in range(1, N + 1)]
                   for i in range(1, N + 1)])
    dB = np.array([[B.partial((i, j)).evaluate(G) for j in range(1, N + 1)]
                   for i in range(1, N + 1)])
    # sum_{ijk} (dA_ij dB_jk - dB_ij dA_jk) G_ik = tr((dA dB - dB dA) G^T)
    C = dA @ dB - dB @ dA
    return complex(np.sum(C * G))


def is_central(A: GlPoly) -> bool:
    N = A.N
    for i in range(1, N + 1):
        for j in range(1, N + 1):
            if poisson(A, GlPoly.var(N, i, j)):
                return False
    return True


def trace_power(N: int, k: int) -> GlPoly:
    """tr(g^k) as a polynomial."""
    g = GlPoly.gens(N)
    mat = [[g[i, j] for j in range(1, N + 1)] for i in range(1, N + 1)]
    power = mat
    for _ in range(k - 1):
        power = [[sum((power[i][l] * mat[l][j] for l in range(N)), GlPoly.zero(N))
                  for j in range(N)] for i in range(N)]
    return sum((power[i][i] for i in range(N)), GlPoly.zero(N))
