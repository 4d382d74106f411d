"""Lax matrices, the sin-algebra basis and the regularizing gauge matrices.

Symbolic Lax matrices are kept as lists of closed-form terms

    coeff * z**z_pow * exp(i*pi*phase*z) / sin(pi*z)**over_sin * g_{i,j}

per entry.  From these the same object produces a matrix of ``ZSeries`` over
``GlPoly`` (for exact invariants) and direct numeric values at (z, G),
optionally with pi replaced by another number.
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from fractions import Fraction
from importlib import resources
from math import comb
from typing import Callable

import mpmath
import numpy as np

from .glpoly import GlPoly
from .scalar import GaussRat, PiScalar, pis_eval
from .zseries import ZSeries, series_exp_linear, series_inv_sin, series_mul

FAMILIES = ("elliptic-top", "elliptic-cm", "trig-top", "trig-cm", "rat-top",
            "rat-cm", "appendix-T", "appendix-R")


class AppendixDataError(RuntimeError):
    """Bundled appendix data is missing or fails its checksum."""


# --- sin-algebra basis ------------------------------------------------------

def clock_shift(N: int) -> tuple[np.ndarray, np.ndarray]:
    """The clock matrix Q = diag(w, w^2, ..., w^N = 1) and cyclic shift Lambda."""
    w = np.exp(2j * np.pi * np.arange(1, N + 1) / N)
    Q = np.diag(w)
    Lam = np.roll(np.eye(N), 1, axis=1)
    return Q, Lam


def sin_basis_raw(N: int, m: int, n: int) -> np.ndarray:
    """T_{m,n} = exp(pi*i*m*n/N) Q^m Lambda^n for arbitrary integers m, n.

    Unreduced indices matter: T_{m+N,n} = (-1)^n T_{m,n}.
    """
    Q, Lam = clock_shift(N)
    Qm = np.diag(np.diag(Q) ** m)
    Ln = np.linalg.matrix_power(Lam, n % N)
    return np.exp(1j * np.pi * m * n / N) * (Qm @ Ln)


def sin_basis(N: int, m: int, n: int) -> np.ndarray:
    """Sin-algebra generator T_{m,n}, 0 <= m, n <= N-1, (m, n) != (0, 0)."""
    if not (0 <= m < N and 0 <= n < N) or (m, n) == (0, 0):
        raise IndexError(f"T_{{{m},{n}}} outside the basis range for N={N}")
    return sin_basis_raw(N, m, n)


def basis_indices(N: int) -> list[tuple[int, int]]:
    return [(m, n) for m in range(N) for n in range(N) if (m, n) != (0, 0)]


def reduce_index(N: int, m: int, n: int) -> tuple[tuple[int, int], int]:
    """Reduced index in 0..N-1 and the sign s with T_raw(m, n) = s * T(reduced)."""
    a, b = m % N, n % N
    # exp(pi i (mn - ab)/N) with m = a + N*p, n = b + N*r
    p, r = (m - a) // N, (n - b) // N
    s = -1 if (a * r + b * p + N * p * r) % 2 else 1
    return (a, b), s


def s_from_g(G) -> dict[tuple[int, int], complex]:
    """Top coordinates S_{m,n} = Tr(G T_{-m,-n}), so that sum S_mn T_mn = N * (traceless G)."""
    G = np.asarray(G, dtype=complex)
    N = G.shape[0]
    return {(m, n): complex(np.trace(G @ sin_basis_raw(N, -m, -n))) for m, n in basis_indices(N)}


def s_from_g_formula(G) -> dict[tuple[int, int], complex]:
    """The explicit shift/phase sum over g_{a,b}.

    S_{m,n} collects the entries on the n-th cyclic superdiagonal
    (b - a = n mod N) with phases exp(-pi i m (|b-a| + 2|a|)/N), where |x| is
    x reduced into 1..N.  It agrees with ``s_from_g`` except on the row n = 0,
    where |0| = N contributes an extra (-1)^m.
    """
    G = np.asarray(G, dtype=complex)
    N = G.shape[0]

    def bar(x):
        r = x % N
        return N if r == 0 else r

    out = {}
    for m, n in basis_indices(N):
        acc = 0j
        for a in range(1, N + 1):
            for b in range(1, N + 1):
                if bar(b - a) == bar(n):
                    acc += np.exp(-1j * np.pi * m * (bar(b - a) + 2 * bar(a)) / N) * G[a - 1, b - 1]
        out[(m, n)] = acc
    return out


def g_from_s(S: dict, N: int, trace: complex = 0.0) -> np.ndarray:
    """Inverse of ``s_from_g``; the identity component is supplied separately."""
    G = trace / N * np.eye(N, dtype=complex)
    for (m, n), s in S.items():
        G = G + s / N * sin_basis_raw(N, m, n)
    return G


# --- states ---------------------------------------------------------------

@dataclass(frozen=True)
class CMState:
    u: tuple
    v: tuple
    nu: complex

    def __post_init__(self):
        object.__setattr__(self, "u", tuple(complex(x) for x in self.u))
        object.__setattr__(self, "v", tuple(complex(x) for x in self.v))
        object.__setattr__(self, "nu", complex(self.nu))
        if len(self.u) != len(self.v):
            raise ValueError("u and v must have the same length")

    @property
    def N(self) -> int:
        return len(self.u)

    def centered(self) -> "CMState":
        """Centre-of-mass frame: subtract the mean coordinate and momentum."""
        mu = sum(self.u) / self.N
        mv = sum(self.v) / self.N
        return CMState([x - mu for x in self.u], [x - mv for x in self.v], self.nu)


@dataclass(frozen=True)
class TopState:
    N: int
    S: dict | None = None
    G: np.ndarray | None = None

    @classmethod
    def from_g(cls, G) -> "TopState":
        G = np.asarray(G, dtype=complex)
        return cls(G.shape[0], s_from_g(G), G)

    @classmethod
    def from_s(cls, S: dict, N: int) -> "TopState":
        return cls(N, dict(S), g_from_s(S, N))


# --- symbolic Lax matrices -----------------------------------------------

@dataclass(frozen=True)
class LaxTerm:
    coeff: PiScalar
    phase: Fraction          # exp(i*pi*phase*z)
    z_pow: int
    gvar: tuple[int, int]
    over_sin: bool = False   # divide by sin(pi*z)

    def series(self, N: int, order: int) -> ZSeries:
        """Expansion through z**order with GlPoly coefficients."""
        g = GlPoly.var(N, *self.gvar)
        zero = GlPoly.zero(N)
        pole = 1 if self.over_sin else 0
        need = order - self.z_pow + pole
        if self.phase == 0 or need < 0:
            s = ZSeries.constant(PiScalar.coerce(1), PiScalar())
            if self.phase != 0:
                s = s.truncate(need)
        else:
            s = series_exp_linear(PiScalar.pi(1, GaussRat(0, self.phase)), need)
        if self.over_sin:
            s = series_mul(s, series_inv_sin(max(need - 1, -1)), upto=need - 1)
        s = s.shift(self.z_pow)
        c = self.coeff
        return s.map(lambda a: g.scalar_mul(a * c), zero=zero)

    def value(self, z, G, pi=None):
        if pi is None:
            c = complex(self.coeff)
            pv = np.pi
            f = c * z ** self.z_pow * np.exp(1j * pv * float(self.phase) * z)
            if self.over_sin:
                f = f / np.sin(pv * z)
        else:
            c = pis_eval(self.coeff, pi)
            ph = mpmath.mpf(self.phase.numerator) / self.phase.denominator
            f = c * mpmath.mpc(z) ** self.z_pow * mpmath.exp(1j * pi * ph * z)
            if self.over_sin:
                f = f / mpmath.sin(pi * z)
        return f * G[self.gvar[0] - 1, self.gvar[1] - 1]


@dataclass
class LaxMatrix:
    """N x N Lax matrix: symbolic (term lists) or numeric (an evaluator).

    A symbolic matrix exposes ``series(order)`` and numeric evaluation
    ``__call__(z, G)``; a numeric one is called as ``__call__(z)``.
    """

    N: int
    family: str
    terms: list | None = None
    evaluator: Callable | None = None
    exact: bool = False
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown family {self.family!r}")

    @property
    def is_symbolic(self) -> bool:
        return self.terms is not None

    def series(self, order: int):
        """Matrix of ZSeries over GlPoly, each known through z**order."""
        N = self.N
        out = []
        for i in range(N):
            row = []
            for j in range(N):
                acc = ZSeries(0, [], None if self.exact else order, GlPoly.zero(N))
                for t in self.terms[i][j]:
                    acc = acc + t.series(N, order)
                if not self.exact:
                    acc = acc.truncate(order)
                row.append(acc)
            out.append(row)
        return out

    def __call__(self, z, G=None, pi=None):
        if not self.is_symbolic:
            return self.evaluator(z)
        if G is None:
            raise ValueError("symbolic Lax matrix needs a g-matrix to evaluate")
        N = self.N
        if pi is None:
            G = np.asarray(G, dtype=complex)
            out = np.zeros((N, N), dtype=complex)
            for i in range(N):
                for j in range(N):
                    out[i, j] = sum((t.value(z, G) for t in self.terms[i][j]), 0j)
            return out
        out = mpmath.matrix(N, N)
        for i in range(N):
            for j in range(N):
                out[i, j] = mpmath.fsum(t.value(z, G, pi) for t in self.terms[i][j])
        return out


    def to_json_obj(self, order: int = 2) -> dict:
        """Term lists plus the Laurent series of every entry through z**order."""
        if not self.is_symbolic:
            raise ValueError("only symbolic Lax matrices serialize")
        N = self.N
        entries = []
        for i in range(N):
            for j in range(N):
                entries.append({"row": i + 1, "col": j + 1, "terms": [
                    {"coeff": t.coeff.to_records(), "phase": [t.phase.numerator, t.phase.denominator],
                     "z_pow": t.z_pow, "gvar": list(t.gvar), "over_sin": t.over_sin}
                    for t in self.terms[i][j]]})
        ser = self.series(order)
        series = [{"row": i + 1, "col": j + 1, "known_through": ser[i][j].trunc,
                   "coeffs": [{"z_pow": k, "poly": c.to_json_obj()} for k, c in ser[i][j].items()]}
                  for i in range(N) for j in range(N)]
        return {"N": N, "family": self.family, "exact": self.exact, "params": self.params,
                "entries": entries, "series": {"order": order, "entries": series}}


def _c(re=0, im=0, pi_pow=0) -> PiScalar:
    return PiScalar.pi(pi_pow, GaussRat(re, im))


def _bar(x: int, N: int) -> int:
    r = x % N
    return N if r == 0 else r


def trig_top_lax(N: int, diagonal: str = "cyclic") -> LaxMatrix:
    """General-N trigonometric top L-operator in the g_{a,b} variables.

    Off-diagonal entries follow the three-case closed form (a < b, a > b with
    a != N, a = N).  The diagonal is pi/(2 sin(pi z)) (A_a e^{-i pi z} +
    B_a e^{i pi z}) with A_a = sum_k (N - 1 - 2 d(k - a)) g_kk and B_a with
    d(a - k).  ``diagonal="cyclic"`` takes d(x) = x mod N in 0..N-1, which
    reproduces the bundled N = 2, 3, 4 matrices; ``"literal"`` takes d in
    1..N (so d(0) = N) and differs from them by -2 N pi cot(pi z) g_aa.
    """
    if N < 2:
        raise ValueError("N must be >= 2")
    if diagonal not in ("cyclic", "literal"):
        raise ValueError("diagonal must be 'cyclic' or 'literal'")
    F = Fraction
    big = _c(N, 0, 1)           # N*pi, used with 1/sin
    two_pi_i_N = _c(0, 2 * N, 1)
    terms = [[[] for _ in range(N)] for _ in range(N)]
    for a in range(1, N + 1):
        for b in range(1, N + 1):
            e = terms[a - 1][b - 1]
            if a < b:
                e.append(LaxTerm(big, F(-(N - 2 * b + 2 * a), N), 0, (a, b), True))
                for k in range(1, N - b + 1):
                    e.append(LaxTerm(-two_pi_i_N, F(2 * (b - a), N), 0, (a + k, b + k)))
            elif a > b and a != N:
                e.append(LaxTerm(big, F(N + 2 * b - 2 * a, N), 0, (a, b), True))
                for k in range(1, b + 1):
                    e.append(LaxTerm(two_pi_i_N, F(-2 * (a - b), N), 0, (a - k, _bar(b - k, N))))
            elif a == N and b < N:
                e.append(LaxTerm(big, F(-(N - 2 * b), N), 0, (N, b), True))
                for k in range(1, N - b + 1):
                    e.append(LaxTerm(-two_pi_i_N, F(2 * b, N), 0, (k, b + k)))
                for k in range(0, b):
                    e.append(LaxTerm(two_pi_i_N, F(2 * (b - N), N), 0,
                                     (_bar(N - b + k, N), _bar(N + k, N))))
            else:
                for k in range(1, N + 1):
                    if diagonal == "cyclic":
                        dA, dB = (k - a) % N, (a - k) % N
                    else:
                        dA, dB = _bar(k - a, N), _bar(a - k, N)
                    half = _c(1, 0, 1) * GaussRat(F(1, 2))
                    for d, ph in ((dA, -1), (dB, 1)):
                        w = N - 1 - 2 * d
                        if w:
                            e.append(LaxTerm(half * w, F(ph), 0, (k, k), True))
    return LaxMatrix(N, "trig-top", terms=_merge(terms), params={"diagonal": diagonal})


def _merge(terms):
    out = []
    for row in terms:
        new_row = []
        for entry in row:
            acc: dict = {}
            for t in entry:
                key = (t.phase, t.z_pow, t.gvar, t.over_sin)
                acc[key] = acc.get(key, PiScalar()) + t.coeff
            new_row.append([LaxTerm(c, *k) for k, c in sorted(acc.items(), key=lambda kv: (kv[0][2], kv[0][0], kv[0][1], kv[0][3])) if c])
        out.append(new_row)
    return out


def rational_top_lax_sl2() -> LaxMatrix:
    """The 2x2 rational top operator [[S3/z, 2S+/z], [2S-/z + z S3, -S3/z]].

    S-variables are carried by the g-matrix [[S3, 2S+], [2S-, -S3]], i.e.
    g11 = -g22 = S3, g12 = 2S+, g21 = 2S-; the lower-left z-term reads
    z*(g11 - g22)/2.
    """
    F = Fraction
    one = _c(1)
    half = _c(F(1, 2))
    t = [
        [[LaxTerm(one, F(0), -1, (1, 1))], [LaxTerm(one, F(0), -1, (1, 2))]],
        [[LaxTerm(one, F(0), -1, (2, 1)), LaxTerm(half, F(0), 1, (1, 1)), LaxTerm(-half, F(0), 1, (2, 2))],
         [LaxTerm(one, F(0), -1, (2, 2))]],
    ]
    return LaxMatrix(2, "rat-top", terms=t, exact=True)


def rational_top_lax_limit2() -> LaxMatrix:
    """The x -> 0 limit of the gauged 2x2 trigonometric top (gauge diag(x, 1/x) W1).

    With d = g11 - g22:
    [[d/z - 2 z g12, 2 g12/z], [2 g21/z - 2 z d - 2 z^3 g12, -d/z + 2 z g12]].
    """
    F = Fraction
    c = _c
    t = [
        [[LaxTerm(c(1), F(0), -1, (1, 1)), LaxTerm(c(-1), F(0), -1, (2, 2)), LaxTerm(c(-2), F(0), 1, (1, 2))],
         [LaxTerm(c(2), F(0), -1, (1, 2))]],
        [[LaxTerm(c(2), F(0), -1, (2, 1)), LaxTerm(c(-2), F(0), 1, (1, 1)), LaxTerm(c(2), F(0), 1, (2, 2)),
          LaxTerm(c(-2), F(0), 3, (1, 2))],
         [LaxTerm(c(-1), F(0), -1, (1, 1)), LaxTerm(c(1), F(0), -1, (2, 2)), LaxTerm(c(2), F(0), 1, (1, 2))]],
    ]
    return LaxMatrix(2, "rat-top", terms=t, exact=True)


def s_to_g_sl2(S3, Sp, Sm) -> np.ndarray:
    return np.array([[S3, 2 * Sp], [2 * Sm, -S3]], dtype=complex)


# --- appendix data ----------------------------------------------------------

def _data_bytes(name: str) -> bytes:
    try:
        return resources.files("cmtops").joinpath("data", name).read_bytes()
    except FileNotFoundError as exc:
        raise AppendixDataError(f"missing data file {name}") from exc


def _checked(name: str) -> dict:
    blob = _data_bytes(name)
    sums = json.loads(_data_bytes("checksums.json"))
    if sums.get(name) != hashlib.sha256(blob).hexdigest():
        raise AppendixDataError(f"checksum mismatch for {name}")
    return json.loads(blob)


def load_appendix(family: str, N: int) -> LaxMatrix:
    """Bundled N = 2, 3, 4 matrices with their normalization applied.

    Family ``T`` is pi*N/sin(pi z) * L(z) and family ``R`` is N/z * L(z).
    """
    if family not in ("T", "R"):
        raise ValueError("family must be 'T' or 'R'")
    if N not in (2, 3, 4):
        raise ValueError("bundled matrices exist for N = 2, 3, 4 only")
    obj = _checked(f"lax_{family}_N{N}.json")
    terms = [[[] for _ in range(N)] for _ in range(N)]
    for ent in obj["entries"]:
        cell = terms[ent["row"] - 1][ent["col"] - 1]
        for t in ent["terms"]:
            c = PiScalar.from_records(t["coeff"])
            ph = Fraction(t["phase"][0], t["phase"][1])
            if family == "T":
                cell.append(LaxTerm(c * _c(N, 0, 1), ph, t["z_pow"], tuple(t["gvar"]), True))
            else:
                cell.append(LaxTerm(c * N, ph, t["z_pow"] - 1, tuple(t["gvar"])))
    exact = all(t.phase == 0 for row in terms for e in row for t in e)
    fam = "appendix-T" if family == "T" else "appendix-R"
    return LaxMatrix(N, fam, terms=terms, exact=exact, params={"prefactor": obj["prefactor"]})


def load_appendix_hamiltonians(family: str, N: int) -> dict[int, GlPoly]:
    """The printed H_k polynomials for a bundled (family, N)."""
    if family not in ("T", "R") or N not in (2, 3, 4):
        raise ValueError("bundled Hamiltonians exist for families T, R and N = 2, 3, 4")
    obj = _checked(f"ham_{family}_N{N}.json")
    return {h["k"]: GlPoly.from_json_obj(h["poly"]) for h in obj["hamiltonians"]}


# --- CM Lax matrices ----------------------------------------------------------

def cm_lax(family: str, state: CMState, N: int | None = None, pi=None) -> LaxMatrix:
    """Numeric CM Lax matrix, trigonometric or rational.

    trig:     v_i d_ij + (1 - d_ij) nu pi (cot(pi z) + cot(pi (u_i - u_j)))
    rational: v_i d_ij + (1 - d_ij) nu (1/z + 1/(u_i - u_j))
    ``pi`` replaces the constant pi in the trigonometric case.
    """
    N = state.N if N is None else N
    if N != state.N:
        raise ValueError("state size does not match N")
    u = np.array(state.u)
    if len(set(np.round(u, 14))) < N:
        raise ValueError("coincident particles: the CM Lax matrix has a pole")
    v = np.array(state.v)
    nu = state.nu
    if family == "trig":
        p = np.pi if pi is None else pi

        def ev(z):
            d = u[:, None] - u[None, :]
            with np.errstate(divide="ignore", invalid="ignore"):
                off = nu * p * (1 / np.tan(p * z) + 1 / np.tan(p * d))
            out = np.where(np.eye(N, dtype=bool), 0, off)
            return out + np.diag(v)
        fam = "trig-cm"
    elif family == "rational":
        def ev(z):
            d = u[:, None] - u[None, :]
            with np.errstate(divide="ignore", invalid="ignore"):
                off = nu * (1 / z + 1 / d)
            out = np.where(np.eye(N, dtype=bool), 0, off)
            return out + np.diag(v)
        fam = "rat-cm"
    else:
        raise ValueError("family must be 'trig' or 'rational'")
    return LaxMatrix(N, fam, evaluator=ev, params={"state": state})


# --- gauge matrices ---------------------------------------------------------

def trig_exponent(N: int, i: int) -> Fraction:
    """a_i = -(N/2 (i^2/N^2 - i/N) + (N^2 - 1)/(12 N))."""
    F = Fraction
    return -(F(N, 2) * (F(i * i, N * N) - F(i, N)) + F(N * N - 1, 12 * N))


def gauge_trig(N: int, q) -> np.ndarray:
    if q == 0:
        raise ValueError("q must be nonzero")
    return np.diag([complex(q) ** float(trig_exponent(N, i)) for i in range(1, N + 1)])


def rational_exponent(N: int, i: int, reading: str = "regular") -> Fraction:
    """Exponent b_i of the diagonal factor of the rational gauge.

    ``printed``: b_i = -N(N-1)/(2N) + (1 - (i-1)N)/N for every i. Consecutive
    differences are all 1 and the limit it produces is too degenerate.
    ``regular``: same for i < N, but b_N is lowered by one more unit. This is
    the choice under which the x -> 0 limit reproduces the bundled N = 3, 4
    rational matrices (for N = 2 it is the 2x2 gauge diag(x, 1/x) W1).
    """
    F = Fraction
    b = -F(N * (N - 1), 2 * N) + F(1 - (i - 1) * N, N)
    if reading == "printed":
        return b
    if reading == "regular":
        return b - 1 if i == N else b
    raise ValueError("reading must be 'printed' or 'regular'")


def w1(N: int, reading: str = "binomial") -> list[list[int]]:
    """Lower-triangular x-independent factor of the rational gauge.

    ``binomial``: W1[i][j] = C(i-1, j-1) for i < N and C(N, j) on the last row.
    ``literal``: the undefined factorial (j - i)! with j < i is taken as 1,
    i.e. (i-1)!/(j-1)!, kept only as a negative control.
    """
    W = [[0] * N for _ in range(N)]
    for i in range(1, N + 1):
        for j in range(1, i + 1):
            if i == N:
                W[i - 1][j - 1] = comb(N, j)
            elif reading == "binomial":
                W[i - 1][j - 1] = comb(i - 1, j - 1)
            elif reading == "literal":
                from math import factorial
                W[i - 1][j - 1] = factorial(i - 1) // factorial(j - 1)
            else:
                raise ValueError("reading must be 'binomial' or 'literal'")
    return W


def gauge_rational(N: int, x, reading: str = "binomial", exponents: str = "regular"):
    """A^R(x) = W2 W1 with W2 = diag(x^{b_i}); mpmath if ``x`` is an mpf."""
    if x == 0:
        raise ValueError("x must be nonzero")
    W = w1(N, reading)
    b = [rational_exponent(N, i, exponents) for i in range(1, N + 1)]
    if isinstance(x, (mpmath.mpf, mpmath.mpc)):
        W2 = mpmath.diag([x ** (mpmath.mpf(e.numerator) / e.denominator) for e in b])
        return W2 * mpmath.matrix(W)
    W2 = np.diag([complex(x) ** float(e) for e in b])
    return W2 @ np.array(W, dtype=complex)


def conjugate_top(L: np.ndarray, A: np.ndarray) -> np.ndarray:
    return A @ L @ np.linalg.inv(A)


def gauge_internal(G, A):
    """Internal-space substitution paired with L -> A L A^{-1}: G -> A^{-1} G A."""
    if isinstance(G, mpmath.matrix):
        return A ** -1 * G * A
    return np.linalg.solve(A, np.asarray(G) @ A)


def lax_series_matrix(L: LaxMatrix, order: int) -> list:
    return L.series(order)


__all__ = [
    "AppendixDataError", "CMState", "TopState", "LaxTerm", "LaxMatrix",
    "clock_shift", "sin_basis", "sin_basis_raw", "basis_indices", "reduce_index",
    "s_from_g", "s_from_g_formula", "g_from_s", "trig_top_lax", "rational_top_lax_sl2",
    "s_to_g_sl2", "rational_top_lax_limit2", "load_appendix", "load_appendix_hamiltonians", "cm_lax",
    "trig_exponent", "gauge_trig", "rational_exponent", "w1", "gauge_rational",
    "conjugate_top", "gauge_internal",
]
