"""Conserved quantities from Lax matrices and their Poisson commutativity.

The contour integral (1/2 pi i k) * oint tr L(z)^k / z dz picks one Laurent
coefficient of tr L(z)^k.  Here every coefficient is kept, divided by k, and
one coefficient per (family, k) is singled out as "the" Hamiltonian by
calibration against the bundled polynomials:

* rational families: the lowest non-central coefficient with z-power >= 0
  (z^1 for N = 2, z^0 for N = 3, 4);
* trigonometric families: the s^0 coefficient after re-expanding in
  s = sin(pi z)/pi.  The plain z^0 coefficient agrees with it modulo the
  center for k = 2 only.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations_with_replacement

import numpy as np

from .glpoly import GlPoly, is_central, numeric_bracket, poisson
from .lax import LaxMatrix
from .scalar import PiScalar
from .zseries import TruncationError, mat_series_trace_power, reexpand_in_sin

# expansion variable of the calibrated extraction, per family
EXTRACTION_VARIABLE = {"appendix-T": "sin", "trig-top": "sin", "appendix-R": "z", "rat-top": "z"}

GUARD = 2


@dataclass
class InvariantFamily:
    family: str
    N: int
    kmax: int
    order: int | None
    coeffs: dict[int, dict[int, GlPoly]] = field(default_factory=dict)
    variable: str = "z"

    def get(self, k: int, j: int) -> GlPoly:
        return self.coeffs[k].get(j, GlPoly.zero(self.N))

    def auto_index(self, k: int) -> int | None:
        """Lowest power >= 0 whose coefficient is not central."""
        for j, p in sorted(self.coeffs[k].items()):
            if j >= 0 and not is_central(p):
                return j
        return None

    def hamiltonian(self, k: int, index: int | str = "auto") -> GlPoly:
        if index == "auto":
            index = self.auto_index(k)
            if index is None:
                return GlPoly.zero(self.N)
        return self.get(k, int(index))

    def all_polys(self, kmax: int | None = None) -> list[tuple[tuple[int, int], GlPoly]]:
        kmax = self.kmax if kmax is None else kmax
        return [((k, j), p) for k in range(1, kmax + 1) for j, p in sorted(self.coeffs[k].items())]

    def central_flags(self) -> dict[tuple[int, int], bool]:
        return {key: is_central(p) for key, p in self.all_polys()}

    def to_json_obj(self) -> dict:
        return {
            "family": self.family,
            "N": self.N,
            "kmax": self.kmax,
            "truncation_order": self.order,
            "variable": self.variable,
            "coefficients": [
                {"k": k, "z_pow": j, "central": is_central(p), "poly": p.to_json_obj()}
                for (k, j), p in self.all_polys()
            ],
        }


def trace_invariants(L: LaxMatrix, kmax: int, upto: int = 1, order: int | None = None,
                     variable: str = "z") -> InvariantFamily:
    """(1/k) * Laurent coefficients of tr L(z)^k through z**upto, k = 1..kmax.

    Non-exact matrices are expanded to ``upto + kmax - 1 + GUARD`` unless
    ``order`` is given; too small an order raises ``TruncationError``.
    ``variable="sin"`` re-expands each trace in s = sin(pi z)/pi first.
    """
    if variable not in ("z", "sin"):
        raise ValueError("variable must be 'z' or 'sin'")
    if not L.is_symbolic:
        raise ValueError("trace_invariants needs a symbolic Lax matrix")
    if order is None and not L.exact:
        order = upto + kmax - 1 + GUARD
    M = L.series(order if order is not None else 0)
    fam = InvariantFamily(L.family, L.N, kmax, None if L.exact else order, variable=variable)
    for k in range(1, kmax + 1):
        tr = mat_series_trace_power(M, k, upto)
        if tr.trunc is not None and tr.trunc < upto:
            raise TruncationError(f"tr L^{k} known only through z^{tr.trunc}")
        if variable == "sin":
            tr = reexpand_in_sin(tr, upto)
        inv_k = PiScalar.coerce(1) / k
        fam.coeffs[k] = {j: c.scalar_mul(inv_k) for j, c in tr.items() if j <= upto}
    return fam


def hamiltonians(L: LaxMatrix, kmax: int) -> tuple[InvariantFamily, dict[int, GlPoly]]:
    """Calibrated H_2..H_kmax of a symbolic Lax matrix."""
    var = EXTRACTION_VARIABLE.get(L.family, "z")
    fam = trace_invariants(L, kmax, upto=1, variable=var)
    return fam, {k: fam.hamiltonian(k) for k in range(2, kmax + 1)}


@dataclass
class CommuteReport:
    pairs: list[dict]

    @property
    def ok(self) -> bool:
        return all(p["status"] == "PASS" for p in self.pairs)

    def to_json_obj(self) -> dict:
        return {"pass": self.ok, "pairs": self.pairs}

    def text(self) -> str:
        lines = []
        for p in self.pairs:
            tail = "" if p["status"] == "PASS" else f"  residual terms: {p['residual_terms']}"
            lines.append(f"{{{p['pair'][0]}, {p['pair'][1]}}}: {p['status']}{tail}")
        return "\n".join(lines)


def check_commute(polys, names=None) -> CommuteReport:
    """Exact pairwise brackets; a pair passes only if the bracket is identically zero."""
    if isinstance(polys, InvariantFamily):
        items = polys.all_polys()
        names = [f"C[{k},{j}]" for (k, j), _ in items]
        polys = [p for _, p in items]
    elif isinstance(polys, dict):
        names = [str(k) for k in polys]
        polys = list(polys.values())
    names = names or [f"P{i}" for i in range(len(polys))]
    Ns = {p.N for p in polys}
    if len(Ns) > 1:
        raise ValueError("polynomials have different ranks")
    pairs = []
    for a, b in combinations_with_replacement(range(len(polys)), 2):
        br = poisson(polys[a], polys[b])
        pairs.append({
            "pair": [names[a], names[b]],
            "status": "PASS" if br.is_zero else "FAIL",
            "residual_terms": len(br),
            "residual": None if br.is_zero else br.to_json_obj(),
        })
    return CommuteReport(pairs)


def _weight(m, N) -> tuple:
    # torus weight: row count minus column count per index
    w = [0] * N
    for k, e in enumerate(m):
        if e:
            i, j = divmod(k, N)
            w[i] += e
            w[j] -= e
    return tuple(w)


@dataclass
class CenterComparison:
    lam: PiScalar | None
    residual: GlPoly
    central: bool
    monomial: tuple | None

    def to_json_obj(self) -> dict:
        return {
            "lambda": None if self.lam is None else self.lam.to_records(),
            "lambda_str": None if self.lam is None else str(self.lam),
            "central": self.central,
            "residual": self.residual.to_json_obj(),
            "residual_str": str(self.residual),
        }


def compare_mod_center(P: GlPoly, Q: GlPoly) -> CenterComparison:
    """Fit P = lam * Q + (central part).

    lam is matched on the first graded-lex monomial of Q with nonzero torus
    weight (such monomials never occur in a central element) whose
    coefficients in P and Q are single-term, hence invertible.
    """
    if P.N != Q.N:
        raise ValueError("rank mismatch")
    N = P.N
    lam = None
    chosen = None
    for m, qc in Q.sorted_terms():
        if not any(_weight(m, N)):
            continue
        pc = P.coefficient(m)
        if len(qc.terms) == 1 and len(pc.terms) <= 1:
            lam = pc / qc if pc else PiScalar()
            chosen = m
            break
    if lam is None:
        return CenterComparison(None, P, is_central(P), None)
    residual = P - Q.scalar_mul(lam)
    return CenterComparison(lam, residual, is_central(residual), chosen)


def numeric_commute(P: GlPoly, Q: GlPoly, samples: int = 20, seed: int = 0) -> dict:
    """Max |{P, Q}| at random complex points, by two independent routes.

    Route 1 evaluates the exact bracket polynomial; route 2 assembles the
    bracket from numerically evaluated partial derivatives.
    """
    rng = np.random.default_rng(seed)
    br = poisson(P, Q)
    exact_max = 0.0
    assembled_max = 0.0
    agree = 0.0
    for _ in range(samples):
        G = rng.normal(size=(P.N, P.N)) + 1j * rng.normal(size=(P.N, P.N))
        a = br.evaluate(G)
        b = numeric_bracket(P, Q, G)
        exact_max = max(exact_max, abs(a))
        assembled_max = max(assembled_max, abs(b))
        agree = max(agree, abs(a - b) / (1 + abs(a)))
    return {"max_exact_path": exact_max, "max_assembled_path": assembled_max, "path_disagreement": agree}


__all__ = [
    "EXTRACTION_VARIABLE", "InvariantFamily", "trace_invariants", "hamiltonians", "CommuteReport",
    "check_commute", "CenterComparison", "compare_mod_center", "numeric_commute",
]
