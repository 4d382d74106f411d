"""Convert the raw LaTeX appendix blocks into exact JSON data files.

Run from the repository root:

    python3 tools/build_appendix_data.py

Reads ``src/cmtops/data/raw/*.tex`` and writes ``src/cmtops/data/*.json``
plus ``checksums.json``.  sympy is only needed here, not at runtime.
"""
from __future__ import annotations

import hashlib
import json
import re
from pathlib import Path

import sympy as sp
from sympy.parsing.sympy_parser import (
    implicit_multiplication,
    parse_expr,
    standard_transformations,
)

ROOT = Path(__file__).resolve().parents[1]
DATA = ROOT / "src" / "cmtops" / "data"
RAW = DATA / "raw"

z = sp.Symbol("z")
G = {(i, j): sp.Symbol(f"g_{i}_{j}") for i in range(1, 5) for j in range(1, 5)}
LOCALS = {"z": z, "PI": sp.pi, "I": sp.I, "E": sp.E, "cos": sp.cos, "sin": sp.sin}
LOCALS.update({str(s): s for s in G.values()})
TRANSFORMS = standard_transformations + (implicit_multiplication,)


def latex_to_sympy(tex: str) -> sp.Expr:
    s = re.sub(r"\s+", "", tex)
    s = s.replace("$", "").replace("\\\\", "")
    s = s.replace("\\left", "").replace("\\right", "")
    s = re.sub(r"g_\{\{?(\d)(?:,|\\,)(\d)\}\}?", r" g_\1_\2 ", s)
    s = re.sub(r"\\frac\{([^{}]*)\}\{([^{}]*)\}", r"((\1)/(\2))", s)
    s = s.replace("z", " z ").replace("\\pi", " PI ").replace("\\cos", "cos").replace("\\sin", "sin")
    s = s.replace("\\,", "*")
    s = re.sub(r"e\^", "E^", s)
    s = s.replace("^", "**").replace("{", "(").replace("}", ")")
    s = re.sub(r"(?<![A-Za-z_])i", " I ", s)
    return parse_expr(s, local_dict=LOCALS, transformations=TRANSFORMS)


def pi_records(c: sp.Expr) -> list[dict]:
    acc: dict[int, sp.Expr] = {}
    for t in sp.Add.make_args(sp.expand(c)):
        rest, k = t.as_coeff_exponent(sp.pi)
        acc[int(k)] = acc.get(int(k), 0) + rest
    out = []
    for k in sorted(acc):
        re_, im_ = sp.nsimplify(acc[k]).as_real_imag()
        re_, im_ = sp.Rational(re_), sp.Rational(im_)
        if re_ == 0 and im_ == 0:
            continue
        out.append({"pi_pow": k, "re_num": int(re_.p), "re_den": int(re_.q),
                    "im_num": int(im_.p), "im_den": int(im_.q)})
    return out


def split_blocks(text: str, pattern: str):
    marks = list(re.finditer(pattern, text))
    ends = [m.start() for m in marks[1:]] + [len(text)]
    return [(m.groups() if len(m.groups()) > 1 else m.group(1), text[m.end():e])
            for m, e in zip(marks, ends)]


def lax_terms(expr: sp.Expr) -> list[dict]:
    """Decompose into coeff * z**p * exp(i*pi*r*z) * g_ab."""
    expr = sp.expand(expr.rewrite(sp.exp))
    expr = sp.powsimp(expr, combine="exp")
    collected: dict[tuple, sp.Expr] = {}
    for t in sp.Add.make_args(expr):
        coeff = sp.Integer(1)
        phase = sp.Integer(0)
        zpow = 0
        gvar = None
        for f in sp.Mul.make_args(t):
            if f.func is sp.exp:
                phase += sp.simplify(f.args[0] / (sp.I * sp.pi * z))
            elif f == z:
                zpow += 1
            elif f.is_Pow and f.base == z:
                zpow += int(f.exp)
            elif f in G.values():
                assert gvar is None, t
                gvar = f
            elif f.is_Pow and f.base is sp.E:
                phase += sp.simplify(f.exp / (sp.I * sp.pi * z))
            else:
                assert not f.free_symbols, (f, t)
                coeff *= f
        assert gvar is not None, t
        phase = sp.Rational(phase)
        key = (phase, zpow, gvar)
        collected[key] = collected.get(key, 0) + coeff
    out = []
    for (phase, zpow, gvar), c in sorted(collected.items(), key=lambda kv: (str(kv[0][2]), kv[0][0], kv[0][1])):
        rec = pi_records(c)
        if not rec:
            continue
        _, i, j = str(gvar).split("_")
        out.append({"coeff": rec, "phase": [int(phase.p), int(phase.q)],
                    "z_pow": zpow, "gvar": [int(i), int(j)]})
    return out


def poly_json(expr: sp.Expr, N: int) -> dict:
    gens = [G[(i, j)] for i in range(1, N + 1) for j in range(1, N + 1)]
    poly = sp.Poly(sp.expand(expr), *gens)
    terms = []
    for exps, c in poly.terms():
        mono = [[i, j, e] for (i, j), e in zip(
            [(i, j) for i in range(1, N + 1) for j in range(1, N + 1)], exps) if e]
        terms.append({"coeff": pi_records(c), "monomial": mono})
    return {"N": N, "terms": terms}


def build():
    checksums = {}
    for fam, prefactor in (("T", "pi_N_over_sin"), ("R", "N_over_z")):
        for N in (2, 3, 4):
            text = (RAW / f"lax_{fam}_N{N}.tex").read_text()
            entries = []
            for (a, b), body in split_blocks(text, r"L_\{(\d)\\,(\d)\}="):
                expr = latex_to_sympy(body)
                entries.append({"row": int(a), "col": int(b), "terms": lax_terms(expr)})
            assert len(entries) == N * N, (fam, N, len(entries))
            lax = {"family": fam, "N": N, "prefactor": prefactor, "entries": entries}
            write(DATA / f"lax_{fam}_N{N}.json", lax, checksums)

            text = (RAW / f"ham_{fam}_N{N}.tex").read_text()
            hams = []
            for k, body in split_blocks(text, r"H_\{(\d)\}="):
                hams.append({"k": int(k), "poly": poly_json(latex_to_sympy(body), N)})
            write(DATA / f"ham_{fam}_N{N}.json", {"family": fam, "N": N, "hamiltonians": hams}, checksums)
    (DATA / "checksums.json").write_text(json.dumps(checksums, indent=1, sort_keys=True) + "\n")


def write(path: Path, obj, checksums):
    blob = json.dumps(obj, sort_keys=True, separators=(",", ":")).encode()
    path.write_bytes(blob + b"\n")
    checksums[path.name] = hashlib.sha256(blob + b"\n").hexdigest()
    print(f"wrote {path.name} ({len(blob)} bytes)")


if __name__ == "__main__":
    build()
