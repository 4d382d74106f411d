import itertools

import numpy as np
import pytest
from hypothesis import given, settings

from cmtops.glpoly import (GlPoly, RankMismatch, is_central, numeric_bracket, poisson,
                           poisson_partials, trace_power)
from cmtops.scalar import PiScalar
from strategies import gl_poly


def g(N=2):
    return GlPoly.gens(N)


def test_arithmetic_examples():
    G = g()
    assert G[1, 1] * G[1, 1] == G[1, 1] ** 2
    assert (G[1, 2] + G[2, 1]) + (-G[1, 2]) == G[2, 1]
    p = (G[1, 1] * G[2, 2]).scalar_mul(PiScalar.pi(2))
    (coef,) = p.terms.values()
    assert coef == PiScalar.pi(2)


def test_rank_mismatch():
    with pytest.raises(RankMismatch):
        g(2)[1, 1] + g(3)[1, 1]


def test_partials():
    G = g()
    assert (G[1, 2] ** 2).partial((1, 2)) == G[1, 2].scalar_mul(2)
    assert (G[1, 1] * G[2, 2]).partial((1, 2)).is_zero
    assert (G[1, 1] ** 3).partial((1, 1)) == (G[1, 1] ** 2).scalar_mul(3)


def test_bracket_examples():
    G = g()
    assert poisson(G[1, 1], G[1, 2]) == G[1, 2]
    assert poisson(G[1, 2] * G[2, 1], G[1, 1]).is_zero


@pytest.mark.parametrize("N", [2, 3, 4])
def test_generator_relation(N):
    G = g(N)
    for i, j, k, m in itertools.product(range(1, N + 1), repeat=4):
        want = GlPoly.zero(N)
        if j == k:
            want = want + G[i, m]
        if i == m:
            want = want - G[k, j]
        assert poisson(G[i, j], G[k, m]) == want


def test_evaluate_examples():
    G = g()
    assert G[1, 1].evaluate(np.eye(2)) == 1
    H = (G[1, 2] * (G[1, 1] - G[2, 2])).scalar_mul(2)
    assert H.evaluate(np.array([[1, 1], [0, 0]])) == 2


def test_evaluate_matches_termwise_sum():
    rng = np.random.default_rng(4)
    G = g()
    H = (G[1, 2] * (G[1, 1] - G[2, 2])).scalar_mul(2)
    M = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
    direct = 2 * M[0, 1] * M[0, 0] - 2 * M[0, 1] * M[1, 1]
    assert abs(H.evaluate(M) - direct) < 1e-12


def test_centrality():
    G = g()
    assert is_central(G[1, 1] + G[2, 2])
    assert is_central(G[1, 1] ** 2 + G[2, 2] ** 2 + (G[1, 2] * G[2, 1]).scalar_mul(2))
    assert not is_central(G[1, 2])


@pytest.mark.parametrize("N", [2, 3, 4])
def test_trace_powers_central(N):
    for k in range(1, N + 1):
        assert is_central(trace_power(N, k))


def test_json_round_trip():
    G = g(3)
    p = (G[1, 2] * G[3, 1] ** 2).scalar_mul(PiScalar.pi(-1, 3)) + G[2, 2]
    assert GlPoly.from_json(p.to_json()) == p
    assert GlPoly.from_json(p.to_json()).to_json() == p.to_json()


@given(gl_poly(), gl_poly())
@settings(max_examples=40, deadline=None)
def test_antisymmetry(a, b):
    assert (poisson(a, b) + poisson(b, a)).is_zero


@given(gl_poly(N=3, max_terms=2), gl_poly(N=3, max_terms=2), gl_poly(N=3, max_terms=2))
@settings(max_examples=25, deadline=None)
def test_jacobi(a, b, c):
    total = poisson(a, poisson(b, c)) + poisson(b, poisson(c, a)) + poisson(c, poisson(a, b))
    assert total.is_zero


@given(gl_poly(), gl_poly(), gl_poly())
@settings(max_examples=30, deadline=None)
def test_leibniz(a, b, c):
    assert poisson(a * b, c) == a * poisson(b, c) + poisson(a, c) * b


@given(gl_poly(N=3), gl_poly(N=3))
@settings(max_examples=30, deadline=None)
def test_bracket_routes_agree(a, b):
    assert poisson(a, b) == poisson_partials(a, b)
    rng = np.random.default_rng(0)
    M = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
    x = poisson(a, b).evaluate(M)
    y = numeric_bracket(a, b, M)
    assert abs(x - y) <= 1e-10 * (1 + abs(x))
