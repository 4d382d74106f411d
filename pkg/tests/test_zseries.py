import cmath

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cmtops.glpoly import GlPoly
from cmtops.lax import load_appendix
from cmtops.scalar import GaussRat, PiScalar
from cmtops.zseries import (TruncationError, ZSeries, coeff, mat_series_trace_power, reexpand_in_sin,
                            series_cos, series_cot, series_exp_linear, series_inv_sin, series_mul,
                            series_sin)
from strategies import pi_scalar

ONE = PiScalar.coerce(1)
ZERO = PiScalar()


def is_zero_through(s, order):
    return all(not c for j, c in s.items() if j <= order)


def test_exp_linear():
    assert coeff(series_exp_linear(ZERO, 4), 0) == ONE
    assert all(not c for j, c in series_exp_linear(ZERO, 4).items() if j > 0)
    e = series_exp_linear(PiScalar.pi(1, GaussRat(0, 1)), 2)
    assert coeff(e, 1) == PiScalar.pi(1, GaussRat(0, 1))
    assert coeff(e, 2) == -PiScalar.pi(2) / 2


def test_exp_inverse_property():
    c = PiScalar.pi(1, GaussRat(1, 2))
    p = series_exp_linear(c, 6) * series_exp_linear(-c, 6)
    assert coeff(p, 0) == ONE
    assert is_zero_through(p - ZSeries.constant(ONE, ZERO), 6)


def test_inv_sin_coefficients():
    s = series_inv_sin(3)
    assert coeff(s, -1) == PiScalar.pi(-1)
    assert not coeff(s, 0)
    assert coeff(s, 1) == PiScalar.pi(1) / 6
    assert coeff(s, 3) == PiScalar.pi(3, 7) / 360
    prod = series_mul(s, series_sin(6), upto=3)
    assert coeff(prod, 0) == ONE
    assert all(not coeff(prod, j) for j in (1, 2, 3))


def test_cot_coefficients_and_identity():
    c = series_cot(5)
    assert coeff(c, -1) == PiScalar.pi(-1)
    assert not coeff(c, 0)
    assert coeff(c, 1) == -PiScalar.pi(1) / 3
    assert coeff(c, 3) == -PiScalar.pi(3) / 45
    other = series_mul(series_cos(6), series_inv_sin(5), upto=5)
    assert is_zero_through(c - other, 5)


def test_coeff_beyond_truncation_raises():
    with pytest.raises(TruncationError):
        coeff(series_inv_sin(2), 3)
    s = ZSeries.exact({-1: 1, 0: 3})
    assert coeff(s, -1) == 1


def test_trace_power_small_cases():
    z = ZSeries.monomial(1, 1)
    zi = ZSeries.monomial(1, -1)
    zero = ZSeries.constant(0)
    t = mat_series_trace_power([[z, zero], [zero, zi]], 2)
    assert dict(t.items()) == {-2: 1, 2: 1}
    a, b = ZSeries.constant(3), ZSeries.constant(5)
    assert dict(mat_series_trace_power([[zero, a], [b, zero]], 2).items()) == {0: 30}


def test_trace_square_of_rational_two_by_two():
    G = GlPoly.gens(2)
    M = load_appendix("R", 2).series(0)
    t = mat_series_trace_power(M, 2)
    d = G[1, 1] - G[2, 2]
    assert coeff(t, -2) == (d * d).scalar_mul(2) + (G[1, 2] * G[2, 1]).scalar_mul(8)
    assert coeff(t, 1) == (G[1, 2] * d).scalar_mul(4)
    assert all(j in (-2, 1) for j, _ in t.items())


def test_truncated_trace_power_refuses_unknown_orders():
    M = [[series_inv_sin(1), ZSeries(0, [], 1, ZERO)], [ZSeries(0, [], 1, ZERO), series_inv_sin(1)]]
    with pytest.raises(TruncationError):
        mat_series_trace_power(M, 2, upto=3)


def _numeric(s):
    return s.map(complex, zero=0j)


def test_numeric_consistency_at_small_z():
    z = 0.05 + 0.03j
    order = 13
    pairs = [
        (series_inv_sin(order), 1 / cmath.sin(np.pi * z)),
        (series_cot(order), cmath.cos(np.pi * z) / cmath.sin(np.pi * z)),
        (series_exp_linear(PiScalar.pi(1, GaussRat(0, 2)), order), cmath.exp(2j * np.pi * z)),
    ]
    for s, exact in pairs:
        assert abs(s.evaluate(z) - exact) < 1e-9 * abs(exact)


def test_reexpand_in_sin_recovers_polynomial_in_sin():
    # sin(pi z)^2/pi^2 re-expands to s^2 exactly
    s2 = series_mul(series_sin(8), series_sin(8), upto=8).map(lambda c: c * PiScalar.pi(-2))
    r = reexpand_in_sin(s2, 6)
    assert dict(r.items()) == {2: ONE}


series_st = st.builds(
    lambda lo, cs, t: ZSeries(lo, cs, lo + len(cs) - 1 + t, ZERO),
    st.integers(-2, 1), st.lists(pi_scalar, min_size=1, max_size=4), st.integers(0, 2))


@given(series_st, series_st, series_st)
@settings(max_examples=40, deadline=None)
def test_product_associative_at_retained_orders(a, b, c):
    left = (a * b) * c
    right = a * (b * c)
    assert left.trunc == right.trunc
    assert is_zero_through(left - right, left.trunc)
