import cmath

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cmtops.elliptic import (EllipticTop, LatticeSingularity, ThetaParams, conjugated_cm, elliptic_cm_lax,
                             elliptic_top_lax, eom_rhs, evolve, extract_S, f_phi, hamiltonian_elliptic,
                             lax_residual, phi, theta, theta_char, wp, xi)
from cmtops.lax import CMState, basis_indices, reduce_index, sin_basis

RNG = np.random.default_rng(2024)
TAUS = [1j, 2j, 0.3 + 1.1j, -0.45 + 0.8j]


def random_points(n, rng=RNG):
    return [complex(rng.uniform(-0.45, 0.45), rng.uniform(-0.3, 0.3)) for _ in range(n)]


def jacobi_wp(z, tau):
    # independent route: Jacobi theta functions in mpmath's nome convention
    q = mpmath.exp(1j * mpmath.pi * tau)
    t2, t3 = mpmath.jtheta(2, 0, q), mpmath.jtheta(3, 0, q)
    ratio = mpmath.jtheta(4, mpmath.pi * z, q) / mpmath.jtheta(1, mpmath.pi * z, q)
    return complex((mpmath.pi * t2 * t3 * ratio) ** 2 - mpmath.pi ** 2 / 3 * (t2 ** 4 + t3 ** 4))


def test_theta_frozen_values():
    P = ThetaParams(1j)
    assert abs(theta(1, 1, 0, P)) < 1e-15
    assert abs(theta(0, 0, 0, P) - 1.0864348112) < 1e-9


@pytest.mark.parametrize("tau", TAUS)
def test_theta_against_mpmath(tau):
    P = ThetaParams(tau)
    q = mpmath.exp(1j * mpmath.pi * tau)
    for z in random_points(5):
        w = mpmath.pi * z
        assert abs(theta(1, 1, z, P) + complex(mpmath.jtheta(1, w, q))) < 1e-12
        assert abs(theta(1, 0, z, P) - complex(mpmath.jtheta(2, w, q))) < 1e-12
        assert abs(theta(0, 0, z, P) - complex(mpmath.jtheta(3, w, q))) < 1e-12
        assert abs(theta(0, 1, z, P) - complex(mpmath.jtheta(4, w, q))) < 1e-12


@pytest.mark.parametrize("tau", TAUS)
def test_theta_oddness_and_quasi_periodicity(tau):
    P = ThetaParams(tau)
    for z in random_points(20):
        assert abs(theta(1, 1, -z, P) + theta(1, 1, z, P)) < 1e-12
        for k in (0, 1):
            for m in (0, 1):
                t = theta(k, m, z, P)
                assert abs(theta(k, m, z + 1, P) - cmath.exp(1j * np.pi * k) * t) < 1e-11 * (1 + abs(t))
                # z -> z + tau: exp(-i pi m) exp(-i pi tau - 2 pi i z)
                phase = cmath.exp(-1j * np.pi * m - 1j * np.pi * tau - 2j * np.pi * z)
                assert abs(theta(k, m, z + tau, P) - phase * t) < 1e-10 * (1 + abs(t))


def test_truncation_doubling_is_stable():
    for tau in TAUS:
        P = ThetaParams(tau)
        for z in random_points(5):
            for k, m in ((0, 0), (1, 1), (1, 0)):
                a = theta(k, m, z, P)
                b = theta(k, m, z, P.doubled())
                assert abs(a - b) <= 1e-13 * max(abs(a), 1e-3)


def test_bad_tau_rejected():
    with pytest.raises(ValueError):
        ThetaParams(0.5 - 0.1j)
    with pytest.raises(ValueError):
        theta_char(0, 0, 0.1, 1.0)


@pytest.mark.parametrize("tau", TAUS)
def test_phi_identities(tau):
    P = ThetaParams(tau)
    pts = random_points(40)
    for u, z in zip(pts[::2], pts[1::2]):
        assert abs(phi(u, z, P) - phi(z, u, P)) < 1e-10 * abs(phi(u, z, P))
        lhs = phi(u, z, P) * phi(-u, z, P)
        rhs = wp(z, P) - wp(u, P)
        assert abs(lhs - rhs) < 1e-9 * max(1.0, abs(rhs))
    for u in pts[:20]:
        if abs(u) < 0.15:
            continue
        z = 1e-4
        assert abs(z * phi(u, z, P) - 1) < 1e-3


@pytest.mark.parametrize("tau", TAUS)
def test_wp_against_jacobi_and_normalization(tau):
    P = ThetaParams(tau)
    for z in random_points(20):
        w = wp(z, P)
        assert abs(w - jacobi_wp(z, tau)) < 1e-9 * max(1.0, abs(w))
        assert abs(wp(-z, P) - w) < 1e-10 * max(1.0, abs(w))
        assert abs(wp(z + 1, P) - w) < 1e-10 * max(1.0, abs(w))
    z = 1e-3
    assert abs(wp(z, P) - z ** -2) < 1e-2


def test_lattice_points_raise():
    P = ThetaParams(2j)
    with pytest.raises(LatticeSingularity):
        wp(0, P)
    with pytest.raises(LatticeSingularity):
        phi(1 + 2j, 0.3, P)


def test_f_is_u_derivative_of_phi():
    P = ThetaParams(0.3 + 1.1j)
    h = 1e-5
    for u, z in zip(random_points(5), random_points(5)):
        fd = (phi(u + h, z, P) - phi(u - h, z, P)) / (2 * h)
        assert abs(f_phi(u, z, P) - fd) < 1e-7 * abs(fd)


@pytest.mark.parametrize("N", [2, 3])
def test_top_lax_structure(N):
    rng = np.random.default_rng(N)
    a = EllipticTop.random(N, 2j, rng)
    b = EllipticTop.random(N, 2j, rng)
    s = a.with_s({k: a.S[k] + b.S[k] for k in a.S})
    z = 0.23 + 0.17j
    assert np.abs(elliptic_top_lax(s, z) - elliptic_top_lax(a, z) - elliptic_top_lax(b, z)).max() < 1e-10
    R = sum(v * sin_basis(N, *k) for k, v in a.S.items())
    eps = 1e-6
    assert np.abs(eps * elliptic_top_lax(a, eps) - R).max() < 1e-4


@pytest.mark.parametrize("N", [2, 3, 4])
def test_hamiltonian_expansion_identity(N):
    rng = np.random.default_rng(7 + N)
    top = EllipticTop.random(N, 0.2 + 1.3j, rng)
    H, O = hamiltonian_elliptic(top)
    for z in random_points(4, rng):
        L = elliptic_top_lax(top, z)
        lhs = np.trace(L @ L) / N - 2 * H - O * wp(z, top.params)
        assert abs(lhs) < 1e-7 * abs(np.trace(L @ L) / N)
    H2, _ = hamiltonian_elliptic(top.with_s({k: 3 * v for k, v in top.S.items()}))
    assert abs(H2 - 9 * H) < 1e-10 * abs(H)
    assert hamiltonian_elliptic(top.with_s({})) == (0, 0)


@pytest.mark.parametrize("N", [2, 3, 4])
def test_lax_equation_pointwise(N):
    top = EllipticTop.random(N, 2j, np.random.default_rng(N))
    for z in (0.31 + 0.17j, -0.2 + 0.4j):
        r, n = lax_residual(top, z)
        assert r < 1e-10 * n


@pytest.mark.parametrize("N", [2, 3])
def test_single_pair_is_fixed_point(N):
    for m, n in basis_indices(N):
        key, _ = reduce_index(N, -m, -n)
        top = EllipticTop(N, {(m, n): 0.7, key: -0.3 + 0.2j}, 2j)
        assert max(abs(v) for v in eom_rhs(top).values()) < 1e-13
        traj = evolve(top, 1e-2, 20)
        assert np.abs(traj.states[-1] - traj.states[0]).max() < 1e-13


def test_evolve_rejects_bad_step():
    with pytest.raises(ValueError):
        evolve(EllipticTop.random(2, 2j, np.random.default_rng(0)), 0.0, 10)


def test_omega_conserved_rank_two():
    top = EllipticTop.random(2, 2j, np.random.default_rng(11), scale=0.3)
    traj = evolve(top, 1e-3, 1000)
    assert traj.drift(traj.omega2) < 1e-8
    assert traj.drift(traj.energy) < 1e-8


def test_extract_S_inverts_top_form():
    N = 3
    top = EllipticTop.random(N, 2j, np.random.default_rng(5))
    zs = random_points(5)
    ex = extract_S(lambda z: elliptic_top_lax(top, z), N, top.params, zs)
    assert ex["deviation"] < 1e-10
    assert max(abs(ex["S"][k] - top.S[k]) for k in top.S) < 1e-10
    E = np.zeros((N, N))
    E[0, 1] = 1
    bad = extract_S(lambda z: elliptic_top_lax(top, z) + z * E, N, top.params, zs)
    assert bad["deviation"] > 1e-3
    with pytest.raises(ValueError):
        extract_S(lambda z: elliptic_top_lax(top, z), N, top.params, zs[:2])


@pytest.mark.parametrize("N", [2, 3, 4])
def test_cm_side_and_intertwiner(N):
    st_ = CMState(np.linspace(-0.3, 0.3, N), np.arange(N, dtype=float), 0.6).centered()
    P = ThetaParams(2j)
    z = 0.21 + 0.13j
    L = elliptic_cm_lax(st_, z, P)
    assert np.all(np.diag(L) == np.array(st_.v))
    X, cond = xi(z, list(st_.u), P)
    assert cond < 1e8
    R = conjugated_cm(st_, P)
    ex = extract_S(R, N, P, random_points(5))
    assert ex["deviation"] < 1e-8


def test_uncentred_coordinates_break_top_form():
    st_ = CMState([0.25, -0.05, 0.1], [0.0, 0.0, 0.0], 0.6)
    P = ThetaParams(2j)
    ex = extract_S(conjugated_cm(st_, P), 3, P, random_points(5))
    assert ex["deviation"] > 1e-6


@given(st.floats(0.05, 0.45), st.floats(-0.3, 0.3), st.floats(0.8, 2.5))
@settings(max_examples=20, deadline=None)
def test_wp_phi_identity_property(x, y, t):
    P = ThetaParams(complex(0.1, t))
    u, z = complex(x, y), complex(y, x)
    lhs = phi(u, z, P) * phi(-u, z, P)
    rhs = wp(z, P) - wp(u, P)
    assert abs(lhs - rhs) < 1e-9 * max(1.0, abs(rhs))
