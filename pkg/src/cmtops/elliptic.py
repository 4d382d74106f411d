"""Theta functions, the elliptic top and the elliptic Calogero-Moser Lax pair.

Theta functions with characteristics are summed directly,

    theta[a, b](z, tau) = sum_n exp(2 pi i ((n + a)^2 tau/2 + (n + a)(z + b))),

with the summation window centred on the dominant term so that large
imaginary parts of z (as in the intertwiner) stay accurate.  The integer
labels theta_{k,m} used throughout are theta[k/2, m/2].
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .lax import CMState, basis_indices, reduce_index, sin_basis, sin_basis_raw

TWO_PI_I = 2j * np.pi


class LatticeSingularity(ValueError):
    """A point where an elliptic function has a pole."""


@dataclass(frozen=True)
class ThetaParams:
    """Modular parameter and summation half-width (None picks it from the tolerance)."""

    tau: complex
    truncation: int | None = None
    tol: float = 1e-17

    def __post_init__(self):
        object.__setattr__(self, "tau", complex(self.tau))
        if self.tau.imag <= 0:
            raise ValueError("theta series diverge unless Im(tau) > 0")

    def half_width(self, tau: complex | None = None) -> int:
        if self.truncation is not None:
            return int(self.truncation)
        t = self.tau if tau is None else tau
        # |term| / |max term| <= exp(-pi Im(tau) K^2)
        return int(math.ceil(math.sqrt(-math.log(self.tol) / (math.pi * t.imag)))) + 2

    def doubled(self) -> "ThetaParams":
        return ThetaParams(self.tau, 2 * self.half_width(), self.tol)


def theta_char(a, b, z, tau, deriv: int = 0, params: ThetaParams | None = None) -> complex:
    """d^deriv/dz^deriv theta[a, b](z, tau) for a single complex z."""
    tau = complex(tau)
    if tau.imag <= 0:
        raise ValueError("theta series diverge unless Im(tau) > 0")
    z = complex(z)
    a = float(a)
    b = float(b)
    K = (params or ThetaParams(tau)).half_width(tau)
    # the exponent's real part is maximal near n + a = -Im(z)/Im(tau)
    n0 = int(round(-z.imag / tau.imag - a))
    n = np.arange(n0 - K, n0 + K + 1, dtype=float) + a
    expo = TWO_PI_I * (n * n * tau / 2 + n * (z + b))
    terms = np.exp(expo)
    if deriv:
        terms = terms * (TWO_PI_I * n) ** deriv
    return complex(terms.sum())


def theta(k, m, z, params: ThetaParams, deriv: int = 0, tau=None) -> complex:
    """theta_{k,m}(z, tau) = theta[k/2, m/2]; ``tau`` overrides params.tau."""
    t = params.tau if tau is None else tau
    return theta_char(k / 2, m / 2, z, t, deriv, params)


def _theta11(z, params, deriv=0):
    return theta(1, 1, z, params, deriv)


def _off_lattice(z, params, what="z"):
    if abs(_theta11(z, params)) < 1e-13 * max(1.0, abs(_theta11(0.5 + 0.5 * params.tau, params))):
        raise LatticeSingularity(f"{what} = {z} is a lattice point")


def phi(u, z, params: ThetaParams) -> complex:
    """phi(u, z) = theta11(u + z) theta11'(0) / (theta11(u) theta11(z))."""
    _off_lattice(u, params, "u")
    _off_lattice(z, params, "z")
    return (_theta11(u + z, params) * _theta11(0, params, 1)
            / (_theta11(u, params) * _theta11(z, params)))


def f_phi(u, z, params: ThetaParams) -> complex:
    """d phi/du, via the logarithmic derivative of theta11."""
    return phi(u, z, params) * (
        _theta11(u + z, params, 1) / _theta11(u + z, params)
        - _theta11(u, params, 1) / _theta11(u, params))


def wp(z, params: ThetaParams) -> complex:
    """Weierstrass p: -(log theta11)''(z) plus the constant that kills the z^0 term."""
    _off_lattice(z, params)
    t0 = _theta11(z, params)
    t1 = _theta11(z, params, 1)
    t2 = _theta11(z, params, 2)
    c = _theta11(0, params, 3) / (3 * _theta11(0, params, 1))
    return -(t2 * t0 - t1 * t1) / (t0 * t0) + c


def phi_mn(m: int, n: int, z, N: int, params: ThetaParams) -> complex:
    """exp(-2 pi i n z/N) phi(-(m + n tau)/N, z); periodic in m and n modulo N."""
    return np.exp(-TWO_PI_I * n * z / N) * phi(-(m + n * params.tau) / N, z, params)


def f_mn(m: int, n: int, z, N: int, params: ThetaParams) -> complex:
    """exp(-2 pi i n z/N) f(-(m + n tau)/N, z), the M-matrix kernel."""
    return np.exp(-TWO_PI_I * n * z / N) * f_phi(-(m + n * params.tau) / N, z, params)


def wp_mn(m: int, n: int, N: int, params: ThetaParams) -> complex:
    return wp((m + n * params.tau) / N, params)


# --- elliptic top -----------------------------------------------------------

@dataclass
class EllipticTop:
    """Top coordinates S_{m,n}, 0 <= m, n < N, (m, n) != (0, 0)."""

    N: int
    S: dict
    tau: complex
    params: ThetaParams = field(default=None)

    def __post_init__(self):
        if self.params is None:
            self.params = ThetaParams(self.tau)
        self.S = {k: complex(self.S.get(k, 0)) for k in basis_indices(self.N)}

    def s_raw(self, m: int, n: int) -> complex:
        """S at unreduced indices, so that S T is index-representative independent."""
        if m % self.N == 0 and n % self.N == 0:
            return 0j
        key, sign = reduce_index(self.N, m, n)
        return sign * self.S[key]

    def with_s(self, S: dict) -> "EllipticTop":
        return EllipticTop(self.N, S, self.tau, self.params)

    def vector(self) -> np.ndarray:
        return np.array([self.S[k] for k in basis_indices(self.N)])

    @classmethod
    def from_vector(cls, N, vec, tau, params=None) -> "EllipticTop":
        return cls(N, dict(zip(basis_indices(N), vec)), tau, params)

    @classmethod
    def random(cls, N: int, tau, rng: np.random.Generator, scale: float = 1.0) -> "EllipticTop":
        idx = basis_indices(N)
        vals = scale * (rng.normal(size=len(idx)) + 1j * rng.normal(size=len(idx)))
        return cls(N, dict(zip(idx, vals)), tau)


@lru_cache(maxsize=256)
def _kernel_basis(N: int, params: ThetaParams, z: complex, kind: str) -> np.ndarray:
    """Stack of phi_mn(z) T_mn (kind "L") or f_mn(z) T_mn (kind "M") over basis_indices(N)."""
    k = phi_mn if kind == "L" else f_mn
    return np.array([k(m, n, z, N, params) * sin_basis(N, m, n) for m, n in basis_indices(N)])


def elliptic_top_lax(top: EllipticTop, z) -> np.ndarray:
    """sum_{(m,n) != 0} S_mn phi_mn(z) T_mn."""
    return np.tensordot(top.vector(), _kernel_basis(top.N, top.params, complex(z), "L"), axes=1)


def m_matrix(top: EllipticTop, z) -> np.ndarray:
    """sum S_mn exp(-2 pi i n z/N) f(-(m + n tau)/N, z) T_mn.

    With this M the Lax equation dL/dt = [M, L] reproduces ``eom_rhs``
    (checked in the tests along RK4 trajectories).
    """
    return np.tensordot(top.vector(), _kernel_basis(top.N, top.params, complex(z), "M"), axes=1)


# fixed by requiring dL/dt = [M, L] with ``m_matrix``; the resulting flow is
# dS/dt = {H, S} for the gl(N) bracket {g_ij, g_km} = d_jk g_im - d_im g_kj
EOM_PREFACTOR = 2j


@lru_cache(maxsize=64)
def _eom_table(N: int, params: ThetaParams):
    """Flattened (out, left, right, sign * wp * sin) terms of the quadratic flow."""
    idx = basis_indices(N)
    pos = {k: i for i, k in enumerate(idx)}
    wps = _wp_table(N, params)
    out, left, right, coef = [], [], [], []
    for a, (m, n) in enumerate(idx):
        for (k, l), w in wps.items():
            s = np.sin(np.pi * (k * n - m * l) / N)
            if abs(s) < 1e-15 or ((m - k) % N == 0 and (n - l) % N == 0):
                continue
            key, sign = reduce_index(N, m - k, n - l)
            out.append(a)
            left.append(pos[(k, l)])
            right.append(pos[key])
            coef.append(sign * w * s)
    return (np.array(out, dtype=int), np.array(left, dtype=int),
            np.array(right, dtype=int), np.array(coef, dtype=complex))


def eom_vector(N: int, vec: np.ndarray, params: ThetaParams) -> np.ndarray:
    """``eom_rhs`` on the coordinate vector ordered as ``basis_indices(N)``."""
    out, left, right, coef = _eom_table(N, params)
    vec = np.asarray(vec, dtype=complex)
    res = np.zeros(len(vec), dtype=complex)
    np.add.at(res, out, coef * vec[left] * vec[right])
    return EOM_PREFACTOR * res


def eom_rhs(top: EllipticTop) -> dict:
    """dS_mn/dt = c sum_{k,l} S_kl S_{m-k,n-l} wp((k + l tau)/N) sin(pi (k n - m l)/N).

    The sum runs over reduced (k, l) != 0 with (m-k, n-l) taken as raw
    indices; c is ``EOM_PREFACTOR``.
    """
    return dict(zip(basis_indices(top.N), eom_vector(top.N, top.vector(), top.params)))


def hamiltonian_elliptic(top: EllipticTop) -> tuple[complex, complex]:
    """(H, Omega2) with H = -1/2 sum wp((m + n tau)/N) S_mn S_{-m,-n}.

    Omega2 = (1/N) tr(R^2) for R = sum S_mn T_mn, i.e. sum S_mn S_{-m,-n};
    it multiplies wp(z) in (1/N) tr L(z)^2 = Omega2 wp(z) + 2 H.
    """
    N = top.N
    wps = _wp_table(N, top.params)
    H = 0j
    omega = 0j
    for (m, n), s in top.S.items():
        pair = s * top.s_raw(-m, -n)
        H += -0.5 * wps[(m, n)] * pair
        omega += pair
    return H, omega


@lru_cache(maxsize=64)
def _wp_table(N: int, params: ThetaParams) -> dict:
    return {kl: wp_mn(*kl, N, params) for kl in basis_indices(N)}


def lax_time_derivative(top: EllipticTop, z, rhs: dict | None = None) -> np.ndarray:
    """dL/dt at fixed z by the chain rule: L is linear in S."""
    rhs = eom_rhs(top) if rhs is None else rhs
    return elliptic_top_lax(top.with_s(rhs), z)


def lax_residual(top: EllipticTop, z) -> tuple[float, float]:
    """(||dL/dt - [M, L]||, ||L||) at one spectral point."""
    L = elliptic_top_lax(top, z)
    M = m_matrix(top, z)
    dL = lax_time_derivative(top, z)
    return float(np.linalg.norm(dL - (M @ L - L @ M))), float(np.linalg.norm(L))


@dataclass
class Trajectory:
    N: int
    times: list
    states: list
    energy: list
    omega2: list
    lax_residual: list

    def drift(self, values) -> float:
        v = np.asarray(values)
        return float(np.max(np.abs(v - v[0])))

    def write_csv(self, path) -> None:
        idx = basis_indices(self.N)
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            head = ["t"]
            for m, n in idx:
                head += [f"Re_S_{m}_{n}", f"Im_S_{m}_{n}"]
            head += ["Re_H", "Im_H", "Re_Omega2", "Im_Omega2", "lax_residual"]
            w.writerow(head)
            for t, vec, H, O, r in zip(self.times, self.states, self.energy, self.omega2, self.lax_residual):
                row = [repr(float(t))]
                for s in vec:
                    row += [repr(float(s.real)), repr(float(s.imag))]
                row += [repr(H.real), repr(H.imag), repr(O.real), repr(O.imag), repr(r)]
                w.writerow(row)


def evolve(top: EllipticTop, dt: float, steps: int, z_probe=0.31 + 0.17j,
           record_every: int = 1) -> Trajectory:
    """Classical fixed-step RK4 on the S coordinates."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    N, tau, params = top.N, top.tau, top.params

    def f(vec):
        return eom_vector(N, vec, params)

    y = top.vector()
    times, states, Hs, Os, res = [], [], [], [], []

    def record(t, y):
        cur = EllipticTop.from_vector(N, y, tau, params)
        H, O = hamiltonian_elliptic(cur)
        r, nL = lax_residual(cur, z_probe)
        times.append(t)
        states.append(y.copy())
        Hs.append(H)
        Os.append(O)
        res.append(r / nL if nL else r)

    record(0.0, y)
    for i in range(1, steps + 1):
        k1 = f(y)
        k2 = f(y + 0.5 * dt * k1)
        k3 = f(y + 0.5 * dt * k2)
        k4 = f(y + dt * k3)
        y = y + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        if i % record_every == 0 or i == steps:
            record(i * dt, y)
    return Trajectory(N, times, states, Hs, Os, res)


def extract_S(R, N: int, params: ThetaParams, z_samples) -> dict:
    """Invert the top Lax form: S_mn(z) = Tr(R(z) T_{-m,-n}) / (N phi_mn(z)).

    ``R`` is a callable z -> N x N matrix.  Returns the sample mean of each
    S_mn and the largest relative spread across samples.
    """
    z_samples = list(z_samples)
    if len(z_samples) < 3:
        raise ValueError("need at least three z samples")
    vals = {k: [] for k in basis_indices(N)}
    for z in z_samples:
        Rz = np.asarray(R(z))
        for m, n in vals:
            vals[(m, n)].append(np.trace(Rz @ sin_basis_raw(N, -m, -n)) / (N * phi_mn(m, n, z, N, params)))
    mean = {k: complex(np.mean(v)) for k, v in vals.items()}
    scale = max(1.0, max(abs(x) for x in mean.values()))
    dev = max(float(np.max(np.abs(np.array(v) - mean[k]))) for k, v in vals.items()) / scale
    return {"S": mean, "deviation": dev}


# --- elliptic Calogero-Moser side ----------------------------------------------

def elliptic_cm_lax(state: CMState, z, params: ThetaParams) -> np.ndarray:
    """v_i on the diagonal, nu phi(u_i - u_j, z) off it.

    With the intertwiner argument z - N u_j this is the orientation that makes
    Xi L Xi^{-1} quasi-periodic like the top (phi(u, z + tau) = e^{-2 pi i u} phi).
    """
    N = state.N
    L = np.diag(np.array(state.v, dtype=complex))
    for i in range(N):
        for j in range(N):
            if i != j:
                L[i, j] = state.nu * phi(state.u[i] - state.u[j], z, params)
    return L


def xi_prime(z, u, params: ThetaParams) -> np.ndarray:
    """theta[i/N - 1/2, N/2](z - N u_j, N tau), i, j = 1..N."""
    N = len(u)
    X = np.empty((N, N), dtype=complex)
    for i in range(1, N + 1):
        for j in range(1, N + 1):
            X[i - 1, j - 1] = theta_char(i / N - 0.5, N / 2, z - N * u[j - 1], N * params.tau, 0, params)
    return X


def xi_normalizer(u, params: ThetaParams, reading: str = "kernel") -> np.ndarray:
    """Column normalization of the intertwiner.

    ``kernel``: diag(1 / prod_{k != l} theta11(u_l - u_k)).  This makes the
    all-ones vector span the kernel of Xi(0), which is what cancels the double
    pole of Xi L Xi^{-1} at z = 0.
    ``printed``: diag((-1)^l / prod_{j<k; j,k != l} theta11(u_k - u_j)).  It
    coincides with ``kernel`` up to an overall factor for N = 2 only.
    """
    N = len(u)
    d = []
    for l in range(1, N + 1):
        p = 1 + 0j
        if reading == "kernel":
            for k in range(1, N + 1):
                if k != l:
                    p *= _theta11(u[l - 1] - u[k - 1], params)
            d.append(1 / p)
        elif reading == "printed":
            for j in range(1, N + 1):
                for k in range(j + 1, N + 1):
                    if l not in (j, k):
                        p *= _theta11(u[k - 1] - u[j - 1], params)
            d.append((-1) ** l / p)
        else:
            raise ValueError("reading must be 'kernel' or 'printed'")
    return np.diag(d)


def xi(z, u, params: ThetaParams, reading: str | None = "kernel") -> tuple[np.ndarray, float]:
    """The intertwiner and its 2-norm condition number (``reading=None`` skips normalization).

    Xi L_CM Xi^{-1} is of top form only for centred coordinates, sum u = 0.
    """
    X = xi_prime(z, u, params)
    if reading is not None:
        X = X @ xi_normalizer(u, params, reading)
    return X, float(np.linalg.cond(X))


class SingularIntertwiner(np.linalg.LinAlgError):
    pass


def conjugated_cm(state: CMState, params: ThetaParams, max_cond: float = 1e10,
                  reading: str = "kernel"):
    """z -> Xi(z) L_CM(z) Xi(z)^{-1} as a callable; pass ``state.centered()``."""
    u = list(state.u)

    def R(z):
        X, c = xi(z, u, params, reading)
        if not np.isfinite(c) or c > max_cond:
            raise SingularIntertwiner(f"intertwiner condition number {c:.3g} at z={z}")
        return X @ elliptic_cm_lax(state, z, params) @ np.linalg.inv(X)
    return R


__all__ = [
    "ThetaParams", "LatticeSingularity", "theta_char", "theta", "phi", "f_phi", "wp",
    "phi_mn", "f_mn", "wp_mn", "EllipticTop", "elliptic_top_lax", "m_matrix", "eom_rhs", "eom_vector",
    "EOM_PREFACTOR", "hamiltonian_elliptic", "lax_time_derivative", "lax_residual",
    "Trajectory", "evolve", "extract_S", "elliptic_cm_lax", "xi_prime", "xi_normalizer",
    "xi", "SingularIntertwiner", "conjugated_cm",
]
