"""Cyclic quantum dilogarithms at odd N.

Tensors are numpy arrays of shape (N, N, N, N) indexed [alpha, beta, gamma,
delta].  For the direct matrix R the pair (alpha, beta) is the input and
(gamma, delta) the output; the inverse matrix Rbar runs the other way.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .dilog import li2
from .idealizer import ModularTriple


@dataclass(frozen=True)
class CyclicParams:
    N: int

    def __post_init__(self):
        if not isinstance(self.N, (int, np.integer)) or self.N < 3 or self.N % 2 == 0:
            raise ValueError(f"N must be an odd integer >= 3, got {self.N}")

    @property
    def p(self) -> int:
        return (self.N - 1) // 2

    @property
    def half(self) -> int:
        """Stands for 1/2 in Z/N."""
        return self.p + 1

    @property
    def zeta(self) -> complex:
        return cmath.exp(2j * math.pi / self.N)

    def zpow(self, k) -> complex:
        return cmath.exp(2j * math.pi * (int(k) % self.N) / self.N)

    @cached_property
    def zeta_table(self) -> np.ndarray:
        return np.exp(2j * np.pi * np.arange(self.N) / self.N)

    @cached_property
    def g1(self) -> complex:
        return g_func(1.0, self)


@dataclass(frozen=True)
class CurvePoint:
    x: complex
    y: complex
    z: complex

    def residual(self, N: int) -> float:
        x, y, z = (complex(v) for v in (self.x, self.y, self.z))
        return abs(x ** N + y ** N - z ** N) / max(1.0, abs(z) ** N)


_EPS_CANDIDATES = (0.0, 0.3, -0.3, 0.6, -0.6, 0.9, -0.9)


def _ray_distance(x: complex, start: complex, direction: complex) -> float:
    d = (x - start) / direction
    if d.real <= 0:
        return abs(x - start)
    return abs(d.imag)


def choose_eps(points, P: CyclicParams) -> float:
    """Cut angle keeping the cuts of g furthest from the evaluation points."""
    best, best_d = 0.0, -1.0
    for eps in _EPS_CANDIDATES:
        rot = cmath.exp(1j * eps)
        d = min(_ray_distance(complex(x), P.zpow(k), rot * P.zpow(k))
                for x in points for k in range(1, P.N))
        if d > best_d + 1e-12:
            best, best_d = eps, d
    return best


def _log_cut(u: complex, angle: float) -> complex:
    """log with its cut along the ray of argument ``angle``."""
    rot = cmath.exp(-1j * (angle - math.pi))
    return cmath.log(u * rot) + 1j * (angle - math.pi)


def g_func(x, P: CyclicParams, eps: float | None = None) -> complex:
    """prod_{j=1}^{N-1} (1 - x zeta^j)^{j/N}.

    The factor j has its cut on the ray from zeta^{-j} in direction
    exp(i eps) zeta^{-j}; eps defaults to the candidate keeping x furthest
    from all cuts.
    """
    x = complex(x)
    if eps is None:
        eps = 0.0 if x == 1 else choose_eps([x], P)
    total = 0j
    for j in range(1, P.N):
        u = 1 - x * P.zpow(j)
        if abs(u) < 1e-300:
            raise ValueError(f"g_func: x = {x} is a branch point")
        # on that ray 1 - x zeta^j has argument pi + eps
        angle = math.pi + eps
        total += (j / P.N) * _log_cut(u, angle)
    return cmath.exp(total)


def h_func(x, P: CyclicParams, eps: float | None = None) -> complex:
    x = complex(x)
    if x == 0:
        raise ValueError("h_func: x = 0")
    return x ** (-P.p) * g_func(x, P, eps) / P.g1


def omega(cp: CurvePoint, n: int, P: CyclicParams) -> complex:
    x, y, z = (complex(v) for v in (cp.x, cp.y, cp.z))
    out = 1 + 0j
    for j in range(1, int(n) % P.N + 1):
        den = 1 - (x / z) * P.zpow(j)
        if abs(den) < 1e-300:
            raise ValueError(f"omega: vanishing denominator at j = {j}")
        out *= (y / z) / den
    return out


def omega_table(cp: CurvePoint, P: CyclicParams) -> np.ndarray:
    """omega(cp | n) for n = 0..N-1."""
    x, y, z = (complex(v) for v in (cp.x, cp.y, cp.z))
    out = np.empty(P.N, dtype=complex)
    out[0] = 1
    for j in range(1, P.N):
        den = 1 - (x / z) * P.zpow(j)
        if abs(den) < 1e-300:
            raise ValueError(f"omega: vanishing denominator at j = {j}")
        out[j] = out[j - 1] * (y / z) / den
    return out


def delta(n: int, P: CyclicParams) -> int:
    return int(int(n) % P.N == 0)


def bracket(x, P: CyclicParams) -> complex:
    x = complex(x)
    if abs(x - 1) < 1e-14:
        return 1 + 0j
    return (1 - x ** P.N) / (P.N * (1 - x))


def bracket_delta(v, P: CyclicParams):
    """delta(n) for an integer argument, [x] otherwise."""
    if isinstance(v, (int, np.integer)):
        return delta(v, P)
    return bracket(v, P)


def _phase_grid(P: CyclicParams):
    a = np.arange(P.N)
    A, D = np.meshgrid(a, a, indexing="ij")
    return (A * D + P.half * A * A) % P.N  # exponent of alpha delta + alpha^2 / 2


def r_matrix(cp: CurvePoint, P: CyclicParams, inverse: bool = False) -> np.ndarray:
    N = P.N
    x, z = complex(cp.x), complex(cp.z)
    hz = h_func(z / x, P)
    zt = P.zeta_table
    expo = _phase_grid(P)
    out = np.zeros((N, N, N, N), dtype=complex)
    if not inverse:
        om = omega_table(cp, P)
        for al in range(N):
            for ga in range(N):
                for de in range(N):
                    be = (ga + de) % N
                    out[al, be, ga, de] = hz * zt[expo[al, de]] * om[(ga - al) % N]
    else:
        om = omega_table(CurvePoint(x / P.zeta, cp.y, cp.z), P)
        pref = bracket(x / z, P) / hz
        for al in range(N):
            for ga in range(N):
                for de in range(N):
                    be = (ga + de) % N
                    out[al, be, ga, de] = pref * zt[(-expo[al, de]) % N] / om[(ga - al) % N]
    return out


def rr_bar(R: np.ndarray, Rbar: np.ndarray) -> np.ndarray:
    """sum_{gamma, delta} R[a, b, g, d] Rbar[a', b', g, d] as an (N, N, N, N) array."""
    return np.einsum("abgd,ABgd->abAB", R, Rbar)


def roots(w: ModularTriple, P: CyclicParams, scale: complex = 1.0, shift=(0, 0, 0)) -> tuple:
    """N-th roots of the p-vector scaled by ``scale``.

    Each root is the principal root of p_i times one common root of
    ``scale``, so rescaling never reorders the roots relative to each other;
    ``shift`` then multiplies root i by zeta^shift[i].
    """
    mu = cmath.exp(cmath.log(complex(scale)) / P.N)
    out = []
    for i, pi in enumerate(w.p_vector()):
        r = cmath.exp(cmath.log(complex(pi)) / P.N) * mu
        out.append(r * P.zpow(shift[i]))
    return tuple(out)


def curve_point(w: ModularTriple, P: CyclicParams, scale: complex = 1.0, shift=(0, 0, 0),
                prime=None) -> CurvePoint:
    p0, p1, p2 = roots(w, P, scale, shift) if prime is None else prime
    return CurvePoint(p1, p0, -p2)


def tet_tensor(w: ModularTriple, star_b: int, P: CyclicParams, scale: complex = 1.0, shift=(0, 0, 0),
               prime=None):
    """``prime`` overrides the root determination with explicit (p0', p1', p2')."""
    return r_matrix(curve_point(w, P, scale, shift, prime), P, inverse=star_b < 0)


def charge_prime(c: int, P: CyclicParams) -> int:
    return (P.half * int(c)) % P.N


def sym_tensor(w: ModularTriple, star_b: int, c, P: CyclicParams, scale: complex = 1.0,
               shift=(0, 0, 0), prime=None) -> np.ndarray:
    if sum(c[j] for j in range(3)) != 1:
        raise ValueError(f"charge {tuple(c[j] for j in range(3))} does not sum to 1")
    N = P.N
    p0, p1, p2 = roots(w, P, scale, shift) if prime is None else prime
    cp = CurvePoint(p1, p0, -p2)
    base = r_matrix(cp, P, inverse=star_b < 0)
    c0p, c1p = charge_prime(c[0], P), charge_prime(c[1], P)
    pref = ((-p1 / p2) ** (-int(c[1])) * (-p2 / p0) ** int(c[0])) ** P.p
    idx = np.arange(N)
    al = idx[:, None, None, None]
    be = idx[None, :, None, None]
    ga = idx[None, None, :, None]
    de = idx[None, None, None, :]
    phase = P.zeta_table[(c1p * (ga - al)) % N]
    if star_b > 0:
        # R'[a, b, g, d] = R[a, b - c0', g - c0', d]
        shifted = base[al, (be - c0p) % N, (ga - c0p) % N, de]
    else:
        # Rbar'[a, b, g, d] = Rbar[a, b + c0', g + c0', d]
        shifted = base[al, (be + c0p) % N, (ga + c0p) % N, de]
    return pref * phase * shifted


def ts_matrices(P: CyclicParams):
    N = P.N
    g1 = P.g1
    nu = g1 / abs(g1)
    T = np.zeros((N, N), dtype=complex)
    for m in range(N):
        T[m, (-m) % N] = nu * P.zpow(P.half * m * m)
    m = np.arange(N)
    S = P.zeta_table[np.outer(m, m) % N] / math.sqrt(N)
    return T, S


# Leg transforms realising the vertex transpositions (01), (12), (23) on a
# positively oriented tetrahedron: tensor of the transposed tetrahedron, with
# its axes read on the original faces, equals the original tensor with these
# matrices applied per axis (up to +-zeta^Z).  Negative tetrahedra use the
# inverses.
TRANSPOSITION_LEGS = {
    (0, 1): ("T^-1", None, "T", None),
    (1, 2): ("S^-1", None, None, "T"),
    (2, 3): (None, "S^-1", None, "S"),
}


def symmetry_legs(transposition, star_b: int, P: CyclicParams) -> list:
    T, S = ts_matrices(P)
    mats = {"T": T, "T^-1": np.linalg.inv(T), "S": S, "S^-1": np.linalg.inv(S)}
    inverse = {"T": "T^-1", "T^-1": "T", "S": "S^-1", "S^-1": "S"}
    out = []
    for name in TRANSPOSITION_LEGS[tuple(transposition)]:
        if name is None:
            out.append(np.eye(P.N))
        else:
            out.append(mats[name if star_b > 0 else inverse[name]])
    return out


def apply_legs(A: np.ndarray, mats) -> np.ndarray:
    """Contract matrix k with axis k of A: out[.., m, ..] = sum_n M[m, n] A[.., n, ..]."""
    out = A
    for k, M in enumerate(mats):
        out = np.moveaxis(np.tensordot(M, out, axes=([1], [k])), 0, k)
    return out


def phase_class(a: complex, P: CyclicParams) -> tuple:
    """(|a|, arg(a) mod pi/N): the data invariant under +-zeta^Z."""
    step = math.pi / P.N
    r = cmath.phase(a) % step
    if step - r < 1e-12:
        r = 0.0
    return abs(a), r


def phase_equal(a: complex, b: complex, P: CyclicParams, tol: float = 1e-8) -> bool:
    a, b = complex(a), complex(b)
    if b == 0:
        raise ValueError("phase_equal: b = 0")
    if abs(abs(a) - abs(b)) / abs(b) >= tol:
        return False
    k = cmath.phase(a / b) * P.N / math.pi
    return abs(k - round(k)) < tol * P.N


def phase_factor(A: np.ndarray, B: np.ndarray, P: CyclicParams, tol: float = 1e-8):
    """The k with A = (+-zeta)^k B entrywise (A = exp(i pi k / N) B), or None."""
    A = np.asarray(A).ravel()
    B = np.asarray(B).ravel()
    scale = max(np.abs(A).max(), np.abs(B).max(), 1e-300)
    i = int(np.argmax(np.abs(B)))
    if abs(B[i]) < 1e-300:
        return 0 if np.abs(A).max() <= tol * scale else None
    ratio = A[i] / B[i]
    k = cmath.phase(ratio) * P.N / math.pi
    kr = round(k)
    if abs(abs(ratio) - 1) > tol or abs(k - kr) > tol * P.N:
        return None
    lam = cmath.exp(1j * math.pi * kr / P.N)
    if np.abs(A - lam * B).max() > tol * scale:
        return None
    return kr % (2 * P.N)


def asymptotic_ratio(cp: CurvePoint, n: int, P: CyclicParams) -> complex:
    """LHS / RHS of the large-N approximation of g(z/x) omega(x, y, z | n)."""
    x, y, z = (complex(v) for v in (cp.x, cp.y, cp.z))
    N = P.N
    lhs = g_func(z / x, P) * omega(cp, n, P)
    lg = cmath.log(x / z)
    expo = li2((x / z) * P.zpow(n)) + lg ** 2 - math.pi * lg + math.pi ** 2
    rhs = (y / z) ** n * cmath.exp(N / (2j * math.pi) * expo)
    return lhs / rhs
