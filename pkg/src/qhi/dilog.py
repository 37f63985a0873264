"""Classical dilogarithms: Euler Li2, Rogers L, Bloch-Wigner D2 and the lift of
L to the abelian cover of C - {0, 1}.

All logarithms use the principal branch, arg in (-pi, pi].
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from fractions import Fraction

PI2_6 = math.pi ** 2 / 6


class BranchCutError(ValueError):
    """Argument lies on a branch cut (or at a pole) of the requested function."""


def _bernoulli_coefficients(n_terms: int) -> list[float]:
    # B_n / (n + 1)! for n = 0..n_terms-1, exact via Akiyama-Tanigawa.
    bern = []
    a = [Fraction(0)] * (n_terms + 1)
    for m in range(n_terms + 1):
        a[m] = Fraction(1, m + 1)
        for j in range(m, 0, -1):
            a[j - 1] = j * (a[j - 1] - a[j])
        bern.append(a[0])
    # Akiyama-Tanigawa gives B_1 = +1/2; the generating function here needs -1/2.
    bern[1] = -bern[1]
    return [float(b / math.factorial(n + 1)) for n, b in enumerate(bern[:n_terms])]


_BERN = _bernoulli_coefficients(40)


def _li2_series(z: complex) -> complex:
    total = 0j
    term = z
    n = 1
    while True:
        add = term / (n * n)
        total += add
        if abs(add) < 1e-17 * max(1.0, abs(total)) or n > 200:
            return total
        n += 1
        term *= z


def _li2_bernoulli(z: complex) -> complex:
    # Li2(z) = sum_n B_n u^(n+1)/(n+1)!,  u = -log(1-z); converges for |u| < 2 pi.
    u = -cmath.log(1 - z)
    u2 = u * u
    total = u * _BERN[0] + u2 * _BERN[1]
    power = u
    for n in range(2, len(_BERN), 2):
        # odd Bernoulli numbers beyond B_1 vanish
        power *= u2
        add = _BERN[n] * power
        total += add
        if abs(add) < 1e-17 * max(1.0, abs(total)):
            break
    return total


def li2(z: complex) -> complex:
    """Euler dilogarithm on its principal sheet, C minus the cut (1, +inf)."""
    z = complex(z)
    if not (cmath.isfinite(z)):
        raise ValueError(f"li2: non-finite argument {z}")
    if z.imag == 0.0 and z.real > 1.0:
        raise BranchCutError(f"li2: argument {z} on the branch cut (1, +inf)")
    if z == 0:
        return 0j
    if z == 1:
        return complex(PI2_6)
    if abs(z) <= 0.5:
        return _li2_series(z)
    if abs(z) > 1.0:
        # Inversion; 1/z stays off (1, +inf) because z does.
        lg = cmath.log(-z)
        return -PI2_6 - 0.5 * lg * lg - li2(1 / z)
    if z.real > 0.5:
        # Reflection into the region Re < 1/2 of the unit disk.
        w = 1 - z
        return PI2_6 - cmath.log(z) * cmath.log(w) - li2(w)
    return _li2_bernoulli(z)


def rogers_l(x: complex) -> complex:
    """Rogers dilogarithm normalised so that L(1) = 0, analytic on
    C - ((-inf, 0) u (1, +inf))."""
    x = complex(x)
    if x.imag == 0.0 and (x.real < 0.0 or x.real > 1.0):
        raise BranchCutError(f"rogers_l: argument {x} on a cut")
    if x == 0:
        return complex(-PI2_6)
    if x == 1:
        return 0j
    return -PI2_6 + 0.5 * cmath.log(x) * cmath.log(1 - x) + li2(x)


def bloch_wigner(z: complex) -> float:
    """Bloch-Wigner dilogarithm D2(z) = Im Li2(z) + arg(1 - z) log|z|."""
    z = complex(z)
    if z == 0 or z == 1:
        raise ValueError(f"bloch_wigner: undefined at {z}")
    if z.imag == 0.0:
        return 0.0
    if abs(z) > 1.0:
        return -bloch_wigner(1 / z)
    return li2(z).imag + cmath.phase(1 - z) * math.log(abs(z))


@dataclass(frozen=True)
class CoverPoint:
    """A point (x; p, q) of the abelian cover, x in the cut plane."""

    x: complex
    p: int
    q: int

    def __post_init__(self):
        x = complex(self.x)
        if x == 0 or x == 1:
            raise ValueError(f"CoverPoint: x must avoid 0 and 1, got {x}")
        if x.imag == 0.0 and (x.real < 0.0 or x.real > 1.0):
            raise BranchCutError(f"CoverPoint: x = {x} on a cut")
        object.__setattr__(self, "x", x)


def lifted_rogers(pt: CoverPoint) -> complex:
    """R(x; p, q) = L(x) + (i pi / 2) (p log(1 - x) + q log x), meaningful mod pi^2."""
    x = pt.x
    return rogers_l(x) + 0.5j * math.pi * (pt.p * cmath.log(1 - x) + pt.q * cmath.log(x))


def _check_flattened(w, f, tol: float = 1e-9):
    ws = (w.w0, w.w1, w.w2)
    s = sum(cmath.log(x) for x in ws) + 1j * math.pi * sum(int(v) for v in f)
    if abs(s) > tol:
        raise ValueError(f"{tuple(int(v) for v in f)} is not a flattening of w0 = {ws[0]}")


def tet_rogers(w, f) -> complex:
    """R(w0; f0, f1) for a flattened modular triple ``w`` (any object with
    w0, w1, w2)."""
    _check_flattened(w, f)
    return lifted_rogers(CoverPoint(w.w0, int(f[0]), int(f[1])))


def tet_volume(w, star_b: int) -> float:
    """Signed volume contribution star_b * D2(w0)."""
    w0 = complex(w.w0)
    if w0 in (0, 1):
        raise ValueError(f"degenerate modulus {w0}")
    return star_b * bloch_wigner(w0)


def congruent_mod(a: complex, b: complex, modulus: float, tol: float = 1e-10) -> bool:
    """True when a - b is (within tol) a real integer multiple of modulus."""
    if modulus <= 0 or tol <= 0:
        raise ValueError("modulus and tol must be positive")
    d = complex(a) - complex(b)
    if abs(d.imag) >= tol:
        return False
    k = d.real / modulus
    return abs(k - round(k)) < tol


def residue_mod(value: complex, modulus: float = PI2_6, snap: float = 1e-12) -> complex:
    """Representative with real part in [0, modulus); values within ``snap``
    (relative) of a multiple of the modulus map to 0.  Display only."""
    value = complex(value)
    re = math.fmod(value.real, modulus)
    if re < 0:
        re += modulus
    if re >= modulus or modulus - re <= snap * max(1.0, abs(value.real)):
        re -= modulus
    if abs(re) <= snap * max(1.0, abs(value.real)):
        re = 0.0
    return complex(re, value.imag)
