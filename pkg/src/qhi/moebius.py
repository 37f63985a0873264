"""PSL(2, C) elements acting on the Riemann sphere."""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

INF = complex("inf")  # stands for the point at infinity


def is_infinite(pt) -> bool:
    return pt is None or (isinstance(pt, complex) and not cmath.isfinite(pt)) or (
        isinstance(pt, float) and math.isinf(pt)
    )


@dataclass(frozen=True)
class MobiusElement:
    """A determinant-one representative of a PSL(2, C) class.

    Construction renormalises to det = 1 and fixes the global sign so the
    first nonzero entry has argument in (-pi/2, pi/2].
    """

    a: complex
    b: complex
    c: complex
    d: complex

    def __post_init__(self):
        a, b, c, d = (complex(v) for v in (self.a, self.b, self.c, self.d))
        det = a * d - b * c
        if abs(det) < 1e-300:
            raise ValueError("singular matrix")
        s = cmath.sqrt(det)
        a, b, c, d = a / s, b / s, c / s, d / s
        for v in (a, b, c, d):
            if abs(v) > 1e-14:
                ph = cmath.phase(v)
                if not (-math.pi / 2 < ph <= math.pi / 2):
                    a, b, c, d = -a, -b, -c, -d
                break
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "d", d)

    @classmethod
    def identity(cls) -> "MobiusElement":
        return cls(1, 0, 0, 1)

    @classmethod
    def translation(cls, t: complex) -> "MobiusElement":
        return cls(1, t, 0, 1)

    @classmethod
    def from_rows(cls, rows) -> "MobiusElement":
        (a, b), (c, d) = rows
        return cls(a, b, c, d)

    def entries(self) -> tuple[complex, complex, complex, complex]:
        return (self.a, self.b, self.c, self.d)

    def det(self) -> complex:
        return self.a * self.d - self.b * self.c

    def trace(self) -> complex:
        return self.a + self.d

    def inverse(self) -> "MobiusElement":
        return MobiusElement(self.d, -self.b, -self.c, self.a)

    def conjugate(self) -> "MobiusElement":
        """Entrywise complex conjugate (the conjugate character)."""
        return MobiusElement(*(v.conjugate() for v in self.entries()))

    def __matmul__(self, other: "MobiusElement") -> "MobiusElement":
        return mobius_compose(self, other)

    def __call__(self, pt):
        return mobius_act(self, pt)

    def to_pairs(self) -> list[list[float]]:
        """Row-major [re, im] pairs, the bundle serialisation."""
        return [[v.real, v.imag] for v in self.entries()]

    @classmethod
    def from_pairs(cls, pairs) -> "MobiusElement":
        if len(pairs) != 4:
            raise ValueError("expected four [re, im] pairs")
        vals = [complex(float(re), float(im)) for re, im in pairs]
        return cls(*vals)


def mobius_compose(m1: MobiusElement, m2: MobiusElement) -> MobiusElement:
    """Matrix product m1 * m2 (apply m2 first)."""
    return MobiusElement(
        m1.a * m2.a + m1.b * m2.c,
        m1.a * m2.b + m1.b * m2.d,
        m1.c * m2.a + m1.d * m2.c,
        m1.c * m2.b + m1.d * m2.d,
    )


def mobius_act(m: MobiusElement, pt):
    """(a pt + b) / (c pt + d) with the usual conventions at infinity."""
    if is_infinite(pt):
        if m.c == 0:
            return INF
        return m.a / m.c
    pt = complex(pt)
    den = m.c * pt + m.d
    if den == 0:
        return INF
    return (m.a * pt + m.b) / den


def psl_equal(m1: MobiusElement, m2: MobiusElement, tol: float = 1e-9) -> bool:
    e1, e2 = m1.entries(), m2.entries()
    if all(abs(x - y) < tol for x, y in zip(e1, e2)):
        return True
    return all(abs(x + y) < tol for x, y in zip(e1, e2))
