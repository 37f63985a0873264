"""The dilogarithmic invariant: a signed sum of lifted Rogers dilogarithms."""

from __future__ import annotations

import cmath
import hashlib
import math
from dataclasses import dataclass, field

from .dilog import PI2_6, congruent_mod, residue_mod, tet_rogers
from .idealizer import ITriangulation
from .moebius import MobiusElement, mobius_compose


@dataclass(frozen=True)
class InvariantValue:
    value: complex
    modulus: float = PI2_6
    metadata: dict = field(default_factory=dict, compare=False, hash=False)

    def congruent(self, other, tol: float = 1e-8) -> bool:
        v = other.value if isinstance(other, InvariantValue) else other
        return congruent_mod(self.value, v, self.modulus, tol)

    def residue(self) -> complex:
        return residue_mod(self.value, self.modulus)


def decoration_hash(F) -> str:
    raw = ";".join(",".join(str(v) for v in f.as_tuple()) for f in F)
    return hashlib.sha256(raw.encode()).hexdigest()[:12]


def rogers_sum(TI: ITriangulation, F) -> InvariantValue:
    T = TI.base
    if len(F) != T.num_tetrahedra:
        raise ValueError(f"{len(F)} flattening triples for {T.num_tetrahedra} tetrahedra")
    total = 0j
    for t in range(T.num_tetrahedra):  # fixed order keeps the sum bit-stable
        total += T.signs[t] * tet_rogers(TI.moduli[t], F[t])
    return InvariantValue(total, PI2_6, {"name": T.name, "decoration": decoration_hash(F)})


def loop_holonomy(T, z, loop) -> MobiusElement:
    """Product of cocycle values along a closed vertex path [v0, v1, ..., v0].

    Each step uses the unique edge between consecutive vertices, or an
    explicit edge id when the step is given as (vertex, edge).
    """
    steps = []
    for k in range(len(loop) - 1):
        a, b = loop[k], loop[k + 1]
        e = None
        if isinstance(b, tuple):
            b, e = b
        if isinstance(a, tuple):
            a = a[0]
        if e is None:
            cand = T.edges_with_endpoints(min(a, b), max(a, b))
            if len(cand) != 1:
                raise ValueError(f"{len(cand)} edges join {a} and {b}; give the edge id")
            e = cand[0]
        u, v = T.edge_endpoints(e)
        if {u, v} != {a, b}:
            raise ValueError(f"edge {e} does not join {a} and {b}")
        m = z[e]
        steps.append(m if (u, v) == (a, b) else m.inverse())
    out = MobiusElement.identity()
    for m in steps:
        out = mobius_compose(out, m)
    return out


def link_rogers(T, z, loop, TI: ITriangulation, F):
    """(value, trace used): rogers_sum + (i pi / 2) log Tr of the loop holonomy.

    The trace is that of the stored determinant-one representatives, so its
    sign is the lift fixed by those representatives.
    """
    tr = loop_holonomy(T, z, loop).trace()
    if abs(tr) < 1e-12:
        raise ValueError("holonomy trace vanishes; log undefined")
    base = rogers_sum(TI, F)
    return base.value + 0.5j * math.pi * cmath.log(tr), tr


def export_formal_class(TI: ITriangulation, D) -> list:
    """Sorted (sign, w0, decoration) entries, one per tetrahedron."""
    out = []
    for t in range(TI.base.num_tetrahedra):
        w0 = TI.moduli[t].w0
        out.append((int(TI.base.signs[t]), complex(round(w0.real, 12), round(w0.imag, 12)),
                    tuple(int(v) for v in D[t].as_tuple())))
    out.sort(key=lambda e: (e[0], e[1].real, e[1].imag, e[2]))
    return out
