"""Cocycles on branched triangulations and their idealization.

A cocycle stores one MobiusElement per quotient edge, read from the smaller
to the larger endpoint label.  On every face with ordered vertices i < j < k
the products satisfy z(ij) z(jk) = z(ik) in PSL(2, C).

A tetrahedron with ordered vertices v0 < v1 < v2 < v3 is idealized at the
points u0 = 0, u1 = z01(0), u2 = z01 z12(0), u3 = z01 z12 z23(0); the modulus
w0 sits on the edges v0v1 and v2v3, w1 on v1v2 and v0v3, w2 on v0v2 and v1v3.
"""

from __future__ import annotations

import cmath
import itertools
from dataclasses import dataclass, field

import numpy as np

from .complex3 import (
    FACE_VERTICES,
    LOCAL_EDGES,
    BranchedTriangulation,
    MoveDescriptor,
    MoveResult,
    apply_move_tracked,
    local_edge,
)
from .moebius import MobiusElement, is_infinite, mobius_act, mobius_compose

# modulus type carried by each local edge (index into LOCAL_EDGES)
EDGE_TYPE = tuple({(0, 1): 0, (2, 3): 0, (1, 2): 1, (0, 3): 1, (0, 2): 2, (1, 3): 2}[e] for e in LOCAL_EDGES)


class NotIdealizableError(ValueError):
    pass


class TransitError(ValueError):
    pass


@dataclass(frozen=True)
class ModularTriple:
    w0: complex
    w1: complex
    w2: complex
    star_w: int

    @classmethod
    def from_w0(cls, w0: complex) -> "ModularTriple":
        w0 = complex(w0)
        if w0 == 0 or w0 == 1 or not cmath.isfinite(w0):
            raise NotIdealizableError(f"degenerate modulus {w0}")
        if w0.imag == 0.0:
            raise NotIdealizableError(f"real modulus {w0}: degenerate ideal tetrahedron")
        w1 = 1 / (1 - w0)
        w2 = 1 / (1 - w1)
        return cls(w0, w1, w2, 1 if w0.imag > 0 else -1)

    @classmethod
    def from_type(cls, j: int, value: complex) -> "ModularTriple":
        """Triple whose j-th modulus equals ``value``."""
        w = complex(value)
        for _ in range((3 - j) % 3):
            w = 1 / (1 - w)
        return cls.from_w0(w)

    def __getitem__(self, j):
        return (self.w0, self.w1, self.w2)[j]

    def as_tuple(self):
        return (self.w0, self.w1, self.w2)

    def p_vector(self) -> tuple:
        """Normalised (p0, p1, p2) with w_j = -p_{j+1}/p_{j+2} and p2 = 1."""
        return (self.w0 * self.w2, -self.w0, 1 + 0j)

    def conjugate(self) -> "ModularTriple":
        return ModularTriple.from_w0(self.w0.conjugate())

    def defect(self) -> float:
        w = self.as_tuple()
        d = abs(w[0] * w[1] * w[2] + 1)
        for j in range(3):
            d = max(d, abs(w[(j + 1) % 3] - 1 / (1 - w[j])))
        return d


def cross_ratio(u0, u1, u2, u3) -> ModularTriple:
    pts = [complex(u) for u in (u0, u1, u2, u3)]
    if any(is_infinite(u) for u in pts):
        raise NotIdealizableError("a vertex is at infinity")
    scale = max(1.0, max(abs(u) for u in pts))
    for a, b in itertools.combinations(pts, 2):
        if abs(a - b) <= 1e-12 * scale:
            raise NotIdealizableError(f"coincident points {pts}")
    w0 = (pts[2] - pts[1]) * (pts[3] - pts[0]) / ((pts[2] - pts[0]) * (pts[3] - pts[1]))
    if abs(w0.imag) <= 1e-13 * max(1.0, abs(w0)):
        raise NotIdealizableError(f"points {pts} are concyclic; modulus {w0} is real")
    return ModularTriple.from_w0(w0)


def permute_tet(w: ModularTriple, perm) -> ModularTriple:
    """Rename vertices by ``perm`` (old vertex k becomes vertex perm[k]);
    every edge value is raised to the signature of perm."""
    perm = tuple(perm)
    eps = permutation_sign(perm)
    inv = [0] * 4
    for k, v in enumerate(perm):
        inv[v] = k
    old_type = EDGE_TYPE[local_edge(inv[0], inv[1])]
    return ModularTriple.from_w0(w[old_type] ** eps)


def permutation_sign(perm) -> int:
    perm = list(perm)
    sign = 1
    for i in range(len(perm)):
        for j in range(i + 1, len(perm)):
            if perm[i] > perm[j]:
                sign = -sign
    return sign


def is_geometric(w: ModularTriple, star_b: int) -> bool:
    return w.star_w == star_b


# -- cocycles -------------------------------------------------------------------


def trivial_cocycle(T: BranchedTriangulation) -> tuple:
    return tuple(MobiusElement.identity() for _ in range(T.num_edges))


def path_value(T, z, tet, i, j) -> MobiusElement:
    """Holonomy from local vertex i to local vertex j of ``tet``."""
    m = z[T.tet_edge(tet, i, j)]
    return m if i < j else m.inverse()


def face_defects(T: BranchedTriangulation, z) -> float:
    worst = 0.0
    ident = np.eye(2)
    for t in range(T.num_tetrahedra):
        for f in range(4):
            i, j, k = FACE_VERTICES[f]
            prod = mobius_compose(mobius_compose(path_value(T, z, t, i, j), path_value(T, z, t, j, k)),
                                  path_value(T, z, t, k, i))
            mat = np.array([[prod.a, prod.b], [prod.c, prod.d]])
            worst = max(worst, min(np.abs(mat - ident).max(), np.abs(mat + ident).max()))
    return float(worst)


def check_cocycle(T, z, tol=1e-8):
    if len(z) != T.num_edges:
        raise ValueError(f"cocycle has {len(z)} values for {T.num_edges} edges")
    d = face_defects(T, z)
    if d > tol:
        raise ValueError(f"cocycle condition violated by {d:.3g}")
    return d


def coboundary(T: BranchedTriangulation, z, cochain) -> tuple:
    """z'(u -> v) = c_u z(u -> v) c_v^{-1}."""
    out = []
    for e in range(T.num_edges):
        u, v = T.edge_endpoints(e)
        out.append(mobius_compose(mobius_compose(cochain[u], z[e]), cochain[v].inverse()))
    return tuple(out)


def conjugate_cocycle(z) -> tuple:
    return tuple(m.conjugate() for m in z)


# -- idealization ---------------------------------------------------------------


def tet_points(T, z, tet) -> tuple:
    z0 = path_value(T, z, tet, 0, 1)
    z1 = path_value(T, z, tet, 1, 2)
    z0p = path_value(T, z, tet, 2, 3)
    m01 = mobius_compose(z0, z1)
    return (0j, mobius_act(z0, 0), mobius_act(m01, 0), mobius_act(mobius_compose(m01, z0p), 0))


def idealize_tet(T: BranchedTriangulation, z, tet_id: int) -> ModularTriple:
    pts = tet_points(T, z, tet_id)
    try:
        return cross_ratio(*pts)
    except NotIdealizableError as exc:
        raise NotIdealizableError(f"tetrahedron {tet_id}: {exc}") from None


@dataclass(frozen=True)
class ITriangulation:
    base: BranchedTriangulation
    moduli: tuple

    @property
    def signs(self):
        return self.base.signs

    def modulus(self, tet: int, local: int) -> complex:
        """Modulus on local edge index ``local`` of ``tet``."""
        return self.moduli[tet][EDGE_TYPE[local]]


@dataclass
class CompatibilityReport:
    products: dict = field(default_factory=dict)
    max_deviation: float = 0.0
    tol: float = 1e-9

    @property
    def ok(self) -> bool:
        return self.max_deviation < self.tol


def edge_products(TI: ITriangulation) -> dict:
    T = TI.base
    signs = T.signs
    out = {}
    for e in range(T.num_edges):
        prod = 1 + 0j
        for t, le in T.edge_star(e):
            w = TI.modulus(t, le)
            prod *= w if signs[t] > 0 else 1 / w
        out[e] = prod
    return out


def check_edge_compatibility(TI: ITriangulation, tol: float = 1e-9) -> CompatibilityReport:
    T = TI.base
    if any((t, f) not in T.partner for t in range(T.num_tetrahedra) for f in range(4)):
        raise ValueError("edge compatibility needs a closed triangulation")
    prods = edge_products(TI)
    dev = max((abs(p - 1) for p in prods.values()), default=0.0)
    return CompatibilityReport(prods, dev, tol)


def idealize(T: BranchedTriangulation, z, tol: float = 1e-9) -> ITriangulation:
    moduli, bad = [], []
    for t in range(T.num_tetrahedra):
        try:
            moduli.append(idealize_tet(T, z, t))
        except NotIdealizableError as exc:
            bad.append(str(exc))
    if bad:
        raise NotIdealizableError("; ".join(bad))
    TI = ITriangulation(T, tuple(moduli))
    rep = check_edge_compatibility(TI, tol)
    if not rep.ok:
        raise NotIdealizableError(f"edge compatibility fails by {rep.max_deviation:.3g}")
    return TI


def _min_quality(TI: ITriangulation) -> float:
    return min(min(abs(w.imag) for w in m.as_tuple()) for m in TI.moduli)


def random_cochain(num_vertices: int, rng) -> list:
    """Elements with entries uniform in unit disks around the identity entries."""
    out = []
    for _ in range(num_vertices):
        while True:
            r = np.sqrt(rng.random(4))
            th = rng.random(4) * 2 * np.pi
            d = r * np.exp(1j * th)
            a, b, c, dd = 1 + d[0], d[1], d[2], 1 + d[3]
            if abs(a * dd - b * c) > 1e-2:
                out.append(MobiusElement(a, b, c, dd))
                break
    return out


def perturb_to_idealizable(T: BranchedTriangulation, z=None, seed: int = 0, budget: int = 100,
                           margin: float = 1e-3) -> tuple:
    """Coboundary-perturb ``z`` (default trivial) until every tetrahedron idealizes.

    An already idealizable ``z`` is returned unchanged.  ``margin`` bounds the
    imaginary parts of accepted moduli away from zero.
    """
    if z is None:
        z = trivial_cocycle(T)
    try:
        if _min_quality(idealize(T, z)) > margin:
            return tuple(z)
    except NotIdealizableError:
        pass
    rng = np.random.default_rng(seed)
    for _ in range(budget):
        c = random_cochain(T.num_vertices, rng)
        pts = [mobius_act(ci.inverse(), 0) for ci in c]
        if any(is_infinite(p) for p in pts) or min(
                abs(p - q) for p, q in itertools.combinations(pts, 2)) < 1e-3:
            continue
        zz = coboundary(T, z, c)
        try:
            TI = idealize(T, zz)
        except NotIdealizableError:
            continue
        if _min_quality(TI) > margin:
            return zz
    raise NotIdealizableError(f"no idealizable perturbation found in {budget} attempts")


# -- transits -----------------------------------------------------------------


def _solve_point(known: dict, order: tuple, target: complex, unknown):
    """Position of label ``unknown`` making the ordered cross-ratio equal ``target``."""

    def cr_parts(x):
        pts = [known[v] if v != unknown else x for v in order]
        num = (pts[2] - pts[1]) * (pts[3] - pts[0])
        den = (pts[2] - pts[0]) * (pts[3] - pts[1])
        return num, den

    n0, d0 = cr_parts(0j)
    n1, d1 = cr_parts(1 + 0j)
    denom = (n1 - n0) - target * (d1 - d0)
    if abs(denom) < 1e-300:
        raise TransitError("vertex would sit at infinity")
    return (target * d0 - n0) / denom


def _place_points(tets_w: list) -> dict:
    """Realise tetrahedra (labels, triple) on a common set of points.

    The first tetrahedron fixes three points at 0, 1, 2; later ones must share
    three labels with the points already placed.
    """
    labels, w = tets_w[0]
    pts = {labels[0]: 0j, labels[1]: 1 + 0j, labels[2]: 2 + 0j}
    pts[labels[3]] = _solve_point(pts, labels, w.w0, labels[3])
    for labels, w in tets_w[1:]:
        missing = [v for v in labels if v not in pts]
        if len(missing) > 1:
            raise TransitError("tetrahedra do not share a face")
        if missing:
            pts[missing[0]] = _solve_point(pts, labels, w.w0, missing[0])
    return pts


def transit_2_3_standard(x: complex, y: complex) -> tuple:
    """Moduli (w0 of the three new tetrahedra) in the standard configuration."""
    x, y = complex(x), complex(y)
    if abs(x - y) < 1e-14:
        raise TransitError("x == y")
    return (y / x, (1 - 1 / x) / (1 - 1 / y), (1 - x) / (1 - y))


def moduli_transit(TI: ITriangulation, mv: MoveDescriptor, tol: float = 1e-9):
    """Return (new ITriangulation, MoveResult)."""
    res = apply_move_tracked(TI.base, mv)
    return moduli_transit_from(TI, res, mv, tol), res


def moduli_transit_from(TI: ITriangulation, res: MoveResult, mv=None, tol: float = 1e-9) -> ITriangulation:
    T, newT = TI.base, res.triangulation
    moduli = [None] * newT.num_tetrahedra
    for old, new in res.tet_map.items():
        moduli[new] = TI.moduli[old]
    if res.kind in ("2-3", "3-2"):
        if res.kind == "2-3":
            A, B = res.removed
            if abs(TI.moduli[A].w0 - TI.moduli[B].w0) < 1e-14 and T.tetrahedra[A] == T.tetrahedra[B]:
                raise TransitError("x == y")
        olds = [(T.tetrahedra[t], TI.moduli[t]) for t in res.removed]
        try:
            pts = _place_points(olds)
        except ZeroDivisionError:
            raise TransitError("degenerate point configuration") from None
        for labels, w in olds[2:]:
            got = cross_ratio(*(pts[v] for v in labels))
            if abs(got.w0 - w.w0) > 1e-7 * max(1, abs(w.w0)):
                raise TransitError("moduli around the removed edge do not close up")
        for t in res.added:
            try:
                moduli[t] = cross_ratio(*(pts[v] for v in newT.tetrahedra[t]))
            except NotIdealizableError as exc:
                raise TransitError(f"{res.kind} transit fails: {exc}") from None
    elif res.kind == "bubble+":
        w = mv.option("modulus") if mv is not None else None
        if w is None:
            raise TransitError("bubble+ needs a modulus option")
        for t in res.added:
            moduli[t] = ModularTriple.from_w0(complex(w))
    elif res.kind == "0-2":
        P, Q = res.added
        tet = newT.tetrahedra[P]
        u, v = res.info["uvxy"][:2]
        le = local_edge(tet.index(u), tet.index(v))
        edge = newT.edge_of[(P, le)]
        prod = 1 + 0j
        sP = newT.signs[P]
        for t, l2 in newT.edge_star(edge):
            if t in (P, Q):
                continue
            m = moduli[t][EDGE_TYPE[l2]]
            prod *= m if newT.signs[t] > 0 else 1 / m
        val = (1 / prod) ** sP
        forced = ModularTriple.from_type(EDGE_TYPE[le], val)
        given = mv.option("modulus") if mv is not None else None
        if given is not None and abs(complex(given) - forced.w0) > 1e-7 * max(1, abs(forced.w0)):
            raise TransitError(f"0-2 modulus {given} incompatible with the forced value {forced.w0}")
        moduli[P] = moduli[Q] = forced
    newTI = ITriangulation(newT, tuple(moduli))
    rep = check_edge_compatibility(newTI, tol)
    if not rep.ok:
        raise TransitError(f"edge compatibility fails by {rep.max_deviation:.3g} after {res.kind}")
    return newTI


def cocycle_transit(T: BranchedTriangulation, z, mv: MoveDescriptor, rng=None):
    """Return (T', z', MoveResult); new edge values are forced by the face
    conditions, except for bubble+ where one value comes from the
    ``cochain_seed`` option (a MobiusElement) or the RNG."""
    res = apply_move_tracked(T, mv)
    return cocycle_transit_from(T, z, res, mv, rng)


def cocycle_transit_from(T, z, res: MoveResult, mv=None, rng=None):
    newT = res.triangulation
    zz = [None] * newT.num_edges
    for e, o in res.edge_origin.items():
        if o is not None:
            zz[e] = z[o]
    seeded = False
    while any(v is None for v in zz):
        progress = False
        for t in range(newT.num_tetrahedra):
            for f in range(4):
                i, j, k = FACE_VERTICES[f]
                eij, ejk, eik = newT.tet_edge(t, i, j), newT.tet_edge(t, j, k), newT.tet_edge(t, i, k)
                unknown = [e for e in (eij, ejk, eik) if zz[e] is None]
                if len(unknown) != 1:
                    continue
                if zz[eik] is None:
                    zz[eik] = mobius_compose(zz[eij], zz[ejk])
                elif zz[eij] is None:
                    zz[eij] = mobius_compose(zz[eik], zz[ejk].inverse())
                else:
                    zz[ejk] = mobius_compose(zz[eij].inverse(), zz[eik])
                progress = True
        if progress:
            continue
        if res.kind != "bubble+" or seeded:
            raise TransitError("cocycle transit is not determined by the face conditions")
        seed = mv.option("cochain_seed") if mv is not None else None
        if seed is None:
            if rng is None:
                rng = np.random.default_rng(mv.option("seed", 0) if mv is not None else 0)
            seed = random_cochain(1, rng)[0]
        e = next(e for e, v in enumerate(zz) if v is None)
        zz[e] = seed
        seeded = True
    zz = tuple(zz)
    check_cocycle(newT, zz)
    return newT, zz, res
