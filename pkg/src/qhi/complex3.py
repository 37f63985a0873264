"""Branched quasi-regular triangulations of closed oriented 3-manifolds.

A triangulation is a list of abstract tetrahedra, each given by four global
vertex labels in increasing order, plus face pairings.  The branching is the
one induced by the total order of the labels, so every gluing is the unique
label-preserving map between two faces.  Local vertex k of a tetrahedron is
its k-th smallest label; face k is the face opposite local vertex k.
"""

from __future__ import annotations

import itertools
from collections import defaultdict
from dataclasses import dataclass, field, replace
from functools import cached_property

# local edge index -> (i, j); the order fixes canonical edge ids
LOCAL_EDGES = ((0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3))
LOCAL_EDGE_INDEX = {pair: k for k, pair in enumerate(LOCAL_EDGES)}
FACE_VERTICES = tuple(tuple(i for i in range(4) if i != k) for k in range(4))


class TriangulationError(ValueError):
    pass


class MoveError(TriangulationError):
    pass


def local_edge(i: int, j: int) -> int:
    return LOCAL_EDGE_INDEX[(min(i, j), max(i, j))]


@dataclass(frozen=True, order=True)
class FacePairing:
    tet_a: int
    face_a: int
    tet_b: int
    face_b: int

    def normalized(self) -> "FacePairing":
        if (self.tet_a, self.face_a) <= (self.tet_b, self.face_b):
            return self
        return FacePairing(self.tet_b, self.face_b, self.tet_a, self.face_a)


class _UnionFind:
    def __init__(self, items):
        self.parent = {x: x for x in items}

    def find(self, x):
        root = x
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[x] != root:
            self.parent[x], x = root, self.parent[x]
        return root

    def union(self, x, y):
        rx, ry = self.find(x), self.find(y)
        if rx != ry:
            if ry < rx:
                rx, ry = ry, rx
            self.parent[ry] = rx


@dataclass(frozen=True)
class BranchedTriangulation:
    """Immutable branched triangulation.

    ``hamiltonian`` holds canonical edge ids; ``orientation`` is the sign
    given to tetrahedron 0 (the rest follow through the gluings).
    """

    num_vertices: int
    tetrahedra: tuple
    pairings: tuple
    hamiltonian: tuple | None = None
    orientation: int = 1
    name: str = ""

    def __post_init__(self):
        tets = tuple(tuple(int(v) for v in t) for t in self.tetrahedra)
        for t in tets:
            if len(t) != 4 or any(t[k] >= t[k + 1] for k in range(3)):
                raise TriangulationError(f"tetrahedron {t} must list 4 strictly increasing labels")
        pairs = tuple(sorted(FacePairing(*map(int, (p.tet_a, p.face_a, p.tet_b, p.face_b))).normalized()
                             for p in self.pairings))
        object.__setattr__(self, "tetrahedra", tets)
        object.__setattr__(self, "pairings", pairs)
        if self.hamiltonian is not None:
            object.__setattr__(self, "hamiltonian", tuple(sorted(int(e) for e in self.hamiltonian)))
        if self.orientation not in (1, -1):
            raise TriangulationError("orientation must be +1 or -1")

    # -- incidence ---------------------------------------------------------

    @property
    def num_tetrahedra(self) -> int:
        return len(self.tetrahedra)

    @cached_property
    def partner(self) -> dict:
        """(tet, face) -> (tet', face') for every paired abstract face."""
        out = {}
        for p in self.pairings:
            a, b = (p.tet_a, p.face_a), (p.tet_b, p.face_b)
            if a in out or b in out or a == b:
                raise TriangulationError(f"abstract face paired twice: {p}")
            for t, f in (a, b):
                if not (0 <= t < len(self.tetrahedra) and 0 <= f < 4):
                    raise TriangulationError(f"pairing {p} refers to a missing face")
            out[a] = b
            out[b] = a
        return out

    @cached_property
    def face_id(self) -> dict:
        """(tet, face) -> index of its pairing (the quotient face id)."""
        out = {}
        for k, p in enumerate(self.pairings):
            out[(p.tet_a, p.face_a)] = k
            out[(p.tet_b, p.face_b)] = k
        return out

    def face_labels(self, face: int) -> tuple:
        p = self.pairings[face]
        t = self.tetrahedra[p.tet_a]
        return tuple(t[i] for i in FACE_VERTICES[p.face_a])

    @cached_property
    def _quotient(self):
        partner = self.partner
        abstract_edges = [(t, e) for t in range(len(self.tetrahedra)) for e in range(6)]
        uf_e = _UnionFind(abstract_edges)
        uf_v = _UnionFind([(t, k) for t in range(len(self.tetrahedra)) for k in range(4)])
        for (t, f), (s, g) in partner.items():
            fa, fb = FACE_VERTICES[f], FACE_VERTICES[g]
            for i in range(3):
                uf_v.union((t, fa[i]), (s, fb[i]))
            for i, j in ((0, 1), (0, 2), (1, 2)):
                uf_e.union((t, local_edge(fa[i], fa[j])), (s, local_edge(fb[i], fb[j])))
        classes = defaultdict(list)
        for a in abstract_edges:
            classes[uf_e.find(a)].append(a)
        ordered = sorted((sorted(v) for v in classes.values()), key=lambda c: c[0])
        edge_of = {}
        for k, members in enumerate(ordered):
            for a in members:
                edge_of[a] = k
        vclasses = defaultdict(list)
        for t in range(len(self.tetrahedra)):
            for k in range(4):
                vclasses[uf_v.find((t, k))].append((t, k))
        return ordered, edge_of, list(vclasses.values()), uf_v

    @property
    def num_edges(self) -> int:
        return len(self._quotient[0])

    def edge_star(self, edge: int) -> list:
        """Abstract edges (tet, local edge) identified to ``edge``."""
        return list(self._quotient[0][edge])

    @property
    def edge_of(self) -> dict:
        """(tet, local edge) -> canonical edge id."""
        return self._quotient[1]

    def tet_edge(self, tet: int, i: int, j: int) -> int:
        """Quotient edge through local vertices i, j of ``tet``."""
        return self._quotient[1][(tet, local_edge(i, j))]

    def edge_endpoints(self, edge: int) -> tuple:
        t, e = self._quotient[0][edge][0]
        i, j = LOCAL_EDGES[e]
        return (self.tetrahedra[t][i], self.tetrahedra[t][j])

    def edges_with_endpoints(self, u: int, v: int) -> list:
        u, v = min(u, v), max(u, v)
        return [e for e in range(self.num_edges) if self.edge_endpoints(e) == (u, v)]

    @cached_property
    def signs(self) -> tuple:
        """Branching sign of every tetrahedron; None where orientability fails."""
        n = len(self.tetrahedra)
        if n == 0:
            return ()
        sign = [0] * n
        partner = self.partner
        bad = False
        for start in range(n):
            if sign[start]:
                continue
            sign[start] = self.orientation if start == 0 else 1
            stack = [start]
            while stack:
                t = stack.pop()
                for f in range(4):
                    if (t, f) not in partner:
                        continue
                    s, g = partner[(t, f)]
                    want = -sign[t] * (-1) ** (f + g)
                    if sign[s] == 0:
                        sign[s] = want
                        stack.append(s)
                    elif sign[s] != want:
                        bad = True
        return None if bad else tuple(sign)

    def edge_cycle(self, edge: int) -> list:
        """Cyclic walk around ``edge``: list of (tet, in_face, out_face).

        Consecutive entries are glued along (tet, out_face) -> (next tet, in_face).
        """
        star = self._quotient[0][edge]
        t0, e0 = star[0]
        i, j = LOCAL_EDGES[e0]
        others = [k for k in range(4) if k not in (i, j)]
        # faces of t0 containing the edge are those opposite the other two vertices
        in_face, out_face = others[1], others[0]
        labels = (self.tetrahedra[t0][i], self.tetrahedra[t0][j])
        walk = []
        t = t0
        for _ in range(len(star) + 1):
            walk.append((t, in_face, out_face))
            s, g = self.partner[(t, out_face)]
            tet = self.tetrahedra[s]
            ii, jj = tet.index(labels[0]), tet.index(labels[1])
            rest = [k for k in range(4) if k not in (ii, jj)]
            nxt_out = rest[0] if rest[1] == g else rest[1]
            t, in_face, out_face = s, g, nxt_out
            if (t, in_face) == (walk[0][0], walk[0][1]):
                return walk
        raise TriangulationError(f"edge {edge}: link is not a single cycle")


def tet_sign(T: BranchedTriangulation, tet_id: int) -> int:
    if not 0 <= tet_id < T.num_tetrahedra:
        raise IndexError(f"no tetrahedron {tet_id}")
    signs = T.signs
    if signs is None:
        raise TriangulationError("triangulation is not orientable")
    return signs[tet_id]


def reverse_orientation(T: BranchedTriangulation) -> BranchedTriangulation:
    return replace(T, orientation=-T.orientation)


# -- validation ----------------------------------------------------------------


@dataclass
class ValidationReport:
    counts: tuple = (0, 0, 0, 0)
    checks: dict = field(default_factory=dict)
    signs: tuple | None = None

    @property
    def valid(self) -> bool:
        return all(ok for ok, _ in self.checks.values())

    def add(self, name: str, ok: bool, detail: str = ""):
        self.checks[name] = (bool(ok), detail)


def validate_triangulation(T: BranchedTriangulation) -> ValidationReport:
    rep = ValidationReport()
    try:
        partner = T.partner
    except TriangulationError as exc:
        rep.add("pairings", False, str(exc))
        return rep
    rep.add("pairings", True)
    n = T.num_tetrahedra
    unpaired = [(t, f) for t in range(n) for f in range(4) if (t, f) not in partner]
    rep.add("closed", n > 0 and not unpaired,
            f"unpaired faces: {unpaired[:6]}" if unpaired else ("empty" if n == 0 else ""))
    mismatched = []
    for p in T.pairings:
        la = tuple(T.tetrahedra[p.tet_a][i] for i in FACE_VERTICES[p.face_a])
        lb = tuple(T.tetrahedra[p.tet_b][i] for i in FACE_VERTICES[p.face_b])
        if la != lb:
            mismatched.append(p)
    rep.add("branching", not mismatched,
            f"pairings between faces with unequal vertex triples: {mismatched[:4]}" if mismatched else "")
    ordered, edge_of, vclasses, uf_v = T._quotient
    loops = []
    for k, members in enumerate(ordered):
        t, e = members[0]
        i, j = LOCAL_EDGES[e]
        if uf_v.find((t, i)) == uf_v.find((t, j)):
            loops.append(k)
    rep.add("quasi_regular", not loops, f"edges with a single endpoint: {loops}" if loops else "")
    label_sets = [{T.tetrahedra[t][k] for t, k in cls} for cls in vclasses]
    labels_ok = all(len(s) == 1 for s in label_sets) and sorted(
        next(iter(s)) for s in label_sets) == list(range(T.num_vertices))
    rep.add("vertex_labels", labels_ok,
            "" if labels_ok else "quotient vertices do not match labels 0..num_vertices-1")
    signs = T.signs
    rep.add("orientable", signs is not None)
    rep.signs = signs
    nv, ne, nf = len(vclasses), len(ordered), len(T.pairings)
    rep.counts = (nv, ne, nf, n)
    if rep.checks["closed"][0] and not loops:
        # vertex links must be spheres: chi(link v) = #edges at v - #corners at v / 2
        corners = defaultdict(int)
        edges_at = defaultdict(int)
        for cls in vclasses:
            root = uf_v.find(cls[0])
            corners[root] = len(cls)
        for members in ordered:
            t, e = members[0]
            i, j = LOCAL_EDGES[e]
            edges_at[uf_v.find((t, i))] += 1
            edges_at[uf_v.find((t, j))] += 1
        bad = [r for r in corners if 2 * edges_at[r] - corners[r] != 4]
        rep.add("vertex_links", not bad, f"{len(bad)} vertex links are not spheres" if bad else "")
        chi = nv - ne + nf - n
        rep.add("euler_characteristic", chi == 0, f"chi = {chi}")
    if T.hamiltonian is not None:
        ok = all(0 <= e < ne for e in T.hamiltonian)
        detail = ""
        if ok:
            covered = set()
            for e in T.hamiltonian:
                covered.update(T.edge_endpoints(e))
            ok = covered == set(range(T.num_vertices))
            detail = "" if ok else f"vertices missed by H: {sorted(set(range(T.num_vertices)) - covered)}"
        else:
            detail = "hamiltonian refers to missing edges"
        rep.add("hamiltonian", ok, detail)
    return rep


def require_valid(T: BranchedTriangulation) -> BranchedTriangulation:
    rep = validate_triangulation(T)
    if not rep.valid:
        bad = {k: d for k, (ok, d) in rep.checks.items() if not ok}
        raise TriangulationError(f"invalid triangulation: {bad}")
    return T


# -- builtins ------------------------------------------------------------------


def _from_tets(tets, num_vertices, name="", hamiltonian_pairs=None) -> BranchedTriangulation:
    """Glue every pair of faces carrying equal label triples (must be exactly two each)."""
    faces = defaultdict(list)
    for t, tet in enumerate(tets):
        for f in range(4):
            faces[tuple(tet[i] for i in FACE_VERTICES[f])].append((t, f))
    pairings = []
    for key, occ in faces.items():
        if len(occ) != 2:
            raise TriangulationError(f"face {key} occurs {len(occ)} times")
        pairings.append(FacePairing(occ[0][0], occ[0][1], occ[1][0], occ[1][1]))
    T = BranchedTriangulation(num_vertices, tuple(tets), tuple(pairings), name=name)
    if hamiltonian_pairs is not None:
        ids = []
        for u, v in hamiltonian_pairs:
            cand = T.edges_with_endpoints(u, v)
            if len(cand) != 1:
                raise TriangulationError(f"edge {u}-{v} is not unique")
            ids.append(cand[0])
        T = replace(T, hamiltonian=tuple(ids))
    return T


BUILTINS = ("boundary_4_simplex", "boundary_4_simplex_with_unknot")


def builtin(name: str) -> BranchedTriangulation:
    if name not in BUILTINS:
        raise KeyError(f"unknown builtin {name!r}; choose from {BUILTINS}")
    tets = [tuple(v for v in range(5) if v != i) for i in range(5)]
    ham = None
    if name == "boundary_4_simplex_with_unknot":
        ham = [(0, 1), (1, 2), (2, 3), (3, 4), (0, 4)]
    return _from_tets(tets, 5, name=name, hamiltonian_pairs=ham)


# -- moves ---------------------------------------------------------------------

MOVE_KINDS = ("2-3", "3-2", "0-2", "2-0", "bubble+", "bubble-")


@dataclass(frozen=True)
class MoveDescriptor:
    """kind in MOVE_KINDS; ``site`` is a face id (2-3, bubble+), an edge id
    (3-2, 2-0), a vertex label (bubble-) or (face, face, edge) for 0-2.
    ``options`` may carry ``position`` (bubble+ label slot), ``h_edge``
    (bubble+ Hamiltonian edge), ``seed``/``cochain`` and ``modulus`` for the
    transits of extra structure."""

    kind: str
    site: object
    options: tuple = ()

    def option(self, key, default=None):
        return dict(self.options).get(key, default)

    def with_options(self, **kw) -> "MoveDescriptor":
        opts = dict(self.options)
        opts.update(kw)
        return MoveDescriptor(self.kind, self.site, tuple(sorted(opts.items())))


@dataclass
class MoveResult:
    """New triangulation plus the bookkeeping needed to carry structure across.

    tet_map: old tet -> new tet for untouched tetrahedra.
    removed/added: old tets destroyed / new tets created.
    vertex_map: old label -> new label.
    edge_origin: new edge id -> old edge id, or None for a created edge.
    region_old/region_new: the tetrahedra taking part in the move, in the
    order used by the move-specific conventions.
    """

    triangulation: BranchedTriangulation
    kind: str
    tet_map: dict
    removed: tuple
    added: tuple
    vertex_map: dict
    edge_origin: dict
    new_edges: tuple
    info: dict = field(default_factory=dict)


def _rebuild(T, keep, new_tets, glue, num_vertices, relabel=None):
    """Assemble a new triangulation.

    keep: old tets kept, in order. new_tets: label tuples appended after them.
    glue: explicit gluings between abstract faces given as ('old', t, f) or
    ('new', k, f) pairs; faces of kept tets not mentioned keep their partner.
    """
    relabel = relabel or {}
    tet_map = {t: k for k, t in enumerate(keep)}
    tets = [tuple(sorted(relabel.get(v, v) for v in T.tetrahedra[t])) for t in keep]
    base = len(tets)
    tets += [tuple(sorted(nt)) for nt in new_tets]  # already in new labels

    def ref(x):
        kind, t, f = x
        return (tet_map[t], f) if kind == "old" else (base + t, f)

    partner = {}
    for a, b in glue:
        ra, rb = ref(a), ref(b)
        partner[ra] = rb
        partner[rb] = ra
    for (t, f), (s, g) in T.partner.items():
        if t in tet_map and s in tet_map and (tet_map[t], f) not in partner:
            partner[(tet_map[t], f)] = (tet_map[s], g)
    pairings = []
    for a, b in partner.items():
        if a < b:
            pairings.append(FacePairing(a[0], a[1], b[0], b[1]))
    newT = BranchedTriangulation(num_vertices, tuple(tets), tuple(pairings),
                                 orientation=T.orientation, name=T.name)
    # kept tetrahedra keep their sign
    if keep and T.signs is not None and newT.signs is not None and newT.signs[0] != T.signs[keep[0]]:
        newT = replace(newT, orientation=-newT.orientation)
    return newT, tet_map, tuple(range(base, len(tets)))


def _face_side(T, t, labels):
    """Local face index of ``tet`` t whose labels are ``labels``."""
    tet = T.tetrahedra[t]
    missing = [k for k in range(4) if tet[k] not in labels]
    if len(missing) != 1:
        raise MoveError(f"tetrahedron {t} has no face {labels}")
    return missing[0]


def _edge_origin(T, newT, tet_map, removed_tets, relabel_inv, label_rule=None):
    """Map each new edge to the old edge it continues, or None."""
    inv_tet = {v: k for k, v in tet_map.items()}
    origin = {}
    for e in range(newT.num_edges):
        found = None
        for t, le in newT.edge_star(e):
            if t in inv_tet:
                found = T.edge_of[(inv_tet[t], le)]
                break
        if found is None:
            u, v = (relabel_inv.get(x, x) for x in newT.edge_endpoints(e))
            if label_rule is not None:
                found = label_rule(u, v)
            else:
                for t in removed_tets:
                    tet = T.tetrahedra[t]
                    if u in tet and v in tet:
                        found = T.tet_edge(t, tet.index(u), tet.index(v))
                        break
        origin[e] = found
    return origin


def _edge_sources(T, newT, tet_map):
    """new edge -> set of old edges met by its abstract edges in untouched tets."""
    inv = {v: k for k, v in tet_map.items()}
    out = {}
    for e in range(newT.num_edges):
        out[e] = {T.edge_of[(inv[t], le)] for t, le in newT.edge_star(e) if t in inv}
    return out


def _carry_hamiltonian(T, newT, origin, tet_map=None, drop=(), add=()):
    if T.hamiltonian is None:
        return None
    old = set(T.hamiltonian) - set(drop)
    ham = {e for e, o in origin.items() if o is not None and o in old}
    if tet_map is not None:
        ham |= {e for e, src in _edge_sources(T, newT, tet_map).items() if src & old}
    ham |= set(add)
    return tuple(sorted(ham))


def _move_2_3(T, face):
    if not 0 <= face < len(T.pairings):
        raise MoveError(f"no face {face}")
    p = T.pairings[face]
    A, B = p.tet_a, p.tet_b
    if A == B:
        raise MoveError("2-3 needs two distinct tetrahedra")
    abc = T.face_labels(face)
    d = T.tetrahedra[A][p.face_a]
    e = T.tetrahedra[B][p.face_b]
    if d == e:
        raise MoveError(f"2-3 on face {face} would create a loop edge at vertex {d}")
    a, b, c = abc
    new = [(a, b, d, e), (a, c, d, e), (b, c, d, e)]
    new = [tuple(sorted(x)) for x in new]
    glue = []
    # internal faces: {x, d, e} shared by the two new tets containing x
    for k1, k2 in ((0, 1), (0, 2), (1, 2)):
        common = tuple(sorted(set(new[k1]) & set(new[k2])))
        glue.append((("new", k1, _local_face(new[k1], common)), ("new", k2, _local_face(new[k2], common))))
    for old, apex in ((A, d), (B, e)):
        for f in range(4):
            if f == (p.face_a if old == A else p.face_b):
                continue
            labels = tuple(T.tetrahedra[old][i] for i in FACE_VERTICES[f])
            k = next(k for k, nt in enumerate(new) if set(labels) <= set(nt))
            other = T.partner[(old, f)]
            if other[0] in (A, B):
                raise MoveError("2-3 region glued to itself")
            glue.append((("new", k, _local_face(new[k], labels)), ("old", other[0], other[1])))
    keep = [t for t in range(T.num_tetrahedra) if t not in (A, B)]
    newT, tet_map, added = _rebuild(T, keep, new, glue, T.num_vertices)
    origin = _edge_origin(T, newT, tet_map, (A, B), {})
    created = tuple(k for k, o in origin.items() if o is None)
    newT = replace(newT, hamiltonian=_carry_hamiltonian(T, newT, origin, tet_map))
    return MoveResult(newT, "2-3", tet_map, (A, B), added, {}, origin, created,
                      info={"old": (A, B), "apexes": (d, e), "face": abc})


def _local_face(tet, labels):
    missing = [k for k in range(4) if tet[k] not in labels]
    if len(missing) != 1:
        raise MoveError(f"{labels} is not a face of {tet}")
    return missing[0]


def _move_3_2(T, edge):
    if not 0 <= edge < T.num_edges:
        raise MoveError(f"no edge {edge}")
    star = T.edge_star(edge)
    tets = sorted({t for t, _ in star})
    if len(star) != 3 or len(tets) != 3:
        raise MoveError(f"3-2 needs an edge of valence 3 in three distinct tetrahedra (edge {edge})")
    if T.hamiltonian is not None and edge in T.hamiltonian:
        raise MoveError("3-2 would remove a Hamiltonian edge")
    d, e = T.edge_endpoints(edge)
    link = defaultdict(int)
    for t in tets:
        for v in T.tetrahedra[t]:
            if v not in (d, e):
                link[v] += 1
    if len(link) != 3 or any(c != 2 for c in link.values()):
        raise MoveError(f"edge {edge} is not the axis of a bipyramid")
    a, b, c = sorted(link)
    new = [tuple(sorted((a, b, c, d))), tuple(sorted((a, b, c, e)))]
    glue = [(("new", 0, _local_face(new[0], (a, b, c))), ("new", 1, _local_face(new[1], (a, b, c))))]
    for t in tets:
        tet = T.tetrahedra[t]
        for apex_new, k in ((d, 0), (e, 1)):
            labels = tuple(v for v in tet if v != (e if apex_new == d else d))
            f = _local_face(tet, labels)
            other = T.partner[(t, f)]
            if other[0] in tets:
                raise MoveError("3-2 region glued to itself")
            glue.append((("new", k, _local_face(new[k], labels)), ("old", other[0], other[1])))
    keep = [t for t in range(T.num_tetrahedra) if t not in tets]
    newT, tet_map, added = _rebuild(T, keep, new, glue, T.num_vertices)
    origin = _edge_origin(T, newT, tet_map, tuple(tets), {})
    newT = replace(newT, hamiltonian=_carry_hamiltonian(T, newT, origin, tet_map))
    return MoveResult(newT, "3-2", tet_map, tuple(tets), added, {}, origin, (),
                      info={"edge": edge, "axis": (d, e), "link": (a, b, c)})


def _move_0_2(T, site):
    try:
        f1, f2, edge = (int(x) for x in site)
    except (TypeError, ValueError):
        raise MoveError("0-2 site must be (face, face, edge)") from None
    if f1 == f2:
        raise MoveError("0-2 needs two distinct faces")
    cycle = T.edge_cycle(edge)
    # the face crossed after position k is glued (tet_k, out_k) -> (tet_k+1, in_k+1)
    crossings = [T.face_id[(t, out)] for t, _, out in cycle]
    if f1 not in crossings or f2 not in crossings:
        raise MoveError(f"faces {f1}, {f2} do not both contain edge {edge}")
    i, j = crossings.index(f1), crossings.index(f2)
    k = len(cycle)
    # side one: abstract faces on the arc running forward from f1 to f2
    side1_f1 = (cycle[(i + 1) % k][0], cycle[(i + 1) % k][1])
    side1_f2 = (cycle[j][0], cycle[j][2])
    side2_f1 = (cycle[i][0], cycle[i][2])
    side2_f2 = (cycle[(j + 1) % k][0], cycle[(j + 1) % k][1])
    u, v = T.edge_endpoints(edge)
    x = next(w for w in T.face_labels(f1) if w not in (u, v))
    y = next(w for w in T.face_labels(f2) if w not in (u, v))
    if x == y:
        raise MoveError(f"0-2 would create a loop edge at vertex {x}")
    tet = tuple(sorted((u, v, x, y)))
    new = [tet, tet]
    fx = _local_face(tet, tuple(sorted((u, v, x))))
    fy = _local_face(tet, tuple(sorted((u, v, y))))
    fu = _local_face(tet, tuple(sorted((u, x, y))))
    fv = _local_face(tet, tuple(sorted((v, x, y))))
    glue = [
        (("new", 0, fu), ("new", 1, fu)),
        (("new", 0, fv), ("new", 1, fv)),
        (("new", 0, fx), ("old",) + side1_f1),
        (("new", 0, fy), ("old",) + side1_f2),
        (("new", 1, fx), ("old",) + side2_f1),
        (("new", 1, fy), ("old",) + side2_f2),
    ]
    keep = list(range(T.num_tetrahedra))
    newT, tet_map, added = _rebuild(T, keep, new, glue, T.num_vertices)
    origin = _edge_origin(T, newT, tet_map, (), {})
    created = tuple(e for e, o in origin.items() if o is None)
    ham = None
    if T.hamiltonian is not None:
        ham = set()
        for e, o in origin.items():
            if o is not None and o in T.hamiltonian:
                ham.add(e)
        if edge in T.hamiltonian:
            # only the copy of u-v on side two stays in H
            p_copy = newT.tet_edge(added[0], tet.index(u), tet.index(v))
            ham.discard(p_copy)
        ham = tuple(sorted(ham))
    newT = replace(newT, hamiltonian=ham)
    return MoveResult(newT, "0-2", tet_map, (), added, {}, origin, created,
                      info={"edge": edge, "faces": (f1, f2), "uvxy": (u, v, x, y)})


def _move_2_0(T, edge):
    if not 0 <= edge < T.num_edges:
        raise MoveError(f"no edge {edge}")
    star = T.edge_star(edge)
    tets = sorted({t for t, _ in star})
    if len(star) != 2 or len(tets) != 2:
        raise MoveError(f"2-0 needs an edge of valence 2 in two distinct tetrahedra (edge {edge})")
    P, Q = tets
    if T.tetrahedra[P] != T.tetrahedra[Q]:
        raise MoveError("2-0: the two tetrahedra must span the same vertices")
    if T.hamiltonian is not None and edge in T.hamiltonian:
        raise MoveError("2-0 would remove a Hamiltonian edge")
    x, y = T.edge_endpoints(edge)
    tet = T.tetrahedra[P]
    u, v = (w for w in tet if w not in (x, y))
    for w in (u, v):
        f = _local_face(tet, tuple(sorted((w, x, y))))
        if T.partner[(P, f)] != (Q, f):
            raise MoveError("2-0: tetrahedra not glued along the faces through the edge")
    glue = []
    for third in (x, y):
        f = _local_face(tet, tuple(sorted((u, v, third))))
        a, b = T.partner[(P, f)], T.partner[(Q, f)]
        if a[0] in tets or b[0] in tets:
            raise MoveError("2-0: degenerate pillow")
        glue.append((("old",) + a, ("old",) + b))
    keep = [t for t in range(T.num_tetrahedra) if t not in tets]
    newT, tet_map, added = _rebuild(T, keep, [], glue, T.num_vertices)
    origin = _edge_origin(T, newT, tet_map, (), {})
    # a merged u-v edge lies in H if either copy did
    ham = _carry_hamiltonian(T, newT, origin, tet_map)
    newT = replace(newT, hamiltonian=ham)
    return MoveResult(newT, "2-0", tet_map, (P, Q), (), {}, origin, (),
                      info={"edge": edge, "uvxy": (u, v, x, y)})


def _move_bubble_plus(T, face, position=None, h_edge=None):
    if not 0 <= face < len(T.pairings):
        raise MoveError(f"no face {face}")
    p = T.pairings[face]
    n = T.num_vertices if position is None else int(position)
    if not 0 <= n <= T.num_vertices:
        raise MoveError(f"bubble+ position {n} out of range")
    relabel = {w: (w + 1 if w >= n else w) for w in range(T.num_vertices)}
    abc = T.face_labels(face)
    face_edges = [T.tet_edge(p.tet_a, i, j) for i, j in
                  itertools.combinations(FACE_VERTICES[p.face_a], 2)]
    chosen = None
    if T.hamiltonian is not None:
        in_h = [e for e in face_edges if e in T.hamiltonian]
        if h_edge is not None:
            if int(h_edge) not in in_h:
                raise MoveError(f"bubble+: edge {h_edge} is not a Hamiltonian edge of face {face}")
            chosen = int(h_edge)
        elif not in_h:
            raise MoveError("bubble+ needs a Hamiltonian edge on the face")
        else:
            chosen = in_h[0]
    a, b, c = (relabel[w] for w in abc)
    tet = tuple(sorted((a, b, c, n)))
    new = [tet, tet]
    glue = []
    for pair in ((a, b), (a, c), (b, c)):
        f = _local_face(tet, tuple(sorted(pair + (n,))))
        glue.append((("new", 0, f), ("new", 1, f)))
    fo = _local_face(tet, (a, b, c))
    glue.append((("new", 0, fo), ("old", p.tet_a, p.face_a)))
    glue.append((("new", 1, fo), ("old", p.tet_b, p.face_b)))
    keep = list(range(T.num_tetrahedra))
    newT, tet_map, added = _rebuild(T, keep, new, glue, T.num_vertices + 1, relabel)
    inv = {v: k for k, v in relabel.items()}
    origin = _edge_origin(T, newT, tet_map, (), inv)
    created = tuple(e for e, o in origin.items() if o is None)
    ham = None
    if T.hamiltonian is not None:
        cu, cv = (relabel[w] for w in T.edge_endpoints(chosen))
        repl = [newT.tet_edge(added[0], tet.index(w), tet.index(n)) for w in (cu, cv)]
        ham = _carry_hamiltonian(T, newT, origin, tet_map, drop=(chosen,), add=repl)
    newT = replace(newT, hamiltonian=ham)
    return MoveResult(newT, "bubble+", tet_map, (), added, relabel, origin, created,
                      info={"face": face, "new_vertex": n, "abc": (a, b, c), "h_edge": chosen})


def _move_bubble_minus(T, vertex):
    n = int(vertex)
    if not 0 <= n < T.num_vertices:
        raise MoveError(f"no vertex {n}")
    tets = [t for t, tet in enumerate(T.tetrahedra) if n in tet]
    if len(tets) != 2 or T.tetrahedra[tets[0]] != T.tetrahedra[tets[1]]:
        raise MoveError(f"vertex {n} is not the centre of a bubble")
    P, Q = tets
    tet = T.tetrahedra[P]
    abc = tuple(w for w in tet if w != n)
    for pair in itertools.combinations(abc, 2):
        f = _local_face(tet, tuple(sorted(pair + (n,))))
        if T.partner[(P, f)] != (Q, f):
            raise MoveError(f"vertex {n} is not the centre of a bubble")
    fo = _local_face(tet, abc)
    a_, b_ = T.partner[(P, fo)], T.partner[(Q, fo)]
    if a_[0] in tets or b_[0] in tets:
        raise MoveError("bubble-: degenerate configuration")
    relabel = {w: (w - 1 if w > n else w) for w in range(T.num_vertices) if w != n}
    keep = [t for t in range(T.num_tetrahedra) if t not in tets]
    newT, tet_map, _ = _rebuild(T, keep, [], [(("old",) + a_, ("old",) + b_)],
                                T.num_vertices - 1, relabel)
    inv = {v: k for k, v in relabel.items()}
    origin = _edge_origin(T, newT, tet_map, (), inv)
    ham = None
    if T.hamiltonian is not None:
        at_n = [e for e in T.hamiltonian if n in T.edge_endpoints(e)]
        if len(at_n) != 2:
            raise MoveError("bubble-: the bubble vertex must meet exactly two Hamiltonian edges")
        x, y = (w for e in at_n for w in T.edge_endpoints(e) if w != n)
        old_face_edge = T.tet_edge(P, tet.index(x), tet.index(y))
        if old_face_edge in T.hamiltonian:
            raise MoveError("bubble-: the replacing edge is already Hamiltonian")
        sources = _edge_sources(T, newT, tet_map)
        face_edge = next(e for e, s in sources.items() if old_face_edge in s)
        ham = _carry_hamiltonian(T, newT, origin, tet_map, drop=at_n, add=(face_edge,))
    newT = replace(newT, hamiltonian=ham)
    return MoveResult(newT, "bubble-", tet_map, (P, Q), (), relabel, origin, (),
                      info={"vertex": n, "abc": abc})


def apply_move_tracked(T: BranchedTriangulation, mv: MoveDescriptor) -> MoveResult:
    if mv.kind == "2-3":
        res = _move_2_3(T, int(mv.site))
    elif mv.kind == "3-2":
        res = _move_3_2(T, int(mv.site))
    elif mv.kind == "0-2":
        res = _move_0_2(T, mv.site)
    elif mv.kind == "2-0":
        res = _move_2_0(T, int(mv.site))
    elif mv.kind == "bubble+":
        res = _move_bubble_plus(T, int(mv.site), mv.option("position"), mv.option("h_edge"))
    elif mv.kind == "bubble-":
        res = _move_bubble_minus(T, int(mv.site))
    else:
        raise MoveError(f"unknown move kind {mv.kind!r}")
    rep = validate_triangulation(res.triangulation)
    if not rep.valid:
        bad = {k: d for k, (ok, d) in rep.checks.items() if not ok}
        raise MoveError(f"{mv.kind} at {mv.site} leaves an invalid triangulation: {bad}")
    return res


def apply_move(T: BranchedTriangulation, mv: MoveDescriptor) -> BranchedTriangulation:
    return apply_move_tracked(T, mv).triangulation


def canonical_form(T: BranchedTriangulation):
    """Relabeling-invariant key: tetrahedra may be permuted, labels are fixed."""
    groups = defaultdict(list)
    for t, tet in enumerate(T.tetrahedra):
        groups[tet].append(t)
    keys = sorted(groups)
    best = None
    for perms in itertools.product(*(itertools.permutations(groups[k]) for k in keys)):
        order = [t for perm in perms for t in perm]
        pos = {t: k for k, t in enumerate(order)}
        pairs = sorted(tuple(sorted(((pos[p.tet_a], p.face_a), (pos[p.tet_b], p.face_b))))
                       for p in T.pairings)
        cand = (tuple(T.tetrahedra[t] for t in order), tuple(pairs))
        if best is None or cand < best:
            best = cand
    return (T.num_vertices,) + best


def candidate_moves(T: BranchedTriangulation, kinds=MOVE_KINDS) -> list:
    """Every move of the given kinds that applies to T, as descriptors."""
    out = []
    for kind in kinds:
        if kind in ("2-3", "bubble+"):
            sites = range(len(T.pairings))
        elif kind in ("3-2", "2-0"):
            sites = range(T.num_edges)
        elif kind == "bubble-":
            sites = range(T.num_vertices)
        else:
            sites = []
            for e in range(T.num_edges):
                fs = sorted({T.face_id[(t, o)] for t, _, o in T.edge_cycle(e)})
                sites += [(a, b, e) for a, b in itertools.combinations(fs, 2)]
        for s in sites:
            mv = MoveDescriptor(kind, s)
            try:
                apply_move_tracked(T, mv)
            except MoveError:
                continue
            out.append(mv)
    return out
