"""State sums of quantum dilogarithm tensors over the dual 1-skeleton.

Each tetrahedron contributes one (N, N, N, N) tensor; axis k of that tensor
lives on the face INDEX_FACES[k].  Two tetrahedra glued along a face share
the state on the corresponding dual arc, so the state sum is the full
contraction of the network.
"""

from __future__ import annotations

import itertools
import string
from dataclasses import dataclass, field

import numpy as np

from .complex3 import FACE_VERTICES, BranchedTriangulation
from .idealizer import ITriangulation
from .moebius import MobiusElement
from .qdilog import CyclicParams, phase_class, sym_tensor, tet_tensor

# axis order (alpha, beta, gamma, delta) -> local face opposite that vertex
INDEX_FACES = (3, 1, 2, 0)
# faces carrying the incoming couple for a positively oriented tetrahedron
INCOMING_POSITIVE = (3, 1)

DEFAULT_MEMORY_LIMIT = 2 ** 28


class ContractionError(ValueError):
    pass


# -- dual graph --------------------------------------------------------------


@dataclass(frozen=True)
class DualGraph:
    num_nodes: int
    arcs: tuple  # arc id -> ((tail tet, tail face), (head tet, head face))
    incoming: tuple  # per node: (face, face)
    outgoing: tuple

    @property
    def num_arcs(self) -> int:
        return len(self.arcs)

    def node_arcs(self, t: int) -> tuple:
        """Arc id on each tensor axis of node t."""
        out = []
        for f in INDEX_FACES:
            out.append(next(a for a, (tail, head) in enumerate(self.arcs) if (t, f) in (tail, head)))
        return tuple(out)


def incoming_faces(sign: int) -> tuple:
    return INCOMING_POSITIVE if sign > 0 else tuple(f for f in range(4) if f not in INCOMING_POSITIVE)


def dual_graph(T: BranchedTriangulation) -> DualGraph:
    if T.signs is None:
        raise ContractionError("dual graph needs an oriented triangulation")
    if len(T.partner) != 4 * T.num_tetrahedra:
        raise ContractionError("dual graph needs a closed triangulation")
    inc = tuple(incoming_faces(s) for s in T.signs)
    out = tuple(tuple(f for f in range(4) if f not in i) for i in inc)
    arcs = []
    for k, p in enumerate(T.pairings):
        a, b = (p.tet_a, p.face_a), (p.tet_b, p.face_b)
        a_in, b_in = a[1] in inc[a[0]], b[1] in inc[b[0]]
        if a_in == b_in:
            raise ContractionError(f"face pairing {k} joins two {'incoming' if a_in else 'outgoing'} faces")
        arcs.append((b, a) if a_in else (a, b))
    return DualGraph(T.num_tetrahedra, tuple(arcs), inc, out)


def _arc_table(T: BranchedTriangulation) -> list:
    """Per tetrahedron, the arc (pairing id) on each tensor axis."""
    return [tuple(T.face_id[(t, f)] for f in INDEX_FACES) for t in range(T.num_tetrahedra)]


# -- consistent N-th roots ---------------------------------------------------


def _gf2_solve(rows, rhs, nvars):
    """Solve a GF(2) system given as bitmask rows; None if inconsistent."""
    pivots = []  # (bit, row, rhs)
    for r, b in zip(rows, rhs):
        for bit, pr, pb in pivots:
            if r >> bit & 1:
                r ^= pr
                b ^= pb
        if r == 0:
            if b:
                return None
            continue
        bit = r.bit_length() - 1
        # keep rows fully reduced against the new pivot
        pivots = [(bt, pr ^ r if pr >> bit & 1 else pr, pb ^ b if pr >> bit & 1 else pb)
                  for bt, pr, pb in pivots]
        pivots.append((bit, r, b))
    x = [0] * nvars
    for bit, r, b in pivots:
        x[bit] = b  # reduced form: other bits in r are free and set to 0
    return x


def _raw_product(m1: MobiusElement, m2: MobiusElement) -> tuple:
    # no sign renormalisation, unlike mobius_compose
    return (m1.a * m2.a + m1.b * m2.c, m1.a * m2.b + m1.b * m2.d,
            m1.c * m2.a + m1.d * m2.c, m1.c * m2.b + m1.d * m2.d)


def sl_lift_signs(T: BranchedTriangulation, z, tol: float = 1e-7):
    """Signs e_e with (e01 z01)(e12 z12) = e02 z02 in SL(2, C) on every face,
    or None when the cocycle does not lift."""
    rows, rhs = [], []
    seen = set()
    for t in range(T.num_tetrahedra):
        for f in range(4):
            i, j, k = FACE_VERTICES[f]
            edges = (T.tet_edge(t, i, j), T.tet_edge(t, j, k), T.tet_edge(t, i, k))
            if edges in seen:
                continue
            seen.add(edges)
            prod = _raw_product(z[edges[0]], z[edges[1]])
            m = z[edges[2]].entries()
            plus = max(abs(x - y) for x, y in zip(prod, m))
            minus = max(abs(x + y) for x, y in zip(prod, m))
            if min(plus, minus) > tol * max(1.0, max(abs(v) for v in m)):
                raise ValueError("cocycle condition fails on a face")
            mask = 0
            for e in edges:
                mask ^= 1 << e
            rows.append(mask)
            rhs.append(0 if plus <= minus else 1)
    sol = _gf2_solve(rows, rhs, T.num_edges)
    if sol is None:
        return None
    return [(-1) ** s for s in sol]


def edge_coordinates(T: BranchedTriangulation, z, signs=None) -> list:
    """D_e = -b(e z_e), the frame-free edge coordinate of an SL(2) lift."""
    if signs is None:
        signs = sl_lift_signs(T, z)
        if signs is None:
            raise ContractionError("cocycle has no SL(2, C) lift; use principal roots")
    return [-s * m.b for s, m in zip(signs, z)]


def consistent_roots(T: BranchedTriangulation, z, P: CyclicParams, TI: ITriangulation = None,
                     tol: float = 1e-7) -> list:
    """Per-tetrahedron (p0', p1', p2') built from one N-th root per edge.

    With D_e the edge coordinates of an SL(2) lift, p = (-D01 D23, -D12 D03,
    D02 D13) is proportional to the p-vector of the idealization.  The root of
    D_e is e_e times the principal root of -b(z_e), so it depends only on the
    PSL class of z_e and on the lift sign; N odd makes the sign pass through.
    """
    signs = sl_lift_signs(T, z)
    if signs is None:
        raise ContractionError("cocycle has no SL(2, C) lift; use principal roots")
    D = edge_coordinates(T, z, signs)
    r = []
    for s, m in zip(signs, z):
        if abs(m.b) < 1e-300:
            raise ContractionError("vanishing edge coordinate")
        r.append(s * np.exp(np.log(complex(-m.b)) / P.N))
    out = []
    for t in range(T.num_tetrahedra):
        e = lambda i, j: T.tet_edge(t, i, j)
        if TI is not None:
            p = (-D[e(0, 1)] * D[e(2, 3)], -D[e(1, 2)] * D[e(0, 3)], D[e(0, 2)] * D[e(1, 3)])
            w0 = TI.moduli[t].w0
            if abs(-p[1] / p[2] - w0) > tol * max(1.0, abs(w0)):
                raise ContractionError(f"edge coordinates disagree with the modulus of tetrahedron {t}")
        out.append((-r[e(0, 1)] * r[e(2, 3)], -r[e(1, 2)] * r[e(0, 3)], r[e(0, 2)] * r[e(1, 3)]))
    return out


# -- tensors -----------------------------------------------------------------


def network_tensors(TI: ITriangulation, P: CyclicParams, C=None, primes=None) -> list:
    T = TI.base
    out = []
    for t in range(T.num_tetrahedra):
        pr = None if primes is None else primes[t]
        if C is None:
            out.append(tet_tensor(TI.moduli[t], T.signs[t], P, prime=pr))
        else:
            out.append(sym_tensor(TI.moduli[t], T.signs[t], C[t], P, prime=pr))
    return out


def contract_region(T: BranchedTriangulation, tets, tensors) -> tuple:
    """Contract the tensors of a set of tetrahedra along their shared faces.

    Returns (tensor, boundary) where the open axes follow ``boundary``, the
    sorted vertex-label triples of the region's boundary faces.  Two regions
    with the same boundary (the two sides of a move) give comparable tensors.
    """
    tets = list(tets)
    inside = set(tets)
    letters = iter(string.ascii_letters)
    shared, bnd, subs = {}, {}, []
    for t in tets:
        s = ""
        for f in INDEX_FACES:
            key = (t, f)
            other = T.partner[key]
            if other[0] in inside:
                k = tuple(sorted((key, other)))
                if k not in shared:
                    shared[k] = next(letters)
                s += shared[k]
            else:
                lab = T.face_labels(T.face_id[key])
                if lab in bnd:
                    raise ContractionError(f"boundary face {lab} appears twice in the region")
                bnd[lab] = next(letters)
                s += bnd[lab]
        subs.append(s)
    order = sorted(bnd)
    expr = ",".join(subs) + "->" + "".join(bnd[lab] for lab in order)
    return np.einsum(expr, *tensors, optimize=True), order


# -- planning ----------------------------------------------------------------


@dataclass
class ContractionPlan:
    steps: list = field(default_factory=list)  # (i, j, eliminated arcs); result replaces i
    peak: int = 0
    N: int = 0


def _node_legs(arc_table) -> list:
    return [list(a) for a in arc_table]


def plan_contraction(arc_table, N: int, memory_limit: int = DEFAULT_MEMORY_LIMIT) -> ContractionPlan:
    """Greedy pairwise merges picking the smallest intermediate each time.

    ``arc_table`` is a DualGraph or the list of arcs on each node's axes
    (repeats allowed for a tetrahedron glued to itself).  Raises when some
    step exceeds the limit.
    """
    if isinstance(arc_table, DualGraph):
        arc_table = [arc_table.node_arcs(t) for t in range(arc_table.num_nodes)]
    legs = {k: _open(v) for k, v in enumerate(_node_legs(arc_table))}
    plan = ContractionPlan(N=N)
    plan.peak = max((N ** len(v) for v in legs.values()), default=1)
    if plan.peak > memory_limit:
        raise ContractionError(f"a single tensor needs {plan.peak} entries > limit {memory_limit}")
    while len(legs) > 1:
        best = None
        keys = sorted(legs)
        for a, b in itertools.combinations(keys, 2):
            shared = set(legs[a]) & set(legs[b])
            merged = _open(legs[a] + legs[b])
            size = N ** len(merged)
            key = (0 if shared else 1, size, a, b)
            if best is None or key < best[0]:
                best = (key, a, b, merged, sorted(shared))
        _, a, b, merged, shared = best
        size = N ** len(merged)
        if size > memory_limit:
            raise ContractionError(f"intermediate of {size} entries exceeds the memory limit {memory_limit}")
        plan.peak = max(plan.peak, size)
        plan.steps.append((a, b, tuple(shared)))
        legs[a] = merged
        del legs[b]
    return plan


def _open(arcs) -> list:
    """Arcs appearing once (pairs are traced out)."""
    counts = {}
    for a in arcs:
        counts[a] = counts.get(a, 0) + 1
    return [a for a in dict.fromkeys(arcs) if counts[a] == 1]


def _letter(k: int) -> str:
    return string.ascii_letters[k]


def _trace_self(tensor, arcs):
    """Trace repeated arcs of one tensor; return (tensor, open arcs)."""
    opened = _open(arcs)
    if len(opened) == len(arcs):
        return tensor, list(arcs)
    ids = {a: _letter(i) for i, a in enumerate(dict.fromkeys(arcs))}
    sub = "".join(ids[a] for a in arcs)
    return np.einsum(sub + "->" + "".join(ids[a] for a in opened), tensor), opened


def contract_planned(tensors, arc_table, plan: ContractionPlan) -> complex:
    work = {}
    for k, (ten, arcs) in enumerate(zip(tensors, arc_table)):
        work[k] = _trace_self(ten, list(arcs))
    for a, b, _ in plan.steps:
        ta, la = work[a]
        tb, lb = work.pop(b)
        allarcs = list(dict.fromkeys(la + lb))
        if len(allarcs) > len(string.ascii_letters):
            raise ContractionError("too many open arcs for one merge")
        ids = {x: _letter(i) for i, x in enumerate(allarcs)}
        out = _open(la + lb)
        res = np.einsum("".join(ids[x] for x in la) + "," + "".join(ids[x] for x in lb) + "->"
                        + "".join(ids[x] for x in out), ta, tb)
        work[a] = (res, out)
    (res, out), = work.values()
    if out:
        raise ContractionError(f"arcs {out} left open")
    return complex(res)


def contract_brute(tensors, arc_table, num_arcs: int, N: int, filter_support: bool = True,
                   chunk: int = 1 << 20) -> complex:
    """Sum over all states of the product of tensor entries.

    With ``filter_support`` states are built arc by arc and dropped as soon as
    a fully assigned tetrahedron has a zero entry; the sum is unchanged.
    """
    arc_table = [tuple(a) for a in arc_table]
    if not filter_support:
        total = 0j
        for start in range(0, N ** num_arcs, chunk):
            idx = np.arange(start, min(start + chunk, N ** num_arcs))
            states = np.stack([(idx // N ** k) % N for k in range(num_arcs)], axis=1)
            prod = np.ones(len(idx), dtype=complex)
            for ten, arcs in zip(tensors, arc_table):
                prod *= ten[tuple(states[:, a] for a in arcs)]
            total += prod.sum()
        return complex(total)
    # assign arcs in order; a node is checked once its last arc is set
    last = {}
    for k, arcs in enumerate(arc_table):
        last.setdefault(max(arcs), []).append(k)
    states = np.zeros((1, 0), dtype=np.int64)
    weight = np.ones(1, dtype=complex)
    for a in range(num_arcs):
        n = len(states)
        states = np.concatenate([np.repeat(states, N, axis=0),
                                 np.tile(np.arange(N), n)[:, None]], axis=1)
        weight = np.repeat(weight, N)
        for k in last.get(a, ()):
            vals = tensors[k][tuple(states[:, x] for x in arc_table[k])]
            weight = weight * vals
            keep = vals != 0
            states, weight = states[keep], weight[keep]
    return complex(weight.sum())


def contract(TI: ITriangulation, P: CyclicParams, C=None, primes=None, plan=None,
             brute_force: bool = False, memory_limit: int = DEFAULT_MEMORY_LIMIT) -> complex:
    T = TI.base
    dual_graph(T)  # orientation and closure checks
    tensors = network_tensors(TI, P, C, primes)
    table = _arc_table(T)
    if brute_force:
        return contract_brute(tensors, table, len(T.pairings), P.N)
    if plan is None:
        plan = plan_contraction(table, P.N, memory_limit)
    elif plan.N != P.N or len(plan.steps) != T.num_tetrahedra - 1:
        raise ContractionError("plan does not match this network")
    return contract_planned(tensors, table, plan)


@dataclass(frozen=True)
class HValue:
    value: complex
    N: int
    roots: str

    @property
    def modulus(self) -> float:
        return abs(self.value)

    @property
    def arg_class(self) -> float:
        """arg modulo pi / N."""
        return phase_class(self.value, CyclicParams(self.N))[1]


def h_invariant(T: BranchedTriangulation, z, C, P: CyclicParams, TI: ITriangulation = None,
                roots: str = "edge", memory_limit: int = DEFAULT_MEMORY_LIMIT) -> HValue:
    """N^{-n0} times the charged state sum.

    ``roots='edge'`` takes the N-th roots from one root per edge of an SL(2)
    lift of z; ``roots='principal'`` takes principal roots tetrahedron by
    tetrahedron.
    """
    from .idealizer import idealize

    if TI is None:
        TI = idealize(T, z)
    if roots == "edge":
        primes = consistent_roots(T, z, P, TI)
    elif roots == "principal":
        primes = None
    else:
        raise ValueError(f"unknown root mode {roots!r}")
    val = contract(TI, P, C, primes, memory_limit=memory_limit)
    return HValue(val * float(P.N) ** (-T.num_vertices), P.N, roots)
