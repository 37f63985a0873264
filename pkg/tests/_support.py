"""Shared constructions for the test suite."""

from __future__ import annotations

import numpy as np

from qhi.complex3 import LOCAL_EDGES, MoveDescriptor, apply_move, apply_move_tracked, builtin, candidate_moves
from qhi.decorations import solve_integer
from qhi.idealizer import EDGE_TYPE, ModularTriple, cocycle_transit_from, idealize, perturb_to_idealizable
from qhi.qdilog import CyclicParams, sym_tensor
from qhi.statesum import INDEX_FACES, consistent_roots, contract_region


def random_charge(rng, spread: int = 2) -> tuple:
    a, b = (int(v) for v in rng.integers(-spread, spread + 1, size=2))
    return (a, b, 1 - a - b)


def local_charge_transit(T, T2, old, new, C_old, rng):
    """Charges on the three new tetrahedra of a 2-3 move that keep the edge
    sums of the region and put 2 on the new edge; a random point of the
    solution coset."""
    n = len(new)
    A, b = [], []
    for k in range(n):
        row = [0] * (3 * n)
        row[3 * k:3 * k + 3] = [1, 1, 1]
        A.append(row)
        b.append(1)
    rows = {}
    for k, t in enumerate(new):
        for le, (i, j) in enumerate(LOCAL_EDGES):
            key = (T2.tetrahedra[t][i], T2.tetrahedra[t][j])
            rows.setdefault(key, [0] * (3 * n))[3 * k + EDGE_TYPE[le]] += 1
    sums = {}
    for t in old:
        for le, (i, j) in enumerate(LOCAL_EDGES):
            key = (T.tetrahedra[t][i], T.tetrahedra[t][j])
            sums[key] = sums.get(key, 0) + C_old[t][EDGE_TYPE[le]]
    for key, row in rows.items():
        A.append(row)
        b.append(sums.get(key, 2))
    x, ker = solve_integer(A, b)
    x = np.array(x, dtype=int)
    for v in ker:
        x = x + int(rng.integers(-2, 3)) * np.array(v, dtype=int)
    return {t: tuple(int(v) for v in x[3 * k:3 * k + 3]) for k, t in enumerate(new)}


def charged_pentagon_sides(N: int, seed: int):
    """Both sides of a random charged 2-3 transit on a perturbed boundary of
    the 4-simplex, contracted over their interior faces."""
    P = CyclicParams(N)
    rng = np.random.default_rng(seed)
    T = builtin("boundary_4_simplex")
    z = perturb_to_idealizable(T, seed=seed)
    face = int(rng.integers(len(T.pairings)))
    res = apply_move_tracked(T, MoveDescriptor("2-3", face))
    T2, z2, _ = cocycle_transit_from(T, z, res)
    TI, TI2 = idealize(T, z), idealize(T2, z2)
    old, new = list(res.removed), list(res.added)
    C = {t: random_charge(rng) for t in old}
    Cn = local_charge_transit(T, T2, old, new, C, rng)
    r1, r2 = consistent_roots(T, z, P, TI), consistent_roots(T2, z2, P, TI2)
    X, b1 = contract_region(T, old, [sym_tensor(TI.moduli[t], T.signs[t], C[t], P, prime=r1[t]) for t in old])
    Y, b2 = contract_region(T2, new, [sym_tensor(TI2.moduli[t], T2.signs[t], Cn[t], P, prime=r2[t]) for t in new])
    assert b1 == b2
    return P, X, Y


# -- a single tetrahedron from four points of C^2 ----------------------------------


def det_tensor(v, star: int, c, P: CyclicParams, perm=(0, 1, 2, 3)):
    """Charged tensor of the tetrahedron whose vertex k carries v[perm[k]].

    Edge coordinates are D_ij = det(v_i, v_j) with principal N-th roots taken
    for the increasing pair; reversing a pair negates both D and its root.
    """
    D, r = {}, {}
    for i, j in LOCAL_EDGES:
        a, b, sg = perm[i], perm[j], 1
        if a > b:
            a, b, sg = b, a, -1
        d = v[a][0] * v[b][1] - v[a][1] * v[b][0]
        D[i, j] = sg * d
        r[i, j] = sg * np.exp(np.log(d) / P.N)
    p = (-D[0, 1] * D[2, 3], -D[1, 2] * D[0, 3], D[0, 2] * D[1, 3])
    prime = (-r[0, 1] * r[2, 3], -r[1, 2] * r[0, 3], r[0, 2] * r[1, 3])
    w = ModularTriple.from_w0(-p[1] / p[2])
    return sym_tensor(w, star, c, P, prime=prime)


def permuted_charge(c, perm) -> tuple:
    out = [None] * 3
    for le, (i, j) in enumerate(LOCAL_EDGES):
        a, b = sorted((perm[i], perm[j]))
        out[EDGE_TYPE[le]] = c[EDGE_TYPE[LOCAL_EDGES.index((a, b))]]
    return tuple(out)


def face_reindex(A, perm):
    """Axes of a relabelled tetrahedron's tensor, reordered to the original faces."""
    old = [perm[f] for f in INDEX_FACES]
    return np.transpose(A, [old.index(f) for f in INDEX_FACES])


# -- transit scripts ---------------------------------------------------------


def random_script(T, steps: int, rng, kinds=("2-3", "3-2", "0-2", "bubble+", "bubble-"), cap: int = 8):
    """A move list that applies cleanly, keeping at most ``cap`` tetrahedra."""
    moves = []
    for _ in range(steps):
        allowed = candidate_moves(T, kinds)
        cands = [m for m in allowed if T.num_tetrahedra < cap or m.kind in ("3-2", "bubble-")] or allowed
        mv = cands[int(rng.integers(len(cands)))]
        moves.append(mv)
        T = apply_move(T, mv)
    return moves
