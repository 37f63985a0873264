"""Flattenings and integral charges, with exact integer solvers and transits.

A flattening gives each tetrahedron integers (f0, f1, f2) so that the
log-branches l_j = log w_j + f_j i pi sum to zero; globally the sign-weighted
log-branches around each edge sum to zero.  A charge is a triple summing to
one per tetrahedron, with unsigned edge sums 2 off the Hamiltonian subcomplex
and 0 on it.
"""

from __future__ import annotations

import cmath
import itertools
import math
from dataclasses import dataclass

import numpy as np

from .complex3 import BranchedTriangulation, MoveDescriptor, MoveResult, apply_move_tracked
from .idealizer import EDGE_TYPE, ITriangulation, ModularTriple, moduli_transit_from


class DecorationError(ValueError):
    pass


# -- exact integer linear algebra ------------------------------------------


def column_hermite(A):
    """Column-style echelon form H = A U with U unimodular.

    Returns (H, U, pivots) where pivots[k] is the row of the k-th pivot
    column; columns past len(pivots) of H vanish.
    """
    m = len(A)
    n = len(A[0]) if m else 0
    H = [list(map(int, row)) for row in A]
    U = [[int(i == j) for j in range(n)] for i in range(n)]

    def colop(i, j, a, b, c, d):
        # (col_i, col_j) <- (a col_i + b col_j, c col_i + d col_j)
        for M in (H, U):
            for row in M:
                x, y = row[i], row[j]
                row[i], row[j] = a * x + b * y, c * x + d * y

    def swap(i, j):
        for M in (H, U):
            for row in M:
                row[i], row[j] = row[j], row[i]

    pivots = []
    k = 0
    for r in range(m):
        if k >= n:
            break
        for j in range(k + 1, n):
            if H[r][j] == 0:
                continue
            x, y = H[r][k], H[r][j]
            if x == 0:
                swap(k, j)
                continue
            g, s, t = _ext_gcd(x, y)
            # [s t; -y/g x/g] has determinant 1
            colop(k, j, s, t, -y // g, x // g)
        if H[r][k] != 0:
            if H[r][k] < 0:
                _negate_col(H, U, k)
            pivots.append(r)
            k += 1
    return H, U, pivots


def _negate_col(H, U, k):
    for M in (H, U):
        for row in M:
            row[k] = -row[k]


def _ext_gcd(a, b):
    """(g, s, t) with s a + t b = g = gcd(a, b) > 0."""
    s0, s1, t0, t1 = 1, 0, 0, 1
    while b:
        q = a // b
        a, b = b, a - q * b
        s0, s1 = s1, s0 - q * s1
        t0, t1 = t1, t0 - q * t1
    if a < 0:
        a, s0, t0 = -a, -s0, -t0
    return a, s0, t0


def solve_integer(A, b):
    """Integer solution of A x = b and a basis of the integer kernel.

    Returns (x, kernel) or raises DecorationError when no integer solution
    exists.
    """
    A = [list(map(int, row)) for row in A]
    b = [int(v) for v in b]
    n = len(A[0]) if A else 0
    H, U, pivots = column_hermite(A)
    y = [0] * n
    for k, r in enumerate(pivots):
        rest = b[r] - sum(H[r][j] * y[j] for j in range(k))
        q, rem = divmod(rest, H[r][k])
        if rem:
            raise DecorationError(f"no integer solution (row {r}: {rest}/{H[r][k]} is fractional)")
        y[k] = q
    x = [sum(U[i][j] * y[j] for j in range(n)) for i in range(n)]
    for row, bi in zip(A, b):
        if sum(a * v for a, v in zip(row, x)) != bi:
            raise DecorationError("inconsistent integer system")
    kernel = [[U[i][j] for i in range(n)] for j in range(len(pivots), n)]
    return x, kernel


def closest_in_coset(x, kernel, weights=None, radius: int = 2):
    """Minimal squared-norm point of x + span_Z(kernel), deterministic.

    Rounds the real least-squares projection and searches a box of the given
    radius around it; ties break lexicographically.
    """
    x = np.array(x, dtype=float)
    if not kernel:
        return [int(round(v)) for v in x]
    K = np.array(kernel, dtype=float).T
    coef, *_ = np.linalg.lstsq(K, -x, rcond=None)
    base = np.rint(coef).astype(int)
    best = None
    d = len(kernel)
    box = range(-radius, radius + 1) if d <= 4 else range(-1, 2)
    Ki = np.array(kernel, dtype=np.int64).T
    xi = np.rint(x).astype(np.int64)
    for delta in itertools.product(box, repeat=d):
        v = xi + Ki @ (base + np.array(delta, dtype=np.int64))
        key = (int(v @ v), tuple(int(t) for t in v))
        if best is None or key < best:
            best = key
    return list(best[1])


# -- flattenings -------------------------------------------------------------


@dataclass(frozen=True)
class FlatteningTriple:
    f0: int
    f1: int
    f2: int

    def __getitem__(self, j):
        return (self.f0, self.f1, self.f2)[j]

    def as_tuple(self):
        return (self.f0, self.f1, self.f2)


def log_branches(w: ModularTriple, f) -> tuple:
    return tuple(cmath.log(w[j]) + f[j] * 1j * math.pi for j in range(3))


def is_flattening_local(w: ModularTriple, f, tol: float = 1e-9) -> bool:
    return abs(sum(log_branches(w, f))) < tol


def permute_flattened(w: ModularTriple, f, perm) -> tuple:
    """Relabel the vertices of a flattened tetrahedron by ``perm`` (old vertex
    k becomes perm[k]).  Moduli go to the power eps(perm) and flattening
    integers are multiplied by eps(perm), edge by edge."""
    from .complex3 import local_edge
    from .idealizer import permutation_sign

    eps = permutation_sign(perm)
    inv = [0] * 4
    for k, v in enumerate(perm):
        inv[v] = k
    nf = [0] * 3
    for i, j in ((0, 1), (1, 2), (0, 2)):
        a, b = sorted((inv[i], inv[j]))
        old = EDGE_TYPE[local_edge(a, b)]
        nf[EDGE_TYPE[local_edge(i, j)]] = eps * int(f[old])
    a, b = sorted((inv[0], inv[1]))
    return ModularTriple.from_w0(w[EDGE_TYPE[local_edge(a, b)]] ** eps), FlatteningTriple(*nf)


def local_target(w: ModularTriple) -> int:
    """The integer f0 + f1 + f2 forced by the moduli (always odd)."""
    s = sum(cmath.log(w[j]) for j in range(3)) / (1j * math.pi)
    k = round(s.real)
    if abs(s - k) > 1e-6:
        raise DecorationError(f"log sum {s} of {w} is not an integer multiple of i pi")
    return -k


def _edge_log_targets(TI: ITriangulation) -> list:
    T = TI.base
    out = []
    for e in range(T.num_edges):
        s = 0j
        for t, le in T.edge_star(e):
            s += T.signs[t] * cmath.log(TI.modulus(t, le))
        k = s / (1j * math.pi)
        if abs(k.imag) > 1e-6 or abs(k.real - round(k.real)) > 1e-6:
            raise DecorationError(f"edge {e}: log sum {s} violates edge compatibility")
        # signed f sum must cancel the log sum
        out.append(-round(k.real))
    return out


def flattening_system(TI: ITriangulation):
    """(A, b): per-tet sums then per-edge signed sums, unknowns f[3t + j]."""
    T = TI.base
    n = T.num_tetrahedra
    A, b = [], []
    for t in range(n):
        row = [0] * (3 * n)
        row[3 * t: 3 * t + 3] = [1, 1, 1]
        A.append(row)
        b.append(local_target(TI.moduli[t]))
    targets = _edge_log_targets(TI)
    for e in range(T.num_edges):
        row = [0] * (3 * n)
        for t, le in T.edge_star(e):
            row[3 * t + EDGE_TYPE[le]] += T.signs[t]
        A.append(row)
        b.append(targets[e])
    return A, b


def edge_vectors(T: BranchedTriangulation, signed: bool = True) -> list:
    """One lattice vector per quotient edge: for each corner of the edge
    with type j, +1 on slot j+1 and -1 on slot j+2, times the tet sign when
    ``signed``.  Unsigned vectors preserve the signed flattening sums and
    signed vectors preserve the unsigned charge sums."""
    n = T.num_tetrahedra
    out = []
    for e in range(T.num_edges):
        v = [0] * (3 * n)
        for t, le in T.edge_star(e):
            j = EDGE_TYPE[le]
            s = T.signs[t] if signed else 1
            v[3 * t + (j + 1) % 3] += s
            v[3 * t + (j + 2) % 3] -= s
        out.append(v)
    return out


def _split(x) -> tuple:
    return tuple(FlatteningTriple(*x[3 * t: 3 * t + 3]) for t in range(len(x) // 3))


def _flat(F) -> list:
    return [v for f in F for v in f.as_tuple()]


def check_flattening(TI: ITriangulation, F) -> bool:
    A, b = flattening_system(TI)
    x = _flat(F)
    return len(x) == len(A[0]) and all(sum(a * v for a, v in zip(row, x)) == bi for row, bi in zip(A, b))


def solve_flattenings(TI: ITriangulation):
    """(base flattening, lattice basis indexed by edges)."""
    A, b = flattening_system(TI)
    try:
        x, _ = solve_integer(A, b)
    except DecorationError as exc:
        raise DecorationError(f"internal consistency failure: {exc}") from None
    basis = edge_vectors(TI.base, signed=False)
    for v in basis:
        if any(sum(a * t for a, t in zip(row, v)) for row in A):
            raise DecorationError("edge vector leaves the constraint kernel")
    return _split(x), basis


def shift(F, v, k: int = 1) -> tuple:
    return _split([a + k * b for a, b in zip(_flat(F), v)])


def _solve_new(A, b, fixed: dict, nvars: int, tie=None):
    """Solve for the unknowns not in ``fixed`` with a minimal-norm choice.
    ``tie`` lists groups of unknown slots forced equal."""
    free = [i for i in range(nvars) if i not in fixed]
    cols = {i: k for k, i in enumerate(free)}
    A2, b2 = [], []
    for row, bi in zip(A, b):
        A2.append([row[i] for i in free])
        b2.append(bi - sum(row[i] * v for i, v in fixed.items()))
    for a, c in tie or ():
        row = [0] * len(free)
        row[cols[a]] += 1
        row[cols[c]] -= 1
        A2.append(row)
        b2.append(0)
    if not free:
        if any(bi for bi in b2):
            raise DecorationError("restriction violates the constraints")
        return dict(fixed)
    x, ker = solve_integer(A2, b2)
    x = closest_in_coset(x, ker)
    out = dict(fixed)
    out.update({i: x[k] for i, k in cols.items()})
    return out


def _same_triple_ties(res: MoveResult):
    if res.kind in ("0-2", "bubble+"):
        P, Q = res.added
        return [(3 * P + j, 3 * Q + j) for j in range(3)]
    return []


def flattening_transit(TI: ITriangulation, F, mv: MoveDescriptor, res: MoveResult = None):
    """Return (new ITriangulation, new flattening, MoveResult)."""
    if res is None:
        res = apply_move_tracked(TI.base, mv)
    newTI = moduli_transit_from(TI, res, mv)
    A, b = flattening_system(newTI)
    fixed = {}
    for old, new in res.tet_map.items():
        for j in range(3):
            fixed[3 * new + j] = F[old][j]
    try:
        sol = _solve_new(A, b, fixed, 3 * newTI.base.num_tetrahedra, _same_triple_ties(res))
    except DecorationError as exc:
        raise DecorationError(f"{res.kind} flattening transit: {exc}") from None
    x = [sol[i] for i in range(3 * newTI.base.num_tetrahedra)]
    return newTI, _split(x), res


# -- charges -----------------------------------------------------------------


@dataclass(frozen=True)
class ChargeTriple:
    c0: int
    c1: int
    c2: int

    def __getitem__(self, j):
        return (self.c0, self.c1, self.c2)[j]

    def as_tuple(self):
        return (self.c0, self.c1, self.c2)


def is_charge_local(c) -> bool:
    return sum(c[j] for j in range(3)) == 1


def charge_system(T: BranchedTriangulation):
    if T.hamiltonian is None:
        raise DecorationError("charges need a Hamiltonian subcomplex")
    covered = {v for e in T.hamiltonian for v in T.edge_endpoints(e)}
    if covered != set(range(T.num_vertices)):
        raise DecorationError("Hamiltonian subcomplex misses a vertex")
    n = T.num_tetrahedra
    H = set(T.hamiltonian)
    A, b = [], []
    for t in range(n):
        row = [0] * (3 * n)
        row[3 * t: 3 * t + 3] = [1, 1, 1]
        A.append(row)
        b.append(1)
    for e in range(T.num_edges):
        row = [0] * (3 * n)
        for t, le in T.edge_star(e):
            row[3 * t + EDGE_TYPE[le]] += 1
        A.append(row)
        b.append(0 if e in H else 2)
    return A, b


def _csplit(x) -> tuple:
    return tuple(ChargeTriple(*x[3 * t: 3 * t + 3]) for t in range(len(x) // 3))


def check_charge(T: BranchedTriangulation, C) -> bool:
    A, b = charge_system(T)
    x = _flat(C)
    return len(x) == len(A[0]) and all(sum(a * v for a, v in zip(row, x)) == bi for row, bi in zip(A, b))


def solve_charges(T: BranchedTriangulation):
    A, b = charge_system(T)
    x, _ = solve_integer(A, b)
    basis = edge_vectors(T, signed=True)
    for v in basis:
        if any(sum(a * t for a, t in zip(row, v)) for row in A):
            raise DecorationError("charge edge vector leaves the constraint kernel")
    return _csplit(x), basis


def charge_shift(C, v, k: int = 1) -> tuple:
    return _csplit([a + k * b for a, b in zip(_flat(C), v)])


def charge_transit(T: BranchedTriangulation, C, mv: MoveDescriptor, res: MoveResult = None):
    """Return (new triangulation, new charge, MoveResult)."""
    if res is None:
        res = apply_move_tracked(T, mv)
    newT = res.triangulation
    A, b = charge_system(newT)
    fixed = {}
    for old, new in res.tet_map.items():
        for j in range(3):
            fixed[3 * new + j] = C[old][j]
    try:
        sol = _solve_new(A, b, fixed, 3 * newT.num_tetrahedra)
    except DecorationError as exc:
        raise DecorationError(f"{res.kind} charge transit: {exc}") from None
    return newT, _csplit([sol[i] for i in range(3 * newT.num_tetrahedra)]), res
