"""The numbered acceptance criteria, one test each.

Every test reports a single PASS/FAIL line (collected again at the end of the
run) and then asserts.
"""

import cmath
import itertools
import math
import time

import numpy as np
import pytest

from _support import (charged_pentagon_sides, det_tensor, face_reindex, permuted_charge, random_charge,
                      random_script)
from qhi.cli import Bundle, initial_state, transit_step
from qhi.complex3 import MoveDescriptor, apply_move, apply_move_tracked, builtin, candidate_moves, reverse_orientation
from qhi.decorations import (charge_shift, check_charge, check_flattening, flattening_transit, permute_flattened, shift,
                             solve_charges, solve_flattenings)
from qhi.dilog import PI2_6, bloch_wigner, lifted_rogers, rogers_l, CoverPoint
from qhi.idealizer import (ModularTriple, check_edge_compatibility, cocycle_transit_from, conjugate_cocycle,
                           idealize, is_geometric, moduli_transit_from, perturb_to_idealizable,
                           permutation_sign)
from qhi.qdilog import (CurvePoint, CyclicParams, apply_legs, asymptotic_ratio, phase_equal, phase_factor,
                        r_matrix, rr_bar, symmetry_legs)
from qhi.rogers import rogers_sum
from qhi.statesum import (INDEX_FACES, consistent_roots, contract_brute, contract_planned, h_invariant, network_tensors,
                          plan_contraction)

pytestmark = pytest.mark.acceptance

S3 = "boundary_4_simplex"
UNKNOT = "boundary_4_simplex_with_unknot"


def _mod_dist(a, b, modulus=PI2_6):
    """Distance of a - b from the lattice modulus * Z (complex part included)."""
    d = complex(a) - complex(b)
    k = round(d.real / modulus)
    return abs(complex(d.real - k * modulus, d.imag))


def _random_point(rng):
    return complex(*rng.normal(size=2)) * rng.choice([0.3, 1.0, 3.0])


# -- 1 ---------------------------------------------------------------------------


def test_c01_dilog_identities(record):
    rng = np.random.default_rng(1)
    t0 = time.perf_counter()
    sym = five = schaeffer = 0.0
    for _ in range(1000):
        w = ModularTriple.from_w0(_random_point(rng))
        d = bloch_wigner(w.w0)
        vals = [bloch_wigner(w.w1), bloch_wigner(w.w2), -bloch_wigner(1 / w.w0), -bloch_wigner(1 / w.w1),
                -bloch_wigner(1 / w.w2)]
        sym = max(sym, max(abs(v - d) for v in vals))
    for _ in range(1000):
        x, y = _random_point(rng), _random_point(rng)
        lhs = bloch_wigner(y) + bloch_wigner((1 - 1 / x) / (1 - 1 / y))
        rhs = bloch_wigner(x) + bloch_wigner(y / x) + bloch_wigner((1 - x) / (1 - y))
        five = max(five, abs(lhs - rhs))
    for _ in range(1000):
        x, y = sorted(rng.uniform(1e-3, 1 - 1e-3, size=2), reverse=True)
        s = (rogers_l(x) - rogers_l(y) + rogers_l(y / x) - rogers_l((1 - 1 / x) / (1 - 1 / y))
             + rogers_l((1 - x) / (1 - y)))
        schaeffer = max(schaeffer, abs(s))
    dt = time.perf_counter() - t0
    worst = max(sym, five, schaeffer)
    ok = worst < 1e-10 and dt < 10
    record(1, ok, f"six-fold {sym:.1e}, D2 five-term {five:.1e}, Schaeffer {schaeffer:.1e}, {dt:.2f}s")
    assert ok


# -- 2 ---------------------------------------------------------------------------


def test_c02_flattened_five_term(record):
    rng = np.random.default_rng(2)
    worst, count, kinds = 0.0, 0, set()
    for trial in range(200):
        T = builtin(S3 if trial % 2 == 0 else UNKNOT)
        z = perturb_to_idealizable(T, seed=trial)
        TI = idealize(T, z)
        F, basis = solve_flattenings(TI)
        for v in basis:
            F = shift(F, v, int(rng.integers(-2, 3)))
        kind = "2-3" if trial % 4 else "3-2"
        if kind == "3-2":
            # come back down from a 2-3 at a random face
            face = int(rng.integers(len(T.pairings)))
            TI, F, res = flattening_transit(TI, F, MoveDescriptor("2-3", face))
            T = TI.base
            mv = MoveDescriptor("3-2", next(e for e, o in res.edge_origin.items() if o is None))
        else:
            mv = MoveDescriptor("2-3", int(rng.integers(len(T.pairings))))
        R0 = rogers_sum(TI, F)
        TI2, F2, _ = flattening_transit(TI, F, mv)
        R1 = rogers_sum(TI2, F2)
        worst = max(worst, _mod_dist(R0.value, R1.value))
        count += 1
        kinds.add(mv.kind)
    ok = worst < 1e-8 and count == 200
    record(2, ok, f"{count} transits {sorted(kinds)}, worst mod pi^2/6 distance {worst:.1e}")
    assert ok


# -- 3 ---------------------------------------------------------------------------


def test_c03_flattened_tetrahedral_symmetry(record):
    rng = np.random.default_rng(3)

    def R(w, f):
        return lifted_rogers(CoverPoint(w.w0, int(f[0]), int(f[1])))

    def violations(w, f):
        bad = 0
        for p in itertools.permutations(range(4)):
            eps = permutation_sign(p)
            w2, f2 = permute_flattened(w, f, p)
            bad += _mod_dist(R(w2, f2), eps * R(w, f)) > 1e-8
        return bad

    worst_bad, sharp = 0, 0
    for _ in range(100):
        w = ModularTriple.from_w0(_random_point(rng))
        target = -round((sum(cmath.log(w[j]) for j in range(3)) / (1j * math.pi)).real)
        f0, f1 = (int(v) for v in rng.integers(-3, 4, size=2))
        worst_bad = max(worst_bad, violations(w, (f0, f1, target - f0 - f1)))
        off = int(rng.choice([-2, -1, 1, 2]))
        sharp += violations(w, (f0, f1, target - f0 - f1 + off)) > 0
    ok = worst_bad == 0 and sharp == 100
    record(3, ok, f"flattened violations {worst_bad}, non-flattened triples caught {sharp}/100")
    assert ok


# -- 4, 7, 8 share the S^3 idealizations ----------------------------------------------

_IDEALIZATIONS = []


def test_c04_s3_golden(record):
    T = builtin(S3)
    t0 = time.perf_counter()
    worst_mod = worst_im = 0.0
    for seed in range(20):
        TI = idealize(T, perturb_to_idealizable(T, seed=seed))
        _IDEALIZATIONS.append(TI)
        F, _ = solve_flattenings(TI)
        R = rogers_sum(TI, F).value
        worst_mod = max(worst_mod, _mod_dist(R.real, 0))
        worst_im = max(worst_im, abs(R.imag))
    dt = time.perf_counter() - t0
    ok = worst_mod < 1e-8 and worst_im < 1e-8 and dt < 5
    record(4, ok, f"max distance to pi^2/6 Z {worst_mod:.1e}, max |Im| {worst_im:.1e}, {dt:.2f}s")
    assert ok


def test_c05_transit_invariance(record):
    T = builtin(S3)
    worst_mod = worst_im = 0.0
    steps = 0
    for seed in range(4):
        rng = np.random.default_rng(100 + seed)
        moves = random_script(T, 6 + seed, rng)
        st = initial_state(Bundle(T, perturb_to_idealizable(T, seed=seed)))
        values = [rogers_sum(st.TI, st.F).value]
        _IDEALIZATIONS.append(st.TI)
        for mv in moves:
            st = transit_step(st, mv, rng)
            _IDEALIZATIONS.append(st.TI)
            values.append(rogers_sum(st.TI, st.F).value)
            steps += 1
        for a, b in itertools.combinations(values, 2):
            worst_mod = max(worst_mod, _mod_dist(a.real, b.real))
            worst_im = max(worst_im, abs(a.imag - b.imag))
    ok = worst_mod < 1e-8 and worst_im < 1e-8
    record(5, ok, f"{steps} moves, worst pairwise mod distance {worst_mod:.1e}, Im {worst_im:.1e}")
    assert ok


# -- 6 ---------------------------------------------------------------------------


def test_c06_flattening_independence(record):
    rng = np.random.default_rng(6)
    worst = 0.0
    for name in (S3, UNKNOT):
        T = builtin(name)
        TI = idealize(T, perturb_to_idealizable(T, seed=6))
        F, basis = solve_flattenings(TI)
        R0 = rogers_sum(TI, F).value
        for _ in range(10):
            G = F
            for v in basis:
                G = shift(G, v, int(rng.integers(-3, 4)))
            worst = max(worst, _mod_dist(rogers_sum(TI, G).value, R0))
    ok = worst < 1e-8
    record(6, ok, f"20 lattice perturbations, worst distance {worst:.1e}")
    assert ok


def _idealizations():
    if not _IDEALIZATIONS:
        T = builtin(S3)
        _IDEALIZATIONS.extend(idealize(T, perturb_to_idealizable(T, seed=s)) for s in range(20))
    return _IDEALIZATIONS


def test_c07_edge_compatibility(record):
    worst = max(check_edge_compatibility(TI).max_deviation for TI in _idealizations())
    ok = worst < 1e-9
    record(7, ok, f"{len(_idealizations())} idealizations, max |prod w^* - 1| = {worst:.1e}")
    assert ok


def test_c08_non_geometric_present(record):
    counts = [sum(not is_geometric(w, s) for w, s in zip(TI.moduli, TI.base.signs)) for TI in _idealizations()]
    ok = min(counts) >= 1
    record(8, ok, f"non-geometric tetrahedra per idealization: min {min(counts)}, max {max(counts)}")
    assert ok


# -- 9 ---------------------------------------------------------------------------


def test_c09_d_and_i_transits_commute(record):
    rng = np.random.default_rng(9)
    worst = 0.0
    for trial in range(100):
        T = builtin(S3 if trial % 2 == 0 else UNKNOT)
        z = perturb_to_idealizable(T, seed=1000 + trial)
        TI = idealize(T, z)
        res = apply_move_tracked(T, MoveDescriptor("2-3", int(rng.integers(len(T.pairings)))))
        T2, z2, _ = cocycle_transit_from(T, z, res)
        via_d = idealize(T2, z2)
        via_i = moduli_transit_from(TI, res)
        worst = max(worst, max(abs(a.w0 - b.w0) for a, b in zip(via_d.moduli, via_i.moduli)))
    ok = worst < 1e-8
    record(9, ok, f"100 transits, max modulus difference {worst:.1e}")
    assert ok


# -- 10 --------------------------------------------------------------------------


def test_c10_quantum_inverse(record):
    rng = np.random.default_rng(10)
    worst = 0.0
    for N in (3, 5, 7):
        P = CyclicParams(N)
        eye = np.einsum("ac,bd->abcd", np.eye(N), np.eye(N))
        for _ in range(50):
            p0, p1, p2 = ModularTriple.from_w0(_random_point(rng)).p_vector()
            r = [cmath.exp(cmath.log(complex(v)) / N) for v in (p0, p1, p2)]
            cp = CurvePoint(r[1], r[0], -r[2])
            M = rr_bar(r_matrix(cp, P), r_matrix(cp, P, inverse=True))
            worst = max(worst, float(np.abs(M - eye).max()))
    ok = worst < 1e-10
    record(10, ok, f"150 triples, max |R Rbar - id| = {worst:.1e}")
    assert ok


# -- 11 --------------------------------------------------------------------------


def test_c11_charged_pentagon(record):
    t0 = time.perf_counter()
    failures, total = 0, 0
    for N in (3, 5):
        for seed in range(50):
            P, X, Y = charged_pentagon_sides(N, seed)
            assert np.abs(X).max() > 0
            failures += phase_factor(X, Y, P, 1e-8) is None
            total += 1
    dt = time.perf_counter() - t0
    ok = failures == 0 and dt < 60
    record(11, ok, f"{total - failures}/{total} transits agree up to (+-zeta)^k, {dt:.2f}s")
    assert ok


# -- 12 --------------------------------------------------------------------------


def test_c12_tetrahedral_symmetry(record):
    rng = np.random.default_rng(12)
    failures = total = 0
    transpositions = {(0, 1): (1, 0, 2, 3), (1, 2): (0, 2, 1, 3), (2, 3): (0, 1, 3, 2)}
    for N in (3, 5):
        P = CyclicParams(N)
        for _ in range(50):
            v = [rng.normal(size=2) + 1j * rng.normal(size=2) for _ in range(4)]
            star = int(rng.choice([-1, 1]))
            c = random_charge(rng, 3)
            A = det_tensor(v, star, c, P)
            for key, perm in transpositions.items():
                B = face_reindex(det_tensor(v, -star, permuted_charge(c, perm), P, perm), perm)
                failures += phase_factor(B, apply_legs(A, symmetry_legs(key, star, P)), P, 1e-8) is None
                total += 1
    ok = failures == 0
    record(12, ok, f"{total - failures}/{total} conjugation identities hold up to (+-zeta)^Z")
    assert ok


# -- 13 --------------------------------------------------------------------------


def test_c13_h_invariance(record):
    t0 = time.perf_counter()
    P = CyclicParams(3)
    T = builtin(UNKNOT)
    rng = np.random.default_rng(13)
    st = initial_state(Bundle(T, perturb_to_idealizable(T, seed=0)))
    h0 = h_invariant(st.T, st.z, st.C, P, TI=st.TI).value
    values = [h0]
    # a charged transit script visiting several triangulations
    for mv in random_script(T, 6, np.random.default_rng(0)):
        st = transit_step(st, mv, rng)
        values.append(h_invariant(st.T, st.z, st.C, P, TI=st.TI).value)
    shapes = 1 + 6
    # charge-lattice moves on the final triangulation
    _, basis = solve_charges(st.T)
    C = st.C
    for _ in range(5):
        C = charge_shift(C, basis[int(rng.integers(len(basis)))], int(rng.choice([-2, -1, 1, 2])))
        assert check_charge(st.T, C)
        values.append(h_invariant(st.T, st.z, C, P, TI=st.TI).value)
    dt = time.perf_counter() - t0
    phase_ok = all(phase_equal(h, h0, P, 1e-8) for h in values)
    mod_dev = max(abs(abs(h) - abs(h0)) for h in values)
    ok = phase_ok and mod_dev < 1e-8 and dt < 120
    record(13, ok, f"{shapes} triangulations + 5 charge moves, |H_3| = {abs(h0):.6f}, "
                   f"max modulus deviation {mod_dev:.1e}, {dt:.1f}s")
    assert ok


# -- 14 --------------------------------------------------------------------------


def test_c14_orientation_reversal(record):
    P = CyclicParams(3)
    T = builtin(UNKNOT)
    worst_r, h_ok = 0.0, True
    for seed in range(5):
        z = perturb_to_idealizable(T, seed=seed)
        TI = idealize(T, z)
        Tr, zr = reverse_orientation(T), conjugate_cocycle(z)
        TIr = idealize(Tr, zr)
        R = rogers_sum(TI, solve_flattenings(TI)[0]).value
        Rr = rogers_sum(TIr, solve_flattenings(TIr)[0]).value
        worst_r = max(worst_r, _mod_dist(Rr, -R.conjugate()))
        C, _ = solve_charges(T)
        h = h_invariant(T, z, C, P, TI=TI).value
        hr = h_invariant(Tr, zr, C, P, TI=TIr).value
        h_ok &= phase_equal(hr, h.conjugate(), P, 1e-8)
    ok = worst_r < 1e-8 and h_ok
    record(14, ok, f"R distance {worst_r:.1e}, H_N conjugate up to phase: {h_ok}")
    assert ok


# -- 15 --------------------------------------------------------------------------


def test_c15_contraction_oracle(record):
    rng = np.random.default_rng(15)
    worst, smallest = 0.0, math.inf
    sizes = []
    for trial in range(20):
        T = builtin(S3 if trial % 2 else UNKNOT)
        for _ in range(int(rng.integers(0, 4))):
            cands = [m for m in candidate_moves(T, ("2-3", "3-2"))
                     if T.num_tetrahedra < 6 or m.kind == "3-2"]
            T = apply_move(T, cands[int(rng.integers(len(cands)))])
        N = 3 if trial < 10 else 5
        P = CyclicParams(N)
        z = perturb_to_idealizable(T, seed=trial)
        TI = idealize(T, z)
        C = None
        if T.hamiltonian is not None:
            # a global charge: arbitrary local triples make the sum cancel to rounding noise
            C, basis = solve_charges(T)
            for v in basis:
                C = charge_shift(C, v, int(rng.integers(-2, 3)))
        tensors = network_tensors(TI, P, C, consistent_roots(T, z, P, TI))
        arcs = [tuple(T.face_id[(t, f)] for f in INDEX_FACES) for t in range(T.num_tetrahedra)]
        a = contract_planned(tensors, arcs, plan_contraction(arcs, N))
        b = contract_brute(tensors, arcs, len(T.pairings), N)
        worst = max(worst, abs(a - b) / abs(b))
        smallest = min(smallest, abs(b))
        sizes.append(T.num_tetrahedra)
    ok = worst < 1e-10 and max(sizes) <= 6 and smallest > 1e-6
    record(15, ok, f"20 complexes of {min(sizes)}-{max(sizes)} tetrahedra, worst relative error {worst:.1e}, "
                   f"smallest |value| {smallest:.2e}")
    assert ok


# -- 16 --------------------------------------------------------------------------


@pytest.mark.xfail(strict=True, reason="the stated large-N approximation does not converge for this family; "
                                       "|ratio| grows like 2^(N/2)")
def test_c16_asymptotic_ratio(record):
    x, z = 1.0, 2.0
    errs = []
    for N in (51, 101, 201):
        y = (z ** N - x ** N) ** (1.0 / N)
        errs.append(abs(asymptotic_ratio(CurvePoint(x, y, z), 0, CyclicParams(N)) - 1))
    ok = errs[0] > errs[1] > errs[2] and errs[2] < 0.1
    record(16, ok, "|ratio - 1| at N = 51, 101, 201: " + ", ".join(f"{e:.2e}" for e in errs))
    assert ok


# -- 17 --------------------------------------------------------------------------


def test_c17_exact_solvers(record):
    rng = np.random.default_rng(17)
    checked, card_ok = 0, True
    for name in (S3, UNKNOT):
        T = builtin(name)
        for seed in range(3):
            TI = idealize(T, perturb_to_idealizable(T, seed=seed))
            F, fb = solve_flattenings(TI)
            card_ok &= len(fb) == T.num_edges
            assert check_flattening(TI, F)
            for v in fb:
                assert check_flattening(TI, shift(F, v, int(rng.integers(-3, 4)) or 1))
                checked += 1
        if T.hamiltonian is not None:
            C, cb = solve_charges(T)
            card_ok &= len(cb) == T.num_edges
            assert check_charge(T, C)
            for v in cb:
                assert check_charge(T, charge_shift(C, v, 1))
                checked += 1
    ok = card_ok
    record(17, ok, f"{checked} shifted decorations satisfy their constraints exactly; "
                   f"basis size = edge count: {card_ok}")
    assert ok
