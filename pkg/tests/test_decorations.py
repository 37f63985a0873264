import cmath
import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qhi.complex3 import LOCAL_EDGES, MoveDescriptor, builtin, candidate_moves
from qhi.decorations import (DecorationError, charge_shift, charge_transit, check_charge, check_flattening,
                             closest_in_coset, column_hermite, flattening_transit, is_charge_local,
                             is_flattening_local, local_target, log_branches, shift, solve_charges,
                             solve_flattenings, solve_integer)
from qhi.idealizer import EDGE_TYPE, ModularTriple, idealize, perturb_to_idealizable

S3 = builtin("boundary_4_simplex")
UNKNOT = builtin("boundary_4_simplex_with_unknot")


@pytest.fixture(scope="module")
def ti():
    return idealize(S3, perturb_to_idealizable(S3, seed=0))


def test_local_flattening_examples():
    w = ModularTriple.from_w0(1j)
    assert is_flattening_local(w, (-1, 0, 0))
    assert not is_flattening_local(w, (0, 0, 0))
    assert local_target(w) == -1


@settings(max_examples=200, deadline=None)
@given(st.complex_numbers(max_magnitude=100, allow_nan=False, allow_infinity=False).filter(
    lambda z: abs(z.imag) > 1e-6 and abs(z) > 1e-6))
def test_local_target_is_odd(z):
    w = ModularTriple.from_w0(z)
    k = local_target(w)
    assert k % 2 == 1
    assert is_flattening_local(w, (k, 0, 0))


def _edge_log_sums(TI, F):
    T = TI.base
    sums = [0j] * T.num_edges
    for t in range(T.num_tetrahedra):
        lb = log_branches(TI.moduli[t], F[t])
        for le in range(6):
            sums[T.tet_edge(t, *LOCAL_EDGES[le])] += T.signs[t] * lb[EDGE_TYPE[le]]
    return sums


def test_solve_flattenings(ti):
    F, basis = solve_flattenings(ti)
    assert check_flattening(ti, F)
    assert len(basis) == 10
    assert max(abs(s) for s in _edge_log_sums(ti, F)) < 1e-9
    for t in range(5):
        assert is_flattening_local(ti.moduli[t], F[t])
    for v in basis:
        G = shift(F, v)
        assert check_flattening(ti, G)
        assert max(abs(s) for s in _edge_log_sums(ti, G)) < 1e-9


def test_flattening_transit_2_3(ti):
    F, _ = solve_flattenings(ti)
    for face in range(len(S3.pairings)):
        TI2, F2, res = flattening_transit(ti, F, MoveDescriptor("2-3", face))
        assert check_flattening(TI2, F2)
        for old, new in res.tet_map.items():
            assert F2[new] == F[old]


def test_flattening_transit_negative_is_restriction(ti):
    F, _ = solve_flattenings(ti)
    TI2, F2, res = flattening_transit(ti, F, MoveDescriptor("2-3", 0))
    (e,) = [e for e, o in res.edge_origin.items() if o is None]
    TI3, F3, res3 = flattening_transit(TI2, F2, MoveDescriptor("3-2", e))
    assert check_flattening(TI3, F3)
    for old, new in res3.tet_map.items():
        assert F3[new] == F2[old]


def test_zero_two_gives_identical_triples(ti):
    F, _ = solve_flattenings(ti)
    mv = candidate_moves(S3, ("0-2",))[0]
    TI2, F2, res = flattening_transit(ti, F, mv)
    a, b = res.added
    assert F2[a] == F2[b]
    assert check_flattening(TI2, F2)


def test_charge_examples():
    assert is_charge_local((1, 0, 0))
    assert is_charge_local((2, 0, -1))
    assert not is_charge_local((1, 1, 0))


def test_solve_charges():
    C, basis = solve_charges(UNKNOT)
    assert check_charge(UNKNOT, C)
    assert all(is_charge_local(c) for c in C)
    assert len(basis) == UNKNOT.num_edges
    for v in basis:
        assert check_charge(UNKNOT, charge_shift(C, v, -3))
    # unsigned edge sums: 0 on the knot, 2 elsewhere
    sums = [0] * UNKNOT.num_edges
    for t in range(5):
        for le in range(6):
            sums[UNKNOT.tet_edge(t, *LOCAL_EDGES[le])] += C[t][EDGE_TYPE[le]]
    assert [sums[e] for e in UNKNOT.hamiltonian] == [0] * 5
    assert all(s == 2 for e, s in enumerate(sums) if e not in UNKNOT.hamiltonian)


def test_charges_need_spanning_hamiltonian():
    with pytest.raises(DecorationError):
        solve_charges(S3)
    with pytest.raises(DecorationError):
        solve_charges(replace(UNKNOT, hamiltonian=UNKNOT.hamiltonian[:1]))


def test_charge_transit_2_3():
    C, _ = solve_charges(UNKNOT)
    for face in range(len(UNKNOT.pairings)):
        T2, C2, res = charge_transit(UNKNOT, C, MoveDescriptor("2-3", face))
        assert check_charge(T2, C2)
        (e,) = [e for e, o in res.edge_origin.items() if o is None]
        s = sum(C2[t][EDGE_TYPE[le]] for t, le in T2.edge_star(e))
        assert s == (0 if e in T2.hamiltonian else 2)
        for old, new in res.tet_map.items():
            assert C2[new] == C[old]


def test_charge_transit_3_2_restricts():
    C, _ = solve_charges(UNKNOT)
    T2, C2, res = charge_transit(UNKNOT, C, MoveDescriptor("2-3", 1))
    (e,) = [e for e, o in res.edge_origin.items() if o is None]
    T3, C3, res3 = charge_transit(T2, C2, MoveDescriptor("3-2", e))
    assert check_charge(T3, C3)
    for old, new in res3.tet_map.items():
        assert C3[new] == C2[old]


def test_solve_integer_rejects_fractional():
    with pytest.raises(DecorationError):
        solve_integer([[2, 4]], [3])


def test_closest_in_coset_minimal():
    x = closest_in_coset([5, -5], [[1, -1]])
    assert x == [0, 0]


small = st.integers(-4, 4)


@settings(max_examples=150, deadline=None)
@given(st.integers(1, 4), st.integers(1, 6), st.data())
def test_solve_integer_property(m, n, data):
    A = [data.draw(st.lists(small, min_size=n, max_size=n)) for _ in range(m)]
    x0 = data.draw(st.lists(small, min_size=n, max_size=n))
    b = [sum(a * v for a, v in zip(row, x0)) for row in A]
    x, ker = solve_integer(A, b)
    An = np.array(A, dtype=np.int64)
    assert (An @ np.array(x) == np.array(b)).all()
    for v in ker:
        assert not (An @ np.array(v)).any()
    assert len(ker) == n - np.linalg.matrix_rank(An)
    # unimodular transform
    H, U, piv = column_hermite(A)
    assert round(abs(np.linalg.det(np.array(U, dtype=float)))) == 1
    assert (np.array(A) @ np.array(U) == np.array(H)).all() if A else True


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10 ** 6))
def test_flattenings_exist_for_random_idealizations(seed):
    rng = np.random.default_rng(seed)
    TI = idealize(UNKNOT, perturb_to_idealizable(UNKNOT, seed=seed))
    F, basis = solve_flattenings(TI)
    for v in basis:
        F = shift(F, v, int(rng.integers(-3, 4)))
    assert check_flattening(TI, F)
    s = sum(cmath.log(TI.moduli[0][j]) for j in range(3)) + 1j * math.pi * sum(F[0].as_tuple())
    assert abs(s) < 1e-9
